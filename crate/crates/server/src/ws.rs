use std::sync::Arc;

use axum::extract::ws::{CloseFrame, Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::response::Response;
use futures::{SinkExt, StreamExt};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::broadcast::error::RecvError;

use crate::error::ApiError;
use crate::sessions::{Outbound, Session};
use crate::{AppState, CLOSE_SESSION_EXPIRED};

#[derive(Deserialize)]
struct Inbound {
    set: SetInput,
}

#[derive(Deserialize)]
struct SetInput {
    net: String,
    v: u8,
}

pub async fn upgrade(State(state): State<AppState>, Path(id): Path<String>, ws: WebSocketUpgrade) -> Result<Response, ApiError> {
    let session = state
        .sessions
        .get(&id)
        .ok_or_else(|| ApiError::not_found(format!("unknown session `{id}`")))?;
    let heartbeat = state.config.heartbeat;
    Ok(ws.on_upgrade(move |socket| stream(socket, session, heartbeat)))
}

fn text(v: Value) -> Message {
    Message::Text(v.to_string().into())
}

fn error_message(e: ApiError) -> Message {
    text(json!({"error": {"code": e.code, "message": e.message}}))
}

async fn stream(socket: WebSocket, session: Arc<Session>, heartbeat: std::time::Duration) {
    let (mut tx, mut rx) = socket.split();
    let (snapshot, mut events, _sub) = session.subscribe();
    if tx.send(text(json!({"snapshot": snapshot}))).await.is_err() {
        return;
    }
    let mut beat = tokio::time::interval_at(tokio::time::Instant::now() + heartbeat, heartbeat);
    loop {
        let out = tokio::select! {
            ev = events.recv() => match ev {
                Ok(Outbound::Frame(f)) => text(json!(f)),
                Ok(Outbound::Closed { reason }) => {
                    let _ = tx
                        .send(Message::Close(Some(CloseFrame {
                            code: CLOSE_SESSION_EXPIRED,
                            reason: reason.into(),
                        })))
                        .await;
                    return;
                }
                Err(RecvError::Lagged(_)) => text(json!({"snapshot": session.state()})),
                Err(RecvError::Closed) => return,
            },
            _ = beat.tick() => {
                session.touch();
                text(json!({"heartbeat": session.state().t}))
            }
            msg = rx.next() => match msg {
                Some(Ok(Message::Text(body))) => match serde_json::from_str::<Inbound>(body.as_str()) {
                    Ok(cmd) => match session.set_input(&cmd.set.net, cmd.set.v) {
                        Ok(_) => continue,
                        Err(e) => error_message(e.into()),
                    },
                    Err(e) => error_message(ApiError::bad_request(e.to_string())),
                },
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                Some(Ok(_)) => continue,
            },
        };
        if tx.send(out).await.is_err() {
            return;
        }
    }
}
