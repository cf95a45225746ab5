//! HTTP and WebSocket front end for compiling, verifying, placing and
//! simulating fluidic circuits, plus project storage and the agent pipeline.

pub mod api;
mod error;
mod routes;
pub mod sessions;
mod ws;

use std::collections::HashSet;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use fluidc_agents::ProjectStore;

pub use error::{ApiError, ApiJson};
pub use routes::router;
pub use sessions::{Frame, SessionManager};

/// WebSocket close code sent when a session expires.
pub const CLOSE_SESSION_EXPIRED: u16 = 4000;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub projects_dir: PathBuf,
    pub session_ttl: Duration,
    pub heartbeat: Duration,
    pub reap_interval: Duration,
    /// Name of an env var holding a bearer token; requests must present it
    /// when the variable is set and non-empty.
    pub auth_token_env: Option<String>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            projects_dir: PathBuf::from("projects"),
            session_ttl: Duration::from_secs(30 * 60),
            heartbeat: Duration::from_secs(10),
            reap_interval: Duration::from_secs(30),
            auth_token_env: None,
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    pub sessions: Arc<SessionManager>,
    pub store: ProjectStore,
    pub config: Arc<ServerConfig>,
    running: Arc<Mutex<HashSet<String>>>,
}

impl AppState {
    pub fn new(config: ServerConfig) -> Self {
        AppState {
            sessions: Arc::new(SessionManager::new(config.session_ttl)),
            store: ProjectStore::new(&config.projects_dir),
            config: Arc::new(config),
            running: Arc::default(),
        }
    }

    /// Marks a project busy; false when a run is already active.
    fn claim(&self, project: &str) -> bool {
        self.running.lock().unwrap().insert(project.to_string())
    }

    fn release(&self, project: &str) {
        self.running.lock().unwrap().remove(project);
    }

    /// Background task expiring idle sessions.
    pub fn spawn_reaper(&self) -> tokio::task::JoinHandle<()> {
        let sessions = self.sessions.clone();
        let every = self.config.reap_interval;
        tokio::spawn(async move {
            let mut interval = tokio::time::interval(every);
            loop {
                interval.tick().await;
                for id in sessions.reap() {
                    log::info!("session {id} expired");
                }
            }
        })
    }
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, config: ServerConfig) -> std::io::Result<()> {
    let state = AppState::new(config);
    state.spawn_reaper();
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
