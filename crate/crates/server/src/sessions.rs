use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, RwLock, Weak};
use std::time::{Duration, Instant};

use fluidc_core::simulator::{ChangeEvent, SimConfig, SimError, Simulator, StateView};
use fluidc_core::Netlist;
use serde::Serialize;
use serde_json::{json, Value};
use tokio::sync::broadcast;

const CHANNEL_CAPACITY: usize = 1024;

/// One net change as sent to subscribers: `{"t":1.5,"net":"Output I","v":1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frame {
    pub t: f64,
    pub net: String,
    pub v: u8,
}

impl From<&ChangeEvent> for Frame {
    fn from(e: &ChangeEvent) -> Self {
        Frame {
            t: e.t,
            net: e.net.to_string(),
            v: e.new,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outbound {
    Frame(Frame),
    Closed { reason: String },
}

pub struct Session {
    pub id: String,
    pub created_at: Instant,
    pub autorun: bool,
    sim: Mutex<Simulator>,
    tx: broadcast::Sender<Outbound>,
    last_touched: Mutex<Instant>,
    subscribers: AtomicUsize,
}

impl Session {
    fn new(id: String, sim: Simulator, autorun: bool) -> Self {
        let (tx, _) = broadcast::channel(CHANNEL_CAPACITY);
        let now = Instant::now();
        Session {
            id,
            created_at: now,
            autorun,
            sim: Mutex::new(sim),
            tx,
            last_touched: Mutex::new(now),
            subscribers: AtomicUsize::new(0),
        }
    }

    pub fn touch(&self) {
        *self.last_touched.lock().unwrap() = Instant::now();
    }

    pub fn idle_for(&self) -> Duration {
        self.last_touched.lock().unwrap().elapsed()
    }

    pub fn subscriber_count(&self) -> usize {
        self.subscribers.load(Ordering::SeqCst)
    }

    /// Broadcasts while the simulator lock is held so every subscriber sees
    /// events in the order they were applied.
    fn publish(&self, events: &[ChangeEvent]) -> Vec<Frame> {
        let frames: Vec<Frame> = events.iter().map(Frame::from).collect();
        for f in &frames {
            let _ = self.tx.send(Outbound::Frame(f.clone()));
        }
        frames
    }

    pub fn state(&self) -> StateView {
        self.touch();
        self.sim.lock().unwrap().view()
    }

    pub fn set_input(&self, net: &str, v: u8) -> Result<StateView, SimError> {
        self.touch();
        let mut sim = self.sim.lock().unwrap();
        let events = sim.set_input(net, v)?;
        self.publish(&events);
        Ok(sim.view())
    }

    pub fn step(&self, dt: f64) -> Result<(StateView, Vec<Frame>), SimError> {
        self.touch();
        let mut sim = self.sim.lock().unwrap();
        let events = sim.step(dt)?;
        let frames = self.publish(&events);
        Ok((sim.view(), frames))
    }

    /// Autorun tick; does not count as client activity.
    fn tick(&self) -> Result<(), SimError> {
        let mut sim = self.sim.lock().unwrap();
        let dt = sim.config().dt;
        let events = sim.step(dt)?;
        self.publish(&events);
        Ok(())
    }

    /// Snapshot and receiver taken atomically, so no event is missed or
    /// repeated between them.
    pub fn subscribe(self: &Arc<Self>) -> (StateView, broadcast::Receiver<Outbound>, Subscription) {
        self.touch();
        let sim = self.sim.lock().unwrap();
        let rx = self.tx.subscribe();
        self.subscribers.fetch_add(1, Ordering::SeqCst);
        (sim.view(), rx, Subscription(self.clone()))
    }

    fn close(&self, reason: &str) {
        let _ = self.tx.send(Outbound::Closed {
            reason: reason.to_string(),
        });
    }

    pub fn summary(&self) -> Value {
        json!({"id": self.id, "state": self.state()})
    }
}

/// Decrements the subscriber count on drop.
pub struct Subscription(Arc<Session>);

impl Drop for Subscription {
    fn drop(&mut self) {
        self.0.subscribers.fetch_sub(1, Ordering::SeqCst);
    }
}

/// In-memory sessions with idle expiry.
pub struct SessionManager {
    sessions: RwLock<HashMap<String, Arc<Session>>>,
    ttl: Duration,
}

impl SessionManager {
    pub fn new(ttl: Duration) -> Self {
        SessionManager {
            sessions: RwLock::new(HashMap::new()),
            ttl,
        }
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    pub fn create(self: &Arc<Self>, netlist: &Netlist, config: SimConfig, autorun: bool) -> Result<Arc<Session>, SimError> {
        let sim = Simulator::new(netlist, config.clone())?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let session = Arc::new(Session::new(id.clone(), sim, autorun));
        self.sessions.write().unwrap().insert(id, session.clone());
        if autorun {
            spawn_autorun(Arc::downgrade(&session), Duration::from_secs_f64(config.dt));
        }
        Ok(session)
    }

    pub fn get(&self, id: &str) -> Option<Arc<Session>> {
        self.sessions.read().unwrap().get(id).cloned()
    }

    pub fn len(&self) -> usize {
        self.sessions.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drops sessions idle longer than the TTL; subscribers get a close
    /// notice. Sessions with live subscribers count as active.
    pub fn reap(&self) -> Vec<String> {
        let mut sessions = self.sessions.write().unwrap();
        let expired: Vec<String> = sessions
            .values()
            .filter(|s| s.subscriber_count() == 0 && s.idle_for() >= self.ttl)
            .map(|s| s.id.clone())
            .collect();
        for id in &expired {
            if let Some(s) = sessions.remove(id) {
                s.close("session expired");
            }
        }
        expired
    }

    /// Removes one session immediately, notifying subscribers.
    pub fn expire(&self, id: &str) -> bool {
        match self.sessions.write().unwrap().remove(id) {
            Some(s) => {
                s.close("session expired");
                true
            }
            None => false,
        }
    }
}

fn spawn_autorun(session: Weak<Session>, period: Duration) {
    tokio::spawn(async move {
        let mut interval = tokio::time::interval(period);
        interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
        loop {
            interval.tick().await;
            let Some(s) = session.upgrade() else { break };
            if let Err(e) = s.tick() {
                log::warn!("autorun stopped for session {}: {e}", s.id);
                break;
            }
        }
    });
}
