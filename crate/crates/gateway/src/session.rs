use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use agentguard_core::model::Message;

/// Per-session state. History only grows; calls within a session are
/// processed one at a time by holding the session lock.
#[derive(Debug, Clone, Default)]
pub struct SessionState {
    pub session_id: String,
    history: Vec<Message>,
    pub retry_counts: HashMap<String, u32>,
}

impl SessionState {
    pub fn new(session_id: impl Into<String>) -> Self {
        Self {
            session_id: session_id.into(),
            ..Self::default()
        }
    }

    pub fn history(&self) -> &[Message] {
        &self.history
    }

    pub fn append(&mut self, message: Message) {
        self.history.push(message);
    }
}

pub type SharedSession = Arc<tokio::sync::Mutex<SessionState>>;

struct Entry {
    state: SharedSession,
    last_seen: Instant,
}

/// Session table with idle eviction.
pub struct Sessions {
    table: Mutex<HashMap<String, Entry>>,
    idle: Duration,
}

impl Sessions {
    pub fn new(idle: Duration) -> Self {
        Self {
            table: Mutex::new(HashMap::new()),
            idle,
        }
    }

    /// Returns the session, creating it if needed, and evicts idle ones.
    pub fn get(&self, id: &str) -> SharedSession {
        let now = Instant::now();
        let mut table = self.table.lock().unwrap();
        table.retain(|k, e| k == id || now.duration_since(e.last_seen) < self.idle);
        let entry = table.entry(id.to_owned()).or_insert_with(|| Entry {
            state: Arc::new(tokio::sync::Mutex::new(SessionState::new(id))),
            last_seen: now,
        });
        entry.last_seen = now;
        entry.state.clone()
    }

    pub fn evict_idle(&self) -> usize {
        let now = Instant::now();
        let mut table = self.table.lock().unwrap();
        let before = table.len();
        table.retain(|_, e| now.duration_since(e.last_seen) < self.idle);
        before - table.len()
    }

    pub fn len(&self) -> usize {
        self.table.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A fresh session id, unique within the process.
pub fn new_session_id() -> String {
    static NEXT: AtomicU64 = AtomicU64::new(1);
    let n = NEXT.fetch_add(1, Ordering::Relaxed);
    let t = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_micros())
        .unwrap_or_default();
    format!("s{t:x}-{n}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn idle_sessions_evicted() {
        let s = Sessions::new(Duration::from_millis(20));
        s.get("a");
        std::thread::sleep(Duration::from_millis(40));
        s.get("b");
        assert_eq!(s.len(), 1);
        std::thread::sleep(Duration::from_millis(40));
        assert_eq!(s.evict_idle(), 1);
    }

    #[test]
    fn same_id_same_state() {
        let s = Sessions::new(Duration::from_secs(60));
        let a = s.get("x");
        a.try_lock().unwrap().append(Message::user("hi"));
        assert_eq!(s.get("x").try_lock().unwrap().history().len(), 1);
    }
}
