use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use intellichain_core::agent::CompletionBackend;
use intellichain_core::DialogueSession;
use tokio::sync::Mutex;

/// One live session and the backend instance that serves it.
pub struct Slot {
    pub session: DialogueSession,
    pub backend: Arc<dyn CompletionBackend>,
}

pub type SlotHandle = Arc<Mutex<Slot>>;

/// Id-keyed sessions. The map lock is held only for lookups and inserts;
/// each session has its own mutex so that writes to one session never
/// block another.
#[derive(Default)]
pub struct SessionStore {
    slots: RwLock<HashMap<String, SlotHandle>>,
    next: AtomicU64,
}

impl SessionStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// A fresh id, never handed out before by this store.
    pub fn allocate_id(&self) -> String {
        format!("s{}", self.next.fetch_add(1, Ordering::Relaxed) + 1)
    }

    /// Keeps the id counter ahead of ids restored from a log.
    pub fn observe_id(&self, id: &str) {
        if let Some(n) = id.strip_prefix('s').and_then(|n| n.parse::<u64>().ok()) {
            self.next.fetch_max(n, Ordering::Relaxed);
        }
    }

    pub fn insert(&self, slot: Slot) {
        let id = slot.session.id.clone();
        self.slots
            .write()
            .expect("store lock poisoned")
            .insert(id, Arc::new(Mutex::new(slot)));
    }

    pub fn get(&self, id: &str) -> Option<SlotHandle> {
        self.slots.read().expect("store lock poisoned").get(id).cloned()
    }

    pub fn len(&self) -> usize {
        self.slots.read().expect("store lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
