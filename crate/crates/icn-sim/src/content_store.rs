//! Fixed-capacity LRU cache of Data packets.

use std::collections::{BTreeMap, HashMap};

use crate::packet::DataPacket;

#[derive(Debug, Clone)]
pub struct ContentStore {
    capacity: usize,
    entries: HashMap<Vec<u8>, (DataPacket, u64)>,
    // recency stamp -> name; the first entry is least recently used
    recency: BTreeMap<u64, Vec<u8>>,
    clock: u64,
}

impl ContentStore {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            entries: HashMap::new(),
            recency: BTreeMap::new(),
            clock: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Presence check that does not count as a use.
    pub fn contains(&self, name: &[u8]) -> bool {
        self.entries.contains_key(name)
    }

    fn touch(&mut self, name: &[u8]) {
        self.clock += 1;
        if let Some((_, stamp)) = self.entries.get_mut(name) {
            self.recency.remove(stamp);
            *stamp = self.clock;
            self.recency.insert(self.clock, name.to_vec());
        }
    }

    pub fn lookup(&mut self, name: &[u8]) -> Option<DataPacket> {
        if !self.entries.contains_key(name) {
            return None;
        }
        self.touch(name);
        self.entries.get(name).map(|(d, _)| d.clone())
    }

    /// Inserts or refreshes `data`. Returns the evicted name when a new entry
    /// pushed out the least recently used one. A zero-capacity store keeps
    /// nothing.
    pub fn insert(&mut self, data: DataPacket) -> Option<Vec<u8>> {
        if self.capacity == 0 {
            return None;
        }
        if let Some(entry) = self.entries.get_mut(&data.name) {
            entry.0 = data.clone();
            self.touch(&data.name);
            return None;
        }
        let evicted = if self.entries.len() >= self.capacity {
            let (_, victim) = self.recency.pop_first().expect("full store has entries");
            self.entries.remove(&victim);
            Some(victim)
        } else {
            None
        };
        self.clock += 1;
        self.recency.insert(self.clock, data.name.clone());
        self.entries.insert(data.name.clone(), (data, self.clock));
        evicted
    }
}

pub fn content_store_insert(store: &mut ContentStore, data: DataPacket) -> Option<Vec<u8>> {
    store.insert(data)
}

pub fn content_store_lookup(store: &mut ContentStore, name: &[u8]) -> Option<DataPacket> {
    store.lookup(name)
}
