//! Byte-capacity LRU content store with per-entry expiry.

use std::collections::{BTreeMap, HashMap};

struct Entry {
    size: u64,
    stamp: u64,
    expires_at_ns: Option<u64>,
}

/// Least-recently-used cache keyed by chunk name, bounded in bytes.
/// Expired entries count as misses and are dropped on lookup.
pub struct LruCache {
    capacity_bytes: u64,
    used_bytes: u64,
    clock: u64,
    entries: HashMap<u64, Entry>,
    by_recency: BTreeMap<u64, u64>,
    pub hits: u64,
    pub misses: u64,
}

impl LruCache {
    pub fn new(capacity_bytes: u64) -> Self {
        LruCache {
            capacity_bytes,
            used_bytes: 0,
            clock: 0,
            entries: HashMap::new(),
            by_recency: BTreeMap::new(),
            hits: 0,
            misses: 0,
        }
    }

    pub fn used_bytes(&self) -> u64 {
        self.used_bytes
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Look a chunk up, bumping its recency on a hit.
    pub fn lookup(&mut self, key: u64, now_ns: u64) -> bool {
        let expired = match self.entries.get(&key) {
            None => {
                self.misses += 1;
                return false;
            }
            Some(entry) => entry.expires_at_ns.is_some_and(|at| now_ns >= at),
        };
        if expired {
            self.remove(key);
            self.misses += 1;
            return false;
        }
        self.clock += 1;
        let entry = self.entries.get_mut(&key).expect("checked above");
        self.by_recency.remove(&entry.stamp);
        entry.stamp = self.clock;
        self.by_recency.insert(self.clock, key);
        self.hits += 1;
        true
    }

    /// Insert or refresh a chunk, evicting strictly least-recently-used
    /// entries until it fits. Oversized objects are not cached.
    pub fn insert(&mut self, key: u64, size: u64, expires_at_ns: Option<u64>) {
        if size > self.capacity_bytes {
            return;
        }
        if self.entries.contains_key(&key) {
            self.remove(key);
        }
        while self.used_bytes + size > self.capacity_bytes {
            let (_, victim) = self
                .by_recency
                .iter()
                .next()
                .map(|(s, k)| (*s, *k))
                .expect("used_bytes > 0 implies an entry exists");
            self.remove(victim);
        }
        self.clock += 1;
        self.entries.insert(
            key,
            Entry {
                size,
                stamp: self.clock,
                expires_at_ns,
            },
        );
        self.by_recency.insert(self.clock, key);
        self.used_bytes += size;
    }

    fn remove(&mut self, key: u64) {
        if let Some(entry) = self.entries.remove(&key) {
            self.by_recency.remove(&entry.stamp);
            self.used_bytes -= entry.size;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Reference LRU: a plain recency-ordered vector, linear everything.
    struct NaiveLru {
        capacity: u64,
        items: Vec<(u64, u64, Option<u64>)>, // (key, size, expiry), most recent last
    }

    impl NaiveLru {
        fn lookup(&mut self, key: u64, now: u64) -> bool {
            if let Some(pos) = self.items.iter().position(|&(k, _, _)| k == key) {
                let item = self.items.remove(pos);
                if item.2.is_some_and(|at| now >= at) {
                    return false;
                }
                self.items.push(item);
                true
            } else {
                false
            }
        }

        fn insert(&mut self, key: u64, size: u64, expires: Option<u64>) {
            if size > self.capacity {
                return;
            }
            if let Some(pos) = self.items.iter().position(|&(k, _, _)| k == key) {
                self.items.remove(pos);
            }
            while self.items.iter().map(|&(_, s, _)| s).sum::<u64>() + size > self.capacity {
                self.items.remove(0);
            }
            self.items.push((key, size, expires));
        }
    }

    #[test]
    fn eviction_is_strictly_lru() {
        let mut cache = LruCache::new(3);
        cache.insert(1, 1, None);
        cache.insert(2, 1, None);
        cache.insert(3, 1, None);
        assert!(cache.lookup(1, 0)); // 1 becomes most recent
        cache.insert(4, 1, None); // evicts 2
        assert!(!cache.lookup(2, 0));
        assert!(cache.lookup(1, 0));
        assert!(cache.lookup(3, 0));
        assert!(cache.lookup(4, 0));
    }

    #[test]
    fn byte_capacity_is_respected() {
        let mut cache = LruCache::new(10);
        cache.insert(1, 6, None);
        cache.insert(2, 6, None); // evicts 1
        assert_eq!(cache.used_bytes(), 6);
        cache.insert(3, 4, None);
        assert_eq!(cache.used_bytes(), 10);
        assert!(!cache.lookup(1, 0));
        // An entry bigger than the whole cache is skipped.
        cache.insert(4, 11, None);
        assert!(!cache.lookup(4, 0));
    }

    #[test]
    fn expired_entries_miss_and_vanish() {
        let mut cache = LruCache::new(10);
        cache.insert(1, 1, Some(100));
        assert!(cache.lookup(1, 99));
        assert!(!cache.lookup(1, 100));
        assert_eq!(cache.len(), 0);
        assert_eq!(cache.used_bytes(), 0);
    }

    #[test]
    fn matches_reference_lru_on_random_trace() {
        let mut rng = crate::rng::substream(77, "lru-trace");
        let mut cache = LruCache::new(50);
        let mut reference = NaiveLru { capacity: 50, items: Vec::new() };
        for step in 0..20_000u64 {
            let key = rng.gen_range(0..40u64);
            let now = step;
            if rng.gen_bool(0.5) {
                let got = cache.lookup(key, now);
                let want = reference.lookup(key, now);
                assert_eq!(got, want, "lookup {key} at step {step}");
            } else {
                let size = rng.gen_range(1..=8u64);
                let expires = if rng.gen_bool(0.2) { Some(now + rng.gen_range(1..50)) } else { None };
                cache.insert(key, size, expires);
                reference.insert(key, size, expires);
            }
        }
    }
}
