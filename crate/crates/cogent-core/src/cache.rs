//! Cache state: the entry slab, exact and donor-search indexes, byte
//! accounting, and the admit/lookup/evict surface driven by a replacement
//! policy.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::policy::{Policy, PolicyKind};
use crate::record::{key_prefix, Modality, ParamSet, RequestRecord};

/// A cached object plus the metadata policies, judgment, and redundancy
/// accounting need.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheEntry {
    pub key: String,
    pub params: ParamSet,
    /// Canonical serialization of `params`; the exact-match index key.
    pub canon_params: String,
    pub content_id: String,
    pub size: u64,
    pub modality: Modality,
    pub format: String,
    pub simhash: Option<u128>,
    pub insert_time: u64,
    pub last_access_time: u64,
    pub access_count: u64,
    /// Last observed origin fetch latency, for latency-aware policies.
    pub last_fetch_latency: u64,
    /// Insertion sequence number; the deterministic tie-breaker.
    pub(crate) seq: u64,
}

impl CacheEntry {
    pub fn from_record(rec: &RequestRecord, now: u64, fetch_latency: u64) -> CacheEntry {
        CacheEntry {
            key: rec.key.clone(),
            canon_params: rec.params.canonical(),
            params: rec.params.clone(),
            content_id: rec.content_id.clone(),
            size: rec.size,
            modality: rec.modality,
            format: rec.format.clone(),
            simhash: rec.simhash,
            insert_time: now,
            last_access_time: now,
            access_count: 1,
            last_fetch_latency: fetch_latency,
            seq: 0,
        }
    }

    pub fn key_prefix(&self) -> &str {
        key_prefix(&self.key)
    }

    /// Byte range of the object this entry holds: explicit `off`/`len`
    /// params, else the whole object `[0, size)`.
    pub fn byte_range(&self) -> (u64, u64) {
        let off = self.params.off().unwrap_or(0);
        let len = self.params.len_bytes().unwrap_or(self.size);
        (off, len)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AdmitError {
    #[error("object of {size} bytes exceeds cache capacity {capacity}")]
    TooLarge { size: u64, capacity: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("cache is empty")]
pub struct EmptyCacheError;

/// Multi-index over 128-bit similarity hashes: nine chunks per code, so any
/// two codes within Hamming distance 8 agree on at least one chunk. Probing
/// the chunk maps yields a small candidate set to rank exactly.
#[derive(Default)]
struct SimIndex {
    chunks: [BTreeMap<u16, BTreeSet<u32>>; 9],
}

const CHUNK_BITS: u32 = 14; // chunks 0..8 take 14 bits each, chunk 8 the last 16

#[inline]
fn sim_chunk(code: u128, i: usize) -> u16 {
    if i < 8 {
        ((code >> (i as u32 * CHUNK_BITS)) & 0x3fff) as u16
    } else {
        (code >> 112) as u16
    }
}

impl SimIndex {
    fn insert(&mut self, code: u128, idx: u32) {
        for i in 0..9 {
            self.chunks[i].entry(sim_chunk(code, i)).or_default().insert(idx);
        }
    }

    fn remove(&mut self, code: u128, idx: u32) {
        for i in 0..9 {
            let c = sim_chunk(code, i);
            if let Some(set) = self.chunks[i].get_mut(&c) {
                set.remove(&idx);
                if set.is_empty() {
                    self.chunks[i].remove(&c);
                }
            }
        }
    }

    fn candidates(&self, code: u128) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        for i in 0..9 {
            if let Some(set) = self.chunks[i].get(&sim_chunk(code, i)) {
                out.extend(set.iter().copied());
            }
        }
        out
    }
}

/// Byte-capacity cache with an exact `(key, canonical params)` index plus
/// the donor-search indexes (key, key prefix, content id, similarity hash).
pub struct CacheState {
    capacity: u64,
    used: u64,
    entries: Vec<Option<CacheEntry>>,
    free: Vec<u32>,
    by_key: BTreeMap<String, BTreeMap<String, u32>>,
    by_prefix: BTreeMap<String, BTreeSet<u32>>,
    by_content: BTreeMap<String, BTreeSet<u32>>,
    sim_index: SimIndex,
    live: Vec<u32>,
    live_pos: Vec<u32>,
    policy: Policy,
    next_seq: u64,
}

impl CacheState {
    pub fn new(capacity_bytes: u64, kind: PolicyKind) -> CacheState {
        CacheState {
            capacity: capacity_bytes,
            used: 0,
            entries: Vec::new(),
            free: Vec::new(),
            by_key: BTreeMap::new(),
            by_prefix: BTreeMap::new(),
            by_content: BTreeMap::new(),
            sim_index: SimIndex::default(),
            live: Vec::new(),
            live_pos: Vec::new(),
            policy: Policy::new(kind, capacity_bytes),
            next_seq: 0,
        }
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }

    pub fn get(&self, idx: u32) -> &CacheEntry {
        self.entries[idx as usize].as_ref().expect("vacant slab slot")
    }

    pub fn iter(&self) -> impl Iterator<Item = &CacheEntry> {
        self.live.iter().map(move |&i| self.get(i))
    }

    /// Exact-match probe without touching recency.
    pub fn peek_exact(&self, key: &str, canon_params: &str) -> Option<u32> {
        self.by_key.get(key)?.get(canon_params).copied()
    }

    /// Exact-match lookup; on hit, recency and frequency bookkeeping update
    /// per the active policy. On miss the state is unchanged.
    pub fn lookup(&mut self, key: &str, canon_params: &str, now: u64) -> Option<u32> {
        let idx = self.peek_exact(key, canon_params)?;
        self.touch(idx, now);
        Some(idx)
    }

    fn touch(&mut self, idx: u32, now: u64) {
        let e = self.entries[idx as usize].as_mut().unwrap();
        e.last_access_time = now;
        e.access_count += 1;
        self.policy.on_hit(idx, &self.entries);
    }

    /// Admits an entry, evicting per the active policy until it fits.
    /// Victims are returned in eviction order. Admitting an identity that is
    /// already resident refreshes it in place.
    pub fn admit(&mut self, mut entry: CacheEntry) -> Result<Vec<CacheEntry>, AdmitError> {
        if entry.size > self.capacity {
            return Err(AdmitError::TooLarge { size: entry.size, capacity: self.capacity });
        }
        let now = entry.insert_time;
        let mut evicted = Vec::new();
        if let Some(idx) = self.peek_exact(&entry.key, &entry.canon_params) {
            let old_size = self.get(idx).size;
            {
                let e = self.entries[idx as usize].as_mut().unwrap();
                e.size = entry.size;
                e.last_fetch_latency = entry.last_fetch_latency;
                e.last_access_time = now;
                e.access_count += 1;
            }
            self.used = self.used - old_size + entry.size;
            if old_size != entry.size {
                self.policy.on_resize(idx, old_size, entry.size);
            }
            self.policy.on_hit(idx, &self.entries);
            self.evict_until_fit(now, &mut evicted);
            return Ok(evicted);
        }
        self.policy.before_admit(&entry.key, &entry.canon_params, entry.size);
        self.used += entry.size;
        self.evict_until_fit(now, &mut evicted);
        self.next_seq += 1;
        entry.seq = self.next_seq;
        let idx = match self.free.pop() {
            Some(i) => {
                self.entries[i as usize] = Some(entry);
                i
            }
            None => {
                self.entries.push(Some(entry));
                (self.entries.len() - 1) as u32
            }
        };
        self.policy.ensure_slab(self.entries.len());
        if self.live_pos.len() < self.entries.len() {
            self.live_pos.resize(self.entries.len(), u32::MAX);
        }
        self.live_pos[idx as usize] = self.live.len() as u32;
        self.live.push(idx);
        self.index_insert(idx);
        self.policy.on_insert(idx, &self.entries);
        debug_assert!(self.used <= self.capacity);
        Ok(evicted)
    }

    fn evict_until_fit(&mut self, now: u64, evicted: &mut Vec<CacheEntry>) {
        while self.used > self.capacity {
            let victim = self
                .policy
                .victim(&self.entries, &self.live, now)
                .expect("over capacity but no victim available");
            evicted.push(self.remove(victim));
        }
    }

    /// The entry the active policy would evict next. Pure.
    pub fn next_victim(&self, now: u64) -> Result<&CacheEntry, EmptyCacheError> {
        let idx = self
            .policy
            .victim(&self.entries, &self.live, now)
            .ok_or(EmptyCacheError)?;
        Ok(self.get(idx))
    }

    fn remove(&mut self, idx: u32) -> CacheEntry {
        self.policy.on_evict(idx, &self.entries);
        self.index_remove(idx);
        let pos = self.live_pos[idx as usize];
        let last = *self.live.last().unwrap();
        self.live.swap_remove(pos as usize);
        if last != idx {
            self.live_pos[last as usize] = pos;
        }
        self.live_pos[idx as usize] = u32::MAX;
        let entry = self.entries[idx as usize].take().unwrap();
        self.used -= entry.size;
        self.free.push(idx);
        entry
    }

    fn index_insert(&mut self, idx: u32) {
        let (key, canon, prefix, cid, code) = {
            let e = self.get(idx);
            (
                e.key.clone(),
                e.canon_params.clone(),
                String::from(e.key_prefix()),
                e.content_id.clone(),
                e.simhash,
            )
        };
        self.by_key.entry(key).or_default().insert(canon, idx);
        self.by_prefix.entry(prefix).or_default().insert(idx);
        self.by_content.entry(cid).or_default().insert(idx);
        if let Some(code) = code {
            self.sim_index.insert(code, idx);
        }
    }

    fn index_remove(&mut self, idx: u32) {
        let e = self.entries[idx as usize].as_ref().unwrap();
        let key = e.key.clone();
        let canon = e.canon_params.clone();
        let prefix = String::from(e.key_prefix());
        let cid = e.content_id.clone();
        let code = e.simhash;
        if let Some(m) = self.by_key.get_mut(&key) {
            m.remove(&canon);
            if m.is_empty() {
                self.by_key.remove(&key);
            }
        }
        if let Some(s) = self.by_prefix.get_mut(&prefix) {
            s.remove(&idx);
            if s.is_empty() {
                self.by_prefix.remove(&prefix);
            }
        }
        if let Some(s) = self.by_content.get_mut(&cid) {
            s.remove(&idx);
            if s.is_empty() {
                self.by_content.remove(&cid);
            }
        }
        if let Some(code) = code {
            self.sim_index.remove(code, idx);
        }
    }

    /// All resident entries under `key`, across parameter variants.
    pub fn entries_with_key<'a>(&'a self, key: &str) -> impl Iterator<Item = u32> + 'a {
        self.by_key
            .get(key)
            .into_iter()
            .flat_map(|m| m.values().copied())
    }

    pub fn entries_with_prefix<'a>(&'a self, prefix: &str) -> impl Iterator<Item = u32> + 'a {
        self.by_prefix
            .get(prefix)
            .into_iter()
            .flat_map(|s| s.iter().copied())
    }

    pub fn entries_with_content<'a>(&'a self, content_id: &str) -> impl Iterator<Item = u32> + 'a {
        self.by_content
            .get(content_id)
            .into_iter()
            .flat_map(|s| s.iter().copied())
    }

    /// Minimum-Hamming resident code within `threshold` bits of `code`,
    /// skipping entries of `exclude_content_id`. Ties break toward the most
    /// recently accessed donor, then the newest insertion.
    pub fn nearest_simhash(
        &self,
        code: u128,
        threshold: u32,
        exclude_content_id: &str,
    ) -> Option<(u32, u32)> {
        let mut best: Option<(u32, u64, u64, u32)> = None; // (dist, last_access, seq, idx)
        for idx in self.sim_index.candidates(code) {
            let e = self.get(idx);
            if e.content_id == exclude_content_id {
                continue;
            }
            let d = crate::record::hamming(code, e.simhash.unwrap());
            if d > threshold {
                continue;
            }
            let better = match &best {
                None => true,
                Some((bd, bla, bseq, _)) => {
                    (d, core::cmp::Reverse(e.last_access_time), core::cmp::Reverse(e.seq))
                        < (*bd, core::cmp::Reverse(*bla), core::cmp::Reverse(*bseq))
                }
            };
            if better {
                best = Some((d, e.last_access_time, e.seq, idx));
            }
        }
        best.map(|(d, _, _, idx)| (idx, d))
    }

    #[cfg(test)]
    pub(crate) fn policy_ref(&self) -> &Policy {
        &self.policy
    }

    #[cfg(test)]
    pub(crate) fn slab(&self) -> &[Option<CacheEntry>] {
        &self.entries
    }
}
