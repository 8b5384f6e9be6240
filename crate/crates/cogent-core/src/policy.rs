//! Replacement policies behind a uniform interface: LRU, ARC, LHD, and the
//! latency-aware LRU-MAD ranking.
//!
//! Policies see the shared entry slab owned by [`crate::cache::CacheState`]
//! and keep only their private bookkeeping here. All decisions are
//! deterministic functions of the operation sequence.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::cache::CacheEntry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub enum PolicyKind {
    Lru,
    Arc,
    Lhd,
    LruMad,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] =
        [PolicyKind::Lru, PolicyKind::Arc, PolicyKind::Lhd, PolicyKind::LruMad];

    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::Lru => "lru",
            PolicyKind::Arc => "arc",
            PolicyKind::Lhd => "lhd",
            PolicyKind::LruMad => "lru-mad",
        }
    }

    pub fn parse(s: &str) -> Option<PolicyKind> {
        match s {
            "lru" => Some(PolicyKind::Lru),
            "arc" => Some(PolicyKind::Arc),
            "lhd" => Some(PolicyKind::Lhd),
            "lru-mad" | "lrumad" | "lru_mad" => Some(PolicyKind::LruMad),
            _ => None,
        }
    }
}

impl core::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Candidate-sampling bounds for the scan-based policies (LHD, LRU-MAD).
/// Small caches are ranked exhaustively; larger ones examine a fixed,
/// deterministically chosen sample per eviction.
const FULL_SCAN_MAX: usize = 256;
const SAMPLE_SIZE: usize = 64;

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Visits the deterministic candidate set for one eviction decision.
fn for_each_candidate(live: &[u32], salt: u64, mut f: impl FnMut(u32)) {
    if live.len() <= FULL_SCAN_MAX {
        for &idx in live {
            f(idx);
        }
    } else {
        for i in 0..SAMPLE_SIZE {
            let r = splitmix64(salt.wrapping_mul(0x2545_f491_4f6c_dd1d) ^ (i as u64));
            f(live[(r % live.len() as u64) as usize]);
        }
    }
}

pub(crate) enum Policy {
    Lru(Lru),
    Arc(ArcPolicy),
    Lhd(Lhd),
    LruMad(LruMad),
}

impl Policy {
    pub fn new(kind: PolicyKind, capacity: u64) -> Policy {
        match kind {
            PolicyKind::Lru => Policy::Lru(Lru::default()),
            PolicyKind::Arc => Policy::Arc(ArcPolicy::new(capacity)),
            PolicyKind::Lhd => Policy::Lhd(Lhd::default()),
            PolicyKind::LruMad => Policy::LruMad(LruMad::default()),
        }
    }

    pub fn ensure_slab(&mut self, len: usize) {
        match self {
            Policy::Lru(p) => p.seq_of.resize(len, 0),
            Policy::Arc(p) => {
                p.seq_of.resize(len, 0);
                p.loc.resize(len, Loc::None);
            }
            Policy::Lhd(p) => p.last_access_op.resize(len, 0),
            Policy::LruMad(_) => {}
        }
    }

    /// Called once per admission of a new identity, before any eviction.
    pub fn before_admit(&mut self, key: &str, canon: &str, size: u64) {
        if let Policy::Arc(p) = self {
            p.before_admit(key, canon, size);
        }
    }

    pub fn on_insert(&mut self, idx: u32, entries: &[Option<CacheEntry>]) {
        match self {
            Policy::Lru(p) => p.touch(idx),
            Policy::Arc(p) => p.on_insert(idx, entries),
            Policy::Lhd(p) => {
                p.tick();
                p.last_access_op[idx as usize] = p.ops;
            }
            Policy::LruMad(_) => {}
        }
    }

    pub fn on_hit(&mut self, idx: u32, entries: &[Option<CacheEntry>]) {
        match self {
            Policy::Lru(p) => p.touch(idx),
            Policy::Arc(p) => p.on_hit(idx, entries),
            Policy::Lhd(p) => {
                p.tick();
                let age = p.ops - p.last_access_op[idx as usize];
                p.hits[age_bin(age)] += 1.0;
                p.last_access_op[idx as usize] = p.ops;
            }
            Policy::LruMad(_) => {}
        }
    }

    /// Called when a resident identity is re-admitted with a new size.
    pub fn on_resize(&mut self, idx: u32, old_size: u64, new_size: u64) {
        if let Policy::Arc(p) = self {
            p.on_resize(idx, old_size, new_size);
        }
    }

    pub fn on_evict(&mut self, idx: u32, entries: &[Option<CacheEntry>]) {
        match self {
            Policy::Lru(p) => {
                p.order.remove(&p.seq_of[idx as usize]);
            }
            Policy::Arc(p) => p.on_evict(idx, entries),
            Policy::Lhd(p) => {
                let age = p.ops - p.last_access_op[idx as usize];
                p.evicts[age_bin(age)] += 1.0;
                p.evict_counter += 1;
            }
            Policy::LruMad(p) => p.evict_counter += 1,
        }
    }

    /// The entry the policy would evict next. Pure: does not mutate state.
    pub fn victim(
        &self,
        entries: &[Option<CacheEntry>],
        live: &[u32],
        now: u64,
    ) -> Option<u32> {
        if live.is_empty() {
            return None;
        }
        match self {
            Policy::Lru(p) => p.order.values().next().copied(),
            Policy::Arc(p) => p.victim(),
            Policy::Lhd(p) => p.victim(entries, live),
            Policy::LruMad(p) => p.victim(entries, live, now),
        }
    }
}

// ---------------------------------------------------------------------------
// LRU

#[derive(Default)]
pub(crate) struct Lru {
    order: BTreeMap<u64, u32>,
    seq_of: Vec<u64>,
    clock: u64,
}

impl Lru {
    fn touch(&mut self, idx: u32) {
        let old = self.seq_of[idx as usize];
        self.order.remove(&old);
        self.clock += 1;
        self.seq_of[idx as usize] = self.clock;
        self.order.insert(self.clock, idx);
    }
}

// ---------------------------------------------------------------------------
// ARC, adapted to heterogeneous sizes by weighting list budgets in bytes.
// Recency list T1 and frequency list T2 hold resident entries; ghost lists
// B1/B2 remember recently evicted identities to adapt the T1 target `p`.

#[derive(Clone, Copy, PartialEq, Eq, Default)]
enum Loc {
    #[default]
    None,
    T1,
    T2,
}

struct Ghost {
    order: BTreeMap<u64, (String, String)>,
    map: BTreeMap<(String, String), (u64, u64)>, // identity -> (order seq, size)
    bytes: u64,
}

impl Ghost {
    fn new() -> Ghost {
        Ghost { order: BTreeMap::new(), map: BTreeMap::new(), bytes: 0 }
    }

    fn remove(&mut self, key: &str, canon: &str) -> Option<u64> {
        let id = (String::from(key), String::from(canon));
        let (seq, size) = self.map.remove(&id)?;
        self.order.remove(&seq);
        self.bytes -= size;
        Some(size)
    }

    fn push(&mut self, key: String, canon: String, size: u64, seq: u64) {
        let id = (key, canon);
        if let Some((old_seq, old_size)) = self.map.remove(&id) {
            self.order.remove(&old_seq);
            self.bytes -= old_size;
        }
        self.order.insert(seq, id.clone());
        self.map.insert(id, (seq, size));
        self.bytes += size;
    }

    fn pop_lru(&mut self) -> bool {
        if let Some((&seq, _)) = self.order.iter().next() {
            let id = self.order.remove(&seq).unwrap();
            let (_, size) = self.map.remove(&id).unwrap();
            self.bytes -= size;
            true
        } else {
            false
        }
    }
}

pub(crate) struct ArcPolicy {
    capacity: u64,
    p: f64,
    t1: BTreeMap<u64, u32>,
    t2: BTreeMap<u64, u32>,
    t1_bytes: u64,
    t2_bytes: u64,
    loc: Vec<Loc>,
    seq_of: Vec<u64>,
    clock: u64,
    b1: Ghost,
    b2: Ghost,
    pending_frequent: bool,
}

impl ArcPolicy {
    fn new(capacity: u64) -> ArcPolicy {
        ArcPolicy {
            capacity,
            p: 0.0,
            t1: BTreeMap::new(),
            t2: BTreeMap::new(),
            t1_bytes: 0,
            t2_bytes: 0,
            loc: Vec::new(),
            seq_of: Vec::new(),
            clock: 0,
            b1: Ghost::new(),
            b2: Ghost::new(),
            pending_frequent: false,
        }
    }

    fn before_admit(&mut self, key: &str, canon: &str, size: u64) {
        if self.b1.remove(key, canon).is_some() {
            let ratio = if self.b1.bytes > 0 {
                self.b2.bytes as f64 / self.b1.bytes as f64
            } else {
                1.0
            };
            let delta = (size as f64) * ratio.max(1.0);
            self.p = (self.p + delta).min(self.capacity as f64);
            self.pending_frequent = true;
        } else if self.b2.remove(key, canon).is_some() {
            let ratio = if self.b2.bytes > 0 {
                self.b1.bytes as f64 / self.b2.bytes as f64
            } else {
                1.0
            };
            let delta = (size as f64) * ratio.max(1.0);
            self.p = (self.p - delta).max(0.0);
            self.pending_frequent = true;
        } else {
            self.pending_frequent = false;
        }
    }

    fn on_insert(&mut self, idx: u32, entries: &[Option<CacheEntry>]) {
        let size = entries[idx as usize].as_ref().unwrap().size;
        self.clock += 1;
        self.seq_of[idx as usize] = self.clock;
        if self.pending_frequent {
            self.loc[idx as usize] = Loc::T2;
            self.t2.insert(self.clock, idx);
            self.t2_bytes += size;
        } else {
            self.loc[idx as usize] = Loc::T1;
            self.t1.insert(self.clock, idx);
            self.t1_bytes += size;
        }
        self.pending_frequent = false;
        self.trim_ghosts();
    }

    /// Keeps T1+B1 within capacity and everything within twice capacity.
    fn trim_ghosts(&mut self) {
        while self.t1_bytes + self.b1.bytes > self.capacity {
            if !self.b1.pop_lru() {
                break;
            }
        }
        while self.t1_bytes + self.t2_bytes + self.b1.bytes + self.b2.bytes > 2 * self.capacity {
            if !self.b2.pop_lru() && !self.b1.pop_lru() {
                break;
            }
        }
    }

    /// A resident identity was refreshed with a different size.
    fn on_resize(&mut self, idx: u32, old_size: u64, new_size: u64) {
        match self.loc[idx as usize] {
            Loc::T1 => self.t1_bytes = self.t1_bytes - old_size + new_size,
            Loc::T2 => self.t2_bytes = self.t2_bytes - old_size + new_size,
            Loc::None => {}
        }
        self.trim_ghosts();
    }

    fn on_hit(&mut self, idx: u32, entries: &[Option<CacheEntry>]) {
        let size = entries[idx as usize].as_ref().unwrap().size;
        let old = self.seq_of[idx as usize];
        match self.loc[idx as usize] {
            Loc::T1 => {
                self.t1.remove(&old);
                self.t1_bytes -= size;
                self.t2_bytes += size;
                self.loc[idx as usize] = Loc::T2;
            }
            Loc::T2 => {
                self.t2.remove(&old);
            }
            Loc::None => {}
        }
        self.clock += 1;
        self.seq_of[idx as usize] = self.clock;
        self.t2.insert(self.clock, idx);
    }

    fn on_evict(&mut self, idx: u32, entries: &[Option<CacheEntry>]) {
        let e = entries[idx as usize].as_ref().unwrap();
        let old = self.seq_of[idx as usize];
        self.clock += 1;
        match self.loc[idx as usize] {
            Loc::T1 => {
                self.t1.remove(&old);
                self.t1_bytes -= e.size;
                self.b1.push(e.key.clone(), e.canon_params.clone(), e.size, self.clock);
            }
            Loc::T2 => {
                self.t2.remove(&old);
                self.t2_bytes -= e.size;
                self.b2.push(e.key.clone(), e.canon_params.clone(), e.size, self.clock);
            }
            Loc::None => {}
        }
        self.loc[idx as usize] = Loc::None;
        self.trim_ghosts();
    }

    fn victim(&self) -> Option<u32> {
        let prefer_t1 = !self.t1.is_empty() && (self.t1_bytes as f64 > self.p || self.t2.is_empty());
        if prefer_t1 {
            self.t1.values().next().copied()
        } else {
            self.t2.values().next().copied().or_else(|| self.t1.values().next().copied())
        }
    }

    #[cfg(test)]
    pub(crate) fn list_bytes(&self) -> (u64, u64, u64, u64) {
        (self.t1_bytes, self.t2_bytes, self.b1.bytes, self.b2.bytes)
    }
}

// ---------------------------------------------------------------------------
// LHD: rank entries by an age-binned hit-density estimate (expected hits per
// byte), evict the lowest. Ages are measured in cache operations; bins are
// powers of two; counters decay by 0.9 every 10^4 operations.

const AGE_BINS: usize = 33;

#[inline]
fn age_bin(age: u64) -> usize {
    ((64 - (age + 1).leading_zeros()) as usize - 1).min(AGE_BINS - 1)
}

pub(crate) struct Lhd {
    ops: u64,
    next_epoch: u64,
    epoch_len: u64,
    decay: f64,
    hits: [f64; AGE_BINS],
    evicts: [f64; AGE_BINS],
    last_access_op: Vec<u64>,
    evict_counter: u64,
}

impl Default for Lhd {
    fn default() -> Self {
        Lhd {
            ops: 0,
            next_epoch: 10_000,
            epoch_len: 10_000,
            decay: 0.9,
            hits: [0.0; AGE_BINS],
            evicts: [0.0; AGE_BINS],
            last_access_op: Vec::new(),
            evict_counter: 0,
        }
    }
}

impl Lhd {
    fn tick(&mut self) {
        self.ops += 1;
        if self.ops >= self.next_epoch {
            for h in self.hits.iter_mut() {
                *h *= self.decay;
            }
            for e in self.evicts.iter_mut() {
                *e *= self.decay;
            }
            self.next_epoch += self.epoch_len;
        }
    }

    /// Hit density for an entry of `size` bytes whose current age falls in
    /// `bin`, from suffix-summed counters: of everything that reached this
    /// age, what fraction went on to hit, per byte held.
    fn density(&self, suffix: &[(f64, f64); AGE_BINS], bin: usize, size: u64) -> f64 {
        let (h, e) = suffix[bin];
        if h <= 0.0 {
            return 0.0;
        }
        h / ((h + e) * size as f64)
    }

    fn suffix(&self) -> [(f64, f64); AGE_BINS] {
        let mut out = [(0.0, 0.0); AGE_BINS];
        let mut h = 0.0;
        let mut e = 0.0;
        for b in (0..AGE_BINS).rev() {
            h += self.hits[b];
            e += self.evicts[b];
            out[b] = (h, e);
        }
        out
    }

    fn victim(&self, entries: &[Option<CacheEntry>], live: &[u32]) -> Option<u32> {
        let suffix = self.suffix();
        let mut best: Option<(f64, u64, u32)> = None;
        for_each_candidate(live, self.evict_counter, |idx| {
            let e = entries[idx as usize].as_ref().unwrap();
            let age = self.ops - self.last_access_op[idx as usize];
            let d = self.density(&suffix, age_bin(age), e.size);
            let cand = (d, e.seq, idx);
            match &best {
                Some((bd, bs, _)) if (*bd, *bs) <= (d, e.seq) => {}
                _ => best = Some(cand),
            }
        });
        best.map(|(_, _, idx)| idx)
    }

    #[cfg(test)]
    pub(crate) fn score_for_test(&self, entries: &[Option<CacheEntry>], idx: u32) -> f64 {
        let e = entries[idx as usize].as_ref().unwrap();
        let age = self.ops - self.last_access_op[idx as usize];
        self.density(&self.suffix(), age_bin(age), e.size)
    }
}

// ---------------------------------------------------------------------------
// LRU-MAD: evict the entry whose expected delay saved is least, scored as
// last observed fetch latency over time since last access. Cheap-to-refetch
// or stale entries rank first.

#[derive(Default)]
pub(crate) struct LruMad {
    evict_counter: u64,
}

impl LruMad {
    fn victim(&self, entries: &[Option<CacheEntry>], live: &[u32], now: u64) -> Option<u32> {
        let mut best: Option<(f64, u64, u32)> = None;
        for_each_candidate(live, self.evict_counter, |idx| {
            let e = entries[idx as usize].as_ref().unwrap();
            let ttna = now.saturating_sub(e.last_access_time) + 1;
            let score = e.last_fetch_latency as f64 / ttna as f64;
            match &best {
                Some((bd, bs, _)) if (*bd, *bs) <= (score, e.seq) => {}
                _ => best = Some((score, e.seq, idx)),
            }
        });
        best.map(|(_, _, idx)| idx)
    }
}

#[cfg(test)]
pub(crate) fn lhd_score(policy: &Policy, entries: &[Option<CacheEntry>], idx: u32) -> f64 {
    match policy {
        Policy::Lhd(p) => p.score_for_test(entries, idx),
        _ => panic!("not an LHD policy"),
    }
}

#[cfg(test)]
pub(crate) fn arc_list_bytes(policy: &Policy) -> (u64, u64, u64, u64) {
    match policy {
        Policy::Arc(p) => p.list_bytes(),
        _ => panic!("not an ARC policy"),
    }
}
