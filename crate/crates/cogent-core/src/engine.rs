//! The discrete-event simulation engine.
//!
//! Requests are replayed in timestamp order against a cache under one of two
//! architectures: a baseline that only knows exact hits and origin fetches,
//! and the generative one that serves pseudo-misses from donors, shields
//! uneconomical generations, and optionally issues asynchronous two-pronged
//! fetches guided by a reuse-prediction tree. Fetch completions are events;
//! a completion scheduled at the same microsecond as an arrival is applied
//! first, so a request can hit on an object whose fetch just finished.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::cache::{AdmitError, CacheEntry, CacheState};
use crate::controller::{DecisionTree, HistoryIndex};
use crate::genhit::{CostModel, Scenario};
use crate::judgment::{classify, Classification, ShieldConfig, ShieldReason};
use crate::policy::PolicyKind;
use crate::record::RequestRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Architecture {
    /// Exact hits and origin fetches only.
    Original,
    /// Generative hits, shielding, optional two-pronged fetching.
    Cogent,
}

/// How hit latency is charged. Idealized mode prices an exact cache hit at
/// zero so latency totals isolate miss-path costs and admit closed-form
/// checks; measured mode charges the configured edge-hit latency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum LatencyMode {
    IdealizedHitZero,
    Measured,
}

/// Additive latency components, all in microseconds.
///
/// A miss costs `fetch + write + send`; a pseudo-miss costs
/// `judgment + generation + pseudo_send`; generation latency comes from the
/// cost model. Per-request fetch overrides in the trace replace
/// `origin_fetch_us` only.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LatencyModel {
    pub mode: LatencyMode,
    pub hit_us: u64,
    pub origin_fetch_us: u64,
    pub write_us: u64,
    pub send_us: u64,
    pub judgment_us: u64,
    pub pseudo_send_us: u64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel {
            mode: LatencyMode::IdealizedHitZero,
            hit_us: 1_900,
            origin_fetch_us: 231_070,
            write_us: 0,
            send_us: 0,
            judgment_us: 0,
            pseudo_send_us: 0,
        }
    }
}

impl LatencyModel {
    pub fn hit_latency(&self) -> u64 {
        match self.mode {
            LatencyMode::IdealizedHitZero => 0,
            LatencyMode::Measured => self.hit_us,
        }
    }

    pub fn fetch_of(&self, override_us: Option<u64>) -> u64 {
        override_us.unwrap_or(self.origin_fetch_us)
    }

    pub fn miss_total(&self, fetch_us: u64) -> u64 {
        fetch_us + self.write_us + self.send_us
    }

    pub fn pseudo_total(&self, generation_us: u64) -> u64 {
        self.judgment_us + generation_us + self.pseudo_send_us
    }
}

/// Shared CPU headroom for generations: a reservation ledger against
/// `cores * utilization_cap`. Reservations expire at their end time;
/// `can_admit` asks whether one more generation fits right now.
#[derive(Debug, Clone, PartialEq)]
pub struct CpuModel {
    pub cores: f64,
    pub utilization_cap: f64,
    ledger: Vec<(u64, f64)>,
}

impl Default for CpuModel {
    fn default() -> Self {
        CpuModel::new(48.0, 0.60)
    }
}

impl CpuModel {
    pub fn new(cores: f64, utilization_cap: f64) -> CpuModel {
        CpuModel { cores, utilization_cap, ledger: Vec::new() }
    }

    /// Cores held by reservations still running at `now`.
    pub fn in_use(&self, now: u64) -> f64 {
        self.ledger
            .iter()
            .filter(|(end, _)| *end > now)
            .map(|(_, c)| c)
            .sum()
    }

    pub fn can_admit(&self, now: u64, _duration_us: u64, req_cores: f64) -> bool {
        self.in_use(now) + req_cores <= self.cores * self.utilization_cap + 1e-9
    }

    pub fn reserve(&mut self, now: u64, duration_us: u64, req_cores: f64) {
        self.ledger.retain(|(end, _)| *end > now);
        self.ledger.push((now + duration_us, req_cores));
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RunSettings {
    pub architecture: Architecture,
    pub policy: PolicyKind,
    pub capacity_bytes: u64,
    pub latency: LatencyModel,
    #[serde(skip)]
    pub cost: CostModel,
    #[serde(skip)]
    pub cpu: CpuModel,
    #[serde(skip)]
    pub shield: ShieldConfig,
    /// Issue an async exact fetch on a pseudo-miss when the tree predicts
    /// the identity will be re-requested.
    pub two_pronged: bool,
    #[serde(skip)]
    pub tree: Option<DecisionTree>,
    /// Tumbling window width for the time series.
    pub window_us: u64,
    /// Keep one [`RequestEvent`] per request in the report.
    pub record_events: bool,
    /// Entries admitted at time 0 before the trace starts; no origin bytes
    /// are charged for them.
    #[serde(skip)]
    pub warm: Vec<RequestRecord>,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            architecture: Architecture::Cogent,
            policy: PolicyKind::Lru,
            capacity_bytes: 64 << 30,
            latency: LatencyModel::default(),
            cost: CostModel::default(),
            cpu: CpuModel::default(),
            shield: ShieldConfig::default(),
            two_pronged: false,
            tree: None,
            window_us: 1_000_000,
            record_events: false,
            warm: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Outcome {
    Hit,
    Miss,
    PseudoMiss(Scenario),
    Shielded(ShieldReason),
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RequestEvent {
    pub index: usize,
    pub timestamp: u64,
    pub outcome: Outcome,
    pub latency_us: u64,
    pub size: u64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct WindowRow {
    pub window_start_us: u64,
    pub requests: u64,
    pub mean_latency_us: f64,
    pub p99_us: u64,
    pub origin_bytes: u64,
    pub origin_bytes_per_sec: f64,
    /// Redundancy of cache contents at window close.
    pub redundancy_rate: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SimReport {
    pub requests: u64,
    pub hits: u64,
    pub misses: u64,
    pub pseudo_hits: u64,
    pub shielded: u64,
    pub shielded_too_slow: u64,
    pub shielded_no_cpu: u64,
    pub scenario_counts: [u64; 5],
    pub two_pronged_fetches: u64,
    pub two_pronged_bytes: u64,
    pub total_latency_us: u64,
    pub mean_latency_us: f64,
    pub p99_us: u64,
    pub p999_us: u64,
    pub origin_bytes: u64,
    /// Last event time (arrival or fetch completion).
    pub duration_us: u64,
    pub origin_bytes_per_sec: f64,
    pub final_redundancy: f64,
    pub final_cache_bytes: u64,
    pub final_cache_objects: u64,
    pub windows: Vec<WindowRow>,
    pub events: Vec<RequestEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunError {
    #[error("trace timestamps regress at record {0}")]
    UnsortedTrace(usize),
    #[error("warm-cache entry rejected: {0}")]
    Warm(#[from] AdmitError),
}

/// Nearest-rank percentile of a sorted sample: the value at 1-based rank
/// `ceil(p * n)`.
pub fn percentile_nearest_rank(sorted: &[u64], p: f64) -> u64 {
    if sorted.is_empty() {
        return 0;
    }
    let n = sorted.len() as f64;
    let rank = libm::ceil(p * n) as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Fraction of cached bytes that duplicate other entries of the same content
/// group: per group, everything beyond its single largest entry.
pub fn redundancy_rate(cache: &CacheState) -> f64 {
    let mut groups: BTreeMap<&str, (u64, u64)> = BTreeMap::new(); // (sum, max)
    for e in cache.iter() {
        let g = groups.entry(e.content_id.as_str()).or_insert((0, 0));
        g.0 += e.size;
        g.1 = g.1.max(e.size);
    }
    let total: u64 = groups.values().map(|(sum, _)| sum).sum();
    if total == 0 {
        return 0.0;
    }
    let redundant: u64 = groups.values().map(|(sum, max)| sum - max).sum();
    redundant as f64 / total as f64
}

struct PendingFetch {
    record: RequestRecord,
    fetch_latency_us: u64,
    two_pronged: bool,
}

struct WindowAccum {
    start_us: u64,
    latencies: Vec<u64>,
    origin_bytes: u64,
}

struct Sim<'a> {
    settings: &'a RunSettings,
    cache: CacheState,
    cpu: CpuModel,
    history: HistoryIndex,
    heap: BinaryHeap<Reverse<(u64, u64)>>,
    pending: BTreeMap<u64, PendingFetch>,
    next_fetch_id: u64,
    in_flight: BTreeMap<(String, String), u32>,
    report: SimReport,
    latencies: Vec<u64>,
    window: Option<WindowAccum>,
    last_event_us: u64,
}

impl<'a> Sim<'a> {
    fn new(settings: &'a RunSettings) -> Result<Sim<'a>, RunError> {
        let mut cache = CacheState::new(settings.capacity_bytes, settings.policy);
        for rec in &settings.warm {
            let fetch = settings.latency.fetch_of(rec.origin_latency_override);
            cache.admit(CacheEntry::from_record(rec, 0, fetch))?;
        }
        Ok(Sim {
            settings,
            cache,
            cpu: settings.cpu.clone(),
            history: HistoryIndex::default(),
            heap: BinaryHeap::new(),
            pending: BTreeMap::new(),
            next_fetch_id: 0,
            in_flight: BTreeMap::new(),
            report: SimReport {
                requests: 0,
                hits: 0,
                misses: 0,
                pseudo_hits: 0,
                shielded: 0,
                shielded_too_slow: 0,
                shielded_no_cpu: 0,
                scenario_counts: [0; 5],
                two_pronged_fetches: 0,
                two_pronged_bytes: 0,
                total_latency_us: 0,
                mean_latency_us: 0.0,
                p99_us: 0,
                p999_us: 0,
                origin_bytes: 0,
                duration_us: 0,
                origin_bytes_per_sec: 0.0,
                final_redundancy: 0.0,
                final_cache_bytes: 0,
                final_cache_objects: 0,
                windows: Vec::new(),
                events: Vec::new(),
            },
            latencies: Vec::new(),
            window: None,
            last_event_us: 0,
        })
    }

    fn window_of(&self, now: u64) -> u64 {
        now / self.settings.window_us * self.settings.window_us
    }

    /// Closes finished windows so `now` falls inside the open one.
    fn advance_windows(&mut self, now: u64) {
        let start = self.window_of(now);
        if let Some(w) = &self.window {
            if w.start_us == start {
                return;
            }
        }
        if let Some(w) = self.window.take() {
            let mut sorted = w.latencies.clone();
            sorted.sort_unstable();
            let n = w.latencies.len() as u64;
            let sum: u64 = w.latencies.iter().sum();
            self.report.windows.push(WindowRow {
                window_start_us: w.start_us,
                requests: n,
                mean_latency_us: if n == 0 { 0.0 } else { sum as f64 / n as f64 },
                p99_us: percentile_nearest_rank(&sorted, 0.99),
                origin_bytes: w.origin_bytes,
                origin_bytes_per_sec: w.origin_bytes as f64
                    / (self.settings.window_us as f64 / 1e6),
                redundancy_rate: redundancy_rate(&self.cache),
            });
        }
        self.window = Some(WindowAccum { start_us: start, latencies: Vec::new(), origin_bytes: 0 });
    }

    fn charge_origin(&mut self, now: u64, bytes: u64) {
        self.report.origin_bytes += bytes;
        self.advance_windows(now);
        self.window.as_mut().expect("window open").origin_bytes += bytes;
    }

    fn schedule_fetch(&mut self, now: u64, record: RequestRecord, two_pronged: bool) {
        let fetch = self.settings.latency.fetch_of(record.origin_latency_override);
        let done = now + fetch + self.settings.latency.write_us;
        let identity = (record.key.clone(), record.params.canonical());
        *self.in_flight.entry(identity).or_insert(0) += 1;
        let id = self.next_fetch_id;
        self.next_fetch_id += 1;
        self.pending
            .insert(id, PendingFetch { record, fetch_latency_us: fetch, two_pronged });
        self.heap.push(Reverse((done, id)));
    }

    fn complete_fetch(&mut self, done_us: u64, id: u64) {
        let pf = self.pending.remove(&id).expect("pending fetch exists");
        self.last_event_us = self.last_event_us.max(done_us);
        let identity = (pf.record.key.clone(), pf.record.params.canonical());
        if let Some(n) = self.in_flight.get_mut(&identity) {
            *n -= 1;
            if *n == 0 {
                self.in_flight.remove(&identity);
            }
        }
        if pf.two_pronged {
            // Two-pronged transfer crosses the origin link when it lands.
            self.report.two_pronged_bytes += pf.record.size;
            self.charge_origin(done_us, pf.record.size);
        }
        let entry = CacheEntry::from_record(&pf.record, done_us, pf.fetch_latency_us);
        // A single over-capacity object is simply not cached.
        let _ = self.cache.admit(entry);
    }

    fn drain_completions_until(&mut self, cutoff_inclusive: u64) {
        while let Some(&Reverse((t, id))) = self.heap.peek() {
            if t > cutoff_inclusive {
                break;
            }
            self.heap.pop();
            self.complete_fetch(t, id);
        }
    }

    fn serve(&mut self, index: usize, req: &RequestRecord) {
        let now = req.timestamp;
        // Same-microsecond fetch completions land before the request is
        // judged, so it can hit on the freshly fetched object.
        self.drain_completions_until(now);
        self.advance_windows(now);
        self.last_event_us = self.last_event_us.max(now);

        let features = self.history.features(req, now).vector();
        let canon = req.params.canonical();
        let fetch = self.settings.latency.fetch_of(req.origin_latency_override);

        let classification = match self.settings.architecture {
            Architecture::Original => match self.cache.peek_exact(&req.key, &canon) {
                Some(idx) => Classification::Hit(idx),
                None => Classification::Miss,
            },
            Architecture::Cogent => classify(
                req,
                &self.cache,
                &self.settings.cost,
                &self.cpu,
                &self.settings.shield,
                fetch,
                now,
            ),
        };

        let (outcome, latency) = match classification {
            Classification::Hit(_) => {
                let hit = self.cache.lookup(&req.key, &canon, now);
                debug_assert!(hit.is_some());
                (Outcome::Hit, self.settings.latency.hit_latency())
            }
            Classification::Miss => {
                self.charge_origin(now, req.size);
                self.schedule_fetch(now, req.clone(), false);
                (Outcome::Miss, self.settings.latency.miss_total(fetch))
            }
            Classification::ShieldedMiss { reason } => {
                // Shielded requests take the traditional miss path.
                self.charge_origin(now, req.size);
                self.schedule_fetch(now, req.clone(), false);
                (Outcome::Shielded(reason), self.settings.latency.miss_total(fetch))
            }
            Classification::PseudoMiss { scenario, donors } => {
                debug_assert!(!donors.is_empty());
                let gen = self.settings.cost.estimate_latency(scenario, req.size);
                self.cpu
                    .reserve(now, gen, self.settings.cost.cpu_cores_per_generation);
                if self.settings.two_pronged {
                    let predicted = self
                        .settings
                        .tree
                        .as_ref()
                        .is_some_and(|t| t.decide(&features));
                    let identity = (req.key.clone(), canon.clone());
                    if predicted && !self.in_flight.contains_key(&identity) {
                        self.report.two_pronged_fetches += 1;
                        self.schedule_fetch(now, req.clone(), true);
                    }
                }
                (Outcome::PseudoMiss(scenario), self.settings.latency.pseudo_total(gen))
            }
        };

        match outcome {
            Outcome::Hit => self.report.hits += 1,
            Outcome::Miss => self.report.misses += 1,
            Outcome::Shielded(ShieldReason::TooSlow) => {
                self.report.shielded += 1;
                self.report.shielded_too_slow += 1;
            }
            Outcome::Shielded(ShieldReason::NoCpu) => {
                self.report.shielded += 1;
                self.report.shielded_no_cpu += 1;
            }
            Outcome::PseudoMiss(s) => {
                self.report.pseudo_hits += 1;
                self.report.scenario_counts[s.index()] += 1;
            }
        }
        self.report.requests += 1;
        self.report.total_latency_us += latency;
        self.latencies.push(latency);
        self.window.as_mut().expect("window open").latencies.push(latency);
        if self.settings.record_events {
            self.report.events.push(RequestEvent {
                index,
                timestamp: now,
                outcome,
                latency_us: latency,
                size: req.size,
            });
        }
        self.history.observe(req, now);
    }

    fn finish(mut self) -> SimReport {
        self.drain_completions_until(u64::MAX);
        // Close the open window (advance to one past the last event).
        let past_end = self.last_event_us + self.settings.window_us;
        self.advance_windows(past_end);
        self.window = None;

        self.latencies.sort_unstable();
        let n = self.latencies.len();
        self.report.mean_latency_us = if n == 0 {
            0.0
        } else {
            self.report.total_latency_us as f64 / n as f64
        };
        self.report.p99_us = percentile_nearest_rank(&self.latencies, 0.99);
        self.report.p999_us = percentile_nearest_rank(&self.latencies, 0.999);
        self.report.duration_us = self.last_event_us;
        self.report.origin_bytes_per_sec = if self.last_event_us == 0 {
            0.0
        } else {
            self.report.origin_bytes as f64 / (self.last_event_us as f64 / 1e6)
        };
        self.report.final_redundancy = redundancy_rate(&self.cache);
        self.report.final_cache_bytes = self.cache.used();
        self.report.final_cache_objects = self.cache.len() as u64;
        self.report
    }
}

/// Replays `trace` (already sorted by timestamp) under `settings`.
pub fn run(trace: &[RequestRecord], settings: &RunSettings) -> Result<SimReport, RunError> {
    for (i, w) in trace.windows(2).enumerate() {
        if w[0].timestamp > w[1].timestamp {
            return Err(RunError::UnsortedTrace(i + 1));
        }
    }
    let mut sim = Sim::new(settings)?;
    for (i, req) in trace.iter().enumerate() {
        sim.serve(i, req);
    }
    Ok(sim.finish())
}
