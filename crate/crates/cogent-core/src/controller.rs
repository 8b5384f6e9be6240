//! The two-pronged controller's reuse predictor: feature extraction over the
//! request history, CART-style decision-tree training on Gini impurity, and
//! pure tree evaluation. The async-fetch scheduling itself lives in the
//! engine, which consults [`DecisionTree::decide`] on every pseudo-miss.

use alloc::collections::BTreeMap;
use alloc::collections::VecDeque;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::record::{Modality, RequestRecord};

/// Sentinel recency for a content group that has never been requested.
pub const RECENCY_NEVER_US: f64 = 1e15;

pub const FEATURE_COUNT: usize = 5;

/// Features describing how reusable a requested file looks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReuseFeatures {
    /// Categorical modality x format, numerically encoded.
    pub file_type: u32,
    pub file_size: u64,
    /// Microseconds since this content group was first seen.
    pub age_us: u64,
    /// Microseconds since the group was last requested; `None` = never.
    pub recency_us: Option<u64>,
    /// Prior requests to the group within the sliding window.
    pub frequency: u64,
}

impl ReuseFeatures {
    pub fn vector(&self) -> [f64; FEATURE_COUNT] {
        [
            self.file_type as f64,
            self.file_size as f64,
            self.age_us as f64,
            self.recency_us.map_or(RECENCY_NEVER_US, |r| r as f64),
            self.frequency as f64,
        ]
    }
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Stable numeric encoding of the modality x format category.
pub fn file_type_code(modality: Modality, format: &str) -> u32 {
    let m = match modality {
        Modality::Block => 0u32,
        Modality::Image => 1,
        Modality::Other => 2,
    };
    m * 4096 + (fnv1a(format) % 4096) as u32
}

struct GroupHistory {
    first_seen_us: u64,
    last_request_us: u64,
    /// Global request sequence numbers of this group's requests, pruned to
    /// the sliding window.
    requests: VecDeque<u64>,
}

/// Incremental per-content-group access history for feature extraction.
/// Observe every request exactly once, after extracting its features.
pub struct HistoryIndex {
    window_requests: u64,
    counter: u64,
    groups: BTreeMap<String, GroupHistory>,
}

impl Default for HistoryIndex {
    fn default() -> Self {
        HistoryIndex::new(10_000)
    }
}

impl HistoryIndex {
    pub fn new(window_requests: u64) -> HistoryIndex {
        HistoryIndex { window_requests, counter: 0, groups: BTreeMap::new() }
    }

    /// Features for `req` from all strictly earlier requests.
    pub fn features(&self, req: &RequestRecord, now: u64) -> ReuseFeatures {
        let file_type = file_type_code(req.modality, &req.format);
        match self.groups.get(&req.content_id) {
            None => ReuseFeatures {
                file_type,
                file_size: req.size,
                age_us: 0,
                recency_us: None,
                frequency: 0,
            },
            Some(g) => {
                let cutoff = self.counter.saturating_sub(self.window_requests);
                let frequency = g.requests.iter().filter(|&&s| s >= cutoff).count() as u64;
                ReuseFeatures {
                    file_type,
                    file_size: req.size,
                    age_us: now.saturating_sub(g.first_seen_us),
                    recency_us: Some(now.saturating_sub(g.last_request_us)),
                    frequency,
                }
            }
        }
    }

    /// Records `req` into the history.
    pub fn observe(&mut self, req: &RequestRecord, now: u64) {
        let seq = self.counter;
        self.counter += 1;
        let cutoff = seq.saturating_sub(self.window_requests);
        let g = self
            .groups
            .entry(req.content_id.clone())
            .or_insert_with(|| GroupHistory {
                first_seen_us: now,
                last_request_us: now,
                requests: VecDeque::new(),
            });
        g.last_request_us = now;
        g.requests.push_back(seq);
        while g.requests.front().is_some_and(|&s| s < cutoff) {
            g.requests.pop_front();
        }
    }
}

/// One labeled training row. The label says whether the same `(key, params)`
/// identity was requested again within the reuse horizon; it is computed
/// only from trace positions strictly after the sample's own.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSample {
    pub features: [f64; FEATURE_COUNT],
    pub label: bool,
}

/// Reuse horizon: a repeat counts if it arrives within this many
/// microseconds or this many requests, whichever bound trips first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Horizon {
    pub max_us: u64,
    pub max_requests: u64,
}

impl Default for Horizon {
    fn default() -> Self {
        Horizon { max_us: 100_000, max_requests: 1_000 }
    }
}

/// Builds labeled samples over a trace slice, replaying the history index
/// forward so every feature vector sees only its own past.
pub fn build_samples(
    trace: &[RequestRecord],
    horizon: Horizon,
    window_requests: u64,
) -> Vec<TrainingSample> {
    let mut history = HistoryIndex::new(window_requests);
    // Next occurrence of each identity, scanned backwards.
    let mut next_occurrence: Vec<Option<usize>> = alloc::vec![None; trace.len()];
    let mut last_seen: BTreeMap<(&str, String), usize> = BTreeMap::new();
    for i in (0..trace.len()).rev() {
        let id = (trace[i].key.as_str(), trace[i].params.canonical());
        next_occurrence[i] = last_seen.insert(id, i);
    }
    let mut samples = Vec::with_capacity(trace.len());
    for (i, req) in trace.iter().enumerate() {
        let features = history.features(req, req.timestamp).vector();
        let label = next_occurrence[i].is_some_and(|j| {
            trace[j].timestamp - req.timestamp <= horizon.max_us
                && (j - i) as u64 <= horizon.max_requests
        });
        samples.push(TrainingSample { features, label });
        history.observe(req, req.timestamp);
    }
    samples
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TrainError {
    #[error("cannot train on an empty sample list")]
    NoSamples,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("tree text line {line} is malformed: {detail}")]
    Parse { line: usize, detail: String },
    #[error("feature index {0} out of schema (expected < {FEATURE_COUNT})")]
    SchemaMismatch(usize),
    #[error("node id {0} is dangling")]
    DanglingNode(u32),
    #[error("tree has no nodes")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig { max_depth: 6, min_leaf: 20 }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Split { feature: usize, threshold: f64, left: u32, right: u32 },
    Leaf { predict: bool, positive_fraction: f64 },
}

/// A binary decision tree over the fixed 5-feature schema. Values at or
/// below a split threshold go left.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    /// A single-leaf tree with a constant prediction.
    pub fn constant(predict: bool) -> DecisionTree {
        DecisionTree {
            nodes: alloc::vec![Node::Leaf {
                predict,
                positive_fraction: if predict { 1.0 } else { 0.0 },
            }],
        }
    }

    pub fn decide(&self, features: &[f64; FEATURE_COUNT]) -> bool {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { predict, .. } => return *predict,
                Node::Split { feature, threshold, left, right } => {
                    at = if features[*feature] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn depth_at(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + depth_at(nodes, *left as usize).max(depth_at(nodes, *right as usize))
                }
            }
        }
        depth_at(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn accuracy(&self, samples: &[TrainingSample]) -> f64 {
        if samples.is_empty() {
            return 0.0;
        }
        let correct = samples
            .iter()
            .filter(|s| self.decide(&s.features) == s.label)
            .count();
        correct as f64 / samples.len() as f64
    }

    /// Line-oriented text form:
    /// `node <id> feat <i> thr <v> left <id> right <id>` and
    /// `leaf <id> pred <0|1> frac <f>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (id, node) in self.nodes.iter().enumerate() {
            match node {
                Node::Split { feature, threshold, left, right } => {
                    out.push_str(&alloc::format!(
                        "node {id} feat {feature} thr {threshold} left {left} right {right}\n"
                    ));
                }
                Node::Leaf { predict, positive_fraction } => {
                    out.push_str(&alloc::format!(
                        "leaf {id} pred {} frac {positive_fraction}\n",
                        u8::from(*predict)
                    ));
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<DecisionTree, TreeError> {
        let mut nodes: BTreeMap<u32, Node> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let err = |detail: &str| TreeError::Parse {
                line: lineno + 1,
                detail: detail.to_string(),
            };
            match toks.as_slice() {
                ["node", id, "feat", f, "thr", t, "left", l, "right", r] => {
                    let id: u32 = id.parse().map_err(|_| err("bad node id"))?;
                    let feature: usize = f.parse().map_err(|_| err("bad feature index"))?;
                    if feature >= FEATURE_COUNT {
                        return Err(TreeError::SchemaMismatch(feature));
                    }
                    let threshold: f64 = t.parse().map_err(|_| err("bad threshold"))?;
                    let left: u32 = l.parse().map_err(|_| err("bad left id"))?;
                    let right: u32 = r.parse().map_err(|_| err("bad right id"))?;
                    nodes.insert(id, Node::Split { feature, threshold, left, right });
                }
                ["leaf", id, "pred", p, "frac", f] => {
                    let id: u32 = id.parse().map_err(|_| err("bad leaf id"))?;
                    let predict = match *p {
                        "0" => false,
                        "1" => true,
                        _ => return Err(err("bad prediction")),
                    };
                    let positive_fraction: f64 = f.parse().map_err(|_| err("bad fraction"))?;
                    nodes.insert(id, Node::Leaf { predict, positive_fraction });
                }
                _ => return Err(err("unrecognized line")),
            }
        }
        if nodes.is_empty() {
            return Err(TreeError::Empty);
        }
        let max_id = *nodes.keys().next_back().unwrap();
        let mut out = Vec::with_capacity(max_id as usize + 1);
        for id in 0..=max_id {
            out.push(nodes.remove(&id).ok_or(TreeError::DanglingNode(id))?);
        }
        for node in &out {
            if let Node::Split { left, right, .. } = node {
                if *left > max_id || *right > max_id {
                    return Err(TreeError::DanglingNode((*left).max(*right)));
                }
            }
        }
        Ok(DecisionTree { nodes: out })
    }
}

fn gini(pos: f64, total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let p = pos / total;
    2.0 * p * (1.0 - p)
}

/// Greedy top-down CART growth on Gini impurity. Splits stop at max depth,
/// min leaf size, or zero impurity gain; numeric thresholds are midpoints of
/// sorted unique feature values; leaves predict the majority label with ties
/// going to `true` (a wasted fetch costs bandwidth once, a missed fetch
/// costs generation latency on every repeat). Tie-breaking between equal
/// splits is lowest feature index, then lowest threshold.
pub fn train(samples: &[TrainingSample], cfg: TreeConfig) -> Result<DecisionTree, TrainError> {
    if samples.is_empty() {
        return Err(TrainError::NoSamples);
    }
    let mut nodes = Vec::new();
    let indices: Vec<usize> = (0..samples.len()).collect();
    grow(samples, &indices, cfg, 0, &mut nodes);
    Ok(DecisionTree { nodes })
}

fn leaf_for(samples: &[TrainingSample], idx: &[usize], nodes: &mut Vec<Node>) -> u32 {
    let pos = idx.iter().filter(|&&i| samples[i].label).count();
    let frac = pos as f64 / idx.len() as f64;
    let id = nodes.len() as u32;
    nodes.push(Node::Leaf { predict: 2 * pos >= idx.len(), positive_fraction: frac });
    id
}

fn grow(
    samples: &[TrainingSample],
    idx: &[usize],
    cfg: TreeConfig,
    depth: usize,
    nodes: &mut Vec<Node>,
) -> u32 {
    let pos = idx.iter().filter(|&&i| samples[i].label).count();
    let total = idx.len();
    if depth >= cfg.max_depth || total < 2 * cfg.min_leaf || pos == 0 || pos == total {
        return leaf_for(samples, idx, nodes);
    }
    let parent_impurity = gini(pos as f64, total as f64);
    let mut best: Option<(f64, usize, f64)> = None; // (gain, feature, threshold)
    for feature in 0..FEATURE_COUNT {
        let mut vals: Vec<(f64, bool)> = idx
            .iter()
            .map(|&i| (samples[i].features[feature], samples[i].label))
            .collect();
        vals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut left_n = 0usize;
        let mut left_pos = 0usize;
        for w in 0..vals.len() - 1 {
            left_n += 1;
            if vals[w].1 {
                left_pos += 1;
            }
            if vals[w].0 == vals[w + 1].0 {
                continue;
            }
            let right_n = total - left_n;
            if left_n < cfg.min_leaf || right_n < cfg.min_leaf {
                continue;
            }
            let threshold = vals[w].0 + (vals[w + 1].0 - vals[w].0) / 2.0;
            let right_pos = pos - left_pos;
            let weighted = (left_n as f64 * gini(left_pos as f64, left_n as f64)
                + right_n as f64 * gini(right_pos as f64, right_n as f64))
                / total as f64;
            let gain = parent_impurity - weighted;
            if gain > 0.0 && best.map_or(true, |(bg, _, _)| gain > bg) {
                best = Some((gain, feature, threshold));
            }
        }
    }
    let Some((_, feature, threshold)) = best else {
        return leaf_for(samples, idx, nodes);
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
        .iter()
        .partition(|&&i| samples[i].features[feature] <= threshold);
    let id = nodes.len() as u32;
    nodes.push(Node::Split { feature, threshold, left: 0, right: 0 });
    let left = grow(samples, &left_idx, cfg, depth + 1, nodes);
    let right = grow(samples, &right_idx, cfg, depth + 1, nodes);
    if let Node::Split { left: l, right: r, .. } = &mut nodes[id as usize] {
        *l = left;
        *r = right;
    }
    id
}
