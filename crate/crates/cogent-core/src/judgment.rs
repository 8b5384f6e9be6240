//! Request classification: hit, miss, or pseudo-miss with donor selection,
//! plus shielding when generation would be slower than fetching or CPU
//! headroom is gone.

use alloc::vec::Vec;

use crate::cache::CacheState;
use crate::engine::CpuModel;
use crate::genhit::{CostModel, Scenario};
use crate::record::{key_prefix, Modality, RequestRecord};

/// Why a pseudo-miss was downgraded to a traditional miss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum ShieldReason {
    TooSlow,
    NoCpu,
}

/// Three-way outcome of judging one request. Donor indexes point into the
/// cache state the request was judged against.
#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    Hit(u32),
    Miss,
    PseudoMiss { scenario: Scenario, donors: Vec<u32> },
    ShieldedMiss { reason: ShieldReason },
}

/// Shielding and matching configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ShieldConfig {
    /// Maximum Hamming distance for similarity-hash donor matching.
    pub hamming_threshold: u32,
    /// Per-scenario enable switches, indexed by [`Scenario::index`].
    pub scenario_enabled: [bool; 5],
    /// Downgrade when estimated generation latency exceeds the fetch estimate.
    pub time_check: bool,
    /// Downgrade when the CPU model refuses the generation reservation.
    pub cpu_check: bool,
}

impl Default for ShieldConfig {
    fn default() -> Self {
        ShieldConfig {
            hamming_threshold: 8,
            scenario_enabled: [true; 5],
            time_check: true,
            cpu_check: true,
        }
    }
}

/// Classifies a request against the cache. Read-only on cache contents:
/// recency updates happen only when the caller serves the hit through
/// [`CacheState::lookup`].
///
/// Donor search: exact `(key, params)` match wins outright; block requests
/// go through prefix matching (cover, then tiling); image requests prefer a
/// same-content donor and fall back to minimum-Hamming similarity within the
/// threshold. A matched scenario is then shielded if generation is estimated
/// slower than `fetch_estimate_us` or the CPU reservation would not fit.
pub fn classify(
    req: &RequestRecord,
    cache: &CacheState,
    cost: &CostModel,
    cpu: &CpuModel,
    shield: &ShieldConfig,
    fetch_estimate_us: u64,
    now: u64,
) -> Classification {
    let canon = req.params.canonical();
    if let Some(idx) = cache.peek_exact(&req.key, &canon) {
        return Classification::Hit(idx);
    }
    let matched = match req.modality {
        Modality::Block => match_block_prefix(&req.key, &canon, req.byte_range(), cache, shield),
        Modality::Image => match_image_similarity(req, cache, shield)
            .map(|(s, d)| (s, alloc::vec![d])),
        Modality::Other => None,
    };
    let (scenario, donors) = match matched {
        Some(m) => m,
        None => return Classification::Miss,
    };
    let gen_estimate = cost.estimate_latency(scenario, req.size);
    if shield.time_check && gen_estimate > fetch_estimate_us {
        return Classification::ShieldedMiss { reason: ShieldReason::TooSlow };
    }
    if shield.cpu_check && !cpu.can_admit(now, gen_estimate, cost.cpu_cores_per_generation) {
        return Classification::ShieldedMiss { reason: ShieldReason::NoCpu };
    }
    Classification::PseudoMiss { scenario, donors }
}

/// Block donor search over the `<content_id>/<object_name>` key grammar.
///
/// Returns a single covering donor under the identical key (disassemble), or
/// the chunk set sharing the key prefix that exactly tiles the requested
/// range, in ascending offset order (combine). Tiling requires aligned chunk
/// boundaries: no gaps, no overlaps, no partial chunks.
pub fn match_block_prefix(
    req_key: &str,
    req_canon: &str,
    range: (u64, u64),
    cache: &CacheState,
    shield: &ShieldConfig,
) -> Option<(Scenario, Vec<u32>)> {
    let (off, len) = range;
    let end = off.checked_add(len)?;
    if shield.scenario_enabled[Scenario::DisassembleBlock.index()] {
        // Most recently accessed covering entry wins; newest insertion breaks ties.
        let mut best: Option<(u64, u64, u32)> = None;
        for idx in cache.entries_with_key(req_key) {
            let e = cache.get(idx);
            if e.canon_params == req_canon {
                continue;
            }
            let (d_off, d_len) = e.byte_range();
            if d_off <= off && end <= d_off + d_len {
                let cand = (e.last_access_time, e.seq, idx);
                if best.map_or(true, |(la, sq, _)| (e.last_access_time, e.seq) > (la, sq)) {
                    best = Some(cand);
                }
            }
        }
        if let Some((_, _, idx)) = best {
            return Some((Scenario::DisassembleBlock, alloc::vec![idx]));
        }
    }
    if shield.scenario_enabled[Scenario::CombineBlocks.index()] {
        let prefix = key_prefix(req_key);
        // Greedy walk by ascending offset: at each cursor pick the chunk
        // starting exactly there with the largest length that stays inside
        // the range.
        let mut by_offset: alloc::collections::BTreeMap<u64, Vec<u32>> =
            alloc::collections::BTreeMap::new();
        for idx in cache.entries_with_prefix(prefix) {
            let e = cache.get(idx);
            if e.modality != Modality::Block {
                continue;
            }
            let (d_off, d_len) = e.byte_range();
            if d_off >= off && d_off + d_len <= end {
                by_offset.entry(d_off).or_default().push(idx);
            }
        }
        let mut donors = Vec::new();
        let mut cursor = off;
        while cursor < end {
            let Some(cands) = by_offset.get(&cursor) else { break };
            let mut pick: Option<(u64, u64, u64, u32)> = None; // (len, last_access, seq, idx)
            for &idx in cands {
                let e = cache.get(idx);
                let (_, d_len) = e.byte_range();
                let cand = (d_len, e.last_access_time, e.seq);
                if pick.map_or(true, |(l, la, sq, _)| cand > (l, la, sq)) {
                    pick = Some((d_len, e.last_access_time, e.seq, idx));
                }
            }
            let (d_len, _, _, idx) = pick?;
            donors.push(idx);
            cursor += d_len;
        }
        if cursor == end && donors.len() >= 2 {
            return Some((Scenario::CombineBlocks, donors));
        }
    }
    None
}

/// Image donor search: a same-content donor is preferred (reshape or
/// reformat by which params differ); otherwise the minimum-Hamming donor
/// within the threshold (revise). Ties break toward the most recently
/// accessed donor.
pub fn match_image_similarity(
    req: &RequestRecord,
    cache: &CacheState,
    shield: &ShieldConfig,
) -> Option<(Scenario, u32)> {
    let mut best: Option<(u64, u64, u32)> = None;
    for idx in cache.entries_with_content(&req.content_id) {
        let e = cache.get(idx);
        if e.modality != Modality::Image {
            continue;
        }
        if best.map_or(true, |(la, sq, _)| (e.last_access_time, e.seq) > (la, sq)) {
            best = Some((e.last_access_time, e.seq, idx));
        }
    }
    if let Some((_, _, idx)) = best {
        let donor = cache.get(idx);
        let scenario = if donor.params.fmt_tag() != req.params.fmt_tag() {
            Scenario::ReformatImage
        } else {
            Scenario::ReshapeImage
        };
        if shield.scenario_enabled[scenario.index()] {
            return Some((scenario, idx));
        }
        return None;
    }
    if shield.scenario_enabled[Scenario::ReviseImage.index()] {
        let code = req.simhash?;
        let (idx, _dist) =
            cache.nearest_simhash(code, shield.hamming_threshold, &req.content_id)?;
        return Some((Scenario::ReviseImage, idx));
    }
    None
}
