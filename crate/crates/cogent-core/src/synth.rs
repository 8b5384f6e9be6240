//! Deterministic synthetic workload generator: Zipf-popular content groups,
//! Poisson arrivals, and per-group variant structure that exercises every
//! generative scenario (sub-range blocks, chunked blocks, resized and
//! reformatted images, near-duplicate similarity hashes).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::record::{hamming, Modality, ParamSet, RequestRecord};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthError {
    #[error("groups must be nonzero")]
    NoGroups,
    #[error("variants_per_group must be nonzero")]
    NoVariants,
    #[error("mean_interarrival_us must be positive")]
    BadInterarrival,
    #[error("size range [{0}, {1}] is empty or starts at zero")]
    BadSizeRange(u64, u64),
    #[error("block_fraction must lie in [0, 1]")]
    BadBlockFraction,
}

/// Generator parameters. One content group is one logical object family: a
/// block group is a whole object plus sub-range variants of it, an image
/// group is a set of derived renditions sharing a `content_id`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub groups: usize,
    pub variants_per_group: usize,
    pub requests: usize,
    /// Zipf popularity exponent over groups (group 0 most popular).
    pub zipf_alpha: f64,
    pub mean_interarrival_us: f64,
    pub seed: u64,
    /// Fraction of groups that are block groups; the rest are image groups.
    pub block_fraction: f64,
    pub size_min: u64,
    pub size_max: u64,
    /// Max Hamming distance between an image variant and its group base code.
    pub intra_group_distance: u32,
    /// Min Hamming distance enforced pairwise between group base codes.
    pub min_cross_group_distance: u32,
    /// Origin fetch latency stamped on every request, jittered uniformly in
    /// `base - jitter ..= base + jitter`.
    pub origin_base_us: u64,
    pub origin_jitter_us: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            groups: 100,
            variants_per_group: 4,
            requests: 10_000,
            zipf_alpha: 1.0,
            mean_interarrival_us: 1_000.0,
            seed: 1,
            block_fraction: 0.5,
            size_min: 64 * 1024,
            size_max: 256 * 1024,
            intra_group_distance: 2,
            min_cross_group_distance: 13,
            origin_base_us: 231_070,
            origin_jitter_us: 0,
        }
    }
}

fn uniform_f64(rng: &mut ChaCha12Rng) -> f64 {
    // 53 random bits in [0, 1).
    (rng.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

fn uniform_u64(rng: &mut ChaCha12Rng, lo: u64, hi: u64) -> u64 {
    debug_assert!(lo <= hi);
    let span = hi - lo + 1;
    lo + rng.next_u64() % span
}

fn exponential_us(rng: &mut ChaCha12Rng, mean: f64) -> u64 {
    let u = uniform_f64(rng);
    let x = -mean * libm::log(1.0 - u);
    if x < 0.0 { 0 } else { x as u64 }
}

/// Cumulative Zipf weights, normalized so the last entry is 1.0.
fn zipf_cdf(n: usize, alpha: f64) -> Vec<f64> {
    let mut cdf = Vec::with_capacity(n);
    let mut acc = 0.0;
    for rank in 1..=n {
        acc += libm::pow(rank as f64, -alpha);
        cdf.push(acc);
    }
    for v in cdf.iter_mut() {
        *v /= acc;
    }
    cdf
}

fn zipf_draw(rng: &mut ChaCha12Rng, cdf: &[f64]) -> usize {
    let u = uniform_f64(rng);
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

fn random_code(rng: &mut ChaCha12Rng) -> u128 {
    ((rng.next_u64() as u128) << 64) | rng.next_u64() as u128
}

/// Flips `bits` distinct random bit positions of `code`.
fn perturb(rng: &mut ChaCha12Rng, code: u128, bits: u32) -> u128 {
    let mut out = code;
    let mut flipped = 0u32;
    let mut mask = 0u128;
    while flipped < bits {
        let pos = (rng.next_u64() % 128) as u32;
        if mask >> pos & 1 == 0 {
            mask |= 1u128 << pos;
            out ^= 1u128 << pos;
            flipped += 1;
        }
    }
    out
}

struct Variant {
    key: String,
    params: ParamSet,
    size: u64,
    content_id: String,
    modality: Modality,
    format: String,
    simhash: Option<u128>,
}

const IMAGE_FORMATS: [&str; 3] = ["jpg", "png", "webp"];
const IMAGE_WIDTHS: [u64; 4] = [320, 640, 1280, 1920];

/// Generates the request trace. Deterministic in the spec, including the
/// seed; records come out in non-decreasing timestamp order.
pub fn generate(spec: &SyntheticSpec) -> Result<Vec<RequestRecord>, SynthError> {
    if spec.groups == 0 {
        return Err(SynthError::NoGroups);
    }
    if spec.variants_per_group == 0 {
        return Err(SynthError::NoVariants);
    }
    if !(spec.mean_interarrival_us > 0.0) {
        return Err(SynthError::BadInterarrival);
    }
    if spec.size_min == 0 || spec.size_min > spec.size_max {
        return Err(SynthError::BadSizeRange(spec.size_min, spec.size_max));
    }
    if !(0.0..=1.0).contains(&spec.block_fraction) {
        return Err(SynthError::BadBlockFraction);
    }
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);

    // Base codes kept pairwise far apart so image variants of different
    // groups never fall inside each other's similarity threshold.
    let mut base_codes: Vec<u128> = Vec::with_capacity(spec.groups);
    while base_codes.len() < spec.groups {
        let cand = random_code(&mut rng);
        if base_codes
            .iter()
            .all(|&b| hamming(b, cand) >= spec.min_cross_group_distance)
        {
            base_codes.push(cand);
        }
    }

    let block_groups = (spec.block_fraction * spec.groups as f64 + 0.5) as usize;
    let mut groups: Vec<Vec<Variant>> = Vec::with_capacity(spec.groups);
    for g in 0..spec.groups {
        let content_id = format!("g{g:05}");
        let base_size = uniform_u64(&mut rng, spec.size_min, spec.size_max);
        let mut variants = Vec::with_capacity(spec.variants_per_group);
        if g < block_groups {
            // Variant 0 is the whole object; the rest are aligned sub-ranges
            // so a cached whole object can serve them by disassembly.
            let chunks = (spec.variants_per_group - 1).max(1) as u64;
            let chunk = (base_size / chunks).max(1);
            variants.push(Variant {
                key: format!("{content_id}/obj"),
                params: ParamSet::empty(),
                size: base_size,
                content_id: content_id.clone(),
                modality: Modality::Block,
                format: String::from("raw"),
                simhash: None,
            });
            for v in 1..spec.variants_per_group {
                let off = (v as u64 - 1) * chunk;
                let len = if v == spec.variants_per_group - 1 {
                    base_size - off
                } else {
                    chunk
                };
                if off >= base_size || len == 0 {
                    break;
                }
                let params = ParamSet::from_pairs([
                    ("off", format!("{off}")),
                    ("len", format!("{len}")),
                ])
                .expect("off/len pairs are valid");
                variants.push(Variant {
                    key: format!("{content_id}/obj"),
                    params,
                    size: len,
                    content_id: content_id.clone(),
                    modality: Modality::Block,
                    format: String::from("raw"),
                    simhash: None,
                });
            }
        } else {
            let base = base_codes[g];
            for v in 0..spec.variants_per_group {
                let fmt = IMAGE_FORMATS[v % IMAGE_FORMATS.len()];
                let w = IMAGE_WIDTHS[v % IMAGE_WIDTHS.len()];
                let code = if v == 0 {
                    base
                } else {
                    let bits = uniform_u64(&mut rng, 0, spec.intra_group_distance as u64) as u32;
                    perturb(&mut rng, base, bits)
                };
                let params = ParamSet::from_pairs([("w", format!("{w}"))])
                    .expect("w pair is valid");
                // Smaller renditions for narrower widths.
                let size = (base_size * w / IMAGE_WIDTHS[IMAGE_WIDTHS.len() - 1]).max(1);
                variants.push(Variant {
                    key: format!("{content_id}/img{v}"),
                    params,
                    size,
                    content_id: content_id.clone(),
                    modality: Modality::Image,
                    format: String::from(fmt),
                    simhash: Some(code),
                });
            }
        }
        groups.push(variants);
    }

    let cdf = zipf_cdf(spec.groups, spec.zipf_alpha);
    let mut out = Vec::with_capacity(spec.requests);
    let mut now = 0u64;
    for _ in 0..spec.requests {
        now += exponential_us(&mut rng, spec.mean_interarrival_us);
        let g = zipf_draw(&mut rng, &cdf);
        let variants = &groups[g];
        let v = (rng.next_u64() % variants.len() as u64) as usize;
        let variant = &variants[v];
        let origin = if spec.origin_jitter_us == 0 {
            spec.origin_base_us
        } else {
            uniform_u64(
                &mut rng,
                spec.origin_base_us.saturating_sub(spec.origin_jitter_us).max(1),
                spec.origin_base_us + spec.origin_jitter_us,
            )
        };
        out.push(RequestRecord {
            timestamp: now,
            key: variant.key.clone(),
            params: variant.params.clone(),
            size: variant.size,
            content_id: variant.content_id.clone(),
            modality: variant.modality,
            format: variant.format.clone(),
            simhash: variant.simhash,
            origin_latency_override: Some(origin),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeMap;

    #[test]
    fn rejects_bad_specs() {
        let base = SyntheticSpec::default();
        assert_eq!(
            generate(&SyntheticSpec { groups: 0, ..base.clone() }),
            Err(SynthError::NoGroups)
        );
        assert_eq!(
            generate(&SyntheticSpec { variants_per_group: 0, ..base.clone() }),
            Err(SynthError::NoVariants)
        );
        assert_eq!(
            generate(&SyntheticSpec { mean_interarrival_us: 0.0, ..base.clone() }),
            Err(SynthError::BadInterarrival)
        );
        assert_eq!(
            generate(&SyntheticSpec { size_min: 10, size_max: 5, ..base.clone() }),
            Err(SynthError::BadSizeRange(10, 5))
        );
        assert_eq!(
            generate(&SyntheticSpec { block_fraction: 1.5, ..base }),
            Err(SynthError::BadBlockFraction)
        );
    }

    #[test]
    fn deterministic_in_seed() {
        let spec = SyntheticSpec { requests: 2_000, ..SyntheticSpec::default() };
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = generate(&SyntheticSpec { seed: 2, ..spec.clone() }).unwrap();
        assert_ne!(generate(&spec).unwrap(), other);
    }

    #[test]
    fn timestamps_nondecreasing_and_rates_match() {
        let spec = SyntheticSpec {
            requests: 50_000,
            mean_interarrival_us: 500.0,
            ..SyntheticSpec::default()
        };
        let trace = generate(&spec).unwrap();
        assert_eq!(trace.len(), 50_000);
        for w in trace.windows(2) {
            assert!(w[0].timestamp <= w[1].timestamp);
        }
        // Sample-mean inter-arrival should sit near the configured mean.
        let mean = trace.last().unwrap().timestamp as f64 / trace.len() as f64;
        assert!((mean - 500.0).abs() < 25.0, "observed mean {mean}");
    }

    #[test]
    fn group_popularity_matches_zipf_ks() {
        // KS distance between empirical and ideal Zipf(1) CDFs over 100
        // groups stays under 0.05 at 10^5 draws.
        let spec = SyntheticSpec {
            groups: 100,
            variants_per_group: 4,
            requests: 100_000,
            zipf_alpha: 1.0,
            ..SyntheticSpec::default()
        };
        let trace = generate(&spec).unwrap();
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for r in &trace {
            *counts.entry(r.content_id.clone()).or_insert(0) += 1;
        }
        let ideal = zipf_cdf(spec.groups, spec.zipf_alpha);
        let mut empirical = 0.0;
        let mut ks: f64 = 0.0;
        for g in 0..spec.groups {
            let c = counts.get(&format!("g{g:05}")).copied().unwrap_or(0);
            empirical += c as f64 / trace.len() as f64;
            ks = ks.max((empirical - ideal[g]).abs());
        }
        assert!(ks <= 0.05, "KS distance {ks}");
    }

    #[test]
    fn simhash_group_geometry() {
        // Same-group image variants sit within the intra distance of the
        // base; variants of different groups stay beyond the match
        // threshold that min_cross_group_distance = 8 + 2*2 + 1 guarantees.
        let spec = SyntheticSpec {
            groups: 40,
            block_fraction: 0.0,
            requests: 5_000,
            intra_group_distance: 2,
            min_cross_group_distance: 13,
            ..SyntheticSpec::default()
        };
        let trace = generate(&spec).unwrap();
        let mut by_group: BTreeMap<&str, Vec<u128>> = BTreeMap::new();
        for r in &trace {
            by_group
                .entry(r.content_id.as_str())
                .or_default()
                .push(r.simhash.expect("image records carry a code"));
        }
        let groups: Vec<(&str, Vec<u128>)> =
            by_group.into_iter().map(|(k, v)| (k, v)).collect();
        for (_, codes) in &groups {
            for pair in codes.windows(2) {
                assert!(hamming(pair[0], pair[1]) <= 2 * spec.intra_group_distance);
            }
        }
        for i in 0..groups.len() {
            for j in i + 1..groups.len() {
                for &a in groups[i].1.iter().take(8) {
                    for &b in groups[j].1.iter().take(8) {
                        assert!(hamming(a, b) > 8, "cross-group codes too close");
                    }
                }
            }
        }
    }

    #[test]
    fn block_variants_tile_the_object() {
        let spec = SyntheticSpec {
            groups: 10,
            block_fraction: 1.0,
            variants_per_group: 5,
            requests: 5_000,
            ..SyntheticSpec::default()
        };
        let trace = generate(&spec).unwrap();
        let mut whole: BTreeMap<&str, u64> = BTreeMap::new();
        let mut parts: BTreeMap<&str, Vec<(u64, u64)>> = BTreeMap::new();
        for r in &trace {
            assert_eq!(r.modality, Modality::Block);
            if r.params.is_empty() {
                whole.insert(r.key.as_str(), r.size);
            } else {
                let (off, len) = r.byte_range();
                parts.entry(r.key.as_str()).or_default().push((off, len));
            }
        }
        for (key, ranges) in parts {
            let total = *whole.get(key).expect("whole object requested too");
            let mut ranges = ranges;
            ranges.sort();
            ranges.dedup();
            let mut cursor = 0;
            for (off, len) in ranges {
                assert_eq!(off, cursor, "gap or overlap in {key}");
                cursor = off + len;
            }
            assert_eq!(cursor, total, "parts of {key} do not tile the object");
        }
    }

    #[test]
    fn origin_jitter_stays_in_band() {
        let spec = SyntheticSpec {
            requests: 3_000,
            origin_base_us: 231_070,
            origin_jitter_us: 80_000,
            ..SyntheticSpec::default()
        };
        let trace = generate(&spec).unwrap();
        let mut lo = u64::MAX;
        let mut hi = 0;
        for r in &trace {
            let o = r.origin_latency_override.unwrap();
            assert!((151_070..=311_070).contains(&o));
            lo = lo.min(o);
            hi = hi.max(o);
        }
        // Jitter should actually spread the values.
        assert!(hi - lo > 100_000, "span {}", hi - lo);
        let flat = generate(&SyntheticSpec { origin_jitter_us: 0, ..spec }).unwrap();
        assert!(flat.iter().all(|r| r.origin_latency_override == Some(231_070)));
    }

    #[test]
    fn perturb_flips_exact_bit_count() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for bits in [0u32, 1, 4, 8, 16] {
            let code = random_code(&mut rng);
            let p = perturb(&mut rng, code, bits);
            assert_eq!(hamming(code, p), bits);
        }
    }
}
