//! Request records, parameter sets, and the content-descriptor vocabulary
//! shared by every other module.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

/// Data modality of a request or cached object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub enum Modality {
    Block,
    Image,
    Other,
}

impl Modality {
    pub fn as_str(&self) -> &'static str {
        match self {
            Modality::Block => "block",
            Modality::Image => "image",
            Modality::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Modality> {
        match s {
            "block" => Some(Modality::Block),
            "image" => Some(Modality::Image),
            "other" => Some(Modality::Other),
            _ => None,
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Keys with numeric values; validated on parse.
const NUMERIC_KEYS: &[&str] = &["off", "len", "w", "h", "q"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParamError {
    #[error("malformed parameter pair `{0}` (expected key=value)")]
    MalformedPair(String),
    #[error("duplicate parameter key `{0}`")]
    DuplicateKey(String),
    #[error("parameter `{key}` must be a non-negative integer, got `{value}`")]
    NotNumeric { key: String, value: String },
    #[error("parameter `len` must be > 0")]
    ZeroLen,
}

/// An ordered set of `key=value` request parameters.
///
/// Pairs are kept sorted by key so the canonical serialization (and thus
/// equality) is well-defined. Recognized numeric keys: `off`, `len`, `w`,
/// `h`, `q`; `fmt` is a free-form format tag; anything else rides along.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ParamSet {
    pairs: Vec<(String, String)>,
}

impl ParamSet {
    pub fn empty() -> Self {
        ParamSet { pairs: Vec::new() }
    }

    /// Builds a set from arbitrary pairs, sorting and validating them.
    pub fn from_pairs<I, K, V>(pairs: I) -> Result<Self, ParamError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        let mut v: Vec<(String, String)> = pairs
            .into_iter()
            .map(|(k, val)| (k.into(), val.into()))
            .collect();
        v.sort();
        for w in v.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(ParamError::DuplicateKey(w[0].0.clone()));
            }
        }
        for (k, val) in &v {
            if NUMERIC_KEYS.contains(&k.as_str()) {
                let n: u64 = val
                    .parse()
                    .map_err(|_| ParamError::NotNumeric { key: k.clone(), value: val.clone() })?;
                if k == "len" && n == 0 {
                    return Err(ParamError::ZeroLen);
                }
            }
        }
        Ok(ParamSet { pairs: v })
    }

    /// Parses the canonical `k=v;k=v` form. An empty string is the empty set.
    pub fn parse(s: &str) -> Result<Self, ParamError> {
        if s.is_empty() {
            return Ok(ParamSet::empty());
        }
        let mut pairs = Vec::new();
        for piece in s.split(';') {
            let (k, v) = piece
                .split_once('=')
                .ok_or_else(|| ParamError::MalformedPair(piece.to_string()))?;
            if k.is_empty() {
                return Err(ParamError::MalformedPair(piece.to_string()));
            }
            pairs.push((k, v));
        }
        ParamSet::from_pairs(pairs)
    }

    /// Canonical serialization: keys sorted lexicographically, `;`-joined.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (i, (k, v)) in self.pairs.iter().enumerate() {
            if i > 0 {
                out.push(';');
            }
            out.push_str(k);
            out.push('=');
            out.push_str(v);
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs
            .binary_search_by(|(k, _)| k.as_str().cmp(key))
            .ok()
            .map(|i| self.pairs[i].1.as_str())
    }

    pub fn get_u64(&self, key: &str) -> Option<u64> {
        self.get(key).and_then(|v| v.parse().ok())
    }

    pub fn off(&self) -> Option<u64> {
        self.get_u64("off")
    }

    pub fn len_bytes(&self) -> Option<u64> {
        self.get_u64("len")
    }

    pub fn fmt_tag(&self) -> Option<&str> {
        self.get("fmt")
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    /// True when the two sets differ only in the listed keys.
    pub fn differs_only_in(&self, other: &ParamSet, keys: &[&str]) -> bool {
        let mine: Vec<_> = self.pairs.iter().filter(|(k, _)| !keys.contains(&k.as_str())).collect();
        let theirs: Vec<_> =
            other.pairs.iter().filter(|(k, _)| !keys.contains(&k.as_str())).collect();
        mine == theirs
    }
}

impl fmt::Display for ParamSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimHashError {
    #[error("similarity hash must be exactly 32 hex digits, got {0} chars")]
    BadLength(usize),
    #[error("similarity hash contains a non-hex digit")]
    BadDigit,
}

/// Parses a 128-bit similarity hash from its 32-digit hex form.
pub fn parse_simhash(s: &str) -> Result<u128, SimHashError> {
    if s.len() != 32 {
        return Err(SimHashError::BadLength(s.len()));
    }
    u128::from_str_radix(s, 16).map_err(|_| SimHashError::BadDigit)
}

pub fn format_simhash(code: u128) -> String {
    alloc::format!("{code:032x}")
}

/// Hamming distance between two 128-bit similarity hashes.
#[inline]
pub fn hamming(a: u128, b: u128) -> u32 {
    (a ^ b).count_ones()
}

/// One trace line: a single request observed at the edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestRecord {
    /// Microseconds since trace start.
    pub timestamp: u64,
    /// Object name. Block data uses the `<content_id>/<object_name>` grammar.
    pub key: String,
    pub params: ParamSet,
    /// Bytes requested; always > 0.
    pub size: u64,
    /// Opaque content-group identifier.
    pub content_id: String,
    pub modality: Modality,
    /// Container/codec/image format tag.
    pub format: String,
    /// 128-bit similarity hash, when the trace supplies one.
    pub simhash: Option<u128>,
    /// Per-request origin fetch latency, overriding the model constant.
    pub origin_latency_override: Option<u64>,
}

impl RequestRecord {
    /// Key prefix up to the first `/`, used for block donor matching.
    /// Keys without a `/` are their own prefix.
    pub fn key_prefix(&self) -> &str {
        key_prefix(&self.key)
    }

    /// Requested byte range: explicit `off`/`len` params, else the whole
    /// object `[0, size)`.
    pub fn byte_range(&self) -> (u64, u64) {
        let off = self.params.off().unwrap_or(0);
        let len = self.params.len_bytes().unwrap_or(self.size);
        (off, len)
    }
}

pub fn key_prefix(key: &str) -> &str {
    match key.find('/') {
        Some(i) => &key[..i],
        None => key,
    }
}

/// Aggregate statistics over a record sequence.
#[derive(Debug, Clone, PartialEq, serde::Serialize, Default)]
pub struct TraceStats {
    pub records: u64,
    pub unique_keys: u64,
    pub unique_content_ids: u64,
    pub byte_volume: u64,
    pub duration_us: u64,
}

impl TraceStats {
    pub fn compute(records: &[RequestRecord]) -> TraceStats {
        use alloc::collections::BTreeSet;
        let mut keys = BTreeSet::new();
        let mut cids = BTreeSet::new();
        let mut bytes = 0u64;
        for r in records {
            keys.insert(r.key.as_str());
            cids.insert(r.content_id.as_str());
            bytes += r.size;
        }
        let duration = match (records.first(), records.last()) {
            (Some(a), Some(b)) => b.timestamp - a.timestamp,
            _ => 0,
        };
        TraceStats {
            records: records.len() as u64,
            unique_keys: keys.len() as u64,
            unique_content_ids: cids.len() as u64,
            byte_volume: bytes,
            duration_us: duration,
        }
    }
}
