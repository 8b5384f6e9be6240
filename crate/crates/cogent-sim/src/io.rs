//! Trace CSV and decision-tree file formats.
//!
//! A trace is a header line plus one request per line:
//! `ts_us,key,params,size,content_id,modality,format,simhash,origin_lat_us`.
//! `params` is the canonical `k=v;k=v` form (empty = no params); `simhash`
//! is 32 hex digits or empty; `origin_lat_us` empty means "use the model
//! default". Keys and params never contain commas, so no quoting is needed.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use cogent_core::controller::DecisionTree;
use cogent_core::record::{
    format_simhash, parse_simhash, Modality, ParamSet, RequestRecord,
};

pub const TRACE_HEADER: &str =
    "ts_us,key,params,size,content_id,modality,format,simhash,origin_lat_us";

#[derive(Debug, thiserror::Error)]
pub enum TraceIoError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad header: expected `{TRACE_HEADER}`, found `{0}`")]
    Header(String),
    #[error("line {line}: expected 9 fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: bad {field}: {detail}")]
    Field { line: usize, field: &'static str, detail: String },
    #[error("line {line}: timestamp regresses")]
    TimestampRegression { line: usize },
}

fn field_err(line: usize, field: &'static str, detail: impl ToString) -> TraceIoError {
    TraceIoError::Field { line, field, detail: detail.to_string() }
}

pub fn parse_trace(reader: impl Read) -> Result<Vec<RequestRecord>, TraceIoError> {
    let mut lines = BufReader::new(reader).lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim_end() != TRACE_HEADER {
        return Err(TraceIoError::Header(header));
    }
    let mut out = Vec::new();
    let mut last_ts = 0u64;
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2; // 1-based, after the header
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(TraceIoError::FieldCount { line: lineno, found: fields.len() });
        }
        let timestamp: u64 = fields[0]
            .parse()
            .map_err(|e| field_err(lineno, "ts_us", e))?;
        if timestamp < last_ts {
            return Err(TraceIoError::TimestampRegression { line: lineno });
        }
        last_ts = timestamp;
        let key = fields[1].to_string();
        if key.is_empty() {
            return Err(field_err(lineno, "key", "empty"));
        }
        let params = ParamSet::parse(fields[2]).map_err(|e| field_err(lineno, "params", e))?;
        let size: u64 = fields[3].parse().map_err(|e| field_err(lineno, "size", e))?;
        if size == 0 {
            return Err(field_err(lineno, "size", "must be nonzero"));
        }
        let content_id = fields[4].to_string();
        if content_id.is_empty() {
            return Err(field_err(lineno, "content_id", "empty"));
        }
        let modality = Modality::parse(fields[5])
            .ok_or_else(|| field_err(lineno, "modality", fields[5]))?;
        let format = fields[6].to_string();
        let simhash = if fields[7].is_empty() {
            None
        } else {
            Some(parse_simhash(fields[7]).map_err(|e| field_err(lineno, "simhash", e))?)
        };
        let origin_latency_override = if fields[8].is_empty() {
            None
        } else {
            Some(fields[8].parse().map_err(|e| field_err(lineno, "origin_lat_us", e))?)
        };
        out.push(RequestRecord {
            timestamp,
            key,
            params,
            size,
            content_id,
            modality,
            format,
            simhash,
            origin_latency_override,
        });
    }
    Ok(out)
}

pub fn write_trace(mut writer: impl Write, trace: &[RequestRecord]) -> std::io::Result<()> {
    writeln!(writer, "{TRACE_HEADER}")?;
    for r in trace {
        writeln!(
            writer,
            "{},{},{},{},{},{},{},{},{}",
            r.timestamp,
            r.key,
            r.params.canonical(),
            r.size,
            r.content_id,
            r.modality.as_str(),
            r.format,
            r.simhash.map(format_simhash).unwrap_or_default(),
            r.origin_latency_override
                .map(|v| v.to_string())
                .unwrap_or_default(),
        )?;
    }
    Ok(())
}

pub fn read_trace_file(path: impl AsRef<Path>) -> Result<Vec<RequestRecord>, TraceIoError> {
    parse_trace(fs::File::open(path)?)
}

pub fn write_trace_file(
    path: impl AsRef<Path>,
    trace: &[RequestRecord],
) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    write_trace(&mut f, trace)?;
    f.flush()
}

pub fn read_tree_file(path: impl AsRef<Path>) -> anyhow::Result<DecisionTree> {
    let text = fs::read_to_string(path.as_ref())?;
    DecisionTree::from_text(&text)
        .map_err(|e| anyhow::anyhow!("{}: {e}", path.as_ref().display()))
}

pub fn write_tree_file(path: impl AsRef<Path>, tree: &DecisionTree) -> std::io::Result<()> {
    fs::write(path, tree.to_text())
}

#[cfg(test)]
mod tests {
    use super::*;
    use cogent_core::synth::{generate, SyntheticSpec};

    #[test]
    fn roundtrip_1000_rows() {
        let trace = generate(&SyntheticSpec {
            requests: 1_000,
            origin_jitter_us: 40_000,
            ..SyntheticSpec::default()
        })
        .unwrap();
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace).unwrap();
        let parsed = parse_trace(buf.as_slice()).unwrap();
        assert_eq!(trace, parsed);
    }

    #[test]
    fn rejects_malformed_input() {
        let ok = format!("{TRACE_HEADER}\n0,a/x,,100,a,block,raw,,\n");
        assert_eq!(parse_trace(ok.as_bytes()).unwrap().len(), 1);

        let cases: Vec<(String, &str)> = vec![
            ("nonsense\n".into(), "header"),
            (format!("{TRACE_HEADER}\n0,a/x,,100,a,block,raw\n"), "field count"),
            (format!("{TRACE_HEADER}\nxx,a/x,,100,a,block,raw,,\n"), "timestamp"),
            (format!("{TRACE_HEADER}\n0,,,100,a,block,raw,,\n"), "empty key"),
            (format!("{TRACE_HEADER}\n0,a/x,,0,a,block,raw,,\n"), "zero size"),
            (format!("{TRACE_HEADER}\n0,a/x,,100,a,video,raw,,\n"), "modality"),
            (format!("{TRACE_HEADER}\n0,a/x,,100,a,block,raw,zz,\n"), "simhash"),
            (format!("{TRACE_HEADER}\n0,a/x,len=0;off=1,100,a,block,raw,,\n"), "params"),
            (
                format!("{TRACE_HEADER}\n5,a/x,,100,a,block,raw,,\n4,a/y,,100,a,block,raw,,\n"),
                "regression",
            ),
        ];
        for (text, what) in cases {
            assert!(parse_trace(text.as_bytes()).is_err(), "accepted bad {what}");
        }
    }

    #[test]
    fn error_lines_are_1_based_including_header() {
        let text = format!("{TRACE_HEADER}\n0,a/x,,100,a,block,raw,,\n1,a/y,,bad,a,block,raw,,\n");
        match parse_trace(text.as_bytes()) {
            Err(TraceIoError::Field { line, field, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(field, "size");
            }
            other => panic!("unexpected: {other:?}"),
        }
    }
}
