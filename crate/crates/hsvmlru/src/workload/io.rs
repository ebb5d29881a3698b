//! JSONL readers and writers for block catalogs and traces.
//!
//! Both formats are one JSON object per LF-terminated line. Writing a parsed
//! trace reproduces the input byte for byte (canonical field order, shortest
//! float forms).

use super::{BlockId, DataBlock, Request, Trace, TraceMeta};
use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};

/// Writes `blocks.jsonl`: `{"id":…,"size_mb":…,"type":…,"replicas":[…]}`.
pub fn write_catalog<W: Write>(catalog: &BTreeMap<BlockId, DataBlock>, mut w: W) -> Result<()> {
    for block in catalog.values() {
        serde_json::to_writer(&mut w, block)?;
        w.write_all(b"\n").map_err(|e| Error::io("<catalog>", e))?;
    }
    Ok(())
}

pub fn parse_catalog<R: BufRead>(r: R) -> Result<BTreeMap<BlockId, DataBlock>> {
    let mut catalog = BTreeMap::new();
    for (i, line) in r.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io("<catalog>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let block: DataBlock = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            line: lineno,
            msg: e.to_string(),
        })?;
        if block.size_mb == 0 {
            return Err(Error::MalformedLine {
                line: lineno,
                msg: format!("block {} has zero size", block.id),
            });
        }
        if block.replicas.is_empty() {
            return Err(Error::MalformedLine {
                line: lineno,
                msg: format!("block {} has no replicas", block.id),
            });
        }
        catalog.insert(block.id.clone(), block);
    }
    Ok(catalog)
}

/// Writes `trace.jsonl`: one request per line in canonical field order.
pub fn write_trace<W: Write>(trace: &Trace, mut w: W) -> Result<()> {
    for req in &trace.requests {
        serde_json::to_writer(&mut w, req)?;
        w.write_all(b"\n").map_err(|e| Error::io("<trace>", e))?;
    }
    Ok(())
}

/// Parses `trace.jsonl` against an already-parsed catalog.
///
/// Rejects empty inputs, requests naming uncataloged blocks, and any line
/// whose `seq` fails to increase over the previous line.
pub fn parse_trace<R: BufRead>(r: R, catalog: BTreeMap<BlockId, DataBlock>) -> Result<Trace> {
    let mut requests: Vec<Request> = Vec::new();
    let mut prev_seq: Option<u64> = None;
    for (i, line) in r.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io("<trace>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let req: Request = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            line: lineno,
            msg: e.to_string(),
        })?;
        if !catalog.contains_key(&req.block) {
            return Err(Error::MalformedLine {
                line: lineno,
                msg: format!("unknown block {}", req.block),
            });
        }
        if let Some(prev) = prev_seq {
            if req.seq <= prev {
                return Err(Error::NonMonotoneSeq {
                    line: lineno,
                    seq: req.seq,
                    prev,
                });
            }
        }
        prev_seq = Some(req.seq);
        requests.push(req);
    }
    if requests.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let trace = Trace {
        requests,
        catalog,
        meta: TraceMeta::default(),
    };
    trace.validate()?;
    Ok(trace)
}
