//! CSV encodings of traces, benchmark runs and plot data.
//!
//! Floats are written in their shortest round-trip form, so reading a file back gives
//! the written values bit for bit. The header row of each file is part of the format.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{Method, Status, Trace};

use super::RunRecord;

/// One row of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub x: Vec<f64>,
    pub norm_u: f64,
    pub phi: f64,
    /// Empty at the terminal iterate.
    pub t: Option<f64>,
    pub q: Option<u32>,
    pub varsigma: f64,
    pub gap: f64,
    pub skips: usize,
    pub millis: f64,
}

impl TraceRow {
    pub fn rows(trace: &Trace) -> Vec<TraceRow> {
        trace
            .records
            .iter()
            .map(|r| TraceRow {
                k: r.k,
                x: r.x.clone(),
                norm_u: r.norm_u,
                phi: r.phi,
                t: r.t,
                q: r.q,
                varsigma: r.varsigma,
                gap: r.gap,
                skips: r.skips,
                millis: r.millis,
            })
            .collect()
    }
}

fn num(v: f64) -> String {
    // Debug is the shortest representation that parses back to the same bits
    format!("{v:?}")
}

fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}{i}"))
}

fn bad(line: u64, message: impl Into<String>) -> Error {
    Error::Format {
        section: "csv".into(),
        line: line as usize,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, name: &str) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec
        .get(idx)
        .ok_or_else(|| bad(line, format!("missing column {name}")))?;
    raw.parse()
        .map_err(|_| bad(line, format!("column {name}: cannot parse {raw:?}")))
}

fn optional<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    idx: usize,
    name: &str,
) -> Result<Option<T>> {
    if rec.get(idx).is_some_and(str::is_empty) {
        Ok(None)
    } else {
        field(rec, idx, name).map(Some)
    }
}

/// Header: `k,x1..xn,norm_u,phi,t,q,varsigma,gap,skips,millis`.
pub fn write_trace_csv<W: Write>(out: W, n: usize, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["k".to_string()];
    header.extend(indexed("x", n));
    header.extend(
        [
            "norm_u", "phi", "t", "q", "varsigma", "gap", "skips", "millis",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    w.write_record(&header)?;
    for r in rows {
        if r.x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: r.x.len(),
            });
        }
        let mut rec = vec![r.k.to_string()];
        rec.extend(r.x.iter().copied().map(num));
        rec.push(num(r.norm_u));
        rec.push(num(r.phi));
        rec.push(r.t.map(num).unwrap_or_default());
        rec.push(r.q.map(|q| q.to_string()).unwrap_or_default());
        rec.push(num(r.varsigma));
        rec.push(num(r.gap));
        rec.push(r.skips.to_string());
        rec.push(num(r.millis));
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_trace_csv<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.len() < 10 || header.get(0) != Some("k") {
        return Err(bad(1, "not a trace file"));
    }
    let n = header.len() - 9;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let x = (0..n)
            .map(|j| field(&rec, 1 + j, &format!("x{}", j + 1)))
            .collect::<Result<_>>()?;
        rows.push(TraceRow {
            k: field(&rec, 0, "k")?,
            x,
            norm_u: field(&rec, n + 1, "norm_u")?,
            phi: field(&rec, n + 2, "phi")?,
            t: optional(&rec, n + 3, "t")?,
            q: optional(&rec, n + 4, "q")?,
            varsigma: field(&rec, n + 5, "varsigma")?,
            gap: field(&rec, n + 6, "gap")?,
            skips: field(&rec, n + 7, "skips")?,
            millis: field(&rec, n + 8, "millis")?,
        });
    }
    Ok(rows)
}

/// Header: `start,method,status,iterations,seconds,x0_1..x0_n,final_1..final_n`.
pub fn write_runs_csv<W: Write>(out: W, n: usize, runs: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["start", "method", "status", "iterations", "seconds"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(indexed("x0_", n));
    header.extend(indexed("final_", n));
    w.write_record(&header)?;
    for r in runs {
        let mut rec = vec![
            r.start.to_string(),
            r.method.short_name().to_string(),
            r.status.as_str().to_string(),
            r.iterations.to_string(),
            num(r.seconds),
        ];
        rec.extend(r.x0.iter().copied().map(num));
        rec.extend(r.final_x.iter().copied().map(num));
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_runs_csv<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.len() < 7 || (header.len() - 5) % 2 != 0 || header.get(0) != Some("start") {
        return Err(bad(1, "not a runs file"));
    }
    let n = (header.len() - 5) / 2;
    let mut runs = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let method: Method = field::<String>(&rec, 1, "method")?
            .parse()
            .map_err(|e: Error| bad(line, e.to_string()))?;
        let status_raw: String = field(&rec, 2, "status")?;
        let status = Status::parse(&status_raw)
            .ok_or_else(|| bad(line, format!("unknown status {status_raw:?}")))?;
        runs.push(RunRecord {
            start: field(&rec, 0, "start")?,
            method,
            status,
            iterations: field(&rec, 3, "iterations")?,
            seconds: field(&rec, 4, "seconds")?,
            x0: (0..n)
                .map(|j| field(&rec, 5 + j, "x0"))
                .collect::<Result<_>>()?,
            final_x: (0..n)
                .map(|j| field(&rec, 5 + n + j, "final"))
                .collect::<Result<_>>()?,
        });
    }
    Ok(runs)
}

/// Header: `k,i,y1..ym`, one row per image point per recorded iteration (`i` is 1-based).
pub fn write_images_csv<W: Write>(out: W, m: usize, trace: &Trace) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["k".to_string(), "i".to_string()];
    header.extend(indexed("y", m));
    w.write_record(&header)?;
    for r in &trace.records {
        let Some(images) = &r.images else { continue };
        for (i, y) in images.iter().enumerate() {
            let mut rec = vec![r.k.to_string(), (i + 1).to_string()];
            rec.extend(y.iter().copied().map(num));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Header: `k,x1..xn`.
pub fn write_iterates_csv<W: Write>(out: W, n: usize, trace: &Trace) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["k".to_string()];
    header.extend(indexed("x", n));
    w.write_record(&header)?;
    for r in &trace.records {
        let mut rec = vec![r.k.to_string()];
        rec.extend(r.x.iter().copied().map(num));
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_round_trip() {
        let rows = vec![
            TraceRow {
                k: 0,
                x: vec![2.3, -1e-300],
                norm_u: 0.1 + 0.2,
                phi: -1.0 / 3.0,
                t: Some(0.6f64.powi(7)),
                q: Some(7),
                varsigma: f64::from_bits(23.8454f64.to_bits() + 1),
                gap: 0.0,
                skips: 2,
                millis: 1.25,
            },
            TraceRow {
                k: 1,
                x: vec![f64::MAX, 5e-324],
                norm_u: 1e-4,
                phi: -0.0,
                t: None,
                q: None,
                varsigma: -7.0,
                gap: 1e-17,
                skips: 0,
                millis: 3.0,
            },
        ];
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, 2, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("k,x1,x2,norm_u,phi,t,q,varsigma,gap,skips,millis\n"));
        let back = read_trace_csv(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
        assert_eq!(back[1].phi.to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn runs_round_trip() {
        let runs = vec![RunRecord {
            start: 3,
            method: Method::SteepestDescent,
            status: Status::MaxIterations,
            iterations: 100,
            seconds: 0.012_345_678_9,
            x0: vec![-4.2],
            final_x: vec![1.7],
        }];
        let mut buf = Vec::new();
        write_runs_csv(&mut buf, 1, &runs).unwrap();
        assert_eq!(read_runs_csv(buf.as_slice()).unwrap(), runs);
    }

    #[test]
    fn rejects_foreign_files() {
        assert!(read_trace_csv("a,b\n1,2\n".as_bytes()).is_err());
        assert!(read_runs_csv("k,x1\n".as_bytes()).is_err());
    }
}
