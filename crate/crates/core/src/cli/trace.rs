//! CSV trace of a closed-loop run.
//!
//! Header: `t,mu,k,blocked,mu_bar,norm_x,y_1..y_m,x_1..x_n`. Floats carry 17
//! significant digits so a trace round-trips losslessly.

use std::io::{Read, Write};

use crate::{Error, Result};

/// Relative slack on `μ ≤ μ̄` when validating blocked rows.
const MU_BAR_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    /// Graininess of `t`; zero on dense points.
    pub mu: f64,
    pub k: f64,
    pub blocked: bool,
    pub mu_bar: f64,
    pub norm_x: f64,
    pub y: Vec<f64>,
    pub x: Vec<f64>,
}

pub fn header(m: usize, n: usize) -> Vec<String> {
    let mut h: Vec<String> =
        ["t", "mu", "k", "blocked", "mu_bar", "norm_x"].iter().map(|s| s.to_string()).collect();
    h.extend((1..=m).map(|i| format!("y_{i}")));
    h.extend((1..=n).map(|i| format!("x_{i}")));
    h
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trace<W: Write>(out: W, m: usize, n: usize, records: &[TraceRecord]) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidArgument(format!("writing trace: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(m, n)).map_err(io)?;
    for r in records {
        if r.y.len() != m || r.x.len() != n {
            return Err(Error::invalid("trace record does not match header dimensions"));
        }
        let mut row = vec![
            fmt(r.t),
            fmt(r.mu),
            fmt(r.k),
            if r.blocked { "1" } else { "0" }.to_string(),
            fmt(r.mu_bar),
            fmt(r.norm_x),
        ];
        row.extend(r.y.iter().chain(&r.x).map(|v| fmt(*v)));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidArgument(format!("writing trace: {e}")))?;
    Ok(())
}

/// A parsed trace with its output and state dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub m: usize,
    pub n: usize,
    pub records: Vec<TraceRecord>,
}

/// Reads and validates a trace: exact header, `t` strictly increasing, `k`
/// nondecreasing, and `μ ≤ μ̄` on blocked rows.
pub fn read_trace<R: Read>(input: R) -> Result<Trace> {
    let mut rdr = csv::Reader::from_reader(input);
    let hdr = rdr.headers().map_err(|e| Error::invalid(format!("trace header: {e}")))?.clone();
    let names: Vec<&str> = hdr.iter().collect();
    let m = names.iter().filter(|s| s.starts_with("y_")).count();
    let n = names.iter().filter(|s| s.starts_with("x_")).count();
    if names != header(m, n).iter().map(String::as_str).collect::<Vec<_>>() || n == 0 || m == 0 {
        return Err(Error::invalid(format!("unexpected trace header '{}'", names.join(","))));
    }
    let mut records: Vec<TraceRecord> = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::invalid(format!("trace line {line}: {e}")))?;
        let num = |j: usize| -> Result<f64> {
            row[j]
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("trace line {line}: bad number '{}'", &row[j])))
        };
        let blocked = match &row[3] {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::invalid(format!(
                    "trace line {line}: bad blocked flag '{other}'"
                )))
            }
        };
        let r = TraceRecord {
            t: num(0)?,
            mu: num(1)?,
            k: num(2)?,
            blocked,
            mu_bar: num(4)?,
            norm_x: num(5)?,
            y: (6..6 + m).map(&num).collect::<Result<_>>()?,
            x: (6 + m..6 + m + n).map(&num).collect::<Result<_>>()?,
        };
        if let Some(prev) = records.last() {
            if !(r.t > prev.t) {
                return Err(Error::invalid(format!("trace line {line}: t is not increasing")));
            }
            if r.k < prev.k {
                return Err(Error::invalid(format!("trace line {line}: k decreased")));
            }
        }
        if r.mu < 0.0 {
            return Err(Error::invalid(format!("trace line {line}: negative mu")));
        }
        if r.blocked && r.mu > r.mu_bar * (1.0 + MU_BAR_SLACK) {
            return Err(Error::invalid(format!("trace line {line}: mu exceeds mu_bar on a block")));
        }
        records.push(r);
    }
    if records.is_empty() {
        return Err(Error::invalid("trace has no rows"));
    }
    Ok(Trace { m, n, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: f64, k: f64) -> TraceRecord {
        TraceRecord {
            t,
            mu: 0.0,
            k,
            blocked: false,
            mu_bar: 1.9 / k,
            norm_x: 0.1 + t,
            y: vec![t / 3.0],
            x: vec![0.1 + t, -1.0 / 7.0],
        }
    }

    #[test]
    fn header_is_exact() {
        assert_eq!(header(1, 2).join(","), "t,mu,k,blocked,mu_bar,norm_x,y_1,x_1,x_2");
    }

    #[test]
    fn round_trip_is_lossless() {
        let records = vec![rec(0.0, 0.5), rec(0.1, 0.6), rec(0.2, 0.6)];
        let mut buf = Vec::new();
        write_trace(&mut buf, 1, 2, &records).unwrap();
        let back = read_trace(buf.as_slice()).unwrap();
        assert_eq!(back.records, records);
        assert_eq!((back.m, back.n), (1, 2));
    }

    #[test]
    fn rejects_invariant_violations() {
        let mut buf = Vec::new();
        write_trace(&mut buf, 1, 2, &[rec(0.0, 0.6), rec(0.1, 0.5)]).unwrap();
        assert!(read_trace(buf.as_slice()).is_err());

        let mut buf = Vec::new();
        write_trace(&mut buf, 1, 2, &[rec(0.1, 0.5), rec(0.1, 0.5)]).unwrap();
        assert!(read_trace(buf.as_slice()).is_err());

        let mut bad = rec(0.0, 1.0);
        bad.blocked = true;
        bad.mu = 2.0;
        let mut buf = Vec::new();
        write_trace(&mut buf, 1, 2, &[bad]).unwrap();
        assert!(read_trace(buf.as_slice()).is_err());

        assert!(read_trace("t,mu\n1,2\n".as_bytes()).is_err());
        assert!(read_trace("".as_bytes()).is_err());
    }
}
