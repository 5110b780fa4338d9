//! Text formats owned by the CLI: the configuration-IP-with-solution input
//! consumed by `thin`, and the bench manifest.
//!
//! The `thin` input looks like:
//!
//! ```text
//! d T
//! pi_1 ... pi_d
//! b_1 ... b_d
//! m
//! k
//! (c_1,...,c_d) x
//! ...           (k lines)
//! ```

use confip::confip::{ConfIp, ConfSolution};
use confip::error::Error;
use confip::knapsack::{Configuration, KnapsackSpec};

fn parse_numbers(line: &str, lineno: usize) -> Result<Vec<u64>, Error> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<u64>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("expected an integer, found {tok:?}"),
            })
        })
        .collect()
}

/// Parses a `ConfIp` plus a candidate solution from the documented format.
pub fn parse_confip_with_solution(text: &str) -> Result<(ConfIp, ConfSolution), Error> {
    let mut lines = text.lines().enumerate();
    let mut next_line = |what: &str| {
        lines.next().ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("missing {what} line"),
        })
    };
    let (no, header) = next_line("d T")?;
    let head = parse_numbers(header, no + 1)?;
    if head.len() != 2 {
        return Err(Error::Parse {
            line: no + 1,
            message: "expected \"d T\"".into(),
        });
    }
    let (d, t) = (head[0] as usize, head[1]);
    let (no, sizes_line) = next_line("sizes")?;
    let sizes = parse_numbers(sizes_line, no + 1)?;
    if sizes.len() != d {
        return Err(Error::Parse {
            line: no + 1,
            message: format!("expected {d} sizes"),
        });
    }
    let (no, demand_line) = next_line("demand")?;
    let demand = parse_numbers(demand_line, no + 1)?;
    if demand.len() != d {
        return Err(Error::Parse {
            line: no + 1,
            message: format!("expected {d} demands"),
        });
    }
    let (no, m_line) = next_line("machine count")?;
    let m = parse_numbers(m_line, no + 1)?;
    if m.len() != 1 {
        return Err(Error::Parse {
            line: no + 1,
            message: "expected a single machine count".into(),
        });
    }
    let (no, k_line) = next_line("support size")?;
    let k = parse_numbers(k_line, no + 1)?;
    if k.len() != 1 {
        return Err(Error::Parse {
            line: no + 1,
            message: "expected a single support size".into(),
        });
    }
    let mut entries = Vec::new();
    for _ in 0..k[0] {
        let (no, entry) = next_line("solution entry")?;
        let mut parts = entry.split_whitespace();
        let config: Configuration = parts
            .next()
            .ok_or(Error::Parse {
                line: no + 1,
                message: "missing configuration".into(),
            })?
            .parse()?;
        let count: u64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or(Error::Parse {
                line: no + 1,
                message: "missing multiplicity".into(),
            })?;
        entries.push((config, count));
    }
    let spec = KnapsackSpec::new(sizes, t)?;
    let ip = ConfIp::new(spec, demand, m[0])?;
    Ok((ip, ConfSolution::from_entries(entries)))
}

/// One row of the bench manifest.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub id: String,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub pmax: u64,
    pub eps: String,
    pub mode: String,
}

/// Parses the manifest CSV: `id,seed,n,m,pmax,eps,mode` with a header line.
pub fn parse_manifest(text: &str) -> Result<Vec<BenchRow>, Error> {
    let mut rows = Vec::new();
    for (no, line) in text.lines().enumerate() {
        if no == 0 {
            if line != "id,seed,n,m,pmax,eps,mode" {
                return Err(Error::Parse {
                    line: 1,
                    message: "manifest header must be id,seed,n,m,pmax,eps,mode".into(),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::Parse {
                line: no + 1,
                message: "manifest rows need 7 fields".into(),
            });
        }
        let parse_u64 = |s: &str| -> Result<u64, Error> {
            s.parse().map_err(|_| Error::Parse {
                line: no + 1,
                message: format!("bad integer {s:?}"),
            })
        };
        rows.push(BenchRow {
            id: fields[0].to_string(),
            seed: parse_u64(fields[1])?,
            n: parse_u64(fields[2])? as usize,
            m: parse_u64(fields[3])? as usize,
            pmax: parse_u64(fields[4])?,
            eps: fields[5].to_string(),
            mode: fields[6].to_string(),
        });
    }
    Ok(rows)
}
