//! Line-oriented text format for [`ComparisonData`].
//!
//! ```text
//! n L
//! i j y_ij wins_ij
//! ```
//!
//! One line per directed pair, 0-based indices. `wins_ij` is the number of the
//! `L` comparisons won by `j`; it is authoritative when present and `y_ij` is
//! then informational. Population data writes `inf` for `L` and `-` for the
//! count, and `y_ij` uses the shortest representation that round-trips.
//! Blank lines and lines starting with `#` are ignored.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::{ComparisonData, ComparisonGraph};
use crate::error::{Error, Result};

pub fn write_data<W: Write>(data: &ComparisonData, mut out: W) -> std::io::Result<()> {
    match data.comparisons() {
        Some(l) => writeln!(out, "{} {}", data.n(), l)?,
        None => writeln!(out, "{} inf", data.n())?,
    }
    for (e, &(i, j)) in data.graph().edges().iter().enumerate() {
        let y = data.edge_frequency(e);
        match (data.wins(), data.comparisons()) {
            (Some(wins), Some(l)) => {
                writeln!(out, "{i} {j} {y} {}", wins[e])?;
                writeln!(out, "{j} {i} {} {}", 1.0 - y, l - wins[e])?;
            }
            _ => {
                writeln!(out, "{i} {j} {y} -")?;
                writeln!(out, "{j} {i} {} -", 1.0 - y)?;
            }
        }
    }
    Ok(())
}

struct PairLine {
    line: usize,
    y: f64,
    count: Option<u32>,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn read_data<R: BufRead>(input: R) -> Result<ComparisonData> {
    let mut header: Option<(usize, Option<u32>)> = None;
    let mut pairs: BTreeMap<(usize, usize), PairLine> = BTreeMap::new();

    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let Some((n, _)) = header else {
            if fields.len() != 2 {
                return Err(parse_err(lineno, "header must be `n L`"));
            }
            let n = fields[0]
                .parse()
                .map_err(|_| parse_err(lineno, "bad item count"))?;
            let l = match fields[1] {
                "inf" => None,
                s => Some(
                    s.parse::<u32>()
                        .ok()
                        .filter(|&l| l > 0)
                        .ok_or_else(|| parse_err(lineno, "L must be a positive integer or `inf`"))?,
                ),
            };
            header = Some((n, l));
            continue;
        };
        if fields.len() != 4 {
            return Err(parse_err(lineno, "expected `i j y_ij count`"));
        }
        let idx_of = |s: &str| -> Result<usize> {
            let v: usize = s.parse().map_err(|_| parse_err(lineno, format!("bad index {s}")))?;
            if v >= n {
                return Err(parse_err(lineno, format!("index {v} out of range")));
            }
            Ok(v)
        };
        let (i, j) = (idx_of(fields[0])?, idx_of(fields[1])?);
        if i == j {
            return Err(parse_err(lineno, "self-comparison"));
        }
        let y: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(lineno, "bad frequency"))?;
        if !(0.0..=1.0).contains(&y) {
            return Err(parse_err(lineno, "frequency outside [0, 1]"));
        }
        let count = match fields[3] {
            "-" => None,
            s => Some(s.parse::<u32>().map_err(|_| parse_err(lineno, "bad count"))?),
        };
        if pairs.insert((i, j), PairLine { line: lineno, y, count }).is_some() {
            return Err(parse_err(lineno, format!("duplicate pair ({i}, {j})")));
        }
    }

    let (n, l) = header.ok_or_else(|| parse_err(0, "missing header"))?;
    let mut edges = Vec::new();
    let mut wins = Vec::new();
    let mut freqs = Vec::new();
    for (&(i, j), fwd) in &pairs {
        if i > j {
            if !pairs.contains_key(&(j, i)) {
                return Err(parse_err(fwd.line, format!("missing reverse pair ({j}, {i})")));
            }
            continue;
        }
        let rev = pairs
            .get(&(j, i))
            .ok_or_else(|| parse_err(fwd.line, format!("missing reverse pair ({j}, {i})")))?;
        match (l, fwd.count, rev.count) {
            (Some(l), Some(a), Some(b)) => {
                if a + b != l {
                    return Err(parse_err(fwd.line, format!("counts {a} + {b} != L = {l}")));
                }
                wins.push(a);
            }
            (None, None, None) => {
                if (fwd.y + rev.y - 1.0).abs() > 1e-12 {
                    return Err(parse_err(fwd.line, "frequencies do not sum to 1"));
                }
                freqs.push(fwd.y);
            }
            _ => {
                return Err(parse_err(
                    fwd.line,
                    "counts must be given for finite L and `-` for L = inf",
                ))
            }
        }
        edges.push((i, j));
    }

    let graph = ComparisonGraph::new(n, edges)?;
    match l {
        Some(l) => ComparisonData::from_wins(graph, l, wins),
        None => ComparisonData::from_frequencies(graph, None, freqs),
    }
}
