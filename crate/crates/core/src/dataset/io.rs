//! Text formats for observations, distance matrices and label sidecars.
//!
//! All formats are comma separated. Blank lines and lines starting with `#`
//! are ignored. Line numbers in errors are 1-based.
//!
//! * vectors: `label,x1,...,xd`
//! * rankings: `label,o1,...,on` where `o1..on` is a permutation of `1..n`
//! * networks: a header `nodes=<n>`, then `label,a11,a12,...,ann` (row-major 0/1)
//! * distance matrix: `K` rows of `K` numbers
//! * sidecar: `N` rows `label,value_index` with 1-based value indices

use std::fmt::Write as _;

use super::{DistanceMatrix, DistinctTable, Observation, Payload, PayloadKind, Sample};
use crate::error::{Error, Result};

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn fields<T: std::str::FromStr>(line: usize, text: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|f| {
            let f = f.trim();
            f.parse::<T>()
                .map_err(|_| parse_err(line, format!("cannot parse field {f:?}")))
        })
        .collect()
}

fn label(line: usize, field: Option<&str>) -> Result<Sample> {
    let f = field.ok_or_else(|| parse_err(line, "missing sample label"))?;
    let v: i64 = f
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("bad sample label {f:?}")))?;
    Sample::from_label(v).map_err(|e| parse_err(line, e.to_string()))
}

/// Parses an observation file of the given payload kind.
pub fn parse_observations(text: &str, kind: PayloadKind) -> Result<Vec<Observation>> {
    let mut lines = content_lines(text).peekable();
    let nodes = if kind == PayloadKind::Network {
        let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "missing nodes=<n> header"))?;
        let n = header
            .strip_prefix("nodes=")
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| parse_err(ln, format!("expected nodes=<n>, got {header:?}")))?;
        Some(n)
    } else {
        None
    };
    let mut out = Vec::new();
    let mut width = None;
    for (ln, l) in lines {
        let (head, rest) = match l.split_once(',') {
            Some((h, r)) => (h, r),
            None => return Err(parse_err(ln, "expected a label followed by values")),
        };
        let sample = label(ln, Some(head))?;
        let payload = match kind {
            PayloadKind::Vector => Payload::vector(fields::<f64>(ln, rest)?),
            PayloadKind::Ranking => Payload::ranking(fields::<u32>(ln, rest)?),
            PayloadKind::Network => Payload::network(nodes.unwrap_or(0), fields::<u8>(ln, rest)?),
        }
        .map_err(|e| parse_err(ln, e.to_string()))?;
        match width {
            None => width = Some(payload.shape()),
            Some(w) if w != payload.shape() => {
                return Err(parse_err(ln, format!("row has size {}, expected {w}", payload.shape())))
            }
            _ => {}
        }
        out.push(Observation::new(payload, sample));
    }
    if out.is_empty() {
        return Err(Error::Domain("no observations in input".into()));
    }
    Ok(out)
}

/// Serializes observations in the format read by [`parse_observations`].
pub fn format_observations(observations: &[Observation]) -> String {
    let mut s = String::new();
    if let Some(Payload::Network { nodes, .. }) = observations.first().map(|o| &o.payload) {
        let _ = writeln!(s, "nodes={nodes}");
    }
    for o in observations {
        let _ = write!(s, "{}", o.sample.label());
        match &o.payload {
            Payload::Vector(v) => v.iter().for_each(|x| {
                let _ = write!(s, ",{x}");
            }),
            Payload::Network { entries, .. } => entries.iter().for_each(|x| {
                let _ = write!(s, ",{x}");
            }),
            Payload::Ranking(r) => r.iter().for_each(|x| {
                let _ = write!(s, ",{x}");
            }),
        }
        s.push('\n');
    }
    s
}

/// Parses a K x K distance matrix.
pub fn parse_distance_matrix(text: &str) -> Result<DistanceMatrix> {
    let mut rows = Vec::new();
    for (ln, l) in content_lines(text) {
        let row = fields::<f64>(ln, l)?;
        if let Some(first) = rows.first().map(|r: &Vec<f64>| r.len()) {
            if row.len() != first {
                return Err(parse_err(ln, format!("row has {} entries, expected {first}", row.len())));
            }
        }
        rows.push(row);
    }
    DistanceMatrix::from_rows(&rows)
}

pub fn format_distance_matrix(d: &DistanceMatrix) -> String {
    let mut s = String::new();
    for u in 0..d.k() {
        let row: Vec<String> = d.row(u).iter().map(|x| x.to_string()).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Parses the `label,value_index` sidecar into a table over `k` distinct values.
pub fn parse_sidecar(text: &str, k: usize) -> Result<DistinctTable> {
    let mut labels = Vec::new();
    let mut assignment = Vec::new();
    for (ln, l) in content_lines(text) {
        let mut it = l.split(',');
        let sample = label(ln, it.next())?;
        let idx: usize = it
            .next()
            .and_then(|f| f.trim().parse().ok())
            .ok_or_else(|| parse_err(ln, "expected label,value_index"))?;
        if idx == 0 || idx > k {
            return Err(parse_err(ln, format!("value index {idx} outside 1..{k}")));
        }
        if it.next().is_some() {
            return Err(parse_err(ln, "too many fields"));
        }
        labels.push(sample);
        assignment.push(idx - 1);
    }
    DistinctTable::from_assignment(labels, assignment, k)
}

pub fn format_sidecar(table: &DistinctTable) -> String {
    let mut s = String::new();
    for (l, u) in table.labels().iter().zip(table.assignment()) {
        let _ = writeln!(s, "{},{}", l.label(), u + 1);
    }
    s
}

/// Pre-deduplicated input: a distance matrix on distinct values plus its sidecar.
pub fn parse_distance_input(matrix: &str, sidecar: &str) -> Result<(DistinctTable, DistanceMatrix)> {
    let d = parse_distance_matrix(matrix)?;
    d.require_separated()?;
    let t = parse_sidecar(sidecar, d.k())?;
    Ok((t, d))
}
