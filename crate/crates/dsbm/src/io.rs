//! Plain-text file formats.
//!
//! Temporal network:
//!
//! ```text
//! dsbm 1 <N> <T+1>
//! # t 0 <edge_count>
//! i j
//! ...
//! # t 1 <edge_count>
//! ...
//! ```
//!
//! Edges are listed with `i < j` in increasing order. Assignments are CSV with
//! header `t,node,group`. Model parameters are `key=value` lines.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use dsbm_core::{AssignmentSequence, ModelParams, Prior, Snapshot, TemporalNetwork};

const MAGIC: &str = "dsbm";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Model(#[from] dsbm_core::Error),
}

fn parse_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(token: Option<&str>, line: usize, what: &str) -> Result<T, FormatError> {
    let token = token.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    token
        .parse()
        .map_err(|_| parse_err(line, format!("invalid {what} {token:?}")))
}

pub fn write_network<W: Write>(mut w: W, network: &TemporalNetwork) -> std::io::Result<()> {
    writeln!(w, "{MAGIC} {FORMAT_VERSION} {} {}", network.n_nodes(), network.n_snapshots())?;
    for (t, snap) in network.snapshots().iter().enumerate() {
        writeln!(w, "# t {t} {}", snap.n_edges())?;
        for &(i, j) in snap.edges() {
            writeln!(w, "{i} {j}")?;
        }
    }
    w.flush()
}

pub fn read_network<R: BufRead>(r: R) -> Result<TemporalNetwork, FormatError> {
    let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let header = header?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some(MAGIC) {
        return Err(parse_err(1, "missing 'dsbm' header"));
    }
    let version: u32 = field(tokens.next(), 1, "format version")?;
    if version != FORMAT_VERSION {
        return Err(parse_err(1, format!("unsupported format version {version}")));
    }
    let n: usize = field(tokens.next(), 1, "node count")?;
    let n_snapshots: usize = field(tokens.next(), 1, "snapshot count")?;
    if tokens.next().is_some() {
        return Err(parse_err(1, "trailing tokens in header"));
    }

    let mut snapshots = Vec::with_capacity(n_snapshots);
    let mut current: Option<(usize, usize, Vec<(usize, usize)>)> = None;
    let finish = |section: (usize, usize, Vec<(usize, usize)>), snapshots: &mut Vec<Snapshot>| {
        let (line, expected, edges) = section;
        if edges.len() != expected {
            return Err(parse_err(line, format!("section declares {expected} edges but lists {}", edges.len())));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(parse_err(line, "edges must be sorted and distinct"));
        }
        snapshots.push(Snapshot::from_edges(n, edges)?);
        Ok(())
    };
    for (no, line) in lines {
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(rest) = text.strip_prefix('#') {
            let mut tokens = rest.split_whitespace();
            if tokens.next() != Some("t") {
                return Err(parse_err(no, "expected '# t <index> <edge_count>'"));
            }
            let t: usize = field(tokens.next(), no, "snapshot index")?;
            let count: usize = field(tokens.next(), no, "edge count")?;
            if let Some(section) = current.take() {
                finish(section, &mut snapshots)?;
            }
            if t != snapshots.len() {
                return Err(parse_err(no, format!("expected snapshot {} but found {t}", snapshots.len())));
            }
            current = Some((no, count, Vec::with_capacity(count)));
            continue;
        }
        let section = current
            .as_mut()
            .ok_or_else(|| parse_err(no, "edge before the first snapshot header"))?;
        let mut tokens = text.split_whitespace();
        let i: usize = field(tokens.next(), no, "node")?;
        let j: usize = field(tokens.next(), no, "node")?;
        if tokens.next().is_some() {
            return Err(parse_err(no, "expected exactly two nodes"));
        }
        if i >= j || j >= n {
            return Err(parse_err(no, format!("edge ({i}, {j}) needs i < j < {n}")));
        }
        section.2.push((i, j));
    }
    if let Some(section) = current.take() {
        finish(section, &mut snapshots)?;
    }
    if snapshots.len() != n_snapshots {
        return Err(parse_err(
            0,
            format!("header declares {n_snapshots} snapshots but the file has {}", snapshots.len()),
        ));
    }
    Ok(TemporalNetwork::new(n, snapshots)?)
}

pub fn write_assignments<W: Write>(w: W, seq: &AssignmentSequence) -> Result<(), FormatError> {
    write_assignment_rows(w, seq.rows().iter().enumerate())
}

/// Writes `(t, row)` pairs; used for partial sequences such as lag-corrected
/// assignments.
pub fn write_assignment_rows<'a, W: Write>(
    w: W,
    rows: impl Iterator<Item = (usize, &'a Vec<usize>)>,
) -> Result<(), FormatError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "node", "group"])?;
    for (t, row) in rows {
        for (node, g) in row.iter().enumerate() {
            out.serialize((t, node, g))?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads an assignment CSV. Without `k`, the number of groups is the largest
/// label plus one.
pub fn read_assignments<R: Read>(r: R, k: Option<usize>) -> Result<AssignmentSequence, FormatError> {
    let mut reader = csv::Reader::from_reader(r);
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t", "node", "group"] {
        return Err(parse_err(1, "expected header t,node,group"));
    }
    let mut cells: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (i, record) in reader.deserialize::<(usize, usize, usize)>().enumerate() {
        let (t, node, g) = record?;
        if cells.insert((t, node), g).is_some() {
            return Err(parse_err(i + 2, format!("duplicate entry for t={t}, node={node}")));
        }
    }
    let n_steps = cells.keys().map(|&(t, _)| t).max().ok_or_else(|| parse_err(2, "no assignments"))?;
    let n = cells.keys().map(|&(_, i)| i).max().unwrap_or(0) + 1;
    if cells.len() != (n_steps + 1) * n {
        return Err(parse_err(0, "assignments must cover every node at every time"));
    }
    let k = k.unwrap_or_else(|| cells.values().max().map_or(2, |&g| (g + 1).max(2)));
    let mut rows = vec![vec![0; n]; n_steps + 1];
    for ((t, i), g) in cells {
        rows[t][i] = g;
    }
    Ok(AssignmentSequence::new(k, rows)?)
}

/// Model parameters and an optional seed, as stored next to generated files.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamsFile {
    pub params: ModelParams,
    pub seed: Option<u64>,
}

pub fn write_params<W: Write>(mut w: W, params: &ModelParams, seed: Option<u64>) -> std::io::Result<()> {
    writeln!(w, "nodes={}", params.n_nodes)?;
    writeln!(w, "steps={}", params.n_steps)?;
    writeln!(w, "groups={}", params.k)?;
    writeln!(w, "assortativity={}", params.assortativity)?;
    writeln!(w, "mean_degree={}", params.mean_degree)?;
    writeln!(w, "link_persistence={}", params.link_persistence)?;
    writeln!(w, "community_persistence={}", params.community_persistence)?;
    let prior: Vec<String> = params.prior.weights().iter().map(f64::to_string).collect();
    writeln!(w, "prior={}", prior.join(","))?;
    if let Some(seed) = seed {
        writeln!(w, "seed={seed}")?;
    }
    w.flush()
}

pub fn read_params<R: BufRead>(r: R) -> Result<ParamsFile, FormatError> {
    let mut map: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let (key, value) = text
            .split_once('=')
            .ok_or_else(|| parse_err(i + 1, "expected key=value"))?;
        map.insert(key.trim().to_string(), (i + 1, value.trim().to_string()));
    }
    let get = |key: &str| -> Result<(usize, &str), FormatError> {
        map.get(key)
            .map(|(l, v)| (*l, v.as_str()))
            .ok_or_else(|| parse_err(0, format!("missing key {key}")))
    };
    fn num<T: std::str::FromStr>((line, v): (usize, &str), key: &str) -> Result<T, FormatError> {
        field(Some(v), line, key)
    }
    let mut params = ModelParams::new(
        num(get("nodes")?, "nodes")?,
        num(get("steps")?, "steps")?,
        num(get("groups")?, "groups")?,
        num(get("assortativity")?, "assortativity")?,
        num(get("mean_degree")?, "mean_degree")?,
        num(get("link_persistence")?, "link_persistence")?,
        num(get("community_persistence")?, "community_persistence")?,
    )?;
    if let Some((line, v)) = map.get("prior") {
        let weights = parse_list(v).map_err(|m| parse_err(*line, m))?;
        params = params.with_prior(Prior::new(weights)?)?;
    }
    let seed = match map.get("seed") {
        Some((line, v)) => Some(field(Some(v), *line, "seed")?),
        None => None,
    };
    let known = [
        "nodes",
        "steps",
        "groups",
        "assortativity",
        "mean_degree",
        "link_persistence",
        "community_persistence",
        "prior",
        "seed",
    ];
    if let Some((key, (line, _))) = map.iter().find(|(k, _)| !known.contains(&k.as_str())) {
        return Err(parse_err(*line, format!("unknown key {key}")));
    }
    Ok(ParamsFile { params, seed })
}

/// Parses a comma-separated list of numbers.
pub fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>, String> {
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| format!("invalid list entry {s:?}")))
        .collect()
}

pub fn save_network(path: &Path, network: &TemporalNetwork) -> Result<(), FormatError> {
    Ok(write_network(BufWriter::new(File::create(path)?), network)?)
}

pub fn load_network(path: &Path) -> Result<TemporalNetwork, FormatError> {
    read_network(BufReader::new(File::open(path)?))
}

pub fn save_assignments(path: &Path, seq: &AssignmentSequence) -> Result<(), FormatError> {
    write_assignments(BufWriter::new(File::create(path)?), seq)
}

pub fn load_assignments(path: &Path, k: Option<usize>) -> Result<AssignmentSequence, FormatError> {
    read_assignments(BufReader::new(File::open(path)?), k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dsbm_core::generate;

    #[test]
    fn network_round_trip() {
        let out = generate(&ModelParams::new(60, 4, 3, 0.7, 5.0, 0.5, 0.8).unwrap(), 2).unwrap();
        let mut buf = Vec::new();
        write_network(&mut buf, &out.network).unwrap();
        assert!(buf.starts_with(b"dsbm 1 60 5\n# t 0 "));
        assert_eq!(read_network(buf.as_slice()).unwrap(), out.network);
    }

    #[test]
    fn malformed_networks_are_rejected() {
        for text in [
            "",
            "dsbm 2 3 1\n# t 0 0\n",
            "dsbm 1 3 1\n# t 0 1\n1 0\n",
            "dsbm 1 3 1\n# t 0 2\n0 1\n",
            "dsbm 1 3 2\n# t 0 0\n",
            "dsbm 1 3 1\n0 1\n",
            "dsbm 1 3 1\n# t 0 2\n1 2\n0 1\n",
            "dsbm 1 3 1\n# t 0 1\n0 3\n",
        ] {
            assert!(read_network(text.as_bytes()).is_err(), "{text:?}");
        }
        let ok = read_network("dsbm 1 3 1\n# t 0 2\n0 1\n1 2\n".as_bytes()).unwrap();
        assert_eq!(ok.snapshot(0).n_edges(), 2);
    }

    #[test]
    fn assignment_round_trip() {
        let out = generate(&ModelParams::new(30, 3, 3, 0.7, 5.0, 0.5, 0.8).unwrap(), 2).unwrap();
        let mut buf = Vec::new();
        write_assignments(&mut buf, &out.planted).unwrap();
        assert!(buf.starts_with(b"t,node,group\n0,0,"));
        assert_eq!(read_assignments(buf.as_slice(), Some(3)).unwrap(), out.planted);
        assert!(read_assignments("t,node,group\n0,0,1\n1,1,0\n".as_bytes(), None).is_err());
        assert!(read_assignments("t,node,label\n0,0,1\n".as_bytes(), None).is_err());
    }

    #[test]
    fn params_round_trip() {
        let params = ModelParams::new(300, 40, 2, 0.9, 10.0, 0.5, 0.75)
            .unwrap()
            .with_prior(Prior::new(vec![0.6, 0.4]).unwrap())
            .unwrap();
        let mut buf = Vec::new();
        write_params(&mut buf, &params, Some(7)).unwrap();
        let back = read_params(buf.as_slice()).unwrap();
        assert_eq!(back, ParamsFile { params, seed: Some(7) });
        assert!(read_params("nodes=3\n".as_bytes()).is_err());
    }
}
