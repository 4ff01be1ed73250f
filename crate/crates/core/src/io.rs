//! Plain-text file formats.
//!
//! * network: `n` lines of `n` comma-separated 0/1 entries, no header;
//!   alternatively an edge list of 1-based `u,v` lines with an optional
//!   header line, for which the node count is given separately.
//! * partition: one positive integer label per line.
//! * chain: header `z1,...,zn,loglik`, then one retained sample per row
//!   with canonical 1-based labels.
//!
//! Floating-point values are written with 17 significant digits so that
//! reading a file back reproduces every value bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evidence::ExogenousComparison;
use crate::model::BlockProbEstimate;
use crate::network::{Network, Partition};
use crate::report::ExogenousAssessment;
use crate::sampler::ChainTrace;
use crate::summary::{CoClusteringMatrix, CredibleBall};

/// Formats a float with 17 significant digits.
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_err)?;
        }
    }
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Non-empty lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub fn network_to_csv(net: &Network) -> String {
    let mut out = String::with_capacity(net.n() * net.n() * 2);
    for v in 0..net.n() {
        let row: Vec<&str> = net.row(v).iter().map(|&y| if y != 0 { "1" } else { "0" }).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_network_csv(path: &Path, net: &Network) -> Result<()> {
    write_text(path, &network_to_csv(net))
}

/// Reads a dense adjacency CSV; asymmetric entries and self-loops are
/// rejected with the offending line.
pub fn read_network_csv(path: &Path) -> Result<Network> {
    let text = read_text(path)?;
    let mut rows = Vec::new();
    let mut line_of_row = Vec::new();
    for (line, content) in content_lines(&text) {
        let row = content
            .split(',')
            .map(|cell| match cell.trim() {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                other => Err(parse_err(path, line, format!("expected 0 or 1, found {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        rows.push(row);
        line_of_row.push(line);
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, "network file is empty"));
    }
    let n = rows.len();
    for (v, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(parse_err(
                path,
                line_of_row[v],
                format!("row has {} entries, expected {n}", row.len()),
            ));
        }
        if row[v] != 0 {
            return Err(parse_err(path, line_of_row[v], format!("self-loop on node {}", v + 1)));
        }
        for (u, &y) in row.iter().enumerate().take(v) {
            if rows[u][v] != y {
                return Err(parse_err(
                    path,
                    line_of_row[v],
                    format!("entry ({}, {}) disagrees with ({}, {})", v + 1, u + 1, u + 1, v + 1),
                ));
            }
        }
    }
    Network::from_adjacency(&rows)
}

/// Reads a 1-based `u,v` edge list over `n` nodes. A first line that is
/// not an edge (such as `edge` or `u,v`) is treated as a header.
pub fn read_edge_list(path: &Path, n: usize) -> Result<Network> {
    let text = read_text(path)?;
    let mut net = Network::empty(n)?;
    for (idx, (line, content)) in content_lines(&text).enumerate() {
        let fields: Vec<&str> = content.split(',').map(str::trim).collect();
        let parsed = match fields.as_slice() {
            [a, b] => a.parse::<usize>().ok().zip(b.parse::<usize>().ok()),
            _ => None,
        };
        let (u, v) = match parsed {
            Some(pair) => pair,
            None if idx == 0 => continue,
            None => return Err(parse_err(path, line, format!("expected `u,v`, found {content:?}"))),
        };
        if u == 0 || v == 0 || u > n || v > n {
            return Err(parse_err(path, line, format!("node index out of range 1..={n}")));
        }
        if u == v {
            return Err(parse_err(path, line, format!("self-loop on node {u}")));
        }
        net.set_edge(u - 1, v - 1, true);
    }
    Ok(net)
}

pub fn partition_to_text(part: &Partition) -> String {
    let mut out = String::with_capacity(part.len() * 3);
    for h in part.one_based() {
        let _ = writeln!(out, "{h}");
    }
    out
}

pub fn write_partition(path: &Path, part: &Partition) -> Result<()> {
    write_text(path, &partition_to_text(part))
}

/// Partition read from a file, with the original-to-canonical label map
/// (canonical labels 1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedPartition {
    pub partition: Partition,
    pub label_map: Vec<(u64, usize)>,
}

pub fn read_partition(path: &Path) -> Result<LoadedPartition> {
    let text = read_text(path)?;
    let mut raw = Vec::new();
    for (line, content) in content_lines(&text) {
        let label: u64 = content
            .parse()
            .map_err(|_| parse_err(path, line, format!("expected a positive integer, found {content:?}")))?;
        if label == 0 {
            return Err(parse_err(path, line, "labels must be positive"));
        }
        raw.push(label);
    }
    if raw.is_empty() {
        return Err(parse_err(path, 1, "partition file is empty"));
    }
    let (partition, map) = Partition::from_labels_with_map(&raw)?;
    Ok(LoadedPartition {
        partition,
        label_map: map.into_iter().map(|(orig, canon)| (orig, canon + 1)).collect(),
    })
}

pub fn chain_to_csv(trace: &ChainTrace) -> String {
    let n = trace.node_count().unwrap_or(0);
    let mut out = String::new();
    let header: Vec<String> = (1..=n).map(|i| format!("z{i}")).chain(["loglik".to_string()]).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for (p, &ll) in trace.samples().iter().zip(trace.log_lik()) {
        for h in p.labels() {
            let _ = write!(out, "{},", h + 1);
        }
        out.push_str(&format_f64(ll));
        out.push('\n');
    }
    out
}

pub fn write_chain(path: &Path, trace: &ChainTrace) -> Result<()> {
    write_text(path, &chain_to_csv(trace))
}

pub fn read_chain(path: &Path) -> Result<ChainTrace> {
    let text = read_text(path)?;
    let mut lines = content_lines(&text);
    let (hline, header) = lines.next().ok_or_else(|| parse_err(path, 1, "chain file is empty"))?;
    let cols: Vec<&str> = header.split(',').collect();
    let n = cols.len().saturating_sub(1);
    let well_formed = n > 0
        && cols.last() == Some(&"loglik")
        && cols[..n].iter().enumerate().all(|(i, c)| *c == format!("z{}", i + 1));
    if !well_formed {
        return Err(parse_err(path, hline, "expected header z1,...,zn,loglik"));
    }
    let mut samples = Vec::new();
    let mut log_lik = Vec::new();
    for (line, content) in lines {
        let fields: Vec<&str> = content.split(',').collect();
        if fields.len() != n + 1 {
            return Err(parse_err(
                path,
                line,
                format!("expected {} fields, found {}", n + 1, fields.len()),
            ));
        }
        let labels = fields[..n]
            .iter()
            .map(|f| match f.trim().parse::<usize>() {
                Ok(x) if x > 0 => Ok(x - 1),
                _ => Err(parse_err(path, line, format!("bad label {f:?}"))),
            })
            .collect::<Result<Vec<usize>>>()?;
        let ll: f64 = fields[n]
            .trim()
            .parse()
            .map_err(|_| parse_err(path, line, format!("bad log-likelihood {:?}", fields[n])))?;
        samples.push(Partition::from_labels(&labels)?);
        log_lik.push(ll);
    }
    ChainTrace::new(samples, log_lik)
}

pub fn matrix_to_csv<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> String {
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| format_f64(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn co_clustering_to_csv(c: &CoClusteringMatrix) -> String {
    matrix_to_csv((0..c.n()).map(|v| c.row(v)))
}

pub fn theta_to_csv(est: &BlockProbEstimate) -> String {
    matrix_to_csv(est.rows().iter().map(Vec::as_slice))
}

/// `iteration,loglik` rows, 1-based.
pub fn loglik_trace_to_csv(trace: &ChainTrace) -> String {
    let mut out = String::from("iteration,loglik\n");
    for (r, &ll) in trace.log_lik().iter().enumerate() {
        let _ = writeln!(out, "{},{}", r + 1, format_f64(ll));
    }
    out
}

/// `r,log_harmonic_mean` rows for the running evidence estimate.
pub fn harmonic_trajectory_to_csv(trajectory: &[f64]) -> String {
    let mut out = String::from("r,log_harmonic_mean\n");
    for (r, &x) in trajectory.iter().enumerate() {
        let _ = writeln!(out, "{},{}", r + 1, format_f64(x));
    }
    out
}

/// Serializable credible-ball summary; labels and indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallSummary {
    pub level: f64,
    pub threshold: f64,
    pub center: Vec<usize>,
    pub center_num_groups: usize,
    pub expected_vi: f64,
    pub member_count: usize,
    pub trace_length: usize,
    pub members: Vec<usize>,
}

impl BallSummary {
    pub fn new(ball: &CredibleBall, expected_vi: f64, trace_length: usize) -> Self {
        Self {
            level: ball.level,
            threshold: ball.threshold,
            center: ball.center.one_based(),
            center_num_groups: ball.center.num_groups(),
            expected_vi,
            member_count: ball.member_indices.len(),
            trace_length,
            members: ball.member_indices.iter().map(|i| i + 1).collect(),
        }
    }
}

pub const REPORT_HEADER: &str = "partition,log_evidence_endogenous,log_evidence_exogenous,two_log_bf,category,prior_log_odds,two_log_posterior_odds,vi_to_estimate,in_credible_ball";

pub fn report_to_csv(rows: &[ExogenousAssessment]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for row in rows {
        let e = &row.evidence;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            row.name,
            format_f64(e.log_evidence_endogenous),
            format_f64(e.log_evidence_exogenous),
            format_f64(e.two_log_bf),
            e.category,
            format_f64(e.prior_log_odds),
            format_f64(e.two_log_posterior_odds),
            format_f64(row.vi_to_estimate),
            row.in_credible_ball,
        );
    }
    out
}

pub const COMPARISON_HEADER: &str = "first,second,log_evidence_first,log_evidence_second,two_log_bf,category";

pub fn comparison_to_csv(first: &str, second: &str, c: &ExogenousComparison) -> String {
    format!(
        "{COMPARISON_HEADER}\n{first},{second},{},{},{},{}\n",
        format_f64(c.log_evidence_first),
        format_f64(c.log_evidence_second),
        format_f64(c.two_log_bf),
        c.category
    )
}

/// Everything needed to rerun a command and reproduce its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    /// Original-to-canonical label maps of every partition file read.
    pub label_maps: BTreeMap<String, Vec<(u64, usize)>>,
    pub duration_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            parameters: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            label_maps: BTreeMap::new(),
            duration_seconds: 0.0,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        let value = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.parameters.insert(key.to_string(), value);
        self
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &(serde_json::to_string_pretty(self)? + "\n"))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&read_text(path)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use crate::network::canonicalize;
    use proptest::prelude::*;

    fn write_tmp(dir: &tempfile::TempDir, name: &str, contents: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, contents).unwrap();
        p
    }

    #[test]
    fn float_format_is_exact() {
        for x in [
            0.1,
            -1234.5678e-10,
            1.0 / 3.0,
            std::f64::consts::PI * 1e300,
            -0.0,
            5e-324,
        ] {
            let s = format_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn network_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let net = Network::from_edges(4, &[(0, 1), (2, 3), (1, 3)]).unwrap();
        let p = dir.path().join("net.csv");
        write_network_csv(&p, &net).unwrap();
        assert_eq!(read_network_csv(&p).unwrap(), net);
    }

    #[test]
    fn network_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "a.csv", "0,1,0\n1,0,1\n0,0,0\n");
        let err = read_network_csv(&p).unwrap_err().to_string();
        assert!(err.contains(":3:"), "{err}");
        let p = write_tmp(&dir, "b.csv", "0,1\n1,x\n");
        assert!(read_network_csv(&p).unwrap_err().to_string().contains(":2:"));
        let p = write_tmp(&dir, "c.csv", "1,0\n0,0\n");
        assert!(read_network_csv(&p).unwrap_err().to_string().contains("self-loop"));
        let p = write_tmp(&dir, "d.csv", "0,1,1\n1,0\n");
        assert!(read_network_csv(&p).is_err());
        let p = write_tmp(&dir, "e.csv", "");
        assert!(read_network_csv(&p).is_err());
        assert!(read_network_csv(&dir.path().join("missing.csv")).is_err());
    }

    #[test]
    fn edge_list_reading() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "e.csv", "edge\n1,2\n3,4\n2,1\n");
        let net = read_edge_list(&p, 4).unwrap();
        assert_eq!(net, Network::from_edges(4, &[(0, 1), (2, 3)]).unwrap());
        let p = write_tmp(&dir, "f.csv", "1,2\n");
        assert_eq!(read_edge_list(&p, 3).unwrap().edge_count(), 1);
        let p = write_tmp(&dir, "g.csv", "u,v\n1,5\n");
        assert!(read_edge_list(&p, 4).unwrap_err().to_string().contains(":2:"));
        let p = write_tmp(&dir, "h.csv", "1,1\n");
        assert!(read_edge_list(&p, 4).is_err());
        let p = write_tmp(&dir, "i.csv", "1,2\nfoo\n");
        assert!(read_edge_list(&p, 4).is_err());
    }

    #[test]
    fn partition_reading_records_label_map() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "z.csv", "4\n4\n2\n9\n");
        let loaded = read_partition(&p).unwrap();
        assert_eq!(loaded.partition.one_based(), vec![1, 1, 2, 3]);
        assert_eq!(loaded.label_map, vec![(4, 1), (2, 2), (9, 3)]);
        let p = write_tmp(&dir, "bad.csv", "1\n0\n");
        assert!(read_partition(&p).unwrap_err().to_string().contains(":2:"));
        let p = write_tmp(&dir, "bad2.csv", "1\n-2\n");
        assert!(read_partition(&p).is_err());
    }

    #[test]
    fn chain_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let net = Network::from_edges(3, &[(0, 1)]).unwrap();
        let parts = vec![canonicalize(&[1, 1, 2]).unwrap(), canonicalize(&[1, 2, 3]).unwrap()];
        let trace = ChainTrace::from_partitions(parts, &net, &ModelConfig::default()).unwrap();
        let p = dir.path().join("chain.csv");
        write_chain(&p, &trace).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("z1,z2,z3,loglik\n"));
        let back = read_chain(&p).unwrap();
        assert_eq!(back, trace);
        back.audit(&net, &ModelConfig::default()).unwrap();

        let p = write_tmp(&dir, "bad.csv", "z1,z2,loglik\n1,2,0.5\n1,0.3\n");
        assert!(read_chain(&p).unwrap_err().to_string().contains(":3:"));
        let p = write_tmp(&dir, "bad2.csv", "a,b\n");
        assert!(read_chain(&p).is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = RunManifest::new("sample");
        m.param("a", 1.0).param("seed", 7u64);
        m.label_maps.insert("z".into(), vec![(3, 1)]);
        let p = dir.path().join("m.json");
        m.write(&p).unwrap();
        assert_eq!(RunManifest::read(&p).unwrap(), m);
    }

    proptest! {
        #[test]
        fn partition_text_round_trip(raw in prop::collection::vec(1u64..8, 1..50)) {
            let dir = tempfile::tempdir().unwrap();
            let part = Partition::from_labels(&raw).unwrap();
            let p = dir.path().join("z.csv");
            write_partition(&p, &part).unwrap();
            prop_assert_eq!(read_partition(&p).unwrap().partition, part);
        }

        #[test]
        fn chain_text_round_trip(lls in prop::collection::vec(-1e6f64..0.0, 1..10)) {
            let dir = tempfile::tempdir().unwrap();
            let samples = vec![canonicalize(&[1, 2, 1]).unwrap(); lls.len()];
            let trace = ChainTrace::new(samples, lls).unwrap();
            let p = dir.path().join("c.csv");
            write_chain(&p, &trace).unwrap();
            prop_assert_eq!(read_chain(&p).unwrap(), trace);
        }
    }
}
