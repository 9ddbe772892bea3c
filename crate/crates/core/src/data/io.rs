//! Dataset ingestion and the canonical on-disk format.
//!
//! Two raw input formats are supported:
//!
//! - LINQS plain text: a `.content` file with rows `<id> <feat_1 .. feat_F>
//!   <class_label>` and a `.cites` file with rows `<id> <id>`.
//! - The tab-separated node/cites pair used by the original PubMed
//!   distribution (see [`convert_pubmed`]).
//!
//! The canonical format is a single line-oriented file:
//!
//! ```text
//! nodes <n> features <f> classes <c>
//! <f space-separated reals>            (n feature lines)
//! <n space-separated class indices>    (one label line)
//! <edge count>
//! <i j>                                 (one line per undirected edge, i < j)
//! ```
//!
//! All indices are 0-based, lines end with `\n`, and reals are written in
//! shortest round-trip form so save/load is bit-exact.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::data::CitationDataset;
use crate::error::{Error, Result};
use crate::graph::{DenseMatrix, SparseMatrix};

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string())
}

/// Build the symmetric zero-diagonal adjacency from undirected node pairs.
fn adjacency_from_pairs(n: usize, pairs: &BTreeSet<(usize, usize)>) -> Result<SparseMatrix> {
    let mut triplets = Vec::with_capacity(pairs.len() * 2);
    for &(a, b) in pairs {
        triplets.push((a, b, 1.0));
        triplets.push((b, a, 1.0));
    }
    SparseMatrix::from_triplets(n, n, &triplets)
}

/// Resolve a raw edge list against the id map: unknown endpoints are dropped
/// (counted and logged), self references removed, duplicates collapsed, and
/// the result symmetrized.
fn resolve_edges(
    raw: &[(String, String)],
    ids: &HashMap<String, usize>,
) -> BTreeSet<(usize, usize)> {
    let mut pairs = BTreeSet::new();
    let mut dropped = 0usize;
    for (a, b) in raw {
        match (ids.get(a), ids.get(b)) {
            (Some(&u), Some(&v)) => {
                if u != v {
                    pairs.insert((u.min(v), u.max(v)));
                }
            }
            _ => dropped += 1,
        }
    }
    if dropped > 0 {
        log::warn!("dropped {} citation edges referencing unknown ids", dropped);
    }
    pairs
}

/// Load the LINQS `.content`/`.cites` pair. Node order follows the content
/// file; class labels map to indices by first appearance.
pub fn load_linqs(content_path: &Path, cites_path: &Path) -> Result<CitationDataset> {
    let content = BufReader::new(File::open(content_path)?);
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut class_ids: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();

    for (lineno, line) in content.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 3 {
            return Err(Error::Format(format!(
                "{}:{}: expected `<id> <features..> <label>`",
                content_path.display(),
                lineno + 1
            )));
        }
        let id = fields[0].to_string();
        let label = fields[fields.len() - 1];
        let feats = &fields[1..fields.len() - 1];
        if !rows.is_empty() && feats.len() != rows[0].len() {
            return Err(Error::Format(format!(
                "{}:{}: {} features, expected {}",
                content_path.display(),
                lineno + 1,
                feats.len(),
                rows[0].len()
            )));
        }
        let node = rows.len();
        if ids.insert(id.clone(), node).is_some() {
            return Err(Error::Format(format!(
                "{}:{}: duplicate node id `{}`",
                content_path.display(),
                lineno + 1,
                id
            )));
        }
        let mut row = Vec::with_capacity(feats.len());
        for f in feats {
            let v: f64 = f.parse().map_err(|_| {
                Error::Format(format!(
                    "{}:{}: bad feature value `{}`",
                    content_path.display(),
                    lineno + 1,
                    f
                ))
            })?;
            row.push(v);
        }
        rows.push(row);
        let next_class = class_ids.len();
        let class = *class_ids.entry(label.to_string()).or_insert(next_class);
        labels.push(class);
    }
    if rows.is_empty() {
        return Err(Error::Format(format!(
            "{}: no nodes found",
            content_path.display()
        )));
    }

    let cites = BufReader::new(File::open(cites_path)?);
    let mut raw_edges: Vec<(String, String)> = Vec::new();
    for (lineno, line) in cites.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::Format(format!(
                "{}:{}: expected `<id> <id>`",
                cites_path.display(),
                lineno + 1
            )));
        }
        raw_edges.push((fields[0].to_string(), fields[1].to_string()));
    }

    let pairs = resolve_edges(&raw_edges, &ids);
    let n = rows.len();
    let features = DenseMatrix::from_rows(&rows)?;
    let adjacency = adjacency_from_pairs(n, &pairs)?;
    CitationDataset::new(file_stem(content_path), features, adjacency, labels, class_ids.len())
}

/// Write a dataset in the canonical format. Reals are serialized in shortest
/// round-trip form, so `load_canonical` restores them bit-exactly.
pub fn save_canonical(dataset: &CitationDataset, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(
        out,
        "nodes {} features {} classes {}",
        dataset.n_nodes(),
        dataset.n_features(),
        dataset.n_classes()
    )?;
    for i in 0..dataset.n_nodes() {
        let row = dataset.features().row(i);
        let mut line = String::new();
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{}", v));
        }
        writeln!(out, "{}", line)?;
    }
    let labels: Vec<String> = dataset.labels().iter().map(|l| l.to_string()).collect();
    writeln!(out, "{}", labels.join(" "))?;
    let mut edges = Vec::new();
    for i in 0..dataset.n_nodes() {
        let (cols, _) = dataset.adjacency().row(i);
        for &j in cols {
            if i < j {
                edges.push((i, j));
            }
        }
    }
    writeln!(out, "{}", edges.len())?;
    for (i, j) in edges {
        writeln!(out, "{} {}", i, j)?;
    }
    out.flush()?;
    Ok(())
}

/// Load a dataset in the canonical format.
pub fn load_canonical(path: &Path) -> Result<CitationDataset> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let fail = |msg: String| Error::Format(format!("{}: {}", path.display(), msg));

    let header = lines
        .next()
        .ok_or_else(|| fail("missing header".into()))??;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 6 || tokens[0] != "nodes" || tokens[2] != "features" || tokens[4] != "classes"
    {
        return Err(fail(format!("bad header `{}`", header)));
    }
    let n: usize = tokens[1].parse().map_err(|_| fail("bad node count".into()))?;
    let f: usize = tokens[3].parse().map_err(|_| fail("bad feature count".into()))?;
    let c: usize = tokens[5].parse().map_err(|_| fail("bad class count".into()))?;
    if n == 0 {
        return Err(fail("node count must be positive".into()));
    }
    if c == 0 {
        return Err(fail("class count must be positive".into()));
    }

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| fail(format!("missing feature line for node {}", i)))??;
        let mut row = Vec::with_capacity(f);
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| fail(format!("node {}: bad feature `{}`", i, tok)))?;
            row.push(v);
        }
        if row.len() != f {
            return Err(fail(format!(
                "node {}: {} features, expected {}",
                i,
                row.len(),
                f
            )));
        }
        rows.push(row);
    }

    let label_line = lines.next().ok_or_else(|| fail("missing label line".into()))??;
    let mut labels = Vec::with_capacity(n);
    for tok in label_line.split_whitespace() {
        let l: usize = tok
            .parse()
            .map_err(|_| fail(format!("bad label `{}`", tok)))?;
        if l >= c {
            return Err(fail(format!("label {} out of range for {} classes", l, c)));
        }
        labels.push(l);
    }
    if labels.len() != n {
        return Err(fail(format!("{} labels, expected {}", labels.len(), n)));
    }

    let count_line = lines.next().ok_or_else(|| fail("missing edge count".into()))??;
    let n_edges: usize = count_line
        .trim()
        .parse()
        .map_err(|_| fail(format!("bad edge count `{}`", count_line)))?;
    let mut pairs = BTreeSet::new();
    for e in 0..n_edges {
        let line = lines
            .next()
            .ok_or_else(|| fail(format!("missing edge line {}", e)))??;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(fail(format!("edge {}: expected `i j`", e)));
        }
        let i: usize = toks[0]
            .parse()
            .map_err(|_| fail(format!("edge {}: bad index", e)))?;
        let j: usize = toks[1]
            .parse()
            .map_err(|_| fail(format!("edge {}: bad index", e)))?;
        if i >= j {
            return Err(fail(format!("edge {}: requires i < j, got {} {}", e, i, j)));
        }
        if j >= n {
            return Err(fail(format!("edge {}: index {} out of range", e, j)));
        }
        if !pairs.insert((i, j)) {
            return Err(fail(format!("edge {}: duplicate pair {} {}", e, i, j)));
        }
    }

    let features = DenseMatrix::from_rows(&rows)?;
    let adjacency = adjacency_from_pairs(n, &pairs)?;
    CitationDataset::new(file_stem(path), features, adjacency, labels, c)
        .map_err(|e| fail(e.to_string()))
}

/// Convert the original tab-separated PubMed distribution to a dataset.
///
/// The node file starts with one throwaway line, then a field-descriptor line
/// whose `numeric:w-…:0.0` tokens fix the vocabulary order; each data line is
/// `<id>\tlabel=<k>\t<word>=<tfidf>…` with an optional trailing `summary=`
/// field. The cites file has two header lines, then
/// `<edge id>\tpaper:<id>\t|\tpaper:<id>` per citation.
pub fn convert_pubmed(nodes_path: &Path, cites_path: &Path) -> Result<CitationDataset> {
    let reader = BufReader::new(File::open(nodes_path)?);
    let mut lines = reader.lines();
    let fail = |msg: String| Error::Format(format!("{}: {}", nodes_path.display(), msg));

    lines.next().ok_or_else(|| fail("missing header line".into()))??;
    let descriptor = lines
        .next()
        .ok_or_else(|| fail("missing field-descriptor line".into()))??;
    let mut vocab: HashMap<String, usize> = HashMap::new();
    for token in descriptor.split('\t') {
        let parts: Vec<&str> = token.split(':').collect();
        if parts.len() >= 2 && parts[0] == "numeric" {
            let idx = vocab.len();
            vocab.insert(parts[1].to_string(), idx);
        }
    }
    if vocab.is_empty() {
        return Err(fail("field descriptor defines no numeric features".into()));
    }

    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut class_ids: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 {
            return Err(fail(format!("line {}: too few fields", lineno + 3)));
        }
        let id = fields[0].to_string();
        let mut row = vec![0.0; vocab.len()];
        let mut label: Option<String> = None;
        for field in &fields[1..] {
            let Some((key, value)) = field.split_once('=') else {
                continue;
            };
            if key == "label" {
                label = Some(value.to_string());
            } else if let Some(&j) = vocab.get(key) {
                row[j] = value.parse().map_err(|_| {
                    fail(format!("line {}: bad value `{}`", lineno + 3, field))
                })?;
            }
        }
        let label = label.ok_or_else(|| fail(format!("line {}: missing label", lineno + 3)))?;
        let node = rows.len();
        if ids.insert(id, node).is_some() {
            return Err(fail(format!("line {}: duplicate node id", lineno + 3)));
        }
        let next_class = class_ids.len();
        labels.push(*class_ids.entry(label).or_insert(next_class));
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(fail("no nodes found".into()));
    }

    let reader = BufReader::new(File::open(cites_path)?);
    let mut raw_edges = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if lineno < 2 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let endpoints: Vec<&str> = fields
            .iter()
            .filter_map(|f| f.strip_prefix("paper:"))
            .collect();
        if endpoints.len() != 2 {
            return Err(Error::Format(format!(
                "{}:{}: expected two `paper:<id>` fields",
                cites_path.display(),
                lineno + 1
            )));
        }
        raw_edges.push((endpoints[0].to_string(), endpoints[1].to_string()));
    }

    let pairs = resolve_edges(&raw_edges, &ids);
    let n = rows.len();
    let features = DenseMatrix::from_rows(&rows)?;
    let adjacency = adjacency_from_pairs(n, &pairs)?;
    CitationDataset::new("pubmed", features, adjacency, labels, class_ids.len())
}
