//! Bundle directory format.
//!
//! ```text
//! meta.json     {"name": str, "num_nodes": int, "num_features": int, "num_classes": int}
//! edges.tsv     u<TAB>v           one undirected edge per line, u < v, 0-based
//! features.srm  id<TAB>col:val... strictly increasing columns, at least one pair
//! labels.tsv    id<TAB>class      one line per node, ids ascending
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::CsrMatrix;

use super::GraphBundle;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub name: String,
    pub num_nodes: usize,
    pub num_features: usize,
    pub num_classes: usize,
}

const FILES: [&str; 4] = ["meta.json", "edges.tsv", "features.srm", "labels.tsv"];

fn read(path: &Path) -> Result<String> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn malformed(file: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Malformed {
        file: file.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn parse_id(file: &Path, line: usize, tok: &str, what: &str, bound: usize) -> Result<usize> {
    let v: usize = tok
        .parse()
        .map_err(|_| malformed(file, line, format!("{what} `{tok}` is not a non-negative integer")))?;
    if v >= bound {
        return Err(malformed(file, line, format!("{what} {v} out of range [0, {bound})")));
    }
    Ok(v)
}

/// Non-empty lines with their 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

/// Loads and validates a bundle directory.
pub fn load_bundle(dir: impl AsRef<Path>) -> Result<GraphBundle> {
    let dir = dir.as_ref();
    for f in FILES {
        let p = dir.join(f);
        if !p.is_file() {
            return Err(Error::MissingFile(p));
        }
    }

    let meta_path = dir.join("meta.json");
    let meta: BundleMeta = serde_json::from_str(&read(&meta_path)?).map_err(|source| Error::Json {
        path: meta_path.clone(),
        source,
    })?;
    let n = meta.num_nodes;

    let edges_path = dir.join("edges.tsv");
    let mut edges = Vec::new();
    let mut flipped = 0usize;
    for (ln, line) in lines(&read(&edges_path)?) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(malformed(&edges_path, ln, "expected `u<TAB>v`"));
        }
        let u = parse_id(&edges_path, ln, toks[0], "node id", n)?;
        let v = parse_id(&edges_path, ln, toks[1], "node id", n)?;
        if u == v {
            return Err(malformed(&edges_path, ln, format!("self-loop on node {u}")));
        }
        if u > v {
            flipped += 1;
        }
        edges.push((u, v));
    }
    if flipped > 0 {
        log::warn!(
            "{}: {flipped} edge(s) listed as v<TAB>u were read as undirected",
            edges_path.display()
        );
    }

    let feat_path = dir.join("features.srm");
    let mut feature_rows: Vec<Option<Vec<(usize, f64)>>> = vec![None; n];
    for (ln, line) in lines(&read(&feat_path)?) {
        let mut toks = line.split_whitespace();
        let id = parse_id(&feat_path, ln, toks.next().unwrap_or(""), "node id", n)?;
        if feature_rows[id].is_some() {
            return Err(malformed(&feat_path, ln, format!("node {id} listed twice")));
        }
        let mut row = Vec::new();
        for tok in toks {
            let (c, v) = tok
                .split_once(':')
                .ok_or_else(|| malformed(&feat_path, ln, format!("expected col:val, got `{tok}`")))?;
            let col = parse_id(&feat_path, ln, c, "column", meta.num_features)?;
            let val: f64 = v
                .parse()
                .map_err(|_| malformed(&feat_path, ln, format!("value `{v}` is not a number")))?;
            if !val.is_finite() || val < 0.0 {
                return Err(malformed(&feat_path, ln, format!("value {val} must be finite and >= 0")));
            }
            if row.last().is_some_and(|&(prev, _)| prev >= col) {
                return Err(malformed(&feat_path, ln, "columns must be strictly increasing"));
            }
            row.push((col, val));
        }
        if row.is_empty() {
            return Err(malformed(&feat_path, ln, format!("node {id} has no feature entries")));
        }
        feature_rows[id] = Some(row);
    }
    let feature_rows: Vec<Vec<(usize, f64)>> = feature_rows
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.ok_or_else(|| malformed(&feat_path, 0, format!("node {i} has no feature line"))))
        .collect::<Result<_>>()?;
    let features = CsrMatrix::from_row_entries(meta.num_features, &feature_rows)?;

    let labels_path = dir.join("labels.tsv");
    let mut labels = Vec::with_capacity(n);
    for (ln, line) in lines(&read(&labels_path)?) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(malformed(&labels_path, ln, "expected `node_id<TAB>class_id`"));
        }
        let id = parse_id(&labels_path, ln, toks[0], "node id", n)?;
        if id != labels.len() {
            return Err(malformed(
                &labels_path,
                ln,
                format!("expected node id {}, found {id}", labels.len()),
            ));
        }
        labels.push(parse_id(&labels_path, ln, toks[1], "class id", meta.num_classes)?);
    }
    if labels.len() != n {
        return Err(malformed(
            &labels_path,
            0,
            format!("{} labels for {n} nodes", labels.len()),
        ));
    }

    GraphBundle::new(meta.name, meta.num_classes, edges, features, labels)
}

/// Writes `bundle` into `dir` (created if needed).
pub fn save_bundle(bundle: &GraphBundle, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, body: String| -> Result<PathBuf> {
        let p = dir.join(name);
        fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        Ok(p)
    };

    let meta = BundleMeta {
        name: bundle.name().to_string(),
        num_nodes: bundle.num_nodes(),
        num_features: bundle.num_features(),
        num_classes: bundle.num_classes(),
    };
    let mut meta_json = serde_json::to_string(&meta).expect("meta serializes");
    meta_json.push('\n');
    write("meta.json", meta_json)?;

    let mut edges = String::new();
    for &(u, v) in bundle.edges() {
        writeln!(edges, "{u}\t{v}").unwrap();
    }
    write("edges.tsv", edges)?;

    let mut feats = String::new();
    for r in 0..bundle.num_nodes() {
        write!(feats, "{r}").unwrap();
        for (c, v) in bundle.features().row(r) {
            write!(feats, "\t{c}:{v}").unwrap();
        }
        feats.push('\n');
    }
    write("features.srm", feats)?;

    let mut labels = String::new();
    for (i, y) in bundle.labels().iter().enumerate() {
        writeln!(labels, "{i}\t{y}").unwrap();
    }
    write("labels.tsv", labels)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_dir(meta: &str, edges: &str, feats: &str, labels: &str) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("meta.json"), meta).unwrap();
        fs::write(dir.path().join("edges.tsv"), edges).unwrap();
        fs::write(dir.path().join("features.srm"), feats).unwrap();
        fs::write(dir.path().join("labels.tsv"), labels).unwrap();
        dir
    }

    const META3: &str = r#"{"name": "tiny", "num_nodes": 3, "num_features": 2, "num_classes": 2}"#;
    const FEATS3: &str = "0\t0:1\n1\t1:2.5\n2\t0:1\t1:1\n";

    #[test]
    fn loads_declared_content() {
        let d = write_dir(META3, "0\t1\n", FEATS3, "0\t0\n1\t0\n2\t1\n");
        let b = load_bundle(d.path()).unwrap();
        assert_eq!(b.name(), "tiny");
        assert_eq!((b.num_nodes(), b.num_features(), b.num_classes()), (3, 2, 2));
        assert_eq!(b.edges(), &[(0, 1)]);
        assert_eq!(b.labels(), &[0, 0, 1]);
        assert_eq!(b.features().get(1, 1), 2.5);
    }

    #[test]
    fn both_orientations_are_a_duplicate() {
        let d = write_dir(META3, "0 1\n1 0\n", FEATS3, "0\t0\n1\t0\n2\t1\n");
        let err = load_bundle(d.path()).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn class_out_of_range_reports_line() {
        let meta = r#"{"name": "x", "num_nodes": 3, "num_features": 2, "num_classes": 3}"#;
        let d = write_dir(meta, "", FEATS3, "0\t0\n1\t5\n2\t1\n");
        match load_bundle(d.path()).unwrap_err() {
            Error::Malformed { line, msg, .. } => {
                assert_eq!(line, 2);
                assert!(msg.contains("out of range"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn missing_file_and_bad_lines() {
        let d = write_dir(META3, "0\t1\n", FEATS3, "0\t0\n1\t0\n2\t1\n");
        fs::remove_file(d.path().join("labels.tsv")).unwrap();
        assert!(matches!(load_bundle(d.path()), Err(Error::MissingFile(_))));

        let d = write_dir(META3, "0\t1\n", "0\t0:1\n1\n2\t0:1\n", "0\t0\n1\t0\n2\t1\n");
        assert!(matches!(load_bundle(d.path()), Err(Error::Malformed { line: 2, .. })));

        let d = write_dir(META3, "0\t1\n", "0\t1:1\t0:1\n1\t0:1\n2\t0:1\n", "0\t0\n1\t0\n2\t1\n");
        assert!(matches!(load_bundle(d.path()), Err(Error::Malformed { line: 1, .. })));

        let d = write_dir(META3, "0\tx\n", FEATS3, "0\t0\n1\t0\n2\t1\n");
        assert!(matches!(load_bundle(d.path()), Err(Error::Malformed { line: 1, .. })));
    }

    #[test]
    fn empty_class_rejected() {
        let d = write_dir(META3, "", FEATS3, "0\t0\n1\t0\n2\t0\n");
        assert!(matches!(load_bundle(d.path()), Err(Error::Invariant(_))));
    }
}
