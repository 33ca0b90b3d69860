//! On-disk layout.
//!
//! A TOML manifest names the dataset, K, the labels file and one entry per
//! view. Feature files are headerless CSV with the global id in the first
//! column; the labels file is `id,class` per line.
//!
//! ```toml
//! name = "toy"
//! k = 2
//! labels = "labels.csv"
//! paired = false
//!
//! [[views]]
//! id = 0
//! features = "view0.csv"
//! dim = 3
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::dataset::{MultiViewDataset, PairedDataset, ViewData};
use crate::diffnet::Matrix;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub name: String,
    pub k: usize,
    pub labels: PathBuf,
    #[serde(default)]
    pub paired: bool,
    pub views: Vec<ManifestView>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestView {
    pub id: usize,
    pub features: PathBuf,
    pub dim: usize,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: e.to_string(),
        })
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .filter(|(_, l)| !l.is_empty())
        .collect())
}

fn read_features(path: &Path, dim: usize) -> Result<(Vec<u64>, Matrix)> {
    let mut ids = Vec::new();
    let mut data = Vec::new();
    for (ln, line) in read_lines(path)? {
        let mut fields = line.split(',');
        let id = fields
            .next()
            .and_then(|f| f.trim().parse::<u64>().ok())
            .ok_or_else(|| parse_err(path, ln, "bad sample id"))?;
        let before = data.len();
        for f in fields {
            let x: f64 = f
                .trim()
                .parse()
                .map_err(|_| parse_err(path, ln, format!("bad number {f:?}")))?;
            if !x.is_finite() {
                return Err(parse_err(path, ln, "non-finite feature"));
            }
            data.push(x);
        }
        let got = data.len() - before;
        if got != dim {
            return Err(parse_err(
                path,
                ln,
                format!("{got} features, manifest says dim = {dim}"),
            ));
        }
        ids.push(id);
    }
    let n = ids.len();
    Ok((ids, Matrix::new(n, dim, data)?))
}

fn read_labels(path: &Path, k: usize) -> Result<HashMap<u64, usize>> {
    let mut out = HashMap::new();
    for (ln, line) in read_lines(path)? {
        let mut it = line.split(',').map(str::trim);
        let (Some(id), Some(c), None) = (it.next(), it.next(), it.next()) else {
            return Err(parse_err(path, ln, "expected `id,class`"));
        };
        let id: u64 = id.parse().map_err(|_| parse_err(path, ln, "bad id"))?;
        let c: usize = c.parse().map_err(|_| parse_err(path, ln, "bad class"))?;
        if c >= k {
            return Err(parse_err(
                path,
                ln,
                format!("label {c} out of range for K = {k}"),
            ));
        }
        if out.insert(id, c).is_some() {
            return Err(parse_err(path, ln, format!("duplicate label for id {id}")));
        }
    }
    Ok(out)
}

fn base_dir(manifest_path: &Path) -> PathBuf {
    manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default()
}

fn read_views(manifest_path: &Path, m: &Manifest) -> Result<(Vec<ViewData>, HashMap<u64, usize>)> {
    let dir = base_dir(manifest_path);
    let labels = read_labels(&dir.join(&m.labels), m.k)?;
    let mut views = Vec::with_capacity(m.views.len());
    for mv in &m.views {
        let path = dir.join(&mv.features);
        let (ids, features) = read_features(&path, mv.dim)?;
        let view_labels = ids
            .iter()
            .map(|id| {
                labels.get(id).copied().ok_or_else(|| {
                    Error::Dataset(format!("no label for sample {id} ({})", path.display()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        views.push(ViewData {
            id: mv.id,
            features,
            ids,
            labels: view_labels,
        });
    }
    Ok((views, labels))
}

/// Loads an unpaired dataset.
pub fn load(manifest_path: &Path) -> Result<MultiViewDataset> {
    let m = Manifest::read(manifest_path)?;
    let (views, _) = read_views(manifest_path, &m)?;
    MultiViewDataset::new(m.name, m.k, views)
}

/// Loads a dataset whose views all observe the same samples.
pub fn load_paired(manifest_path: &Path) -> Result<PairedDataset> {
    let m = Manifest::read(manifest_path)?;
    let (views, _) = read_views(manifest_path, &m)?;
    let first = views
        .first()
        .ok_or_else(|| Error::Dataset("manifest lists no views".into()))?;
    let ids = first.ids.clone();
    let labels = first.labels.clone();
    let mut mats = Vec::with_capacity(views.len());
    for v in views {
        if v.ids != ids {
            return Err(Error::Dataset(format!(
                "view {} does not list the same samples in the same order",
                v.id
            )));
        }
        mats.push((v.id, v.features));
    }
    let p = PairedDataset {
        name: m.name,
        k: m.k,
        ids,
        labels,
        views: mats,
    };
    p.validate()?;
    Ok(p)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn features_csv(ids: &[u64], m: &Matrix) -> String {
    let mut s = String::new();
    for (id, row) in ids.iter().zip(m.row_iter()) {
        let _ = write!(s, "{id}");
        for x in row {
            // Display prints the shortest string that parses back exactly
            let _ = write!(s, ",{x}");
        }
        s.push('\n');
    }
    s
}

fn write_manifest(dir: &Path, m: &Manifest) -> Result<PathBuf> {
    let path = dir.join("manifest.toml");
    let text = toml::to_string(m).map_err(|e| Error::Dataset(e.to_string()))?;
    write(&path, &text)?;
    Ok(path)
}

/// Writes manifest, one CSV per view and the labels file into `dir`.
/// Returns the manifest path.
pub fn save(ds: &MultiViewDataset, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut views = Vec::new();
    let mut labels: Vec<(u64, usize)> = Vec::new();
    for v in &ds.views {
        let file = PathBuf::from(format!("view{}.csv", v.id));
        write(&dir.join(&file), &features_csv(&v.ids, &v.features))?;
        views.push(ManifestView {
            id: v.id,
            features: file,
            dim: v.dim(),
        });
        labels.extend(v.ids.iter().copied().zip(v.labels.iter().copied()));
    }
    labels.sort_unstable();
    let mut text = String::new();
    for (id, c) in labels {
        let _ = writeln!(text, "{id},{c}");
    }
    write(&dir.join("labels.csv"), &text)?;
    write_manifest(
        dir,
        &Manifest {
            name: ds.name.clone(),
            k: ds.k,
            labels: "labels.csv".into(),
            paired: false,
            views,
        },
    )
}

pub fn save_paired(ds: &PairedDataset, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut views = Vec::new();
    for (id, m) in &ds.views {
        let file = PathBuf::from(format!("view{id}.csv"));
        write(&dir.join(&file), &features_csv(&ds.ids, m))?;
        views.push(ManifestView {
            id: *id,
            features: file,
            dim: m.cols(),
        });
    }
    let mut text = String::new();
    for (id, c) in ds.ids.iter().zip(&ds.labels) {
        let _ = writeln!(text, "{id},{c}");
    }
    write(&dir.join("labels.csv"), &text)?;
    write_manifest(
        dir,
        &Manifest {
            name: ds.name.clone(),
            k: ds.k,
            labels: "labels.csv".into(),
            paired: true,
            views,
        },
    )
}
