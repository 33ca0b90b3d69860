use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dataio::MultiViewDataset;
use crate::error::{Error, Result};
use crate::trainer::RunArtifacts;

/// One exported sample.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingRow {
    pub id: u64,
    pub view: usize,
    pub label: usize,
    pub predicted: usize,
    pub latent: Vec<f64>,
}

/// Writes `id,view,label,predicted,z_0..z_{D-1}` for every sample, with a
/// header row. Floats use the shortest exact representation.
pub fn export_embeddings(run: &RunArtifacts, ds: &MultiViewDataset, path: &Path) -> Result<()> {
    let d = run.latents.first().map_or(0, |z| z.cols());
    let mut s = String::from("id,view,label,predicted");
    for j in 0..d {
        let _ = write!(s, ",z{j}");
    }
    s.push('\n');
    let mut row = 0;
    for (z, view) in run.latents.iter().zip(&ds.views) {
        for i in 0..view.len() {
            let _ = write!(
                s,
                "{},{},{},{}",
                view.ids[i], view.id, view.labels[i], run.final_assignment.labels[row]
            );
            for x in z.row(i) {
                let _ = write!(s, ",{x}");
            }
            s.push('\n');
            row += 1;
        }
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_embeddings(path: &Path) -> Result<Vec<EmbeddingRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: usize| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: "malformed embedding row".into(),
    };
    text.lines()
        .enumerate()
        .skip(1)
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() < 4 {
                return Err(bad(i + 1));
            }
            let int = |s: &str| s.parse::<u64>().map_err(|_| bad(i + 1));
            Ok(EmbeddingRow {
                id: int(f[0])?,
                view: int(f[1])? as usize,
                label: int(f[2])? as usize,
                predicted: int(f[3])? as usize,
                latent: f[4..]
                    .iter()
                    .map(|x| x.parse::<f64>().map_err(|_| bad(i + 1)))
                    .collect::<Result<_>>()?,
            })
        })
        .collect()
}
