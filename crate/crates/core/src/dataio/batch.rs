use rand::seq::SliceRandom;

use crate::rng;

/// Per-view shuffled mini-batches.
///
/// Each view is shuffled independently per epoch. A training step takes one
/// batch from every view; views that run out before the longest one start
/// a fresh shuffle of themselves within the same epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchPlan {
    pub batch_size: usize,
    pub seed: u64,
}

impl BatchPlan {
    pub fn new(batch_size: usize, seed: u64) -> Self {
        BatchPlan {
            batch_size: batch_size.max(1),
            seed,
        }
    }

    fn order(&self, view: usize, n: usize, epoch: usize, cycle: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng::stream(
            self.seed,
            &[epoch as u64, view as u64, cycle as u64],
        ));
        idx
    }

    /// One pass over view `view`: a permutation of `0..n` cut into batches,
    /// the last possibly ragged.
    pub fn epoch_batches(&self, view: usize, n: usize, epoch: usize) -> Vec<Vec<usize>> {
        self.order(view, n, epoch, 0)
            .chunks(self.batch_size)
            .map(<[usize]>::to_vec)
            .collect()
    }

    pub fn steps_per_epoch(&self, sizes: &[usize]) -> usize {
        sizes
            .iter()
            .map(|&n| n.div_ceil(self.batch_size))
            .max()
            .unwrap_or(0)
    }

    /// `[step][view]` batch indices for one epoch.
    pub fn steps(&self, sizes: &[usize], epoch: usize) -> Vec<Vec<Vec<usize>>> {
        let steps = self.steps_per_epoch(sizes);
        let per_view: Vec<Vec<Vec<usize>>> = sizes
            .iter()
            .enumerate()
            .map(|(v, &n)| {
                let mut batches = Vec::with_capacity(steps);
                let mut cycle = 0;
                while batches.len() < steps && n > 0 {
                    let order = self.order(v, n, epoch, cycle);
                    batches.extend(order.chunks(self.batch_size).map(<[usize]>::to_vec));
                    cycle += 1;
                }
                batches.truncate(steps);
                batches
            })
            .collect();
        (0..steps)
            .map(|s| per_view.iter().map(|b| b[s].clone()).collect())
            .collect()
    }
}
