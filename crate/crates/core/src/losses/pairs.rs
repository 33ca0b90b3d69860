/// Batch-local true-positive and true-negative partners of each sample.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PairSets {
    /// Same cluster at every active level.
    pub tp: Vec<Vec<usize>>,
    /// Different cluster at every active level.
    pub tn: Vec<Vec<usize>>,
}

impl PairSets {
    pub fn m(&self, i: usize) -> usize {
        self.tp[i].len()
    }

    pub fn n(&self, i: usize) -> usize {
        self.tn[i].len()
    }
}

/// Pairs within `batch` (indices into the view) whose relation is the same
/// at every level in `levels` (one full-view label vector per active level).
/// Pairs that agree at some levels and disagree at others land in neither set.
pub fn build_inner_pairs(levels: &[&[usize]], batch: &[usize]) -> PairSets {
    let b = batch.len();
    let mut tp = vec![Vec::new(); b];
    let mut tn = vec![Vec::new(); b];
    for i in 0..b {
        for j in 0..b {
            if i == j {
                continue;
            }
            let (gi, gj) = (batch[i], batch[j]);
            let mut all_same = true;
            let mut all_diff = true;
            for labels in levels {
                if labels[gi] == labels[gj] {
                    all_diff = false;
                } else {
                    all_same = false;
                }
            }
            if all_same {
                tp[i].push(j);
            } else if all_diff {
                tn[i].push(j);
            }
        }
    }
    PairSets { tp, tn }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_level() {
        let l = [0, 1, 0, 1, 1];
        let p = build_inner_pairs(&[&l], &[0, 1, 2, 3, 4]);
        assert_eq!(p.tp[1], vec![3, 4]);
        assert_eq!(p.tn[1], vec![0, 2]);
    }

    #[test]
    fn cross_level_inconsistent_pairs_are_excluded() {
        let l1 = [0, 0, 1, 1];
        let l2 = [0, 1, 1, 0];
        let p = build_inner_pairs(&[&l1, &l2], &[0, 1, 2, 3]);
        assert!(p.tp[0].is_empty());
        assert_eq!(p.tn[0], vec![2]);
    }

    #[test]
    fn one_cluster_everywhere() {
        let l = [3; 4];
        let p = build_inner_pairs(&[&l, &l], &[0, 1, 2, 3]);
        assert!(p.tn.iter().all(Vec::is_empty));
        assert_eq!(p.tp[2], vec![0, 1, 3]);
    }

    #[test]
    fn batch_indices_are_local() {
        let l = [0, 1, 0, 1, 0, 1];
        let p = build_inner_pairs(&[&l], &[5, 2, 3]);
        // view rows 5, 3 share label 1; row 2 is label 0
        assert_eq!(p.tp[0], vec![2]);
        assert_eq!(p.tn[0], vec![1]);
    }
}
