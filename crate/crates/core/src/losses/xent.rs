use crate::diffnet::{Matrix, Tape, Var};

/// Positives, negatives and the per-positive weight of one anchor row of a
/// similarity matrix.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct AnchorPairs {
    pub pos: Vec<usize>,
    pub neg: Vec<usize>,
    pub weight: f64,
}

fn log_sum_exp(row: &[f64], idx: &[usize], inv_t: f64) -> (f64, Vec<f64>) {
    let max = idx
        .iter()
        .map(|&j| row[j] * inv_t)
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = idx.iter().map(|&j| (row[j] * inv_t - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let soft = exps.iter().map(|e| e / sum).collect();
    (max + sum.ln(), soft)
}

/// `sum_i weight_i * sum_{p in pos_i} -log(exp(s_ip/t) / sum_{n in neg_i} exp(s_in/t))`
/// over rows of the similarity matrix `sim`, one [`AnchorPairs`] per row.
/// Anchors without positives or without negatives contribute 0.
pub fn masked_nt_xent<'a>(tape: &mut Tape<'a>, sim: Var, anchors: Vec<AnchorPairs>, temperature: f64) -> Var {
    let inv_t = 1.0 / temperature;
    let s = tape.value(sim);
    debug_assert_eq!(anchors.len(), s.rows());
    let mut value = 0.0;
    for (i, a) in anchors.iter().enumerate() {
        if a.pos.is_empty() || a.neg.is_empty() {
            continue;
        }
        let row = s.row(i);
        let (lse, _) = log_sum_exp(row, &a.neg, inv_t);
        for &p in &a.pos {
            value += a.weight * (lse - row[p] * inv_t);
        }
    }
    tape.fused(
        Matrix::scalar(value),
        vec![sim],
        Box::new(move |g, vals| {
            let s = vals[0];
            let gs = g.item();
            let mut d = Matrix::zeros(s.rows(), s.cols());
            for (i, a) in anchors.iter().enumerate() {
                if a.pos.is_empty() || a.neg.is_empty() {
                    continue;
                }
                let (_, soft) = log_sum_exp(s.row(i), &a.neg, inv_t);
                let row = d.row_mut(i);
                for &p in &a.pos {
                    row[p] -= gs * a.weight * inv_t;
                }
                let k = gs * a.weight * a.pos.len() as f64 * inv_t;
                for (&n, sm) in a.neg.iter().zip(soft) {
                    row[n] += k * sm;
                }
            }
            vec![Some(d)]
        }),
    )
}
