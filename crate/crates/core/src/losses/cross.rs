use crate::diffnet::{Matrix, Tape, Var};
use crate::error::{Error, Result};

/// Lower bound on every entry of a view distribution before renormalizing.
pub const DIST_FLOOR: f64 = 1e-8;

/// For each view, the views whose silhouette beats it by the given factor.
/// A non-positive silhouette uses the additive margin
/// `s_r > s_v + coeff * |s_v|` instead.
pub fn select_reliable(sils: &[f64], coeff: f64) -> Vec<Vec<usize>> {
    sils.iter()
        .enumerate()
        .map(|(v, &sv)| {
            let bar = if sv > 0.0 { coeff * sv } else { sv + coeff * sv.abs() };
            sils.iter()
                .enumerate()
                .filter(|&(r, &sr)| r != v && sr > bar)
                .map(|(r, _)| r)
                .collect()
        })
        .collect()
}

fn softmax_rows(cos: &Matrix, inv_t: f64) -> Matrix {
    let mut out = cos.map(|c| c * inv_t);
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for x in row.iter_mut() {
            *x = (*x - max).exp();
            sum += *x;
        }
        for x in row.iter_mut() {
            *x /= sum;
        }
    }
    out
}

fn floor_normalize(q: &[f64]) -> (Vec<f64>, f64) {
    let p: Vec<f64> = q.iter().map(|&x| x.max(DIST_FLOOR)).collect();
    let s: f64 = p.iter().sum();
    (p.iter().map(|x| x / s).collect(), s)
}

/// Batch-mean soft assignment of the rows of `z` to `centroids`, by softmax
/// of cosine over temperature; a `1 x K` row floored at [`DIST_FLOOR`].
pub fn view_distribution(tape: &mut Tape<'_>, z: Var, centroids: &Matrix, temperature: f64) -> Result<Var> {
    if centroids.rows() < 2 {
        return Err(Error::Invalid("view distribution needs at least 2 centroids".into()));
    }
    if tape.value(z).rows() == 0 {
        return Err(Error::Invalid("view distribution of an empty batch".into()));
    }
    let zn = tape.row_normalize(z);
    let c = tape.constant(normalize_rows(centroids));
    let cos = tape.matmul_nt(zn, c)?;
    let inv_t = 1.0 / temperature;
    let soft = softmax_rows(tape.value(cos), inv_t);
    let b = soft.rows() as f64;
    let q: Vec<f64> = soft.col_sums().data().iter().map(|x| x / b).collect();
    let (p, _) = floor_normalize(&q);
    Ok(tape.fused(
        Matrix::row_vector(p),
        vec![cos],
        Box::new(move |g, vals| {
            let soft = softmax_rows(vals[0], inv_t);
            let b = soft.rows() as f64;
            let q: Vec<f64> = soft.col_sums().data().iter().map(|x| x / b).collect();
            let (p, s) = floor_normalize(&q);
            let g = g.data();
            let gp_dot: f64 = g.iter().zip(&p).map(|(a, b)| a * b).sum();
            // d/dq through floor and renormalization
            let gq: Vec<f64> = (0..q.len())
                .map(|j| if q[j] > DIST_FLOOR { (g[j] - gp_dot) / s } else { 0.0 })
                .collect();
            let mut d = Matrix::zeros(soft.rows(), soft.cols());
            for i in 0..soft.rows() {
                let si = soft.row(i);
                let dot: f64 = si.iter().zip(&gq).map(|(a, b)| a * b).sum();
                for (j, out) in d.row_mut(i).iter_mut().enumerate() {
                    *out = si[j] * (gq[j] - dot) * inv_t / b;
                }
            }
            vec![Some(d)]
        }),
    ))
}

fn normalize_rows(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let n = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > crate::diffnet::tape::ZERO_NORM {
            row.iter_mut().for_each(|x| *x /= n);
        } else {
            row.iter_mut().for_each(|x| *x = 0.0);
        }
    }
    out
}

/// `sum_v sum_{r in reliable[v]} KL(P_v || Q_r) / V^2` with `Q_r` held fixed.
pub fn cross_view_kl(tape: &mut Tape<'_>, dists: &[Var], reliable: &[Vec<usize>]) -> Result<Var> {
    let v_count = dists.len();
    if reliable.len() != v_count {
        return Err(Error::shape("cross_view_kl", "one reliable set per view"));
    }
    let k = tape.value(dists[0]).len();
    if dists.iter().any(|&d| tape.value(d).len() != k) {
        return Err(Error::shape("cross_view_kl", "distributions differ in length"));
    }
    if reliable.iter().flatten().any(|&r| r >= v_count) {
        return Err(Error::Invalid("reliable view index out of range".into()));
    }
    let w = 1.0 / (v_count * v_count) as f64;
    let mut value = 0.0;
    for (v, rs) in reliable.iter().enumerate() {
        for &r in rs {
            value += w * kl(tape.value(dists[v]).data(), tape.value(dists[r]).data());
        }
    }
    let reliable = reliable.to_vec();
    Ok(tape.fused(
        Matrix::scalar(value),
        dists.to_vec(),
        Box::new(move |g, vals| {
            let gs = g.item() * w;
            reliable
                .iter()
                .enumerate()
                .map(|(v, rs)| {
                    if rs.is_empty() {
                        return None;
                    }
                    let p = vals[v].data();
                    let mut d = Matrix::zeros(1, p.len());
                    for &r in rs {
                        let q = vals[r].data();
                        for (j, out) in d.data_mut().iter_mut().enumerate() {
                            *out += gs * ((p[j] / q[j]).ln() + 1.0);
                        }
                    }
                    Some(d)
                })
                .collect()
        }),
    ))
}

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| a * (a / b).ln()).sum()
}
