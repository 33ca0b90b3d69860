//! Per-view MLP autoencoders with batch normalization and ReLU.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::tape::{BatchStats, ParamId, Tape, Var};
use crate::error::{Error, Result};
use crate::rng;

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Eval,
}

/// Shape of one MLP. Hidden layers are Linear -> [BatchNorm] -> ReLU, the
/// last layer is linear.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub output_dim: usize,
    pub batchnorm: bool,
}

impl MlpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden_dims.contains(&0) {
            return Err(Error::Invalid(format!("MLP dims must be >= 1: {self:?}")));
        }
        Ok(())
    }

    /// Decoder spec mirroring this encoder spec.
    pub fn mirrored(&self) -> MlpSpec {
        MlpSpec {
            input_dim: self.output_dim,
            hidden_dims: self.hidden_dims.iter().rev().copied().collect(),
            output_dim: self.input_dim,
            batchnorm: self.batchnorm,
        }
    }

    fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 1);
        let mut prev = self.input_dim;
        for &h in &self.hidden_dims {
            dims.push((prev, h));
            prev = h;
        }
        dims.push((prev, self.output_dim));
        dims
    }

    pub fn param_count(&self) -> usize {
        let n_hidden = self.hidden_dims.len();
        self.layer_dims()
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| {
                let bn = if self.batchnorm && i < n_hidden { 2 * b } else { 0 };
                a * b + b + bn
            })
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchNorm {
    pub gamma: Matrix,
    pub beta: Matrix,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// in x out
    pub weight: Matrix,
    /// 1 x out
    pub bias: Matrix,
    pub bn: Option<BatchNorm>,
    pub relu: bool,
}

impl Layer {
    fn param_count(&self) -> usize {
        if self.bn.is_some() {
            4
        } else {
            2
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub spec: MlpSpec,
    pub layers: Vec<Layer>,
}

impl Mlp {
    /// He-style uniform init scaled by fan-in; biases and `beta` zero,
    /// `gamma` one, running variance one.
    pub fn init(spec: &MlpSpec, seed: u64) -> Result<Mlp> {
        spec.validate()?;
        let mut rng = rng::stream(seed, &[]);
        let n_hidden = spec.hidden_dims.len();
        let layers = spec
            .layer_dims()
            .into_iter()
            .enumerate()
            .map(|(i, (fan_in, fan_out))| {
                let bound = (6.0 / fan_in as f64).sqrt();
                let weight =
                    Matrix::from_fn(fan_in, fan_out, |_, _| rng.random_range(-bound..bound));
                let hidden = i < n_hidden;
                let bn = (hidden && spec.batchnorm).then(|| BatchNorm {
                    gamma: Matrix::filled(1, fan_out, 1.0),
                    beta: Matrix::zeros(1, fan_out),
                    running_mean: vec![0.0; fan_out],
                    running_var: vec![1.0; fan_out],
                });
                Layer {
                    weight,
                    bias: Matrix::zeros(1, fan_out),
                    bn,
                    relu: hidden,
                }
            })
            .collect();
        Ok(Mlp {
            spec: spec.clone(),
            layers,
        })
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn params(&self) -> Vec<&Matrix> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.push(&l.weight);
            out.push(&l.bias);
            if let Some(bn) = &l.bn {
                out.push(&bn.gamma);
                out.push(&bn.beta);
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
            if let Some(bn) = &mut l.bn {
                out.push(&mut bn.gamma);
                out.push(&mut bn.beta);
            }
        }
        out
    }

    /// Records the forward pass on `tape`. Parameter ids start at `base`.
    /// In train mode the per-layer batch statistics are returned so the
    /// caller can fold them into the running averages.
    pub fn forward<'a>(
        &'a self,
        tape: &mut Tape<'a>,
        base: usize,
        x: Var,
        mode: Mode,
    ) -> Result<(Var, Vec<BatchStats>)> {
        let in_cols = tape.value(x).cols();
        if in_cols != self.spec.input_dim {
            return Err(Error::shape(
                "mlp forward",
                format!("input has {in_cols} cols, expected {}", self.spec.input_dim),
            ));
        }
        let mut id = base;
        let mut next = || {
            id += 1;
            ParamId(id - 1)
        };
        let mut h = x;
        let mut stats = Vec::new();
        for (li, layer) in self.layers.iter().enumerate() {
            let w = tape.param(next(), &layer.weight);
            let b = tape.param(next(), &layer.bias);
            h = tape.matmul(h, w)?;
            h = tape.add_row(h, b)?;
            if let Some(bn) = &layer.bn {
                let g = tape.param(next(), &bn.gamma);
                let be = tape.param(next(), &bn.beta);
                h = match mode {
                    Mode::Train => {
                        let (out, s) = tape.batch_norm(h, g, be, BN_EPS)?;
                        stats.push(s);
                        out
                    }
                    Mode::Eval => tape.normalize_frozen(
                        h,
                        g,
                        be,
                        &bn.running_mean,
                        &bn.running_var,
                        BN_EPS,
                    )?,
                };
            }
            if layer.relu {
                h = tape.relu(h);
            }
            tape.value(h)
                .ensure_finite(|| format!("activation of layer {li}"))?;
        }
        Ok((h, stats))
    }

    pub fn update_running_stats(&mut self, stats: &[BatchStats]) {
        let mut it = stats.iter();
        for layer in &mut self.layers {
            if let Some(bn) = &mut layer.bn {
                let Some(s) = it.next() else { return };
                for (r, &m) in bn.running_mean.iter_mut().zip(&s.mean) {
                    *r = BN_MOMENTUM * *r + (1.0 - BN_MOMENTUM) * m;
                }
                for (r, &v) in bn.running_var.iter_mut().zip(&s.var) {
                    *r = BN_MOMENTUM * *r + (1.0 - BN_MOMENTUM) * v;
                }
            }
        }
    }
}

/// Encoder/decoder pair of one view.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewNet {
    pub encoder: Mlp,
    pub decoder: Mlp,
}

/// All views' autoencoders. Parameters are numbered view by view, encoder
/// before decoder, layer by layer as weight, bias, gamma, beta.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderBundle {
    pub views: Vec<ViewNet>,
}

/// Forward-pass handles of one view's autoencoder on a tape.
pub struct ViewForward {
    pub latent: Var,
    pub recon: Var,
    pub encoder_stats: Vec<BatchStats>,
    pub decoder_stats: Vec<BatchStats>,
}

impl AutoencoderBundle {
    pub fn init(encoders: &[MlpSpec], seed: u64) -> Result<Self> {
        let views = encoders
            .iter()
            .enumerate()
            .map(|(v, spec)| {
                Ok(ViewNet {
                    encoder: Mlp::init(spec, rng::derive(seed, &[v as u64, 0]))?,
                    decoder: Mlp::init(&spec.mirrored(), rng::derive(seed, &[v as u64, 1]))?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(AutoencoderBundle { views })
    }

    pub fn view_count(&self) -> usize {
        self.views.len()
    }

    pub fn latent_dim(&self) -> usize {
        self.views.first().map_or(0, |v| v.encoder.spec.output_dim)
    }

    fn view(&self, v: usize) -> Result<&ViewNet> {
        self.views
            .get(v)
            .ok_or_else(|| Error::Invalid(format!("no view {v}")))
    }

    /// First parameter id of view `v`'s (encoder, decoder).
    pub fn param_base(&self, v: usize) -> (usize, usize) {
        let mut base = 0;
        for net in &self.views[..v] {
            base += net.encoder.param_count() + net.decoder.param_count();
        }
        (base, base + self.views[v].encoder.param_count())
    }

    pub fn params(&self) -> Vec<&Matrix> {
        self.views
            .iter()
            .flat_map(|n| n.encoder.params().into_iter().chain(n.decoder.params()))
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Matrix> {
        self.views
            .iter_mut()
            .flat_map(|n| {
                n.encoder
                    .params_mut()
                    .into_iter()
                    .chain(n.decoder.params_mut())
            })
            .collect()
    }

    pub fn scalar_count(&self) -> usize {
        self.params().iter().map(|m| m.len()).sum()
    }

    /// Records encoder and decoder of view `v` on `tape`.
    pub fn forward_view<'a>(
        &'a self,
        tape: &mut Tape<'a>,
        v: usize,
        x: Var,
        mode: Mode,
    ) -> Result<ViewForward> {
        let net = self.view(v)?;
        let (eb, db) = self.param_base(v);
        let (latent, encoder_stats) = net.encoder.forward(tape, eb, x, mode)?;
        let (recon, decoder_stats) = net.decoder.forward(tape, db, latent, mode)?;
        Ok(ViewForward {
            latent,
            recon,
            encoder_stats,
            decoder_stats,
        })
    }

    pub fn apply_stats(&mut self, v: usize, encoder: &[BatchStats], decoder: &[BatchStats]) {
        let net = &mut self.views[v];
        net.encoder.update_running_stats(encoder);
        net.decoder.update_running_stats(decoder);
    }

    /// Latent representation of `x` for view `v`. Train mode folds the
    /// batch statistics into the running averages.
    pub fn encode(&mut self, v: usize, x: &Matrix, mode: Mode) -> Result<Matrix> {
        let (base, _) = self.param_base(v);
        let (out, stats) = {
            let net = self.view(v)?;
            let mut tape = Tape::new();
            let xv = tape.constant_ref(x);
            let (z, stats) = net.encoder.forward(&mut tape, base, xv, mode)?;
            (tape.value(z).clone(), stats)
        };
        if mode == Mode::Train {
            self.views[v].encoder.update_running_stats(&stats);
        }
        Ok(out)
    }

    /// Eval-mode encoding without touching any state.
    pub fn encode_eval(&self, v: usize, x: &Matrix) -> Result<Matrix> {
        let (base, _) = self.param_base(v);
        let net = self.view(v)?;
        let mut tape = Tape::new();
        let xv = tape.constant_ref(x);
        let (z, _) = net.encoder.forward(&mut tape, base, xv, Mode::Eval)?;
        Ok(tape.value(z).clone())
    }

    pub fn decode(&mut self, v: usize, z: &Matrix, mode: Mode) -> Result<Matrix> {
        let (_, base) = self.param_base(v);
        let (out, stats) = {
            let net = self.view(v)?;
            let mut tape = Tape::new();
            let zv = tape.constant_ref(z);
            let (x, stats) = net.decoder.forward(&mut tape, base, zv, mode)?;
            (tape.value(x).clone(), stats)
        };
        if mode == Mode::Train {
            self.views[v].decoder.update_running_stats(&stats);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(input: usize, hidden: Vec<usize>, out: usize, bn: bool) -> MlpSpec {
        MlpSpec {
            input_dim: input,
            hidden_dims: hidden,
            output_dim: out,
            batchnorm: bn,
        }
    }

    #[test]
    fn zero_weights_give_zero_latent_and_reconstruction() {
        let mut b = AutoencoderBundle::init(&[spec(3, vec![4, 4], 2, true)], 1).unwrap();
        for p in b.params_mut() {
            p.data_mut().fill(0.0);
        }
        let x = Matrix::from_fn(5, 3, |i, j| (i + j) as f64);
        let z = b.encode(0, &x, Mode::Eval).unwrap();
        assert!(z.data().iter().all(|&v| v == 0.0));
        let r = b.decode(0, &z, Mode::Eval).unwrap();
        assert_eq!(r.shape(), (5, 3));
        assert!(r.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn one_affine_relu_layer_by_hand() {
        // hidden layer of width 2 without batchnorm, then an identity head
        let mut b = AutoencoderBundle::init(&[spec(2, vec![2], 2, false)], 3).unwrap();
        let enc = &mut b.views[0].encoder;
        enc.layers[0].weight = Matrix::from_rows(&[vec![1.0, -1.0], vec![2.0, 0.5]]).unwrap();
        enc.layers[0].bias = Matrix::row_vector(vec![0.5, -1.0]);
        enc.layers[1].weight = Matrix::identity(2);
        enc.layers[1].bias = Matrix::zeros(1, 2);
        let x = Matrix::from_rows(&[vec![1.0, 1.0], vec![-1.0, 2.0]]).unwrap();
        let z = b.encode_eval(0, &x).unwrap();
        // row0: [1+2+0.5, -1+0.5-1] = [3.5, -1.5] -> relu [3.5, 0]
        // row1: [-1+4+0.5, 1+1-1] = [3.5, 1] -> [3.5, 1]
        assert_eq!(z.data(), &[3.5, 0.0, 3.5, 1.0]);
    }

    #[test]
    fn linear_decoder_by_hand() {
        let mut b = AutoencoderBundle::init(&[spec(3, vec![], 2, false)], 3).unwrap();
        let dec = &mut b.views[0].decoder;
        dec.layers[0].weight =
            Matrix::from_rows(&[vec![1.0, 0.0, 2.0], vec![-1.0, 3.0, 0.0]]).unwrap();
        dec.layers[0].bias = Matrix::row_vector(vec![0.0, 1.0, -1.0]);
        let z = Matrix::row_vector(vec![2.0, 1.0]);
        let x = b.decode(0, &z, Mode::Eval).unwrap();
        assert_eq!(x.data(), &[1.0, 4.0, 3.0]);
    }

    #[test]
    fn round_trip_shape_and_relu_sign() {
        let mut b = AutoencoderBundle::init(&[spec(7, vec![5, 6], 3, true)], 9).unwrap();
        let x = Matrix::from_fn(4, 7, |i, j| ((i * 7 + j) as f64).cos());
        let z = b.encode(0, &x, Mode::Train).unwrap();
        assert_eq!(z.shape(), (4, 3));
        assert_eq!(b.decode(0, &z, Mode::Train).unwrap().shape(), (4, 7));

        // the hidden stack alone: every entry passes through a ReLU last
        let net = &b.views[0].encoder;
        let hidden = Mlp {
            spec: MlpSpec {
                output_dim: 6,
                hidden_dims: vec![5],
                ..net.spec.clone()
            },
            layers: net.layers[..2].to_vec(),
        };
        let mut tape = Tape::new();
        let xv = tape.constant_ref(&x);
        let (h, _) = hidden.forward(&mut tape, 0, xv, Mode::Train).unwrap();
        assert!(tape.value(h).data().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn train_mode_updates_running_stats_eval_does_not() {
        let mut b = AutoencoderBundle::init(&[spec(2, vec![3], 2, true)], 5).unwrap();
        let x = Matrix::from_fn(6, 2, |i, j| (i as f64) - (j as f64) * 2.0);
        let before = b.clone();
        b.encode(0, &x, Mode::Eval).unwrap();
        assert_eq!(b, before);
        b.encode(0, &x, Mode::Train).unwrap();
        assert_ne!(b, before);
        let bn = b.views[0].encoder.layers[0].bn.as_ref().unwrap();
        assert!(bn.running_var.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn eval_mode_has_no_batch_coupling() {
        let mut b = AutoencoderBundle::init(&[spec(3, vec![4], 2, true)], 2).unwrap();
        let x = Matrix::from_fn(8, 3, |i, j| ((i * 3 + j) as f64 * 0.7).sin());
        b.encode(0, &x, Mode::Train).unwrap();
        let full = b.encode_eval(0, &x).unwrap();
        for i in 0..8 {
            let single = b.encode_eval(0, &x.select_rows(&[i])).unwrap();
            assert_eq!(single.row(0), full.row(i));
        }
    }

    #[test]
    fn single_row_train_batch_is_finite() {
        let mut b = AutoencoderBundle::init(&[spec(3, vec![4], 2, true)], 2).unwrap();
        let x = Matrix::row_vector(vec![1.0, 2.0, 3.0]);
        let z = b.encode(0, &x, Mode::Train).unwrap();
        assert!(z.is_finite());
    }

    #[test]
    fn input_width_is_checked() {
        let mut b = AutoencoderBundle::init(&[spec(3, vec![4], 2, true)], 2).unwrap();
        assert!(b.encode(0, &Matrix::zeros(2, 4), Mode::Eval).is_err());
    }

    #[test]
    fn param_count_matches_spec() {
        let s = spec(10, vec![8, 6], 4, true);
        let m = Mlp::init(&s, 0).unwrap();
        let scalars: usize = m.params().iter().map(|p| p.len()).sum();
        assert_eq!(scalars, s.param_count());
        assert_eq!(m.param_count(), 3 * 2 + 2 * 2);
    }
}
