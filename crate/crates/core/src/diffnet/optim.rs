//! Gradient sets and the Adam optimizer.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::mlp::AutoencoderBundle;
use super::tape::ParamId;
use crate::error::{Error, Result};

/// One gradient matrix per bundle parameter, in bundle order.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet {
    pub grads: Vec<Matrix>,
}

impl GradientSet {
    pub fn zeros_like(bundle: &AutoencoderBundle) -> Self {
        GradientSet {
            grads: bundle
                .params()
                .iter()
                .map(|p| Matrix::zeros(p.rows(), p.cols()))
                .collect(),
        }
    }

    /// Expands sparse tape output; parameters off the loss path get zeros.
    pub fn from_tape(bundle: &AutoencoderBundle, mut sparse: BTreeMap<ParamId, Matrix>) -> Result<Self> {
        let params = bundle.params();
        let mut grads = Vec::with_capacity(params.len());
        for (i, p) in params.iter().enumerate() {
            match sparse.remove(&ParamId(i)) {
                Some(g) if g.shape() == p.shape() => grads.push(g),
                Some(g) => {
                    return Err(Error::shape(
                        "GradientSet",
                        format!("param {i}: {:?} vs {:?}", g.shape(), p.shape()),
                    ))
                }
                None => grads.push(Matrix::zeros(p.rows(), p.cols())),
            }
        }
        if let Some((id, _)) = sparse.into_iter().next() {
            return Err(Error::Invalid(format!("gradient for unknown param {}", id.0)));
        }
        Ok(GradientSet { grads })
    }

    pub fn is_finite(&self) -> bool {
        self.grads.iter().all(Matrix::is_finite)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub config: AdamConfig,
    pub first: Vec<Matrix>,
    pub second: Vec<Matrix>,
    pub steps: u64,
}

impl OptimizerState {
    pub fn new(config: AdamConfig, bundle: &AutoencoderBundle) -> Self {
        let zeros = GradientSet::zeros_like(bundle).grads;
        OptimizerState {
            config,
            first: zeros.clone(),
            second: zeros,
            steps: 0,
        }
    }

    /// One bias-corrected Adam update of every bundle parameter.
    pub fn step(&mut self, bundle: &mut AutoencoderBundle, grads: &GradientSet) -> Result<()> {
        if !grads.is_finite() {
            return Err(Error::NonFinite {
                context: format!("gradient at optimizer step {}", self.steps + 1),
            });
        }
        let mut params = bundle.params_mut();
        if params.len() != grads.grads.len() || params.len() != self.first.len() {
            return Err(Error::shape("adam step", "parameter count"));
        }
        self.steps += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.steps as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(&grads.grads)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            if p.shape() != g.shape() {
                return Err(Error::shape("adam step", "gradient shape"));
            }
            let (pd, gd) = (p.data_mut(), g.data());
            for (((w, &gi), mi), vi) in pd
                .iter_mut()
                .zip(gd)
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *mi = beta1 * *mi + (1.0 - beta1) * gi;
                *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                let mhat = *mi / c1;
                let vhat = *vi / c2;
                *w -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
