//! Trace distance, the explicit mean-field and correlation bounds, and the
//! telescoping decomposition of `γ_N^(m+1) - γ^{⊗(m+1)}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hartree::DensityMatrix;
use crate::linalg::{self, CMat};
use crate::operators::BoundConstants;

/// Measured values against a bound over a time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub times: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub label: String,
}

impl BoundCurve {
    pub fn new(label: impl Into<String>, times: Vec<f64>, lhs: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        if lhs.len() != times.len() || rhs.len() != times.len() {
            return Err(Error::InvalidArgument(format!(
                "curve lengths differ: {} times, {} lhs, {} rhs",
                times.len(),
                lhs.len(),
                rhs.len()
            )));
        }
        if let Some(r) = rhs.iter().find(|r| !(**r >= 0.0)) {
            return Err(Error::InvalidArgument(format!("negative bound value {r}")));
        }
        Ok(BoundCurve {
            times,
            lhs,
            rhs,
            label: label.into(),
        })
    }

    /// Indices where `lhs > rhs + slack`.
    pub fn violations(&self, slack: f64) -> Vec<usize> {
        (0..self.times.len())
            .filter(|&i| self.lhs[i] > self.rhs[i] + slack)
            .collect()
    }
}

/// `tr|ρ - σ|`, the sum of singular values; orthogonal pure states give 2.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.d != sigma.d || rho.order != sigma.order || rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    Ok(linalg::singular_values(&(&rho.matrix - &sigma.matrix)).iter().sum())
}

fn growth(rate: f64, t: f64) -> f64 {
    (rate * t.abs()).exp_m1()
}

/// `(M³/N)·λ_V·(e^{4(Σl·V)t} - 1)`; identically 0 without interactions.
pub fn theorem1_bound(consts: &BoundConstants, n: usize, t: f64) -> f64 {
    if !consts.has_interactions() {
        return 0.0;
    }
    let m = consts.m_max as f64;
    m.powi(3) / n as f64 * consts.lambda_v * growth(4.0 * consts.sum_l1_v, t)
}

/// `(4mn‖A‖‖B‖/N)(e^{2(Σl·V)t} - 1)` for `‖[A, B(t)]‖`.
pub fn prop1_bound(m: usize, n: usize, norm_a: f64, norm_b: f64, consts: &BoundConstants, n_particles: usize, t: f64) -> f64 {
    4.0 * (m * n) as f64 * norm_a * norm_b / n_particles as f64 * growth(2.0 * consts.sum_l1_v, t)
}

/// `(16mn‖A‖‖B‖/N)(e^{4(Σl·V)t} - 1)` for connected correlations in an
/// evolved product state.
pub fn corollary_bound(m: usize, n: usize, norm_a: f64, norm_b: f64, consts: &BoundConstants, n_particles: usize, t: f64) -> f64 {
    16.0 * (m * n) as f64 * norm_a * norm_b / n_particles as f64 * growth(4.0 * consts.sum_l1_v, t)
}

/// Max-entry residual of
/// `γ_N^(m+1) - γ^{⊗(m+1)} = Σ_{l=1}^{m} (γ_N^(l+1) - γ_N^(l) ⊗ γ_N^(1)) ⊗ γ^{⊗(m-l)}
///                          + Σ_{l=0}^{m} γ_N^(l) ⊗ (γ_N^(1) - γ) ⊗ γ^{⊗(m-l)}`.
///
/// `exact_rdms` maps order to density matrix and must contain orders
/// `1..=m+1`; order 0 defaults to the scalar 1.
pub fn telescoping_residual(exact_rdms: &BTreeMap<usize, DensityMatrix>, gamma: &DensityMatrix, m: usize) -> Result<f64> {
    if gamma.order != 1 {
        return Err(Error::InvalidArgument(format!(
            "mean-field state must have order 1, got {}",
            gamma.order
        )));
    }
    let d = gamma.d;
    let scalar = DensityMatrix::scalar_one(d);
    let mut exact = Vec::with_capacity(m + 2);
    for order in 0..=m + 1 {
        let g = match exact_rdms.get(&order) {
            Some(g) => g,
            None if order == 0 => &scalar,
            None => return Err(Error::MissingRdm(order)),
        };
        if g.order != order || g.d != d || g.dim() != d.pow(order as u32) {
            return Err(Error::InvalidArgument(format!("entry {order} is not an order-{order} density matrix on C^{d}")));
        }
        exact.push(&g.matrix);
    }
    let gamma_pow: Vec<CMat> = (0..=m + 1).map(|k| linalg::kron_power(&gamma.matrix, k)).collect();
    let one_body_gap = exact[1] - &gamma.matrix;

    let lhs = exact[m + 1] - &gamma_pow[m + 1];
    let dim = lhs.nrows();
    let mut rhs = CMat::zeros(dim, dim);
    for l in 1..=m {
        let connected = exact[l + 1] - linalg::kron(exact[l], exact[1]);
        rhs += linalg::kron(&connected, &gamma_pow[m - l]);
    }
    for l in 0..=m {
        rhs += linalg::kron(&linalg::kron(exact[l], &one_body_gap), &gamma_pow[m - l]);
    }
    Ok(linalg::max_abs_diff(&lhs, &rhs))
}
