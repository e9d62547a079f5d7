//! Generalized nonlinear Hartree flow for the one-particle density matrix.
//!
//! The equation `i γ̇ = [V1, γ] + Σ_{j≥2} tr_{[2,j]}[V^(j), γ^{⊗j}]` is
//! integrated in the equivalent form `i γ̇ = [h(γ), γ]` with the mean-field
//! Hamiltonian `h(γ) = V1 + Σ_j tr_{[2,j]}(V^(j) (1 ⊗ γ^{⊗(j-1)}))`.

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64, I};
use crate::operators::HamiltonianSpec;

/// `k`-particle density matrix on `(C^d)^{⊗k}`; order 0 is the scalar 1.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub order: usize,
    pub d: usize,
    pub matrix: CMat,
}

impl DensityMatrix {
    pub fn new(order: usize, d: usize, matrix: CMat) -> Result<Self> {
        let dim = linalg::checked_pow(d, order).ok_or(Error::DimensionMismatch {
            expected: usize::MAX,
            found: matrix.nrows(),
        })?;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.nrows(),
            });
        }
        Ok(DensityMatrix { order, d, matrix })
    }

    /// `|φ⟩⟨φ|`.
    pub fn pure(phi: &CVec) -> Self {
        DensityMatrix {
            order: 1,
            d: phi.len(),
            matrix: phi * phi.adjoint(),
        }
    }

    pub fn scalar_one(d: usize) -> Self {
        DensityMatrix {
            order: 0,
            d,
            matrix: CMat::identity(1, 1),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        assert_eq!(self.d, other.d, "single-particle dimensions differ");
        DensityMatrix {
            order: self.order + other.order,
            d: self.d,
            matrix: linalg::kron(&self.matrix, &other.matrix),
        }
    }

    pub fn tensor_power(&self, k: usize) -> DensityMatrix {
        DensityMatrix {
            order: self.order * k,
            d: self.d,
            matrix: linalg::kron_power(&self.matrix, k),
        }
    }

    /// Traces out all but the first `keep` slots.
    pub fn reduce_to(&self, keep: usize) -> DensityMatrix {
        assert!(keep <= self.order);
        DensityMatrix {
            order: keep,
            d: self.d,
            matrix: linalg::partial_trace_trailing(&self.matrix, self.d, keep, self.order),
        }
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.matrix)
    }

    /// `tr γ²`.
    pub fn purity(&self) -> f64 {
        linalg::trace_product(&self.matrix, &self.matrix).re
    }

    /// Ascending eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::eigvalsh(&linalg::hermitize(&self.matrix))
    }

    /// Violated density-matrix properties at tolerance `tol`; empty if valid.
    pub fn check(&self, tol: f64) -> Vec<String> {
        let mut issues = Vec::new();
        let herm = linalg::hermitian_deviation(&self.matrix);
        if herm > tol {
            issues.push(format!("not Hermitian (deviation {herm:.3e})"));
        }
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > tol {
            issues.push(format!("trace {tr} differs from 1"));
        }
        match self.eigenvalues() {
            Ok(ev) => {
                if let Some(&min) = ev.first() {
                    if min < -tol {
                        issues.push(format!("negative eigenvalue {min:.3e}"));
                    }
                }
            }
            Err(e) => issues.push(e.to_string()),
        }
        issues
    }
}

fn check_one_particle(gamma: &DensityMatrix, spec: &HamiltonianSpec) -> Result<()> {
    if gamma.order != 1 {
        return Err(Error::InvalidArgument(format!(
            "expected a one-particle density matrix, got order {}",
            gamma.order
        )));
    }
    if gamma.d != spec.d() {
        return Err(Error::DimensionMismatch {
            expected: spec.d(),
            found: gamma.d,
        });
    }
    Ok(())
}

/// `tr_{[2,j]}(V (1 ⊗ Γ))` for a `j`-slot operator `V` and `(j-1)`-slot `Γ`.
fn contract_trailing(v: &CMat, rest: &CMat, d: usize) -> CMat {
    let r = rest.nrows();
    CMat::from_fn(d, d, |a, b| {
        let mut acc = C64::new(0.0, 0.0);
        for c in 0..r {
            for e in 0..r {
                acc += v[(a * r + c, b * r + e)] * rest[(e, c)];
            }
        }
        acc
    })
}

fn mean_field_matrix(gamma: &CMat, spec: &HamiltonianSpec) -> CMat {
    let d = spec.d();
    let mut h = CMat::zeros(d, d);
    for term in spec.terms() {
        if term.order == 1 {
            h += &term.matrix;
        } else {
            let rest = linalg::kron_power(gamma, term.order - 1);
            h += contract_trailing(&term.matrix, &rest, d);
        }
    }
    h
}

fn rhs_matrix(gamma: &CMat, spec: &HamiltonianSpec) -> CMat {
    let h = mean_field_matrix(gamma, spec);
    (&h * gamma - gamma * &h) * (-I)
}

pub fn mean_field_hamiltonian(gamma: &DensityMatrix, spec: &HamiltonianSpec) -> Result<CMat> {
    check_one_particle(gamma, spec)?;
    Ok(mean_field_matrix(&gamma.matrix, spec))
}

/// `dγ/dt = -i[h(γ), γ]`.
pub fn hartree_rhs(gamma: &DensityMatrix, spec: &HamiltonianSpec) -> Result<CMat> {
    check_one_particle(gamma, spec)?;
    Ok(rhs_matrix(&gamma.matrix, spec))
}

/// Conserved functional `tr(V1 γ) + Σ_{j≥2} (1/j) tr(V^(j) γ^{⊗j})`.
pub fn mean_field_energy(gamma: &DensityMatrix, spec: &HamiltonianSpec) -> Result<f64> {
    check_one_particle(gamma, spec)?;
    Ok(energy_of(&gamma.matrix, spec))
}

fn energy_of(gamma: &CMat, spec: &HamiltonianSpec) -> f64 {
    spec.terms()
        .map(|term| {
            let power = linalg::kron_power(gamma, term.order);
            linalg::trace_product(&term.matrix, &power).re / term.order as f64
        })
        .sum()
}

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub h: f64,
    pub error: f64,
}

/// Largest deviation from the initial value observed at the output times.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConservationDrift {
    pub trace: f64,
    pub purity: f64,
    pub energy: f64,
    pub spectrum: f64,
    pub hermiticity: f64,
}

#[derive(Clone, Debug)]
pub struct HartreeTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub steps: Vec<StepRecord>,
    pub rejected_steps: usize,
    pub drift: ConservationDrift,
}

// Dormand–Prince 5(4) tableau; the flow is autonomous so the stage nodes are unused
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MAX_GROWTH: f64 = 5.0;
const MIN_SHRINK: f64 = 0.2;
const INITIAL_STEP: f64 = 1e-3;
const MAX_STEP: f64 = 0.1;

fn lin(y: &CMat, h: f64, terms: &[(f64, &CMat)]) -> CMat {
    let mut out = y.clone();
    for &(w, k) in terms {
        if w != 0.0 {
            out += k * C64::new(h * w, 0.0);
        }
    }
    out
}

/// Adaptive Dormand–Prince integration of the Hartree flow from `t = 0`.
///
/// Steps are clipped to land on every requested time, so reported states are
/// integration nodes. Local error (max entry of the embedded difference) is
/// held at or below `tol`. No renormalization is applied; the drift of trace,
/// purity, energy, spectrum and Hermiticity is recorded instead.
pub fn hartree_evolve(
    gamma0: &DensityMatrix,
    spec: &HamiltonianSpec,
    times: &[f64],
    tol: f64,
) -> Result<HartreeTrajectory> {
    check_one_particle(gamma0, spec)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if let Some(&t) = times.iter().find(|t| **t < 0.0 || !t.is_finite()) {
        return Err(Error::NegativeTime(t));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("output times must be non-decreasing".into()));
    }

    let e0 = energy_of(&gamma0.matrix, spec);
    let p0 = gamma0.purity();
    let tr0 = gamma0.trace();
    let spec0 = gamma0.eigenvalues()?;

    let mut y = gamma0.matrix.clone();
    let mut t = 0.0;
    let mut h = INITIAL_STEP;
    let mut k1 = rhs_matrix(&y, spec);
    let mut steps = Vec::new();
    let mut rejected = 0;
    let mut states = Vec::with_capacity(times.len());
    let mut drift = ConservationDrift::default();

    for &target in times {
        while t < target {
            let remaining = target - t;
            let clipped = remaining <= h;
            let step = if clipped { remaining } else { h };
            let min_step = 1e-14 * t.abs().max(1.0);
            if step < min_step && !clipped {
                return Err(Error::StepSizeUnderflow { t, h: step, err: f64::NAN });
            }

            let k2 = rhs_matrix(&lin(&y, step, &[(A21, &k1)]), spec);
            let k3 = rhs_matrix(&lin(&y, step, &[(A31, &k1), (A32, &k2)]), spec);
            let k4 = rhs_matrix(&lin(&y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]), spec);
            let k5 = rhs_matrix(
                &lin(&y, step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
                spec,
            );
            let k6 = rhs_matrix(
                &lin(&y, step, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
                spec,
            );
            let y_new = lin(&y, step, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = rhs_matrix(&y_new, spec);
            let err_mat = lin(
                &CMat::zeros(y.nrows(), y.ncols()),
                step,
                &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
            );
            let err = linalg::max_abs(&err_mat);
            if !err.is_finite() {
                return Err(Error::StepSizeUnderflow { t, h: step, err });
            }
            let factor = if err == 0.0 {
                MAX_GROWTH
            } else {
                (SAFETY * (tol / err).powf(0.2)).clamp(MIN_SHRINK, MAX_GROWTH)
            };

            if err <= tol {
                t = if clipped { target } else { t + step };
                y = y_new;
                k1 = k7;
                steps.push(StepRecord { t, h: step, error: err });
                // a clipped step says nothing about the natural step size
                if !clipped || factor < 1.0 {
                    h = (step * factor).min(MAX_STEP);
                }
            } else {
                rejected += 1;
                h = step * factor.min(1.0);
                if h < min_step {
                    return Err(Error::StepSizeUnderflow { t, h, err });
                }
            }
        }

        let state = if target == 0.0 {
            gamma0.clone()
        } else {
            DensityMatrix {
                order: 1,
                d: gamma0.d,
                matrix: y.clone(),
            }
        };
        drift.trace = drift.trace.max((state.trace() - tr0).norm());
        drift.purity = drift.purity.max((state.purity() - p0).abs());
        drift.energy = drift.energy.max((energy_of(&state.matrix, spec) - e0).abs());
        drift.hermiticity = drift.hermiticity.max(linalg::hermitian_deviation(&state.matrix));
        let ev = state.eigenvalues()?;
        let sdev = ev.iter().zip(&spec0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        drift.spectrum = drift.spectrum.max(sdev);
        states.push(state);
    }

    Ok(HartreeTrajectory {
        times: times.to_vec(),
        states,
        steps,
        rejected_steps: rejected,
        drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, pauli};
    use crate::operators::PotentialTerm;

    fn diag_gamma(p: f64) -> DensityMatrix {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![C64::new(p, 0.), C64::new(1. - p, 0.)]));
        DensityMatrix::new(1, 2, m).unwrap()
    }

    #[test]
    fn mean_field_without_interactions_is_v1() {
        let spec = HamiltonianSpec::new(2, 1, vec![PotentialTerm::new(1, pauli::x())]).unwrap();
        let h = mean_field_hamiltonian(&diag_gamma(0.3), &spec).unwrap();
        assert!(linalg::max_abs_diff(&h, &pauli::x()) < 1e-15);
    }

    #[test]
    fn identity_pair_shifts_by_one() {
        let spec = HamiltonianSpec::new(
            2,
            2,
            vec![PotentialTerm::new(1, pauli::z()), PotentialTerm::new(2, CMat::identity(4, 4))],
        )
        .unwrap();
        let h = mean_field_hamiltonian(&diag_gamma(0.2), &spec).unwrap();
        assert!(linalg::max_abs_diff(&h, &(pauli::z() + CMat::identity(2, 2))) < 1e-15);
    }

    #[test]
    fn zz_mean_field_against_explicit_partial_trace() {
        let p = 0.35;
        let zz = kron(&pauli::z(), &pauli::z());
        let spec = HamiltonianSpec::new(2, 2, vec![PotentialTerm::new(1, pauli::x()), PotentialTerm::new(2, zz.clone())]).unwrap();
        let g = diag_gamma(p);
        // brute force: tr_2(V (1⊗γ)) over the 4x4 product
        let full = &zz * kron(&CMat::identity(2, 2), &g.matrix);
        let oracle = pauli::x() + linalg::partial_trace_trailing(&full, 2, 1, 2);
        let h = mean_field_hamiltonian(&g, &spec).unwrap();
        assert!(linalg::max_abs_diff(&h, &oracle) < 1e-15);
        let expected = pauli::x() + pauli::z() * C64::new(2.0 * p - 1.0, 0.0);
        assert!(linalg::max_abs_diff(&h, &expected) < 1e-15);
    }

    #[test]
    fn diagonal_state_is_stationary() {
        let zz = kron(&pauli::z(), &pauli::z());
        let spec = HamiltonianSpec::new(2, 2, vec![PotentialTerm::new(1, pauli::z()), PotentialTerm::new(2, zz)]).unwrap();
        let rhs = hartree_rhs(&diag_gamma(0.7), &spec).unwrap();
        assert!(linalg::max_abs(&rhs) < 1e-15);
        let traj = hartree_evolve(&diag_gamma(0.7), &spec, &[0.0, 0.5, 1.0], 1e-10).unwrap();
        for s in &traj.states {
            assert!(linalg::max_abs_diff(&s.matrix, &diag_gamma(0.7).matrix) < 1e-14);
        }
    }

    #[test]
    fn energy_examples() {
        let spec = HamiltonianSpec::new(2, 1, vec![PotentialTerm::new(1, pauli::z())]).unwrap();
        assert!((mean_field_energy(&diag_gamma(0.8), &spec).unwrap() - 0.6).abs() < 1e-15);
        let spec = HamiltonianSpec::new(2, 2, vec![PotentialTerm::new(2, CMat::identity(4, 4))]).unwrap();
        assert!((mean_field_energy(&diag_gamma(0.8), &spec).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn linear_flow_matches_closed_form() {
        let v1 = pauli::x() + pauli::z() * C64::new(0.4, 0.0);
        let spec = HamiltonianSpec::new(2, 2, vec![PotentialTerm::new(1, v1.clone())]).unwrap();
        let phi = CVec::from_vec(vec![C64::new(1., 0.), C64::new(0., 0.)]);
        let g0 = DensityMatrix::pure(&phi);
        let times = [0.0, 0.3, 1.0, 2.5];
        let traj = hartree_evolve(&g0, &spec, &times, 1e-10).unwrap();
        let (vals, vecs) = linalg::eigh(&v1).unwrap();
        for (t, s) in times.iter().zip(&traj.states) {
            let u = &vecs * CMat::from_diagonal(&vals.map(|e| C64::from_polar(1.0, -e * t))) * vecs.adjoint();
            let exact = &u * &g0.matrix * u.adjoint();
            assert!(linalg::max_abs_diff(&s.matrix, &exact) < 1e-8);
        }
        assert_eq!(traj.states[0], g0);
    }

    #[test]
    fn rejects_wrong_order_and_bad_times() {
        let spec = HamiltonianSpec::new(2, 1, vec![PotentialTerm::new(1, pauli::x())]).unwrap();
        let g2 = diag_gamma(0.5).tensor(&diag_gamma(0.5));
        assert!(hartree_rhs(&g2, &spec).is_err());
        assert!(matches!(
            hartree_evolve(&diag_gamma(0.5), &spec, &[-1.0], 1e-9),
            Err(Error::NegativeTime(_))
        ));
    }

    #[test]
    fn density_checks() {
        assert!(diag_gamma(0.3).check(1e-12).is_empty());
        assert!(!diag_gamma(1.3).check(1e-12).is_empty());
    }
}
