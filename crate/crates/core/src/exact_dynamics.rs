//! Exact unitary evolution on the symmetric subspace, the full tensor-space
//! oracle, correlation measurements and BBGKY hierarchy right-hand sides.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::hartree::DensityMatrix;
use crate::linalg::{self, CMat, CVec, C64, I};
use crate::operators::HamiltonianSpec;
use crate::symmetric_space::{self, interaction_weight, OccupationBasis, SymmetricState};

/// Largest full tensor-space dimension the dense oracle accepts.
pub const FULL_SPACE_LIMIT: usize = 1 << 14;

/// `exp(-iHt)` through one Hermitian eigendecomposition, reusable for any `t`.
#[derive(Clone, Debug)]
pub struct Propagator {
    values: DVector<f64>,
    vectors: CMat,
}

impl Propagator {
    pub fn new(h: &CMat) -> Result<Self> {
        if !h.is_square() {
            return Err(Error::InvalidArgument("Hamiltonian must be square".into()));
        }
        let (values, vectors) = linalg::eigh(h)?;
        Ok(Propagator { values, vectors })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn eigenvectors(&self) -> &CMat {
        &self.vectors
    }

    /// `exp(-iHt) ψ`; any real `t`, including negative.
    pub fn apply(&self, psi: &CVec, t: f64) -> CVec {
        let coeffs = self.vectors.adjoint() * psi;
        self.apply_to_coefficients(&coeffs, t)
    }

    fn apply_to_coefficients(&self, coeffs: &CVec, t: f64) -> CVec {
        let phased = CVec::from_iterator(
            coeffs.len(),
            coeffs
                .iter()
                .zip(self.values.iter())
                .map(|(c, e)| c * C64::from_polar(1.0, -e * t)),
        );
        &self.vectors * phased
    }

    /// `exp(-iHt) ψ` for every `t` in `times`.
    pub fn evolve(&self, psi: &CVec, times: &[f64]) -> Result<Vec<CVec>> {
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi.len(),
            });
        }
        let coeffs = self.vectors.adjoint() * psi;
        Ok(times
            .iter()
            .map(|&t| if t == 0.0 { psi.clone() } else { self.apply_to_coefficients(&coeffs, t) })
            .collect())
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    match times.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        Some(&t) => Err(Error::NegativeTime(t)),
        None => Ok(()),
    }
}

pub fn evolve_exact(h: &CMat, state: &SymmetricState, times: &[f64]) -> Result<Vec<SymmetricState>> {
    check_times(times)?;
    if h.nrows() != state.basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.basis.dim(),
            found: h.nrows(),
        });
    }
    let prop = Propagator::new(h)?;
    evolve_with(&prop, state, times)
}

/// [`evolve_exact`] with a precomputed propagator.
pub fn evolve_with(prop: &Propagator, state: &SymmetricState, times: &[f64]) -> Result<Vec<SymmetricState>> {
    check_times(times)?;
    Ok(prop
        .evolve(&state.amplitudes, times)?
        .into_iter()
        .map(|amplitudes| SymmetricState {
            basis: state.basis.clone(),
            amplitudes,
        })
        .collect())
}

/// State of `N` distinguishable slots in `(C^d)^{⊗N}`.
#[derive(Clone, Debug)]
pub struct FullSpaceState {
    pub d: usize,
    pub n: usize,
    pub amplitudes: CVec,
}

impl FullSpaceState {
    pub fn new(d: usize, n: usize, amplitudes: CVec) -> Result<Self> {
        let dim = full_space_dim(d, n)?;
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: amplitudes.len(),
            });
        }
        Ok(FullSpaceState { d, n, amplitudes })
    }

    pub fn product(phi: &CVec, n: usize) -> Result<Self> {
        let d = phi.len();
        full_space_dim(d, n)?;
        let mut amps = CVec::from_element(1, C64::new(1.0, 0.0));
        for _ in 0..n {
            amps = amps.kronecker(phi);
        }
        Self::new(d, n, amps)
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `tr_{[k+1,N]} |ψ⟩⟨ψ|` by direct index contraction.
    pub fn rdm(&self, k: usize) -> Result<DensityMatrix> {
        if k > self.n {
            return Err(Error::RdmOrderTooLarge { k, n_particles: self.n });
        }
        let kept = self.d.pow(k as u32);
        let rest = self.d.pow((self.n - k) as u32);
        let psi = &self.amplitudes;
        let m = CMat::from_fn(kept, kept, |a, b| {
            (0..rest).map(|r| psi[a * rest + r] * psi[b * rest + r].conj()).sum()
        });
        DensityMatrix::new(k, self.d, m)
    }
}

/// `d^N` if it fits under [`FULL_SPACE_LIMIT`].
pub fn full_space_dim(d: usize, n: usize) -> Result<usize> {
    let dim = (d as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if dim > FULL_SPACE_LIMIT as u128 {
        let mut max_n = 0;
        while (d as u128).pow(max_n as u32 + 1) <= FULL_SPACE_LIMIT as u128 {
            max_n += 1;
        }
        return Err(Error::FullSpaceTooLarge {
            dim,
            limit: FULL_SPACE_LIMIT,
            max_n,
        });
    }
    Ok(dim as usize)
}

/// `H_N` as a literal sum over particle subsets in full tensor space, with
/// the same per-subset weights as the symmetric-subspace builder.
pub fn fullspace_build(spec: &HamiltonianSpec, n: usize) -> Result<CMat> {
    let d = spec.d();
    let dim = full_space_dim(d, n)?;
    let mut h = CMat::zeros(dim, dim);
    for term in spec.terms() {
        let m = term.order;
        if m > n {
            return Err(Error::OrderExceedsParticles { order: m, n_particles: n });
        }
        let w = C64::new(interaction_weight(m, n), 0.0);
        for subset in linalg::combinations(n, m) {
            h += linalg::embed_operator(&term.matrix, &subset, d, n) * w;
        }
    }
    Ok(h)
}

pub fn fullspace_evolve(h_full: &CMat, state: &FullSpaceState, times: &[f64]) -> Result<Vec<FullSpaceState>> {
    check_times(times)?;
    let prop = Propagator::new(h_full)?;
    Ok(prop
        .evolve(&state.amplitudes, times)?
        .into_iter()
        .map(|amplitudes| FullSpaceState {
            d: state.d,
            n: state.n,
            amplitudes,
        })
        .collect())
}

/// Columns are the occupation basis states written in full tensor space:
/// `|n⃗⟩ = (N!/Π n_i!)^{-1/2} Σ_{sequences with occupations n⃗} |i_1…i_N⟩`.
pub fn symmetric_isometry(basis: &OccupationBasis) -> Result<CMat> {
    let d = basis.d();
    let n = basis.n_particles();
    let dim = full_space_dim(d, n)?;
    let mut out = CMat::zeros(dim, basis.dim());
    let mut counts = vec![0usize; basis.dim()];
    let mut cols = Vec::with_capacity(dim);
    for idx in 0..dim {
        let mut occ = vec![0u32; d];
        for digit in linalg::digits(idx, d, n) {
            occ[digit] += 1;
        }
        let col = basis.position(&occ).expect("every sequence has an occupation tuple");
        counts[col] += 1;
        cols.push(col);
    }
    for (idx, &col) in cols.iter().enumerate() {
        out[(idx, col)] = C64::new(1.0 / (counts[col] as f64).sqrt(), 0.0);
    }
    Ok(out)
}

pub fn to_full_space(state: &SymmetricState) -> Result<FullSpaceState> {
    let iso = symmetric_isometry(&state.basis)?;
    FullSpaceState::new(state.basis.d(), state.basis.n_particles(), iso * &state.amplitudes)
}

/// Observable on an ordered set of particles (1-based indices).
#[derive(Clone, Debug)]
pub struct ObservableOnSubset {
    pub support: Vec<usize>,
    pub matrix: CMat,
}

impl ObservableOnSubset {
    pub fn new(support: Vec<usize>, matrix: CMat, d: usize) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidObservable("empty support".into()));
        }
        if support.contains(&0) {
            return Err(Error::InvalidObservable("particle indices are 1-based".into()));
        }
        let mut sorted = support.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != support.len() {
            return Err(Error::InvalidObservable("repeated particle index".into()));
        }
        let dim = linalg::checked_pow(d, support.len()).unwrap_or(usize::MAX);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.nrows(),
            });
        }
        let dev = linalg::hermitian_deviation(&matrix);
        if dev > 1e-12 {
            return Err(Error::InvalidObservable(format!("not Hermitian (deviation {dev:.3e})")));
        }
        Ok(ObservableOnSubset { support, matrix })
    }

    fn embedded(&self, d: usize, n: usize) -> Result<CMat> {
        if let Some(&p) = self.support.iter().find(|&&p| p > n) {
            return Err(Error::InvalidObservable(format!("particle {p} outside 1..={n}")));
        }
        let zero_based: Vec<usize> = self.support.iter().map(|p| p - 1).collect();
        Ok(linalg::embed_operator(&self.matrix, &zero_based, d, n))
    }
}

/// Full-space eigendecomposition of `H_N` for repeated evaluation of
/// `‖[A, e^{iHt} B e^{-iHt}]‖` over many observables and times.
#[derive(Clone, Debug)]
pub struct LiebRobinsonProbe {
    d: usize,
    n: usize,
    prop: Propagator,
}

impl LiebRobinsonProbe {
    pub fn new(spec: &HamiltonianSpec, n: usize) -> Result<Self> {
        let h = fullspace_build(spec, n)?;
        Ok(LiebRobinsonProbe {
            d: spec.d(),
            n,
            prop: Propagator::new(&h)?,
        })
    }

    pub fn growth(&self, a: &ObservableOnSubset, b: &ObservableOnSubset, times: &[f64]) -> Result<Vec<f64>> {
        check_times(times)?;
        if a.support.iter().any(|p| b.support.contains(p)) {
            return Err(Error::OverlappingSupports);
        }
        let a_full = a.embedded(self.d, self.n)?;
        let b_full = b.embedded(self.d, self.n)?;
        let v = self.prop.eigenvectors();
        let a_eig = v.adjoint() * &a_full * v;
        let b_eig = v.adjoint() * &b_full * v;
        let e = self.prop.eigenvalues();
        let dim = e.len();

        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            if t == 0.0 {
                // operators on disjoint slots commute exactly in product coordinates
                let c = linalg::commutator(&a_full, &b_full);
                out.push(linalg::hermitian_norm(&linalg::hermitize(&(c * I)))?);
                continue;
            }
            let phases: Vec<C64> = e.iter().map(|&ej| C64::from_polar(1.0, ej * t)).collect();
            let b_t = CMat::from_fn(dim, dim, |j, k| b_eig[(j, k)] * phases[j] * phases[k].conj());
            // A and B(t) Hermitian: [A, B(t)] = X - X† with X = A B(t)
            let x = &a_eig * &b_t;
            let ic = (&x - x.adjoint()) * I;
            out.push(linalg::hermitian_norm(&linalg::hermitize(&ic))?);
        }
        Ok(out)
    }
}

/// `‖[A, e^{iH_N t} B e^{-iH_N t}]‖` in full tensor space.
pub fn commutator_growth(
    spec: &HamiltonianSpec,
    n: usize,
    a: &ObservableOnSubset,
    b: &ObservableOnSubset,
    times: &[f64],
) -> Result<Vec<f64>> {
    if a.support.iter().any(|p| b.support.contains(p)) {
        return Err(Error::OverlappingSupports);
    }
    LiebRobinsonProbe::new(spec, n)?.growth(a, b, times)
}

/// Both forms of the connected correlation of `A ⊗ B` on disjoint particle
/// blocks of sizes `m` and `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelationGap {
    /// `|tr (A⊗B)(γ^(m+n) - γ^(m) ⊗ γ^(n))|` from separately computed RDMs.
    pub trace_form: f64,
    /// `|⟨AB⟩ - ⟨A⟩⟨B⟩|` with the one-block expectations taken from the
    /// marginals of `γ^(m+n)`.
    pub expectation_form: f64,
}

pub fn correlation_gap(state: &SymmetricState, m: usize, n: usize, a: &CMat, b: &CMat) -> Result<CorrelationGap> {
    let total = state.basis.n_particles();
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("block sizes must be at least 1".into()));
    }
    if m + n > total {
        return Err(Error::RdmOrderTooLarge {
            k: m + n,
            n_particles: total,
        });
    }
    let d = state.basis.d();
    for (mat, k) in [(a, m), (b, n)] {
        let dim = d.pow(k as u32);
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: mat.nrows(),
            });
        }
    }
    let joint = symmetric_space::rdm(state, m + n)?;
    let ga = symmetric_space::rdm(state, m)?;
    let gb = if n == m { ga.clone() } else { symmetric_space::rdm(state, n)? };
    correlation_gap_from_rdms(&joint, &ga, &gb, a, b)
}

/// [`correlation_gap`] from precomputed `γ^(m+n)`, `γ^(m)` and `γ^(n)`.
pub fn correlation_gap_from_rdms(
    joint: &DensityMatrix,
    ga: &DensityMatrix,
    gb: &DensityMatrix,
    a: &CMat,
    b: &CMat,
) -> Result<CorrelationGap> {
    let (m, n, d) = (ga.order, gb.order, joint.d);
    if joint.order != m + n || ga.d != d || gb.d != d {
        return Err(Error::InvalidArgument(format!(
            "joint order {} does not match blocks {m} + {n}",
            joint.order
        )));
    }
    if a.nrows() != ga.dim() || b.nrows() != gb.dim() {
        return Err(Error::DimensionMismatch {
            expected: ga.dim(),
            found: a.nrows(),
        });
    }
    let ab = linalg::kron(a, b);

    let connected = &joint.matrix - linalg::kron(&ga.matrix, &gb.matrix);
    let trace_form = linalg::trace_product(&ab, &connected).norm();

    let marg_a = linalg::partial_trace_trailing(&joint.matrix, d, m, m + n);
    let marg_b = linalg::partial_trace_leading(&joint.matrix, d, n, m + n);
    let expectation_form = (linalg::trace_product(&ab, &joint.matrix)
        - linalg::trace_product(a, &marg_a) * linalg::trace_product(b, &marg_b))
    .norm();

    Ok(CorrelationGap {
        trace_form,
        expectation_form,
    })
}

/// `dγ^(k)/dt` predicted by the BBGKY hierarchy of the full Hamiltonian.
///
/// `rdms[l]` must hold `γ^(k+l)` for every `l` that contributes. An `m`-body
/// term with `p = m - l` legs inside the first `k` particles and `l` legs
/// outside occurs `binomial(N-k, l)` times per choice of inside legs, each
/// with weight `(m-1)!/N^(m-1)`; by permutation symmetry the outside legs are
/// moved to particles `k+1..k+l` and traced out.
pub fn bbgky_rhs(
    spec: &HamiltonianSpec,
    n: usize,
    k: usize,
    rdms: &BTreeMap<usize, DensityMatrix>,
) -> Result<CMat> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("hierarchy level {k} outside 1..={n}")));
    }
    let d = spec.d();
    let dim = d.pow(k as u32);
    let mut acc = CMat::zeros(dim, dim);
    for term in spec.terms() {
        let m = term.order;
        let weight = interaction_weight(m, n);
        for l in 0..m {
            let p = m - l;
            if p > k || l > n - k {
                continue;
            }
            let gamma = rdms.get(&l).ok_or(Error::MissingRdm(k + l))?;
            if gamma.order != k + l || gamma.d != d {
                return Err(Error::InvalidArgument(format!(
                    "entry {l} must be the order-{} density matrix",
                    k + l
                )));
            }
            let coeff = C64::new(weight * linalg::binomial(n - k, l), 0.0);
            let outside: Vec<usize> = (k..k + l).collect();
            for inside in linalg::combinations(k, p) {
                let support: Vec<usize> = inside.iter().copied().chain(outside.iter().copied()).collect();
                let v = linalg::embed_operator(&term.matrix, &support, d, k + l);
                let c = linalg::commutator(&v, &gamma.matrix);
                acc += linalg::partial_trace_trailing(&c, d, k, k + l) * coeff;
            }
        }
    }
    Ok(acc * (-I))
}

/// RDMs `γ^(k+l)` for `l = 0..=min(M-1, N-k)`, keyed by `l`.
pub fn hierarchy_inputs(state: &SymmetricState, spec: &HamiltonianSpec, k: usize) -> Result<BTreeMap<usize, DensityMatrix>> {
    let n = state.basis.n_particles();
    let top = (spec.m_max() - 1).min(n - k);
    (0..=top)
        .map(|l| Ok((l, symmetric_space::rdm(state, k + l)?)))
        .collect()
}

/// Max-entry gap between the central difference
/// `(γ^(k)(t+dt) - γ^(k)(t-dt)) / 2dt` along the exact trajectory and the
/// hierarchy right-hand side at `t`.
pub fn bbgky_residual(
    spec: &HamiltonianSpec,
    prop: &Propagator,
    psi0: &SymmetricState,
    k: usize,
    t: f64,
    dt: f64,
) -> Result<f64> {
    let n = psi0.basis.n_particles();
    let at = |time: f64| SymmetricState {
        basis: psi0.basis.clone(),
        amplitudes: prop.apply(&psi0.amplitudes, time),
    };
    let plus = symmetric_space::rdm(&at(t + dt), k)?;
    let minus = symmetric_space::rdm(&at(t - dt), k)?;
    let fd = (&plus.matrix - &minus.matrix) / C64::new(2.0 * dt, 0.0);
    let now = at(t);
    let rhs = bbgky_rhs(spec, n, k, &hierarchy_inputs(&now, spec, k)?)?;
    Ok(linalg::max_abs_diff(&fd, &rhs))
}

/// Product state embedded in the symmetric subspace together with its basis.
pub fn product_state(phi: &CVec, n: usize) -> Result<SymmetricState> {
    symmetric_space::embed_product_state(phi, n)
}

/// Convenience: shared basis handle for repeated builds.
pub fn shared_basis(d: usize, n: usize) -> Result<Arc<OccupationBasis>> {
    Ok(Arc::new(symmetric_space::enumerate_basis(d, n)?))
}
