//! Interaction potentials, Hamiltonian specifications and the scalar
//! constants that enter every correlation and mean-field bound.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::random;

/// Default absolute tolerance for Hermiticity and slot-symmetry checks.
pub const DEFAULT_SYMMETRY_TOL: f64 = 1e-12;

/// One `m`-body interaction `V^(m)` acting on `m` tensor slots of `C^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialTerm {
    pub order: usize,
    pub matrix: CMat,
}

impl PotentialTerm {
    pub fn new(order: usize, matrix: CMat) -> Self {
        PotentialTerm { order, matrix }
    }

    pub fn scaled(&self, s: f64) -> Self {
        PotentialTerm::new(self.order, &self.matrix * C64::new(s, 0.0))
    }
}

/// Single-particle dimension, maximal interaction order and the family of
/// potentials. Absent orders are the zero operator.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSpec {
    d: usize,
    m_max: usize,
    terms: BTreeMap<usize, PotentialTerm>,
}

impl HamiltonianSpec {
    /// Checks shapes only; see [`HamiltonianSpec::checked`] for the full
    /// Hermiticity and slot-symmetry validation.
    pub fn new(d: usize, m_max: usize, terms: Vec<PotentialTerm>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidSpec("single-particle dimension must be at least 1".into()));
        }
        if m_max == 0 {
            return Err(Error::InvalidSpec("maximal interaction order must be at least 1".into()));
        }
        let mut map = BTreeMap::new();
        for term in terms {
            if term.order == 0 || term.order > m_max {
                return Err(Error::InvalidSpec(format!(
                    "term order {} outside 1..={}",
                    term.order, m_max
                )));
            }
            let expected = linalg::checked_pow(d, term.order)
                .ok_or_else(|| Error::InvalidSpec(format!("d^{} overflows", term.order)))?;
            let (r, c) = term.matrix.shape();
            if r != expected || c != expected {
                return Err(Error::DimensionMismatch {
                    expected,
                    found: r.max(c),
                });
            }
            if map.insert(term.order, term).is_some() {
                return Err(Error::InvalidSpec("duplicate interaction order".into()));
            }
        }
        Ok(HamiltonianSpec { d, m_max, terms: map })
    }

    /// Like [`HamiltonianSpec::new`], and additionally rejects any term that
    /// is not Hermitian or not slot-permutation symmetric within `tol`.
    pub fn checked(d: usize, m_max: usize, terms: Vec<PotentialTerm>, tol: f64) -> Result<Self> {
        let spec = Self::new(d, m_max, terms)?;
        for term in spec.terms.values() {
            let report = validate_potential_with_tol(term, d, tol);
            if !report.is_valid() {
                return Err(Error::InvalidPotential {
                    order: term.order,
                    details: report.to_string(),
                });
            }
        }
        Ok(spec)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn term(&self, order: usize) -> Option<&PotentialTerm> {
        self.terms.get(&order)
    }

    pub fn terms(&self) -> impl Iterator<Item = &PotentialTerm> {
        self.terms.values()
    }

    /// Terms of order two and higher.
    pub fn interactions(&self) -> impl Iterator<Item = &PotentialTerm> {
        self.terms.values().filter(|t| t.order >= 2)
    }

    /// Largest order carrying a term, or 0 for an empty spec.
    pub fn max_present_order(&self) -> usize {
        self.terms.keys().next_back().copied().unwrap_or(0)
    }

    /// Multiplies every interaction of order >= 2 by `s`.
    pub fn with_scaled_interactions(&self, s: f64) -> Self {
        let terms = self
            .terms
            .values()
            .map(|t| if t.order >= 2 { t.scaled(s) } else { t.clone() })
            .collect();
        HamiltonianSpec::new(self.d, self.m_max, terms).expect("scaling preserves shapes")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    DimensionMismatch { expected: usize, found: usize },
    NotHermitian { max_deviation: f64 },
    NotSlotSymmetric { max_deviation: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch (expected {expected}, found {found})")
            }
            Violation::NotHermitian { max_deviation } => {
                write!(f, "not Hermitian (max deviation {max_deviation:.3e})")
            }
            Violation::NotSlotSymmetric { max_deviation } => {
                write!(f, "not slot-permutation-symmetric (max deviation {max_deviation:.3e})")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

pub fn validate_potential(term: &PotentialTerm, d: usize) -> ValidationReport {
    validate_potential_with_tol(term, d, DEFAULT_SYMMETRY_TOL)
}

pub fn validate_potential_with_tol(term: &PotentialTerm, d: usize, tol: f64) -> ValidationReport {
    let mut report = ValidationReport::default();
    let dim = term.matrix.nrows();
    let expected = linalg::checked_pow(d, term.order).unwrap_or(usize::MAX);
    let shape_ok = dim == expected && term.matrix.ncols() == dim;
    if !shape_ok {
        report.violations.push(Violation::DimensionMismatch {
            expected,
            found: dim,
        });
    }
    if term.matrix.is_square() {
        let dev = linalg::hermitian_deviation(&term.matrix);
        if dev > tol {
            report.violations.push(Violation::NotHermitian { max_deviation: dev });
        }
    }
    if shape_ok && term.order >= 2 {
        let dev = slot_symmetry_deviation(&term.matrix, d, term.order);
        if dev > tol {
            report.violations.push(Violation::NotSlotSymmetric { max_deviation: dev });
        }
    }
    report
}

/// Max deviation under conjugation by adjacent slot transpositions, which
/// generate the full symmetric group.
fn slot_symmetry_deviation(matrix: &CMat, d: usize, m: usize) -> f64 {
    let mut dev: f64 = 0.0;
    for s in 0..m.saturating_sub(1) {
        let mut perm: Vec<usize> = (0..m).collect();
        perm.swap(s, s + 1);
        let swapped = linalg::permute_slots(matrix, d, &perm);
        dev = dev.max(linalg::max_abs_diff(&swapped, matrix));
    }
    dev
}

/// Spectral norm (largest singular value).
pub fn operator_norm(matrix: &CMat) -> f64 {
    linalg::singular_values(matrix).first().copied().unwrap_or(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VtildeStrategy {
    Canonical,
    Search { restarts: usize, seed: u64 },
}

impl VtildeStrategy {
    pub fn label(&self) -> &'static str {
        match self {
            VtildeStrategy::Canonical => "canonical",
            VtildeStrategy::Search { .. } => "search",
        }
    }
}

/// Lower estimate of the basis-maximized coefficient sum `|Ṽ|`.
///
/// `Canonical` uses the matrix-unit basis `E_ab = e_a e_b†` in every slot,
/// where the coefficients are the matrix entries themselves. `Search` also
/// tries per-slot bases `U E_ab U†` for random unitaries `U`, refined by
/// greedy local moves, and keeps the largest value found. Restart 0 starts
/// from the canonical basis, so the searched value never falls below it.
pub fn vtilde(spec: &HamiltonianSpec, strategy: VtildeStrategy) -> f64 {
    spec.interactions()
        .map(|term| match strategy {
            VtildeStrategy::Canonical => canonical_coefficient_sum(&term.matrix),
            VtildeStrategy::Search { restarts, seed } => {
                searched_coefficient_sum(&term.matrix, spec.d(), term.order, restarts, seed)
            }
        })
        .fold(0.0, f64::max)
}

/// Sum of coefficient magnitudes in the matrix-unit product basis.
pub fn canonical_coefficient_sum(matrix: &CMat) -> f64 {
    matrix.iter().map(|z| z.norm()).sum()
}

/// Sum of `|w_{i1..im}|` for the decomposition of `matrix` over the product
/// basis built from one orthonormal single-slot operator basis (`d²`
/// matrices with `tr(E_i E_j†) = δ_ij`).
pub fn basis_coefficient_sum(matrix: &CMat, d: usize, m: usize, basis: &[CMat]) -> f64 {
    let b = basis.len();
    assert_eq!(b, d * d, "single-slot operator basis must have d^2 elements");
    let mut total = 0.0;
    let n_elems = b.pow(m as u32);
    for idx in 0..n_elems {
        let picks = linalg::digits(idx, b, m);
        let elem = picks
            .iter()
            .fold(CMat::identity(1, 1), |acc, &p| acc.kronecker(&basis[p]));
        // w = tr(E† V)
        let w: C64 = elem
            .iter()
            .zip(matrix.iter())
            .map(|(e, v)| e.conj() * v)
            .sum();
        total += w.norm();
    }
    total
}

fn rotated_coefficient_sum(matrix: &CMat, u: &CMat, m: usize) -> f64 {
    let w = linalg::kron_power(u, m);
    canonical_coefficient_sum(&(w.adjoint() * matrix * &w))
}

const SEARCH_STEPS: usize = 400;
const SEARCH_INITIAL_STEP: f64 = 0.5;
const SEARCH_MIN_STEP: f64 = 1e-6;

fn searched_coefficient_sum(matrix: &CMat, d: usize, m: usize, restarts: usize, seed: u64) -> f64 {
    (0..=restarts)
        .map(|r| {
            // independent stream per (order, restart): adding restarts only adds candidates
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((m as u64) << 32) | r as u64);
            let start = if r == 0 {
                CMat::identity(d, d)
            } else {
                random::haar_unitary(d, &mut rng)
            };
            refine_basis(matrix, m, start, &mut rng)
        })
        .fold(0.0, f64::max)
}

fn refine_basis(matrix: &CMat, m: usize, start: CMat, rng: &mut ChaCha8Rng) -> f64 {
    let d = start.nrows();
    let mut u = start;
    let mut best = rotated_coefficient_sum(matrix, &u, m);
    let mut step = SEARCH_INITIAL_STEP;
    let mut misses = 0;
    for _ in 0..SEARCH_STEPS {
        if step < SEARCH_MIN_STEP {
            break;
        }
        let k = random::normalized_hermitian(d, rng);
        let candidate = &u * random::unitary_from_generator(&k, step);
        let value = rotated_coefficient_sum(matrix, &candidate, m);
        if value > best {
            best = value;
            u = candidate;
            misses = 0;
        } else {
            misses += 1;
            if misses >= 8 {
                step *= 0.5;
                misses = 0;
            }
        }
    }
    best
}

/// `(Σ l·V)`, `(Σ l²·V)`, `|Ṽ|` and `λ_V`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub sum_l1_v: f64,
    pub sum_l2_v: f64,
    pub vtilde: f64,
    pub lambda_v: f64,
    pub m_max: usize,
}

impl BoundConstants {
    pub fn has_interactions(&self) -> bool {
        self.sum_l1_v > 0.0
    }
}

pub fn bound_constants(spec: &HamiltonianSpec, vtilde_value: f64) -> BoundConstants {
    assert!(vtilde_value >= 0.0, "vtilde must be non-negative");
    let (mut s1, mut s2) = (0.0, 0.0);
    for term in spec.interactions() {
        let l = term.order as f64;
        let norm = operator_norm(&term.matrix);
        s1 += l * norm;
        s2 += l * l * norm;
    }
    // no interactions: the mean-field dynamics is exact and the bound is 0
    let lambda_v = if s1 > 0.0 {
        (16.0 * vtilde_value + s2) / s1
    } else {
        0.0
    };
    BoundConstants {
        sum_l1_v: s1,
        sum_l2_v: s2,
        vtilde: vtilde_value,
        lambda_v,
        m_max: spec.m_max(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, pauli};
    use rand::SeedableRng;

    fn zz() -> CMat {
        kron(&pauli::z(), &pauli::z())
    }

    #[test]
    fn zz_is_valid() {
        let report = validate_potential(&PotentialTerm::new(2, zz()), 2);
        assert!(report.is_valid(), "{report}");
    }

    #[test]
    fn xz_is_not_slot_symmetric() {
        let term = PotentialTerm::new(2, kron(&pauli::x(), &pauli::z()));
        let report = validate_potential(&term, 2);
        assert!(report.to_string().contains("not slot-permutation-symmetric"));
        assert!(!report.to_string().contains("not Hermitian"));
    }

    #[test]
    fn raising_operator_is_not_hermitian() {
        let m = CMat::from_row_slice(2, 2, &[C64::new(0., 0.), C64::new(1., 0.), C64::new(0., 0.), C64::new(0., 0.)]);
        let report = validate_potential(&PotentialTerm::new(1, m), 2);
        assert!(report.to_string().contains("not Hermitian"));
    }

    #[test]
    fn wrong_dimension_reported() {
        let report = validate_potential(&PotentialTerm::new(2, CMat::identity(3, 3)), 2);
        assert!(report.to_string().contains("dimension mismatch"));
        let report = validate_potential(&PotentialTerm::new(2, CMat::identity(8, 8)), 2);
        assert!(report.to_string().contains("dimension mismatch"));
    }

    #[test]
    fn spec_rejects_bad_shapes_and_orders() {
        assert!(HamiltonianSpec::new(2, 2, vec![PotentialTerm::new(2, CMat::identity(3, 3))]).is_err());
        assert!(HamiltonianSpec::new(2, 1, vec![PotentialTerm::new(2, zz())]).is_err());
        assert!(HamiltonianSpec::checked(
            2,
            2,
            vec![PotentialTerm::new(2, kron(&pauli::x(), &pauli::z()))],
            DEFAULT_SYMMETRY_TOL
        )
        .is_err());
    }

    #[test]
    fn operator_norm_examples() {
        assert!((operator_norm(&CMat::identity(5, 5)) - 1.0).abs() < 1e-14);
        let diag = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(3., 0.), C64::new(-1., 0.)]));
        assert!((operator_norm(&diag) - 3.0).abs() < 1e-14);
        assert!((operator_norm(&zz()) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn vtilde_vanishes_without_interactions() {
        let spec = HamiltonianSpec::new(2, 1, vec![PotentialTerm::new(1, pauli::x())]).unwrap();
        assert_eq!(vtilde(&spec, VtildeStrategy::Canonical), 0.0);
        assert_eq!(vtilde(&spec, VtildeStrategy::Search { restarts: 3, seed: 1 }), 0.0);
    }

    #[test]
    fn vtilde_canonical_zz_matches_enumeration() {
        // enumerate <E_ab ⊗ E_cd, V> over all d^4 matrix-unit pairs
        let v = zz();
        let mut oracle = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for e in 0..2 {
                        oracle += v[(a * 2 + c, b * 2 + e)].norm();
                    }
                }
            }
        }
        assert_eq!(oracle, 4.0);
        let spec = HamiltonianSpec::new(2, 2, vec![PotentialTerm::new(2, v)]).unwrap();
        assert_eq!(vtilde(&spec, VtildeStrategy::Canonical), oracle);
    }

    #[test]
    fn pauli_basis_gives_single_coefficient() {
        let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let basis: Vec<CMat> = [CMat::identity(2, 2), pauli::x(), pauli::y(), pauli::z()]
            .into_iter()
            .map(|p| p * s)
            .collect();
        assert!((basis_coefficient_sum(&zz(), 2, 2, &basis) - 2.0).abs() < 1e-14);
        // matrix units reproduce the canonical value
        let units: Vec<CMat> = (0..4)
            .map(|i| {
                let mut e = CMat::zeros(2, 2);
                e[(i / 2, i % 2)] = C64::new(1., 0.);
                e
            })
            .collect();
        assert!((basis_coefficient_sum(&zz(), 2, 2, &units) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn search_never_below_canonical_and_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let spec = random::random_spec(2, 3, 1.0, &mut rng);
        let canonical = vtilde(&spec, VtildeStrategy::Canonical);
        let mut prev = 0.0;
        for restarts in [0, 2, 4, 8] {
            let v = vtilde(&spec, VtildeStrategy::Search { restarts, seed: 5 });
            assert!(v >= canonical);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn bound_constants_examples() {
        let spec = HamiltonianSpec::new(2, 2, vec![PotentialTerm::new(2, zz())]).unwrap();
        let c = bound_constants(&spec, 2.0);
        assert!((c.sum_l1_v - 2.0).abs() < 1e-14);
        assert!((c.sum_l2_v - 4.0).abs() < 1e-14);
        assert!((c.lambda_v - 18.0).abs() < 1e-13);

        let free = HamiltonianSpec::new(2, 1, vec![PotentialTerm::new(1, pauli::z())]).unwrap();
        let c = bound_constants(&free, 0.0);
        assert_eq!((c.sum_l1_v, c.sum_l2_v, c.lambda_v), (0.0, 0.0, 0.0));
    }
}
