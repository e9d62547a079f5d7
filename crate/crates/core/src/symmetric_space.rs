//! Bosonic occupation-number basis and operators built directly on the
//! permutation-symmetric subspace.
//!
//! An `m`-body potential summed over all particle `m`-subsets is represented
//! in second quantization as
//! `(1/m!) Σ ⟨i⃗|V|j⃗⟩ a†_{i1}…a†_{im} a_{j1}…a_{jm}`, evaluated by walking
//! occupation tuples with the usual square-root ladder factors.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hartree::DensityMatrix;
use crate::linalg::{self, CMat, CVec, C64, ZERO};
use crate::operators::{HamiltonianSpec, PotentialTerm};

pub type Occupation = Vec<u32>;

/// All occupation tuples `(n_1, …, n_d)` with `Σ n_i = N`, in lexicographic
/// descending order.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupationBasis {
    d: usize,
    n_particles: usize,
    vectors: Vec<Occupation>,
    index: HashMap<Occupation, usize>,
}

/// `binomial(N + d - 1, d - 1)` with overflow detection.
pub fn symmetric_dimension(d: usize, n: usize) -> Option<usize> {
    if d == 0 {
        return None;
    }
    let mut c: usize = 1;
    // C(n+i, i) from C(n+i-1, i-1); every intermediate is an integer
    for i in 1..d {
        c = c.checked_mul(n.checked_add(i)?)? / i;
    }
    Some(c)
}

pub fn enumerate_basis(d: usize, n: usize) -> Result<OccupationBasis> {
    if d == 0 {
        return Err(Error::InvalidArgument("single-particle dimension must be at least 1".into()));
    }
    let count = symmetric_dimension(d, n).ok_or(Error::BasisOverflow { d, n_particles: n })?;
    u32::try_from(n).map_err(|_| Error::BasisOverflow { d, n_particles: n })?;

    let mut vectors = Vec::with_capacity(count);
    let mut cur = vec![0u32; d];
    fill(&mut cur, 0, n as u32, &mut vectors);
    debug_assert_eq!(vectors.len(), count);
    let index = vectors.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
    Ok(OccupationBasis {
        d,
        n_particles: n,
        vectors,
        index,
    })
}

fn fill(cur: &mut Occupation, pos: usize, remaining: u32, out: &mut Vec<Occupation>) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining;
        out.push(cur.clone());
        return;
    }
    for n in (0..=remaining).rev() {
        cur[pos] = n;
        fill(cur, pos + 1, remaining - n, out);
    }
    cur[pos] = 0;
}

impl OccupationBasis {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Occupation] {
        &self.vectors
    }

    pub fn position(&self, occ: &[u32]) -> Option<usize> {
        self.index.get(occ).copied()
    }
}

/// Lowers mode `mode`, returning `sqrt(n)`, or `None` if it was empty.
fn annihilate(occ: &mut [u32], mode: usize) -> Option<f64> {
    let n = occ[mode];
    if n == 0 {
        return None;
    }
    occ[mode] = n - 1;
    Some(f64::from(n).sqrt())
}

fn create(occ: &mut [u32], mode: usize) -> f64 {
    occ[mode] += 1;
    f64::from(occ[mode]).sqrt()
}

/// Normalized state over an occupation basis.
#[derive(Clone, Debug)]
pub struct SymmetricState {
    pub basis: Arc<OccupationBasis>,
    pub amplitudes: CVec,
}

impl SymmetricState {
    pub fn new(basis: Arc<OccupationBasis>, amplitudes: CVec) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: amplitudes.len(),
            });
        }
        Ok(SymmetricState { basis, amplitudes })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `⟨ψ|op|ψ⟩` for an operator on the symmetric subspace.
    pub fn expectation(&self, op: &CMat) -> C64 {
        self.amplitudes.dotc(&(op * &self.amplitudes))
    }
}

/// `|φ⟩^{⊗N}` in occupation coordinates:
/// amplitude `sqrt(N!/Π n_i!) Π φ_i^{n_i}` at `(n_1, …, n_d)`.
pub fn embed_product_state(phi: &CVec, n: usize) -> Result<SymmetricState> {
    let basis = Arc::new(enumerate_basis(phi.len(), n)?);
    embed_product_state_in(phi, basis)
}

pub fn embed_product_state_in(phi: &CVec, basis: Arc<OccupationBasis>) -> Result<SymmetricState> {
    if phi.len() != basis.d() {
        return Err(Error::DimensionMismatch {
            expected: basis.d(),
            found: phi.len(),
        });
    }
    let norm = phi.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm });
    }
    let n = basis.n_particles();
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=n).scan(0.0, |acc, k| {
            *acc += (k as f64).ln();
            Some(*acc)
        }))
        .collect();

    // log-space magnitude keeps large N free of factorial overflow
    let amplitudes = CVec::from_iterator(
        basis.dim(),
        basis.vectors().iter().map(|occ| {
            let mut log_mag = 0.5 * ln_fact[n];
            let mut phase = 0.0;
            for (i, &ni) in occ.iter().enumerate() {
                if ni == 0 {
                    continue;
                }
                let z = phi[i];
                if z == ZERO {
                    return ZERO;
                }
                log_mag += f64::from(ni) * z.norm().ln() - 0.5 * ln_fact[ni as usize];
                phase += f64::from(ni) * z.arg();
            }
            C64::from_polar(log_mag.exp(), phase)
        }),
    );
    SymmetricState::new(basis, amplitudes)
}

/// `prefactor · Σ_{j1<…<jm} V_{j1…jm}` restricted to the symmetric subspace.
pub fn build_symmetric_operator(term: &PotentialTerm, basis: &OccupationBasis, prefactor: f64) -> Result<CMat> {
    let d = basis.d();
    let m = term.order;
    if m > basis.n_particles() {
        return Err(Error::OrderExceedsParticles {
            order: m,
            n_particles: basis.n_particles(),
        });
    }
    let sub_dim = linalg::checked_pow(d, m).ok_or(Error::DimensionMismatch {
        expected: usize::MAX,
        found: term.matrix.nrows(),
    })?;
    if term.matrix.nrows() != sub_dim || term.matrix.ncols() != sub_dim {
        return Err(Error::DimensionMismatch {
            expected: sub_dim,
            found: term.matrix.nrows(),
        });
    }
    let coeff = prefactor / linalg::factorial(m);
    let tuples: Vec<Vec<usize>> = (0..sub_dim).map(|t| linalg::digits(t, d, m)).collect();

    let dim = basis.dim();
    let mut out = CMat::zeros(dim, dim);
    for (col, occ) in basis.vectors().iter().enumerate() {
        for (j, jt) in tuples.iter().enumerate() {
            let mut lowered = occ.clone();
            let mut f = 1.0;
            let mut alive = true;
            for &mode in jt {
                match annihilate(&mut lowered, mode) {
                    Some(s) => f *= s,
                    None => {
                        alive = false;
                        break;
                    }
                }
            }
            if !alive {
                continue;
            }
            for (i, it) in tuples.iter().enumerate() {
                let v = term.matrix[(i, j)];
                if v == ZERO {
                    continue;
                }
                let mut raised = lowered.clone();
                let mut g = 1.0;
                for &mode in it {
                    g *= create(&mut raised, mode);
                }
                let row = basis
                    .position(&raised)
                    .expect("particle number is conserved");
                out[(row, col)] += v * (coeff * f * g);
            }
        }
    }
    Ok(out)
}

/// Weight carried by each unordered particle `m`-subset in `H_N`:
/// `(m-1)!/N^(m-1)`, i.e. `1/(m N^(m-1))` per ordered tuple of distinct
/// particles. This is the normalization under which the generalized Hartree
/// equation `i γ̇ = [V1, γ] + Σ_j tr_{[2,j]}[V^(j), γ^{⊗j}]` is the exact
/// mean-field limit.
pub fn interaction_weight(m: usize, n: usize) -> f64 {
    linalg::factorial(m - 1) / (n as f64).powi(m as i32 - 1)
}

pub fn build_hamiltonian(spec: &HamiltonianSpec, n: usize) -> Result<CMat> {
    let basis = enumerate_basis(spec.d(), n)?;
    build_hamiltonian_on(spec, &basis)
}

pub fn build_hamiltonian_on(spec: &HamiltonianSpec, basis: &OccupationBasis) -> Result<CMat> {
    if basis.d() != spec.d() {
        return Err(Error::DimensionMismatch {
            expected: spec.d(),
            found: basis.d(),
        });
    }
    let n = basis.n_particles();
    let mut h = CMat::zeros(basis.dim(), basis.dim());
    for term in spec.terms() {
        h += build_symmetric_operator(term, basis, interaction_weight(term.order, n))?;
    }
    Ok(linalg::hermitize(&h))
}

/// Applies `a_mode` to a vector over `from`, producing a vector over `to`
/// (one particle fewer).
fn apply_annihilator(v: &CVec, mode: usize, from: &OccupationBasis, to: &OccupationBasis) -> CVec {
    let mut out = CVec::zeros(to.dim());
    for (i, occ) in from.vectors().iter().enumerate() {
        let amp = v[i];
        if occ[mode] == 0 || amp == ZERO {
            continue;
        }
        let mut lowered = occ.clone();
        let s = annihilate(&mut lowered, mode).unwrap_or(0.0);
        let j = to.position(&lowered).expect("lowered tuple lies in the smaller basis");
        out[j] += amp * s;
    }
    out
}

/// `k`-particle reduced density matrix
/// `γ^(k)_{a⃗,b⃗} = ((N-k)!/N!) ⟨ψ| a†_{b1}…a†_{bk} a_{a1}…a_{ak} |ψ⟩`.
///
/// The lowered vectors `a_{x1}…a_{xk}ψ` are computed once per multiset of
/// modes and shared by every ordering of it, so the result is exactly
/// symmetric under slot permutations and exactly Hermitian.
pub fn rdm(state: &SymmetricState, k: usize) -> Result<DensityMatrix> {
    let basis = &state.basis;
    let n = basis.n_particles();
    let d = basis.d();
    if k == 0 {
        return Err(Error::InvalidArgument("reduced density matrix order must be at least 1".into()));
    }
    if k > n {
        return Err(Error::RdmOrderTooLarge { k, n_particles: n });
    }
    let mut ladder: Vec<Arc<OccupationBasis>> = vec![basis.clone()];
    for s in 1..=k {
        ladder.push(Arc::new(enumerate_basis(d, n - s)?));
    }

    // depth-first over non-decreasing mode tuples
    let mut multisets: Vec<Vec<usize>> = Vec::new();
    let mut lowered: Vec<CVec> = Vec::new();
    fn descend(
        prefix: &mut Vec<usize>,
        v: &CVec,
        k: usize,
        d: usize,
        ladder: &[Arc<OccupationBasis>],
        multisets: &mut Vec<Vec<usize>>,
        lowered: &mut Vec<CVec>,
    ) {
        let depth = prefix.len();
        if depth == k {
            multisets.push(prefix.clone());
            lowered.push(v.clone());
            return;
        }
        let start = prefix.last().copied().unwrap_or(0);
        for mode in start..d {
            let next = apply_annihilator(v, mode, &ladder[depth], &ladder[depth + 1]);
            prefix.push(mode);
            descend(prefix, &next, k, d, ladder, multisets, lowered);
            prefix.pop();
        }
    }
    descend(&mut Vec::with_capacity(k), &state.amplitudes, k, d, &ladder, &mut multisets, &mut lowered);

    let slot_index: HashMap<Vec<usize>, usize> =
        multisets.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
    let n_sets = multisets.len();
    let mut gram = CMat::zeros(n_sets, n_sets);
    for p in 0..n_sets {
        for q in p..n_sets {
            // ⟨φ_q|φ_p⟩
            let g = lowered[q].dotc(&lowered[p]);
            gram[(p, q)] = g;
            gram[(q, p)] = g.conj();
        }
        gram[(p, p)] = C64::new(gram[(p, p)].re, 0.0);
    }

    let norm = 1.0 / linalg::falling_factorial(n, k);
    let dim = d.pow(k as u32);
    let canon: Vec<usize> = (0..dim)
        .map(|t| {
            let mut tuple = linalg::digits(t, d, k);
            tuple.sort_unstable();
            slot_index[&tuple]
        })
        .collect();
    let matrix = CMat::from_fn(dim, dim, |a, b| gram[(canon[a], canon[b])] * norm);
    DensityMatrix::new(k, d, matrix)
}
