//! Brute-force reference implementations that share no code paths with the
//! library beyond the basic matrix type.

#![allow(dead_code)]

use hartree_core::linalg::{CMat, CVec, C64};
use hartree_core::operators::HamiltonianSpec;
use hartree_core::symmetric_space::OccupationBasis;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn max_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn digits(mut idx: usize, d: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in (0..n).rev() {
        out[slot] = idx % d;
        idx /= d;
    }
    out
}

fn undigits(ds: &[usize], d: usize) -> usize {
    ds.iter().fold(0, |acc, &x| acc * d + x)
}

/// `op` acting on `support` (0-based, in the given order) inside `n` slots,
/// built entry by entry.
pub fn embed(op: &CMat, support: &[usize], d: usize, n: usize) -> CMat {
    let dim = d.pow(n as u32);
    let mut out = CMat::zeros(dim, dim);
    for col in 0..dim {
        let cd = digits(col, d, n);
        let local_col = undigits(&support.iter().map(|&s| cd[s]).collect::<Vec<_>>(), d);
        for local_row in 0..op.nrows() {
            let v = op[(local_row, local_col)];
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            let rd_local = digits(local_row, d, support.len());
            let mut rd = cd.clone();
            for (k, &s) in support.iter().enumerate() {
                rd[s] = rd_local[k];
            }
            out[(undigits(&rd, d), col)] += v;
        }
    }
    out
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|x| x as f64).product()
}

/// Full-space Hamiltonian with per-subset weight `(m-1)!/N^(m-1)`.
pub fn full_hamiltonian(spec: &HamiltonianSpec, n: usize) -> CMat {
    let d = spec.d();
    let dim = d.pow(n as u32);
    let mut h = CMat::zeros(dim, dim);
    for term in spec.terms() {
        let m = term.order;
        let w = factorial(m - 1) / (n as f64).powi(m as i32 - 1);
        for s in subsets(n, m) {
            h += embed(&term.matrix, &s, d, n) * c(w);
        }
    }
    h
}

/// Columns: normalized symmetrizations of one representative sequence per
/// occupation tuple, in the library's basis order.
pub fn isometry(basis: &OccupationBasis) -> CMat {
    let (d, n) = (basis.d(), basis.n_particles());
    let dim = d.pow(n as u32);
    let mut out = CMat::zeros(dim, basis.dim());
    for (col, occ) in basis.vectors().iter().enumerate() {
        let mut count = 0usize;
        for idx in 0..dim {
            let mut o = vec![0u32; d];
            for x in digits(idx, d, n) {
                o[x] += 1;
            }
            if &o == occ {
                out[(idx, col)] = c(1.0);
                count += 1;
            }
        }
        let norm = (count as f64).sqrt();
        for idx in 0..dim {
            out[(idx, col)] /= c(norm);
        }
    }
    out
}

/// `tr_{[k+1,n]} |ψ⟩⟨ψ|` by explicit index loops.
pub fn partial_trace_pure(psi: &CVec, d: usize, n: usize, k: usize) -> CMat {
    let kept = d.pow(k as u32);
    let rest = d.pow((n - k) as u32);
    let mut out = CMat::zeros(kept, kept);
    for a in 0..kept {
        for b in 0..kept {
            let mut s = C64::new(0.0, 0.0);
            for r in 0..rest {
                s += psi[a * rest + r] * psi[b * rest + r].conj();
            }
            out[(a, b)] = s;
        }
    }
    out
}

/// `tr_{[k+1,n]} ρ` for a general operator by explicit index loops.
pub fn partial_trace(rho: &CMat, d: usize, n: usize, k: usize) -> CMat {
    let kept = d.pow(k as u32);
    let rest = d.pow((n - k) as u32);
    CMat::from_fn(kept, kept, |a, b| (0..rest).map(|r| rho[(a * rest + r, b * rest + r)]).sum())
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn kron_power(a: &CMat, k: usize) -> CMat {
    (0..k).fold(CMat::identity(1, 1), |acc, _| kron(&acc, a))
}

/// `exp(-iHt)` by Taylor series with scaling and squaring.
pub fn expm_minus_i(h: &CMat, t: f64) -> CMat {
    let norm: f64 = h.iter().map(|z| z.norm()).sum::<f64>() * t.abs();
    let squarings = norm.max(1.0).log2().ceil() as u32 + 4;
    let scaled = h * C64::new(0.0, -t / 2f64.powi(squarings as i32));
    let n = h.nrows();
    let mut term = CMat::identity(n, n);
    let mut sum = CMat::identity(n, n);
    for k in 1..30 {
        term = &term * &scaled / c(k as f64);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// The mean-field right-hand side in its literal form
/// `-i([V1, γ] + Σ_j tr_{[2,j]} [V^(j), γ^{⊗j}])`.
pub fn literal_hartree_rhs(gamma: &CMat, spec: &HamiltonianSpec) -> CMat {
    let d = spec.d();
    let mut acc = CMat::zeros(d, d);
    for term in spec.terms() {
        let m = term.order;
        let g = kron_power(gamma, m);
        let comm = &term.matrix * &g - &g * &term.matrix;
        acc += partial_trace(&comm, d, m, 1);
    }
    acc * C64::new(0.0, -1.0)
}

/// Classical fixed-step RK4 on the literal right-hand side.
pub fn rk4_hartree(gamma0: &CMat, spec: &HamiltonianSpec, t: f64, steps: usize) -> CMat {
    let h = t / steps as f64;
    let mut y = gamma0.clone();
    for _ in 0..steps {
        let k1 = literal_hartree_rhs(&y, spec);
        let k2 = literal_hartree_rhs(&(&y + &k1 * c(h / 2.0)), spec);
        let k3 = literal_hartree_rhs(&(&y + &k2 * c(h / 2.0)), spec);
        let k4 = literal_hartree_rhs(&(&y + &k3 * c(h)), spec);
        y += (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(h / 6.0);
    }
    y
}

pub fn tensor_product_state(phi: &CVec, n: usize) -> CVec {
    (0..n).fold(CVec::from_element(1, c(1.0)), |acc, _| {
        CVec::from_fn(acc.len() * phi.len(), |i, _| acc[i / phi.len()] * phi[i % phi.len()])
    })
}
