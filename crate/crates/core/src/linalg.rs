//! Dense complex linear algebra on tensor-product spaces.
//!
//! Multi-particle indices are row-major over the slots: slot 1 is the most
//! significant digit, so index `(i1, ..., im)` maps to `i1*d^(m-1) + ... + im`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// `d^k`, or `None` on overflow.
pub fn checked_pow(d: usize, k: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..k {
        acc = acc.checked_mul(d)?;
    }
    Some(acc)
}

/// Number of slots `m` with `d^m == dim`, if `dim` is a power of `d`.
pub fn tensor_order(dim: usize, d: usize) -> Option<usize> {
    if d == 1 {
        return (dim == 1).then_some(1);
    }
    let mut m = 0;
    let mut acc = 1usize;
    while acc < dim {
        acc = acc.checked_mul(d)?;
        m += 1;
    }
    (acc == dim).then_some(m)
}

/// Base-`d` digits of `index` over `slots` positions, most significant first.
pub fn digits(mut index: usize, d: usize, slots: usize) -> Vec<usize> {
    let mut out = vec![0; slots];
    for s in (0..slots).rev() {
        out[s] = index % d;
        index /= d;
    }
    out
}

pub fn from_digits(digits: &[usize], d: usize) -> usize {
    digits.iter().fold(0, |acc, &x| acc * d + x)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// `a^{⊗k}`; `k = 0` gives the 1×1 identity.
pub fn kron_power(a: &CMat, k: usize) -> CMat {
    let mut out = CMat::identity(1, 1);
    for _ in 0..k {
        out = out.kronecker(a);
    }
    out
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn trace(a: &CMat) -> C64 {
    a.diagonal().iter().sum()
}

/// `tr(a b)` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest entrywise deviation of `a` from its conjugate transpose.
pub fn hermitian_deviation(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

/// `(a + a†) / 2`.
pub fn hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
pub fn eigh(a: &CMat) -> Result<(DVector<f64>, CMat)> {
    let n = a.nrows();
    let eig = nalgebra::SymmetricEigen::try_new(a.clone(), f64::EPSILON, 0)
        .ok_or(Error::EigenFailure(n))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn eigvalsh(a: &CMat) -> Result<Vec<f64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let eig = nalgebra::SymmetricEigen::try_new(a.clone(), f64::EPSILON, 0)
        .ok_or(Error::EigenFailure(n))?;
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Spectral norm of a matrix known to be Hermitian.
pub fn hermitian_norm(a: &CMat) -> Result<f64> {
    let values = eigvalsh(a)?;
    Ok(values.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// Singular values of an arbitrary square matrix, descending.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Embeds `op` (acting on `support.len()` slots) into the `n`-particle space.
/// Slot `s` of `op` acts on particle `support[s]` (0-based).
pub fn embed_operator(op: &CMat, support: &[usize], d: usize, n: usize) -> CMat {
    let m = support.len();
    let sub_dim = d.pow(m as u32);
    assert_eq!(op.nrows(), sub_dim, "operator dimension must be d^|support|");
    let dim = d.pow(n as u32);
    let strides: Vec<usize> = support.iter().map(|&p| d.pow((n - 1 - p) as u32)).collect();
    let sub_digit_strides: Vec<usize> = (0..m).map(|s| d.pow((m - 1 - s) as u32)).collect();

    let mut out = CMat::zeros(dim, dim);
    for col in 0..dim {
        let mut sub_col = 0;
        let mut base = col;
        for (s, &stride) in strides.iter().enumerate() {
            let digit = (col / stride) % d;
            sub_col += digit * sub_digit_strides[s];
            base -= digit * stride;
        }
        for sub_row in 0..sub_dim {
            let v = op[(sub_row, sub_col)];
            if v == ZERO {
                continue;
            }
            let mut row = base;
            for (s, &stride) in strides.iter().enumerate() {
                row += ((sub_row / sub_digit_strides[s]) % d) * stride;
            }
            out[(row, col)] += v;
        }
    }
    out
}

/// Traces out the trailing `total - keep` slots.
pub fn partial_trace_trailing(a: &CMat, d: usize, keep: usize, total: usize) -> CMat {
    let kept = d.pow(keep as u32);
    let rest = d.pow((total - keep) as u32);
    assert_eq!(a.nrows(), kept * rest, "matrix dimension must be d^total");
    CMat::from_fn(kept, kept, |i, j| {
        (0..rest).map(|r| a[(i * rest + r, j * rest + r)]).sum()
    })
}

/// Traces out the leading `total - keep` slots.
pub fn partial_trace_leading(a: &CMat, d: usize, keep: usize, total: usize) -> CMat {
    let kept = d.pow(keep as u32);
    let rest = d.pow((total - keep) as u32);
    assert_eq!(a.nrows(), kept * rest, "matrix dimension must be d^total");
    CMat::from_fn(kept, kept, |i, j| {
        (0..rest).map(|r| a[(r * kept + i, r * kept + j)]).sum()
    })
}

/// Conjugates an `m`-slot operator by the slot permutation `perm`:
/// the result acts with slot `s` of `a` moved to slot `perm[s]`.
pub fn permute_slots(a: &CMat, d: usize, perm: &[usize]) -> CMat {
    let m = perm.len();
    let dim = a.nrows();
    let index_map: Vec<usize> = (0..dim)
        .map(|idx| {
            let src = digits(idx, d, m);
            let mut dst = vec![0; m];
            for s in 0..m {
                dst[perm[s]] = src[s];
            }
            from_digits(&dst, d)
        })
        .collect();
    let mut out = CMat::zeros(dim, dim);
    for c in 0..dim {
        for r in 0..dim {
            out[(index_map[r], index_map[c])] = a[(r, c)];
        }
    }
    out
}

/// All permutations of `0..m` in lexicographic order.
pub fn permutations(m: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(m), &mut vec![false; m], &mut out);
    out
}

/// Strictly increasing `k`-subsets of `0..n`, lexicographic.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `n (n-1) ... (n-k+1)`, zero when `k > n`.
pub fn falling_factorial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    falling_factorial(n, k) / factorial(k)
}

/// Pauli matrices, handy for tests and example configurations.
pub mod pauli {
    use super::{CMat, C64};

    pub fn x() -> CMat {
        CMat::from_row_slice(2, 2, &[C64::new(0., 0.), C64::new(1., 0.), C64::new(1., 0.), C64::new(0., 0.)])
    }

    pub fn y() -> CMat {
        CMat::from_row_slice(2, 2, &[C64::new(0., 0.), C64::new(0., -1.), C64::new(0., 1.), C64::new(0., 0.)])
    }

    pub fn z() -> CMat {
        CMat::from_row_slice(2, 2, &[C64::new(1., 0.), C64::new(0., 0.), C64::new(0., 0.), C64::new(-1., 0.)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_order_detects_powers() {
        assert_eq!(tensor_order(8, 2), Some(3));
        assert_eq!(tensor_order(9, 3), Some(2));
        assert_eq!(tensor_order(6, 2), None);
        assert_eq!(tensor_order(1, 3), Some(0));
    }

    #[test]
    fn embed_matches_kron() {
        let a = pauli::x();
        let b = pauli::z();
        let ab = kron(&a, &b);
        // a on particle 0, b on particle 2 of three
        let expected = kron(&kron(&a, &CMat::identity(2, 2)), &b);
        assert!(max_abs_diff(&embed_operator(&ab, &[0, 2], 2, 3), &expected) < 1e-15);
        // reversed support swaps which factor lands where
        let swapped = kron(&kron(&b, &CMat::identity(2, 2)), &a);
        assert!(max_abs_diff(&embed_operator(&ab, &[2, 0], 2, 3), &swapped) < 1e-15);
    }

    #[test]
    fn partial_trace_of_product() {
        let a = pauli::x() + CMat::identity(2, 2);
        let b = pauli::z() * C64::new(0.3, 0.0) + CMat::identity(2, 2);
        let pt = partial_trace_trailing(&kron(&a, &b), 2, 1, 2);
        assert!(max_abs_diff(&pt, &(a * C64::new(2.0, 0.0))) < 1e-15);
    }

    #[test]
    fn permute_slots_swaps_factors() {
        let xz = kron(&pauli::x(), &pauli::z());
        let zx = kron(&pauli::z(), &pauli::x());
        assert!(max_abs_diff(&permute_slots(&xz, 2, &[1, 0]), &zx) < 1e-15);
    }

    #[test]
    fn combinatorics() {
        assert_eq!(combinations(5, 2).len(), 10);
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(binomial(6, 3), 20.0);
        assert_eq!(falling_factorial(5, 2), 20.0);
        assert_eq!(falling_factorial(2, 3), 0.0);
    }

    #[test]
    fn eigh_sorted_and_reconstructs() {
        let h = kron(&pauli::x(), &pauli::z()) + kron(&pauli::y(), &pauli::y());
        let (vals, vecs) = eigh(&h).unwrap();
        assert!(vals.as_slice().windows(2).all(|w| w[0] <= w[1]));
        let diag = CMat::from_diagonal(&vals.map(|v| C64::new(v, 0.0)));
        assert!(max_abs_diff(&(&vecs * diag * vecs.adjoint()), &h) < 1e-13);
    }
}
