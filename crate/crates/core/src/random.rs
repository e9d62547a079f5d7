//! Seeded sampling of states, observables and potentials.
//!
//! Everything draws from ChaCha streams, so a `(seed, stream)` pair fixes the
//! sample on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{self, CMat, CVec, C64};
use crate::operators::{HamiltonianSpec, PotentialTerm};

/// Stream `stream` of the generator seeded by `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

pub fn ginibre<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    // column-major fill order is part of the reproducibility contract
    CMat::from_fn(dim, dim, |_, _| gaussian(rng))
}

/// `(G + G†)/2` for a complex Gaussian matrix `G`.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    linalg::hermitize(&ginibre(dim, rng))
}

/// Random Hermitian matrix rescaled to unit spectral norm.
pub fn normalized_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let h = random_hermitian(dim, rng);
    let norm = linalg::hermitian_norm(&h).expect("small Hermitian eigenproblem");
    h / C64::new(norm, 0.0)
}

pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVec {
    let v = CVec::from_fn(dim, |_, _| gaussian(rng));
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

/// Haar-distributed unitary from the phase-corrected QR factorization of a
/// Ginibre matrix.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let qr = ginibre(dim, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// `exp(i·step·K)` for Hermitian `K`.
pub fn unitary_from_generator(k: &CMat, step: f64) -> CMat {
    let (vals, vecs) = linalg::eigh(k).expect("small Hermitian eigenproblem");
    let phases = CMat::from_diagonal(&vals.map(|v| C64::from_polar(1.0, step * v)));
    &vecs * phases * vecs.adjoint()
}

/// Random Hermitian `m`-body potential on `C^d`, averaged over all slot
/// permutations and scaled to spectral norm `scale`.
pub fn random_symmetric_potential<R: Rng + ?Sized>(d: usize, m: usize, scale: f64, rng: &mut R) -> CMat {
    let dim = d.pow(m as u32);
    let raw = random_hermitian(dim, rng);
    let perms = linalg::permutations(m);
    let mut sym = CMat::zeros(dim, dim);
    for p in &perms {
        sym += linalg::permute_slots(&raw, d, p);
    }
    sym /= C64::new(perms.len() as f64, 0.0);
    let sym = linalg::hermitize(&sym);
    let norm = linalg::hermitian_norm(&sym).expect("small Hermitian eigenproblem");
    sym * C64::new(scale / norm, 0.0)
}

/// Spec with random terms at every order `1..=m_max`, each of spectral norm
/// `scale`.
pub fn random_spec<R: Rng + ?Sized>(d: usize, m_max: usize, scale: f64, rng: &mut R) -> HamiltonianSpec {
    let terms = (1..=m_max)
        .map(|m| PotentialTerm::new(m, random_symmetric_potential(d, m, scale, rng)))
        .collect();
    HamiltonianSpec::new(d, m_max, terms).expect("shapes are consistent by construction")
}
