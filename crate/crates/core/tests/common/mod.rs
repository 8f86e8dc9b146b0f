//! Seeded random scenario generators shared by the integration suites.

use lgsim_core::qcore::{Operator, QuantumState, C64};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_complex(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> Operator {
    let m = DMatrix::from_fn(dim, dim, |_, _| random_complex(rng));
    let herm = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    Operator::hermitian(herm).expect("symmetrized matrix is hermitian")
}

/// Random dichotomic observable with both eigenvalue signs present.
pub fn random_dichotomic(rng: &mut ChaCha8Rng, dim: usize) -> Operator {
    let basis = random_hermitian(rng, dim);
    let (_, vectors) = basis.eigh().unwrap();
    let signs: Vec<f64> = loop {
        let draw: Vec<f64> = (0..dim)
            .map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        if draw.iter().any(|&s| s > 0.0) && draw.iter().any(|&s| s < 0.0) {
            break draw;
        }
    };
    let diag = DMatrix::from_diagonal(&DVector::from_iterator(
        dim,
        signs.iter().map(|&s| C64::new(s, 0.0)),
    ));
    Operator::from_matrix(&vectors * diag * vectors.adjoint())
}

pub fn random_pure(rng: &mut ChaCha8Rng, dim: usize) -> QuantumState {
    let mut v = DVector::from_fn(dim, |_, _| random_complex(rng));
    let norm = v.norm();
    v /= C64::new(norm, 0.0);
    QuantumState::pure(v).expect("normalized ket")
}

/// Pure qubit state with ⟨σx⟩ = 0 (the y-z great circle, up to global phase).
pub fn random_yz_plane_state(rng: &mut ChaCha8Rng) -> QuantumState {
    let a: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let global: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let phase = C64::new(0.0, global).exp();
    let ket = DVector::from_vec(vec![
        phase * C64::new(a.cos(), 0.0),
        phase * C64::new(0.0, a.sin()),
    ]);
    QuantumState::pure(ket).expect("normalized ket")
}

/// Random (Q, H, t1, t2) scenario in the given dimension.
pub fn random_scenario(rng: &mut ChaCha8Rng, dim: usize) -> (Operator, Operator, f64, f64) {
    let q = random_dichotomic(rng, dim);
    let h = random_hermitian(rng, dim);
    let t1: f64 = rng.gen_range(0.0..1.5);
    let tau: f64 = rng.gen_range(0.0..2.5);
    (q, h, t1, t1 + tau)
}
