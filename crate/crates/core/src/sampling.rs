//! Seeded generators for random Wigner-valid covariances, built from
//! Williamson normal form: Σ = S diag(ν1, ν1, ν2, ν2) Sᵀ with symplectic S
//! and thermal ν >= 1/2. Used by property and acceptance tests.

use nalgebra::{Matrix2, Matrix4};
use rand::Rng;

/// Phase-space rotation, symplectic for one mode.
pub fn rotation2(theta: f64) -> Matrix2<f64> {
    Matrix2::new(theta.cos(), theta.sin(), -theta.sin(), theta.cos())
}

/// Random single-mode symplectic: rotation ∘ squeeze ∘ rotation.
pub fn random_local_symplectic<R: Rng>(rng: &mut R) -> Matrix2<f64> {
    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
    let phi = rng.gen_range(0.0..std::f64::consts::TAU);
    let s = rng.gen_range(-0.8..0.8f64);
    rotation2(theta) * Matrix2::new(s.exp(), 0.0, 0.0, (-s).exp()) * rotation2(phi)
}

/// Two-mode squeezing symplectic with parameter r, ordering (q1,p1,q2,p2).
pub fn two_mode_squeeze(r: f64) -> Matrix4<f64> {
    let (c, s) = (r.cosh(), r.sinh());
    Matrix4::new(
        c, 0.0, s, 0.0, //
        0.0, c, 0.0, -s, //
        s, 0.0, c, 0.0, //
        0.0, -s, 0.0, c,
    )
}

/// Covariance of the two-mode squeezed (EPR-like) state with parameter r:
/// relative position and total momentum squeezed by e^{-2r}.
pub fn two_mode_squeezed_cov(r: f64) -> Matrix4<f64> {
    let s = two_mode_squeeze(r);
    s * Matrix4::from_diagonal_element(0.5) * s.transpose()
}

fn embed_locals(a: &Matrix2<f64>, b: &Matrix2<f64>) -> Matrix4<f64> {
    let mut out = Matrix4::zeros();
    out.fixed_view_mut::<2, 2>(0, 0).copy_from(a);
    out.fixed_view_mut::<2, 2>(2, 2).copy_from(b);
    out
}

/// Random Wigner-valid single-mode covariance.
pub fn random_wigner_cov_single<R: Rng>(rng: &mut R) -> Matrix2<f64> {
    let s = random_local_symplectic(rng);
    let nu = 0.5 * (1.0 + rng.gen_range(0.0..1.5f64));
    s * Matrix2::from_diagonal_element(nu) * s.transpose()
}

/// Random Wigner-valid two-mode covariance; squeezing between the modes
/// makes a sizable fraction of draws entangled.
pub fn random_wigner_cov_two_mode<R: Rng>(rng: &mut R) -> Matrix4<f64> {
    let l1 = embed_locals(&random_local_symplectic(rng), &random_local_symplectic(rng));
    let l2 = embed_locals(&random_local_symplectic(rng), &random_local_symplectic(rng));
    let s = l1 * two_mode_squeeze(rng.gen_range(0.0..1.2)) * l2;
    let nu1 = 0.5 * (1.0 + rng.gen_range(0.0..1.0f64));
    let nu2 = 0.5 * (1.0 + rng.gen_range(0.0..1.0f64));
    let mut w = Matrix4::zeros();
    w[(0, 0)] = nu1;
    w[(1, 1)] = nu1;
    w[(2, 2)] = nu2;
    w[(3, 3)] = nu2;
    s * w * s.transpose()
}

/// Random PSD 2x2 matrix (for smearing-perturbation properties).
pub fn random_psd2<R: Rng>(rng: &mut R) -> Matrix2<f64> {
    let a = Matrix2::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    );
    a * a.transpose()
}
