//! Symplectic linear algebra, Gaussian states, and Wigner/P-function
//! validity tests.
//!
//! Conventions: ħ = 1, coordinates ordered (q, p) per mode, covariances are
//! plain second moments. A 2x2 covariance describes a physical state exactly
//! when it is positive semidefinite with determinant >= 1/4; the vacuum
//! diag(1/2, 1/2) sits on the boundary.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};

use crate::{Error, Result};

/// Relative tolerance treated as zero in positivity tests.
pub const PSD_TOL: f64 = 1e-12;

/// Single-mode symplectic form η = [[0, 1], [-1, 0]].
pub fn eta2() -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, -1.0, 0.0)
}

/// Two-mode symplectic form η ⊕ η.
pub fn eta4() -> Matrix4<f64> {
    let mut j = Matrix4::zeros();
    j.fixed_view_mut::<2, 2>(0, 0).copy_from(&eta2());
    j.fixed_view_mut::<2, 2>(2, 2).copy_from(&eta2());
    j
}

/// Block-diagonal symplectic form for 1 or 2 modes.
#[derive(Clone, Debug, PartialEq)]
pub enum SymplecticForm {
    One(Matrix2<f64>),
    Two(Matrix4<f64>),
}

impl SymplecticForm {
    pub fn n_modes(&self) -> usize {
        match self {
            SymplecticForm::One(_) => 1,
            SymplecticForm::Two(_) => 2,
        }
    }
}

/// The symplectic form on `n_modes` modes.
pub fn symplectic_form(n_modes: usize) -> Result<SymplecticForm> {
    match n_modes {
        1 => Ok(SymplecticForm::One(eta2())),
        2 => Ok(SymplecticForm::Two(eta4())),
        n => Err(Error::UnsupportedModes(n)),
    }
}

/// Conjugate a 2x2 matrix by the symplectic form: ηᵀ A η.
pub(crate) fn eta_conj(a: &Matrix2<f64>) -> Matrix2<f64> {
    // ηᵀ A η = [[a22, -a21], [-a12, a11]]
    Matrix2::new(a[(1, 1)], -a[(1, 0)], -a[(0, 1)], a[(0, 0)])
}

fn symmetrize2(a: &Matrix2<f64>) -> Matrix2<f64> {
    (a + a.transpose()) * 0.5
}

fn symmetrize4(a: &Matrix4<f64>) -> Matrix4<f64> {
    (a + a.transpose()) * 0.5
}

/// PSD test for a symmetric 2x2 matrix via diagonal entries and determinant,
/// with slack `-PSD_TOL * ||Σ||` treated as zero.
pub fn is_psd2(s: &Matrix2<f64>) -> bool {
    let scale = s.amax().max(1.0);
    let tol = PSD_TOL * scale;
    s[(0, 0)] >= -tol && s[(1, 1)] >= -tol && s.determinant() >= -tol * scale
}

/// PSD test for a symmetric 4x4 matrix via eigenvalues.
pub fn is_psd4(s: &Matrix4<f64>) -> bool {
    let scale = s.amax().max(1.0);
    let eig = symmetrize4(s).symmetric_eigenvalues();
    eig.iter().all(|&l| l >= -PSD_TOL * scale)
}

/// Whether a 2x2 covariance is a valid Wigner covariance:
/// positive semidefinite and det Σ >= 1/4 (equivalently Σ + (i/2)η >= 0).
pub fn is_wigner_cov(sigma: &Matrix2<f64>) -> bool {
    let scale = sigma.amax().max(1.0);
    is_psd2(sigma) && sigma.determinant() >= 0.25 - PSD_TOL * scale * scale
}

/// Symplectic eigenvalues (ν₁ >= ν₂ >= 0) of a two-mode covariance.
pub fn symplectic_eigenvalues(sigma: &Matrix4<f64>) -> (f64, f64) {
    let a = sigma.fixed_view::<2, 2>(0, 0).into_owned();
    let b = sigma.fixed_view::<2, 2>(2, 2).into_owned();
    let c = sigma.fixed_view::<2, 2>(0, 2).into_owned();
    let delta = a.determinant() + b.determinant() + 2.0 * c.determinant();
    let det = sigma.determinant();
    let disc = (delta * delta - 4.0 * det).max(0.0);
    let nu1 = (0.5 * (delta + disc.sqrt())).max(0.0).sqrt();
    let nu2 = (0.5 * (delta - disc.sqrt())).max(0.0).sqrt();
    (nu1, nu2)
}

/// Whether a 4x4 covariance is a valid two-mode Wigner covariance.
///
/// Both squared symplectic eigenvalues are roots of x² - Δx + det Σ, so
/// "both ν >= 1/2" is the pair of polynomial conditions
/// det Σ - Δ/4 + 1/16 >= 0 and Δ >= 1/2; testing these avoids the precision
/// loss of the square root at degenerate eigenvalues (pure states).
pub fn is_wigner_cov_two_mode(sigma: &Matrix4<f64>) -> bool {
    if !is_psd4(sigma) {
        return false;
    }
    let a = sigma.fixed_view::<2, 2>(0, 0).into_owned();
    let b = sigma.fixed_view::<2, 2>(2, 2).into_owned();
    let c = sigma.fixed_view::<2, 2>(0, 2).into_owned();
    let delta = a.determinant() + b.determinant() + 2.0 * c.determinant();
    let det = sigma.determinant();
    let scale = sigma.amax().max(1.0);
    let tol = PSD_TOL * scale.powi(4);
    det - 0.25 * delta + 1.0 / 16.0 >= -tol && delta >= 0.5 - PSD_TOL * scale * scale
}

/// Covariances add under convolution of normalized Gaussians.
pub fn convolve_gaussians(a: &Matrix2<f64>, b: &Matrix2<f64>) -> Matrix2<f64> {
    a + b
}

/// The minimum-uncertainty offset C_{1/4} relating Wigner and P functions,
/// `W = g(C_{1/4}) ∗ P`, for momentum diffusion `d_pp` and mass `m`:
///
/// ```text
/// [[ 1/sqrt(2 d_pp m),  1/2              ],
///  [ 1/2,               sqrt(d_pp m / 2) ]]
/// ```
///
/// det C_{1/4} = 1/4 identically.
pub fn p_offset_c14(m: f64, d_pp: f64) -> Result<Matrix2<f64>> {
    if m <= 0.0 {
        return Err(Error::NonPositive("m", m));
    }
    if d_pp <= 0.0 {
        return Err(Error::NonPositive("d_pp", d_pp));
    }
    Ok(Matrix2::new(
        1.0 / (2.0 * d_pp * m).sqrt(),
        0.5,
        0.5,
        (d_pp * m / 2.0).sqrt(),
    ))
}

/// How a Gaussian is being used; kernels (propagator factors) need not be
/// Wigner-valid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateKind {
    Physical,
    Kernel,
}

/// One-mode Gaussian: mean (q, p) and 2x2 covariance.
#[derive(Clone, Copy, Debug)]
pub struct GaussianState1 {
    pub mean: Vector2<f64>,
    pub cov: Matrix2<f64>,
    kind: StateKind,
}

impl GaussianState1 {
    /// A physical state; the covariance must be Wigner-valid.
    pub fn physical(mean: Vector2<f64>, cov: Matrix2<f64>) -> Result<Self> {
        let cov = symmetrize2(&cov);
        if !is_wigner_cov(&cov) {
            return Err(Error::WignerInvalid);
        }
        Ok(Self {
            mean,
            cov,
            kind: StateKind::Physical,
        })
    }

    /// A Gaussian kernel; only symmetry is enforced.
    pub fn kernel(mean: Vector2<f64>, cov: Matrix2<f64>) -> Self {
        Self {
            mean,
            cov: symmetrize2(&cov),
            kind: StateKind::Kernel,
        }
    }

    /// Vacuum state diag(1/2, 1/2) at the origin.
    pub fn vacuum() -> Self {
        Self {
            mean: Vector2::zeros(),
            cov: Matrix2::from_diagonal_element(0.5),
            kind: StateKind::Physical,
        }
    }

    pub fn kind(&self) -> StateKind {
        self.kind
    }
}

/// Two-mode Gaussian: mean (q1, p1, q2, p2) and 4x4 covariance.
#[derive(Clone, Copy, Debug)]
pub struct GaussianState2 {
    pub mean: Vector4<f64>,
    pub cov: Matrix4<f64>,
    kind: StateKind,
}

impl GaussianState2 {
    pub fn physical(mean: Vector4<f64>, cov: Matrix4<f64>) -> Result<Self> {
        let cov = symmetrize4(&cov);
        if !is_wigner_cov_two_mode(&cov) {
            return Err(Error::WignerInvalid);
        }
        Ok(Self {
            mean,
            cov,
            kind: StateKind::Physical,
        })
    }

    pub fn kernel(mean: Vector4<f64>, cov: Matrix4<f64>) -> Self {
        Self {
            mean,
            cov: symmetrize4(&cov),
            kind: StateKind::Kernel,
        }
    }

    pub fn vacuum() -> Self {
        Self {
            mean: Vector4::zeros(),
            cov: Matrix4::from_diagonal_element(0.5),
            kind: StateKind::Physical,
        }
    }

    pub fn kind(&self) -> StateKind {
        self.kind
    }
}

/// Gaussian-Gaussian overlap, normalized so that the overlap of a pure
/// Gaussian state with itself is 1 (the tr(ρσ) convention):
///
/// `overlap = exp(-δᵀ (Σa + Σb)⁻¹ δ / 2) / sqrt(det(Σa + Σb))`,  δ = μa - μb.
///
/// Nonnegative whenever both covariances are Wigner-valid.
pub fn gaussian_overlap(a: &GaussianState1, b: &GaussianState1) -> Result<f64> {
    let sum = a.cov + b.cov;
    let det = sum.determinant();
    if det.abs() < 1e-300 {
        return Err(Error::SingularMatrix("covariance sum"));
    }
    let inv = sum
        .try_inverse()
        .ok_or(Error::SingularMatrix("covariance sum"))?;
    let delta = a.mean - b.mean;
    Ok((-0.5 * delta.dot(&(inv * delta))).exp() / det.sqrt())
}
