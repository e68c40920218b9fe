//! Two harmonically coupled particles in a common environment: the rotated
//! frame, decoupled sector dynamics, and the sector noise integrals in
//! exact, asymptotic, and γ = 0 form.
//!
//! In the rotated (sum/difference) coordinates the two modes decouple into
//! an undashed sector oscillating at the well frequency Ω and a dashed
//! sector at Ω' = sqrt(2ω² + Ω²). Each sector evolves like a single damped
//! oscillator, so the single-particle flow and noise machinery applies
//! per sector with diagonal Fourier-side diffusion diag(D1, D2) =
//! diag(d_pp, d_qq).

use nalgebra::{Matrix2, Matrix4, Vector4};

use crate::dynamics_single::{oscillator_mu, DiffusionMatrix, FlowVariant, Propagator};
use crate::phase_space::GaussianState2;
use crate::{Error, Result};

/// Parameters of the coupled pair, ħ = 1. Both particles share the mass,
/// damping, well frequency, and temperature.
#[derive(Clone, Copy, Debug)]
pub struct CoupledParams {
    pub m: f64,
    pub gamma: f64,
    /// Well frequency Ω.
    pub omega_well: f64,
    /// Inter-particle coupling frequency ω.
    pub omega_c: f64,
    pub k_t: f64,
}

/// Undashed (+, frequency Ω) or dashed (-, frequency Ω') sector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sector {
    Plus,
    Minus,
}

impl Sector {
    pub const BOTH: [Sector; 2] = [Sector::Plus, Sector::Minus];
}

impl CoupledParams {
    pub fn new(m: f64, gamma: f64, omega_well: f64, omega_c: f64, k_t: f64) -> Result<Self> {
        if m <= 0.0 {
            return Err(Error::NonPositive("m", m));
        }
        for (name, v) in [
            ("gamma", gamma),
            ("Omega", omega_well),
            ("omega_c", omega_c),
            ("kT", k_t),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::Negative(name, v));
            }
        }
        Ok(Self {
            m,
            gamma,
            omega_well,
            omega_c,
            k_t,
        })
    }

    /// Ω' = sqrt(2ω² + Ω²).
    pub fn omega_prime(&self) -> f64 {
        (2.0 * self.omega_c * self.omega_c + self.omega_well * self.omega_well).sqrt()
    }

    pub fn sector_frequency(&self, sector: Sector) -> f64 {
        match sector {
            Sector::Plus => self.omega_well,
            Sector::Minus => self.omega_prime(),
        }
    }

    /// α² = Ω_sector² - γ² (negative when overdamped).
    pub fn alpha_sq(&self, sector: Sector) -> f64 {
        let om = self.sector_frequency(sector);
        om * om - self.gamma * self.gamma
    }

    /// Minimal-Lindblad diffusion at these parameters.
    pub fn minimal_diffusion(&self) -> Result<DiffusionMatrix> {
        crate::dynamics_single::minimal_diffusion(self.m, self.gamma, self.k_t)
    }
}

/// Sector frequencies (Ω, Ω').
pub fn sector_frequencies(p: &CoupledParams) -> (f64, f64) {
    (p.omega_well, p.omega_prime())
}

/// The orthogonal involution to rotated coordinates, in (q1, p1, q2, p2)
/// ordering: Q1 = (q1+q2)/√2, P1 = (p1+p2)/√2, Q2 = (q1-q2)/√2,
/// P2 = (p1-p2)/√2.
pub fn rotation_matrix() -> Matrix4<f64> {
    let s = 1.0 / 2f64.sqrt();
    Matrix4::new(
        s, 0.0, s, 0.0, //
        0.0, s, 0.0, s, //
        s, 0.0, -s, 0.0, //
        0.0, s, 0.0, -s,
    )
}

/// Conjugates a two-mode covariance into (or back out of) the rotated
/// frame; involutive since R = Rᵀ = R⁻¹.
pub fn rotate_cov(sigma: &Matrix4<f64>) -> Matrix4<f64> {
    let r = rotation_matrix();
    r * sigma * r.transpose()
}

/// Rotates a mean vector between frames.
pub fn rotate_mean(mean: &Vector4<f64>) -> Vector4<f64> {
    rotation_matrix() * mean
}

/// Entries of a sector noise integral μ_t = [[A, B], [B, C]].
#[derive(Clone, Copy, Debug)]
pub struct SectorMu {
    pub t: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl SectorMu {
    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.a, self.b, self.b, self.c)
    }

    pub fn from_matrix(t: f64, m: &Matrix2<f64>) -> Self {
        SectorMu {
            t,
            a: m[(0, 0)],
            b: 0.5 * (m[(0, 1)] + m[(1, 0)]),
            c: m[(1, 1)],
        }
    }
}

/// Closed-form sector noise integral for the printed sector flow with
/// Fourier-side diffusion diag(d1, d2):
///
/// `μ_t = ∫_0^t E_τᵀ diag(d1, d2) E_τ dτ = [[A, B], [B, C]]`.
///
/// Valid for underdamped, critically damped, and overdamped sectors; small
/// α and small γ go through series branches. The published B drops the
/// decaying cosine integral; it is kept here, which is what the quadrature
/// oracle and the published asymptotic B itself require.
pub fn sector_mu_closed(
    t: f64,
    d1: f64,
    d2: f64,
    m: f64,
    gamma: f64,
    omega_sector: f64,
) -> Result<SectorMu> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if m <= 0.0 {
        return Err(Error::NonPositive("m", m));
    }
    Ok(SectorMu::from_matrix(
        t,
        &oscillator_mu(t, d1, d2, m, gamma, omega_sector, FlowVariant::PaperPrinted),
    ))
}

pub(crate) fn sector_mu_variant(
    t: f64,
    d1: f64,
    d2: f64,
    m: f64,
    gamma: f64,
    omega_sector: f64,
    variant: FlowVariant,
) -> Matrix2<f64> {
    oscillator_mu(t, d1, d2, m, gamma, omega_sector, variant)
}

/// Late-time limit of the sector noise integral (every e^{-2γt} dropped).
/// With `d` absent the minimal-Lindblad values are substituted, giving the
/// published kT forms, e.g. B -> γ/(16 kT) - kT γ / Ω².
pub fn sector_mu_asymptotic(
    p: &CoupledParams,
    sector: Sector,
    d: Option<&DiffusionMatrix>,
) -> Result<SectorMu> {
    if p.gamma <= 0.0 {
        return Err(Error::NonPositive("gamma", p.gamma));
    }
    let minimal;
    let d = match d {
        Some(d) => d,
        None => {
            minimal = p.minimal_diffusion()?;
            &minimal
        }
    };
    if d.d_qp != 0.0 {
        return Err(Error::OffDiagonalDiffusion(d.d_qp));
    }
    let (d1, d2) = (d.d_pp, d.d_qq);
    let (m, g) = (p.m, p.gamma);
    let om = p.sector_frequency(sector);
    let om2 = om * om;
    let a2 = om2 - g * g;
    if a2 == 0.0 {
        return Err(Error::Overdamped {
            omega: om,
            gamma: g,
        });
    }
    // I0 -> 1/2γ, Is -> α/2Ω², Ic -> γ/2Ω²; assembled per integrand channel
    let i0 = 1.0 / (2.0 * g);
    let js = 1.0 / (2.0 * om2); // ∫ e^{-2γτ} sin2ατ/α -> 1/(2Ω²)
    let jc = g / (2.0 * om2);
    let js2 = (i0 - jc) / (2.0 * a2);
    let half_sum = 0.5 * (i0 + jc);
    let a = d1 * (half_sum + g * js + g * g * js2) + d2 * m * m * om2 * om2 * js2;
    let b = -(d1 / m) * (0.5 * js + g * js2) + d2 * m * om2 * (0.5 * js + g * js2);
    let c = (d1 / (m * m)) * js2 + d2 * (half_sum + g * js + g * g * js2);
    Ok(SectorMu {
        t: f64::INFINITY,
        a,
        b,
        c,
    })
}

/// γ = 0 sector noise integral in the published form (B identically zero,
/// oscillatory parts carried at argument 2Ωt, which is what the quadrature
/// oracle fixes for A and C):
///
/// `A = (d_pp/2 + d_qq m²Ω²/2) t + (d_pp/2 - d_qq m²Ω²/2) sin(2Ωt)/(2Ω)`
/// `B = 0`
/// `C = (d_pp/(2m²Ω²) + d_qq/2) t + (d_qq/2 - d_pp/(2m²Ω²)) sin(2Ωt)/(2Ω)`
///
/// The exact B at γ = 0 oscillates with zero mean; the published form keeps
/// only the mean. A and C are exact.
pub fn sector_mu_gamma0(
    t: f64,
    d: &DiffusionMatrix,
    m: f64,
    omega_sector: f64,
) -> Result<SectorMu> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if m <= 0.0 {
        return Err(Error::NonPositive("m", m));
    }
    if d.d_qp != 0.0 {
        return Err(Error::OffDiagonalDiffusion(d.d_qp));
    }
    let om = omega_sector;
    let (d1, d2) = (d.d_pp, d.d_qq);
    if om == 0.0 {
        // free sector: sin(2Ωt)/(2Ω) -> t, both oscillatory weights collapse
        return Ok(SectorMu {
            t,
            a: d1 * t,
            b: 0.0,
            c: d2 * t + d1 * t * t * t / (3.0 * m * m),
        });
    }
    let osc = (2.0 * om * t).sin() / (2.0 * om);
    let a = 0.5 * (d1 + d2 * m * m * om * om) * t + 0.5 * (d1 - d2 * m * m * om * om) * osc;
    let c = 0.5 * (d1 / (m * m * om * om) + d2) * t + 0.5 * (d2 - d1 / (m * m * om * om)) * osc;
    Ok(SectorMu { t, a, b: 0.0, c })
}

/// Per-sector propagator bundle in the rotated frame.
#[derive(Clone, Copy, Debug)]
pub struct CoupledPropagator {
    pub t: f64,
    pub variant: FlowVariant,
    pub plus: Propagator,
    pub minus: Propagator,
}

fn block_diag(a: &Matrix2<f64>, b: &Matrix2<f64>) -> Matrix4<f64> {
    let mut out = Matrix4::zeros();
    out.fixed_view_mut::<2, 2>(0, 0).copy_from(a);
    out.fixed_view_mut::<2, 2>(2, 2).copy_from(b);
    out
}

impl CoupledPropagator {
    /// 4x4 noise kernel M_t in the rotated frame.
    pub fn m4_rotated(&self) -> Matrix4<f64> {
        block_diag(&self.plus.m_t, &self.minus.m_t)
    }

    /// 4x4 flow E_t (block diagonal over sectors).
    pub fn e4(&self) -> Matrix4<f64> {
        block_diag(&self.plus.e_t, &self.minus.e_t)
    }

    /// det of the 4x4 flow.
    pub fn det_e4(&self) -> f64 {
        self.plus.det_e * self.minus.det_e
    }
}

/// Builds both sector propagators at time t.
pub fn coupled_propagator(
    t: f64,
    p: &CoupledParams,
    d: &DiffusionMatrix,
    variant: FlowVariant,
) -> Result<CoupledPropagator> {
    if d.d_qp != 0.0 {
        return Err(Error::OffDiagonalDiffusion(d.d_qp));
    }
    let plus = Propagator::oscillator(
        t,
        p.m,
        p.gamma,
        p.sector_frequency(Sector::Plus),
        d,
        variant,
    )?;
    let minus = Propagator::oscillator(
        t,
        p.m,
        p.gamma,
        p.sector_frequency(Sector::Minus),
        d,
        variant,
    )?;
    Ok(CoupledPropagator {
        t,
        variant,
        plus,
        minus,
    })
}

/// Which frame a two-mode state is expressed in at the API boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Frame {
    /// Per-particle coordinates (q1, p1, q2, p2).
    Original,
    /// Sector coordinates (Q1, P1, Q2, P2).
    Rotated,
}

/// Evolves a two-mode Gaussian: per sector,
/// `Σ ↦ ε_{-t}⁻¹ Σ ε_{-t}⁻ᵀ + M_t` in the rotated frame, then converted
/// back to the input frame. Cross-sector covariance blocks transform by the
/// same block-diagonal conjugation.
pub fn evolve_covariance_4x4(
    state: &GaussianState2,
    t: f64,
    p: &CoupledParams,
    d: &DiffusionMatrix,
    variant: FlowVariant,
    frame: Frame,
) -> Result<GaussianState2> {
    let prop = coupled_propagator(t, p, d, variant)?;
    let (mean_rot, cov_rot) = match frame {
        Frame::Rotated => (state.mean, state.cov),
        Frame::Original => (rotate_mean(&state.mean), rotate_cov(&state.cov)),
    };
    let fwd4 = block_diag(
        &prop.plus.forward_transport()?,
        &prop.minus.forward_transport()?,
    );
    let mean_t = fwd4 * mean_rot;
    let cov_t = fwd4 * cov_rot * fwd4.transpose() + prop.m4_rotated();
    let (mean_out, cov_out) = match frame {
        Frame::Rotated => (mean_t, cov_t),
        Frame::Original => (rotate_mean(&mean_t), rotate_cov(&cov_t)),
    };
    Ok(GaussianState2::kernel(mean_out, cov_out))
}

/// Fixed-step 4th-order integration of the coupled moment equations in the
/// original frame: wells Ω on each particle, harmonic coupling ω between
/// them, damping 2γ, and identical single-particle diffusion.
pub fn moment_ode_oracle_coupled(
    state: &GaussianState2,
    p: &CoupledParams,
    d: &DiffusionMatrix,
    t: f64,
    steps: usize,
) -> GaussianState2 {
    let (m, g) = (p.m, p.gamma);
    let om2 = p.omega_well * p.omega_well;
    let oc2 = p.omega_c * p.omega_c;
    // q̇ = p/m; ṗ1 = -m(Ω²+ω²)q1 + mω² q2 - 2γ p1, and symmetrically
    let mut f = Matrix4::zeros();
    f[(0, 1)] = 1.0 / m;
    f[(2, 3)] = 1.0 / m;
    f[(1, 0)] = -m * (om2 + oc2);
    f[(1, 2)] = m * oc2;
    f[(1, 1)] = -2.0 * g;
    f[(3, 2)] = -m * (om2 + oc2);
    f[(3, 0)] = m * oc2;
    f[(3, 3)] = -2.0 * g;
    let mut two_d = Matrix4::zeros();
    for mode in [0, 2] {
        two_d[(mode, mode)] = 2.0 * d.d_qq;
        two_d[(mode, mode + 1)] = 2.0 * d.d_qp;
        two_d[(mode + 1, mode)] = 2.0 * d.d_qp;
        two_d[(mode + 1, mode + 1)] = 2.0 * d.d_pp;
    }
    let n = steps.max(1);
    let h = t / n as f64;
    let mut mean = state.mean;
    let mut cov = state.cov;
    let mean_rhs = |v: &Vector4<f64>| f * v;
    let cov_rhs = |c: &Matrix4<f64>| f * c + c * f.transpose() + two_d;
    for _ in 0..n {
        let k1m = mean_rhs(&mean);
        let k1c = cov_rhs(&cov);
        let k2m = mean_rhs(&(mean + k1m * (h / 2.0)));
        let k2c = cov_rhs(&(cov + k1c * (h / 2.0)));
        let k3m = mean_rhs(&(mean + k2m * (h / 2.0)));
        let k3c = cov_rhs(&(cov + k2c * (h / 2.0)));
        let k4m = mean_rhs(&(mean + k3m * h));
        let k4c = cov_rhs(&(cov + k3c * h));
        mean += (k1m + k2m * 2.0 + k3m * 2.0 + k4m) * (h / 6.0);
        cov += (k1c + k2c * 2.0 + k3c * 2.0 + k4c) * (h / 6.0);
    }
    GaussianState2::kernel(mean, cov)
}

/// Step-doubling wrapper around [`moment_ode_oracle_coupled`].
pub fn moment_ode_refined_coupled(
    state: &GaussianState2,
    p: &CoupledParams,
    d: &DiffusionMatrix,
    t: f64,
) -> Result<GaussianState2> {
    let mut steps = 256usize.max((t.abs() * 16.0) as usize);
    let mut prev = moment_ode_oracle_coupled(state, p, d, t, steps);
    loop {
        steps *= 2;
        if steps > 1 << 22 {
            return Err(Error::QuadratureDivergence);
        }
        let next = moment_ode_oracle_coupled(state, p, d, t, steps);
        let diff = (next.cov - prev.cov)
            .amax()
            .max((next.mean - prev.mean).amax());
        if diff <= 1e-10 * next.cov.amax().max(1.0) {
            return Ok(next);
        }
        prev = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics_single::{flow_oscillator_signed, mu_quadrature};
    use crate::phase_space::{is_wigner_cov_two_mode, GaussianState1};
    use crate::sampling;
    use approx::assert_relative_eq;
    use nalgebra::Vector2;
    use rand::SeedableRng;

    #[test]
    fn frequencies() {
        let p = CoupledParams::new(1.0, 0.0, 1.0, 0.5, 1.0).unwrap();
        let (om, omp) = sector_frequencies(&p);
        assert_eq!(om, 1.0);
        assert_relative_eq!(omp, 1.5f64.sqrt(), max_relative = 1e-15);

        let p0 = CoupledParams::new(1.0, 0.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(sector_frequencies(&p0), (1.0, 1.0));

        let pf = CoupledParams::new(1.0, 0.0, 0.0, 1.0, 1.0).unwrap();
        let (a, b) = sector_frequencies(&pf);
        assert_eq!(a, 0.0);
        assert_relative_eq!(b, 2f64.sqrt(), max_relative = 1e-15);

        // Ω'² - Ω² = 2ω² exactly
        for (ow, oc) in [(0.3, 0.9), (2.0, 0.1), (0.0, 1.4)] {
            let p = CoupledParams::new(1.0, 0.0, ow, oc, 1.0).unwrap();
            assert_relative_eq!(
                p.omega_prime().powi(2) - ow * ow,
                2.0 * oc * oc,
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn rotation_properties() {
        let r = rotation_matrix();
        assert_relative_eq!((r - r.transpose()).amax(), 0.0, epsilon = 1e-15);
        assert_relative_eq!((r * r - Matrix4::identity()).amax(), 0.0, epsilon = 1e-15);

        let vac = Matrix4::from_diagonal_element(0.5);
        assert_relative_eq!((rotate_cov(&vac) - vac).amax(), 0.0, epsilon = 1e-15);

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let s = sampling::random_wigner_cov_two_mode(&mut rng);
            let rr = rotate_cov(&rotate_cov(&s));
            assert!((rr - s).amax() <= 1e-12 * s.amax());
            assert!(is_wigner_cov_two_mode(&rotate_cov(&s)));
        }
    }

    #[test]
    fn epr_rotates_to_sector_blocks() {
        let s = sampling::two_mode_squeezed_cov(1.0);
        let rot = rotate_cov(&s);
        let e2 = (2.0f64).exp();
        assert_relative_eq!(rot[(0, 0)], e2 / 2.0, max_relative = 1e-12);
        assert_relative_eq!(rot[(1, 1)], 1.0 / (2.0 * e2), max_relative = 1e-12);
        assert_relative_eq!(rot[(2, 2)], 1.0 / (2.0 * e2), max_relative = 1e-12);
        assert_relative_eq!(rot[(3, 3)], e2 / 2.0, max_relative = 1e-12);
        assert!(rot.fixed_view::<2, 2>(0, 2).amax() < 1e-12);
    }

    #[test]
    fn sector_mu_matches_quadrature() {
        for (g, om, t) in [
            (0.05, 1.0, 7.0),
            (0.3, 1.2247, 4.0),
            (1.2, 1.0, 2.0),
            (0.5, 0.5, 3.0),
        ] {
            let (m, d1, d2) = (1.3, 0.7, 0.18);
            let d = DiffusionMatrix::new(d2, 0.0, d1);
            let mu = sector_mu_closed(t, d1, d2, m, g, om).unwrap();
            let q = mu_quadrature(
                t,
                &d,
                |tau| flow_oscillator_signed(tau, m, g, om, FlowVariant::PaperPrinted),
                8,
            )
            .unwrap();
            let scale = q.amax().max(1.0);
            assert!(
                (mu.matrix() - q).amax() <= 1e-8 * scale,
                "g={g} om={om} t={t}"
            );
        }
        let z = sector_mu_closed(0.0, 1.0, 0.2, 1.0, 0.3, 1.0).unwrap();
        assert_eq!((z.a, z.b, z.c), (0.0, 0.0, 0.0));
    }

    #[test]
    fn asymptotic_values_and_approach() {
        let p = CoupledParams::new(1.0, 0.05, 1.0, 0.0, 10.0).unwrap();
        let b = sector_mu_asymptotic(&p, Sector::Plus, None).unwrap().b;
        // B = γ (1/(16 kT) - kT/Ω²) = γ(1/160 - 10)
        assert_relative_eq!(b, 0.05 * (1.0 / 160.0 - 10.0), max_relative = 1e-12);

        // closed -> asymptotic as γt grows, error on the e^{-2γt} scale
        let d = p.minimal_diffusion().unwrap();
        let inf = sector_mu_asymptotic(&p, Sector::Plus, None).unwrap();
        for gt in [10.0, 20.0] {
            let t = gt / p.gamma;
            let now = sector_mu_closed(t, d.d_pp, d.d_qq, p.m, p.gamma, 1.0).unwrap();
            let bound = (-2.0 * gt).exp() * 1e4; // coefficient headroom at kT = 10
            assert!((now.a - inf.a).abs() <= bound, "A at γt={gt}");
            assert!((now.b - inf.b).abs() <= bound);
            assert!((now.c - inf.c).abs() <= bound);
        }

        // A positive across an underdamped sweep
        for g in [0.01, 0.1, 0.4] {
            for om in [0.5, 1.0, 2.0] {
                for kt in [1.0, 10.0, 100.0] {
                    let p = CoupledParams::new(1.0, g, om, 0.3, kt).unwrap();
                    if om > g {
                        let a = sector_mu_asymptotic(&p, Sector::Plus, None).unwrap().a;
                        assert!(a > 0.0, "A<=0 at g={g} om={om} kt={kt}");
                    }
                }
            }
        }
        assert!(sector_mu_asymptotic(
            &CoupledParams::new(1.0, 0.0, 1.0, 0.0, 1.0).unwrap(),
            Sector::Plus,
            None
        )
        .is_err());
    }

    #[test]
    fn gamma0_forms() {
        let d = DiffusionMatrix::new(0.3, 0.0, 0.9);
        let (m, om) = (1.2, 0.8);
        for t in [0.5, 2.0, 9.0] {
            let s = sector_mu_gamma0(t, &d, m, om).unwrap();
            assert_eq!(s.b, 0.0);
            let q = mu_quadrature(
                t,
                &d,
                |tau| flow_oscillator_signed(tau, m, 0.0, om, FlowVariant::PaperPrinted),
                8,
            )
            .unwrap();
            assert!(
                (s.a - q[(0, 0)]).abs() <= 1e-9 * q.amax().max(1.0),
                "A t={t}"
            );
            assert!(
                (s.c - q[(1, 1)]).abs() <= 1e-9 * q.amax().max(1.0),
                "C t={t}"
            );
        }
        // d_pp = d_qq m² Ω²: A exactly linear
        let om = 1.3;
        let balanced = DiffusionMatrix::new(0.9 / (om * om), 0.0, 0.9);
        let s1 = sector_mu_gamma0(1.0, &balanced, 1.0, om).unwrap();
        let s2 = sector_mu_gamma0(2.0, &balanced, 1.0, om).unwrap();
        assert_relative_eq!(s2.a, 2.0 * s1.a, max_relative = 1e-12);
        // closed-form γ -> 0 limit agrees with the γ = 0 forms for A and C
        let slim = sector_mu_closed(2.0, 0.9, 0.3, 1.2, 1e-13, 0.8).unwrap();
        let s0 = sector_mu_gamma0(2.0, &DiffusionMatrix::new(0.3, 0.0, 0.9), 1.2, 0.8).unwrap();
        assert_relative_eq!(slim.a, s0.a, max_relative = 1e-9);
        assert_relative_eq!(slim.c, s0.c, max_relative = 1e-9);
    }

    #[test]
    fn coupled_propagator_blocks() {
        let p = CoupledParams::new(1.0, 0.1, 1.0, 0.0, 5.0).unwrap();
        let d = p.minimal_diffusion().unwrap();
        let cp = coupled_propagator(2.0, &p, &d, FlowVariant::PaperPrinted).unwrap();
        // ω = 0: both sectors identical
        assert_relative_eq!((cp.plus.e_t - cp.minus.e_t).amax(), 0.0, epsilon = 1e-14);
        assert_relative_eq!((cp.plus.m_t - cp.minus.m_t).amax(), 0.0, epsilon = 1e-14);

        let cp0 = coupled_propagator(0.0, &p, &d, FlowVariant::PaperPrinted).unwrap();
        assert_relative_eq!(
            (cp0.e4() - Matrix4::identity()).amax(),
            0.0,
            epsilon = 1e-14
        );
        assert_relative_eq!(cp0.m4_rotated().amax(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn four_by_four_matches_sector_blocks() {
        let p = CoupledParams::new(1.0, 0.08, 1.0, 0.5, 20.0).unwrap();
        let d = p.minimal_diffusion().unwrap();
        let t = 3.0;
        // sector-block-diagonal input stays block diagonal and each block
        // evolves as the corresponding single-sector propagation
        let bp = Matrix2::new(0.8, 0.1, 0.1, 0.9);
        let bm = Matrix2::new(1.4, -0.2, -0.2, 0.6);
        let mut cov = Matrix4::zeros();
        cov.fixed_view_mut::<2, 2>(0, 0).copy_from(&bp);
        cov.fixed_view_mut::<2, 2>(2, 2).copy_from(&bm);
        let state = GaussianState2::kernel(Vector4::zeros(), cov);
        let out =
            evolve_covariance_4x4(&state, t, &p, &d, FlowVariant::PaperPrinted, Frame::Rotated)
                .unwrap();
        assert!(out.cov.fixed_view::<2, 2>(0, 2).amax() < 1e-12);

        for (sector, block) in [(Sector::Plus, bp), (Sector::Minus, bm)] {
            let prop = Propagator::oscillator(
                t,
                p.m,
                p.gamma,
                p.sector_frequency(sector),
                &d,
                FlowVariant::PaperPrinted,
            )
            .unwrap();
            let single = crate::dynamics_single::propagate_gaussian(
                &GaussianState1::kernel(Vector2::zeros(), block),
                &prop,
            )
            .unwrap();
            let view = match sector {
                Sector::Plus => out.cov.fixed_view::<2, 2>(0, 0).into_owned(),
                Sector::Minus => out.cov.fixed_view::<2, 2>(2, 2).into_owned(),
            };
            assert!((view - single.cov).amax() <= 1e-12 * single.cov.amax().max(1.0));
        }
    }

    #[test]
    fn ode_variant_matches_coupled_moment_oracle() {
        let p = CoupledParams::new(1.0, 0.15, 1.1, 0.4, 3.0).unwrap();
        let d = p.minimal_diffusion().unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let cov = sampling::random_wigner_cov_two_mode(&mut rng);
            let state = GaussianState2::physical(Vector4::new(0.4, -0.2, 1.0, 0.3), cov).unwrap();
            for t in [0.7, 4.0] {
                let got = evolve_covariance_4x4(
                    &state,
                    t,
                    &p,
                    &d,
                    FlowVariant::OdeConsistent,
                    Frame::Original,
                )
                .unwrap();
                let want = moment_ode_refined_coupled(&state, &p, &d, t).unwrap();
                let scale = want.cov.amax().max(1.0);
                assert!((got.cov - want.cov).amax() <= 1e-8 * scale, "cov t={t}");
                assert!((got.mean - want.mean).amax() <= 1e-8, "mean t={t}");
            }
        }
    }

    #[test]
    fn evolve_is_identity_at_zero_time() {
        let p = CoupledParams::new(1.0, 0.2, 1.0, 0.3, 5.0).unwrap();
        let d = p.minimal_diffusion().unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let vac = GaussianState2::vacuum();
        for frame in [Frame::Original, Frame::Rotated] {
            for variant in [FlowVariant::PaperPrinted, FlowVariant::OdeConsistent] {
                let out = evolve_covariance_4x4(&vac, 0.0, &p, &d, variant, frame).unwrap();
                assert_relative_eq!((out.cov - vac.cov).amax(), 0.0, epsilon = 1e-14);
                let cov = sampling::random_wigner_cov_two_mode(&mut rng);
                let state =
                    GaussianState2::physical(Vector4::new(0.1, -0.4, 0.9, 0.2), cov).unwrap();
                let out = evolve_covariance_4x4(&state, 0.0, &p, &d, variant, frame).unwrap();
                assert!((out.cov - state.cov).amax() <= 1e-13 * state.cov.amax());
                assert!((out.mean - state.mean).amax() <= 1e-13);
            }
        }
    }

    #[test]
    fn uncoupled_pair_reduces_to_single_particle() {
        // ω_c = 0 with a factored state: each mode evolves by the
        // single-particle oscillator dynamics
        let p = CoupledParams::new(1.0, 0.2, 0.9, 0.0, 4.0).unwrap();
        let d = p.minimal_diffusion().unwrap();
        let s1 = Matrix2::new(0.7, 0.1, 0.1, 0.9);
        let s2 = Matrix2::new(1.1, -0.15, -0.15, 0.5);
        let mut cov = Matrix4::zeros();
        cov.fixed_view_mut::<2, 2>(0, 0).copy_from(&s1);
        cov.fixed_view_mut::<2, 2>(2, 2).copy_from(&s2);
        let state = GaussianState2::kernel(Vector4::new(1.0, 0.0, -0.5, 0.2), cov);
        let t = 2.5;
        for variant in [FlowVariant::PaperPrinted, FlowVariant::OdeConsistent] {
            let pair = evolve_covariance_4x4(&state, t, &p, &d, variant, Frame::Original).unwrap();
            let prop = Propagator::oscillator(t, 1.0, 0.2, 0.9, &d, variant).unwrap();
            for (mode, block) in [(0usize, s1), (2usize, s2)] {
                let mean = Vector2::new(state.mean[mode], state.mean[mode + 1]);
                let single = crate::dynamics_single::propagate_gaussian(
                    &GaussianState1::kernel(mean, block),
                    &prop,
                )
                .unwrap();
                let got = match mode {
                    0 => pair.cov.fixed_view::<2, 2>(0, 0).into_owned(),
                    _ => pair.cov.fixed_view::<2, 2>(2, 2).into_owned(),
                };
                assert!(
                    (got - single.cov).amax() <= 1e-10 * single.cov.amax().max(1.0),
                    "variant={variant:?} mode={mode}"
                );
            }
        }
    }
}
