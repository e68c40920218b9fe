//! Complete-disentanglement criterion for the free damped particle:
//! criterion evaluation, crossing-time solvers, long-time asymptotics, and
//! the dimensionless high-temperature reduction.
//!
//! The evolved P function is nonnegative once g(M_t - C_{1/4}) is itself a
//! Wigner function, i.e. once M_t - C_{1/4} is positive semidefinite with
//! determinant >= 1/4. From that time on the channel output is a mixture of
//! (squeezed) coherent-state projectors, which breaks entanglement with any
//! ancilla.

use crate::dynamics_single::{mu_closed_free, DiffusionMatrix, FlowVariant, SystemParams};
use crate::phase_space::{eta_conj, is_psd2, p_offset_c14};
use crate::{Error, Result};

/// Decoherence clock for the minimal-Lindblad model: t0 = 1/sqrt(γ kT),
/// with the dimensionless damping γ t0 = sqrt(γ/kT).
#[derive(Clone, Copy, Debug)]
pub struct Timescales {
    pub t0: f64,
    pub gamma_t0: f64,
}

impl Timescales {
    pub fn new(gamma: f64, k_t: f64) -> Result<Self> {
        if gamma <= 0.0 {
            return Err(Error::NonPositive("gamma", gamma));
        }
        if k_t <= 0.0 {
            return Err(Error::NonPositive("kT", k_t));
        }
        Ok(Self {
            t0: 1.0 / (gamma * k_t).sqrt(),
            gamma_t0: (gamma / k_t).sqrt(),
        })
    }

    /// t as a fraction of the decoherence time.
    pub fn tau(&self, t: f64) -> f64 {
        t / self.t0
    }
}

/// Sampled criterion history with the located crossing, if any.
#[derive(Clone, Debug)]
pub struct CriterionTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub psd_flags: Vec<bool>,
    pub satisfied: Vec<bool>,
    pub crossing: Option<f64>,
}

fn check_free(params: &SystemParams) -> Result<()> {
    if params.omega != 0.0 {
        return Err(Error::NonFreeParams(params.omega));
    }
    Ok(())
}

/// det(M_t - C_{1/4}) - 1/4 together with the full verdict
/// (PSD of M_t - C_{1/4} and determinant condition both required).
pub fn diosi_criterion(
    t: f64,
    params: &SystemParams,
    d: &DiffusionMatrix,
    variant: FlowVariant,
) -> Result<(f64, bool)> {
    check_free(params)?;
    if d.d_pp <= 0.0 {
        return Err(Error::NonPositive("d_pp", d.d_pp));
    }
    let m_t = match variant {
        FlowVariant::PaperPrinted => mu_closed_free(t, d, params.m, params.gamma)?,
        FlowVariant::OdeConsistent => {
            let mu = crate::dynamics_single::free_mu(t, d, params.m, params.gamma, variant);
            eta_conj(&mu) * 2.0
        }
    };
    let a = m_t - p_offset_c14(params.m, d.d_pp)?;
    let value = a.determinant() - 0.25;
    let satisfied = is_psd2(&a) && value >= 0.0;
    Ok((value, satisfied))
}

/// Samples the criterion on `samples` uniform points of (0, t_max] and
/// bisects the first onset of the full verdict.
pub fn criterion_trace(
    params: &SystemParams,
    d: &DiffusionMatrix,
    variant: FlowVariant,
    t_max: f64,
    samples: usize,
) -> Result<CriterionTrace> {
    check_free(params)?;
    if t_max <= 0.0 {
        return Err(Error::NonPositive("t_max", t_max));
    }
    let n = samples.max(2);
    let mut times = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    let mut psd_flags = Vec::with_capacity(n);
    let mut satisfied = Vec::with_capacity(n);
    for i in 1..=n {
        let t = t_max * i as f64 / n as f64;
        let (v, s) = diosi_criterion(t, params, d, variant)?;
        let a = match variant {
            FlowVariant::PaperPrinted => mu_closed_free(t, d, params.m, params.gamma)?,
            FlowVariant::OdeConsistent => {
                eta_conj(&crate::dynamics_single::free_mu(
                    t,
                    d,
                    params.m,
                    params.gamma,
                    variant,
                )) * 2.0
            }
        } - p_offset_c14(params.m, d.d_pp)?;
        times.push(t);
        values.push(v);
        psd_flags.push(is_psd2(&a));
        satisfied.push(s);
    }
    let crossing = locate_onset(params, d, variant, &times, &satisfied)?;
    Ok(CriterionTrace {
        times,
        values,
        psd_flags,
        satisfied,
        crossing,
    })
}

fn locate_onset(
    params: &SystemParams,
    d: &DiffusionMatrix,
    variant: FlowVariant,
    times: &[f64],
    satisfied: &[bool],
) -> Result<Option<f64>> {
    let hit = match satisfied.iter().position(|&s| s) {
        Some(i) => i,
        None => return Ok(None),
    };
    let mut hi = times[hit];
    let mut lo = if hit == 0 { 0.0 } else { times[hit - 1] };
    // bisection on the boolean verdict to relative tolerance 1e-10
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        let (_, sat) = diosi_criterion(mid, params, d, variant)?;
        if sat {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// First time in (0, t_max] at which the criterion is fully satisfied,
/// scanned on >= 1000 uniform samples and bisected to 1e-10 relative.
/// `None` means "not disentangled by t_max".
pub fn disentanglement_time(
    params: &SystemParams,
    d: &DiffusionMatrix,
    variant: FlowVariant,
    t_max: f64,
) -> Result<Option<f64>> {
    check_free(params)?;
    if d.is_zero() {
        return Ok(None);
    }
    let n = 1000;
    let mut prev_t = 0.0;
    for i in 1..=n {
        let t = t_max * i as f64 / n as f64;
        let (_, sat) = diosi_criterion(t, params, d, variant)?;
        if sat {
            let mut lo = prev_t;
            let mut hi = t;
            while hi - lo > 1e-10 * hi {
                let mid = 0.5 * (lo + hi);
                let (_, s) = diosi_criterion(mid, params, d, variant)?;
                if s {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(Some(hi));
        }
        prev_t = t;
    }
    Ok(None)
}

/// A generous default scan horizon: 1000 x the largest relevant timescale.
pub fn default_t_max(params: &SystemParams, d: &DiffusionMatrix) -> f64 {
    let mut scale: f64 = 1.0;
    if params.gamma > 0.0 {
        scale = scale.max(1.0 / params.gamma);
        if params.k_t > 0.0 {
            scale = scale.max(1.0 / (params.gamma * params.k_t).sqrt());
        }
    }
    if d.d_pp > 0.0 {
        scale = scale.max((params.m / (2.0 * d.d_pp)).sqrt());
    }
    1e3 * scale
}

/// Long-time determinant 4 det(D) t².
pub fn asymptotic_det(t: f64, d: &DiffusionMatrix) -> f64 {
    4.0 * d.det() * t * t
}

/// The undamped pure-momentum-diffusion disentanglement timescale,
/// 1.97 sqrt(m / (2 d_pp)).
pub fn kiefer_time(m: f64, d_pp: f64) -> Result<f64> {
    if m <= 0.0 {
        return Err(Error::NonPositive("m", m));
    }
    if d_pp <= 0.0 {
        return Err(Error::NonPositive("d_pp", d_pp));
    }
    Ok(1.97 * (m / (2.0 * d_pp)).sqrt())
}

/// Φ and Θ of the dimensionless reduced criterion, in the form consistent
/// with the noise-kernel integrals:
///
/// `Φ = 4(γt0)τ + 4e^{-2γt0τ} - e^{-4γt0τ} - 3`
/// `Θ = 2(γt0)τ + e^{-2γt0τ} - 1`
///
/// These are exactly the exponential combinations appearing in M_t, so the
/// reduced criterion built from them reproduces det(M_t - C_{1/4}) - 1/4
/// identically. Their published counterpart differs in Φ's third exponent;
/// see [`phi_theta_printed`].
pub fn phi_theta(tau: f64, gamma_t0: f64) -> (f64, f64) {
    let x = gamma_t0 * tau;
    // Φ = 2y + 4e^{-y} - e^{-2y} - 3 with y = 2x, = 2 y³ χ(y)
    let y = 2.0 * x;
    let phi = 2.0 * y.powi(3) * crate::numerics::chi(y);
    let theta = y * y * crate::numerics::psi(y);
    (phi, theta)
}

/// Φ and Θ with Φ's third term kept as published (e^{-γt0τ}):
///
/// `Φ = 4(γt0)τ + 4e^{-2γt0τ} - e^{-γt0τ} - 3`
///
/// Unlike [`phi_theta`], this Φ expands as -3(γt0)τ + O((γt0)²), which is
/// what produces the τ* = 1/4 - (25/48)(γt0)² series.
pub fn phi_theta_printed(tau: f64, gamma_t0: f64) -> (f64, f64) {
    let x = gamma_t0 * tau;
    let phi = if x.abs() >= 0.25 {
        4.0 * x + 4.0 * (-2.0 * x).exp() - (-x).exp() - 3.0
    } else {
        // 4x + sum_{k>=1} (4(-2)^k - (-1)^k) x^k / k!
        let mut sum = 4.0 * x;
        let mut fact = 1.0;
        let mut pow2 = -2.0;
        let mut sign = -1.0;
        let mut xp = x;
        for k in 1..=18u32 {
            if k > 1 {
                fact *= f64::from(k);
                pow2 *= -2.0;
                sign = -sign;
                xp *= x;
            }
            sum += (4.0 * pow2 - sign) / fact * xp;
        }
        sum
    };
    let y = 2.0 * x;
    let theta = y * y * crate::numerics::psi(y);
    (phi, theta)
}

/// Which Φ enters the reduced criterion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReducedForm {
    /// Exponents matching the noise-kernel integrals (e^{-4γt0τ} third term).
    KernelConsistent,
    /// Exponents exactly as published (e^{-γt0τ} third term).
    Printed,
}

/// The dimensionless reduced criterion
///
/// `Φ(4τ-1)/(4(γt0)³) - (2 + (γt0)²/4)τ + (γt0)²τ² - Θ²/(γt0)⁴ + Θ/(γt0)²`
///
/// which is >= 0 exactly when the minimal-Lindblad criterion at m = 1 holds
/// (for the kernel-consistent Φ).
pub fn reduced_criterion(tau: f64, gamma_t0: f64, form: ReducedForm) -> f64 {
    let g = gamma_t0;
    let phi = match form {
        ReducedForm::KernelConsistent => phi_theta(tau, g).0,
        ReducedForm::Printed => phi_theta_printed(tau, g).0,
    };
    // Θ/g² = 4τ² ψ(2gτ), exact at small arguments
    let theta_over_g2 = 4.0 * tau * tau * crate::numerics::psi(2.0 * g * tau);
    let phi_term = phi / (4.0 * g.powi(3)) * (4.0 * tau - 1.0);
    phi_term - (2.0 + g * g / 4.0) * tau + g * g * tau * tau - theta_over_g2 * theta_over_g2
        + theta_over_g2
}

/// τ* to second order in γt0: 1/4 - (25/48)(γt0)².
pub fn tau_star_series(gamma_t0: f64) -> f64 {
    0.25 - 25.0 / 48.0 * gamma_t0 * gamma_t0
}

/// Numerical τ*: the boundary of the published reduced criterion, found by
/// scanning τ ∈ (0, 1] for the downward sign change and bisecting to 1e-12.
///
/// The printed criterion holds on a leading interval (0, τ*] whose right
/// endpoint carries the series expansion 1/4 - (25/48)(γt0)²; this root is
/// what the numerical column of a τ* scan reports.
pub fn tau_star_numeric(gamma_t0: f64) -> Result<f64> {
    if gamma_t0 <= 0.0 {
        return Err(Error::NonPositive("gamma_t0", gamma_t0));
    }
    let f = |tau: f64| reduced_criterion(tau, gamma_t0, ReducedForm::Printed);
    let n = 4000;
    let mut prev_tau = 1e-9;
    let mut prev_v = f(prev_tau);
    for i in 1..=n {
        let tau = i as f64 / n as f64;
        let v = f(tau);
        if prev_v > 0.0 && v <= 0.0 {
            let (mut lo, mut hi) = (prev_tau, tau);
            while hi - lo > 1e-12 {
                let mid = 0.5 * (lo + hi);
                if f(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        prev_tau = tau;
        prev_v = v;
    }
    Err(Error::NoCrossing)
}
