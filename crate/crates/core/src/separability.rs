//! Separability machinery: the Duan variance criterion, the Simon PPT
//! oracle, the smearing choice C0, the per-sector Wigner condition, the
//! late-time criterion value, and the end-to-end finite-time certification
//! pipeline.
//!
//! The pipeline splits the Gaussian propagator into a smearing factor g_C,
//! chosen so that g_C ∗ (flowed initial state) is a genuine Wigner function,
//! and a leftover Gaussian kernel. If the leftover kernel is itself a
//! separable Wigner function, every initial two-mode state — Gaussian or
//! not — has separated by that time.

use nalgebra::{Matrix2, Matrix4};

use crate::dynamics_coupled::{
    sector_mu_asymptotic, sector_mu_variant, CoupledParams, Sector, SectorMu,
};
use crate::dynamics_single::{DiffusionMatrix, FlowVariant};
use crate::phase_space::{is_psd2, symplectic_eigenvalues, PSD_TOL};
use crate::{Error, Result};

/// Per-sector smearing matrix η C0 ηᵀ with det = 1/4 (just positive enough
/// that g with this covariance is a Wigner function).
#[derive(Clone, Copy, Debug)]
pub struct SmearingChoice {
    mat: Matrix2<f64>,
}

impl SmearingChoice {
    /// The published choice [[m sqrt(γkT), 1/2], [1/2, 1/(2m sqrt(γkT))]].
    pub fn paper_default(m: f64, gamma: f64, k_t: f64) -> Result<Self> {
        if m <= 0.0 {
            return Err(Error::NonPositive("m", m));
        }
        if gamma <= 0.0 {
            return Err(Error::NonPositive("gamma", gamma));
        }
        if k_t <= 0.0 {
            return Err(Error::NonPositive("kT", k_t));
        }
        let s = m * (gamma * k_t).sqrt();
        Ok(Self {
            mat: Matrix2::new(s, 0.5, 0.5, 1.0 / (2.0 * s)),
        })
    }

    /// Vacuum-isotropic diag(1/2, 1/2); the γ = 0 replacement.
    pub fn vacuum_isotropic() -> Self {
        Self {
            mat: Matrix2::from_diagonal_element(0.5),
        }
    }

    /// A caller-supplied matrix; must be PSD with det = 1/4.
    pub fn custom(mat: Matrix2<f64>) -> Result<Self> {
        let sym = (mat + mat.transpose()) * 0.5;
        if (sym.determinant() - 0.25).abs() > 1e-10 * sym.amax().max(1.0).powi(2) {
            return Err(Error::SmearingInvalid(sym.determinant()));
        }
        if !is_psd2(&sym) {
            return Err(Error::SmearingInvalid(sym.determinant()));
        }
        Ok(Self { mat: sym })
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        self.mat
    }
}

/// The published smearing for the given parameters; γ = 0 has no default
/// and must be supplied explicitly.
pub fn choose_c0(p: &CoupledParams) -> Result<SmearingChoice> {
    SmearingChoice::paper_default(p.m, p.gamma, p.k_t)
}

/// The two Duan sums of a rotated-frame covariance (Q1, P1, Q2, P2):
/// (Σ11 + Σ44, Σ22 + Σ33).
pub fn duan_sums(sigma: &Matrix4<f64>) -> (f64, f64) {
    (sigma[(0, 0)] + sigma[(3, 3)], sigma[(1, 1)] + sigma[(2, 2)])
}

/// Duan variance criterion in the rotated frame: both sums >= 1.
///
/// Necessary for separability of any state; sufficient for the symmetric
/// sector-block-diagonal Gaussians this pipeline produces (the Simon PPT
/// oracle guards that use).
pub fn duan_separable(sigma: &Matrix4<f64>) -> bool {
    let (s1, s2) = duan_sums(sigma);
    let tol = PSD_TOL * sigma.amax().max(1.0);
    s1 >= 1.0 - tol && s2 >= 1.0 - tol
}

/// Which mode the partial transpose acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransposedMode {
    First,
    Second,
}

/// Simon PPT test, exact for two-mode Gaussian states: momentum sign flip
/// on one mode, then the smaller symplectic eigenvalue ν̃ of the partially
/// transposed covariance decides. Separable iff ν̃ >= 1/2.
///
/// Returns (separable, ν̃). The verdict is computed from the polynomial
/// conditions det Σ̃ - Δ̃/4 + 1/16 >= 0 and Δ̃ >= 1/2, which stay accurate
/// at degenerate eigenvalues where ν̃ itself loses half its digits.
pub fn simon_ppt_separable(sigma: &Matrix4<f64>, split: TransposedMode) -> Result<(bool, f64)> {
    if !crate::phase_space::is_wigner_cov_two_mode(sigma) {
        return Err(Error::WignerInvalid);
    }
    let idx = match split {
        TransposedMode::First => 1,
        TransposedMode::Second => 3,
    };
    let mut lambda = Matrix4::identity();
    lambda[(idx, idx)] = -1.0;
    let tilde = lambda * sigma * lambda;
    let (_, nu_min) = symplectic_eigenvalues(&tilde);
    let a = tilde.fixed_view::<2, 2>(0, 0).into_owned();
    let b = tilde.fixed_view::<2, 2>(2, 2).into_owned();
    let c = tilde.fixed_view::<2, 2>(0, 2).into_owned();
    let delta = a.determinant() + b.determinant() + 2.0 * c.determinant();
    let det = tilde.determinant();
    let scale = tilde.amax().max(1.0);
    let separable = det - 0.25 * delta + 1.0 / 16.0 >= -PSD_TOL * scale.powi(4)
        && delta >= 0.5 - PSD_TOL * scale * scale;
    Ok((separable, nu_min))
}

/// Per-sector Wigner condition on the smeared kernel:
/// value = e^{4γt} det(2μ_t - ηC0ηᵀ) - 1/4, holding when the value is
/// nonnegative and 2μ_t - ηC0ηᵀ is PSD.
pub fn wigner_condition_sector(
    t: f64,
    sector_mu: &SectorMu,
    c0: &SmearingChoice,
    gamma: f64,
) -> (f64, bool) {
    let n = sector_mu.matrix() * 2.0 - c0.matrix();
    let value = (4.0 * gamma * t).exp() * n.determinant() - 0.25;
    (value, value >= 0.0 && is_psd2(&n))
}

/// Late-time criterion value: det(2μ_∞ - ηC0ηᵀ) with the minimal-Lindblad
/// asymptotic sector noise. Positive values mean the sector Wigner
/// condition becomes (and stays) satisfied on a timescale set by γ.
pub fn crit_asymptotic(p: &CoupledParams, sector: Sector) -> Result<f64> {
    let om = p.sector_frequency(sector);
    if om <= p.gamma {
        return Err(Error::Overdamped {
            omega: om,
            gamma: p.gamma,
        });
    }
    let mu = sector_mu_asymptotic(p, sector, None)?;
    let c0 = choose_c0(p)?;
    let n = mu.matrix() * 2.0 - c0.matrix();
    Ok(n.determinant())
}

/// The dominant late-time criterion term at high temperature,
/// (t_osc/t_dec)^4 [ (Ω⁴ + 3γ²Ω² - 4γ⁴) / (γ²(Ω² - γ²)) - 4 ],
/// with t_dec = 1/sqrt(γ kT) and t_osc = 1/Ω_sector.
pub fn high_temp_dominant_term(p: &CoupledParams, sector: Sector) -> Result<f64> {
    let om = p.sector_frequency(sector);
    let g = p.gamma;
    if om <= g {
        return Err(Error::Overdamped {
            omega: om,
            gamma: g,
        });
    }
    if g <= 0.0 {
        return Err(Error::NonPositive("gamma", g));
    }
    let om2 = om * om;
    let bracket = (om2 * om2 + 3.0 * g * g * om2 - 4.0 * g.powi(4)) / (g * g * (om2 - g * g)) - 4.0;
    let ratio4 = (p.k_t * g / om2).powi(2);
    Ok(ratio4 * bracket)
}

/// The two trace-formula expectations of one sector,
/// `tr(E_{-t}ᵀ m_{1,2} E_{-t} (2μ_t - ηC0ηᵀ))` with m1 = diag(1, 0) and
/// m2 = diag(0, 1); `c0 = None` means no smearing is subtracted.
///
/// The first feeds <Q²> of this sector, the second <P²>; the Duan sums of
/// the smeared kernel combine the m1 term of one sector with the m2 term of
/// the other.
pub fn duan_expectations(
    t: f64,
    sector_mu: &SectorMu,
    c0: Option<&SmearingChoice>,
    m: f64,
    gamma: f64,
    omega_sector: f64,
    variant: FlowVariant,
) -> (f64, f64) {
    let n = sector_mu.matrix() * 2.0 - c0.map_or(Matrix2::zeros(), |c| c.matrix());
    let e_minus =
        crate::dynamics_single::flow_oscillator_signed(-t, m, gamma, omega_sector, variant);
    let m1 = Matrix2::new(1.0, 0.0, 0.0, 0.0);
    let m2 = Matrix2::new(0.0, 0.0, 0.0, 1.0);
    let term = |msel: &Matrix2<f64>| (e_minus.transpose() * msel * e_minus * n).trace();
    (term(&m1), term(&m2))
}

/// Everything the pipeline checks at one time.
#[derive(Clone, Copy, Debug)]
pub struct SeparabilityReport {
    pub t: f64,
    /// Per-sector e^{4γt} det(2μ_t - ηC0ηᵀ) - 1/4, [plus, minus].
    pub wigner_value: [f64; 2],
    /// Per-sector PSD flag of 2μ_t - ηC0ηᵀ.
    pub wigner_psd: [bool; 2],
    /// <Q1² + P2²> of the smeared kernel.
    pub duan_sum_1: f64,
    /// <P1² + Q2²> of the smeared kernel.
    pub duan_sum_2: f64,
    pub certified: bool,
}

fn smearing_for(p: &CoupledParams) -> Result<SmearingChoice> {
    if p.gamma > 0.0 {
        choose_c0(p)
    } else {
        Ok(SmearingChoice::vacuum_isotropic())
    }
}

/// Runs both sector Wigner conditions and the Duan sums of the smeared
/// kernel at time t; certified means all four hold, which implies every
/// initial two-mode state has separated by then.
pub fn certify_at_time(
    t: f64,
    p: &CoupledParams,
    d: &DiffusionMatrix,
    variant: FlowVariant,
) -> Result<SeparabilityReport> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if d.d_qp != 0.0 {
        return Err(Error::OffDiagonalDiffusion(d.d_qp));
    }
    let c0 = smearing_for(p)?;
    let mut wigner_value = [0.0; 2];
    let mut wigner_psd = [false; 2];
    let mut holds = [false; 2];
    let mut q_terms = [0.0; 2];
    let mut p_terms = [0.0; 2];
    for (i, sector) in Sector::BOTH.iter().enumerate() {
        let om = p.sector_frequency(*sector);
        let mu = SectorMu::from_matrix(
            t,
            &sector_mu_variant(t, d.d_pp, d.d_qq, p.m, p.gamma, om, variant),
        );
        let (value, h) = wigner_condition_sector(t, &mu, &c0, p.gamma);
        let nmat = mu.matrix() * 2.0 - c0.matrix();
        wigner_value[i] = value;
        wigner_psd[i] = is_psd2(&nmat);
        holds[i] = h;
        let (tq, tp) = duan_expectations(t, &mu, Some(&c0), p.m, p.gamma, om, variant);
        q_terms[i] = tq;
        p_terms[i] = tp;
    }
    let duan_sum_1 = q_terms[0] + p_terms[1];
    let duan_sum_2 = p_terms[0] + q_terms[1];
    let tol = 1e-12;
    let certified = holds[0] && holds[1] && duan_sum_1 >= 1.0 - tol && duan_sum_2 >= 1.0 - tol;
    Ok(SeparabilityReport {
        t,
        wigner_value,
        wigner_psd,
        duan_sum_1,
        duan_sum_2,
        certified,
    })
}

/// Earliest sampled time t_c such that certification holds at every sample
/// of [t_c, t_max]; sampling resolves the fastest sector oscillation with
/// at least 40 points per period and uses at least 1000 points overall.
pub fn certification_onset(
    p: &CoupledParams,
    d: &DiffusionMatrix,
    t_max: f64,
    variant: FlowVariant,
) -> Result<Option<f64>> {
    if t_max <= 0.0 {
        return Err(Error::NonPositive("t_max", t_max));
    }
    let alpha_max = Sector::BOTH
        .iter()
        .map(|&s| p.alpha_sq(s).max(0.0).sqrt())
        .fold(0.0f64, f64::max);
    let by_period = (40.0 * t_max * alpha_max / (2.0 * std::f64::consts::PI)).ceil() as usize;
    let n = by_period.max(1000);
    let mut first_bad_suffix = None; // index of last uncertified sample
    for i in (1..=n).rev() {
        let t = t_max * i as f64 / n as f64;
        let report = certify_at_time(t, p, d, variant)?;
        if !report.certified {
            first_bad_suffix = Some(i);
            break;
        }
    }
    match first_bad_suffix {
        None => Ok(Some(t_max / n as f64)),
        Some(i) if i == n => Ok(None),
        Some(i) => Ok(Some(t_max * (i + 1) as f64 / n as f64)),
    }
}
