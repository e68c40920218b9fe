//! Stable evaluation of the exponential-damped integrals the closed-form
//! noise kernels are built from.
//!
//! Everything here is a function of `gamma * t` or `alpha^2 * t^2` with
//! removable singularities at zero; each evaluator switches to a truncated
//! series before cancellation in the direct formula costs more digits than
//! the truncation does.

/// (e^x - 1)/x, continuous at 0.
pub(crate) fn phi1(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.exp_m1() / x
    }
}

/// (2x + 4e^{-x} - e^{-2x} - 3) / (2 x^3), continuous at 0 with value 1/3.
///
/// `∫_0^t h_τ^2 dτ = t^3 χ(2γt)` for `h_τ = (1 - e^{-2γτ})/(2γ)`.
pub(crate) fn chi(x: f64) -> f64 {
    if x.abs() >= 0.25 {
        return (2.0 * x + 4.0 * (-x).exp() - (-2.0 * x).exp() - 3.0) / (2.0 * x.powi(3));
    }
    // sum_{k>=3} (-1)^k (4 - 2^k)/k! x^{k-3}, halved
    let mut sum = 0.0;
    let mut fact = 6.0; // 3!
    let mut pow2 = 8.0; // 2^3
    let mut sign = -1.0; // (-1)^3
    let mut xp = 1.0; // x^{k-3}
    for k in 3..=18u32 {
        if k > 3 {
            fact *= f64::from(k);
            pow2 *= 2.0;
            sign = -sign;
            xp *= x;
        }
        sum += sign * (4.0 - pow2) / fact * xp;
    }
    sum / 2.0
}

/// (e^{-x} - 1 + x) / x^2, continuous at 0 with value 1/2.
///
/// `∫_0^t h_τ dτ = t^2 ψ(2γt)`.
pub(crate) fn psi(x: f64) -> f64 {
    if x.abs() >= 0.25 {
        return ((-x).exp_m1() + x) / (x * x);
    }
    let mut sum = 0.0;
    let mut fact = 2.0; // 2!
    let mut sign = 1.0; // (-1)^2
    let mut xp = 1.0; // x^{k-2}
    for k in 2..=18u32 {
        if k > 2 {
            fact *= f64::from(k);
            sign = -sign;
            xp *= x;
        }
        sum += sign / fact * xp;
    }
    sum
}

/// ∫_0^1 e^{xu} u^k du for x <= 0.
fn m_int(k: usize, x: f64) -> f64 {
    debug_assert!(x <= 0.0);
    if x.abs() <= 0.25 {
        // sum_j x^j / (j! (k+j+1))
        let mut term = 1.0;
        let mut sum = 1.0 / (k as f64 + 1.0);
        for j in 1..=14usize {
            term *= x / j as f64;
            sum += term / ((k + j + 1) as f64);
        }
        sum
    } else {
        let ex = x.exp();
        let mut m = phi1(x);
        for kk in 1..=k {
            m = (ex - kk as f64 * m) / x;
        }
        m
    }
}

/// ∫_0^t e^{-2γτ} τ^k dτ.
fn t_moment(k: usize, gamma: f64, t: f64) -> f64 {
    t.powi(k as i32 + 1) * m_int(k, -2.0 * gamma * t)
}

/// The four base integrals over [0, t] against e^{-2γτ}:
/// `i0 = ∫ 1`, `jc = ∫ cos 2ατ`, `js = ∫ sin 2ατ / α`,
/// `js2 = ∫ (1 - cos 2ατ)/(2α^2)`.
///
/// All four are even functions of α, so they extend smoothly through
/// critical damping (α^2 = 0) and into the overdamped regime (α^2 < 0,
/// where the trigonometric factors continue hyperbolically).
#[derive(Clone, Copy, Debug)]
pub(crate) struct DampedIntegrals {
    pub i0: f64,
    pub jc: f64,
    pub js: f64,
    pub js2: f64,
}

pub(crate) fn damped_integrals(t: f64, gamma: f64, alpha_sq: f64) -> DampedIntegrals {
    let i0 = t * phi1(-2.0 * gamma * t);
    if t == 0.0 {
        return DampedIntegrals {
            i0: 0.0,
            jc: 0.0,
            js: 0.0,
            js2: 0.0,
        };
    }
    let a2t2 = alpha_sq * t * t;
    if a2t2.abs() < 6.25e-4 {
        // |2αt| < 0.05: series in α^2; T_k carries the γ dependence exactly.
        let t1 = t_moment(1, gamma, t);
        let t2 = t_moment(2, gamma, t);
        let t3 = t_moment(3, gamma, t);
        let t4 = t_moment(4, gamma, t);
        let t5 = t_moment(5, gamma, t);
        let t6 = t_moment(6, gamma, t);
        let t7 = t_moment(7, gamma, t);
        let t8 = t_moment(8, gamma, t);
        let a2 = alpha_sq;
        let jc = i0 - 2.0 * a2 * t2 + (2.0 / 3.0) * a2 * a2 * t4 - (4.0 / 45.0) * a2.powi(3) * t6
            + (2.0 / 315.0) * a2.powi(4) * t8;
        let js = 2.0 * t1 - (4.0 / 3.0) * a2 * t3 + (4.0 / 15.0) * a2 * a2 * t5
            - (8.0 / 315.0) * a2.powi(3) * t7;
        let js2 = t2 - (1.0 / 3.0) * a2 * t4 + (2.0 / 45.0) * a2 * a2 * t6
            - (1.0 / 315.0) * a2.powi(3) * t8;
        DampedIntegrals { i0, jc, js, js2 }
    } else if alpha_sq > 0.0 {
        let al = alpha_sq.sqrt();
        let om2 = gamma * gamma + alpha_sq;
        let e2 = (-2.0 * gamma * t).exp();
        let c2 = (2.0 * al * t).cos();
        let s2 = (2.0 * al * t).sin();
        let jc = (gamma * (1.0 - e2 * c2) + al * e2 * s2) / (2.0 * om2);
        let js = ((1.0 - e2 * c2) - gamma * e2 * (s2 / al)) / (2.0 * om2);
        let js2 = (i0 - jc) / (2.0 * alpha_sq);
        DampedIntegrals { i0, jc, js, js2 }
    } else {
        // overdamped: cos -> cosh, sin/α -> sinh/β via the real exponents
        // -2(γ ∓ β); both are <= 0 because β < γ whenever α^2 >= -γ^2.
        let be = (-alpha_sq).sqrt();
        let fp = t * phi1((-2.0 * gamma + 2.0 * be) * t);
        let fm = t * phi1((-2.0 * gamma - 2.0 * be) * t);
        let jc = 0.5 * (fp + fm);
        let js = (fp - fm) / (2.0 * be);
        let js2 = (i0 - jc) / (2.0 * alpha_sq);
        DampedIntegrals { i0, jc, js, js2 }
    }
}

/// 16-point Gauss-Legendre nodes and weights on [-1, 1] (positive half;
/// nodes are symmetric). Literature values beyond f64 precision.
#[allow(clippy::excessive_precision)]
const GL16_NODES: [f64; 8] = [
    0.095_012_509_837_637_440_185,
    0.281_603_550_779_258_913_230,
    0.458_016_777_657_227_386_342,
    0.617_876_244_402_643_748_447,
    0.755_404_408_355_003_033_895,
    0.865_631_202_387_831_743_880,
    0.944_575_023_073_232_576_078,
    0.989_400_934_991_649_932_596,
];
#[allow(clippy::excessive_precision)]
const GL16_WEIGHTS: [f64; 8] = [
    0.189_450_610_455_068_496_285,
    0.182_603_415_044_923_588_867,
    0.169_156_519_395_002_538_189,
    0.149_595_988_816_576_732_081,
    0.124_628_971_255_533_872_052,
    0.095_158_511_682_492_784_810,
    0.062_253_523_938_647_892_863,
    0.027_152_459_411_754_094_852,
];

/// Composite 16-point Gauss-Legendre integration of a matrix-valued
/// integrand over [0, t] with `panels` equal panels.
pub(crate) fn integrate_matrix2<F>(t: f64, panels: usize, mut f: F) -> nalgebra::Matrix2<f64>
where
    F: FnMut(f64) -> nalgebra::Matrix2<f64>,
{
    let mut total = nalgebra::Matrix2::zeros();
    let width = t / panels as f64;
    for p in 0..panels {
        let a = p as f64 * width;
        let mid = a + 0.5 * width;
        let half = 0.5 * width;
        for i in 0..8 {
            let (x, w) = (GL16_NODES[i], GL16_WEIGHTS[i]);
            total += (f(mid + half * x) + f(mid - half * x)) * (w * half);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn phi1_matches_direct() {
        assert_eq!(phi1(0.0), 1.0);
        assert_relative_eq!(phi1(1.0), std::f64::consts::E - 1.0, max_relative = 1e-15);
        assert_relative_eq!(phi1(1e-9), 1.0 + 0.5e-9, max_relative = 1e-14);
    }

    #[test]
    fn chi_psi_continuous_at_branch() {
        for &x0 in &[0.25f64, -0.25] {
            for f in [chi, psi] {
                let below = f(x0 * (1.0 - 1e-13));
                let above = f(x0 * (1.0 + 1e-13));
                assert_relative_eq!(below, above, max_relative = 1e-11);
            }
        }
        assert_relative_eq!(chi(1e-12), 1.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(psi(1e-12), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn damped_integrals_match_quadrature() {
        // (t, gamma, alpha_sq) spanning trig, hyperbolic, and series branches
        let cases = [
            (7.0, 0.05, 0.9975),
            (4.0, 0.3, 0.91),
            (2.0, 1.2, -0.44),
            (3.0, 1.0, 0.0),
            (5.0, 0.0, 1.69),
            (3.0, 0.4, -0.16),
            (0.008, 3.0, 1e-4),
            (1.0, 0.0, 4e-4),
            (0.05, 0.5, 0.2),
        ];
        for (t, g, a2) in cases {
            let got = damped_integrals(t, g, a2);
            let quad = |f: &dyn Fn(f64) -> f64| {
                integrate_matrix2(t, 512, |tau| nalgebra::Matrix2::new(f(tau), 0.0, 0.0, 0.0))
                    [(0, 0)]
            };
            let cosf = |tau: f64| -> f64 {
                if a2 > 0.0 {
                    (2.0 * a2.sqrt() * tau).cos()
                } else if a2 < 0.0 {
                    (2.0 * (-a2).sqrt() * tau).cosh()
                } else {
                    1.0
                }
            };
            let soa = |tau: f64| -> f64 {
                if a2 > 0.0 {
                    (2.0 * a2.sqrt() * tau).sin() / a2.sqrt()
                } else if a2 < 0.0 {
                    (2.0 * (-a2).sqrt() * tau).sinh() / (-a2).sqrt()
                } else {
                    2.0 * tau
                }
            };
            let e = |tau: f64| (-2.0 * g * tau).exp();
            let i0 = quad(&|tau| e(tau));
            let jc = quad(&|tau| e(tau) * cosf(tau));
            let js = quad(&|tau| e(tau) * soa(tau));
            let js2 = if a2 != 0.0 {
                quad(&|tau| e(tau) * (1.0 - cosf(tau)) / (2.0 * a2))
            } else {
                quad(&|tau| e(tau) * tau * tau)
            };
            let scale = |v: f64| v.abs().max(1.0);
            assert!(
                (got.i0 - i0).abs() < 1e-12 * scale(i0),
                "i0 t={t} g={g} a2={a2}"
            );
            assert!(
                (got.jc - jc).abs() < 1e-12 * scale(jc),
                "jc t={t} g={g} a2={a2}"
            );
            assert!(
                (got.js - js).abs() < 1e-12 * scale(js),
                "js t={t} g={g} a2={a2}"
            );
            assert!(
                (got.js2 - js2).abs() < 1e-11 * scale(js2),
                "js2 t={t} g={g} a2={a2}"
            );
        }
    }

    #[test]
    fn series_branch_continuity() {
        // straddle the |2αt|² = 6.25e-4 switch
        let t = 1.0;
        let g = 0.7;
        let boundary = 6.25e-4;
        let lo = damped_integrals(t, g, boundary * (1.0 - 1e-13));
        let hi = damped_integrals(t, g, boundary * (1.0 + 1e-13));
        assert_relative_eq!(lo.jc, hi.jc, max_relative = 1e-11);
        assert_relative_eq!(lo.js, hi.js, max_relative = 1e-11);
        assert_relative_eq!(lo.js2, hi.js2, max_relative = 1e-11);
    }
}
