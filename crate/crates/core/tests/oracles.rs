//! Cross-oracle agreement on parameter grids: every closed-form noise
//! integral against adaptive quadrature, and both propagation routes
//! against the moment ODE.

use nalgebra::{Matrix2, Vector2, Vector4};
use phasesep::dynamics_coupled::{
    evolve_covariance_4x4, moment_ode_refined_coupled, sector_mu_closed, CoupledParams, Frame,
    Sector,
};
use phasesep::dynamics_single::{
    flow_free, flow_oscillator, minimal_diffusion, moment_ode_refined, mu_closed_free,
    mu_quadrature, propagate_gaussian, Propagator,
};
use phasesep::phase_space::{eta2, GaussianState1, GaussianState2};
use phasesep::{DiffusionMatrix, FlowVariant, SystemParams};
use rand::SeedableRng;

const GAMMAS: [f64; 5] = [0.01, 0.05, 0.2, 0.5, 1.0];
const KTS: [f64; 5] = [0.5, 2.0, 10.0, 50.0, 200.0];
const TIMES: [f64; 5] = [0.1, 0.7, 2.0, 8.0, 25.0];

fn to_kernel(mu: &Matrix2<f64>) -> Matrix2<f64> {
    2.0 * eta2().transpose() * mu * eta2()
}

#[test]
fn free_closed_form_vs_quadrature_grid() {
    let m = 1.0;
    let mut worst = 0.0f64;
    for &g in &GAMMAS {
        for &kt in &KTS {
            let d = minimal_diffusion(m, g, kt).unwrap();
            for &t in &TIMES {
                let closed = mu_closed_free(t, &d, m, g).unwrap();
                let quad = mu_quadrature(
                    t,
                    &d,
                    |tau| {
                        phasesep::dynamics_single::flow_free(tau, m, g, FlowVariant::PaperPrinted)
                            .unwrap()
                    },
                    8,
                )
                .unwrap();
                let err = (closed - to_kernel(&quad)).amax() / quad.amax().max(1.0);
                worst = worst.max(err);
            }
        }
    }
    assert!(
        worst <= 1e-8,
        "worst free closed-vs-quadrature error {worst:e}"
    );
}

#[test]
fn sector_closed_form_vs_quadrature_grid() {
    let p0 = CoupledParams::new(1.0, 0.1, 1.0, 0.5, 10.0).unwrap();
    let mut worst = 0.0f64;
    for &g in &GAMMAS {
        for &kt in &KTS {
            let d = minimal_diffusion(1.0, g, kt).unwrap();
            for &t in &TIMES {
                for sector in Sector::BOTH {
                    let p = CoupledParams::new(1.0, g, p0.omega_well, p0.omega_c, kt).unwrap();
                    let om = p.sector_frequency(sector);
                    let closed = sector_mu_closed(t, d.d_pp, d.d_qq, 1.0, g, om).unwrap();
                    let quad = mu_quadrature(
                        t,
                        &d,
                        |tau| flow_oscillator(tau, 1.0, g, om, FlowVariant::PaperPrinted).unwrap(),
                        8,
                    )
                    .unwrap();
                    let err = (closed.matrix() - quad).amax() / quad.amax().max(1.0);
                    worst = worst.max(err);
                }
            }
        }
    }
    assert!(
        worst <= 1e-8,
        "worst sector closed-vs-quadrature error {worst:e}"
    );
}

#[test]
fn propagation_vs_moment_ode_grid() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    let mut worst = 0.0f64;
    for (m, g, om, kt) in [
        (1.0, 0.05, 0.0, 10.0),
        (1.0, 0.3, 0.8, 2.0),
        (2.0, 0.1, 1.5, 20.0),
        (1.0, 1.2, 0.4, 5.0), // overdamped
    ] {
        let params = SystemParams::new(m, g, om, kt).unwrap();
        let d = minimal_diffusion(m, g, kt).unwrap();
        for _ in 0..3 {
            let cov = phasesep::sampling::random_wigner_cov_single(&mut rng);
            let state = GaussianState1::physical(Vector2::new(0.3, -0.8), cov).unwrap();
            for t in [0.5, 3.0, 12.0] {
                let prop =
                    Propagator::for_params(t, &params, &d, FlowVariant::OdeConsistent).unwrap();
                let got = propagate_gaussian(&state, &prop).unwrap();
                let want = moment_ode_refined(&state, &params, &d, t).unwrap();
                let err = (got.cov - want.cov).amax() / want.cov.amax().max(1.0);
                worst = worst.max(err).max((got.mean - want.mean).amax());
            }
        }
    }
    assert!(worst <= 1e-8, "worst propagate-vs-ODE error {worst:e}");
}

#[test]
fn coupled_evolution_vs_moment_ode() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let p = CoupledParams::new(1.0, 0.1, 1.0, 0.6, 8.0).unwrap();
    let d = p.minimal_diffusion().unwrap();
    let mut worst = 0.0f64;
    for _ in 0..4 {
        let cov = phasesep::sampling::random_wigner_cov_two_mode(&mut rng);
        let state = GaussianState2::physical(Vector4::new(0.5, 0.0, -1.0, 0.4), cov).unwrap();
        for t in [0.6, 2.5, 9.0] {
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
            let err = (got.cov - want.cov).amax() / want.cov.amax().max(1.0);
            worst = worst.max(err).max((got.mean - want.mean).amax());
        }
    }
    assert!(worst <= 1e-8, "worst coupled-vs-ODE error {worst:e}");
}

#[test]
fn flow_integrity_grid() {
    // group law and determinant for the ODE-consistent family; the printed
    // family's ODE residual documented as nonzero at γ > 0
    let mut worst_group = 0.0f64;
    let mut worst_det = 0.0f64;
    for (m, g, om) in [
        (1.0, 0.0, 0.0),
        (1.0, 0.2, 0.0),
        (2.0, 0.1, 1.0),
        (1.0, 0.5, 1.5),
        (1.0, 1.5, 0.5),
    ] {
        for t in [0.1, 1.0, 5.0] {
            for s in [0.1, 1.0, 5.0] {
                let ets = flow_oscillator(t + s, m, g, om, FlowVariant::OdeConsistent).unwrap();
                let et = flow_oscillator(t, m, g, om, FlowVariant::OdeConsistent).unwrap();
                let es = flow_oscillator(s, m, g, om, FlowVariant::OdeConsistent).unwrap();
                worst_group = worst_group.max((ets - et * es).amax());
            }
            let et = flow_oscillator(t, m, g, om, FlowVariant::OdeConsistent).unwrap();
            worst_det = worst_det.max((et.determinant() - (-2.0 * g * t).exp()).abs());
            let ef = flow_free(t, m, g, FlowVariant::OdeConsistent).unwrap();
            worst_det = worst_det.max((ef.determinant() - (-2.0 * g * t).exp()).abs());
        }
    }
    assert!(worst_group <= 1e-10, "group law violation {worst_group:e}");
    assert!(worst_det <= 1e-10, "determinant violation {worst_det:e}");
}

#[test]
fn gamma0_sector_forms_vs_quadrature() {
    use phasesep::dynamics_coupled::sector_mu_gamma0;
    let mut worst = 0.0f64;
    for (dpp, dqq) in [(0.9, 0.3), (0.5, 0.0), (2.0, 0.7)] {
        let d = DiffusionMatrix::new(dqq, 0.0, dpp);
        for om in [0.5, 1.0, 2.2] {
            for t in [0.4, 2.0, 9.0] {
                let s = sector_mu_gamma0(t, &d, 1.0, om).unwrap();
                assert_eq!(s.b, 0.0);
                let q = mu_quadrature(
                    t,
                    &d,
                    |tau| flow_oscillator(tau, 1.0, 0.0, om, FlowVariant::PaperPrinted).unwrap(),
                    8,
                )
                .unwrap();
                let scale = q.amax().max(1.0);
                worst = worst.max((s.a - q[(0, 0)]).abs() / scale);
                worst = worst.max((s.c - q[(1, 1)]).abs() / scale);
            }
        }
    }
    assert!(worst <= 1e-8, "worst γ=0 A/C error {worst:e}");
}
