use approx::assert_relative_eq;
use proptest::prelude::*;

use dqd_thermo::collision::{
    choi_min_eigenvalue, emergent_dissipator, CollisionConfig, CollisionModel,
};
use dqd_thermo::lindblad::{build_liouvillian, dot_observables, heisenberg_rates, ness};
use dqd_thermo::model::{EngineParams, JointModel, QpcParams};
use dqd_thermo::numkernel::{drazin, C64, DEFAULT_ZERO_TOL};
use dqd_thermo::sweep::evaluate_point;
use dqd_thermo::thermo::closed_form_current;

prop_compose! {
    fn engine()(
        eps1 in -3.0..3.0f64, eps2 in -3.0..3.0f64,
        t_re in -0.3..0.3f64, t_im in -0.3..0.3f64,
        gamma_h in 0.01..0.5f64, gamma_c in 0.01..0.5f64,
        temp_h in 0.2..5.0f64, temp_c in 0.2..5.0f64,
        mu_h in -2.0..2.0f64, mu_c in -2.0..2.0f64,
        dephasing in 0.0..3.0f64,
    ) -> EngineParams {
        EngineParams {
            eps1, eps2, t_hop: C64::new(t_re, t_im),
            gamma_h, gamma_c, temp_h, temp_c, mu_h, mu_c, dephasing,
        }
    }
}

prop_compose! {
    fn qpc()(
        chi00 in 0.01..0.5f64, g_l in 0.1..2.0f64, g_r in 0.1..2.0f64,
        temp in 0.05..3.0f64, t00 in 0.0..2.0f64, omega in -10.0..10.0f64,
        mu_l in -5.0..5.0f64, bias in 0.0..2.0f64,
    ) -> QpcParams {
        QpcParams { chi00, g_l, g_r, temp, t00, omega, mu_r: mu_l + bias, mu_l }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generator_preserves_trace(p in engine()) {
        let b = build_liouvillian(&p).unwrap();
        prop_assert!(b.l0.trace_defect() <= 1e-13 * b.l0.norm());
    }

    #[test]
    fn steady_state_is_a_stationary_density(p in engine()) {
        let rho = ness(&build_liouvillian(&p).unwrap()).unwrap();
        prop_assert!(rho.check_density(1e-10).is_ok());
        let rates = heisenberg_rates(&p, &dot_observables(&rho).unwrap());
        prop_assert!(rates.max_abs() <= 1e-12);
    }

    #[test]
    fn laws_hold(p in engine(), q in qpc()) {
        let t = evaluate_point(&p, &q).unwrap().thermo;
        let scale = t.current_scale();
        prop_assert!(t.first_law_residual.abs() <= 1e-11 * scale);
        let slack = 1e-11 * scale / p.temp_h.min(p.temp_c).min(q.temp);
        prop_assert!(t.sigma_dqd >= -slack, "sigma_dqd {}", t.sigma_dqd);
        prop_assert!(t.sigma_qpc >= -slack, "sigma_qpc {}", t.sigma_qpc);
    }

    #[test]
    fn noise_bounds(p in engine(), q in qpc()) {
        let f = evaluate_point(&p, &q).unwrap().fcs;
        prop_assert!(f.m >= f.j.abs() * (1.0 - 1e-12));
        prop_assert!(f.d >= -1e-12 * f.m);
    }

    #[test]
    fn drazin_inverse_is_a_group_inverse(p in engine()) {
        let b = build_liouvillian(&p).unwrap();
        let l = b.l0.entries();
        let d = drazin(&b.l0, DEFAULT_ZERO_TOL).unwrap();
        let d = d.entries();
        let tol = 1e-9 * b.l0.norm();
        prop_assert!((l * d * l - l).norm() <= tol);
        prop_assert!((d * l * d - d).norm() <= tol);
        prop_assert!((l * d - d * l).norm() <= tol);
    }

    #[test]
    fn collisions_reproduce_the_dissipator(p in engine(), q in qpc()) {
        let model = JointModel::build(&p, &q, true).unwrap();
        let b = build_liouvillian(&p).unwrap();
        let gap = (&emergent_dissipator(&model) - &b.dissipative_part()).norm();
        prop_assert!(gap <= 1e-12 * b.l0.norm().max(1.0));
    }

    #[test]
    fn collision_step_is_completely_positive(p in engine(), q in qpc(), tau in 0.01..1.0f64) {
        let cfg = CollisionConfig { tau, n_steps: 1, include_qpc: true, params: p, qpc: q };
        let model = CollisionModel::new(&cfg).unwrap();
        prop_assert!(choi_min_eigenvalue(&model.channel()) >= -1e-12);
    }
}

#[test]
fn coherent_limit_matches_closed_form() {
    let p = EngineParams {
        eps1: 1.0,
        eps2: 1.2,
        t_hop: C64::new(0.1, 0.0),
        gamma_h: 0.05,
        gamma_c: 0.05,
        temp_h: 2.0,
        temp_c: 1.0,
        mu_h: 0.0,
        mu_c: 0.0,
        dephasing: 0.0,
    };
    let rho = ness(&build_liouvillian(&p).unwrap()).unwrap();
    let j = dqd_thermo::thermo::particle_current(&p, &rho).unwrap();
    assert_relative_eq!(j, closed_form_current(&p), max_relative = 1e-10);
}
