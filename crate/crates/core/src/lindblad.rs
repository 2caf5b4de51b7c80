//! Local master equation of the double dot, its steady state and dynamics.

use crate::error::{Error, Result};
use crate::model::{build_h_dqd, dot_operators, local_lowering, EngineParams};
use crate::numkernel::{
    devectorize, eig, matexp, Operator, Spectrum, Superoperator, C64, DEFAULT_ZERO_TOL,
};

/// Largest eigenvalue below zero still accepted in a steady state.
pub const POSITIVITY_TOL: f64 = 1e-10;

/// Steady-state residual bound relative to `‖L‖`.
pub const NESS_RESIDUAL_TOL: f64 = 1e-11;

/// `ρ ↦ LρL† − ½{L†L, ρ}`.
pub fn dissipator_superop(l: &Operator) -> Superoperator {
    let ldl = &l.dagger() * l;
    let half = C64::new(0.5, 0.0);
    let anti = &Superoperator::left(&ldl) + &Superoperator::right(&ldl);
    &Superoperator::sandwich(l, &l.dagger()) - &anti.scale(half)
}

/// Dissipative channel of the local master equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    /// Electron enters dot 1 from the hot reservoir, `c₁†`.
    HotIn,
    /// Electron leaves dot 1 into the hot reservoir, `c₁`.
    HotOut,
    ColdIn,
    ColdOut,
    /// Measurement back-action, `n₁`.
    Dephasing,
}

/// A jump operator together with the rate multiplying its dissipator.
#[derive(Clone, Debug)]
pub struct Jump {
    pub channel: Channel,
    pub op: Operator,
    pub rate: f64,
}

impl Jump {
    /// `√rate · op`, the operator that appears in the unravelled jump term.
    pub fn scaled(&self) -> Operator {
        &self.op * self.rate.sqrt()
    }
}

/// Full generator together with its ingredients.
#[derive(Clone, Debug)]
pub struct LiouvillianBundle {
    pub params: EngineParams,
    pub hamiltonian: Operator,
    /// `L = −i[H, ·] + Σ rate·𝒟[op]`, a 16 × 16 matrix.
    pub l0: Superoperator,
    pub jumps: Vec<Jump>,
}

impl LiouvillianBundle {
    pub fn jump(&self, channel: Channel) -> Option<&Jump> {
        self.jumps.iter().find(|j| j.channel == channel)
    }

    /// Dissipative part rebuilt from the jump list.
    pub fn dissipative_part(&self) -> Superoperator {
        let mut d = Superoperator::zeros(self.hamiltonian.dim());
        for jump in &self.jumps {
            d += &dissipator_superop(&jump.op).scale(C64::new(jump.rate, 0.0));
        }
        d
    }
}

pub fn build_liouvillian(p: &EngineParams) -> Result<LiouvillianBundle> {
    p.validate()?;
    let (c1, c2) = local_lowering();
    let (f_h, f_c) = (p.f_hot(), p.f_cold());
    let jumps = vec![
        Jump {
            channel: Channel::HotIn,
            op: c1.dagger(),
            rate: p.gamma_h * f_h,
        },
        Jump {
            channel: Channel::HotOut,
            op: c1.clone(),
            rate: p.gamma_h * (1.0 - f_h),
        },
        Jump {
            channel: Channel::ColdIn,
            op: c2.dagger(),
            rate: p.gamma_c * f_c,
        },
        Jump {
            channel: Channel::ColdOut,
            op: c2.clone(),
            rate: p.gamma_c * (1.0 - f_c),
        },
        Jump {
            channel: Channel::Dephasing,
            op: &c1.dagger() * &c1,
            rate: p.dephasing,
        },
    ];
    let hamiltonian = build_h_dqd(p);
    let mut bundle = LiouvillianBundle {
        params: p.clone(),
        l0: Superoperator::hamiltonian(&hamiltonian),
        hamiltonian,
        jumps,
    };
    bundle.l0 += &bundle.dissipative_part();
    Ok(bundle)
}

/// Unique steady state `L(ρ) = 0`.
pub fn ness(b: &LiouvillianBundle) -> Result<Operator> {
    match eig(&b.l0) {
        Ok(spectrum) => ness_from_spectrum(b, &spectrum),
        // Exactly at an exceptional point of the non-zero spectrum the
        // eigenvector basis is unusable, but the kernel is still simple.
        Err(Error::Defective { .. }) => finalize_state(b, bordered_null_vector(b)?),
        Err(e) => Err(e),
    }
}

/// Steady state, with uniqueness read off a precomputed spectrum of `b.l0`.
pub fn ness_from_spectrum(b: &LiouvillianBundle, spectrum: &Spectrum) -> Result<Operator> {
    let zeros = spectrum.near_zero(DEFAULT_ZERO_TOL);
    match zeros.len() {
        1 => finalize_state(b, bordered_null_vector(b)?),
        0 => Err(Error::NonConvergence {
            what: "steady state",
            norm: b.l0.norm(),
            detail: "no eigenvalue within the zero tolerance".into(),
        }),
        count => Err(Error::DegenerateSteadyState {
            count,
            tol: DEFAULT_ZERO_TOL * spectrum.spectral_radius(),
        }),
    }
}

/// `L` seen from the frame rotating at the mean level energy,
/// `L + i ε̄ [N, ·]` with `N = n₁ + n₂`.
///
/// Every term of `L` conserves `[N, ·]`, so this generator has the same
/// steady state and agrees with `L` on operators diagonal in `N`. Its norm is
/// set by the detuning and the rates instead of the level energies, which
/// makes the steady state better conditioned.
pub fn rotating_generator(b: &LiouvillianBundle) -> Superoperator {
    let (c1, c2) = local_lowering();
    let n = &(&c1.dagger() * &c1) + &(&c2.dagger() * &c2);
    let mean = 0.5 * (b.params.eps1 + b.params.eps2);
    &b.l0 - &Superoperator::hamiltonian(&(&n * mean))
}

// Kernel of the rotating generator with the first population row replaced
// by the trace condition. Trace preservation makes the population rows
// linearly dependent, so nothing is lost.
fn bordered_null_vector(b: &LiouvillianBundle) -> Result<nalgebra::DVector<C64>> {
    let l = rotating_generator(b);
    let d = l.dim();
    let mut m = l.entries().clone();
    m.row_mut(0).fill(C64::new(0.0, 0.0));
    for k in 0..d {
        m[(0, k * (d + 1))] = C64::new(1.0, 0.0);
    }
    let mut rhs = nalgebra::DVector::<C64>::zeros(d * d);
    rhs[0] = C64::new(1.0, 0.0);
    m.lu().solve(&rhs).ok_or(Error::NonConvergence {
        what: "steady state",
        norm: l.norm(),
        detail: "bordered generator is singular".into(),
    })
}

fn finalize_state(b: &LiouvillianBundle, v: nalgebra::DVector<C64>) -> Result<Operator> {
    let raw = devectorize(&v)?;
    let tr = raw.trace();
    if tr.norm() < f64::EPSILON {
        return Err(Error::InvalidState(
            "steady-state eigenvector is traceless".into(),
        ));
    }
    let rho = raw.scale(tr.inv()).hermitian_part();
    let rho = rho.scale(C64::new(1.0 / rho.trace().re, 0.0));
    let residual = b.l0.apply(&rho)?.norm();
    let scale = b.l0.norm();
    if residual > NESS_RESIDUAL_TOL * scale {
        return Err(Error::NonConvergence {
            what: "steady state",
            norm: scale,
            detail: format!("residual {residual:e}"),
        });
    }
    rho.check_density(POSITIVITY_TOL)?;
    Ok(rho)
}

/// `ρ(t) = exp(L t) ρ₀`.
pub fn evolve(b: &LiouvillianBundle, rho0: &Operator, t: f64) -> Result<Operator> {
    rho0.check_density(POSITIVITY_TOL)?;
    let propagator = matexp(&b.l0.scale(C64::new(t, 0.0)))?;
    propagator.apply(rho0)
}

/// `Tr(a ρ)`.
pub fn expectation(rho: &Operator, a: &Operator) -> Result<C64> {
    a.expectation_in(rho)
}

/// Dot populations and the interdot coherence `⟨c₁†c₂⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DotObservables {
    pub n1: f64,
    pub n2: f64,
    pub coherence: C64,
}

pub fn dot_observables(rho: &Operator) -> Result<DotObservables> {
    let (c1, c2) = dot_operators();
    Ok(DotObservables {
        n1: expectation(rho, &(&c1.dagger() * &c1))?.re,
        n2: expectation(rho, &(&c2.dagger() * &c2))?.re,
        coherence: expectation(rho, &(&c1.dagger() * &c2))?,
    })
}

/// Interdot particle current from dot 1 to dot 2, `i(t⟨c₁†c₂⟩ − t*⟨c₂†c₁⟩)`.
pub fn interdot_current(p: &EngineParams, obs: &DotObservables) -> f64 {
    let i = C64::new(0.0, 1.0);
    (i * (p.t_hop * obs.coherence - p.t_hop.conj() * obs.coherence.conj())).re
}

/// Right-hand sides of the closed equations of motion for `⟨n₁⟩`, `⟨n₂⟩`,
/// `⟨c₁†c₂⟩` and `⟨c₂†c₁⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeisenbergRates {
    pub n1: f64,
    pub n2: f64,
    pub coherence: C64,
    pub coherence_conj: C64,
}

impl HeisenbergRates {
    pub fn max_abs(&self) -> f64 {
        self.n1
            .abs()
            .max(self.n2.abs())
            .max(self.coherence.norm())
            .max(self.coherence_conj.norm())
    }
}

pub fn heisenberg_rates(p: &EngineParams, obs: &DotObservables) -> HeisenbergRates {
    let i = C64::new(0.0, 1.0);
    let j12 = interdot_current(p, obs);
    let decay = 0.5 * (p.gamma_sum() + p.dephasing);
    let coherence =
        (i * (p.eps1 - p.eps2) - decay) * obs.coherence + i * p.t_hop.conj() * (obs.n2 - obs.n1);
    HeisenbergRates {
        n1: p.gamma_h * (p.f_hot() - obs.n1) - j12,
        n2: p.gamma_c * (p.f_cold() - obs.n2) + j12,
        coherence,
        coherence_conj: coherence.conj(),
    }
}

/// Spectrum of the generator, for callers that reuse it (steady state and
/// Drazin inverse from one decomposition).
pub fn spectrum(b: &LiouvillianBundle) -> Result<Spectrum> {
    eig(&b.l0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::{drazin_from_spectrum, vectorize, vectorized_identity};

    fn canonical(dephasing: f64) -> EngineParams {
        EngineParams {
            eps1: 4.0,
            eps2: 4.2,
            t_hop: C64::new(0.05, 0.0),
            gamma_h: 0.05,
            gamma_c: 0.05,
            temp_h: 3.0,
            temp_c: 1.0,
            mu_h: 1.0,
            mu_c: 3.0,
            dephasing,
        }
    }

    fn some_state() -> Operator {
        let a = Operator::from_fn(4, |i, j| {
            C64::new(0.3 * i as f64 - 0.1 * j as f64, 0.2 * (i * j) as f64 - 0.4)
        });
        let rho = &a * &a.dagger();
        rho.scale(rho.trace().inv())
    }

    #[test]
    fn identity_dissipator_vanishes() {
        let d = dissipator_superop(&Operator::identity(4));
        assert!(d.norm() < 1e-15);
    }

    #[test]
    fn two_level_decay() {
        let lower = Operator::from_real_rows(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        let excited = Operator::from_diagonal(&[0.0, 1.0]);
        let out = dissipator_superop(&lower).apply(&excited).unwrap();
        assert!((&out - &Operator::from_diagonal(&[1.0, -1.0])).norm() < 1e-15);
    }

    #[test]
    fn dephasing_keeps_number_diagonal_states() {
        let (c1, _) = dot_operators();
        let n1 = &c1.dagger() * &c1;
        let rho = Operator::from_diagonal(&[0.1, 0.2, 0.3, 0.4]);
        assert!(dissipator_superop(&n1).apply(&rho).unwrap().norm() < 1e-15);
        let maxmix = Operator::from_diagonal(&[0.25; 4]);
        let b = build_liouvillian(&canonical(0.8)).unwrap();
        let deph = b.jump(Channel::Dephasing).unwrap();
        let change = dissipator_superop(&deph.op).apply(&maxmix).unwrap();
        assert!(change.norm() < 1e-15);
    }

    #[test]
    fn generator_is_trace_and_hermiticity_preserving() {
        for gamma in [0.0, 0.3, 5.0] {
            let b = build_liouvillian(&canonical(gamma)).unwrap();
            assert_eq!(b.l0.dim(), 4);
            assert_eq!(b.l0.entries().nrows(), 16);
            assert!(b.l0.trace_defect() < 1e-12);
            let out = b.l0.apply(&some_state()).unwrap();
            assert!(out.is_hermitian(1e-14));
            let rebuilt = &Superoperator::hamiltonian(&b.hamiltonian) + &b.dissipative_part();
            assert_eq!(rebuilt.entries(), b.l0.entries());
        }
    }

    #[test]
    fn jump_structure_matches_rates() {
        let p = canonical(0.4);
        let b = build_liouvillian(&p).unwrap();
        assert_eq!(b.jumps.len(), 5);
        assert!((b.jump(Channel::HotIn).unwrap().rate - p.gamma_h * p.f_hot()).abs() < 1e-16);
        assert!(
            (b.jump(Channel::ColdOut).unwrap().rate - p.gamma_c * (1.0 - p.f_cold())).abs() < 1e-16
        );
        assert_eq!(b.jump(Channel::Dephasing).unwrap().rate, 0.4);
    }

    #[test]
    fn decoupled_dots_relax_to_reservoir_occupations() {
        let mut p = canonical(0.0);
        p.t_hop = C64::new(0.0, 0.0);
        let rho = ness(&build_liouvillian(&p).unwrap()).unwrap();
        let obs = dot_observables(&rho).unwrap();
        assert!((obs.n1 - p.f_hot()).abs() < 1e-12);
        assert!((obs.n2 - p.f_cold()).abs() < 1e-12);
        assert!(obs.coherence.norm() < 1e-12);
        let (f1, f2) = (p.f_hot(), p.f_cold());
        let product = Operator::from_diagonal(&[
            (1.0 - f1) * (1.0 - f2),
            (1.0 - f1) * f2,
            f1 * (1.0 - f2),
            f1 * f2,
        ]);
        assert!((&rho - &product).norm() < 1e-12);
    }

    #[test]
    fn equal_occupations_carry_no_current() {
        let mut p = canonical(0.3);
        // ε₂ − μ_C chosen so that f_C(ε₂) = f_H(ε₁)
        p.mu_c = p.eps2 - (p.eps1 - p.mu_h) * p.temp_c / p.temp_h;
        assert!((p.f_hot() - p.f_cold()).abs() < 1e-15);
        let obs = dot_observables(&ness(&build_liouvillian(&p).unwrap()).unwrap()).unwrap();
        assert!(obs.coherence.norm() < 1e-12);
        assert!(interdot_current(&p, &obs).abs() < 1e-14);
    }

    #[test]
    fn ness_is_a_valid_stationary_state() {
        for gamma in [0.0, 0.01, 0.3, 1.5, 10.0] {
            let b = build_liouvillian(&canonical(gamma)).unwrap();
            let rho = ness(&b).unwrap();
            rho.check_density(1e-10).unwrap();
            assert!(b.l0.apply(&rho).unwrap().norm() <= 1e-11 * b.l0.norm());
        }
    }

    #[test]
    fn single_zero_eigenvalue_over_dephasing_scan() {
        for k in 0..=100 {
            let b = build_liouvillian(&canonical(0.1 * k as f64)).unwrap();
            let s = spectrum(&b).unwrap();
            assert_eq!(s.near_zero(DEFAULT_ZERO_TOL).len(), 1);
            // all other modes decay
            let max_re = s
                .values
                .iter()
                .filter(|z| z.norm() > 1e-9 * s.spectral_radius())
                .map(|z| z.re)
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(max_re < 0.0);
        }
    }

    #[test]
    fn bordered_solve_agrees_with_eigenvector() {
        let b = build_liouvillian(&canonical(0.7)).unwrap();
        let s = spectrum(&b).unwrap();
        let k = s.near_zero(DEFAULT_ZERO_TOL)[0];
        let from_eig = finalize_state(&b, s.right.column(k).into_owned()).unwrap();
        assert!((&ness(&b).unwrap() - &from_eig).norm() < 1e-12);
    }

    #[test]
    fn rotating_generator_agrees_on_number_diagonal_operators() {
        let b = build_liouvillian(&canonical(0.4)).unwrap();
        let rot = rotating_generator(&b);
        assert!(rot.norm() < 0.2 * b.l0.norm());
        // |01⟩⟨10| and |11⟩⟨11| keep N fixed; |00⟩⟨01| does not.
        let e = |i: usize, j: usize| {
            Operator::from_fn(4, |r, c| C64::new((r == i && c == j) as u8 as f64, 0.0))
        };
        for x in [e(1, 2), e(3, 3), e(2, 2)] {
            assert!((&rot.apply(&x).unwrap() - &b.l0.apply(&x).unwrap()).norm() < 1e-14);
        }
        assert!((&rot.apply(&e(0, 1)).unwrap() - &b.l0.apply(&e(0, 1)).unwrap()).norm() > 1.0);
    }

    #[test]
    fn heisenberg_rates_match_generator() {
        let p = EngineParams {
            t_hop: C64::new(0.04, -0.03),
            gamma_c: 0.08,
            ..canonical(0.6)
        };
        let b = build_liouvillian(&p).unwrap();
        let rho = some_state();
        let drho = b.l0.apply(&rho).unwrap();
        let (c1, c2) = dot_operators();
        let rates = heisenberg_rates(&p, &dot_observables(&rho).unwrap());
        let tr = |a: &Operator| expectation(&drho, a).unwrap();
        assert!((tr(&(&c1.dagger() * &c1)).re - rates.n1).abs() < 1e-14);
        assert!((tr(&(&c2.dagger() * &c2)).re - rates.n2).abs() < 1e-14);
        assert!((tr(&(&c1.dagger() * &c2)) - rates.coherence).norm() < 1e-14);
        assert!((tr(&(&c2.dagger() * &c1)) - rates.coherence_conj).norm() < 1e-14);
    }

    #[test]
    fn heisenberg_rates_vanish_at_ness() {
        for gamma in [0.0, 0.2, 3.0] {
            let p = canonical(gamma);
            let rho = ness(&build_liouvillian(&p).unwrap()).unwrap();
            let obs = dot_observables(&rho).unwrap();
            assert!(heisenberg_rates(&p, &obs).max_abs() < 1e-11);
            // stationarity of n₁: hot inflow equals the interdot current
            let j_hot = p.gamma_h * (p.f_hot() - obs.n1);
            assert!((j_hot - interdot_current(&p, &obs)).abs() < 1e-14);
        }
    }

    #[test]
    fn evolution_preserves_trace_and_reaches_ness() {
        let b = build_liouvillian(&canonical(0.5)).unwrap();
        let rho0 = some_state();
        let same = evolve(&b, &rho0, 0.0).unwrap();
        assert!((&same - &rho0).norm() < 1e-15);
        let mid = evolve(&b, &rho0, 7.0).unwrap();
        assert!((mid.trace() - C64::new(1.0, 0.0)).norm() < 1e-11);
        assert!(mid.is_hermitian(1e-11));
        let late = evolve(&b, &rho0, 50.0 / 0.05).unwrap();
        assert!((&late - &ness(&b).unwrap()).norm() < 1e-8);
    }

    #[test]
    fn expectation_basics() {
        let rho = some_state();
        assert!((expectation(&rho, &Operator::identity(4)).unwrap() - 1.0).norm() < 1e-14);
        let (c1, _) = dot_operators();
        let mixed = Operator::from_diagonal(&[0.25; 4]);
        assert!((expectation(&mixed, &(&c1.dagger() * &c1)).unwrap().re - 0.5).abs() < 1e-15);
        assert!(expectation(&rho, &Operator::identity(2)).is_err());
    }

    #[test]
    fn left_null_vector_and_drazin() {
        let b = build_liouvillian(&canonical(1.0)).unwrap();
        let one = vectorized_identity(4);
        assert!((one.transpose() * b.l0.entries()).norm() < 1e-12);
        let s = spectrum(&b).unwrap();
        let ld = drazin_from_spectrum(&b.l0, &s, DEFAULT_ZERO_TOL).unwrap();
        let rho = vectorize(&ness(&b).unwrap());
        assert!((ld.entries() * &rho).norm() < 1e-9);
    }
}
