//! Heat, work and particle currents at the steady state, efficiency and
//! entropy production.
//!
//! Every current comes from the collision-model functional
//! `D_α(A) = Tr[(v_α A v_α − ½{v_α², A}) ρ ⊗ ω]` evaluated on the joint
//! dot + unit space:
//!
//! - heat `Q̇_α = −D_α(H_α)`, positive when energy leaves reservoir `α`;
//! - work `Ẇ_α = D_α(H_DQD + H_α)`, positive when done on the dots.
//!
//! The closed forms in this module are cross-checks only.

use crate::error::{Error, Result};
use crate::lindblad::{build_liouvillian, dot_observables, ness, Channel};
use crate::model::{EngineParams, JointModel, QpcParams};
use crate::numkernel::Operator;

/// Particle current from the hot reservoir into dot 1, `γ_H (f_H − ⟨n₁⟩)`.
pub fn particle_current(p: &EngineParams, rho: &Operator) -> Result<f64> {
    let obs = dot_observables(rho)?;
    Ok(p.gamma_h * (p.f_hot() - obs.n1))
}

/// `D_α(A)` for a joint-space observable `a`, interaction `v` and the joint
/// state `ρ ⊗ ω`.
pub fn d_alpha(a: &Operator, v: &Operator, joint_state: &Operator) -> Result<f64> {
    if a.dim() != v.dim() || a.dim() != joint_state.dim() {
        return Err(Error::DimensionMismatch(format!(
            "observable {}, interaction {}, state {}",
            a.dim(),
            v.dim(),
            joint_state.dim()
        )));
    }
    Ok(adjoint_dissipator(v, a).expectation_in(joint_state)?.re)
}

// v A v − ½{v², A} = −½[v, [v, A]], so that D_α(A) = Tr[this · ρ⊗ω].
// In the nested-commutator form the parts of A that commute with v cancel
// exactly, before they meet the state, which keeps the level energies out
// of the rounding error of the work currents.
fn adjoint_dissipator(v: &Operator, a: &Operator) -> Operator {
    &v.commutator(&v.commutator(a)) * -0.5
}

/// Size below which an energy current counts as numerically zero: rounding
/// level on the product of the largest rate and the largest energy.
pub fn current_noise_floor(p: &EngineParams) -> f64 {
    let rates = p.gamma_h + p.gamma_c + p.dephasing;
    let energy = [
        p.eps1,
        p.eps2,
        p.mu_h,
        p.mu_c,
        p.t_hop.norm(),
        p.temp_h,
        p.temp_c,
    ]
    .iter()
    .fold(0.0f64, |m, x| m.max(x.abs()));
    1e-14 * rates * energy
}

/// Steady-state currents and derived quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermoReport {
    pub dephasing: f64,
    pub j_n: f64,
    pub n1: f64,
    pub n2: f64,
    pub coh_re: f64,
    pub coh_im: f64,
    pub qdot_h: f64,
    pub qdot_c: f64,
    pub qdot_qpc: f64,
    pub wdot_h: f64,
    pub wdot_c: f64,
    /// `Ẇ_QPC = Ẇ_QPC^DQD + Ẇ_QPC^Watt`.
    pub wdot_qpc: f64,
    /// `D_QPC(H_DQD)`, the work the detector does on the dots.
    pub wdot_qpc_dqd: f64,
    /// `eV Γ ⟨n₁⟩`, the occupation-dependent part of the detector's own
    /// dissipation (Watt's law).
    pub wdot_qpc_watt: f64,
    /// `Ẇ_H + Ẇ_C + Ẇ_QPC^DQD`; negative when the engine delivers power.
    pub wdot_tot: f64,
    /// `−Ẇ_tot / Q̇_H`, NaN when `Q̇_H` is at rounding level.
    pub eta: f64,
    pub eta_carnot: f64,
    pub engine_regime: bool,
    pub sigma_dqd: f64,
    pub sigma_qpc: f64,
    pub sigma_tot: f64,
    /// `Σ_α (Ẇ_α + Q̇_α)`, zero at the steady state.
    pub first_law_residual: f64,
}

impl ThermoReport {
    /// Largest magnitude among the heat and work currents.
    pub fn current_scale(&self) -> f64 {
        [
            self.qdot_h,
            self.qdot_c,
            self.qdot_qpc,
            self.wdot_h,
            self.wdot_c,
            self.wdot_qpc,
        ]
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// All currents at the steady state `rho` of the master equation for `p`.
pub fn currents(p: &EngineParams, q: &QpcParams, rho: &Operator) -> Result<ThermoReport> {
    let model = JointModel::build(p, q, true)?;
    let joint = model.space.embed(rho, &model.units)?;
    let v = &model.interactions;
    let h = &model.unit_hamiltonians;
    let v_qpc = v.v_qpc.as_ref().expect("QPC unit present");
    let h_qpc = h.qpc.as_ref().expect("QPC unit present");

    let d = |v: &Operator, a: &Operator| {
        adjoint_dissipator(v, a)
            .expectation_in(&joint)
            .map(|z| z.re)
    };

    let qdot_h = -d(&v.v_hot, &h.hot)?;
    let qdot_c = -d(&v.v_cold, &h.cold)?;
    let qdot_qpc = -d(v_qpc, h_qpc)?;
    let wdot_h = d(&v.v_hot, &(&model.h_dqd + &h.hot))?;
    let wdot_c = d(&v.v_cold, &(&model.h_dqd + &h.cold))?;
    let wdot_qpc = d(v_qpc, &(&model.h_dqd + h_qpc))?;
    let dqd_q = d(v_qpc, &model.h_dqd)?;
    let wdot_qpc_watt = -qdot_qpc;
    let wdot_tot = wdot_h + wdot_c + dqd_q;
    let first_law_residual = (wdot_h + qdot_h) + (wdot_c + qdot_c) + (wdot_qpc + qdot_qpc);

    let obs = dot_observables(rho)?;
    let eff = efficiency(p);
    let (sigma_dqd, sigma_qpc) = entropy_rates(p, q, qdot_h, qdot_c, qdot_qpc);
    Ok(ThermoReport {
        dephasing: p.dephasing,
        j_n: p.gamma_h * (p.f_hot() - obs.n1),
        n1: obs.n1,
        n2: obs.n2,
        coh_re: obs.coherence.re,
        coh_im: obs.coherence.im,
        qdot_h,
        qdot_c,
        qdot_qpc,
        wdot_h,
        wdot_c,
        wdot_qpc,
        wdot_qpc_dqd: dqd_q,
        wdot_qpc_watt,
        wdot_tot,
        eta: if qdot_h.abs() > current_noise_floor(p) {
            -wdot_tot / qdot_h
        } else {
            f64::NAN
        },
        eta_carnot: eff.eta_carnot,
        engine_regime: eff.engine_regime,
        sigma_dqd,
        sigma_qpc,
        sigma_tot: sigma_dqd + sigma_qpc,
        first_law_residual,
    })
}

/// Solves the steady state for `p` and reports its currents.
pub fn steady_state_report(p: &EngineParams, q: &QpcParams) -> Result<ThermoReport> {
    let rho = ness(&build_liouvillian(p)?)?;
    currents(p, q, &rho)
}

/// Closed-form efficiency of the tightly coupled engine.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Efficiency {
    /// `1 − (ε₂ − μ_C)/(ε₁ − μ_H)`
    pub eta: f64,
    pub eta_carnot: f64,
    /// Particles flow hot → cold and each one turns `(ε₁ − μ_H) − (ε₂ − μ_C) > 0`
    /// into work.
    pub engine_regime: bool,
}

pub fn efficiency(p: &EngineParams) -> Efficiency {
    let (gap_h, gap_c) = (p.eps1 - p.mu_h, p.eps2 - p.mu_c);
    Efficiency {
        eta: 1.0 - gap_c / gap_h,
        eta_carnot: 1.0 - p.temp_c / p.temp_h,
        engine_regime: p.delta_f() > 0.0 && gap_h - gap_c > 0.0,
    }
}

/// `σ_DQD = −(Q̇_H/T_H + Q̇_C/T_C)` and `σ_QPC = −Q̇_QPC/T_QPC = eV Γ⟨n₁⟩/T_QPC`.
///
/// Only the occupation-dependent detector current enters; its background
/// does not involve the dots.
pub fn entropy_rates(
    p: &EngineParams,
    q: &QpcParams,
    qdot_h: f64,
    qdot_c: f64,
    qdot_qpc: f64,
) -> (f64, f64) {
    (-(qdot_h / p.temp_h + qdot_c / p.temp_c), -qdot_qpc / q.temp)
}

/// Particle current of the dephased engine in closed form,
/// `4|t|²Δf γ_Hγ_C g / (γ_Hγ_C(4Δε² + g²) + 4|t|²γ̃ g)` with `g = Γ + γ̃`.
pub fn closed_form_current(p: &EngineParams) -> f64 {
    let t2 = p.t_hop.norm_sqr();
    let gg = p.gamma_h * p.gamma_c;
    let g = p.dephasing + p.gamma_sum();
    let de = p.detuning();
    4.0 * t2 * p.delta_f() * gg * g / (gg * (4.0 * de * de + g * g) + 4.0 * t2 * p.gamma_sum() * g)
}

/// Dephasing rate that maximizes the current and extremizes the
/// occupations, `2|Δε| − γ̃`. Negative when dephasing never helps.
pub fn gamma_ext(p: &EngineParams) -> f64 {
    2.0 * p.detuning().abs() - p.gamma_sum()
}

/// Dephasing rate at which current and occupations return to their
/// unmonitored values, `4Δε²/γ̃ − γ̃`.
pub fn gamma_zero(p: &EngineParams) -> f64 {
    4.0 * p.detuning().powi(2) / p.gamma_sum() - p.gamma_sum()
}

/// Heat current obtained by attributing the full dot energy to the hot
/// dissipator, `Tr[H_DQD 𝓛_H(ρ)]`, and the entropy production it implies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NaiveAccounting {
    pub qdot_h: f64,
    pub sigma: f64,
}

/// Requires `μ_H = μ_C = 0`, where the naive entropy production reduces to
/// `(β_C − β_H) Q̇_H`.
pub fn naive_heat_current(p: &EngineParams) -> Result<NaiveAccounting> {
    if p.mu_h != 0.0 || p.mu_c != 0.0 {
        return Err(Error::InvalidParameter(
            "naive accounting assumes zero chemical potentials".into(),
        ));
    }
    let b = build_liouvillian(p)?;
    let rho = ness(&b)?;
    let mut hot = crate::numkernel::Superoperator::zeros(4);
    for ch in [Channel::HotIn, Channel::HotOut] {
        let jump = b.jump(ch).expect("hot channel");
        hot += &crate::lindblad::dissipator_superop(&jump.op)
            .scale(crate::numkernel::C64::new(jump.rate, 0.0));
    }
    let qdot_h = b.hamiltonian.expectation_in(&hot.apply(&rho)?)?.re;
    Ok(NaiveAccounting {
        qdot_h,
        sigma: (1.0 / p.temp_c - 1.0 / p.temp_h) * qdot_h,
    })
}

/// The engine used to show that the naive heat current breaks the second
/// law: hot side above cold, but `f_H(ε₁) < f_C(ε₂)`.
pub fn naive_demo_params() -> EngineParams {
    EngineParams {
        eps1: 3.0,
        eps2: 0.5,
        t_hop: crate::numkernel::C64::new(0.1, 0.0),
        gamma_h: 0.05,
        gamma_c: 0.05,
        temp_h: 3.0,
        temp_c: 1.0,
        mu_h: 0.0,
        mu_c: 0.0,
        dephasing: 0.0,
    }
}
