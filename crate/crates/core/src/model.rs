//! Physical operators and states of the engine.
//!
//! Units: `ħ = k_B = 1`, every energy and rate in the same absolute unit.
//! Single-mode basis ordering is `(empty, occupied)`, so an annihilator is
//! `[[0, 1], [0, 0]]` and a unit with occupation `f` is `diag(1 − f, f)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numkernel::{kron, kron_all, partial_trace, Operator, C64};

/// Parameters of the double dot, its two reservoirs and the dephasing rate.
#[derive(Clone, Debug, PartialEq)]
pub struct EngineParams {
    pub eps1: f64,
    pub eps2: f64,
    /// Interdot tunnelling amplitude; `H ∋ t c₁†c₂ + t* c₂†c₁`.
    pub t_hop: C64,
    pub gamma_h: f64,
    pub gamma_c: f64,
    pub temp_h: f64,
    pub temp_c: f64,
    pub mu_h: f64,
    pub mu_c: f64,
    /// Measurement-induced dephasing rate Γ.
    pub dephasing: f64,
}

impl EngineParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.eps1,
            self.eps2,
            self.t_hop.re,
            self.t_hop.im,
            self.gamma_h,
            self.gamma_c,
            self.temp_h,
            self.temp_c,
            self.mu_h,
            self.mu_c,
            self.dephasing,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "non-finite engine parameter".into(),
            ));
        }
        if self.gamma_h <= 0.0 || self.gamma_c <= 0.0 {
            return Err(Error::InvalidParameter(
                "reservoir couplings must be positive".into(),
            ));
        }
        if self.temp_h <= 0.0 || self.temp_c <= 0.0 {
            return Err(Error::InvalidParameter(
                "temperatures must be positive".into(),
            ));
        }
        if self.dephasing < 0.0 {
            return Err(Error::InvalidParameter(
                "dephasing rate must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn with_dephasing(&self, dephasing: f64) -> Self {
        Self {
            dephasing,
            ..self.clone()
        }
    }

    /// Hot-reservoir occupation at the first dot's energy.
    pub fn f_hot(&self) -> f64 {
        fermi(self.eps1, self.mu_h, self.temp_h)
    }

    /// Cold-reservoir occupation at the second dot's energy.
    pub fn f_cold(&self) -> f64 {
        fermi(self.eps2, self.mu_c, self.temp_c)
    }

    pub fn delta_f(&self) -> f64 {
        self.f_hot() - self.f_cold()
    }

    /// Detuning `ε₂ − ε₁`.
    pub fn detuning(&self) -> f64 {
        self.eps2 - self.eps1
    }

    /// Total reservoir coupling `γ_H + γ_C`.
    pub fn gamma_sum(&self) -> f64 {
        self.gamma_h + self.gamma_c
    }
}

/// Microscopic parameters of the quantum point contact and its collision unit.
#[derive(Clone, Debug, PartialEq)]
pub struct QpcParams {
    /// Change of the tunnelling amplitude when dot 1 is occupied.
    pub chi00: f64,
    pub g_l: f64,
    pub g_r: f64,
    pub temp: f64,
    /// Baseline tunnelling amplitude, also the intra-unit hopping.
    pub t00: f64,
    /// Qubit energy Ω of the two-qubit unit.
    pub omega: f64,
    pub mu_r: f64,
    pub mu_l: f64,
}

impl QpcParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.chi00, self.g_l, self.g_r, self.temp, self.t00, self.omega, self.mu_r, self.mu_l,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite QPC parameter".into()));
        }
        if self.temp <= 0.0 {
            return Err(Error::InvalidParameter(
                "QPC temperature must be positive".into(),
            ));
        }
        if self.g_l <= 0.0 || self.g_r <= 0.0 {
            return Err(Error::InvalidParameter(
                "QPC densities of states must be positive".into(),
            ));
        }
        if self.mu_r < self.mu_l {
            return Err(Error::InvalidParameter("QPC requires mu_r >= mu_l".into()));
        }
        Ok(())
    }

    /// Bias `eV = μ_R − μ_L`.
    pub fn bias(&self) -> f64 {
        self.mu_r - self.mu_l
    }
}

/// Fermi–Dirac occupation, saturating to 0/1 instead of overflowing.
pub fn fermi(eps: f64, mu: f64, temp: f64) -> f64 {
    debug_assert!(temp > 0.0, "temperature must be positive");
    let x = (eps - mu) / temp;
    if x >= 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Jordan–Wigner annihilators for `n_modes` fermionic modes.
///
/// Mode 0 is the most significant tensor factor; mode `j` carries a parity
/// string on modes `0..j`.
pub fn jw_ops(n_modes: usize) -> Result<Vec<Operator>> {
    if !(1..=8).contains(&n_modes) {
        return Err(Error::InvalidParameter(format!(
            "jw_ops supports 1..=8 modes, got {n_modes}"
        )));
    }
    let lower = Operator::from_real_rows(2, &[0.0, 1.0, 0.0, 0.0])?;
    let parity = Operator::from_diagonal(&[1.0, -1.0]);
    let ident = Operator::identity(2);
    Ok((0..n_modes)
        .map(|j| {
            let factors: Vec<&Operator> = (0..n_modes)
                .map(|k| match k.cmp(&j) {
                    std::cmp::Ordering::Less => &parity,
                    std::cmp::Ordering::Equal => &lower,
                    std::cmp::Ordering::Greater => &ident,
                })
                .collect();
            kron_all(&factors)
        })
        .collect())
}

/// Single-level fermionic modes of the joint dot + environment space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Hot,
    Dot1,
    Dot2,
    Cold,
    QpcRight,
    QpcLeft,
}

impl Mode {
    pub fn all() -> [Mode; 6] {
        [
            Mode::Hot,
            Mode::Dot1,
            Mode::Dot2,
            Mode::Cold,
            Mode::QpcRight,
            Mode::QpcLeft,
        ]
    }
}

/// Tensor order of the modes. Only the canonical order is constructible: it
/// makes every coupling nearest-neighbour so no parity string ever crosses a
/// traced-out unit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeOrdering {
    modes: Vec<Mode>,
}

impl ModeOrdering {
    pub fn canonical(include_qpc: bool) -> Self {
        let mut modes = vec![Mode::Hot, Mode::Dot1, Mode::Dot2, Mode::Cold];
        if include_qpc {
            modes.extend([Mode::QpcRight, Mode::QpcLeft]);
        }
        Self { modes }
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn position(&self, mode: Mode) -> Option<usize> {
        self.modes.iter().position(|&m| m == mode)
    }

    pub fn includes_qpc(&self) -> bool {
        self.position(Mode::QpcRight).is_some()
    }
}

/// Jordan–Wigner annihilators `c₁, c₂` of the isolated double dot (dim 4,
/// basis index `2·n₁ + n₂`).
pub fn dot_operators() -> (Operator, Operator) {
    let ops = jw_ops(2).expect("two modes are always valid");
    (ops[0].clone(), ops[1].clone())
}

/// String-free single-dot lowering operators `σ ⊗ I` and `I ⊗ σ`.
///
/// They differ from the Jordan–Wigner pair only by a parity sign on the
/// second mode, which matters solely for coherences between sectors of
/// different fermion parity. These are the forms the reservoir collisions
/// generate in the canonical mode order, so the master-equation jumps use them.
pub fn local_lowering() -> (Operator, Operator) {
    let sigma = Operator::from_real_rows(2, &[0.0, 1.0, 0.0, 0.0]).expect("2x2");
    let ident = Operator::identity(2);
    (kron(&sigma, &ident), kron(&ident, &sigma))
}

fn hamiltonian_from_modes(p: &EngineParams, c1: &Operator, c2: &Operator) -> Operator {
    let n1 = &c1.dagger() * c1;
    let n2 = &c2.dagger() * c2;
    let hop = &c1.dagger() * c2;
    let mut h = &n1 * p.eps1 + &n2 * p.eps2;
    h += &(&hop * p.t_hop);
    h += &(&hop.dagger() * p.t_hop.conj());
    h
}

/// `H = ε₁ n₁ + ε₂ n₂ + t c₁†c₂ + t* c₂†c₁` on the four-dimensional dot space.
pub fn build_h_dqd(p: &EngineParams) -> Operator {
    let (c1, c2) = dot_operators();
    hamiltonian_from_modes(p, &c1, &c2)
}

/// Initial states of the collision units, each a single mode.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitStates {
    pub hot: Operator,
    pub cold: Operator,
    /// Right QPC lead qubit: occupied.
    pub right: Operator,
    /// Left QPC lead qubit: empty.
    pub left: Operator,
}

impl UnitStates {
    fn for_mode(&self, mode: Mode) -> Option<&Operator> {
        match mode {
            Mode::Hot => Some(&self.hot),
            Mode::Cold => Some(&self.cold),
            Mode::QpcRight => Some(&self.right),
            Mode::QpcLeft => Some(&self.left),
            Mode::Dot1 | Mode::Dot2 => None,
        }
    }
}

pub fn build_unit_states(p: &EngineParams) -> UnitStates {
    let occupied = |f: f64| Operator::from_diagonal(&[1.0 - f, f]);
    UnitStates {
        hot: occupied(p.f_hot()),
        cold: occupied(p.f_cold()),
        right: occupied(1.0),
        left: occupied(0.0),
    }
}

/// Mode operators on the joint dot + environment space.
#[derive(Clone, Debug)]
pub struct JointSpace {
    ordering: ModeOrdering,
    annihilators: Vec<Operator>,
}

impl JointSpace {
    pub fn new(ordering: ModeOrdering) -> Self {
        let annihilators =
            jw_ops(ordering.modes().len()).expect("canonical ordering has <= 6 modes");
        Self {
            ordering,
            annihilators,
        }
    }

    pub fn ordering(&self) -> &ModeOrdering {
        &self.ordering
    }

    pub fn dim(&self) -> usize {
        1 << self.annihilators.len()
    }

    pub fn subsystem_dims(&self) -> Vec<usize> {
        vec![2; self.annihilators.len()]
    }

    pub fn annihilator(&self, mode: Mode) -> Option<&Operator> {
        self.ordering.position(mode).map(|k| &self.annihilators[k])
    }

    pub fn number(&self, mode: Mode) -> Option<Operator> {
        self.annihilator(mode).map(|c| &c.dagger() * c)
    }

    fn dot_positions(&self) -> [usize; 2] {
        [
            self.ordering.position(Mode::Dot1).expect("dot 1 present"),
            self.ordering.position(Mode::Dot2).expect("dot 2 present"),
        ]
    }

    /// `ω_H ⊗ ρ ⊗ ω_C (⊗ ω_R ⊗ ω_L)` in mode order.
    pub fn embed(&self, rho: &Operator, units: &UnitStates) -> Result<Operator> {
        if rho.dim() != 4 {
            return Err(Error::DimensionMismatch(format!(
                "dot state must have dim 4, got {}",
                rho.dim()
            )));
        }
        let mut factors: Vec<&Operator> = Vec::new();
        for &mode in self.ordering.modes() {
            match mode {
                Mode::Dot1 => factors.push(rho),
                Mode::Dot2 => {}
                other => factors.push(units.for_mode(other).expect("unit mode")),
            }
        }
        kron_all(&factors).with_dims(self.subsystem_dims())
    }

    /// Product state of every unit, with identity on the dots replaced by
    /// nothing: an operator on the environment modes only.
    pub fn environment_state(&self, units: &UnitStates) -> Operator {
        let factors: Vec<&Operator> = self
            .ordering
            .modes()
            .iter()
            .filter_map(|&m| units.for_mode(m))
            .collect();
        kron_all(&factors)
    }

    /// Reduced dot state `Tr_E[joint]`.
    pub fn reduce(&self, joint: &Operator) -> Result<Operator> {
        let out = partial_trace(joint, &self.subsystem_dims(), &self.dot_positions())?;
        Ok(out.with_dims(vec![4]).expect("dim 4"))
    }
}

/// Interaction operators `v_α` on the joint space. `v_QPC` is present only
/// when the ordering includes the QPC unit.
#[derive(Clone, Debug)]
pub struct Interactions {
    pub v_hot: Operator,
    pub v_cold: Operator,
    pub v_qpc: Option<Operator>,
}

/// `v_H = √γ_H (c_H†c₁ + c₁†c_H)`, `v_C = √γ_C (c_C†c₂ + c₂†c_C)`,
/// `v_QPC = √Γ n₁ (a_R†a_L + a_L†a_R)`.
pub fn build_interactions(p: &EngineParams, space: &JointSpace) -> Interactions {
    let mode = |m: Mode| space.annihilator(m).expect("mode in ordering");
    let exchange = |a: &Operator, b: &Operator| {
        let ab = &a.dagger() * b;
        &ab + &ab.dagger()
    };
    let v_hot = &exchange(mode(Mode::Hot), mode(Mode::Dot1)) * p.gamma_h.sqrt();
    let v_cold = &exchange(mode(Mode::Cold), mode(Mode::Dot2)) * p.gamma_c.sqrt();
    let v_qpc = space.ordering().includes_qpc().then(|| {
        let n1 = space.number(Mode::Dot1).expect("dot 1");
        let hop = exchange(mode(Mode::QpcRight), mode(Mode::QpcLeft));
        &(&n1 * &hop) * p.dephasing.sqrt()
    });
    Interactions {
        v_hot,
        v_cold,
        v_qpc,
    }
}

/// Bare Hamiltonians of the collision units on the joint space.
#[derive(Clone, Debug)]
pub struct UnitHamiltonians {
    /// `(ε₁ − μ_H) c_H†c_H`
    pub hot: Operator,
    /// `(ε₂ − μ_C) c_C†c_C`
    pub cold: Operator,
    /// `(Ω − μ_R) n_R + (Ω − μ_L) n_L + 𝒯 (a_R†a_L + a_L†a_R)`
    pub qpc: Option<Operator>,
}

pub fn build_unit_hamiltonians(
    p: &EngineParams,
    q: &QpcParams,
    space: &JointSpace,
) -> UnitHamiltonians {
    let number = |m: Mode| space.number(m).expect("mode in ordering");
    let hot = &number(Mode::Hot) * (p.eps1 - p.mu_h);
    let cold = &number(Mode::Cold) * (p.eps2 - p.mu_c);
    let qpc = space.ordering().includes_qpc().then(|| {
        let a_r = space.annihilator(Mode::QpcRight).expect("R");
        let a_l = space.annihilator(Mode::QpcLeft).expect("L");
        let hop = &a_r.dagger() * a_l;
        let mut h = &number(Mode::QpcRight) * (q.omega - q.mu_r);
        h += &(&number(Mode::QpcLeft) * (q.omega - q.mu_l));
        h += &(&(&hop + &hop.dagger()) * q.t00);
        h
    });
    UnitHamiltonians { hot, cold, qpc }
}

/// Everything the collision and thermodynamics layers need on the joint
/// space, built once per parameter set.
#[derive(Clone, Debug)]
pub struct JointModel {
    pub space: JointSpace,
    pub units: UnitStates,
    /// Dot Hamiltonian embedded in the joint space.
    pub h_dqd: Operator,
    pub unit_hamiltonians: UnitHamiltonians,
    pub interactions: Interactions,
}

impl JointModel {
    pub fn build(p: &EngineParams, q: &QpcParams, include_qpc: bool) -> Result<Self> {
        p.validate()?;
        q.validate()?;
        let space = JointSpace::new(ModeOrdering::canonical(include_qpc));
        let c1 = space.annihilator(Mode::Dot1).expect("dot 1").clone();
        let c2 = space.annihilator(Mode::Dot2).expect("dot 2").clone();
        let h_dqd = hamiltonian_from_modes(p, &c1, &c2);
        Ok(Self {
            units: build_unit_states(p),
            unit_hamiltonians: build_unit_hamiltonians(p, q, &space),
            interactions: build_interactions(p, &space),
            h_dqd,
            space,
        })
    }

    /// Total collision Hamiltonian `H_DQD + Σ H_α + Σ v_α / √τ`.
    pub fn collision_hamiltonian(&self, tau: f64) -> Operator {
        let scale = 1.0 / tau.sqrt();
        let mut h = self.h_dqd.clone();
        h += &self.unit_hamiltonians.hot;
        h += &self.unit_hamiltonians.cold;
        h += &(&self.interactions.v_hot * scale);
        h += &(&self.interactions.v_cold * scale);
        if let Some(hq) = &self.unit_hamiltonians.qpc {
            h += hq;
        }
        if let Some(vq) = &self.interactions.v_qpc {
            h += &(vq * scale);
        }
        h
    }
}

/// Dephasing rate `Γ = 2π g_L g_R χ₀₀² eV coth(eV / 2T)` of the detector.
/// At zero bias it tends to `4π g_L g_R χ₀₀² T`.
pub fn dephasing_rate_from_qpc(q: &QpcParams) -> f64 {
    let x = q.bias() / (2.0 * q.temp);
    // x·coth(x), with its series near zero
    let x_coth_x = if x.abs() < 1e-4 {
        1.0 + x * x / 3.0 - x.powi(4) / 45.0
    } else {
        x / x.tanh()
    };
    2.0 * PI * q.g_l * q.g_r * q.chi00 * q.chi00 * 2.0 * q.temp * x_coth_x
}
