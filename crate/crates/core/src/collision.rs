//! Repeated-interactions picture: the dots collide with fresh reservoir and
//! detector units, and the local master equation emerges as `τ → 0`.

use crate::error::{Error, Result};
use crate::lindblad::{build_liouvillian, LiouvillianBundle, POSITIVITY_TOL};
use crate::model::{EngineParams, JointModel, JointSpace, QpcParams, UnitStates};
use crate::numkernel::{devectorize, matexp, vectorize, CMatrix, Operator, Superoperator, C64};

/// Trace-norm tolerance of the collision fixed point.
pub const FIXED_POINT_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct CollisionConfig {
    /// Duration of one collision.
    pub tau: f64,
    /// Budget of collisions for the fixed-point search.
    pub n_steps: u64,
    pub include_qpc: bool,
    pub params: EngineParams,
    pub qpc: QpcParams,
}

impl CollisionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "collision time must be positive, got {}",
                self.tau
            )));
        }
        if self.n_steps == 0 {
            return Err(Error::InvalidParameter("n_steps must be at least 1".into()));
        }
        self.params.validate()?;
        self.qpc.validate()
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        Self {
            tau,
            ..self.clone()
        }
    }
}

/// A collision time small against every rate of the dot, so the `O(τ)`
/// corrections stay visible above rounding but far below the signal.
pub fn default_tau(p: &EngineParams) -> f64 {
    let scale = p
        .gamma_sum()
        .max(p.dephasing)
        .max(p.t_hop.norm())
        .max(p.detuning().abs());
    1e-3 / scale
}

/// Joint operators and the one-collision unitary for a configuration.
#[derive(Clone, Debug)]
pub struct CollisionModel {
    config: CollisionConfig,
    joint: JointModel,
    unitary: Operator,
}

impl CollisionModel {
    pub fn new(cfg: &CollisionConfig) -> Result<Self> {
        cfg.validate()?;
        let joint = JointModel::build(&cfg.params, &cfg.qpc, cfg.include_qpc)?;
        Self::from_joint(cfg, joint)
    }

    /// Uses caller-supplied joint operators, e.g. with some couplings removed.
    pub fn from_joint(cfg: &CollisionConfig, joint: JointModel) -> Result<Self> {
        let h = joint.collision_hamiltonian(cfg.tau);
        let unitary = matexp(&h.scale(C64::new(0.0, -cfg.tau)))?;
        Ok(Self {
            config: cfg.clone(),
            joint,
            unitary,
        })
    }

    pub fn config(&self) -> &CollisionConfig {
        &self.config
    }

    pub fn joint(&self) -> &JointModel {
        &self.joint
    }

    pub fn unitary(&self) -> &Operator {
        &self.unitary
    }

    /// `Tr_E[U (ρ ⊗ ω_E) U†]` for a validated dot state.
    pub fn step(&self, rho: &Operator) -> Result<Operator> {
        rho.check_density(POSITIVITY_TOL)?;
        self.step_linear(rho)
    }

    // The same map without state validation, for building its matrix.
    fn step_linear(&self, rho: &Operator) -> Result<Operator> {
        let joint = self.joint.space.embed(rho, &self.joint.units)?;
        let evolved = &(&self.unitary * &joint) * &self.unitary.dagger();
        self.joint.space.reduce(&evolved)
    }

    /// Matrix of one collision acting on vectorized dot operators.
    pub fn channel(&self) -> Superoperator {
        Superoperator::from_map(4, |e| self.step_linear(e).expect("dim-4 basis element"))
    }

    /// The master equation this collision model should reproduce. Without the
    /// detector unit no dephasing is generated, so Γ is dropped.
    pub fn target(&self) -> Result<LiouvillianBundle> {
        let p = if self.config.include_qpc {
            self.config.params.clone()
        } else {
            self.config.params.with_dephasing(0.0)
        };
        build_liouvillian(&p)
    }
}

pub fn collision_step(rho: &Operator, cfg: &CollisionConfig) -> Result<Operator> {
    CollisionModel::new(cfg)?.step(rho)
}

/// Fixed point of the collision map, starting from the maximally mixed state.
pub fn collision_ness(cfg: &CollisionConfig) -> Result<Operator> {
    collision_ness_from(cfg, &Operator::from_diagonal(&[0.25; 4]))
}

/// Fixed point reached from `rho0` after `n → ∞` collisions.
///
/// The channel is squared repeatedly, so `k` squarings cover `2^k`
/// collisions. Iteration stops once successive iterates agree to
/// [`FIXED_POINT_TOL`] in trace norm while still contracting.
pub fn collision_ness_from(cfg: &CollisionConfig, rho0: &Operator) -> Result<Operator> {
    rho0.check_density(POSITIVITY_TOL)?;
    let model = CollisionModel::new(cfg)?;
    let channel = model.channel();
    let v0 = vectorize(rho0);
    let normalized = |m: &CMatrix| -> Result<Operator> {
        let op = devectorize(&(m * &v0))?.hermitian_part();
        Ok(op.scale(C64::new(1.0 / op.trace().re, 0.0)))
    };

    let mut power = channel.entries().clone();
    let mut steps: u64 = 1;
    let mut prev = normalized(&power)?;
    let mut prev_diff = f64::INFINITY;
    loop {
        if steps >= cfg.n_steps {
            return Err(Error::NonConvergence {
                what: "collision fixed point",
                norm: channel.norm(),
                detail: format!("{steps} collisions, last residual {prev_diff:e}"),
            });
        }
        power = &power * &power;
        steps = steps.saturating_mul(2);
        let next = normalized(&power)?;
        let diff = (&next - &prev).trace_norm();
        if diff <= FIXED_POINT_TOL && diff < prev_diff {
            let residual = (&channel.apply(&next)? - &next).trace_norm();
            if residual <= FIXED_POINT_TOL {
                next.check_density(POSITIVITY_TOL)?;
                return Ok(next);
            }
        }
        prev = next;
        prev_diff = diff;
    }
}

/// Emergent dissipator of a single unit,
/// `ρ ↦ Tr_E[v (ρ ⊗ ω) v − ½{v², ρ ⊗ ω}]`.
pub fn ri_dissipator(space: &JointSpace, units: &UnitStates, v: &Operator) -> Superoperator {
    let v2 = v * v;
    Superoperator::from_map(4, |e| {
        let joint = space.embed(e, units).expect("dim-4 basis element");
        let sandwich = &(v * &joint) * v;
        let anti = joint.anticommutator(&v2);
        let out = &sandwich - &(&anti * 0.5);
        space.reduce(&out).expect("joint dims")
    })
}

/// Sum of the emergent dissipators of every unit present in `model`.
pub fn emergent_dissipator(model: &JointModel) -> Superoperator {
    let v = &model.interactions;
    let d = |op: &Operator| ri_dissipator(&model.space, &model.units, op);
    let mut total = &d(&v.v_hot) + &d(&v.v_cold);
    if let Some(vq) = &v.v_qpc {
        total += &d(vq);
    }
    total
}

/// `‖(Φ_τ(ρ) − ρ)/τ − L(ρ)‖`, the gap between one collision and the master
/// equation, which closes linearly in `τ`.
pub fn generator_residual(cfg: &CollisionConfig, rho: &Operator) -> Result<f64> {
    let model = CollisionModel::new(cfg)?;
    let target = model.target()?;
    let stepped = model.step(rho)?;
    let finite = (&stepped - rho).scale(C64::new(1.0 / cfg.tau, 0.0));
    Ok((&finite - &target.l0.apply(rho)?).norm())
}

/// Choi matrix `Σ_ij E_ij ⊗ Φ(E_ij)` of a map on `dim × dim` operators.
pub fn choi_matrix(channel: &Superoperator) -> Operator {
    let d = channel.dim();
    let s = channel.entries();
    Operator::from_fn(d * d, |r, c| {
        let (i, k) = (r / d, r % d);
        let (j, l) = (c / d, c % d);
        s[(k + l * d, i + j * d)]
    })
}

/// Smallest eigenvalue of the Choi matrix; non-negative for a completely
/// positive map.
pub fn choi_min_eigenvalue(channel: &Superoperator) -> f64 {
    choi_matrix(channel)
        .hermitian_part()
        .hermitian_eigenvalues()
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}
