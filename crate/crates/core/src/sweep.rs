//! Measurement-strength sweeps, law checks and the collision comparison
//! behind the `dqd` tool.
//!
//! ```
//! use dqd_thermo::model::{EngineParams, QpcParams};
//! use dqd_thermo::numkernel::C64;
//! use dqd_thermo::sweep::run_sweep;
//!
//! let p = EngineParams {
//!     eps1: 4.0, eps2: 4.2, t_hop: C64::new(0.05, 0.0),
//!     gamma_h: 0.05, gamma_c: 0.05, temp_h: 3.0, temp_c: 1.0,
//!     mu_h: 1.0, mu_c: 3.0, dephasing: 0.0,
//! };
//! let q = QpcParams {
//!     chi00: 0.1, g_l: 0.5, g_r: 0.5, temp: 0.1, t00: 1.0,
//!     omega: 20.0, mu_r: 20.1, mu_l: 19.9,
//! };
//! let gammas: Vec<f64> = (0..=20).map(|i| 0.05 * i as f64).collect();
//! let sweep = run_sweep(&p, &q, &gammas);
//! let peak = sweep.current_max.unwrap();
//! assert!((peak.gamma - 0.3).abs() < 1e-6);
//! ```

use std::io::Write;

use rayon::prelude::*;

use crate::collision::{
    collision_ness, default_tau, emergent_dissipator, generator_residual, CollisionConfig,
};
use crate::error::{Error, Result};
use crate::fcs::{fcs_report, FcsReport};
use crate::lindblad::{
    build_liouvillian, dissipator_superop, ness_from_spectrum, spectrum, LiouvillianBundle,
};
use crate::model::{local_lowering, EngineParams, JointModel, QpcParams};
use crate::numkernel::{drazin_from_spectrum, Operator, DEFAULT_ZERO_TOL};
use crate::thermo::{
    current_noise_floor, currents, efficiency, gamma_ext, gamma_zero, naive_heat_current,
    Efficiency, NaiveAccounting, ThermoReport,
};

/// First-law tolerance relative to the largest heat or work current.
pub const FIRST_LAW_TOL: f64 = 1e-11;

/// Slack for the entropy production, relative to the largest current over
/// the lowest temperature.
pub const SECOND_LAW_TOL: f64 = 1e-11;

/// Header of the sweep table, in column order.
pub const CSV_HEADER: [&str; 20] = [
    "gamma",
    "J_N",
    "n1",
    "n2",
    "coh_re",
    "coh_im",
    "Qdot_H",
    "Qdot_C",
    "Qdot_QPC",
    "Wdot_H",
    "Wdot_C",
    "Wdot_QPC_dqd",
    "Wdot_QPC_watt",
    "Wdot_tot",
    "eta",
    "sigma_DQD",
    "sigma_QPC",
    "M",
    "D",
    "turr",
];

/// Why a sweep row or law check did not pass cleanly.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Solver(String),
    FirstLaw { residual: f64, scale: f64 },
    SecondLaw { sigma_dqd: f64, sigma_qpc: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Solver(msg) => write!(f, "solver failure: {msg}"),
            Violation::FirstLaw { residual, scale } => {
                write!(
                    f,
                    "first law residual {residual:.3e} at current scale {scale:.3e}"
                )
            }
            Violation::SecondLaw {
                sigma_dqd,
                sigma_qpc,
            } => {
                write!(f, "negative entropy production: sigma_DQD {sigma_dqd:.3e}, sigma_QPC {sigma_qpc:.3e}")
            }
        }
    }
}

/// First- and second-law checks on a steady-state report. Both tolerances
/// are relative to the largest current, with [`current_noise_floor`] as an
/// absolute floor so that equilibrium states are not judged on rounding.
pub fn law_violations(p: &EngineParams, q: &QpcParams, r: &ThermoReport) -> Vec<Violation> {
    let mut out = Vec::new();
    let scale = r.current_scale();
    let floor = current_noise_floor(p);
    if !(r.first_law_residual.abs() <= FIRST_LAW_TOL * scale + floor) {
        out.push(Violation::FirstLaw {
            residual: r.first_law_residual,
            scale,
        });
    }
    let slack = (SECOND_LAW_TOL * scale + floor) / p.temp_h.min(p.temp_c).min(q.temp);
    if !(r.sigma_dqd >= -slack && r.sigma_qpc >= -slack) {
        out.push(Violation::SecondLaw {
            sigma_dqd: r.sigma_dqd,
            sigma_qpc: r.sigma_qpc,
        });
    }
    out
}

/// Everything computed at one measurement strength.
#[derive(Clone, Debug)]
pub struct PointEval {
    pub bundle: LiouvillianBundle,
    pub rho: Operator,
    pub thermo: ThermoReport,
    pub fcs: FcsReport,
}

/// Steady state, currents and counting statistics for `p`, sharing a single
/// eigendecomposition of the Liouvillian.
pub fn evaluate_point(p: &EngineParams, q: &QpcParams) -> Result<PointEval> {
    let bundle = build_liouvillian(p)?;
    let spec = spectrum(&bundle)?;
    let rho = ness_from_spectrum(&bundle, &spec)?;
    let thermo = currents(p, q, &rho)?;
    let fcs = fcs_report(&bundle, &spec, &rho, thermo.sigma_dqd)?;
    Ok(PointEval {
        bundle,
        rho,
        thermo,
        fcs,
    })
}

/// `dJ/dΓ = −γ_H d⟨n₁⟩/dΓ` with `dρ/dΓ = −L⁺ 𝒟[n₁] ρ`.
pub fn current_slope(p: &EngineParams) -> Result<f64> {
    let b = build_liouvillian(p)?;
    let spec = spectrum(&b)?;
    let rho = ness_from_spectrum(&b, &spec)?;
    let ld = drazin_from_spectrum(&b.l0, &spec, DEFAULT_ZERO_TOL)?;
    let (c1, _) = local_lowering();
    let n1 = &c1.dagger() * &c1;
    let drho = ld.apply(&dissipator_superop(&n1).apply(&rho)?)?;
    Ok(p.gamma_h * n1.expectation_in(&drho)?.re)
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub gamma: f64,
    pub thermo: Option<ThermoReport>,
    pub fcs: Option<FcsReport>,
    pub flags: Vec<Violation>,
}

impl SweepRow {
    fn evaluate(p: &EngineParams, q: &QpcParams, gamma: f64) -> Self {
        match evaluate_point(&p.with_dephasing(gamma), q) {
            Ok(e) => SweepRow {
                gamma,
                flags: law_violations(p, q, &e.thermo),
                thermo: Some(e.thermo),
                fcs: Some(e.fcs),
            },
            Err(e) => SweepRow {
                gamma,
                thermo: None,
                fcs: None,
                flags: vec![Violation::Solver(e.to_string())],
            },
        }
    }

    /// Values in [`CSV_HEADER`] order; NaN where undefined.
    pub fn values(&self) -> [f64; 20] {
        let nan = f64::NAN;
        let mut v = [nan; 20];
        v[0] = self.gamma;
        if let Some(t) = &self.thermo {
            let thermo = [
                t.j_n,
                t.n1,
                t.n2,
                t.coh_re,
                t.coh_im,
                t.qdot_h,
                t.qdot_c,
                t.qdot_qpc,
                t.wdot_h,
                t.wdot_c,
                t.wdot_qpc_dqd,
                t.wdot_qpc_watt,
                t.wdot_tot,
                t.eta,
                t.sigma_dqd,
                t.sigma_qpc,
            ];
            v[1..17].copy_from_slice(&thermo);
        }
        if let Some(f) = &self.fcs {
            v[17] = f.m;
            v[18] = f.d;
            v[19] = f.turr.unwrap_or(nan);
        }
        v
    }

    pub fn turr(&self) -> Option<f64> {
        self.fcs.and_then(|f| f.turr)
    }

    /// `D/J²`, the squared relative fluctuation per unit time.
    pub fn relative_fluctuation(&self) -> Option<f64> {
        self.fcs
            .filter(|f| f.turr.is_some())
            .map(|f| f.d / (f.j * f.j))
    }
}

/// A refined extremum of a sweep curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extremum {
    pub gamma: f64,
    pub value: f64,
    /// False when the best grid point sits on the edge of the sweep, in
    /// which case no refinement is attempted.
    pub interior: bool,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub params: EngineParams,
    pub qpc: QpcParams,
    /// Rows in increasing Γ.
    pub rows: Vec<SweepRow>,
    /// Closed-form `2|Δε| − γ̃`.
    pub gamma_ext: f64,
    /// Closed-form `4Δε²/γ̃ − γ̃`.
    pub gamma_zero: f64,
    pub current_max: Option<Extremum>,
    pub turr_min: Option<Extremum>,
    /// Where the TURR climbs back to its Γ = 0 value past its minimum.
    pub turr_recovery: Option<f64>,
    pub rel_fluct_min: Option<Extremum>,
    /// Where `D/J²` climbs back to its Γ = 0 value past its minimum.
    pub rel_fluct_recovery: Option<f64>,
}

impl SweepResult {
    pub fn flagged(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| !r.flags.is_empty())
    }

    pub fn has_solver_failure(&self) -> bool {
        self.rows
            .iter()
            .any(|r| r.flags.iter().any(|f| matches!(f, Violation::Solver(_))))
    }

    /// Writes the table with a header row. Floats use the shortest
    /// representation that round-trips.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::Io(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER).map_err(io)?;
        for row in &self.rows {
            w.serialize(row.values()).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))
    }
}

/// Evaluates every Γ in `gammas` (absolute units) in parallel, then locates
/// the current maximum and the minima of the TURR and of `D/J²`.
pub fn run_sweep(p: &EngineParams, q: &QpcParams, gammas: &[f64]) -> SweepResult {
    let mut sorted = gammas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rows: Vec<SweepRow> = sorted
        .par_iter()
        .map(|&g| SweepRow::evaluate(p, q, g))
        .collect();

    let current_max = locate_current_max(p, &rows);
    let turr_at = |g: f64| {
        evaluate_point(&p.with_dephasing(g), q)
            .ok()
            .and_then(|e| e.fcs.turr)
    };
    let rel_at = |g: f64| {
        evaluate_point(&p.with_dephasing(g), q)
            .ok()
            .filter(|e| e.fcs.turr.is_some())
            .map(|e| e.fcs.d / (e.fcs.j * e.fcs.j))
    };
    let turr_curve: Vec<Option<f64>> = rows.iter().map(SweepRow::turr).collect();
    let rel_curve: Vec<Option<f64>> = rows.iter().map(SweepRow::relative_fluctuation).collect();
    let turr_min = locate_min(&sorted, &turr_curve, &turr_at);
    let rel_fluct_min = locate_min(&sorted, &rel_curve, &rel_at);
    let turr_recovery = turr_min.and_then(|m| locate_recovery(&sorted, &turr_curve, m, &turr_at));
    let rel_fluct_recovery =
        rel_fluct_min.and_then(|m| locate_recovery(&sorted, &rel_curve, m, &rel_at));

    SweepResult {
        params: p.clone(),
        qpc: q.clone(),
        rows,
        gamma_ext: gamma_ext(p),
        gamma_zero: gamma_zero(p),
        current_max,
        turr_min,
        turr_recovery,
        rel_fluct_min,
        rel_fluct_recovery,
    }
}

// Grid maximum of J, refined by bisection on the sign of dJ/dΓ. The slope
// is analytic in ρ, so the root is located far more sharply than any
// comparison of nearly equal currents would allow.
fn locate_current_max(p: &EngineParams, rows: &[SweepRow]) -> Option<Extremum> {
    let (i, best) = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.thermo.as_ref().map(|t| (i, t.j_n)))
        .max_by(|a, b| a.1.total_cmp(&b.1))?;
    let edge = Extremum {
        gamma: rows[i].gamma,
        value: best,
        interior: false,
    };
    if i == 0 || i + 1 == rows.len() {
        return Some(edge);
    }
    let slope = |g: f64| current_slope(&p.with_dephasing(g));
    let (mut lo, mut hi) = (rows[i - 1].gamma, rows[i + 1].gamma);
    match (slope(lo), slope(hi)) {
        (Ok(a), Ok(b)) if a > 0.0 && b < 0.0 => {}
        _ => return Some(edge),
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match slope(mid) {
            Ok(s) if s > 0.0 => lo = mid,
            Ok(s) if s < 0.0 => hi = mid,
            Ok(_) => {
                lo = mid;
                hi = mid;
                break;
            }
            Err(_) => return Some(edge),
        }
    }
    let gamma = 0.5 * (lo + hi);
    let at_peak = p.with_dephasing(gamma);
    let rho = crate::lindblad::ness(&build_liouvillian(&at_peak).ok()?).ok()?;
    let value = crate::thermo::particle_current(&at_peak, &rho).ok()?;
    Some(Extremum {
        gamma,
        value,
        interior: true,
    })
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

// Interior grid minimum refined by golden-section search on its bracket.
fn locate_min(
    grid: &[f64],
    values: &[Option<f64>],
    f: &dyn Fn(f64) -> Option<f64>,
) -> Option<Extremum> {
    let (i, best) = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    let interior =
        i > 0 && i + 1 < grid.len() && values[i - 1].is_some() && values[i + 1].is_some();
    if !interior {
        return Some(Extremum {
            gamma: grid[i],
            value: best,
            interior: false,
        });
    }
    let (mut a, mut b) = (grid[i - 1], grid[i + 1]);
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > 1e-10 * (1.0 + b.abs()) {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = f(x2)?;
        }
    }
    let (gamma, value) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    let (gamma, value) = if best < value {
        (grid[i], best)
    } else {
        (gamma, value)
    };
    Some(Extremum {
        gamma,
        value,
        interior: true,
    })
}

// First Γ past the minimum where the curve regains its Γ = 0 value,
// bisected between grid points.
fn locate_recovery(
    grid: &[f64],
    values: &[Option<f64>],
    min: Extremum,
    f: &dyn Fn(f64) -> Option<f64>,
) -> Option<f64> {
    if !min.interior {
        return None;
    }
    let reference = f(0.0)?;
    let start = grid.iter().position(|&g| g > min.gamma)?;
    let j = (start..grid.len()).find(|&j| values[j].is_some_and(|v| v >= reference))?;
    let (mut lo, mut hi) = (if j == start { min.gamma } else { grid[j - 1] }, grid[j]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? < reference {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Law check at a single parameter point.
#[derive(Clone, Debug)]
pub struct LawsReport {
    pub thermo: ThermoReport,
    pub efficiency: Efficiency,
    /// Naive heat accounting, only defined for vanishing chemical potentials.
    pub naive: Option<NaiveAccounting>,
    pub violations: Vec<Violation>,
}

pub fn run_laws(p: &EngineParams, q: &QpcParams) -> Result<LawsReport> {
    let thermo = evaluate_point(p, q)?.thermo;
    let naive = if p.mu_h == 0.0 && p.mu_c == 0.0 {
        Some(naive_heat_current(p)?)
    } else {
        None
    };
    Ok(LawsReport {
        violations: law_violations(p, q, &thermo),
        efficiency: efficiency(p),
        thermo,
        naive,
    })
}

/// One collision time of the collision/master-equation comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollisionRow {
    pub tau: f64,
    /// Generator residual with the detector unit.
    pub residual: f64,
    /// Generator residual with reservoir units only.
    pub residual_no_qpc: f64,
    /// Trace distance between the collision fixed point and the master
    /// equation steady state, when the fixed point converged.
    pub fixed_point_distance: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct CollisionReport {
    pub rows: Vec<CollisionRow>,
    /// Largest entrywise gap between the emergent dissipator and the
    /// dissipative part of the master equation.
    pub dissipator_gap: f64,
    /// Fitted `d log(residual) / d log(τ)`.
    pub slope: f64,
    pub slope_no_qpc: f64,
}

/// Accepted band for the fitted convergence order.
pub const SLOPE_BAND: (f64, f64) = (0.85, 1.15);

impl CollisionReport {
    pub fn slopes_in_band(&self) -> bool {
        let ok = |s: f64| s >= SLOPE_BAND.0 && s <= SLOPE_BAND.1;
        ok(self.slope) && ok(self.slope_no_qpc)
    }
}

/// Collision times spanning a decade below [`default_tau`] × 10.
pub fn default_tau_list(p: &EngineParams) -> Vec<f64> {
    let t0 = default_tau(p);
    [10.0, 5.0, 2.5, 1.0].iter().map(|k| k * t0).collect()
}

/// Generator residuals at the master-equation steady state for each `τ`,
/// with and without the detector unit, and their fitted order.
pub fn run_collision_compare(
    p: &EngineParams,
    q: &QpcParams,
    tau_list: &[f64],
    n_steps: u64,
) -> Result<CollisionReport> {
    if tau_list.len() < 2 {
        return Err(Error::Config(
            "collision comparison needs at least two collision times".into(),
        ));
    }
    let full = build_liouvillian(p)?;
    let bare = build_liouvillian(&p.with_dephasing(0.0))?;
    let rho = crate::lindblad::ness(&full)?;
    let rho_bare = crate::lindblad::ness(&bare)?;
    let dissipator_gap = (&emergent_dissipator(&JointModel::build(p, q, true)?)
        - &full.dissipative_part())
        .entries()
        .iter()
        .fold(0.0f64, |m, z| m.max(z.norm()));

    let rows = tau_list
        .par_iter()
        .map(|&tau| -> Result<CollisionRow> {
            let cfg = CollisionConfig {
                tau,
                n_steps,
                include_qpc: true,
                params: p.clone(),
                qpc: q.clone(),
            };
            let no_qpc = CollisionConfig {
                include_qpc: false,
                ..cfg.clone()
            };
            let fixed_point_distance = collision_ness(&cfg)
                .ok()
                .map(|fp| (&fp - &rho).trace_norm());
            Ok(CollisionRow {
                tau,
                residual: generator_residual(&cfg, &rho)?,
                residual_no_qpc: generator_residual(&no_qpc, &rho_bare)?,
                fixed_point_distance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = |r: fn(&CollisionRow) -> f64| {
        log_log_slope(&rows.iter().map(|row| (row.tau, r(row))).collect::<Vec<_>>())
    };
    Ok(CollisionReport {
        slope: fit(|r| r.residual),
        slope_no_qpc: fit(|r| r.residual_no_qpc),
        rows,
        dissipator_gap,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
