//! Counting statistics of the particle exchange with the hot reservoir.
//!
//! Jumps into dot 1 count `+1`, jumps out count `−1`. The zero-frequency
//! noise `D` follows from the Drazin inverse of the generator and is
//! cross-checked against the curvature of the tilted generator's leading
//! eigenvalue.

use crate::error::{Error, Result};
use crate::lindblad::{Channel, LiouvillianBundle};
use crate::numkernel::{
    drazin_from_spectrum, eig, eig_matrix, vectorize, vectorized_identity, Operator, Spectrum,
    Superoperator, C64, DEFAULT_ZERO_TOL,
};

/// Default counting-field step for the tilted-generator oracle.
pub const DEFAULT_CHI_STEP: f64 = 1e-2;

/// Counted jump operators `L_k` (already multiplied by the square root of
/// their rate) with integer weights `μ_k`.
#[derive(Clone, Debug)]
pub struct CountingSpec {
    pub jumps: Vec<(Operator, f64)>,
}

impl CountingSpec {
    /// Hot-reservoir exchange: `√(γ_H f_H) c₁†` with `+1`, `√(γ_H(1−f_H)) c₁`
    /// with `−1`.
    pub fn hot_exchange(b: &LiouvillianBundle) -> Self {
        let jump = |ch| b.jump(ch).expect("hot channels present").scaled();
        Self {
            jumps: vec![(jump(Channel::HotIn), 1.0), (jump(Channel::HotOut), -1.0)],
        }
    }

    fn weighted(&self, power: i32) -> Superoperator {
        let dim = self.jumps.first().map_or(1, |(l, _)| l.dim());
        let mut s = Superoperator::zeros(dim);
        for (l, mu) in &self.jumps {
            s += &Superoperator::sandwich(l, &l.dagger()).scale(C64::new(mu.powi(power), 0.0));
        }
        s
    }
}

/// `𝓛₁ ρ = Σ_k μ_k L_k ρ L_k†`.
pub fn jump_superop(spec: &CountingSpec) -> Superoperator {
    spec.weighted(1)
}

/// Mean counting current `⟨1|𝓛₁|ρ⟩`.
pub fn counted_current(spec: &CountingSpec, rho: &Operator) -> Result<f64> {
    Ok(jump_superop(spec).apply(rho)?.trace().re)
}

/// `M = Σ_k μ_k² Tr[L_k ρ L_k†]`.
pub fn dynamical_activity(spec: &CountingSpec, rho: &Operator) -> Result<f64> {
    Ok(spec.weighted(2).apply(rho)?.trace().re)
}

/// `D = M − 2⟨1|𝓛₁ 𝓛ᴰ 𝓛₁|ρ⟩` with `𝓛ᴰ` the Drazin inverse of the generator.
pub fn diffusion_drazin(spec: &CountingSpec, b: &LiouvillianBundle, rho: &Operator) -> Result<f64> {
    let ld = drazin_from_spectrum(&b.l0, &eig(&b.l0)?, DEFAULT_ZERO_TOL)?;
    diffusion_with_drazin(spec, &ld, rho)
}

/// [`diffusion_drazin`] with a precomputed Drazin inverse.
pub fn diffusion_with_drazin(
    spec: &CountingSpec,
    drazin: &Superoperator,
    rho: &Operator,
) -> Result<f64> {
    let l1 = jump_superop(spec);
    let dim = rho.dim();
    let one = vectorized_identity(dim);
    let chain = l1.entries() * (drazin.entries() * (l1.entries() * vectorize(rho)));
    let correction = one.dot(&chain).re;
    Ok(dynamical_activity(spec, rho)? - 2.0 * correction)
}

/// First and second cumulant rates from the tilted generator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TiltedCumulants {
    /// `λ'(0)`, the mean current.
    pub first: f64,
    /// `λ''(0)`, the diffusion coefficient.
    pub second: f64,
    /// Counting-field step actually used.
    pub step: f64,
}

/// `𝓛_χ = 𝓛 + Σ_k (e^{μ_k χ} − 1) L_k · L_k†`.
pub fn tilted_generator(spec: &CountingSpec, b: &LiouvillianBundle, chi: f64) -> Superoperator {
    let mut l = b.l0.clone();
    for (op, mu) in &spec.jumps {
        let factor = (mu * chi).exp_m1();
        l += &Superoperator::sandwich(op, &op.dagger()).scale(C64::new(factor, 0.0));
    }
    l
}

const MAX_SHRINKS: usize = 3;

/// Cumulants from central differences of the leading eigenvalue `λ(χ)`,
/// with one Richardson extrapolation (steps `h` and `h/2`).
///
/// The leading eigenvalue is the one with the largest real part. If it does
/// not stay well separated from the rest of the spectrum over the stencil,
/// the step shrinks tenfold, at most three times.
pub fn diffusion_tilted(
    spec: &CountingSpec,
    b: &LiouvillianBundle,
    chi_step: f64,
) -> Result<TiltedCumulants> {
    if !(chi_step > 0.0 && chi_step.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "counting-field step {chi_step}"
        )));
    }
    let base = eig(&b.l0)?;
    let gap = spectral_gap(&base);
    let mut h = chi_step;
    for _ in 0..=MAX_SHRINKS {
        match cumulants_at_step(spec, b, h, gap) {
            Ok(c) => return Ok(c),
            Err(Error::NonConvergence { .. }) => h /= 10.0,
            Err(e) => return Err(e),
        }
    }
    Err(Error::NonConvergence {
        what: "tilted generator",
        norm: b.l0.norm(),
        detail: format!("leading eigenvalue ambiguous down to step {h:e}"),
    })
}

// Distance from zero of the slowest decaying mode of `L`.
fn spectral_gap(s: &Spectrum) -> f64 {
    let mut re: Vec<f64> = s.values.iter().map(|z| z.re).collect();
    re.sort_by(|a, b| b.total_cmp(a));
    -re.get(1).copied().unwrap_or(f64::NEG_INFINITY)
}

fn leading_eigenvalue(l: &Superoperator, gap: f64) -> Result<f64> {
    let s = eig_matrix(l.entries())?;
    let mut vals: Vec<C64> = s.values.clone();
    vals.sort_by(|a, b| b.re.total_cmp(&a.re));
    let lead = vals[0];
    let next = vals.get(1).map_or(f64::NEG_INFINITY, |z| z.re);
    if lead.re - next < 0.5 * gap || lead.re.abs() > 0.25 * gap {
        return Err(Error::NonConvergence {
            what: "tilted generator",
            norm: l.norm(),
            detail: "leading eigenvalue not isolated".into(),
        });
    }
    Ok(lead.re)
}

fn cumulants_at_step(
    spec: &CountingSpec,
    b: &LiouvillianBundle,
    h: f64,
    gap: f64,
) -> Result<TiltedCumulants> {
    let lambda = |chi: f64| leading_eigenvalue(&tilted_generator(spec, b, chi), gap);
    let l0 = lambda(0.0)?;
    let diffs = |step: f64| -> Result<(f64, f64)> {
        let (lp, lm) = (lambda(step)?, lambda(-step)?);
        Ok((
            (lp - lm) / (2.0 * step),
            (lp - 2.0 * l0 + lm) / (step * step),
        ))
    };
    let (d1_h, d2_h) = diffs(h)?;
    let (d1_half, d2_half) = diffs(0.5 * h)?;
    Ok(TiltedCumulants {
        first: (4.0 * d1_half - d1_h) / 3.0,
        second: (4.0 * d2_half - d2_h) / 3.0,
        step: h,
    })
}

/// Mean, activity, noise and uncertainty ratio of the hot exchange.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FcsReport {
    pub j: f64,
    pub m: f64,
    pub d: f64,
    /// `D σ / J²`, absent when the current vanishes.
    pub turr: Option<f64>,
}

/// `D σ_DQD / J²`; undefined when `|J|` is negligible against the activity.
pub fn turr(j: f64, m: f64, d: f64, sigma_dqd: f64) -> Option<f64> {
    (j.abs() > 1e-12 * m.abs() && j != 0.0).then(|| d * sigma_dqd / (j * j))
}

/// Full report at the steady state `rho` of `b`, reusing a spectrum of `b.l0`.
pub fn fcs_report(
    b: &LiouvillianBundle,
    spectrum: &Spectrum,
    rho: &Operator,
    sigma_dqd: f64,
) -> Result<FcsReport> {
    let spec = CountingSpec::hot_exchange(b);
    let ld = drazin_from_spectrum(&b.l0, spectrum, DEFAULT_ZERO_TOL)?;
    let j = counted_current(&spec, rho)?;
    let m = dynamical_activity(&spec, rho)?;
    let d = diffusion_with_drazin(&spec, &ld, rho)?;
    Ok(FcsReport {
        j,
        m,
        d,
        turr: turr(j, m, d, sigma_dqd),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{build_liouvillian, dot_observables, ness};
    use crate::model::EngineParams;
    use crate::thermo::particle_current;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

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

    fn solved(p: &EngineParams) -> (LiouvillianBundle, Operator) {
        let b = build_liouvillian(p).unwrap();
        let rho = ness(&b).unwrap();
        (b, rho)
    }

    #[test]
    fn zero_rates_give_zero_superoperator() {
        let (c1, _) = crate::model::local_lowering();
        let spec = CountingSpec {
            jumps: vec![(&c1 * 0.0, 1.0), (&c1.dagger() * 0.0, -1.0)],
        };
        assert_eq!(jump_superop(&spec).norm(), 0.0);
    }

    #[test]
    fn counted_current_is_particle_current() {
        for gamma in [0.0, 0.4] {
            let p = canonical(gamma);
            let (b, rho) = solved(&p);
            let spec = CountingSpec::hot_exchange(&b);
            let j = counted_current(&spec, &rho).unwrap();
            assert!((j - particle_current(&p, &rho).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_weights_count_activity() {
        let (b, rho) = solved(&canonical(0.2));
        let mut spec = CountingSpec::hot_exchange(&b);
        for jump in &mut spec.jumps {
            jump.1 = 1.0;
        }
        let m = dynamical_activity(&CountingSpec::hot_exchange(&b), &rho).unwrap();
        assert!((counted_current(&spec, &rho).unwrap() - m).abs() < 1e-15);
    }

    #[test]
    fn activity_formula() {
        let p = canonical(0.3);
        let (b, rho) = solved(&p);
        let n1 = dot_observables(&rho).unwrap().n1;
        let (f, g) = (p.f_hot(), p.gamma_h);
        let expect = g * f * (1.0 - n1) + g * (1.0 - f) * n1;
        let spec = CountingSpec::hot_exchange(&b);
        let m = dynamical_activity(&spec, &rho).unwrap();
        assert!((m - expect).abs() < 1e-15);
        assert!(m >= counted_current(&spec, &rho).unwrap().abs());
    }

    #[test]
    fn equilibrium_activity_without_current() {
        let mut p = canonical(0.0);
        p.t_hop = C64::new(0.0, 0.0);
        let (b, rho) = solved(&p);
        let spec = CountingSpec::hot_exchange(&b);
        let f = p.f_hot();
        assert!(counted_current(&spec, &rho).unwrap().abs() < 1e-15);
        let m = dynamical_activity(&spec, &rho).unwrap();
        assert!((m - 2.0 * p.gamma_h * f * (1.0 - f)).abs() < 1e-15);
    }

    #[test]
    fn isolated_dot_has_bounded_count() {
        // In and out jumps alternate, so the net count never drifts: λ(χ) ≡ 0.
        let mut p = canonical(0.5);
        p.t_hop = C64::new(0.0, 0.0);
        let (b, rho) = solved(&p);
        let spec = CountingSpec::hot_exchange(&b);
        let d = diffusion_drazin(&spec, &b, &rho).unwrap();
        let m = dynamical_activity(&spec, &rho).unwrap();
        assert!(d.abs() < 1e-12 * m);
        let t = diffusion_tilted(&spec, &b, DEFAULT_CHI_STEP).unwrap();
        assert!(t.second.abs() < 1e-9 * m);
    }

    #[test]
    fn tilted_generator_at_zero_is_generator() {
        let (b, _) = solved(&canonical(0.3));
        let spec = CountingSpec::hot_exchange(&b);
        assert_eq!(tilted_generator(&spec, &b, 0.0).entries(), b.l0.entries());
        let gap = spectral_gap(&eig(&b.l0).unwrap());
        assert!(gap > 0.0);
        assert!(leading_eigenvalue(&b.l0, gap).unwrap().abs() < 1e-14);
    }

    #[test]
    fn drazin_and_tilted_agree_on_canonical_grid() {
        for k in 0..8 {
            let p = canonical(0.25 * k as f64);
            let (b, rho) = solved(&p);
            let spec = CountingSpec::hot_exchange(&b);
            let d = diffusion_drazin(&spec, &b, &rho).unwrap();
            let t = diffusion_tilted(&spec, &b, DEFAULT_CHI_STEP).unwrap();
            assert!(
                (d - t.second).abs() < 1e-6 * d.abs(),
                "Γ={}: {d} vs {}",
                p.dephasing,
                t.second
            );
            let j = counted_current(&spec, &rho).unwrap();
            assert!((t.first - j).abs() < 1e-8 * j.abs(), "{} vs {j}", t.first);
            assert!(d > 0.0);
        }
    }

    #[test]
    fn drazin_and_tilted_agree_on_random_configs() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let p = EngineParams {
                eps1: rng.gen_range(-2.0..2.0),
                eps2: rng.gen_range(-2.0..2.0),
                t_hop: C64::new(rng.gen_range(0.01..0.3), rng.gen_range(-0.1..0.1)),
                gamma_h: rng.gen_range(0.02..0.5),
                gamma_c: rng.gen_range(0.02..0.5),
                temp_h: rng.gen_range(0.3..4.0),
                temp_c: rng.gen_range(0.3..4.0),
                mu_h: rng.gen_range(-1.0..1.0),
                mu_c: rng.gen_range(-1.0..1.0),
                dephasing: rng.gen_range(0.0..2.0),
            };
            let (b, rho) = solved(&p);
            let spec = CountingSpec::hot_exchange(&b);
            let d = diffusion_drazin(&spec, &b, &rho).unwrap();
            let t = diffusion_tilted(&spec, &b, DEFAULT_CHI_STEP).unwrap();
            assert!((d - t.second).abs() < 1e-6 * d.abs());
            assert!(d >= 0.0);
        }
    }

    #[test]
    fn rate_scaling_is_homogeneous() {
        let p = canonical(0.3);
        let s = 2.5;
        let scaled = EngineParams {
            eps1: s * p.eps1,
            eps2: s * p.eps2,
            t_hop: p.t_hop * s,
            gamma_h: s * p.gamma_h,
            gamma_c: s * p.gamma_c,
            temp_h: s * p.temp_h,
            temp_c: s * p.temp_c,
            mu_h: s * p.mu_h,
            mu_c: s * p.mu_c,
            dephasing: s * p.dephasing,
        };
        let report = |p: &EngineParams| {
            let (b, rho) = solved(p);
            fcs_report(&b, &eig(&b.l0).unwrap(), &rho, 1.0).unwrap()
        };
        let (a, c) = (report(&p), report(&scaled));
        assert!((c.j - s * a.j).abs() < 1e-10 * c.j);
        assert!((c.m - s * a.m).abs() < 1e-12 * c.m);
        assert!((c.d - s * a.d).abs() < 1e-9 * c.d);
    }

    #[test]
    fn turr_definition() {
        assert_eq!(turr(0.0, 1.0, 1.0, 1.0), None);
        assert_eq!(turr(2.0, 3.0, 4.0, 1.0), Some(1.0));
        let p = canonical(0.0);
        let (b, rho) = solved(&p);
        let sigma = ((p.eps2 - p.mu_c) / p.temp_c - (p.eps1 - p.mu_h) / p.temp_h)
            * particle_current(&p, &rho).unwrap();
        let r = fcs_report(&b, &eig(&b.l0).unwrap(), &rho, sigma).unwrap();
        assert!(r.turr.unwrap() >= 2.0);
    }

    #[test]
    fn bad_step_rejected() {
        let (b, _) = solved(&canonical(0.0));
        let spec = CountingSpec::hot_exchange(&b);
        assert!(diffusion_tilted(&spec, &b, 0.0).is_err());
        assert!(diffusion_tilted(&spec, &b, f64::NAN).is_err());
    }
}
