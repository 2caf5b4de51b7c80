//! Seeded random parameter sets for property runs.

use rand::Rng;

use crate::model::{EngineParams, QpcParams};
use crate::numkernel::C64;

/// Engine parameters drawn from a box wide enough to cover engine,
/// refrigerator and dissipative regimes, with complex hopping.
pub fn random_engine<R: Rng>(rng: &mut R) -> EngineParams {
    EngineParams {
        eps1: rng.gen_range(-3.0..3.0),
        eps2: rng.gen_range(-3.0..3.0),
        t_hop: C64::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)),
        gamma_h: rng.gen_range(0.01..0.5),
        gamma_c: rng.gen_range(0.01..0.5),
        temp_h: rng.gen_range(0.2..5.0),
        temp_c: rng.gen_range(0.2..5.0),
        mu_h: rng.gen_range(-2.0..2.0),
        mu_c: rng.gen_range(-2.0..2.0),
        dephasing: rng.gen_range(0.0..3.0),
    }
}

/// Detector parameters with non-negative bias.
pub fn random_qpc<R: Rng>(rng: &mut R) -> QpcParams {
    let mu_l = rng.gen_range(-5.0..5.0);
    QpcParams {
        chi00: rng.gen_range(0.01..0.5),
        g_l: rng.gen_range(0.1..2.0),
        g_r: rng.gen_range(0.1..2.0),
        temp: rng.gen_range(0.05..3.0),
        t00: rng.gen_range(0.0..2.0),
        omega: rng.gen_range(-10.0..10.0),
        mu_r: mu_l + rng.gen_range(0.0..2.0),
        mu_l,
    }
}
