//! Matrix exponential by scaling and squaring with diagonal Padé
//! approximants of degree 3, 5, 7, 9 and 13.

use super::{CMatrix, LinearMap, C64};
use crate::error::{Error, Result};

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.53939833006323e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152e0;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// Beyond this many squarings the input norm is far outside anything the
// physics layers produce.
const MAX_SQUARINGS: i32 = 64;

fn one_norm(a: &CMatrix) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Odd/even split of a low-degree Padé numerator: returns `(U, V)` with
/// `r(A) = (V - U)^{-1} (V + U)`.
fn pade_low(a: &CMatrix, coeffs: &[f64]) -> (CMatrix, CMatrix) {
    let n = a.nrows();
    let ident = CMatrix::identity(n, n);
    let a2 = a * a;
    let m = coeffs.len() - 1;
    let mut powers = vec![ident.clone()];
    for k in 1..=m / 2 {
        powers.push(&powers[k - 1] * &a2);
    }
    let mut u_inner = CMatrix::zeros(n, n);
    let mut v = CMatrix::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        if 2 * k < m {
            u_inner += p * real(coeffs[2 * k + 1]);
        }
        v += p * real(coeffs[2 * k]);
    }
    (a * u_inner, v)
}

fn pade_13(a: &CMatrix) -> (CMatrix, CMatrix) {
    let b = PADE_13;
    let n = a.nrows();
    let ident = CMatrix::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_high = &a6 * (&a6 * real(b[13]) + &a4 * real(b[11]) + &a2 * real(b[9]));
    let u_low = &a6 * real(b[7]) + &a4 * real(b[5]) + &a2 * real(b[3]) + &ident * real(b[1]);
    let u = a * (u_high + u_low);
    let v_high = &a6 * (&a6 * real(b[12]) + &a4 * real(b[10]) + &a2 * real(b[8]));
    let v = v_high + &a6 * real(b[6]) + &a4 * real(b[4]) + &a2 * real(b[2]) + &ident * real(b[0]);
    (u, v)
}

fn solve_pade(u: CMatrix, v: CMatrix, norm: f64) -> Result<CMatrix> {
    let p = &v + &u;
    let q = v - u;
    q.lu().solve(&p).ok_or_else(|| Error::NonConvergence {
        what: "matrix exponential",
        norm,
        detail: "Padé denominator is singular".into(),
    })
}

/// Matrix exponential of a raw dense matrix.
pub fn expm_matrix(a: &CMatrix) -> Result<CMatrix> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if !a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let norm = one_norm(a);
    for (degree, theta) in THETA {
        if norm <= theta {
            let coeffs: &[f64] = match degree {
                3 => &PADE_3,
                5 => &PADE_5,
                7 => &PADE_7,
                _ => &PADE_9,
            };
            let (u, v) = pade_low(a, coeffs);
            return solve_pade(u, v, norm);
        }
    }
    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    if squarings > MAX_SQUARINGS {
        return Err(Error::NonConvergence {
            what: "matrix exponential",
            norm,
            detail: format!("{squarings} squarings required"),
        });
    }
    let scaled = a * real(2f64.powi(-squarings));
    let (u, v) = pade_13(&scaled);
    let mut result = solve_pade(u, v, norm)?;
    for _ in 0..squarings {
        result = &result * &result;
    }
    if !result.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonConvergence {
            what: "matrix exponential",
            norm,
            detail: "overflow while squaring".into(),
        });
    }
    Ok(result)
}

/// Matrix exponential of an operator or superoperator.
pub fn matexp<M: LinearMap>(a: &M) -> Result<M> {
    Ok(a.with_entries(expm_matrix(a.entries())?))
}
