use super::{CMatrix, Operator, C64};
use crate::error::{Error, Result};

/// Partial trace over every subsystem not listed in `keep`.
///
/// Subsystem 0 is the most significant factor, matching [`super::kron`].
/// The result keeps the surviving subsystems in their original order.
pub fn partial_trace(a: &Operator, dims: &[usize], keep: &[usize]) -> Result<Operator> {
    let total: usize = dims.iter().product();
    if total != a.dim() || dims.contains(&0) {
        return Err(Error::DimensionMismatch(format!(
            "subsystem dims {dims:?} inconsistent with operator dim {}",
            a.dim()
        )));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.iter().any(|&k| k >= dims.len()) {
        return Err(Error::DimensionMismatch(format!(
            "keep set {keep:?} out of range for {} subsystems",
            dims.len()
        )));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !kept.contains(k)).collect();

    // stride of each subsystem in the full index
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let kept_dims: Vec<usize> = kept.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let out_dim: usize = kept_dims.iter().product();
    let traced_dim: usize = traced_dims.iter().product();

    let offsets = |subsystems: &[usize], sub_dims: &[usize], count: usize| -> Vec<usize> {
        (0..count)
            .map(|mut idx| {
                let mut off = 0;
                for (pos, &k) in subsystems.iter().enumerate().rev() {
                    let d = sub_dims[pos];
                    off += (idx % d) * strides[k];
                    idx /= d;
                }
                off
            })
            .collect()
    };
    let kept_off = offsets(&kept, &kept_dims, out_dim);
    let traced_off = offsets(&traced, &traced_dims, traced_dim);

    let m = a.entries();
    let out = CMatrix::from_fn(out_dim, out_dim, |r, c| {
        let mut acc = C64::new(0.0, 0.0);
        for &t in &traced_off {
            acc += m[(kept_off[r] + t, kept_off[c] + t)];
        }
        acc
    });
    let result = Operator::new(out)?;
    if kept_dims.is_empty() {
        Ok(result)
    } else {
        result.with_dims(kept_dims)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::{kron, kron_all};

    fn state(diag: &[f64], coh: f64) -> Operator {
        let n = diag.len();
        Operator::from_fn(n, |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else if i < j {
                C64::new(coh, 0.5 * coh)
            } else {
                C64::new(coh, -0.5 * coh)
            }
        })
    }

    #[test]
    fn product_state_reduces_to_factors() {
        let a = state(&[0.3, 0.7], 0.1);
        let b = state(&[0.2, 0.5, 0.3], 0.05);
        let ab = kron(&a, &b);
        let ra = partial_trace(&ab, &[2, 3], &[0]).unwrap();
        let rb = partial_trace(&ab, &[2, 3], &[1]).unwrap();
        assert!((&ra - &a).norm() < 1e-15);
        assert!((&rb - &b).norm() < 1e-15);
    }

    #[test]
    fn middle_subsystem_of_three() {
        let a = state(&[0.6, 0.4], 0.2);
        let b = state(&[0.1, 0.9], -0.1);
        let c = state(&[0.5, 0.5], 0.3);
        let abc = kron_all(&[&a, &b, &c]);
        let rb = partial_trace(&abc, &[2, 2, 2], &[1]).unwrap();
        assert!((&rb - &b).norm() < 1e-15);
        let rac = partial_trace(&abc, &[2, 2, 2], &[0, 2]).unwrap();
        assert!((&rac - &kron(&a, &c)).norm() < 1e-15);
        assert_eq!(rac.dims(), &[2, 2]);
    }

    #[test]
    fn tracing_everything_gives_trace() {
        let a = Operator::from_fn(4, |i, j| C64::new((i + j) as f64, (i as f64) - 1.0));
        let r = partial_trace(&a, &[2, 2], &[]).unwrap();
        assert_eq!(r.dim(), 1);
        assert!((r.get(0, 0) - a.trace()).norm() < 1e-14);
    }

    #[test]
    fn inconsistent_dims_fail() {
        let a = Operator::identity(4);
        assert!(partial_trace(&a, &[2, 3], &[0]).is_err());
        assert!(partial_trace(&a, &[2, 2], &[2]).is_err());
    }
}
