use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `E[y_{i_1} ... y_{i_t}]` for `y ~ N(mean, cov)` by recursive expansion over
/// partitions into pairs (covariance factors) and singletons (mean factors).
///
/// With `mean = None` only perfect matchings contribute.
pub fn isserlis_moment(cov: &DMatrix<f64>, mean: Option<&DVector<f64>>, indices: &[usize]) -> Result<f64> {
    if indices.len() > 6 {
        return Err(Error::UnsupportedOrder(indices.len()));
    }
    let n = cov.nrows();
    if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: bad, dim: n });
    }
    let full = (1u32 << indices.len()) - 1;
    Ok(expand(cov, mean, indices, 0, full))
}

pub(crate) fn expand(cov: &DMatrix<f64>, mean: Option<&DVector<f64>>, idx: &[usize], used: u32, full: u32) -> f64 {
    if used == full {
        return 1.0;
    }
    let p = (!used).trailing_zeros() as usize;
    let used = used | (1 << p);
    let mut total = 0.0;
    if let Some(mu) = mean {
        let m = mu[idx[p]];
        if m != 0.0 {
            total += m * expand(cov, mean, idx, used, full);
        }
    }
    for q in (p + 1)..idx.len() {
        if used & (1 << q) == 0 {
            let c = cov[(idx[p], idx[q])];
            if c != 0.0 {
                total += c * expand(cov, mean, idx, used | (1 << q), full);
            }
        }
    }
    total
}
