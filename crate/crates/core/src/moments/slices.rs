use nalgebra::{DMatrix, DVector};

use super::SymTensor;
use crate::error::{Error, Result};

fn check(t: &SymTensor, order: usize, idx: &[usize]) -> Result<()> {
    if t.order() != order {
        return Err(Error::Format(format!("expected an order-{order} tensor")));
    }
    if let Some(&bad) = idx.iter().find(|&&i| i >= t.dim()) {
        return Err(Error::IndexOutOfRange { index: bad, dim: t.dim() });
    }
    Ok(())
}

/// `M4(e_j1, e_j2, e_j3, I)`.
pub fn m4_slice1(m4: &SymTensor, j1: usize, j2: usize, j3: usize) -> Result<DVector<f64>> {
    check(m4, 4, &[j1, j2, j3])?;
    Ok(DVector::from_fn(m4.dim(), |p, _| m4.get(&[j1, j2, j3, p])))
}

/// `M4(e_j1, e_j2, I, I)`.
pub fn m4_slice2(m4: &SymTensor, j1: usize, j2: usize) -> Result<DMatrix<f64>> {
    check(m4, 4, &[j1, j2])?;
    let n = m4.dim();
    let mut out = DMatrix::zeros(n, n);
    for q in 0..n {
        for p in 0..=q {
            let v = m4.get(&[j1, j2, p, q]);
            out[(p, q)] = v;
            out[(q, p)] = v;
        }
    }
    Ok(out)
}

/// Mode-1 matricisation of `M3`: row `j` is the row-major `vec(E[x_j x x^T])`.
pub fn m3_matricize(m3: &SymTensor) -> Result<DMatrix<f64>> {
    check(m3, 3, &[])?;
    let n = m3.dim();
    Ok(DMatrix::from_fn(n, n * n, |j, c| m3.get(&[j, c / n, c % n])))
}
