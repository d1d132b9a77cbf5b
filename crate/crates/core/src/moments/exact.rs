use nalgebra::DVector;

use super::folded::DistinctM6;
use super::isserlis::expand;
use super::{check_orders, MomentSet, Provenance, SymTensor};
use crate::error::Result;
use crate::gmm::GmmParams;
use crate::index::strict_tuples;

fn mixture_entry(params: &GmmParams, zero_means: &[bool], idx: &[usize]) -> f64 {
    let full = (1u32 << idx.len()) - 1;
    params
        .weights
        .iter()
        .zip(&params.covariances)
        .zip(&params.means)
        .zip(zero_means)
        .map(|(((w, c), m), &z)| {
            let mean: Option<&DVector<f64>> = if z { None } else { Some(m) };
            w * expand(c, mean, idx, 0, full)
        })
        .sum()
}

/// Mixture moments `sum_i w_i E_i[x^{(m)}]` for the requested orders (3, 4, 6).
pub fn exact_moments(params: &GmmParams, orders: &[usize]) -> Result<MomentSet> {
    check_orders(orders)?;
    params.check_shapes()?;
    let n = params.n();
    let zero_means: Vec<bool> = params.means.iter().map(|m| m.iter().all(|&x| x == 0.0)).collect();
    let mut set = MomentSet { dim: n, m3: None, m4: None, m6: None, provenance: Provenance::Exact };
    if orders.contains(&3) {
        set.m3 = Some(SymTensor::from_fn(3, n, |idx| mixture_entry(params, &zero_means, idx))?);
    }
    if orders.contains(&4) {
        set.m4 = Some(SymTensor::from_fn(4, n, |idx| mixture_entry(params, &zero_means, idx))?);
    }
    if orders.contains(&6) {
        use rayon::prelude::*;
        let tuples: Vec<Vec<usize>> = strict_tuples(n, 6).collect();
        let data = tuples.par_iter().map(|idx| mixture_entry(params, &zero_means, idx)).collect();
        set.m6 = Some(DistinctM6::from_data(n, data)?);
    }
    Ok(set)
}
