use rayon::prelude::*;

use super::folded::DistinctM6;
use super::{check_orders, MomentSet, Provenance, SymTensor};
use crate::error::{Error, Result};
use crate::gmm::SampleBatch;
use crate::index::{binom, multiset_count};

/// Compensated accumulator over a flat array.
struct Kahan {
    sum: Vec<f64>,
    comp: Vec<f64>,
}

impl Kahan {
    fn new(len: usize) -> Self {
        Self { sum: vec![0.0; len], comp: vec![0.0; len] }
    }

    #[inline(always)]
    fn add(&mut self, i: usize, v: f64) {
        let y = v - self.comp[i];
        let t = self.sum[i] + y;
        self.comp[i] = (t - self.sum[i]) - y;
        self.sum[i] = t;
    }

    fn value(&self, i: usize) -> f64 {
        self.sum[i] - self.comp[i]
    }
}

struct Accumulators {
    m3: Option<Kahan>,
    m4: Option<Kahan>,
    m6: Option<Kahan>,
}

impl Accumulators {
    fn new(n: usize, orders: &[usize]) -> Self {
        Self {
            m3: orders.contains(&3).then(|| Kahan::new(multiset_count(n, 3))),
            m4: orders.contains(&4).then(|| Kahan::new(multiset_count(n, 4))),
            m6: orders.contains(&6).then(|| Kahan::new(binom(n, 6))),
        }
    }

    fn push(&mut self, x: &[f64]) {
        let n = x.len();
        if let Some(acc) = self.m3.as_mut() {
            let mut idx = 0;
            for l in 0..n {
                for k in 0..=l {
                    let p = x[l] * x[k];
                    for j in 0..=k {
                        acc.add(idx, p * x[j]);
                        idx += 1;
                    }
                }
            }
        }
        if let Some(acc) = self.m4.as_mut() {
            let mut idx = 0;
            for l in 0..n {
                for k in 0..=l {
                    let p2 = x[l] * x[k];
                    for j in 0..=k {
                        let p1 = p2 * x[j];
                        for i in 0..=j {
                            acc.add(idx, p1 * x[i]);
                            idx += 1;
                        }
                    }
                }
            }
        }
        if let Some(acc) = self.m6.as_mut() {
            let mut idx = 0;
            for i5 in 5..n {
                let p5 = x[i5];
                for i4 in 4..i5 {
                    let p4 = p5 * x[i4];
                    for i3 in 3..i4 {
                        let p3 = p4 * x[i3];
                        for i2 in 2..i3 {
                            let p2 = p3 * x[i2];
                            for i1 in 1..i2 {
                                let p1 = p2 * x[i1];
                                for i0 in 0..i1 {
                                    acc.add(idx, p1 * x[i0]);
                                    idx += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Fixed number of contiguous row groups; results do not depend on the
/// thread count.
const GROUPS: usize = 64;

fn merge(parts: &[Option<Kahan>], scale: f64) -> Option<Vec<f64>> {
    let first = parts.first()?.as_ref()?;
    let mut total = Kahan::new(first.sum.len());
    for p in parts.iter().flatten() {
        for i in 0..p.sum.len() {
            total.add(i, p.value(i));
        }
    }
    Some((0..total.sum.len()).map(|i| total.value(i) * scale).collect())
}

/// Sample averages `(1/N) sum_i x_i^{(m)}`, stored canonically.
///
/// Rows are visited in lexicographic order of their values, so any row
/// permutation of the batch gives bit-identical moments.
pub fn empirical_moments(batch: &SampleBatch, orders: &[usize]) -> Result<MomentSet> {
    check_orders(orders)?;
    let big_n = batch.len();
    if big_n == 0 {
        return Err(Error::InvalidParams("empty sample batch".into()));
    }
    let n = batch.dim();
    // column-major storage of the transpose is the row-major sample array
    let flat = batch.data.transpose();
    let flat = flat.as_slice();
    let row = |r: usize| &flat[r * n..(r + 1) * n];
    let mut order: Vec<usize> = (0..big_n).collect();
    order.par_sort_by(|&a, &b| {
        row(a)
            .iter()
            .zip(row(b))
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let groups = GROUPS.min(big_n);
    let parts: Vec<Accumulators> = (0..groups)
        .into_par_iter()
        .map(|g| {
            let lo = g * big_n / groups;
            let hi = (g + 1) * big_n / groups;
            let mut acc = Accumulators::new(n, orders);
            for &r in &order[lo..hi] {
                acc.push(row(r));
            }
            acc
        })
        .collect();
    let scale = 1.0 / big_n as f64;
    let (mut p3, mut p4, mut p6) = (Vec::new(), Vec::new(), Vec::new());
    for a in parts {
        p3.push(a.m3);
        p4.push(a.m4);
        p6.push(a.m6);
    }
    let mut set = MomentSet { dim: n, m3: None, m4: None, m6: None, provenance: Provenance::Empirical { samples: big_n } };
    if let Some(v) = merge(&p3, scale) {
        set.m3 = Some(SymTensor::from_data(3, n, v)?);
    }
    if let Some(v) = merge(&p4, scale) {
        set.m4 = Some(SymTensor::from_data(4, n, v)?);
    }
    if let Some(v) = merge(&p6, scale) {
        set.m6 = Some(DistinctM6::from_data(n, v)?);
    }
    Ok(set)
}
