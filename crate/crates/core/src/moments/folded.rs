use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::SymTensor;
use crate::error::{Error, Result};
use crate::index::{binom, n2, pair_index, perfect_matchings, strict_rank, strict_tuples};

/// `sqrt(3)`: the number of pairings of four distinct indices, under a root.
pub const F4_NORM: f64 = 1.732_050_807_568_877_2;
/// `sqrt(15)`: likewise for the fifteen matchings of six indices.
pub const F6_NORM: f64 = 3.872_983_346_207_417;

/// Read access to order-6 moments at strictly increasing index tuples.
pub trait Order6Access: Sync {
    fn dim(&self) -> usize;
    fn distinct_entry(&self, idx: &[usize]) -> f64;
}

impl Order6Access for SymTensor {
    fn dim(&self) -> usize {
        SymTensor::dim(self)
    }

    fn distinct_entry(&self, idx: &[usize]) -> f64 {
        self.get(idx)
    }
}

/// Order-6 moments stored only on the `C(n, 6)` strictly increasing tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct DistinctM6 {
    dim: usize,
    data: Vec<f64>,
}

impl DistinctM6 {
    pub fn from_data(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != binom(dim, 6) {
            return Err(Error::Format(format!("expected {} order-6 entries, got {}", binom(dim, 6), data.len())));
        }
        Ok(Self { dim, data })
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn max_abs_diff(&self, other: &DistinctM6) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl Order6Access for DistinctM6 {
    fn dim(&self) -> usize {
        self.dim
    }

    fn distinct_entry(&self, idx: &[usize]) -> f64 {
        self.data[strict_rank(idx)]
    }
}

/// Moment entries at distinct indices, `M4bar` over `C(n,4)` and `M6bar` over
/// `C(n,6)` strictly increasing tuples in colex order.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldedMoments {
    pub n: usize,
    pub m4_bar: DVector<f64>,
    pub m6_bar: DVector<f64>,
}

impl FoldedMoments {
    pub fn n4(&self) -> usize {
        binom(self.n, 4)
    }

    pub fn n6(&self) -> usize {
        binom(self.n, 6)
    }

    pub fn position(tuple: &[usize]) -> usize {
        strict_rank(tuple)
    }
}

/// Distinct-index entries of `M4` in colex order.
pub fn fold_m4(m4: &SymTensor) -> Result<DVector<f64>> {
    if m4.order() != 4 {
        return Err(Error::Format("fold expects an order-4 tensor".into()));
    }
    let vals: Vec<f64> = strict_tuples(m4.dim(), 4).map(|t| m4.get(&t)).collect();
    Ok(DVector::from_vec(vals))
}

pub fn fold(m4: &SymTensor, m6: &dyn Order6Access) -> Result<FoldedMoments> {
    let n = m4.dim();
    if n < 6 {
        return Err(Error::DimensionTooSmall { n, needed: 6 });
    }
    if m6.dim() != n {
        return Err(Error::Format("order-4 and order-6 dimensions differ".into()));
    }
    let m4_bar = fold_m4(m4)?;
    let vals: Vec<f64> = strict_tuples(n, 6).map(|t| m6.distinct_entry(&t)).collect();
    Ok(FoldedMoments { n, m4_bar, m6_bar: DVector::from_vec(vals) })
}

/// A matrix indexed by unordered pairs.
pub trait PairMatrix: Sync {
    fn pair_dim(&self) -> usize;
    /// Entry of the symmetric part.
    fn pair_entry(&self, p: usize, q: usize) -> f64;
}

impl PairMatrix for DMatrix<f64> {
    fn pair_dim(&self) -> usize {
        self.nrows()
    }

    fn pair_entry(&self, p: usize, q: usize) -> f64 {
        0.5 * (self[(p, q)] + self[(q, p)])
    }
}

/// `sym(a b^T)` without materialising it.
pub struct SymOuter2<'a> {
    pub a: &'a [f64],
    pub b: &'a [f64],
}

impl PairMatrix for SymOuter2<'_> {
    fn pair_dim(&self) -> usize {
        self.a.len()
    }

    fn pair_entry(&self, p: usize, q: usize) -> f64 {
        0.5 * (self.a[p] * self.b[q] + self.a[q] * self.b[p])
    }
}

/// An order-3 array indexed by unordered pairs.
pub trait PairCubic: Sync {
    fn pair_dim(&self) -> usize;
    fn entry(&self, p: usize, q: usize, r: usize) -> f64;

    /// Entry of the symmetric part.
    fn sym_entry(&self, p: usize, q: usize, r: usize) -> f64 {
        (self.entry(p, q, r)
            + self.entry(p, r, q)
            + self.entry(q, p, r)
            + self.entry(q, r, p)
            + self.entry(r, p, q)
            + self.entry(r, q, p))
            / 6.0
    }
}

impl PairCubic for SymTensor {
    fn pair_dim(&self) -> usize {
        self.dim()
    }

    fn entry(&self, p: usize, q: usize, r: usize) -> f64 {
        self.get(&[p, q, r])
    }

    fn sym_entry(&self, p: usize, q: usize, r: usize) -> f64 {
        self.get(&[p, q, r])
    }
}

/// `a (x) b (x) c` over pair indices.
pub struct SymOuter3<'a> {
    pub a: &'a [f64],
    pub b: &'a [f64],
    pub c: &'a [f64],
}

impl PairCubic for SymOuter3<'_> {
    fn pair_dim(&self) -> usize {
        self.a.len()
    }

    fn entry(&self, p: usize, q: usize, r: usize) -> f64 {
        self.a[p] * self.b[q] * self.c[r]
    }
}

fn check_pairs(dim: usize, n: usize) -> Result<()> {
    if dim != n2(n) {
        return Err(Error::Format(format!("pair dimension {dim} does not match n2({n}) = {}", n2(n))));
    }
    Ok(())
}

/// Row `t` of `F4`: the three pairings of `t`, each as a pair of pair indices.
pub(crate) fn f4_pairings(t: &[usize]) -> [(usize, usize); 3] {
    [
        (pair_index(t[0], t[1]), pair_index(t[2], t[3])),
        (pair_index(t[0], t[2]), pair_index(t[1], t[3])),
        (pair_index(t[0], t[3]), pair_index(t[1], t[2])),
    ]
}

/// `F4(X)`: for each `j1<j2<j3<j4` the three pairings of the indices summed
/// and divided by `sqrt(3)`, so `M4bar = sqrt(3) F4(X4)`.
pub fn f4_apply(x: &dyn PairMatrix, n: usize) -> Result<DVector<f64>> {
    check_pairs(x.pair_dim(), n)?;
    let tuples: Vec<Vec<usize>> = strict_tuples(n, 4).collect();
    let vals: Vec<f64> = tuples
        .par_iter()
        .map(|t| f4_pairings(t).iter().map(|&(p, q)| x.pair_entry(p, q)).sum::<f64>() / F4_NORM)
        .collect();
    Ok(DVector::from_vec(vals))
}

/// The fifteen matchings of six positions, as position pairs.
pub fn six_matchings() -> Vec<[(usize, usize); 3]> {
    perfect_matchings(6).into_iter().map(|m| [m[0], m[1], m[2]]).collect()
}

/// `F6(X)`: for each strictly increasing 6-tuple the fifteen matchings summed
/// and divided by `sqrt(15)`.
pub fn f6_apply(x: &dyn PairCubic, n: usize) -> Result<DVector<f64>> {
    check_pairs(x.pair_dim(), n)?;
    let matchings = six_matchings();
    let tuples: Vec<Vec<usize>> = strict_tuples(n, 6).collect();
    let vals: Vec<f64> = tuples
        .par_iter()
        .map(|t| {
            let mut s = 0.0;
            for m in &matchings {
                let p = pair_index(t[m[0].0], t[m[0].1]);
                let q = pair_index(t[m[1].0], t[m[1].1]);
                let r = pair_index(t[m[2].0], t[m[2].1]);
                s += x.sym_entry(p, q, r);
            }
            s / F6_NORM
        })
        .collect();
    Ok(DVector::from_vec(vals))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        assert!((F4_NORM - 3f64.sqrt()).abs() < 1e-15);
        assert!((F6_NORM - 15f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn identity_outer_square_maps_to_zero() {
        let n = 6;
        let mut v = vec![0.0; n2(n)];
        for i in 0..n {
            v[pair_index(i, i)] = 1.0;
        }
        let out = f4_apply(&SymOuter2 { a: &v, b: &v }, n).unwrap();
        assert_eq!(out.amax(), 0.0);
    }

    #[test]
    fn lengths() {
        let m4 = SymTensor::zeros(4, 6).unwrap();
        let m6 = SymTensor::zeros(6, 6).unwrap();
        let f = fold(&m4, &m6).unwrap();
        assert_eq!((f.m4_bar.len(), f.m6_bar.len()), (15, 1));
        let m4 = SymTensor::zeros(4, 5).unwrap();
        let m6 = DistinctM6::from_data(5, vec![]).unwrap();
        assert!(matches!(fold(&m4, &m6), Err(Error::DimensionTooSmall { n: 5, needed: 6 })));
    }

    #[test]
    fn colliding_pair_entries_are_ignored() {
        // F4 never reads a pair whose two indices coincide, so moving mass onto
        // diagonal pair labels changes nothing.
        let n = 5;
        let d = n2(n);
        let x = DMatrix::from_fn(d, d, |p, q| ((p * 7 + q * 3) as f64).sin());
        let base = f4_apply(&x, n).unwrap();
        let mut y = x.clone();
        for i in 0..n {
            let p = pair_index(i, i);
            for q in 0..d {
                y[(p, q)] += 3.0;
                y[(q, p)] -= 1.5;
            }
        }
        assert!((f4_apply(&y, n).unwrap() - &base).amax() < 1e-14);
        // and it only sees the symmetric part
        let t = x.transpose();
        assert!((f4_apply(&t, n).unwrap() - &base).amax() < 1e-14);
    }
}
