//! Exact and empirical moments and the views the learner consumes.

mod empirical;
mod exact;
mod folded;
pub mod io;
mod isserlis;
mod slices;
mod source;
mod symtensor;

pub use empirical::empirical_moments;
pub use exact::exact_moments;
pub use folded::{
    f4_apply, f6_apply, fold, fold_m4, DistinctM6, FoldedMoments, Order6Access, PairCubic, PairMatrix, SymOuter2,
    SymOuter3, F4_NORM, F6_NORM,
};
pub use folded::six_matchings;
pub use isserlis::isserlis_moment;
pub use slices::{m3_matricize, m4_slice1, m4_slice2};
pub use source::{EmpiricalSource, ExactSource, MomentSource, StoredSource};
pub use symtensor::SymTensor;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where a moment set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    Exact,
    Empirical { samples: usize },
}

/// Moments of orders 3, 4 and 6 for one distribution. Order 6 is kept only on
/// strictly increasing index tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    pub dim: usize,
    pub m3: Option<SymTensor>,
    pub m4: Option<SymTensor>,
    pub m6: Option<DistinctM6>,
    pub provenance: Provenance,
}

impl MomentSet {
    pub fn m3(&self) -> Result<&SymTensor> {
        self.m3.as_ref().ok_or(Error::MissingMoment(3))
    }

    pub fn m4(&self) -> Result<&SymTensor> {
        self.m4.as_ref().ok_or(Error::MissingMoment(4))
    }

    pub fn m6(&self) -> Result<&DistinctM6> {
        self.m6.as_ref().ok_or(Error::MissingMoment(6))
    }

    pub fn orders(&self) -> Vec<usize> {
        let mut o = Vec::new();
        if self.m3.is_some() {
            o.push(3);
        }
        if self.m4.is_some() {
            o.push(4);
        }
        if self.m6.is_some() {
            o.push(6);
        }
        o
    }

    pub fn folded(&self) -> Result<FoldedMoments> {
        fold(self.m4()?, self.m6()?)
    }
}

pub(crate) fn check_orders(orders: &[usize]) -> Result<()> {
    for &o in orders {
        if !matches!(o, 3 | 4 | 6) {
            return Err(Error::UnsupportedOrder(o));
        }
    }
    Ok(())
}
