use std::sync::Arc;

use nalgebra::DMatrix;

use super::{empirical_moments, exact_moments, MomentSet, Provenance};
use crate::error::{Error, Result};
use crate::gmm::{GmmParams, SampleBatch};

/// Anything that can produce moments of a distribution, and of its image under
/// an orthonormal change of frame `x -> F^T x`.
pub trait MomentSource: Send + Sync {
    fn dim(&self) -> usize;
    fn provenance(&self) -> Provenance;
    fn moments(&self, orders: &[usize]) -> Result<MomentSet>;
    fn project(&self, frame: &DMatrix<f64>) -> Result<Box<dyn MomentSource>>;
    fn describe(&self) -> String;
}

fn check_frame(dim: usize, frame: &DMatrix<f64>) -> Result<()> {
    if frame.nrows() != dim {
        return Err(Error::Format(format!("frame has {} rows, source dimension is {dim}", frame.nrows())));
    }
    Ok(())
}

/// Exact moments of known parameters. Projection maps the parameters
/// (`F^T mu`, `F^T Sigma F`), which is the same as contracting every moment
/// tensor with `F`.
#[derive(Debug, Clone)]
pub struct ExactSource {
    pub params: GmmParams,
}

impl ExactSource {
    pub fn new(params: GmmParams) -> Self {
        Self { params }
    }
}

impl MomentSource for ExactSource {
    fn dim(&self) -> usize {
        self.params.n()
    }

    fn provenance(&self) -> Provenance {
        Provenance::Exact
    }

    fn moments(&self, orders: &[usize]) -> Result<MomentSet> {
        exact_moments(&self.params, orders)
    }

    fn project(&self, frame: &DMatrix<f64>) -> Result<Box<dyn MomentSource>> {
        check_frame(self.dim(), frame)?;
        let ft = frame.transpose();
        let params = GmmParams {
            weights: self.params.weights.clone(),
            means: self.params.means.iter().map(|m| &ft * m).collect(),
            covariances: self
                .params
                .covariances
                .iter()
                .map(|c| crate::linalg::symmetrize(&(&ft * c * frame)))
                .collect(),
            scale: self.params.scale,
        };
        Ok(Box::new(ExactSource { params }))
    }

    fn describe(&self) -> String {
        "exact".into()
    }
}

/// Sample moments of a batch; projection maps the samples.
#[derive(Debug, Clone)]
pub struct EmpiricalSource {
    pub batch: Arc<SampleBatch>,
}

impl EmpiricalSource {
    pub fn new(batch: SampleBatch) -> Self {
        Self { batch: Arc::new(batch) }
    }
}

impl MomentSource for EmpiricalSource {
    fn dim(&self) -> usize {
        self.batch.dim()
    }

    fn provenance(&self) -> Provenance {
        Provenance::Empirical { samples: self.batch.len() }
    }

    fn moments(&self, orders: &[usize]) -> Result<MomentSet> {
        empirical_moments(&self.batch, orders)
    }

    fn project(&self, frame: &DMatrix<f64>) -> Result<Box<dyn MomentSource>> {
        check_frame(self.dim(), frame)?;
        Ok(Box::new(EmpiricalSource::new(self.batch.project(frame))))
    }

    fn describe(&self) -> String {
        format!("empirical:{}", self.batch.len())
    }
}

/// A fixed, previously computed moment set. Projection contracts the stored
/// tensors of order 3 and 4; order 6 is only held at distinct indices and
/// cannot be projected.
#[derive(Debug, Clone)]
pub struct StoredSource {
    pub set: MomentSet,
}

impl MomentSource for StoredSource {
    fn dim(&self) -> usize {
        self.set.dim
    }

    fn provenance(&self) -> Provenance {
        self.set.provenance
    }

    fn moments(&self, orders: &[usize]) -> Result<MomentSet> {
        super::check_orders(orders)?;
        let mut out = MomentSet { dim: self.set.dim, m3: None, m4: None, m6: None, provenance: self.set.provenance };
        for &o in orders {
            match o {
                3 => out.m3 = Some(self.set.m3()?.clone()),
                4 => out.m4 = Some(self.set.m4()?.clone()),
                _ => out.m6 = Some(self.set.m6()?.clone()),
            }
        }
        Ok(out)
    }

    fn project(&self, frame: &DMatrix<f64>) -> Result<Box<dyn MomentSource>> {
        check_frame(self.dim(), frame)?;
        let set = MomentSet {
            dim: frame.ncols(),
            m3: self.set.m3.as_ref().map(|t| t.contract(frame)).transpose()?,
            m4: self.set.m4.as_ref().map(|t| t.contract(frame)).transpose()?,
            m6: None,
            provenance: self.set.provenance,
        };
        Ok(Box::new(StoredSource { set }))
    }

    fn describe(&self) -> String {
        "stored".into()
    }
}
