#![allow(dead_code)]

use momgmm_core::gmm::{smooth_perturb, InstancePreset, MeanMode, RandomPreset, SmoothingConfig, WeightScheme};
use momgmm_core::linalg::sym_to_iso;
use momgmm_core::span::{Ambient, Subspace};
use momgmm_core::GmmParams;
use nalgebra::DMatrix;

/// Random preset, uniform weights, smoothed at `rho`.
pub fn smoothed(n: usize, k: usize, rho: f64, mode: MeanMode, seed: u64) -> GmmParams {
    let base = RandomPreset.generate(n, k, mode, WeightScheme::Uniform, seed);
    smooth_perturb(&base, &SmoothingConfig::relaxed(rho, seed, mode)).unwrap()
}

/// Ground-truth span of the covariances in pair coordinates.
pub fn true_span(p: &GmmParams) -> Subspace {
    let iso = DMatrix::from_columns(&p.covariances.iter().map(sym_to_iso).collect::<Vec<_>>());
    Subspace::span_of(&iso, p.k(), Ambient::SymPairs(p.n())).unwrap()
}
