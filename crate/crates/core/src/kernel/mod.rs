//! Labeled random-walk graph kernel between two team graphs.
//!
//! For `G1 = {A1, L1}` and `G2 = {A2, L2}` of equal size `t`:
//!
//! ```text
//! Ker(G1, G2) = y' (I - c·L×(A1 ⊗ A2))⁻¹ L× x
//! L×          = Σ_k diag(L1(:,k)) ⊗ diag(L2(:,k))
//! ```
//!
//! with `x = x0 ⊗ x0`, `y = y0 ⊗ y0` built from per-node start/stop weights.
//! Both adjacencies are symmetric, so the transposes usually written on the
//! Kronecker factor are dropped. Product-graph states are indexed row-major:
//! the pair `(i, j)` lives at `i·t + j`.
//!
//! Four evaluators share this definition: [`kernel_direct`] (one dense
//! `t²` solve, the reference), [`kernel_series`] (truncated power series),
//! [`kernel_fast_exact`] (matrix inversion lemma around a per-team cache),
//! and [`kernel_fast_approx`] (rank-`r` eigendecomposition of `A_c`).

mod approx;
mod direct;
mod exact;

pub use approx::{
    build_lowrank_factors, kernel_approx_unshared, kernel_fast_approx, truncated_eigen, ApproxCache, LowRankFactors,
    TruncatedEigen,
};
pub use direct::{kernel_direct, kernel_series};
pub use exact::{build_precompute_cache, kernel_fast_exact, PrecomputeCache};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::team::TeamGraph;

/// Decay used when the caller asks for "auto": this fraction of `1 / guard bound`.
pub const AUTO_DECAY_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    /// The decay factor `c`.
    pub decay: f64,
    /// Per-node start weights `x0`; uniform `1/t` when absent.
    pub start: Option<Vec<f64>>,
    /// Per-node stop weights `y0`; uniform `1/t` when absent.
    pub stop: Option<Vec<f64>>,
    pub series_tol: f64,
    pub series_max_iter: usize,
    /// Attempt solves even when `c · bound ≥ 1`.
    pub allow_unguarded: bool,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self {
            decay: 0.1,
            start: None,
            stop: None,
            series_tol: 1e-12,
            series_max_iter: 10_000,
            allow_unguarded: false,
        }
    }
}

impl KernelParams {
    pub fn with_decay(decay: f64) -> Self {
        Self {
            decay,
            ..Self::default()
        }
    }

    pub fn validate(&self, t: usize) -> Result<()> {
        if !(self.decay.is_finite() && self.decay >= 0.0) {
            return Err(Error::Argument(format!(
                "decay must be a nonnegative real, got {}",
                self.decay
            )));
        }
        if !(self.series_tol.is_finite() && self.series_tol > 0.0) {
            return Err(Error::Argument(format!(
                "series_tol must be positive, got {}",
                self.series_tol
            )));
        }
        if self.series_max_iter == 0 {
            return Err(Error::Argument("series_max_iter must be positive".into()));
        }
        for (name, v) in [("start", &self.start), ("stop", &self.stop)] {
            if let Some(v) = v {
                if v.len() != t {
                    return Err(Error::Argument(format!(
                        "{name} vector has length {}, expected {t}",
                        v.len()
                    )));
                }
                if v.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                    return Err(Error::Argument(format!("{name} vector must be nonnegative")));
                }
            }
        }
        Ok(())
    }

    /// `x0`, the per-node start weights for a graph of size `t`.
    pub fn start_weights(&self, t: usize) -> DVector<f64> {
        node_weights(self.start.as_deref(), t)
    }

    /// `y0`, the per-node stop weights for a graph of size `t`.
    pub fn stop_weights(&self, t: usize) -> DVector<f64> {
        node_weights(self.stop.as_deref(), t)
    }
}

fn node_weights(given: Option<&[f64]>, t: usize) -> DVector<f64> {
    match given {
        Some(v) => DVector::from_column_slice(v),
        None => DVector::from_element(t, 1.0 / t as f64),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMethod {
    Direct,
    Series,
    FastExact,
    FastApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: f64,
    pub method: KernelMethod,
    pub converged: bool,
}

/// Diagonal of `L× = Σ_k diag(L1(:,k)) ⊗ diag(L2(:,k))`.
///
/// Entry `i·t2 + j` is the skill dot product of node `i` in the first graph
/// and node `j` in the second. For binary skills this is the number of
/// shared skills, zero on label inconsistency.
pub fn label_product(l1: &DMatrix<f64>, l2: &DMatrix<f64>) -> Result<DVector<f64>> {
    if l1.ncols() != l2.ncols() {
        return Err(Error::Argument(format!(
            "skill dimensions differ: {} vs {}",
            l1.ncols(),
            l2.ncols()
        )));
    }
    let dots = l1 * l2.transpose();
    let (t1, t2) = dots.shape();
    Ok(DVector::from_fn(t1 * t2, |idx, _| dots[(idx / t2, idx % t2)]))
}

/// `a ⊗ b` for vectors.
pub(crate) fn kron_vec(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let nb = b.len();
    DVector::from_fn(a.len() * nb, |idx, _| a[idx / nb] * b[idx % nb])
}

pub(crate) fn max_row_sum(a: &DMatrix<f64>) -> f64 {
    a.row_iter().map(|r| r.iter().sum::<f64>()).fold(0.0, f64::max)
}

/// Upper bound on the spectral radius of `L×(A1 ⊗ A2)`:
/// `max rowsum(A1) · max rowsum(A2) · max L×`, the ∞-norm of the product
/// for nonnegative inputs. `c · bound < 1` guarantees the series converges.
pub fn guard_bound(a1: &DMatrix<f64>, a2: &DMatrix<f64>, lx: &DVector<f64>) -> f64 {
    let lmax = lx.iter().copied().fold(0.0, f64::max);
    max_row_sum(a1) * max_row_sum(a2) * lmax
}

/// Decay chosen for a given guard bound when the caller passes "auto".
pub fn auto_decay(bound: f64) -> f64 {
    if bound > 0.0 {
        AUTO_DECAY_FRACTION / bound
    } else {
        AUTO_DECAY_FRACTION
    }
}

/// Guard bound for a pair of team graphs.
pub fn pair_guard_bound(g1: &TeamGraph, g2: &TeamGraph) -> Result<f64> {
    let lx = label_product(g1.skills(), g2.skills())?;
    Ok(guard_bound(g1.adjacency(), g2.adjacency(), &lx))
}

pub(crate) fn check_guard(decay: f64, bound: f64, params: &KernelParams) -> Result<()> {
    if decay * bound >= 1.0 && !params.allow_unguarded {
        return Err(Error::NonConvergence {
            decay,
            guard_bound: bound,
            detail: None,
        });
    }
    Ok(())
}

pub(crate) fn check_pair(g1: &TeamGraph, g2: &TeamGraph) -> Result<()> {
    if g1.t() != g2.t() {
        return Err(Error::Argument(format!("team sizes differ: {} vs {}", g1.t(), g2.t())));
    }
    if g1.l() != g2.l() {
        return Err(Error::Argument(format!(
            "skill dimensions differ: {} vs {}",
            g1.l(),
            g2.l()
        )));
    }
    Ok(())
}
