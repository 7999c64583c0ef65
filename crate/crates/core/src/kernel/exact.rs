//! Exact per-candidate kernel via the matrix inversion lemma.
//!
//! Write the original team as `{A1, L1}` and the team after `q` takes the
//! last slot as `{A2, L2}` with
//!
//! ```text
//! A2 = A_c + E F,       E = [w, s],  F = [s'; w']
//! L2 = L_c + s σ'       (σ = q's skill row)
//! ```
//!
//! where `A_c`/`L_c` zero the slot's row (and column), `w` holds q's weights
//! to the retained members and `s` is the slot indicator. Then
//!
//! ```text
//! I - c·L×2(A1⊗A2) = Z - c·X Y,    Z = I - c·L×c(A1⊗A_c)
//! ```
//!
//! and `Z` does not depend on `q`. With `P Q = Σ_j L1^(j) ⊗ s f^(j)` (the
//! slot's label change), the candidate-dependent part has three blocks:
//! `P·Q(A1⊗A_c)`, `L×c(A1⊗E)(I⊗F)` and `PQ(A1⊗E)(I⊗F)`. The first is zero
//! because `A_c`'s slot row is zero; in the other two only the `w s'` half of
//! the second and the `s w'` half of the third survive (`L×c` vanishes on
//! slot states, `w` vanishes on the slot). The update therefore has rank
//! `2t`:
//!
//! ```text
//! X = [ L×c(A1 ⊗ w) | PQ(A1 ⊗ s) ]      (t² × 2t)
//! Y = [ I ⊗ s'      ; I ⊗ w'      ]      (2t × t²)
//! Ker = b + y'r' + c·y'Z⁻¹X · (I - c·Y Z⁻¹ X)⁻¹ · Y (Z⁻¹R + r')
//! ```
//!
//! with `R = L×c x`, `b = y'Z⁻¹R` and `r' = Z⁻¹ PQ x` as in the usual
//! fast-exact formulation. `Z⁻¹X` is assembled from two cached pieces, so a
//! candidate costs `O(t⁴)` plus a `2t × 2t` solve.

use nalgebra::{DMatrix, DVector, RowDVector};

use super::{check_guard, kron_vec, label_product, max_row_sum, KernelMethod, KernelParams, KernelValue};
use crate::error::{Error, Result};
use crate::team::TeamGraph;

/// Per-(team, leaver, params) quantities reused across all candidates.
#[derive(Debug, Clone)]
pub struct PrecomputeCache {
    /// `Z⁻¹`, `t² × t²`.
    pub z_inv: DMatrix<f64>,
    /// `R = L×c x`.
    pub r_vec: DVector<f64>,
    /// `b = y'Z⁻¹R`.
    pub b_scalar: f64,
    /// `c·y'Z⁻¹`.
    pub left_row: RowDVector<f64>,
    zinv_r: DVector<f64>,
    /// Columns of `Z⁻¹` at the slot states `(i, t-1)`, `t² × t`.
    zinv_slot: DMatrix<f64>,
    /// `Z⁻¹ L×c (A1 ⊗ I)`, `t² × t²`.
    zinv_label_adj: DMatrix<f64>,
    a1: DMatrix<f64>,
    l1: DMatrix<f64>,
    x: DVector<f64>,
    y: DVector<f64>,
    a_c_row_sums: DVector<f64>,
    a1_max_row: f64,
    lxc_max: f64,
    members: Vec<usize>,
    params: KernelParams,
}

impl PrecomputeCache {
    pub fn t(&self) -> usize {
        self.a1.nrows()
    }

    fn check_matches(&self, team: &TeamGraph, params: &KernelParams) -> Result<()> {
        if team.members() != self.members.as_slice() {
            return Err(Error::CacheMismatch("cache was built for a different team".into()));
        }
        if team.adjacency() != &self.a1 || team.skills() != &self.l1 {
            return Err(Error::CacheMismatch(
                "team graph changed since the cache was built".into(),
            ));
        }
        if params.decay.to_bits() != self.params.decay.to_bits()
            || params.start != self.params.start
            || params.stop != self.params.stop
        {
            return Err(Error::CacheMismatch(
                "kernel parameters differ from the cached ones".into(),
            ));
        }
        Ok(())
    }
}

/// Builds `Z⁻¹`, `R`, `b` and `c·y'Z⁻¹` for a team whose last slot is being replaced.
pub fn build_precompute_cache(team: &TeamGraph, params: &KernelParams) -> Result<PrecomputeCache> {
    let t = team.t();
    params.validate(t)?;
    let c = params.decay;
    let a1 = team.adjacency().clone();
    let a_c = team.adjacency_without_slot();
    let l1 = team.skills().clone();
    let mut l_c = l1.clone();
    l_c.row_mut(t - 1).fill(0.0);
    let lxc = label_product(&l1, &l_c)?;
    let lxc_max = lxc.iter().copied().fold(0.0, f64::max);
    let a1_max_row = max_row_sum(&a1);
    let bound = a1_max_row * max_row_sum(&a_c) * lxc_max;
    check_guard(c, bound, params)?;

    let n = t * t;
    let mut z = a1.kronecker(&a_c);
    for (row, mut r) in z.row_iter_mut().enumerate() {
        r *= -c * lxc[row];
    }
    for d in 0..n {
        z[(d, d)] += 1.0;
    }
    let z_inv = z.try_inverse().ok_or_else(|| Error::singular(c, bound, "Z"))?;

    let x = kron_vec(&params.start_weights(t), &params.start_weights(t));
    let y = kron_vec(&params.stop_weights(t), &params.stop_weights(t));
    let r_vec = lxc.component_mul(&x);
    let zinv_r = &z_inv * &r_vec;
    let b_scalar = y.dot(&zinv_r);
    let left_row = (z_inv.tr_mul(&y) * c).transpose();

    let slot = t - 1;
    let zinv_slot = DMatrix::from_fn(n, t, |row, i| z_inv[(row, i * t + slot)]);

    // Column (k, b) of Z⁻¹L×c(A1⊗I) is Σ_i Z⁻¹[:, (i,b)] · L×c(i,b) · A1(i,k).
    let mut zinv_label_adj = DMatrix::zeros(n, n);
    for b in 0..t {
        let scaled = DMatrix::from_fn(n, t, |row, i| z_inv[(row, i * t + b)] * lxc[i * t + b]);
        let block = scaled * &a1;
        for k in 0..t {
            zinv_label_adj.column_mut(k * t + b).copy_from(&block.column(k));
        }
    }

    let a_c_row_sums = DVector::from_fn(t, |i, _| a_c.row(i).sum());
    Ok(PrecomputeCache {
        z_inv,
        r_vec,
        b_scalar,
        left_row,
        zinv_r,
        zinv_slot,
        zinv_label_adj,
        a1,
        l1,
        x,
        y,
        a_c_row_sums,
        a1_max_row,
        lxc_max,
        members: team.members().to_vec(),
        params: params.clone(),
    })
}

/// Kernel between `team` and the team with `candidate` in the last slot.
///
/// `candidate_edges` are the candidate's weights to the retained members
/// in team order (length `t - 1`); `candidate_skills` has length `l`.
pub fn kernel_fast_exact(
    team: &TeamGraph,
    cache: &PrecomputeCache,
    candidate_edges: &[f64],
    candidate_skills: &[f64],
    params: &KernelParams,
) -> Result<KernelValue> {
    cache.check_matches(team, params)?;
    score(cache, candidate_edges, candidate_skills, params).map(|value| KernelValue {
        value,
        method: KernelMethod::FastExact,
        converged: true,
    })
}

fn score(
    cache: &PrecomputeCache,
    candidate_edges: &[f64],
    candidate_skills: &[f64],
    params: &KernelParams,
) -> Result<f64> {
    let t = cache.t();
    let l = cache.l1.ncols();
    let c = params.decay;
    if candidate_edges.len() != t - 1 || candidate_skills.len() != l {
        return Err(Error::Argument(format!(
            "candidate profile has {} edges and {} skills, expected {} and {l}",
            candidate_edges.len(),
            candidate_skills.len(),
            t - 1
        )));
    }
    if candidate_edges
        .iter()
        .chain(candidate_skills)
        .any(|w| !(w.is_finite() && *w >= 0.0))
    {
        return Err(Error::Validation(
            "candidate weights must be finite and nonnegative".into(),
        ));
    }

    let sigma = DVector::from_column_slice(candidate_skills);
    // d_i = L1(i,:)·σ, the slot entries of PQ.
    let d = &cache.l1 * &sigma;

    let slot_sum: f64 = candidate_edges.iter().sum();
    let a2_max_row = cache
        .a_c_row_sums
        .iter()
        .zip(candidate_edges.iter().chain(std::iter::once(&0.0)))
        .map(|(r, w)| r + w)
        .fold(slot_sum, f64::max);
    let bound = cache.a1_max_row * a2_max_row * d.iter().copied().fold(cache.lxc_max, f64::max);
    check_guard(c, bound, params)?;

    let n = t * t;
    let slot = t - 1;
    let nonzero: Vec<(usize, f64)> = candidate_edges
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, w)| w != 0.0)
        .collect();

    // Z⁻¹X: first t columns from the cached Z⁻¹L×c(A1⊗I), last t from the slot columns.
    let mut zx = DMatrix::zeros(n, 2 * t);
    for k in 0..t {
        let mut col = zx.column_mut(k);
        for &(a, w) in &nonzero {
            col.axpy(w, &cache.zinv_label_adj.column(k * t + a), 1.0);
        }
    }
    let slot_coef = DMatrix::from_fn(t, t, |i, k| d[i] * cache.a1[(i, k)]);
    zx.columns_mut(t, t).copy_from(&(&cache.zinv_slot * slot_coef));

    let xd = DVector::from_fn(t, |i, _| d[i] * cache.x[i * t + slot]);
    let r_prime = &cache.zinv_slot * xd;
    let u = &cache.zinv_r + &r_prime;

    // Y applied to Z⁻¹X and to u: rows (k, s') pick state (k, slot), rows (k, w') mix states (k, ·) by w.
    let mut yzx = DMatrix::zeros(2 * t, 2 * t);
    let mut yu = DVector::zeros(2 * t);
    for k in 0..t {
        yzx.row_mut(k).copy_from(&zx.row(k * t + slot));
        yu[k] = u[k * t + slot];
        for &(a, w) in &nonzero {
            for col in 0..2 * t {
                yzx[(t + k, col)] += w * zx[(k * t + a, col)];
            }
            yu[t + k] += w * u[k * t + a];
        }
    }

    let mut inner = yzx * (-c);
    for i in 0..2 * t {
        inner[(i, i)] += 1.0;
    }
    let v = inner
        .lu()
        .solve(&yu)
        .ok_or_else(|| Error::singular(c, bound, "I - c·YZ⁻¹X"))?;
    let y_zx = zx.tr_mul(&cache.y);
    let value = cache.b_scalar + cache.y.dot(&r_prime) + c * y_zx.dot(&v);
    if !value.is_finite() {
        return Err(Error::Numeric("fast exact kernel produced a non-finite value".into()));
    }
    Ok(value)
}
