//! Rank-`r` approximate kernel.
//!
//! `A_c` is replaced by its top-`r` eigenpairs `U Λ U'` (by magnitude), so
//!
//! ```text
//! A1 ≈ X1 Y1,   X1 = [U, w1, s],  Y1 = [V; s'; w1']     (V = ΛU')
//! A2 ≈ X2 Y2,   X2 = [U, w2, s],  Y2 = [V; s'; w2']
//! ```
//!
//! and the matrix inversion lemma on `I - c·L×(X1⊗X2)(Y1⊗Y2)` gives
//!
//! ```text
//! Ker ≈ Σ_j k1j·k2j + c · (Σ_j S1j⊗S2j) · M⁻¹ · (Σ_j T1j⊗T2j)
//! M    = I - c Σ_j B1j ⊗ B2j,       Bgj = Yg diag(Lg(:,j)) Xg
//! Sgj  = y0' diag(Lg(:,j)) Xg,      Tgj = Yg diag(Lg(:,j)) x0,   kgj = y0' diag(Lg(:,j)) x0
//! ```
//!
//! with `p = r + 2` and `M` of size `p²`. Because `U` has a zero slot row
//! apart from the padding vector (whose eigenvalue is 0), `V s = 0`, and each
//! `B2j` is a fixed `r × r` block `V diag(Lc(:,j)) U` bordered by two
//! candidate-dependent rows and columns. [`ApproxCache`] factors the fixed
//! part of `M` once per team and solves the border by a Schur complement.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{check_guard, max_row_sum, KernelMethod, KernelParams, KernelValue};
use crate::error::{Error, Result};
use crate::team::TeamGraph;

/// Eigenpairs of a symmetric matrix, largest `|λ|` first.
#[derive(Debug, Clone)]
pub struct TruncatedEigen {
    pub values: DVector<f64>,
    /// One eigenvector per column, in the order of `values`.
    pub vectors: DMatrix<f64>,
    /// Eigenvalues beyond the truncation, same ordering.
    pub dropped: DVector<f64>,
}

/// Keeps the `r` eigenpairs of largest magnitude. Equal magnitudes keep the
/// pair the solver reported first.
pub fn truncated_eigen(a: &DMatrix<f64>, r: usize) -> Result<TruncatedEigen> {
    let n = a.nrows();
    if !a.is_square() {
        return Err(Error::Argument(format!(
            "eigendecomposition needs a square matrix, got {:?}",
            a.shape()
        )));
    }
    if r > n {
        return Err(Error::Argument(format!("rank {r} exceeds matrix size {n}")));
    }
    if n == 0 {
        return Ok(TruncatedEigen {
            values: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
            dropped: DVector::zeros(0),
        });
    }
    let eig = SymmetricEigen::try_new(a.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric(format!("symmetric eigensolver did not converge on a {n}×{n} matrix")))?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite eigenvalue in a {n}×{n} matrix")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].abs().total_cmp(&eig.eigenvalues[i].abs()));
    let (keep, drop) = order.split_at(r);
    Ok(TruncatedEigen {
        values: DVector::from_iterator(r, keep.iter().map(|&i| eig.eigenvalues[i])),
        vectors: DMatrix::from_fn(n, r, |row, k| eig.eigenvectors[(row, keep[k])]),
        dropped: DVector::from_iterator(drop.len(), drop.iter().map(|&i| eig.eigenvalues[i])),
    })
}

/// Rank-`r` factors of a team's `A_c` plus the leaver's rank-2 border.
#[derive(Debug, Clone)]
pub struct LowRankFactors {
    /// `t × r`; the slot row is zero except for the padding vector used when `r = t`.
    pub u: DMatrix<f64>,
    /// Diagonal of `Λ`.
    pub lambda: DVector<f64>,
    /// `Λ U'`, `r × t`.
    pub v: DMatrix<f64>,
    pub rank_r: usize,
    /// `[w1, s]`, `t × 2`.
    pub e1: DMatrix<f64>,
    /// `[s'; w1']`, `2 × t`.
    pub f1: DMatrix<f64>,
    /// Eigenvalues of `A_c` left out of `Λ`.
    pub dropped: DVector<f64>,
}

impl LowRankFactors {
    pub fn t(&self) -> usize {
        self.u.nrows()
    }

    /// `U Λ U'`.
    pub fn reconstruction(&self) -> DMatrix<f64> {
        &self.u * &self.v
    }

    /// `‖A_c - UΛU'‖_F`, i.e. the norm of the dropped spectrum.
    pub fn approximation_error(&self) -> f64 {
        self.dropped.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn w1(&self) -> DVector<f64> {
        self.e1.column(0).into_owned()
    }
}

/// Top-`rank_r` eigendecomposition of the team's `A_c`.
///
/// Only the retained block is decomposed, so every eigenvector has a zero
/// slot entry. `rank_r = t` appends the slot indicator with eigenvalue 0.
pub fn build_lowrank_factors(team: &TeamGraph, rank_r: usize) -> Result<LowRankFactors> {
    let t = team.t();
    if rank_r > t {
        return Err(Error::Argument(format!("rank_r = {rank_r} exceeds team size {t}")));
    }
    let m = t - 1;
    let block = team.adjacency().view((0, 0), (m, m)).into_owned();
    let eig = truncated_eigen(&block, rank_r.min(m))?;
    let k = eig.values.len();

    let mut u = DMatrix::zeros(t, rank_r);
    u.view_mut((0, 0), (m, k)).copy_from(&eig.vectors);
    let mut lambda = DVector::zeros(rank_r);
    lambda.rows_mut(0, k).copy_from(&eig.values);
    if rank_r == t {
        u[(t - 1, t - 1)] = 1.0;
    }
    let v = DMatrix::from_fn(rank_r, t, |row, i| lambda[row] * u[(i, row)]);

    let w1 = team.slot_edges();
    let s = slot_vector(t);
    Ok(LowRankFactors {
        u,
        lambda,
        v,
        rank_r,
        e1: DMatrix::from_columns(&[w1.clone(), s.clone()]),
        f1: DMatrix::from_rows(&[s.transpose(), w1.transpose()]),
        dropped: eig.dropped,
    })
}

fn slot_vector(t: usize) -> DVector<f64> {
    let mut s = DVector::zeros(t);
    s[t - 1] = 1.0;
    s
}

/// `X = [U, w, s]`.
fn left_factor(u: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let (t, r) = u.shape();
    let mut x = DMatrix::zeros(t, r + 2);
    x.columns_mut(0, r).copy_from(u);
    x.column_mut(r).copy_from(w);
    x[(t - 1, r + 1)] = 1.0;
    x
}

/// `Y = [V; s'; w']`.
fn right_factor(v: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let (r, t) = v.shape();
    let mut y = DMatrix::zeros(r + 2, t);
    y.rows_mut(0, r).copy_from(v);
    y[(r, t - 1)] = 1.0;
    y.row_mut(r + 1).copy_from(&w.transpose());
    y
}

/// Per-skill pieces `B_j`, `S_j`, `T_j`, `k_j` of one graph.
struct SideTerms {
    b: Vec<DMatrix<f64>>,
    s: Vec<DVector<f64>>,
    t: Vec<DVector<f64>>,
    k: Vec<f64>,
}

fn side_terms(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    labels: &DMatrix<f64>,
    x0: &DVector<f64>,
    y0: &DVector<f64>,
) -> SideTerms {
    let l = labels.ncols();
    let mut out = SideTerms {
        b: Vec::with_capacity(l),
        s: Vec::with_capacity(l),
        t: Vec::with_capacity(l),
        k: Vec::with_capacity(l),
    };
    for j in 0..l {
        let d = labels.column(j);
        let mut dx = x.clone();
        for (i, mut row) in dx.row_iter_mut().enumerate() {
            row *= d[i];
        }
        out.b.push(y * &dx);
        out.s.push(dx.tr_mul(y0));
        let dx0 = d.component_mul(x0);
        out.t.push(y * &dx0);
        out.k.push(y0.dot(&dx0));
    }
    out
}

/// Evaluates the approximate kernel by one dense `p² × p²` solve.
fn dense_solve(one: &SideTerms, two: &SideTerms, c: f64, bound: f64) -> Result<f64> {
    let p = one.b.first().map_or(0, |b| b.nrows());
    let n = p * p;
    let mut m = DMatrix::identity(n, n);
    let mut rhs = DVector::zeros(n);
    let mut left = DVector::zeros(n);
    let mut value = 0.0;
    for j in 0..one.b.len() {
        m -= one.b[j].kronecker(&two.b[j]) * c;
        rhs += one.t[j].kronecker(&two.t[j]);
        left += one.s[j].kronecker(&two.s[j]);
        value += one.k[j] * two.k[j];
    }
    let z = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::singular(c, bound, "rank-r inner system"))?;
    Ok(value + c * left.dot(&z))
}

/// Team-level data for scoring many candidates against one set of factors.
#[derive(Debug, Clone)]
pub struct ApproxCache {
    factors: LowRankFactors,
    params: KernelParams,
    one_b: Vec<DMatrix<f64>>,
    one_s: Vec<DVector<f64>>,
    one_t: Vec<DVector<f64>>,
    one_k: Vec<f64>,
    /// `V diag(Lc(:,j))`, `r × t`.
    v_lc: Vec<DMatrix<f64>>,
    /// `U' diag(Lc(:,j))`, `r × t`.
    u_lc: Vec<DMatrix<f64>>,
    /// `V diag(Lc(:,j)) U`, `r × r`.
    fixed: Vec<DMatrix<f64>>,
    y_lc_u: Vec<DVector<f64>>,
    v_lc_x: Vec<DVector<f64>>,
    y_lc_x: Vec<f64>,
    u_last: DVector<f64>,
    lc: DMatrix<f64>,
    l1: DMatrix<f64>,
    x0: DVector<f64>,
    y0: DVector<f64>,
    /// `Σ_j S1j ⊗ (y0' diag(Lc(:,j)) U)`, the candidate-free part of `S` on the fixed block.
    s_fixed: DVector<f64>,
    schur: Option<Schur>,
    a1_max_row: f64,
    a_c_row_sums: DVector<f64>,
    lxc_max: f64,
}

/// Inverse of the fixed block of `M` and its solve against the fixed part of `T`.
#[derive(Debug, Clone)]
struct Schur {
    inv: DMatrix<f64>,
    q: DVector<f64>,
}

impl ApproxCache {
    pub fn build(team: &TeamGraph, factors: &LowRankFactors, params: &KernelParams) -> Result<Self> {
        let t = team.t();
        params.validate(t)?;
        if factors.t() != t || factors.w1() != team.slot_edges() {
            return Err(Error::CacheMismatch(
                "low-rank factors were built for a different team".into(),
            ));
        }
        let c = params.decay;
        let r = factors.rank_r;
        let l = team.l();
        let x0 = params.start_weights(t);
        let y0 = params.stop_weights(t);
        let l1 = team.skills().clone();
        let mut lc = l1.clone();
        lc.row_mut(t - 1).fill(0.0);

        let a_c = team.adjacency_without_slot();
        let lxc_max = (&l1 * lc.transpose()).iter().copied().fold(0.0, f64::max);
        let a1_max_row = max_row_sum(team.adjacency());
        let bound = a1_max_row * max_row_sum(&a_c) * lxc_max;
        check_guard(c, bound, params)?;

        let w1 = factors.w1();
        let one = side_terms(
            &left_factor(&factors.u, &w1),
            &right_factor(&factors.v, &w1),
            &l1,
            &x0,
            &y0,
        );

        let mut v_lc = Vec::with_capacity(l);
        let mut u_lc = Vec::with_capacity(l);
        let mut fixed = Vec::with_capacity(l);
        let mut y_lc_u = Vec::with_capacity(l);
        let mut v_lc_x = Vec::with_capacity(l);
        let mut y_lc_x = Vec::with_capacity(l);
        for j in 0..l {
            let d = lc.column(j);
            let vd = DMatrix::from_fn(r, t, |k, i| factors.v[(k, i)] * d[i]);
            let ud = DMatrix::from_fn(r, t, |k, i| factors.u[(i, k)] * d[i]);
            fixed.push(&vd * &factors.u);
            y_lc_u.push(&ud * &y0);
            v_lc_x.push(&vd * &x0);
            y_lc_x.push(y0.component_mul(&x0).dot(&d));
            v_lc.push(vd);
            u_lc.push(ud);
        }
        let u_last = factors.u.row(t - 1).transpose();

        let p = r + 2;
        let nf = p * r;
        let mut s_fixed = DVector::zeros(nf);
        for (s1, yu) in one.s.iter().zip(&y_lc_u) {
            s_fixed += s1.kronecker(yu);
        }
        let schur = if r == 0 {
            Some(Schur {
                inv: DMatrix::zeros(0, 0),
                q: DVector::zeros(0),
            })
        } else {
            let mut kff = DMatrix::identity(nf, nf);
            let mut tf = DVector::zeros(nf);
            for j in 0..l {
                kff -= one.b[j].kronecker(&fixed[j]) * c;
                tf += one.t[j].kronecker(&v_lc_x[j]);
            }
            kff.try_inverse().map(|inv| {
                let q = &inv * tf;
                Schur { inv, q }
            })
        };

        Ok(Self {
            factors: factors.clone(),
            params: params.clone(),
            one_b: one.b,
            one_s: one.s,
            one_t: one.t,
            one_k: one.k,
            v_lc,
            u_lc,
            fixed,
            y_lc_u,
            v_lc_x,
            y_lc_x,
            u_last,
            lc,
            l1,
            x0,
            y0,
            s_fixed,
            schur,
            a1_max_row,
            a_c_row_sums: DVector::from_fn(t, |i, _| a_c.row(i).sum()),
            lxc_max,
        })
    }

    pub fn factors(&self) -> &LowRankFactors {
        &self.factors
    }

    /// Approximate kernel for a candidate given in retained-member order.
    pub fn score(&self, candidate_edges: &[f64], candidate_skills: &[f64]) -> Result<KernelValue> {
        let t = self.factors.t();
        let l = self.lc.ncols();
        let r = self.factors.rank_r;
        let p = r + 2;
        let c = self.params.decay;
        let (w2, sigma) = candidate_vectors(t, l, candidate_edges, candidate_skills)?;

        let d = &self.l1 * &sigma;
        let a2_max_row = self
            .a_c_row_sums
            .iter()
            .zip(w2.iter())
            .map(|(a, w)| a + w)
            .fold(w2.sum(), f64::max);
        let bound = self.a1_max_row * a2_max_row * d.iter().copied().fold(self.lxc_max, f64::max);
        check_guard(c, bound, &self.params)?;

        let (x_last, y_last) = (self.x0[t - 1], self.y0[t - 1]);
        let w2x = w2.component_mul(&self.x0);
        let w2y = w2.component_mul(&self.y0);
        let w2sq = w2.component_mul(&w2);

        // Border of B2j: columns r, r+1 over the fixed rows, rows r, r+1 over the
        // fixed columns, and the 2×2 corner. Column r+1 over the fixed rows is V s = 0.
        let mut col = Vec::with_capacity(l);
        let mut row = Vec::with_capacity(l);
        let mut corner = Vec::with_capacity(l);
        let mut t2_border = Vec::with_capacity(l);
        let mut s2_border = Vec::with_capacity(l);
        let mut k2 = Vec::with_capacity(l);
        for j in 0..l {
            let lcj = self.lc.column(j);
            let sj = sigma[j];
            col.push(&self.v_lc[j] * &w2);
            let mut rj = DMatrix::zeros(2, r);
            rj.row_mut(0).copy_from(&(&self.u_last * sj).transpose());
            rj.row_mut(1).copy_from(&(&self.u_lc[j] * &w2).transpose());
            row.push(rj);
            corner.push([[0.0, sj], [w2sq.dot(&lcj), 0.0]]);
            t2_border.push([sj * x_last, w2x.dot(&lcj)]);
            s2_border.push([w2y.dot(&lcj), sj * y_last]);
            k2.push(self.y_lc_x[j] + sj * y_last * x_last);
        }
        let base: f64 = self.one_k.iter().zip(&k2).map(|(a, b)| a * b).sum();

        let Some(schur) = &self.schur else {
            let two = SideTerms {
                b: (0..l)
                    .map(|j| {
                        let mut b = DMatrix::zeros(p, p);
                        b.view_mut((0, 0), (r, r)).copy_from(&self.fixed[j]);
                        b.view_mut((0, r), (r, 1)).copy_from(&col[j]);
                        b.view_mut((r, 0), (2, r)).copy_from(&row[j]);
                        for (a, corner_row) in corner[j].iter().enumerate() {
                            b[(r + a, r)] = corner_row[0];
                            b[(r + a, r + 1)] = corner_row[1];
                        }
                        b
                    })
                    .collect(),
                s: (0..l)
                    .map(|j| {
                        let mut s = DVector::zeros(p);
                        s.rows_mut(0, r)
                            .copy_from(&(&self.y_lc_u[j] + &self.u_last * (sigma[j] * y_last)));
                        s[r] = s2_border[j][0];
                        s[r + 1] = s2_border[j][1];
                        s
                    })
                    .collect(),
                t: (0..l)
                    .map(|j| {
                        let mut v = DVector::zeros(p);
                        v.rows_mut(0, r).copy_from(&self.v_lc_x[j]);
                        v[r] = t2_border[j][0];
                        v[r + 1] = t2_border[j][1];
                        v
                    })
                    .collect(),
                k: k2,
            };
            let one = SideTerms {
                b: self.one_b.clone(),
                s: self.one_s.clone(),
                t: self.one_t.clone(),
                k: self.one_k.clone(),
            };
            return finish(dense_solve(&one, &two, c, bound)?);
        };

        // M split by the second index: fixed states (a, b<r) and border states (a, r|r+1).
        let nf = p * r;
        let nd = 2 * p;
        // Only the even border columns of M_FD are nonzero, so they are kept
        // compactly: column a2 here is border column 2·a2.
        let mut m_fd = DMatrix::zeros(nf, p);
        let mut m_df = DMatrix::zeros(nd, nf);
        let mut m_dd = DMatrix::identity(nd, nd);
        let mut t_d = DVector::zeros(nd);
        let mut s_d = DVector::zeros(nd);
        for j in 0..l {
            let b1 = &self.one_b[j];
            for a in 0..p {
                for a2 in 0..p {
                    let coef = c * b1[(a, a2)];
                    if coef == 0.0 {
                        continue;
                    }
                    for b in 0..r {
                        m_fd[(a * r + b, a2)] -= coef * col[j][b];
                        m_df[(a * 2, a2 * r + b)] -= coef * row[j][(0, b)];
                        m_df[(a * 2 + 1, a2 * r + b)] -= coef * row[j][(1, b)];
                    }
                    for (e, corner_row) in corner[j].iter().enumerate() {
                        m_dd[(a * 2 + e, a2 * 2)] -= coef * corner_row[0];
                        m_dd[(a * 2 + e, a2 * 2 + 1)] -= coef * corner_row[1];
                    }
                }
                for e in 0..2 {
                    t_d[a * 2 + e] += self.one_t[j][a] * t2_border[j][e];
                    s_d[a * 2 + e] += self.one_s[j][a] * s2_border[j][e];
                }
            }
        }

        let solved = &schur.inv * &m_fd;
        let coupled = &m_df * &solved;
        let mut reduced = m_dd;
        for a2 in 0..p {
            let mut column = reduced.column_mut(a2 * 2);
            column -= coupled.column(a2);
        }
        let rhs = t_d - &m_df * &schur.q;
        let z_d = reduced
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::singular(c, bound, "rank-r border system"))?;
        let z_even = DVector::from_fn(p, |a2, _| z_d[a2 * 2]);
        let z_f = &schur.q - &solved * z_even;

        let mut s1_sigma = DVector::zeros(p);
        for j in 0..l {
            s1_sigma.axpy(sigma[j], &self.one_s[j], 1.0);
        }
        let s_f = &self.s_fixed + s1_sigma.kronecker(&self.u_last) * y_last;
        finish(base + c * (s_f.dot(&z_f) + s_d.dot(&z_d)))
    }
}

fn finish(value: f64) -> Result<KernelValue> {
    if !value.is_finite() {
        return Err(Error::Numeric("approximate kernel produced a non-finite value".into()));
    }
    Ok(KernelValue {
        value,
        method: KernelMethod::FastApprox,
        converged: true,
    })
}

fn candidate_vectors(t: usize, l: usize, edges: &[f64], skills: &[f64]) -> Result<(DVector<f64>, DVector<f64>)> {
    if edges.len() != t - 1 || skills.len() != l {
        return Err(Error::Argument(format!(
            "candidate profile has {} edges and {} skills, expected {} and {l}",
            edges.len(),
            skills.len(),
            t - 1
        )));
    }
    if edges.iter().chain(skills).any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Validation(
            "candidate weights must be finite and nonnegative".into(),
        ));
    }
    let mut w2 = DVector::zeros(t);
    w2.rows_mut(0, t - 1).copy_from_slice(edges);
    Ok((w2, DVector::from_column_slice(skills)))
}

/// Approximate kernel between `team` and the team with `candidate` in the slot.
pub fn kernel_fast_approx(
    team: &TeamGraph,
    factors: &LowRankFactors,
    candidate_edges: &[f64],
    candidate_skills: &[f64],
    params: &KernelParams,
) -> Result<KernelValue> {
    ApproxCache::build(team, factors, params)?.score(candidate_edges, candidate_skills)
}

/// The same approximation with nothing shared: a fresh eigendecomposition,
/// dense `B` blocks for both graphs and a full `p² × p²` solve.
pub fn kernel_approx_unshared(
    team: &TeamGraph,
    rank_r: usize,
    candidate_edges: &[f64],
    candidate_skills: &[f64],
    params: &KernelParams,
) -> Result<KernelValue> {
    let t = team.t();
    params.validate(t)?;
    let (w2, sigma) = candidate_vectors(t, team.l(), candidate_edges, candidate_skills)?;
    let factors = build_lowrank_factors(team, rank_r)?;

    let l1 = team.skills();
    let mut l2 = l1.clone();
    l2.row_mut(t - 1).copy_from(&sigma.transpose());
    let mut a2 = team.adjacency_without_slot();
    a2.column_mut(t - 1).copy_from(&w2);
    a2.row_mut(t - 1).copy_from(&w2.transpose());
    let lmax = (l1 * l2.transpose()).iter().copied().fold(0.0, f64::max);
    let bound = max_row_sum(team.adjacency()) * max_row_sum(&a2) * lmax;
    let c = params.decay;
    check_guard(c, bound, params)?;

    let x0 = params.start_weights(t);
    let y0 = params.stop_weights(t);
    let w1 = factors.w1();
    let one = side_terms(
        &left_factor(&factors.u, &w1),
        &right_factor(&factors.v, &w1),
        l1,
        &x0,
        &y0,
    );
    let two = side_terms(
        &left_factor(&factors.u, &w2),
        &right_factor(&factors.v, &w2),
        &l2,
        &x0,
        &y0,
    );
    finish(dense_solve(&one, &two, c, bound)?)
}
