use nalgebra::DMatrix;

use super::{check_guard, check_pair, guard_bound, kron_vec, label_product, KernelMethod, KernelParams, KernelValue};
use crate::error::{Error, Result};
use crate::team::TeamGraph;

/// Reference evaluator: one dense `t² × t²` solve of
/// `(I - c·L×(A1⊗A2)) z = L× x`, returning `y'z`.
pub fn kernel_direct(g1: &TeamGraph, g2: &TeamGraph, params: &KernelParams) -> Result<KernelValue> {
    check_pair(g1, g2)?;
    let t = g1.t();
    params.validate(t)?;
    let lx = label_product(g1.skills(), g2.skills())?;
    let bound = guard_bound(g1.adjacency(), g2.adjacency(), &lx);
    let c = params.decay;
    check_guard(c, bound, params)?;

    let n = t * t;
    let (a1, a2) = (g1.adjacency(), g2.adjacency());
    let mut system = DMatrix::<f64>::identity(n, n);
    for i in 0..t {
        for j in 0..t {
            let row = i * t + j;
            let scale = c * lx[row];
            if scale == 0.0 {
                continue;
            }
            for k in 0..t {
                let w1 = a1[(i, k)];
                if w1 == 0.0 {
                    continue;
                }
                for m in 0..t {
                    system[(row, k * t + m)] -= scale * w1 * a2[(j, m)];
                }
            }
        }
    }

    let x = kron_vec(&params.start_weights(t), &params.start_weights(t));
    let y = kron_vec(&params.stop_weights(t), &params.stop_weights(t));
    let rhs = lx.component_mul(&x);
    let z = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::singular(c, bound, "I - c·L×(A1⊗A2)"))?;
    let value = y.dot(&z);
    if !value.is_finite() {
        return Err(Error::NonConvergence {
            decay: c,
            guard_bound: bound,
            detail: Some("direct solve produced a non-finite value".into()),
        });
    }
    Ok(KernelValue {
        value,
        method: KernelMethod::Direct,
        converged: true,
    })
}

/// Truncated power series `Σ_z c^z y'(L×(A1⊗A2))^z L× x`.
///
/// Stops once `|term| ≤ series_tol · |sum|` or after `series_max_iter`
/// terms. `converged` is false when the iteration cap is hit or when
/// `c · guard bound ≥ 1`; the partial sum is still returned.
pub fn kernel_series(g1: &TeamGraph, g2: &TeamGraph, params: &KernelParams) -> Result<KernelValue> {
    check_pair(g1, g2)?;
    let t = g1.t();
    params.validate(t)?;
    let lx = label_product(g1.skills(), g2.skills())?;
    let guard_ok = params.decay * guard_bound(g1.adjacency(), g2.adjacency(), &lx) < 1.0;

    let x = kron_vec(&params.start_weights(t), &params.start_weights(t));
    let y = kron_vec(&params.stop_weights(t), &params.stop_weights(t));
    let (a1, a2) = (g1.adjacency(), g2.adjacency());

    // v_z = (c·L×(A1⊗A2))^z L× x, kept as a t×t matrix V with V(i,j) = v[i·t+j]
    // so that (A1⊗A2)v becomes A1·V·A2.
    let mut v = DMatrix::from_fn(t, t, |i, j| lx[i * t + j] * x[i * t + j]);
    let lx_mat = DMatrix::from_fn(t, t, |i, j| lx[i * t + j]);
    let y_mat = DMatrix::from_fn(t, t, |i, j| y[i * t + j]);
    let mut sum = y_mat.dot(&v);
    let mut reached_tol = false;
    for _ in 1..params.series_max_iter {
        v = (a1 * &v * a2).component_mul(&lx_mat) * params.decay;
        let term = y_mat.dot(&v);
        sum += term;
        if !sum.is_finite() {
            break;
        }
        if term.abs() <= params.series_tol * sum.abs() || v.iter().all(|&e| e == 0.0) {
            reached_tol = true;
            break;
        }
    }
    Ok(KernelValue {
        value: sum,
        method: KernelMethod::Series,
        converged: guard_ok && reached_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn graph(adj: &[f64], skills: &[f64], t: usize) -> TeamGraph {
        let l = skills.len() / t;
        TeamGraph::from_parts(
            (0..t).collect(),
            DMatrix::from_row_slice(t, t, adj),
            DMatrix::from_row_slice(t, l, skills),
        )
        .unwrap()
    }

    #[test]
    fn single_node_matching_skill_is_one() {
        let g = graph(&[0.0], &[1.0], 1);
        let k = kernel_direct(&g, &g, &KernelParams::with_decay(0.5)).unwrap();
        assert_eq!(k.value, 1.0);
    }

    #[test]
    fn single_node_disjoint_skills_is_zero() {
        let g1 = graph(&[0.0], &[1.0, 0.0], 1);
        let g2 = graph(&[0.0], &[0.0, 1.0], 1);
        assert_eq!(
            kernel_direct(&g1, &g2, &KernelParams::with_decay(0.5)).unwrap().value,
            0.0
        );
    }

    #[test]
    fn two_node_edge_geometric_series() {
        // Σ 0.5^z · 0.25 · (row sums 1) = 0.25 / (1 - 0.5) = 0.5
        let g = graph(&[0., 1., 1., 0.], &[1., 1.], 2);
        let p = KernelParams::with_decay(0.5);
        let k = kernel_direct(&g, &g, &p).unwrap();
        assert!((k.value - 0.5).abs() < 1e-14, "{}", k.value);
        let s = kernel_series(&g, &g, &p).unwrap();
        assert!(s.converged);
        assert!((s.value - 0.5).abs() < 1e-10, "{}", s.value);
    }

    #[test]
    fn zero_decay_series_is_one_term() {
        let g1 = graph(&[0., 2., 2., 0.], &[1., 0., 1., 1.], 2);
        let g2 = graph(&[0., 1., 1., 0.], &[0., 1., 1., 1.], 2);
        let p = KernelParams::with_decay(0.0);
        let s = kernel_series(&g1, &g2, &p).unwrap();
        let lx = label_product(g1.skills(), g2.skills()).unwrap();
        let expected: f64 = lx.iter().map(|v| v / 16.0).sum();
        assert_eq!(s.value, expected);
        assert!(s.converged);
        assert!((kernel_direct(&g1, &g2, &p).unwrap().value - expected).abs() < 1e-15);
    }

    #[test]
    fn guard_violation() {
        let g = graph(&[0., 1., 1., 0.], &[1., 1.], 2);
        let p = KernelParams::with_decay(1.5);
        let s = kernel_series(&g, &g, &p).unwrap();
        assert!(!s.converged);
        assert!(matches!(kernel_direct(&g, &g, &p), Err(Error::NonConvergence { .. })));
        let forced = KernelParams {
            allow_unguarded: true,
            ..p
        };
        // ρ = 1.5 > 1: the system is still invertible, the series is not.
        assert!(kernel_direct(&g, &g, &forced).is_ok());
    }

    #[test]
    fn exactly_singular_system_is_reported() {
        // c = 1 with a spectral radius of exactly 1.
        let g = graph(&[0., 1., 1., 0.], &[1., 1.], 2);
        let p = KernelParams {
            decay: 1.0,
            allow_unguarded: true,
            ..KernelParams::default()
        };
        assert!(matches!(kernel_direct(&g, &g, &p), Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn size_mismatch() {
        let g1 = graph(&[0.0], &[1.0], 1);
        let g2 = graph(&[0., 1., 1., 0.], &[1., 1.], 2);
        assert!(matches!(
            kernel_direct(&g1, &g2, &KernelParams::default()),
            Err(Error::Argument(_))
        ));
    }
}
