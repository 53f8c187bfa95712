//! Rank computations carried out numerically at each sample point.
//!
//! Subspaces like Cauchy characteristics only need their dimension for most
//! invariants, so they are built pointwise from numeric frames instead of
//! symbolically.

use super::at_points;
use super::distribution::field_at;
use super::field::VectorField;
use crate::expr::{EvalError, Evaluator};
use crate::numeric::NumMat;
use astro_float::BigFloat;

/// Numeric vectors with their error scales.
pub type NumVecs = Vec<(Vec<BigFloat>, Vec<BigFloat>)>;

pub fn fields_at(ev: &Evaluator, xs: &[VectorField], k: usize) -> Result<NumVecs, EvalError> {
    xs.iter().map(|x| field_at(ev, x, k)).collect()
}

fn to_mat(cols: usize, vs: &NumVecs) -> NumMat {
    let mut m = NumMat { rows: vs.len(), cols, v: Vec::new(), s: Vec::new() };
    for (v, s) in vs {
        m.v.extend(v.iter().cloned());
        m.s.extend(s.iter().cloned());
    }
    m
}

pub fn rank_of(ev: &Evaluator, cols: usize, vs: &NumVecs) -> usize {
    if vs.is_empty() {
        return 0;
    }
    to_mat(cols, vs).rank(&ev.arith, ev.threshold())
}

/// dim(A ∩ B) = dim A + dim B - dim(A + B).
pub fn intersection_dim(ev: &Evaluator, cols: usize, a: &NumVecs, b: &NumVecs) -> usize {
    let mut all = a.clone();
    all.extend(b.iter().cloned());
    rank_of(ev, cols, a) + rank_of(ev, cols, b) - rank_of(ev, cols, &all)
}

/// {X in span E : [X, E] in W} with the brackets precomputed. E must be
/// independent and contained in W.
pub struct RelativeCauchy<'a> {
    e: &'a [VectorField],
    w: &'a [VectorField],
    brackets: Vec<Vec<Option<VectorField>>>,
}

impl<'a> RelativeCauchy<'a> {
    pub fn new(e: &'a [VectorField], w: &'a [VectorField]) -> RelativeCauchy<'a> {
        let m = e.len();
        let mut brackets = vec![vec![None; m]; m];
        for a in 0..m {
            for b in a + 1..m {
                let x = e[a].bracket(&e[b]);
                brackets[b][a] = Some(x.scale(&crate::expr::Expr::int(-1)));
                brackets[a][b] = Some(x);
            }
        }
        RelativeCauchy { e, w, brackets }
    }

    /// Numeric basis of the subspace at point `k`, as ambient vectors.
    pub fn at(&self, ev: &Evaluator, k: usize) -> Result<NumVecs, EvalError> {
        let ar = &ev.arith;
        let thr = ev.threshold();
        let m = self.e.len();
        let ev_e = fields_at(ev, self.e, k)?;
        if m == 0 {
            return Ok(Vec::new());
        }
        let n = self.e[0].dim();
        let ev_w = fields_at(ev, self.w, k)?;
        let ann = if ev_w.is_empty() {
            (0..n)
                .map(|i| (0..n).map(|j| if i == j { ar.int(1) } else { ar.zero() }).collect())
                .collect()
        } else {
            to_mat(n, &ev_w).nullspace(ar, thr)
        };
        let mut br: Vec<Vec<Option<(Vec<BigFloat>, Vec<BigFloat>)>>> = vec![vec![None; m]; m];
        for a in 0..m {
            for b in 0..m {
                if let Some(x) = &self.brackets[a][b] {
                    br[a][b] = Some(field_at(ev, x, k)?);
                }
            }
        }
        let mut mat = NumMat::zeros(ar, ann.len() * m, m);
        for (si, th) in ann.iter().enumerate() {
            let ath: Vec<BigFloat> = th.iter().map(|x| ar.abs(x)).collect();
            for b in 0..m {
                for a in 0..m {
                    if let Some((v, s)) = &br[a][b] {
                        let mut acc = ar.zero();
                        let mut sc = ar.zero();
                        for j in 0..n {
                            acc = ar.add(&acc, &ar.mul(&th[j], &v[j]));
                            sc = ar.add(&sc, &ar.mul(&ath[j], &s[j]));
                        }
                        mat.set(si * m + b, a, acc, sc);
                    }
                }
            }
        }
        let kernel = if mat.rows == 0 {
            (0..m).map(|i| (0..m).map(|j| if i == j { ar.int(1) } else { ar.zero() }).collect()).collect()
        } else {
            mat.nullspace(ar, thr)
        };
        Ok(kernel
            .into_iter()
            .map(|c| {
                let mut v = vec![ar.zero(); n];
                let mut s = vec![ar.zero(); n];
                // Kernel coefficients carry rounding error relative to the
                // largest one, so every term is scaled by that.
                let cmax = c.iter().fold(ar.zero(), |m, x| ar.max(&m, &ar.abs(x)));
                for (a, ca) in c.iter().enumerate() {
                    for j in 0..n {
                        v[j] = ar.add(&v[j], &ar.mul(ca, &ev_e[a].0[j]));
                        s[j] = ar.add(&s[j], &ar.mul(&cmax, &ev_e[a].1[j]));
                    }
                }
                (v, s)
            })
            .collect())
    }
}

/// Generic rank of {X in span E : [X, E] in W}.
pub fn relative_cauchy_rank(ev: &Evaluator, e: &[VectorField], w: &[VectorField]) -> usize {
    let rc = RelativeCauchy::new(e, w);
    let ranks = at_points(ev, |k| rc.at(ev, k).map(|v| v.len()));
    let min = ranks.iter().map(|r| r.1).min().unwrap_or(0);
    if ranks.iter().any(|r| r.1 != min) {
        ev.warn(format!(
            "characteristic rank differs across sample points: {:?}",
            ranks.iter().map(|r| r.1).collect::<Vec<_>>()
        ));
    }
    min
}
