use super::at_points;
use crate::expr::{common_factor, EvalError, Evaluator, Expr, Rational, Value};
use crate::numeric::NumMat;
use num_integer::Integer;
use num_traits::One;
use std::collections::BTreeMap;

/// Dense matrix of expressions, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Expr>,
}

impl SymMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Expr>) -> SymMatrix {
        assert_eq!(data.len(), rows * cols);
        SymMatrix { rows, cols, data }
    }

    pub fn from_rows(cols: usize, rows: Vec<Vec<Expr>>) -> SymMatrix {
        let n = rows.len();
        let data: Vec<Expr> = rows.into_iter().flatten().collect();
        SymMatrix::new(n, cols, data)
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[Expr] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> SymMatrix {
        let mut d = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                d.push(self.get(i, j).clone());
            }
        }
        SymMatrix::new(self.cols, self.rows, d)
    }

    pub fn eval_at(&self, ev: &Evaluator, k: usize) -> Result<NumMat, EvalError> {
        let mut vals = Vec::with_capacity(self.data.len());
        for e in &self.data {
            vals.push(ev.eval(e, k)?);
        }
        Ok(NumMat::from_values(self.rows, self.cols, vals))
    }

    pub fn rank_at(&self, ev: &Evaluator, k: usize) -> Result<usize, EvalError> {
        Ok(self.eval_at(ev, k)?.rank(&ev.arith, ev.threshold()))
    }

    /// Generic rank: the maximum numeric rank over the rank sample points.
    /// Disagreeing samples are recorded as a regularity warning.
    pub fn rank(&self, ev: &Evaluator) -> usize {
        if self.rows == 0 || self.cols == 0 {
            return 0;
        }
        let ranks: Vec<(usize, usize)> = at_points(ev, |k| self.rank_at(ev, k));
        let max = ranks.iter().map(|r| r.1).max().unwrap_or(0);
        if ranks.iter().any(|r| r.1 != max) {
            ev.warn(format!(
                "matrix rank differs across sample points: {:?}",
                ranks.iter().map(|r| r.1).collect::<Vec<_>>()
            ));
        }
        max
    }

    /// Symbolic kernel basis by fraction-free Gauss-Jordan elimination.
    ///
    /// Pivots are chosen at a generic sample point among numerically nonzero
    /// entries, preferring constants and then the smallest expressions.
    /// Entries that vanish at that point are confirmed with the full zero
    /// test and cleared, so hidden identities never become pivots.
    pub fn nullspace(&self, ev: &Evaluator) -> Vec<Vec<Expr>> {
        let (rows, cols) = (self.rows, self.cols);
        if cols == 0 {
            return Vec::new();
        }
        let basis_point = |m: &SymMatrix| -> usize {
            let ranks = at_points(ev, |k| m.rank_at(ev, k));
            let max = ranks.iter().map(|r| r.1).max().unwrap_or(0);
            ranks.iter().find(|r| r.1 == max).map(|r| r.0).unwrap_or(0)
        };
        let k0 = if rows == 0 { 0 } else { basis_point(self) };
        let mut m: Vec<Vec<Expr>> = (0..rows).map(|i| self.row(i).to_vec()).collect();
        let mut vals: Vec<Vec<Option<Value>>> = vec![vec![None; cols]; rows];
        let mut prow = vec![false; rows];
        let mut pcol = vec![false; cols];
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        for (r, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                if e.is_const() {
                    continue;
                }
                if let Ok(v) = ev.eval(e, k0) {
                    if ev.negligible(&v) && ev.is_zero(e) {
                        *e = Expr::zero();
                        continue;
                    }
                    vals[r][j] = Some(v);
                }
            }
        }

        let nonzero_at = |e: &Expr, slot: &mut Option<Value>| -> bool {
            if e.is_zero_const() {
                return false;
            }
            if e.is_const() {
                return true;
            }
            if slot.is_none() {
                *slot = ev.eval(e, k0).ok();
            }
            match slot {
                Some(v) => !ev.negligible(v),
                None => true,
            }
        };

        loop {
            let mut best: Option<((u8, usize, usize, usize), usize, usize)> = None;
            for r in 0..rows {
                if prow[r] {
                    continue;
                }
                for c in 0..cols {
                    if pcol[c] {
                        continue;
                    }
                    let e = m[r][c].clone();
                    if !nonzero_at(&e, &mut vals[r][c]) {
                        continue;
                    }
                    let key = (if e.is_const() { 0 } else { 1 }, e.size(), c, r);
                    if best.as_ref().is_none_or(|b| key < b.0) {
                        best = Some((key, r, c));
                    }
                }
            }
            let Some((_, pr, pc)) = best else { break };
            prow[pr] = true;
            pcol[pc] = true;
            pivots.push((pr, pc));
            let p = m[pr][pc].clone();
            let prow_vals = m[pr].clone();
            for r in 0..rows {
                if r == pr || m[r][pc].is_zero_const() {
                    continue;
                }
                let f = m[r][pc].clone();
                let mut newrow: Vec<Expr> = Vec::with_capacity(cols);
                if let Some(pc_) = p.as_const() {
                    let q = f.scale(&pc_.recip());
                    for j in 0..cols {
                        newrow.push(if j == pc {
                            Expr::zero()
                        } else if prow_vals[j].is_zero_const() {
                            m[r][j].clone()
                        } else {
                            m[r][j].sub(&q.mul(&prow_vals[j]))
                        });
                    }
                } else {
                    for j in 0..cols {
                        newrow.push(if j == pc {
                            Expr::zero()
                        } else {
                            p.mul(&m[r][j]).sub(&f.mul(&prow_vals[j]))
                        });
                    }
                    remove_common_factor(&mut newrow);
                }
                for (j, e) in newrow.iter_mut().enumerate() {
                    vals[r][j] = None;
                    if e.is_const() {
                        continue;
                    }
                    if let Ok(v) = ev.eval(e, k0) {
                        if ev.negligible(&v) && ev.is_zero(e) {
                            *e = Expr::zero();
                            continue;
                        }
                        vals[r][j] = Some(v);
                    }
                }
                m[r] = newrow;
            }
        }

        let mut out = Vec::new();
        for j in 0..cols {
            if pcol[j] {
                continue;
            }
            let mut v = vec![Expr::zero(); cols];
            v[j] = Expr::one();
            for &(r, c) in &pivots {
                if m[r][j].is_zero_const() {
                    continue;
                }
                let q = m[r][j].div(&m[r][c]).expect("pivot is nonzero");
                v[c] = q.neg();
            }
            out.push(clear_denominators(v));
        }
        out
    }
}

/// Divides a row by the common monomial factor and content of its entries.
fn remove_common_factor(row: &mut [Expr]) {
    let nz: Vec<Expr> = row.iter().filter(|e| !e.is_zero_const()).cloned().collect();
    if nz.is_empty() {
        return;
    }
    let cf = common_factor(&nz);
    if cf.is_one() {
        return;
    }
    let inv = cf.recip().expect("common factor is nonzero");
    for e in row.iter_mut() {
        if !e.is_zero_const() {
            *e = e.mul(&inv);
        }
    }
}

/// Multiplies a vector through by its denominators, then removes the common
/// factor, so entries are as close to polynomial as the atoms allow.
pub fn clear_denominators(mut v: Vec<Expr>) -> Vec<Expr> {
    let mut need: BTreeMap<Expr, i64> = BTreeMap::new();
    let mut den = num_bigint::BigInt::one();
    for e in &v {
        for t in e.terms() {
            let (c, _) = t.coefficient_split();
            den = den.lcm(c.denom());
            for (b, n) in t.monomial_factors() {
                if n < 0 {
                    let slot = need.entry(b).or_insert(0);
                    *slot = (*slot).max(-n);
                }
            }
        }
    }
    let mut factors = vec![Expr::constant(Rational::from_integer(den))];
    for (b, n) in need {
        factors.push(b.pow(n).expect("atom base is nonzero"));
    }
    let mult = Expr::product(factors);
    if !mult.is_one() {
        for e in v.iter_mut() {
            *e = e.mul(&mult);
        }
    }
    remove_common_factor(&mut v);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, SampleConfig};

    fn m(rows: &[&[&str]]) -> SymMatrix {
        let cols = rows[0].len();
        SymMatrix::from_rows(cols, rows.iter().map(|r| r.iter().map(|s| parse(s).unwrap()).collect()).collect())
    }

    fn check_kernel(a: &SymMatrix, ks: &[Vec<Expr>], ev: &Evaluator) {
        for k in ks {
            for i in 0..a.rows {
                let s = Expr::sum((0..a.cols).map(|j| a.get(i, j).mul(&k[j])).collect());
                assert!(ev.is_zero(&s), "row {} not annihilated: {}", i, s);
            }
        }
    }

    #[test]
    fn kernel_of_symbolic_matrix() {
        let ev = Evaluator::new(SampleConfig::default());
        let a = m(&[&["x", "y", "x*y"], &["1", "x", "y"]]);
        assert_eq!(a.rank(&ev), 2);
        let k = a.nullspace(&ev);
        assert_eq!(k.len(), 1);
        check_kernel(&a, &k, &ev);
    }

    #[test]
    fn hidden_zero_is_not_a_pivot() {
        let ev = Evaluator::new(SampleConfig::default());
        let a = m(&[&["sin(t)^2 + cos(t)^2 - 1", "x"], &["0", "0"]]);
        assert_eq!(a.rank(&ev), 1);
        let k = a.nullspace(&ev);
        assert_eq!(k.len(), 1);
        check_kernel(&a, &k, &ev);
        assert_eq!(k[0][1], Expr::zero());
    }

    #[test]
    fn rank_deficient_trig_matrix() {
        let ev = Evaluator::new(SampleConfig::default());
        let a = m(&[
            &["sin(th)", "-cos(th)", "0"],
            &["h*cos(th)", "h*sin(th)", "1"],
            &["sin(th)*cos(th)", "-cos(th)^2", "0"],
        ]);
        assert_eq!(a.rank(&ev), 2);
        let k = a.nullspace(&ev);
        assert_eq!(k.len(), 1);
        check_kernel(&a, &k, &ev);
    }

    #[test]
    fn denominators_are_cleared() {
        let v = clear_denominators(vec![parse("a/x1").unwrap(), parse("(x2*a3)/(2*x1)").unwrap()]);
        assert_eq!(v, vec![parse("2*a").unwrap(), parse("x2*a3").unwrap()]);
    }
}
