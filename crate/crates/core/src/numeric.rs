//! Dense high-precision linear algebra with per-entry error scales.
//!
//! Each entry carries a scale bounding the magnitude of the quantities it
//! was computed from; an entry counts as zero when it is below the zero
//! threshold relative to that scale.

use crate::expr::{Arith, Value};
use astro_float::BigFloat;

#[derive(Clone, Debug)]
pub struct NumMat {
    pub rows: usize,
    pub cols: usize,
    pub v: Vec<BigFloat>,
    pub s: Vec<BigFloat>,
}

/// Outcome of Gauss-Jordan elimination.
#[derive(Clone, Debug)]
pub struct Echelon {
    pub mat: NumMat,
    /// (row, column) of each pivot, in elimination order.
    pub pivots: Vec<(usize, usize)>,
}

impl NumMat {
    pub fn zeros(ar: &Arith, rows: usize, cols: usize) -> NumMat {
        NumMat { rows, cols, v: vec![ar.zero(); rows * cols], s: vec![ar.zero(); rows * cols] }
    }

    pub fn from_values(rows: usize, cols: usize, vals: Vec<Value>) -> NumMat {
        assert_eq!(vals.len(), rows * cols);
        let (v, s) = vals.into_iter().map(|x| (x.v, x.s)).unzip();
        NumMat { rows, cols, v, s }
    }

    /// Rows of plain numbers, each taken as exact up to its own magnitude.
    pub fn from_rows(ar: &Arith, cols: usize, rows: &[Vec<BigFloat>]) -> NumMat {
        let mut m = NumMat::zeros(ar, rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            for (j, x) in r.iter().enumerate() {
                m.set(i, j, x.clone(), ar.abs(x));
            }
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> &BigFloat {
        &self.v[i * self.cols + j]
    }

    pub fn scale_at(&self, i: usize, j: usize) -> &BigFloat {
        &self.s[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigFloat, s: BigFloat) {
        self.v[i * self.cols + j] = v;
        self.s[i * self.cols + j] = s;
    }

    pub fn row(&self, i: usize) -> Vec<BigFloat> {
        self.v[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn transpose(&self) -> NumMat {
        let mut v = Vec::with_capacity(self.v.len());
        let mut s = Vec::with_capacity(self.s.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                v.push(self.get(i, j).clone());
                s.push(self.scale_at(i, j).clone());
            }
        }
        NumMat { rows: self.cols, cols: self.rows, v, s }
    }

    fn negligible(&self, ar: &Arith, thr: &BigFloat, i: usize, j: usize) -> bool {
        ar.abs_le(self.get(i, j), &ar.mul(thr, self.scale_at(i, j)))
    }

    /// Gauss-Jordan elimination with partial pivoting on magnitude.
    pub fn echelon(&self, ar: &Arith, thr: &BigFloat) -> Echelon {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut used = vec![false; m.rows];
        for c in 0..m.cols {
            let mut best: Option<usize> = None;
            for r in 0..m.rows {
                if used[r] || m.negligible(ar, thr, r, c) {
                    continue;
                }
                best = match best {
                    Some(b) if ar.abs_le(m.get(r, c), m.get(b, c)) => Some(b),
                    _ => Some(r),
                };
            }
            let Some(pr) = best else { continue };
            used[pr] = true;
            pivots.push((pr, c));
            let pv = m.get(pr, c).clone();
            let apv = ar.abs(&pv);
            for r in 0..m.rows {
                if r == pr || m.get(r, c).is_zero() {
                    continue;
                }
                if m.negligible(ar, thr, r, c) {
                    let sc = m.scale_at(r, c).clone();
                    m.set(r, c, ar.zero(), sc);
                    continue;
                }
                let l = ar.div(m.get(r, c), &pv);
                let al = ar.abs(&l);
                // Error of the multiplier, in units of the pivot row.
                let el = ar.div(&ar.add(m.scale_at(r, c), &ar.mul(&al, m.scale_at(pr, c))), &apv);
                for j in 0..m.cols {
                    if j == c {
                        m.set(r, j, ar.zero(), ar.zero());
                        continue;
                    }
                    let nv = ar.sub(m.get(r, j), &ar.mul(&l, m.get(pr, j)));
                    let ns = ar.add(
                        m.scale_at(r, j),
                        &ar.add(&ar.mul(&al, m.scale_at(pr, j)), &ar.mul(&el, &ar.abs(m.get(pr, j)))),
                    );
                    m.set(r, j, nv, ns);
                }
            }
            if pivots.len() == m.rows {
                break;
            }
        }
        Echelon { mat: m, pivots }
    }

    pub fn rank(&self, ar: &Arith, thr: &BigFloat) -> usize {
        self.echelon(ar, thr).pivots.len()
    }

    /// Basis of the right kernel, one vector per free column.
    pub fn nullspace(&self, ar: &Arith, thr: &BigFloat) -> Vec<Vec<BigFloat>> {
        let e = self.echelon(ar, thr);
        let pivot_cols: Vec<usize> = e.pivots.iter().map(|p| p.1).collect();
        let mut out = Vec::new();
        for f in 0..self.cols {
            if pivot_cols.contains(&f) {
                continue;
            }
            let mut v = vec![ar.zero(); self.cols];
            v[f] = ar.int(1);
            for &(r, c) in &e.pivots {
                v[c] = ar.div(&e.mat.get(r, f).neg(), e.mat.get(r, c));
            }
            out.push(v);
        }
        out
    }
}

/// Incremental row-echelon basis used to pick independent vectors.
#[derive(Clone, Debug)]
pub struct IncrementalBasis {
    cols: usize,
    rows: Vec<(Vec<BigFloat>, Vec<BigFloat>, usize)>,
}

impl IncrementalBasis {
    pub fn new(cols: usize) -> IncrementalBasis {
        IncrementalBasis { cols, rows: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Reduces `v` (with scales `s`) against the basis; returns the residual.
    fn reduce(&self, ar: &Arith, thr: &BigFloat, mut v: Vec<BigFloat>, mut s: Vec<BigFloat>) -> (Vec<BigFloat>, Vec<BigFloat>) {
        for (bv, bs, p) in &self.rows {
            if v[*p].is_zero() {
                continue;
            }
            if ar.abs_le(&v[*p], &ar.mul(thr, &s[*p])) {
                v[*p] = ar.zero();
                continue;
            }
            let l = ar.div(&v[*p], &bv[*p]);
            let al = ar.abs(&l);
            let el = ar.div(&ar.add(&s[*p], &ar.mul(&al, &bs[*p])), &ar.abs(&bv[*p]));
            for j in 0..self.cols {
                v[j] = ar.sub(&v[j], &ar.mul(&l, &bv[j]));
                s[j] = ar.add(&s[j], &ar.add(&ar.mul(&al, &bs[j]), &ar.mul(&el, &ar.abs(&bv[j]))));
            }
            v[*p] = ar.zero();
        }
        (v, s)
    }

    /// Adds the vector if it is independent of the basis; returns whether it was.
    pub fn try_add(&mut self, ar: &Arith, thr: &BigFloat, v: Vec<BigFloat>, s: Vec<BigFloat>) -> bool {
        let (v, s) = self.reduce(ar, thr, v, s);
        let mut best: Option<usize> = None;
        for j in 0..self.cols {
            if ar.abs_le(&v[j], &ar.mul(thr, &s[j])) {
                continue;
            }
            // Pivot on the entry largest relative to its scale.
            let better = match best {
                None => true,
                Some(b) => {
                    let rj = ar.div(&ar.abs(&v[j]), &s[j]);
                    let rb = ar.div(&ar.abs(&v[b]), &s[b]);
                    !ar.abs_le(&rj, &rb)
                }
            };
            if better {
                best = Some(j);
            }
        }
        match best {
            Some(p) => {
                self.rows.push((v, s, p));
                true
            }
            None => false,
        }
    }

    pub fn contains(&self, ar: &Arith, thr: &BigFloat, v: Vec<BigFloat>, s: Vec<BigFloat>) -> bool {
        let (v, s) = self.reduce(ar, thr, v, s);
        (0..self.cols).all(|j| ar.abs_le(&v[j], &ar.mul(thr, &s[j])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (Arith, BigFloat) {
        let ar = Arith::from_digits(50);
        let thr = ar.div(&ar.int(1), &BigFloat::from_u128(10u128.pow(30), ar.p));
        (ar, thr)
    }

    fn mat(ar: &Arith, rows: &[&[i64]]) -> NumMat {
        let r: Vec<Vec<BigFloat>> = rows.iter().map(|r| r.iter().map(|x| ar.int(*x)).collect()).collect();
        NumMat::from_rows(ar, rows[0].len(), &r)
    }

    #[test]
    fn rank_and_kernel() {
        let (ar, thr) = setup();
        let m = mat(&ar, &[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        assert_eq!(m.rank(&ar, &thr), 2);
        let k = m.nullspace(&ar, &thr);
        assert_eq!(k.len(), 1);
        for i in 0..3 {
            let mut acc = ar.zero();
            for j in 0..3 {
                acc = ar.add(&acc, &ar.mul(m.get(i, j), &k[0][j]));
            }
            assert!(ar.abs_le(&acc, &thr));
        }
    }

    #[test]
    fn incremental_basis_detects_dependence() {
        let (ar, thr) = setup();
        let mut b = IncrementalBasis::new(3);
        let v = |x: &[i64]| -> (Vec<BigFloat>, Vec<BigFloat>) {
            let v: Vec<BigFloat> = x.iter().map(|a| ar.int(*a)).collect();
            let s = v.iter().map(|a| a.abs()).collect();
            (v, s)
        };
        let (a, sa) = v(&[1, 1, 0]);
        assert!(b.try_add(&ar, &thr, a, sa));
        let (c, sc) = v(&[0, 1, 1]);
        assert!(b.try_add(&ar, &thr, c, sc));
        let (d, sd) = v(&[1, 2, 1]);
        assert!(!b.try_add(&ar, &thr, d, sd));
        assert_eq!(b.len(), 2);
    }
}
