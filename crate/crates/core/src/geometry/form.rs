use super::chart::Chart;
use super::field::{OneForm, VectorField};
use crate::expr::{Arith, EvalError, Evaluator, Expr, Value};
use astro_float::BigFloat;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Differential form of fixed degree, stored by strictly increasing index tuples.
#[derive(Clone, Debug, PartialEq)]
pub struct AltForm {
    pub chart: Arc<Chart>,
    pub degree: usize,
    pub comps: BTreeMap<Vec<usize>, Expr>,
}

/// Sign of the permutation sorting `v`, or None if it has a repeat.
fn sort_sign(v: &mut [usize]) -> Option<i64> {
    let mut sign = 1;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
        if j > 0 && v[j - 1] == v[j] {
            return None;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some(sign)
}

impl AltForm {
    pub fn zero(chart: &Arc<Chart>, degree: usize) -> AltForm {
        AltForm { chart: chart.clone(), degree, comps: BTreeMap::new() }
    }

    pub fn from_one_form(w: &OneForm) -> AltForm {
        let mut f = AltForm::zero(&w.chart, 1);
        for (i, c) in w.coeffs.iter().enumerate() {
            f.add_comp(vec![i], c.clone());
        }
        f
    }

    /// The function f as a 0-form.
    pub fn function(chart: &Arc<Chart>, f: Expr) -> AltForm {
        let mut a = AltForm::zero(chart, 0);
        a.add_comp(vec![], f);
        a
    }

    fn add_comp(&mut self, idx: Vec<usize>, c: Expr) {
        if c.is_zero_const() {
            return;
        }
        let e = self.comps.entry(idx).or_insert_with(Expr::zero);
        *e = e.add(&c);
        self.comps.retain(|_, v| !v.is_zero_const());
    }

    pub fn is_zero_const(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn add(&self, other: &AltForm) -> AltForm {
        assert_eq!(self.degree, other.degree);
        let mut out = self.clone();
        for (k, v) in &other.comps {
            out.add_comp(k.clone(), v.clone());
        }
        out
    }

    pub fn scale(&self, f: &Expr) -> AltForm {
        let mut out = AltForm::zero(&self.chart, self.degree);
        for (k, v) in &self.comps {
            out.add_comp(k.clone(), v.mul(f));
        }
        out
    }

    pub fn wedge(&self, other: &AltForm) -> AltForm {
        let mut out = AltForm::zero(&self.chart, self.degree + other.degree);
        if out.degree > self.chart.dim() {
            return out;
        }
        for (i, a) in &self.comps {
            for (j, b) in &other.comps {
                let mut idx: Vec<usize> = i.iter().chain(j).copied().collect();
                if let Some(s) = sort_sign(&mut idx) {
                    out.add_comp(idx, a.mul(b).scale(&crate::expr::Rational::from_integer(s.into())));
                }
            }
        }
        out
    }

    pub fn exterior_derivative(&self) -> AltForm {
        let n = self.chart.dim();
        let mut out = AltForm::zero(&self.chart, self.degree + 1);
        for (idx, c) in &self.comps {
            for k in 0..n {
                if idx.contains(&k) {
                    continue;
                }
                let d = c.differentiate(self.chart.name(k));
                if d.is_zero_const() {
                    continue;
                }
                let mut full = vec![k];
                full.extend(idx.iter().copied());
                let s = sort_sign(&mut full).expect("distinct indices");
                out.add_comp(full, d.scale(&crate::expr::Rational::from_integer(s.into())));
            }
        }
        out
    }

    /// Evaluates the form on vector fields (degree many).
    pub fn evaluate(&self, xs: &[VectorField]) -> Expr {
        assert_eq!(xs.len(), self.degree);
        let mut terms = Vec::new();
        for (idx, c) in &self.comps {
            terms.push(c.mul(&det_minor(xs, idx)));
        }
        Expr::sum(terms)
    }

    pub fn eval_at(&self, ev: &Evaluator, k: usize) -> Result<NumForm, EvalError> {
        let mut comps = BTreeMap::new();
        for (idx, c) in &self.comps {
            comps.insert(idx.clone(), ev.eval(c, k)?);
        }
        Ok(NumForm { dim: self.chart.dim(), degree: self.degree, comps })
    }
}

/// Determinant of the square matrix [X_a^{idx_b}].
fn det_minor(xs: &[VectorField], idx: &[usize]) -> Expr {
    let n = idx.len();
    if n == 0 {
        return Expr::one();
    }
    if n == 1 {
        return xs[0].coeffs[idx[0]].clone();
    }
    let mut terms = Vec::new();
    for (col, &i) in idx.iter().enumerate() {
        let c = &xs[0].coeffs[i];
        if c.is_zero_const() {
            continue;
        }
        let rest: Vec<usize> = idx.iter().enumerate().filter(|(k, _)| *k != col).map(|(_, v)| *v).collect();
        let m = c.mul(&det_minor(&xs[1..], &rest));
        terms.push(if col % 2 == 0 { m } else { m.neg() });
    }
    Expr::sum(terms)
}

impl fmt::Display for AltForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.comps.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .comps
            .iter()
            .map(|(idx, c)| {
                let basis: Vec<String> = idx.iter().map(|i| format!("d{}", self.chart.name(*i))).collect();
                if idx.is_empty() {
                    format!("{}", c)
                } else {
                    format!("({})*{}", c, basis.join("^"))
                }
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

/// A form evaluated at one point.
#[derive(Clone, Debug)]
pub struct NumForm {
    pub dim: usize,
    pub degree: usize,
    pub comps: BTreeMap<Vec<usize>, Value>,
}

impl NumForm {
    pub fn wedge(&self, other: &NumForm, ar: &Arith) -> NumForm {
        let mut comps: BTreeMap<Vec<usize>, Value> = BTreeMap::new();
        let degree = self.degree + other.degree;
        if degree <= self.dim {
            for (i, a) in &self.comps {
                for (j, b) in &other.comps {
                    let mut idx: Vec<usize> = i.iter().chain(j).copied().collect();
                    if let Some(s) = sort_sign(&mut idx) {
                        let mut v = ar.mul(&a.v, &b.v);
                        if s < 0 {
                            v = v.neg();
                        }
                        let sc = ar.mul(&a.s, &b.s);
                        match comps.get_mut(&idx) {
                            Some(e) => {
                                e.v = ar.add(&e.v, &v);
                                e.s = ar.add(&e.s, &sc);
                            }
                            None => {
                                comps.insert(idx, Value { v, s: sc });
                            }
                        }
                    }
                }
            }
        }
        NumForm { dim: self.dim, degree, comps }
    }

    pub fn add(&self, other: &NumForm, ar: &Arith) -> NumForm {
        let mut comps = self.comps.clone();
        for (k, b) in &other.comps {
            match comps.get_mut(k) {
                Some(e) => {
                    e.v = ar.add(&e.v, &b.v);
                    e.s = ar.add(&e.s, &b.s);
                }
                None => {
                    comps.insert(k.clone(), b.clone());
                }
            }
        }
        NumForm { dim: self.dim, degree: self.degree, comps }
    }

    pub fn scale(&self, c: &BigFloat, ar: &Arith) -> NumForm {
        let ac = ar.abs(c);
        let comps = self
            .comps
            .iter()
            .map(|(k, v)| (k.clone(), Value { v: ar.mul(&v.v, c), s: ar.mul(&v.s, &ac) }))
            .collect();
        NumForm { dim: self.dim, degree: self.degree, comps }
    }

    pub fn is_negligible(&self, ev: &Evaluator) -> bool {
        self.comps.values().all(|v| ev.negligible(v))
    }
}
