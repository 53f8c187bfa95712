use super::chart::Chart;
use super::field::{OneForm, VectorField};
use super::matrix::{clear_denominators, SymMatrix};
use super::{at_points, pointwise};
use crate::expr::{EvalError, Evaluator, Expr};
use crate::numeric::IncrementalBasis;
use astro_float::BigFloat;
use std::sync::Arc;

/// A distribution given by generating vector fields. Generators need not be
/// independent; `basis` prunes them.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    pub chart: Arc<Chart>,
    pub gens: Vec<VectorField>,
}

/// Outcome of an involutivity check.
#[derive(Clone, Debug, PartialEq)]
pub enum Integrability {
    Integrable,
    /// [gens[i], gens[j]] leaves the distribution.
    NotIntegrable { i: usize, j: usize, bracket: VectorField },
}

/// Numeric bases of a distribution at a few generic points, for membership tests.
#[derive(Clone, Debug)]
pub struct Frame {
    points: Vec<(usize, IncrementalBasis)>,
    /// Indices of generators that were independent at some point.
    pub accepted: Vec<usize>,
    pub rank: usize,
}

pub(crate) fn field_at(ev: &Evaluator, x: &VectorField, k: usize) -> Result<(Vec<BigFloat>, Vec<BigFloat>), EvalError> {
    let mut v = Vec::with_capacity(x.dim());
    let mut s = Vec::with_capacity(x.dim());
    for c in &x.coeffs {
        let val = ev.eval(c, k)?;
        v.push(val.v);
        s.push(val.s);
    }
    Ok((v, s))
}

impl Frame {
    pub fn build(ev: &Evaluator, gens: &[VectorField], dim: usize) -> Frame {
        let ar = &ev.arith;
        let thr = ev.threshold();
        let sampled = at_points(ev, |k| gens.iter().map(|g| field_at(ev, g, k)).collect::<Result<Vec<_>, _>>());
        let mut points = Vec::new();
        let mut accepted = vec![false; gens.len()];
        let mut ranks = Vec::new();
        for (k, vals) in sampled {
            let mut b = IncrementalBasis::new(dim);
            for (i, (v, s)) in vals.into_iter().enumerate() {
                if b.try_add(ar, thr, v, s) {
                    accepted[i] = true;
                }
            }
            ranks.push(b.len());
            points.push((k, b));
        }
        let rank = ranks.iter().copied().max().unwrap_or(0);
        if ranks.iter().any(|r| *r != rank) {
            ev.warn(format!("distribution rank differs across sample points: {:?}", ranks));
        }
        let accepted = (0..gens.len()).filter(|i| accepted[*i]).collect();
        Frame { points, accepted, rank }
    }

    /// Whether `x` lies in the span at every sample point where it is defined.
    pub fn contains(&self, ev: &Evaluator, x: &VectorField) -> bool {
        if x.is_zero_const() {
            return true;
        }
        for (k, b) in &self.points {
            if let Ok((v, s)) = field_at(ev, x, *k) {
                if !b.contains(&ev.arith, ev.threshold(), v, s) {
                    return false;
                }
            }
        }
        true
    }
}

/// Clears denominators and common factors from a field's coefficients.
pub fn tidy(x: &VectorField) -> VectorField {
    VectorField::new(x.chart.clone(), clear_denominators(x.coeffs.clone()))
}

impl Distribution {
    pub fn new(chart: &Arc<Chart>, gens: Vec<VectorField>) -> Distribution {
        Distribution { chart: chart.clone(), gens }
    }

    /// The whole tangent bundle.
    pub fn tangent(chart: &Arc<Chart>) -> Distribution {
        let gens = chart.coords().iter().map(|c| VectorField::coordinate(chart, &c.name).unwrap()).collect();
        Distribution::new(chart, gens)
    }

    pub fn parse(chart: &Arc<Chart>, gens: &[&str]) -> Result<Distribution, super::FieldError> {
        let g = gens.iter().map(|s| VectorField::parse(chart, s)).collect::<Result<Vec<_>, _>>()?;
        Ok(Distribution::new(chart, g))
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn matrix(&self) -> SymMatrix {
        SymMatrix::from_rows(self.chart.dim(), self.gens.iter().map(|g| g.coeffs.clone()).collect())
    }

    pub fn frame(&self, ev: &Evaluator) -> Frame {
        Frame::build(ev, &self.gens, self.chart.dim())
    }

    pub fn rank(&self, ev: &Evaluator) -> usize {
        self.frame(ev).rank
    }

    /// An independent subset of the generators, kept in their original order.
    pub fn basis(&self, ev: &Evaluator) -> Distribution {
        let f = self.frame(ev);
        Distribution::new(&self.chart, f.accepted.iter().map(|i| self.gens[*i].clone()).collect())
    }

    pub fn contains(&self, ev: &Evaluator, x: &VectorField) -> bool {
        self.frame(ev).contains(ev, x)
    }

    pub fn contains_all(&self, ev: &Evaluator, other: &Distribution) -> bool {
        let f = self.frame(ev);
        other.gens.iter().all(|x| f.contains(ev, x))
    }

    pub fn same_span(&self, ev: &Evaluator, other: &Distribution) -> bool {
        self.contains_all(ev, other) && other.contains_all(ev, self)
    }

    /// Basis of the sum, led by this distribution's generators.
    pub fn sum(&self, ev: &Evaluator, other: &Distribution) -> Distribution {
        let mut g = self.gens.clone();
        g.extend(other.gens.iter().cloned());
        Distribution::new(&self.chart, g).basis(ev)
    }

    /// Symbolic basis of the intersection, as combinations of this
    /// distribution's basis.
    pub fn intersect(&self, ev: &Evaluator, other: &Distribution) -> Distribution {
        let a = self.basis(ev);
        let b = other.basis(ev);
        if b.contains_all(ev, &a) {
            return a;
        }
        if a.contains_all(ev, &b) {
            return b;
        }
        let n = self.chart.dim();
        let (ra, rb) = (a.len(), b.len());
        // Columns: a_1..a_ra, b_1..b_rb; rows: coordinates.
        let mut data = Vec::with_capacity(n * (ra + rb));
        for i in 0..n {
            for x in &a.gens {
                data.push(x.coeffs[i].clone());
            }
            for y in &b.gens {
                data.push(y.coeffs[i].neg());
            }
        }
        let m = SymMatrix::new(n, ra + rb, data);
        let gens = m
            .nullspace(ev)
            .into_iter()
            .map(|v| tidy(&VectorField::combination(&self.chart, &v[..ra], &a.gens)))
            .collect();
        Distribution::new(&self.chart, gens)
    }

    /// Symbolic generators of the annihilator.
    pub fn annihilator(&self, ev: &Evaluator) -> Vec<OneForm> {
        let b = self.basis(ev);
        if b.is_empty() {
            return (0..self.chart.dim())
                .map(|i| {
                    let mut c = vec![Expr::zero(); self.chart.dim()];
                    c[i] = Expr::one();
                    OneForm::new(self.chart.clone(), c)
                })
                .collect();
        }
        b.matrix().nullspace(ev).into_iter().map(|c| OneForm::new(self.chart.clone(), c)).collect()
    }

    /// Brackets [E_a, E_b] for a < b, in lexicographic order of (a, b).
    pub fn brackets(&self) -> Vec<((usize, usize), VectorField)> {
        let mut out = Vec::new();
        for a in 0..self.gens.len() {
            for b in a + 1..self.gens.len() {
                out.push(((a, b), self.gens[a].bracket(&self.gens[b])));
            }
        }
        out
    }

    /// Derived distribution D + [D, D], led by a basis of D.
    pub fn derived(&self, ev: &Evaluator) -> Distribution {
        let b = self.basis(ev);
        let mut g = b.gens.clone();
        g.extend(b.brackets().into_iter().map(|(_, x)| x));
        Distribution::new(&self.chart, g).basis(ev)
    }

    pub fn integrability(&self, ev: &Evaluator) -> Integrability {
        let b = self.basis(ev);
        let f = b.frame(ev);
        for ((i, j), x) in b.brackets() {
            if !f.contains(ev, &x) {
                return Integrability::NotIntegrable { i, j, bracket: x };
            }
        }
        Integrability::Integrable
    }

    pub fn is_integrable(&self, ev: &Evaluator) -> bool {
        self.integrability(ev) == Integrability::Integrable
    }

    /// Symbolic basis of {X in D : [X, D] is contained in W}. W must contain D.
    pub fn relative_cauchy(&self, ev: &Evaluator, w: &Distribution) -> Distribution {
        let e = self.basis(ev);
        let m = e.len();
        let ann = w.annihilator(ev);
        if ann.is_empty() {
            return e;
        }
        let mut rows: Vec<Vec<Expr>> = Vec::new();
        let br: Vec<Vec<Option<VectorField>>> = (0..m)
            .map(|a| (0..m).map(|b| if a == b { None } else { Some(e.gens[a].bracket(&e.gens[b])) }).collect())
            .collect();
        for th in &ann {
            for b in 0..m {
                let row: Vec<Expr> =
                    (0..m).map(|a| br[a][b].as_ref().map_or_else(Expr::zero, |x| th.pair(x))).collect();
                if row.iter().any(|x| !x.is_zero_const()) {
                    rows.push(row);
                }
            }
        }
        if rows.is_empty() {
            return e;
        }
        let gens = SymMatrix::from_rows(m, rows)
            .nullspace(ev)
            .into_iter()
            .map(|c| tidy(&VectorField::combination(&self.chart, &c, &e.gens)))
            .collect();
        Distribution::new(&self.chart, gens)
    }

    /// Symbolic basis of the Cauchy characteristic distribution.
    pub fn cauchy(&self, ev: &Evaluator) -> Distribution {
        self.relative_cauchy(ev, self)
    }

    /// Generic rank of the Cauchy characteristics, computed pointwise.
    pub fn cauchy_rank(&self, ev: &Evaluator) -> usize {
        let e = self.basis(ev);
        pointwise::relative_cauchy_rank(ev, &e.gens, &e.gens)
    }

    pub fn substitute(
        &self,
        map: &std::collections::BTreeMap<String, Expr>,
    ) -> Result<Distribution, crate::expr::ExprError> {
        let g = self.gens.iter().map(|x| x.substitute(map)).collect::<Result<Vec<_>, _>>()?;
        Ok(Distribution::new(&self.chart, g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::SampleConfig;
    use crate::geometry::Role;

    fn setup() -> (Evaluator, Arc<Chart>) {
        let c = Chart::from_names(
            &[("t", Role::Time), ("x1", Role::State), ("x2", Role::State), ("x3", Role::State), ("u", Role::Control)],
            &[],
        )
        .unwrap();
        (Evaluator::new(SampleConfig::default()), c)
    }

    #[test]
    fn chained_form_derived_flag() {
        let (ev, c) = setup();
        let d = Distribution::parse(&c, &["d_t + x2*d_x1 + x3*d_x2 + u*d_x3", "d_u"]).unwrap();
        assert_eq!(d.rank(&ev), 2);
        let d1 = d.derived(&ev);
        assert_eq!(d1.rank(&ev), 3);
        assert_eq!(d1.derived(&ev).rank(&ev), 4);
        assert_eq!(d.cauchy_rank(&ev), 0);
        assert_eq!(d1.cauchy_rank(&ev), 1);
        let ch = d1.cauchy(&ev);
        assert_eq!(ch.len(), 1);
        assert!(ch.same_span(&ev, &Distribution::parse(&c, &["d_u"]).unwrap()));
        assert!(!d.is_integrable(&ev));
    }

    #[test]
    fn intersection_and_annihilator() {
        let (ev, c) = setup();
        let a = Distribution::parse(&c, &["d_t", "d_x1", "x2*d_x2 + d_x3"]).unwrap();
        let b = Distribution::parse(&c, &["d_x1 + d_u", "d_x3 + x2*d_x2", "d_t + d_x2"]).unwrap();
        let i = a.intersect(&ev, &b);
        assert_eq!(i.rank(&ev), 1);
        assert!(a.contains_all(&ev, &i) && b.contains_all(&ev, &i));
        for th in a.annihilator(&ev) {
            for x in &a.gens {
                assert!(ev.is_zero(&th.pair(x)));
            }
        }
        assert_eq!(a.annihilator(&ev).len(), 2);
    }
}
