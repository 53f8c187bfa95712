//! Derived flags and their numeric invariants: Cauchy and intersection
//! ranks, velocity, deceleration and the refined derived type.

use crate::expr::{Evaluator, Expr};
use crate::geometry::pointwise::{self, RelativeCauchy};
use crate::geometry::{at_points, Chart, Coordinate, Distribution, Role, VectorField};
use std::fmt;
use std::sync::Arc;

/// The flag D ⊆ D^(1) ⊆ ... ⊆ D^(k), each level a basis extending the previous one.
#[derive(Clone, Debug)]
pub struct DerivedFlag {
    pub levels: Vec<Distribution>,
    /// Generators added at each level (level 0 holds the basis of D).
    pub new_directions: Vec<Vec<VectorField>>,
    pub bracket_generating: bool,
}

/// Zeroes the components of `x` along coordinate fields already in `span`.
fn reduce_against_coordinates(x: &VectorField, span: &Distribution) -> VectorField {
    let mut out = x.clone();
    for g in &span.gens {
        let nz: Vec<usize> = (0..g.dim()).filter(|i| !g.coeffs[*i].is_zero_const()).collect();
        if nz.len() == 1 && g.coeffs[nz[0]].is_one() {
            out.coeffs[nz[0]] = Expr::zero();
        }
    }
    if out.is_zero_const() {
        x.clone()
    } else {
        out
    }
}

impl DerivedFlag {
    pub fn compute(ev: &Evaluator, d: &Distribution) -> DerivedFlag {
        let base = d.basis(ev);
        let mut levels = vec![base.clone()];
        let mut new_directions = vec![base.gens.clone()];
        loop {
            let cur = levels.last().unwrap();
            let next = cur.derived(ev);
            if next.len() == cur.len() {
                break;
            }
            let fresh: Vec<VectorField> =
                next.gens[cur.len()..].iter().map(|x| reduce_against_coordinates(x, cur)).collect();
            let mut gens = cur.gens.clone();
            gens.extend(fresh.iter().cloned());
            new_directions.push(fresh);
            levels.push(Distribution::new(&d.chart, gens));
        }
        let bracket_generating = levels.last().unwrap().len() == d.chart.dim();
        if !bracket_generating {
            ev.warn("distribution is not bracket generating");
        }
        DerivedFlag { levels, new_directions, bracket_generating }
    }

    pub fn derived_length(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.len()).collect()
    }

    pub fn level(&self, i: usize) -> &Distribution {
        &self.levels[i.min(self.levels.len() - 1)]
    }

    /// Generic rank of Char D^(i).
    pub fn cauchy_rank(&self, ev: &Evaluator, i: usize) -> usize {
        let e = &self.level(i).gens;
        pointwise::relative_cauchy_rank(ev, e, e)
    }

    /// Generic rank of D^(i-1) ∩ Char D^(i).
    pub fn intersection_rank(&self, ev: &Evaluator, i: usize) -> usize {
        assert!(i >= 1, "intersection bundles start at level 1");
        let e = &self.level(i).gens;
        let prev = &self.level(i - 1).gens;
        let n = self.levels[0].chart.dim();
        let rc = RelativeCauchy::new(e, e);
        let dims = at_points(ev, |k| {
            let ch = rc.at(ev, k)?;
            let p = pointwise::fields_at(ev, prev, k)?;
            Ok(pointwise::intersection_dim(ev, n, &ch, &p))
        });
        generic_min(ev, "intersection bundle", dims)
    }

    /// Symbolic basis of Char D^(i).
    pub fn cauchy_bundle(&self, ev: &Evaluator, i: usize) -> Distribution {
        self.level(i).cauchy(ev)
    }

    /// Symbolic basis of D^(i-1) ∩ Char D^(i).
    pub fn intersection_bundle(&self, ev: &Evaluator, i: usize) -> Distribution {
        assert!(i >= 1, "intersection bundles start at level 1");
        self.level(i - 1).intersect(ev, &self.cauchy_bundle(ev, i))
    }

    pub fn refined_derived_type(&self, ev: &Evaluator) -> RefinedDerivedType {
        let k = self.derived_length();
        let mut out = Vec::with_capacity(k + 1);
        for i in 0..=k {
            let m = self.levels[i].len();
            let chi = self.cauchy_rank(ev, i);
            if i == 0 || i == k {
                out.push(vec![m, chi]);
            } else {
                out.push(vec![m, self.intersection_rank(ev, i), chi]);
            }
        }
        RefinedDerivedType(out)
    }
}

pub(crate) fn generic_min(ev: &Evaluator, what: &str, vals: Vec<(usize, usize)>) -> usize {
    let min = vals.iter().map(|v| v.1).min().unwrap_or(0);
    if vals.iter().any(|v| v.1 != min) {
        ev.warn(format!("{} rank differs across sample points: {:?}", what, vals.iter().map(|v| v.1).collect::<Vec<_>>()));
    }
    min
}

/// [[m0, χ0], [m1, χ1_0, χ1], ..., [mk, χk]].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RefinedDerivedType(pub Vec<Vec<usize>>);

impl RefinedDerivedType {
    pub fn derived_length(&self) -> usize {
        self.0.len() - 1
    }

    pub fn m(&self, j: usize) -> usize {
        self.0[j][0]
    }

    pub fn chi(&self, j: usize) -> usize {
        *self.0[j].last().unwrap()
    }

    /// χ^j_{j-1}, present for 1 <= j <= k-1.
    pub fn chi_intersection(&self, j: usize) -> Option<usize> {
        (self.0[j].len() == 3).then(|| self.0[j][1])
    }

    /// ⟨Δ_1, ..., Δ_k⟩ with Δ_j = m_j - m_{j-1}.
    pub fn velocity(&self) -> Vec<i64> {
        (1..self.0.len()).map(|j| self.m(j) as i64 - self.m(j - 1) as i64).collect()
    }

    /// ⟨-Δ²_2, ..., -Δ²_k, Δ_k⟩.
    pub fn deceleration(&self) -> Signature {
        let d = self.velocity();
        let k = d.len();
        let mut rho: Vec<i64> = (0..k.saturating_sub(1)).map(|j| d[j] - d[j + 1]).collect();
        if let Some(last) = d.last() {
            rho.push(*last);
        }
        Signature(rho)
    }

    pub fn as_lists(&self) -> &[Vec<usize>] {
        &self.0
    }
}

impl fmt::Display for RefinedDerivedType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|l| format!("[{}]", l.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")))
            .collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Deceleration ⟨ρ_1, ..., ρ_k⟩; entries may be negative for non-Goursat systems.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Signature(pub Vec<i64>);

impl Signature {
    pub fn new(rho: &[i64]) -> Signature {
        Signature(rho.to_vec())
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    /// Δ_i = Σ_{l >= i} ρ_l, for i = 1..k.
    pub fn velocity(&self) -> Vec<i64> {
        (0..self.0.len()).map(|i| self.0[i..].iter().sum()).collect()
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SignatureError {
    #[error("signature must be non-empty with non-negative entries and a positive last entry")]
    Invalid,
    #[error("signature {kappa} has {sum} dependent variables but m = {m}")]
    Inconsistent { kappa: Signature, sum: i64, m: usize },
}

fn check_signature(kappa: &Signature) -> Result<(), SignatureError> {
    if kappa.0.is_empty() || kappa.0.iter().any(|r| *r < 0) || *kappa.0.last().unwrap() < 1 {
        return Err(SignatureError::Invalid);
    }
    Ok(())
}

/// Type numbers of the Brunovský normal form with signature κ and m controls.
pub fn brunovsky_type(kappa: &Signature, m: usize) -> Result<RefinedDerivedType, SignatureError> {
    check_signature(kappa)?;
    let sum: i64 = kappa.0.iter().sum();
    if sum != m as i64 {
        return Err(SignatureError::Inconsistent { kappa: kappa.clone(), sum, m });
    }
    let k = kappa.k();
    let delta = kappa.velocity();
    let mut ms = vec![1 + m as i64];
    for d in &delta {
        ms.push(ms.last().unwrap() + d);
    }
    let mut out = Vec::with_capacity(k + 1);
    for j in 0..=k {
        let mj = ms[j] as usize;
        if j == k {
            out.push(vec![mj, mj]);
            continue;
        }
        let chi = (2 * ms[j] - ms[j + 1] - 1) as usize;
        if j == 0 {
            out.push(vec![mj, chi]);
        } else {
            out.push(vec![mj, (ms[j - 1] - 1) as usize, chi]);
        }
    }
    Ok(RefinedDerivedType(out))
}

/// Whether a refined derived type has the shape of a partial prolongation.
/// With `relative` set, χ^0 may be nonzero. Returns the signature on success.
pub fn matches_goursat_type(rdt: &RefinedDerivedType, relative: bool) -> Option<Signature> {
    type_mismatch(rdt, relative).err()
}

/// Like `matches_goursat_type` but explains the first failing relation.
pub fn type_mismatch(rdt: &RefinedDerivedType, relative: bool) -> Result<String, Signature> {
    let k = rdt.derived_length();
    if k == 0 {
        return Ok("derived length is 0".into());
    }
    if rdt.m(k) != rdt.chi(k) {
        return Ok(format!("top level is not the tangent bundle: [{}, {}]", rdt.m(k), rdt.chi(k)));
    }
    if !relative && rdt.chi(0) != 0 {
        return Ok(format!("chi^0 = {} but must be 0", rdt.chi(0)));
    }
    for j in 0..k {
        let want = 2 * rdt.m(j) as i64 - rdt.m(j + 1) as i64 - 1;
        if rdt.chi(j) as i64 != want {
            return Ok(format!("chi^{} = {} but 2 m_{} - m_{} - 1 = {}", j, rdt.chi(j), j, j + 1, want));
        }
    }
    for i in 1..k {
        let want = rdt.m(i - 1) - 1;
        let got = rdt.chi_intersection(i).unwrap_or(usize::MAX);
        if got != want {
            return Ok(format!("chi^{}_{} = {} but m_{} - 1 = {}", i, i - 1, got, i - 1, want));
        }
    }
    let kappa = rdt.deceleration();
    if kappa.0.iter().any(|r| *r < 0) {
        return Ok(format!("deceleration {} has a negative entry", kappa));
    }
    Err(kappa)
}

/// The Brunovský normal form with signature κ: coordinates t and z{a}_{j},
/// one block per dependent variable, the highest jet of each being a control.
pub fn brunovsky(kappa: &Signature) -> Result<Distribution, SignatureError> {
    check_signature(kappa)?;
    let mut orders = Vec::new();
    for (i, r) in kappa.0.iter().enumerate() {
        for _ in 0..*r {
            orders.push(i + 1);
        }
    }
    let mut coords = vec![Coordinate { name: "t".into(), role: Role::Time }];
    for (a, o) in orders.iter().enumerate() {
        for j in 0..=*o {
            let role = if j == *o { Role::Control } else { Role::State };
            coords.push(Coordinate { name: format!("z{}_{}", a + 1, j), role });
        }
    }
    let chart: Arc<Chart> = Chart::new(coords, Vec::new()).expect("generated names are valid");
    let mut drift = VectorField::coordinate(&chart, "t").unwrap();
    let mut gens = Vec::new();
    for (a, o) in orders.iter().enumerate() {
        for j in 0..*o {
            let i = chart.index_of(&format!("z{}_{}", a + 1, j)).unwrap();
            drift.coeffs[i] = Expr::symbol(&format!("z{}_{}", a + 1, j + 1));
        }
        gens.push(VectorField::coordinate(&chart, &format!("z{}_{}", a + 1, o)).unwrap());
    }
    gens.insert(0, drift);
    Ok(Distribution::new(&chart, gens))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::SampleConfig;

    fn rdt(v: &[&[usize]]) -> RefinedDerivedType {
        RefinedDerivedType(v.iter().map(|l| l.to_vec()).collect())
    }

    #[test]
    fn brunovsky_type_numbers() {
        let t = brunovsky_type(&Signature::new(&[1, 1]), 2).unwrap();
        assert_eq!(t, rdt(&[&[3, 0], &[5, 2, 3], &[6, 6]]));
        let t = brunovsky_type(&Signature::new(&[3]), 3).unwrap();
        assert_eq!(t, rdt(&[&[4, 0], &[7, 7]]));
        assert!(brunovsky_type(&Signature::new(&[1, 1]), 3).is_err());
        assert!(brunovsky_type(&Signature::new(&[1, 0]), 1).is_err());
    }

    #[test]
    fn generated_normal_forms_have_predicted_type() {
        let ev = Evaluator::new(SampleConfig::default());
        for rho in [vec![1, 1], vec![0, 2], vec![1, 2, 0, 0, 1]] {
            let kappa = Signature(rho);
            let d = brunovsky(&kappa).unwrap();
            let flag = DerivedFlag::compute(&ev, &d);
            let t = flag.refined_derived_type(&ev);
            let m = kappa.0.iter().sum::<i64>() as usize;
            assert_eq!(t, brunovsky_type(&kappa, m).unwrap());
            assert_eq!(t.deceleration(), kappa);
            assert_eq!(matches_goursat_type(&t, false), Some(kappa.clone()));
        }
    }

    #[test]
    fn relative_type_allows_cauchy() {
        let t = rdt(&[&[4, 1], &[6, 3, 4], &[7, 7]]);
        assert_eq!(matches_goursat_type(&t, true), Some(Signature::new(&[1, 1])));
        assert_eq!(matches_goursat_type(&t, false), None);
        let pvtol = rdt(&[&[3, 0], &[5, 2, 2], &[7, 2, 2], &[9, 9]]);
        assert_eq!(matches_goursat_type(&pvtol, false), None);
        assert!(type_mismatch(&pvtol, false).unwrap().contains("chi^2 = 2"));
    }

    #[test]
    fn integrable_distribution_has_length_zero() {
        let ev = Evaluator::new(SampleConfig::default());
        let c = Chart::from_names(&[("x", Role::State), ("y", Role::State)], &[]).unwrap();
        let d = Distribution::parse(&c, &["d_x + y*d_y"]).unwrap();
        let f = DerivedFlag::compute(&ev, &d);
        assert_eq!(f.derived_length(), 0);
        assert_eq!(f.refined_derived_type(&ev), rdt(&[&[1, 1]]));
    }
}
