//! Goursat bundle recognition: Engel rank, polar matrices and the resolvent
//! bundle of a Weber structure, Bryant sub-bundles, the fundamental bundle,
//! and the static/orbital feedback linearization verdicts.

use crate::expr::{common_factor, Evaluator, Expr};
use crate::flags::{type_mismatch, DerivedFlag, RefinedDerivedType, Signature};
use crate::geometry::{
    at_points, tidy, AltForm, Distribution, Integrability, NumForm, OneForm, SymMatrix, VectorField,
};
use std::collections::BTreeMap;
use std::fmt;

/// Engel rank of the Pfaffian system spanned by `forms`: the least ρ with
/// (t_1 dθ^1 + ... + t_s dθ^s)^(ρ+1) ∧ θ^1 ∧ ... ∧ θ^s = 0 for generic t.
pub fn engel_rank(ev: &Evaluator, forms: &[OneForm]) -> usize {
    if forms.is_empty() {
        return 0;
    }
    let theta: Vec<AltForm> = forms.iter().map(AltForm::from_one_form).collect();
    let dtheta: Vec<AltForm> = theta.iter().map(AltForm::exterior_derivative).collect();
    let ranks = at_points(ev, |k| {
        let ar = &ev.arith;
        let mut acc: NumForm = theta[0].eval_at(ev, k)?;
        for t in &theta[1..] {
            acc = acc.wedge(&t.eval_at(ev, k)?, ar);
        }
        let mut omega: Option<NumForm> = None;
        for (s, d) in dtheta.iter().enumerate() {
            let t = ar.rational(&ev.coordinate(k, &format!("engel_t{}", s + 1)));
            let term = d.eval_at(ev, k)?.scale(&t, ar);
            omega = Some(match omega {
                None => term,
                Some(o) => o.add(&term, ar),
            });
        }
        let omega = omega.expect("at least one form");
        let mut rho = 0;
        loop {
            acc = acc.wedge(&omega, ar);
            if acc.comps.is_empty() || acc.is_negligible(ev) {
                return Ok(rho);
            }
            rho += 1;
        }
    });
    ranks.iter().map(|r| r.1).max().unwrap_or(0)
}

/// The polar matrix of a distribution V with derived bundle of corank data
/// m0 = c + q + 1, m1 = c + 2q + 1. Columns are indexed by `fields`, which
/// extend a basis of Char V to a basis of V; rows by q one-forms from
/// ann V that are independent on V^(1)/V.
#[derive(Clone, Debug)]
pub struct PolarProblem {
    pub base: Distribution,
    pub cauchy: Distribution,
    pub fields: Vec<VectorField>,
    pub rows: Vec<OneForm>,
    pub symbols: Vec<String>,
    pub matrix: SymMatrix,
    pub q: usize,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ResolventError {
    #[error("no Weber structure candidate: {0}")]
    Precondition(String),
    #[error("no Weber structure: {0}")]
    NoWeberStructure(String),
    #[error("rank-one locus needs nonlinear elimination; residual system has {} equations", residual.len())]
    Indeterminate { residual: Vec<Expr> },
}

/// A Weber structure of rank q and its resolvent bundle.
#[derive(Clone, Debug)]
pub struct WeberStructure {
    pub q: usize,
    pub c: usize,
    /// Lifts of the singular sub-bundle generators, combinations of the polar fields.
    pub singular: Vec<VectorField>,
    /// Char V together with the singular generators.
    pub resolvent: Distribution,
    pub integrable: bool,
    pub polar: PolarProblem,
}

fn symbol_names(d: &Distribution, q: usize) -> Vec<String> {
    let plain: Vec<String> = (1..=q + 1).map(|i| format!("a{}", i)).collect();
    let clash = plain.iter().any(|s| d.chart.is_known(s));
    if clash {
        (1..=q + 1).map(|i| format!("polar_a{}", i)).collect()
    } else {
        plain
    }
}

/// Builds the polar problem of `d`. `fields`, when given, replaces the
/// default complement of Char D in D.
pub fn polar_problem(
    ev: &Evaluator,
    d: &Distribution,
    fields: Option<&[VectorField]>,
) -> Result<PolarProblem, ResolventError> {
    let base = d.basis(ev);
    let m0 = base.len();
    let d1 = base.derived(ev);
    let m1 = d1.len();
    if m1 <= m0 + 1 {
        return Err(ResolventError::Precondition(format!("rank V^(1) - rank V = {} < 2", m1 - m0)));
    }
    let q = m1 - m0;
    let cauchy = base.cauchy(ev).basis(ev);
    let c = cauchy.len();
    if m0 != c + q + 1 {
        return Err(ResolventError::Precondition(format!(
            "rank Char V = {} but a Weber structure needs {}",
            c,
            m0 as i64 - q as i64 - 1
        )));
    }
    let fields: Vec<VectorField> = match fields {
        Some(f) => f.to_vec(),
        None => {
            let mut g = cauchy.gens.clone();
            g.extend(base.gens.iter().cloned());
            let b = Distribution::new(&d.chart, g).basis(ev);
            b.gens[c..].to_vec()
        }
    };
    if fields.len() != q + 1 {
        return Err(ResolventError::Precondition(format!("need {} polar fields, got {}", q + 1, fields.len())));
    }
    let ann = base.annihilator(ev);
    let fresh = &d1.gens[m0..];
    let mut rows: Vec<OneForm> = Vec::new();
    let mut rank = 0;
    for th in ann {
        let mut cand: Vec<Vec<Expr>> = rows.iter().map(|r| fresh.iter().map(|w| r.pair(w)).collect()).collect();
        cand.push(fresh.iter().map(|w| th.pair(w)).collect());
        let r = SymMatrix::from_rows(q, cand).rank(ev);
        if r > rank {
            rank = r;
            rows.push(th);
            if rank == q {
                break;
            }
        }
    }
    if rows.len() != q {
        return Err(ResolventError::Precondition("annihilator does not separate V^(1)/V".into()));
    }
    let symbols = symbol_names(d, q);
    let a: Vec<Expr> = symbols.iter().map(|s| Expr::symbol(s)).collect();
    let brackets: Vec<Vec<VectorField>> =
        fields.iter().map(|yi| fields.iter().map(|yj| yi.bracket(yj)).collect()).collect();
    let mut data = Vec::with_capacity(q * (q + 1));
    for th in &rows {
        for j in 0..=q {
            let terms = (0..=q).filter(|i| *i != j).map(|i| a[i].mul(&th.pair(&brackets[i][j]))).collect();
            data.push(Expr::sum(terms));
        }
    }
    let matrix = SymMatrix::new(q, q + 1, data);
    Ok(PolarProblem { base, cauchy, fields, rows, symbols, matrix, q })
}

impl PolarProblem {
    /// All 2×2 minors of the polar matrix.
    pub fn minors(&self) -> Vec<Expr> {
        let m = &self.matrix;
        let mut out = Vec::new();
        for r1 in 0..m.rows {
            for r2 in r1 + 1..m.rows {
                for c1 in 0..m.cols {
                    for c2 in c1 + 1..m.cols {
                        let e = m.get(r1, c1).mul(m.get(r2, c2)).sub(&m.get(r1, c2).mul(m.get(r2, c1)));
                        if !e.is_zero_const() {
                            out.push(e);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Polynomial in the line symbols with coefficients free of them.
type Poly = BTreeMap<Vec<u32>, Expr>;

fn to_poly(ev: &Evaluator, e: &Expr, vars: &[String]) -> Poly {
    let mut p = Poly::new();
    for t in e.terms() {
        let mut exps = vec![0u32; vars.len()];
        let mut coeff = t.clone();
        for (b, n) in t.monomial_factors() {
            if let Some(i) = b.as_symbol().and_then(|s| vars.iter().position(|v| v == s)) {
                exps[i] = n.max(0) as u32;
                coeff = coeff.mul(&b.pow(-n).expect("symbol is nonzero"));
            }
        }
        let slot = p.entry(exps).or_insert_with(Expr::zero);
        *slot = slot.add(&coeff);
    }
    p.retain(|_, c| !c.is_zero_const() && !ev.is_zero(c));
    p
}

fn from_poly(p: &Poly, vars: &[String]) -> Expr {
    let mut terms = Vec::new();
    for (exps, c) in p {
        let mut f = vec![c.clone()];
        for (i, n) in exps.iter().enumerate() {
            if *n > 0 {
                f.push(Expr::symbol(&vars[i]).pow(*n as i64).expect("positive power"));
            }
        }
        terms.push(Expr::product(f));
    }
    Expr::sum(terms)
}

/// A linear component of the rank-one locus being built: the original
/// symbols as linear forms in the still-free ones.
#[derive(Clone, Debug)]
struct Branch {
    live: Vec<bool>,
    param: Vec<Expr>,
    eqs: Vec<Expr>,
}

impl Branch {
    fn apply(&mut self, map: &BTreeMap<String, Expr>) {
        let sub = |e: &Expr| e.substitute(map).expect("polynomial substitution");
        self.param = self.param.iter().map(sub).collect();
        self.eqs = self.eqs.iter().map(sub).collect();
    }

    fn dim(&self) -> usize {
        self.live.iter().filter(|l| **l).count()
    }
}

enum Shape {
    /// The cofactor after removing the monomial is a nonzero constant in a.
    Monomial,
    Linear,
    Nonlinear,
}

fn classify(p: &Poly) -> (Vec<u32>, Poly, Shape) {
    let nv = p.keys().next().map_or(0, |k| k.len());
    let mut common = vec![u32::MAX; nv];
    for e in p.keys() {
        for i in 0..nv {
            common[i] = common[i].min(e[i]);
        }
    }
    let cof: Poly = p
        .iter()
        .map(|(e, c)| (e.iter().zip(&common).map(|(a, b)| a - b).collect::<Vec<u32>>(), c.clone()))
        .collect();
    let degs: Vec<u32> = cof.keys().map(|e| e.iter().sum()).collect();
    let shape = if degs.iter().all(|d| *d == 0) {
        Shape::Monomial
    } else if degs.iter().all(|d| *d == 1) {
        Shape::Linear
    } else {
        Shape::Nonlinear
    };
    (common, cof, shape)
}

const MAX_BRANCHES: usize = 512;

/// Solves a homogeneous system for its linear components by elimination
/// of variables occurring linearly. Returns solved branches and the
/// residual systems of branches where only nonlinear equations remained.
fn solve_linear_components(ev: &Evaluator, vars: &[String], eqs: Vec<Expr>) -> (Vec<Branch>, Vec<Vec<Expr>>) {
    let start = Branch { live: vec![true; vars.len()], param: vars.iter().map(|v| Expr::symbol(v)).collect(), eqs };
    let mut stack = vec![start];
    let mut done = Vec::new();
    let mut residual = Vec::new();
    let mut visited = 0;
    while let Some(mut b) = stack.pop() {
        visited += 1;
        if visited > MAX_BRANCHES {
            residual.push(b.eqs.clone());
            continue;
        }
        let mut polys: Vec<Poly> = Vec::new();
        for e in &b.eqs {
            let p = to_poly(ev, e, vars);
            if !p.is_empty() && !polys.contains(&p) {
                polys.push(p);
            }
        }
        if polys.is_empty() {
            b.eqs.clear();
            done.push(b);
            continue;
        }
        let classified: Vec<(Vec<u32>, Poly, Shape)> = polys.iter().map(classify).collect();
        // A linear equation without monomial factor: one elimination, no branching.
        let linear = classified.iter().position(|(m, _, s)| matches!(s, Shape::Linear) && m.iter().all(|e| *e == 0));
        let factored = classified.iter().position(|(m, _, _)| m.iter().any(|e| *e > 0));
        let dead = classified.iter().any(|(m, _, s)| matches!(s, Shape::Monomial) && m.iter().all(|e| *e == 0));
        if dead {
            continue;
        }
        if let Some(i) = linear {
            let cof = &classified[i].1;
            let coeff: Vec<(usize, Expr)> = cof
                .iter()
                .map(|(e, c)| (e.iter().position(|x| *x == 1).expect("linear monomial"), c.clone()))
                .collect();
            let (p, cp) = coeff
                .iter()
                .min_by_key(|(v, c)| (!c.is_const(), c.size(), *v))
                .cloned()
                .expect("nonempty linear equation");
            let mut map = BTreeMap::new();
            let mut rhs = Vec::new();
            for (v, c) in &coeff {
                if *v == p {
                    continue;
                }
                rhs.push(c.mul(&Expr::symbol(&vars[*v])).neg());
            }
            match cp.as_const() {
                Some(k) => {
                    map.insert(vars[p].clone(), Expr::sum(rhs).scale(&k.recip()));
                }
                None => {
                    map.insert(vars[p].clone(), Expr::sum(rhs));
                    for (v, live) in b.live.iter().enumerate() {
                        if *live && v != p {
                            map.insert(vars[v].clone(), cp.mul(&Expr::symbol(&vars[v])));
                        }
                    }
                }
            }
            b.live[p] = false;
            b.apply(&map);
            b.eqs = b
                .eqs
                .iter()
                .map(|e| {
                    let t: Vec<Expr> = e.terms();
                    if t.is_empty() {
                        return e.clone();
                    }
                    let cf = common_factor(&t);
                    if cf.free_symbols().iter().any(|s| vars.contains(s)) || cf.is_one() {
                        e.clone()
                    } else {
                        e.mul(&cf.recip().expect("common factor is nonzero"))
                    }
                })
                .collect();
            stack.push(b);
            continue;
        }
        if let Some(i) = factored {
            let (mono, cof, shape) = &classified[i];
            // Cofactor branch first so it is explored last; the zero branches
            // are pushed after it and popped first.
            if !matches!(shape, Shape::Monomial) {
                let mut nb = b.clone();
                let old = from_poly(&polys[i], vars);
                let pos = nb.eqs.iter().position(|e| to_poly(ev, e, vars) == polys[i]);
                match pos {
                    Some(j) => nb.eqs[j] = from_poly(cof, vars),
                    None => {
                        nb.eqs.retain(|e| *e != old);
                        nb.eqs.push(from_poly(cof, vars));
                    }
                }
                stack.push(nb);
            }
            for (v, e) in mono.iter().enumerate() {
                if *e > 0 && b.live[v] {
                    let mut nb = b.clone();
                    let mut map = BTreeMap::new();
                    map.insert(vars[v].clone(), Expr::zero());
                    nb.live[v] = false;
                    nb.apply(&map);
                    stack.push(nb);
                }
            }
            continue;
        }
        residual.push(polys.iter().map(|p| from_poly(p, vars)).collect());
    }
    (done, residual)
}

/// The resolvent bundle of the Weber structure of `d`, if any.
pub fn resolvent(ev: &Evaluator, d: &Distribution) -> Result<WeberStructure, ResolventError> {
    resolvent_with(ev, polar_problem(ev, d, None)?)
}

/// Solves an already built polar problem for its singular sub-bundle.
pub fn resolvent_with(ev: &Evaluator, polar: PolarProblem) -> Result<WeberStructure, ResolventError> {
    let q = polar.q;
    let vars = polar.symbols.clone();
    let (branches, residual) = solve_linear_components(ev, &vars, polar.minors());
    let mut best: Option<&Branch> = None;
    for b in &branches {
        if b.dim() == q && best.is_none() {
            best = Some(b);
        } else if b.dim() > q {
            return Err(ResolventError::NoWeberStructure(
                "every line has degree at most one; the singular variety is the whole space".into(),
            ));
        }
    }
    let Some(best) = best else {
        if let Some(r) = residual.into_iter().next() {
            return Err(ResolventError::Indeterminate { residual: r });
        }
        return Err(ResolventError::NoWeberStructure(format!("no rank-one component of dimension {}", q)));
    };
    if branches.iter().filter(|b| b.dim() == q).count() > 1 {
        ev.warn("rank-one locus has several maximal components; using the first");
    }
    let map: BTreeMap<String, Expr> = vars.iter().cloned().zip(best.param.iter().cloned()).collect();
    let on_locus = SymMatrix::new(
        polar.matrix.rows,
        polar.matrix.cols,
        polar.matrix.data.iter().map(|e| e.substitute(&map).expect("polynomial substitution")).collect(),
    );
    let r = on_locus.rank(ev);
    if r != 1 {
        return Err(ResolventError::NoWeberStructure(format!("polar matrix has rank {} on the singular component", r)));
    }
    let mut singular = Vec::new();
    for (l, live) in best.live.iter().enumerate() {
        if !*live {
            continue;
        }
        let coeffs: Vec<Expr> = best
            .param
            .iter()
            .map(|p| {
                let poly = to_poly(ev, p, &vars);
                let mut key = vec![0u32; vars.len()];
                key[l] = 1;
                poly.get(&key).cloned().unwrap_or_else(Expr::zero)
            })
            .collect();
        singular.push(tidy(&VectorField::combination(&polar.base.chart, &coeffs, &polar.fields)));
    }
    let mut gens = polar.cauchy.gens.clone();
    gens.extend(singular.iter().cloned());
    let resolvent = Distribution::new(&polar.base.chart, gens);
    let c = polar.cauchy.len();
    let rk = resolvent.rank(ev);
    if rk != c + q {
        return Err(ResolventError::NoWeberStructure(format!("resolvent has rank {} instead of {}", rk, c + q)));
    }
    let integrable = resolvent.is_integrable(ev);
    Ok(WeberStructure { q, c, singular, resolvent, integrable, polar })
}

/// Result of searching for a Bryant sub-bundle.
#[derive(Clone, Debug)]
pub enum Bryant {
    Found(Distribution),
    Absent(String),
    Indeterminate(Vec<Expr>),
}

impl Bryant {
    pub fn found(&self) -> Option<&Distribution> {
        match self {
            Bryant::Found(d) => Some(d),
            _ => None,
        }
    }
}

/// {X in D : X(τ) = 0}, built by subtracting multiples of one generator.
pub fn kernel_of_differential(ev: &Evaluator, d: &Distribution, tau: &Expr) -> Distribution {
    let b = d.basis(ev);
    let vals: Vec<Expr> = b.gens.iter().map(|g| g.apply(tau)).collect();
    let Some(p) = (0..b.len()).find(|i| !ev.is_zero(&vals[*i])) else {
        return b;
    };
    let mut gens = Vec::new();
    for (i, g) in b.gens.iter().enumerate() {
        if i == p {
            continue;
        }
        if ev.is_zero(&vals[i]) {
            gens.push(g.clone());
        } else {
            gens.push(tidy(&g.scale(&vals[p]).sub(&b.gens[p].scale(&vals[i]))));
        }
    }
    Distribution::new(&d.chart, gens)
}

/// Corank-1 sub-bundle B of D with [B, B] ⊆ D. Uses the resolvent when
/// rank D^(1) - rank D >= 2, D ∩ Char D^(1) when it is 1 and D^(1) is not
/// everything, and {X in D : X(τ) = 0} when D^(1) = TM.
pub fn bryant_sub_bundle(ev: &Evaluator, d: &Distribution, tau: &Expr) -> Bryant {
    let base = d.basis(ev);
    let m0 = base.len();
    let d1 = base.derived(ev);
    let m1 = d1.len();
    if m1 == m0 {
        return Bryant::Absent("distribution is integrable".into());
    }
    let c = base.cauchy_rank(ev);
    if c as i64 != 2 * m0 as i64 - m1 as i64 - 1 {
        return Bryant::Absent(format!("rank Char = {} but 2 m0 - m1 - 1 = {}", c, 2 * m0 as i64 - m1 as i64 - 1));
    }
    let candidate = if m1 - m0 >= 2 {
        match resolvent(ev, &base) {
            Ok(w) => w.resolvent,
            Err(ResolventError::Indeterminate { residual }) => return Bryant::Indeterminate(residual),
            Err(e) => return Bryant::Absent(e.to_string()),
        }
    } else if m1 < d.chart.dim() {
        base.intersect(ev, &d1.cauchy(ev))
    } else {
        kernel_of_differential(ev, &base, tau)
    };
    let rk = candidate.rank(ev);
    if rk + 1 != m0 {
        return Bryant::Absent(format!("candidate has rank {} instead of {}", rk, m0 - 1));
    }
    let cb = candidate.basis(ev);
    let f = base.frame(ev);
    if cb.brackets().iter().any(|(_, x)| !f.contains(ev, x)) {
        return Bryant::Absent("[B, B] is not contained in D".into());
    }
    Bryant::Found(cb)
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum FundamentalError {
    #[error("top velocity is {0}, the fundamental bundle needs 1")]
    TopVelocity(i64),
    #[error("Z(tau) = {0}, expected 1")]
    Normalization(Expr),
}

/// A field of D with Z(τ) = 1, if D is not inside ker dτ.
pub fn normalized_field(ev: &Evaluator, d: &Distribution, tau: &Expr) -> Option<VectorField> {
    for g in &d.gens {
        let v = g.apply(tau);
        if ev.is_zero(&v) {
            continue;
        }
        if v.is_one() {
            return Some(g.clone());
        }
        return v.recip().ok().map(|r| g.scale(&r));
    }
    None
}

/// Π^k: starts from Char D^(1)_0 (or {X in D : X(τ) = 0} when k = 1) and
/// adds brackets with Z, k - 1 times.
pub fn fundamental_bundle(
    ev: &Evaluator,
    flag: &DerivedFlag,
    z: &VectorField,
    tau: &Expr,
) -> Result<Distribution, FundamentalError> {
    let k = flag.derived_length();
    let ranks = flag.ranks();
    let top = ranks[k] as i64 - ranks[k.saturating_sub(1)] as i64;
    if k == 0 || top != 1 {
        return Err(FundamentalError::TopVelocity(top));
    }
    let zt = z.apply(tau);
    if !ev.is_zero(&zt.sub(&Expr::one())) {
        return Err(FundamentalError::Normalization(zt));
    }
    let mut pi = if k >= 2 {
        flag.intersection_bundle(ev, 1).basis(ev)
    } else {
        kernel_of_differential(ev, flag.level(0), tau).basis(ev)
    };
    for _ in 1..k {
        let mut g = pi.gens.clone();
        g.extend(pi.gens.iter().map(|x| x.bracket(z)));
        pi = Distribution::new(&pi.chart, g).basis(ev);
    }
    Ok(pi)
}

/// Which condition of the Goursat characterization failed first.
#[derive(Clone, Debug)]
pub enum Obstruction {
    NotBracketGenerating,
    TypeMismatch(String),
    IntersectionNotIntegrable { level: usize, bracket: VectorField },
    NoWeberStructure(String),
    ResolventNotIntegrable { bracket: VectorField },
    FundamentalNotIntegrable { bracket: VectorField },
}

impl fmt::Display for Obstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Obstruction::NotBracketGenerating => write!(f, "not bracket generating"),
            Obstruction::TypeMismatch(r) => write!(f, "type mismatch: {}", r),
            Obstruction::IntersectionNotIntegrable { level, bracket } => {
                write!(f, "intersection bundle at level {} is not integrable; bracket {} leaves it", level, bracket)
            }
            Obstruction::NoWeberStructure(r) => write!(f, "top level has no Weber structure: {}", r),
            Obstruction::ResolventNotIntegrable { bracket } => {
                write!(f, "resolvent bundle is not integrable; bracket {} leaves it", bracket)
            }
            Obstruction::FundamentalNotIntegrable { bracket } => {
                write!(f, "fundamental bundle is not integrable; bracket {} leaves it", bracket)
            }
        }
    }
}

/// The top-level bundle that the independence condition is checked against.
#[derive(Clone, Debug)]
pub enum TopBundle {
    Resolvent(Box<WeberStructure>),
    Fundamental(Distribution),
}

#[derive(Clone, Debug, Default)]
pub struct GoursatOptions {
    /// Allow a nonzero Cauchy bundle at level 0 (augmented bundles).
    pub relative: bool,
    /// Independence condition; defaults to the time coordinate.
    pub tau: Option<Expr>,
}

impl GoursatOptions {
    pub fn tau_for(&self, d: &Distribution) -> Option<Expr> {
        self.tau.clone().or_else(|| d.chart.time_index().map(|i| Expr::symbol(d.chart.name(i))))
    }
}

#[derive(Clone, Debug)]
pub struct GoursatVerdict {
    pub is_goursat: bool,
    /// The resolvent could not be decided by linear elimination.
    pub indeterminate: Option<Vec<Expr>>,
    pub flag: DerivedFlag,
    pub rdt: RefinedDerivedType,
    pub signature: Signature,
    pub obstruction: Option<Obstruction>,
    pub top: Option<TopBundle>,
    pub notes: Vec<String>,
}

impl GoursatVerdict {
    pub fn derived_length(&self) -> usize {
        self.flag.derived_length()
    }
}

fn integrability_witness(ev: &Evaluator, d: &Distribution) -> Option<VectorField> {
    match d.integrability(ev) {
        Integrability::Integrable => None,
        Integrability::NotIntegrable { bracket, .. } => Some(bracket),
    }
}

pub fn goursat_verdict(ev: &Evaluator, d: &Distribution, opts: &GoursatOptions) -> GoursatVerdict {
    let flag = DerivedFlag::compute(ev, d);
    let rdt = flag.refined_derived_type(ev);
    let signature = rdt.deceleration();
    let mut v = GoursatVerdict {
        is_goursat: false,
        indeterminate: None,
        flag,
        rdt,
        signature,
        obstruction: None,
        top: None,
        notes: Vec::new(),
    };
    if !v.flag.bracket_generating {
        v.obstruction = Some(Obstruction::NotBracketGenerating);
        return v;
    }
    if let Ok(reason) = type_mismatch(&v.rdt, opts.relative) {
        v.obstruction = Some(Obstruction::TypeMismatch(reason));
        return v;
    }
    let k = v.flag.derived_length();
    for i in 1..k {
        let b = v.flag.intersection_bundle(ev, i);
        if let Some(bracket) = integrability_witness(ev, &b) {
            v.obstruction = Some(Obstruction::IntersectionNotIntegrable { level: i, bracket });
            return v;
        }
    }
    let top = v.signature.0[k - 1];
    if top > 1 {
        match resolvent(ev, v.flag.level(k - 1)) {
            Ok(w) => {
                if let Some(bracket) = integrability_witness(ev, &w.resolvent) {
                    v.obstruction = Some(Obstruction::ResolventNotIntegrable { bracket });
                    return v;
                }
                v.top = Some(TopBundle::Resolvent(Box::new(w)));
            }
            Err(ResolventError::Indeterminate { residual }) => {
                v.indeterminate = Some(residual);
                return v;
            }
            Err(e) => {
                v.obstruction = Some(Obstruction::NoWeberStructure(e.to_string()));
                return v;
            }
        }
    } else if let Some(tau) = opts.tau_for(d) {
        let ch = v.flag.cauchy_bundle(ev, k - 1);
        if ch.gens.iter().all(|x| ev.is_zero(&x.apply(&tau))) {
            match normalized_field(ev, v.flag.level(0), &tau) {
                Some(z) => match fundamental_bundle(ev, &v.flag, &z, &tau) {
                    Ok(pi) => {
                        if let Some(bracket) = integrability_witness(ev, &pi) {
                            v.obstruction = Some(Obstruction::FundamentalNotIntegrable { bracket });
                            return v;
                        }
                        v.top = Some(TopBundle::Fundamental(pi));
                    }
                    Err(e) => v.notes.push(format!("fundamental bundle not built: {}", e)),
                },
                None => v.notes.push(format!("no generator moves {}; fundamental bundle not built", tau)),
            }
        } else {
            v.notes.push(format!(
                "{} is not a first integral of Char V^({}); fundamental bundle not checked",
                tau,
                k - 1
            ));
        }
    }
    v.is_goursat = true;
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Linearization {
    /// Static feedback linearizable with t as independence condition.
    Static,
    /// Goursat, but t is not an admissible independence condition.
    OrbitalOnly,
    NotLinearizable,
    Indeterminate,
}

impl fmt::Display for Linearization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linearization::Static => "static feedback linearizable",
            Linearization::OrbitalOnly => "Goursat, independence condition is not dt (orbital only)",
            Linearization::NotLinearizable => "not Goursat",
            Linearization::Indeterminate => "indeterminate",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SflVerdict {
    pub goursat: GoursatVerdict,
    pub class: Linearization,
    /// Char V^(k-1) when ρ_k = 1, R(V^(k-1)) when ρ_k > 1.
    pub bundle: Option<Distribution>,
    /// Whether dt annihilates `bundle`; None without a time coordinate.
    pub dt_ok: Option<bool>,
    /// Whether a user-supplied τ has dτ annihilating `bundle`.
    pub tau_ok: Option<bool>,
}

pub fn annihilates(ev: &Evaluator, f: &Expr, d: &Distribution) -> bool {
    d.gens.iter().all(|x| ev.is_zero(&x.apply(f)))
}

pub fn sfl_verdict(ev: &Evaluator, d: &Distribution, opts: &GoursatOptions) -> SflVerdict {
    let goursat = goursat_verdict(ev, d, opts);
    let mut out = SflVerdict { class: Linearization::NotLinearizable, bundle: None, dt_ok: None, tau_ok: None, goursat };
    if out.goursat.indeterminate.is_some() {
        out.class = Linearization::Indeterminate;
        return out;
    }
    if !out.goursat.is_goursat {
        return out;
    }
    let k = out.goursat.derived_length();
    let bundle = match &out.goursat.top {
        Some(TopBundle::Resolvent(w)) => w.resolvent.clone(),
        _ => out.goursat.flag.cauchy_bundle(ev, k - 1),
    };
    out.dt_ok = d.chart.time_index().map(|i| annihilates(ev, &Expr::symbol(d.chart.name(i)), &bundle));
    out.tau_ok = opts.tau.as_ref().map(|t| annihilates(ev, t, &bundle));
    out.class = if out.dt_ok == Some(true) { Linearization::Static } else { Linearization::OrbitalOnly };
    out.bundle = Some(bundle);
    out
}
