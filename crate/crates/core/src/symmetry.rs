//! Symmetry groups of control systems: control admissibility, transverse
//! ranks and the rank-transfer formulas for augmented bundles, quotient
//! verdicts, explicit quotients from invariants, and bracket tables.

use crate::expr::{EvalError, Evaluator, Expr, Rational};
use crate::flags::{DerivedFlag, RefinedDerivedType, Signature};
use crate::geometry::pointwise::{self, NumVecs, RelativeCauchy};
use crate::geometry::{at_points, Chart, ChartError, Coordinate, Distribution, Role, SymMatrix, VectorField};
use crate::goursat::{sfl_verdict, GoursatOptions, Linearization, SflVerdict};
use crate::numeric::NumMat;
use astro_float::BigFloat;
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

/// [X, E] ∈ D for every generator E of D.
pub fn is_infinitesimal_symmetry(ev: &Evaluator, x: &VectorField, d: &Distribution) -> bool {
    let f = d.frame(ev);
    d.gens.iter().all(|e| f.contains(ev, &x.bracket(e)))
}

#[derive(Clone, Debug)]
pub struct ControlSymmetryReport {
    /// Generators that are not infinitesimal symmetries.
    pub non_symmetries: Vec<usize>,
    /// Generators with X(t) != 0.
    pub moves_time: Vec<usize>,
    /// Generic rank of the (t, x)-components of the generators.
    pub projection_rank: usize,
    pub dim: usize,
}

impl ControlSymmetryReport {
    pub fn ok(&self) -> bool {
        self.non_symmetries.is_empty() && self.moves_time.is_empty() && self.projection_rank == self.dim
    }
}

pub fn control_symmetry_report(ev: &Evaluator, gamma: &[VectorField], d: &Distribution) -> ControlSymmetryReport {
    let chart = &d.chart;
    let non_symmetries = (0..gamma.len()).filter(|i| !is_infinitesimal_symmetry(ev, &gamma[*i], d)).collect();
    let moves_time = match chart.time_index() {
        Some(ti) => (0..gamma.len()).filter(|i| !ev.is_zero(&gamma[*i].coeffs[ti])).collect(),
        None => Vec::new(),
    };
    let mut cols: Vec<usize> = chart.time_index().into_iter().collect();
    cols.extend(chart.indices_with(Role::State));
    let rows: Vec<Vec<Expr>> = gamma.iter().map(|g| cols.iter().map(|i| g.coeffs[*i].clone()).collect()).collect();
    let projection_rank = if gamma.is_empty() || cols.is_empty() {
        0
    } else {
        SymMatrix::from_rows(cols.len(), rows).rank(ev)
    };
    ControlSymmetryReport { non_symmetries, moves_time, projection_rank, dim: gamma.len() }
}

pub fn is_control_symmetry(ev: &Evaluator, gamma: &[VectorField], d: &Distribution) -> bool {
    control_symmetry_report(ev, gamma, d).ok()
}

#[derive(Clone, Debug)]
pub struct AdmissibilityReport {
    pub control: ControlSymmetryReport,
    pub state_dim: usize,
    /// Γ ∩ D^(1) = 0.
    pub strongly_transverse: bool,
}

impl AdmissibilityReport {
    pub fn ok(&self) -> bool {
        self.control.ok() && self.control.dim < self.state_dim && self.strongly_transverse
    }

    /// Reasons the action fails to be control admissible.
    pub fn failures(&self, names: &[String]) -> Vec<String> {
        let name = |i: &usize| names.get(*i).cloned().unwrap_or_else(|| format!("#{}", i + 1));
        let mut out = Vec::new();
        for i in &self.control.non_symmetries {
            out.push(format!("{} is not an infinitesimal symmetry", name(i)));
        }
        for i in &self.control.moves_time {
            out.push(format!("{} does not preserve t", name(i)));
        }
        if self.control.projection_rank != self.control.dim {
            out.push(format!(
                "(t, x)-projection has rank {} but the group has dimension {}",
                self.control.projection_rank, self.control.dim
            ));
        }
        if self.control.dim >= self.state_dim {
            out.push(format!("group dimension {} is not below the state dimension {}", self.control.dim, self.state_dim));
        }
        if !self.strongly_transverse {
            out.push("generators meet the derived bundle".into());
        }
        out
    }
}

fn intersection_rank(ev: &Evaluator, n: usize, a: &[VectorField], b: &[VectorField], what: &str) -> usize {
    let dims = at_points(ev, |k| {
        let x = pointwise::fields_at(ev, a, k)?;
        let y = pointwise::fields_at(ev, b, k)?;
        Ok(pointwise::intersection_dim(ev, n, &x, &y))
    });
    crate::flags::generic_min(ev, what, dims)
}

pub fn control_admissibility(ev: &Evaluator, gamma: &[VectorField], d: &Distribution) -> AdmissibilityReport {
    let control = control_symmetry_report(ev, gamma, d);
    let d1 = d.derived(ev);
    let n = d.chart.dim();
    let strongly_transverse = intersection_rank(ev, n, &d1.gens, gamma, "transverse") == 0;
    AdmissibilityReport { control, state_dim: d.chart.indices_with(Role::State).len(), strongly_transverse }
}

pub fn is_control_admissible(ev: &Evaluator, gamma: &[VectorField], d: &Distribution) -> bool {
    control_admissibility(ev, gamma, d).ok()
}

/// Transverse ranks and the auxiliary ranks entering the transfer formulas.
/// Vectors are indexed by flag level i = 0..=k; primed quantities and q'
/// have no entry at level 0.
#[derive(Clone, Debug)]
pub struct TransversalityReport {
    pub r: usize,
    /// Largest ℓ with Γ ∩ V^(ℓ) = 0, if Γ ∩ V = 0.
    pub ell: Option<usize>,
    /// Γ_i = V^(i) ∩ Γ.
    pub gamma: Vec<Distribution>,
    pub ranks: Vec<usize>,
    /// rank(Γ ∩ Char V^(i)).
    pub p: Vec<usize>,
    /// rank(Γ_{j-1} ∩ Char V^(j)).
    pub p_prime: Vec<Option<usize>>,
    /// rank K_i, with K_i taken modulo Char V^(i). Zero at levels where
    /// V^(i) + Γ is already the whole tangent space.
    pub q: Vec<usize>,
    /// rank(K_j ∩ V^(j-1)) modulo Char V^(j), likewise.
    pub q_prime: Vec<Option<usize>>,
}

impl TransversalityReport {
    pub fn is_strongly_transverse(&self) -> bool {
        self.ell.is_some_and(|l| l >= 1)
    }
}

/// {X in V^(i) : [X, V^(i)] ⊆ V^(i) + Γ_{i+1}}, the lift of K_i.
pub fn kernel_bundle(ev: &Evaluator, flag: &DerivedFlag, gamma_next: &Distribution, i: usize) -> Distribution {
    let v = flag.level(i);
    let mut w = v.gens.clone();
    w.extend(gamma_next.gens.iter().cloned());
    v.relative_cauchy(ev, &Distribution::new(&v.chart, w))
}

fn dims_at<F>(ev: &Evaluator, what: &str, f: F) -> usize
where
    F: Fn(usize) -> Result<usize, EvalError>,
{
    crate::flags::generic_min(ev, what, at_points(ev, f))
}

pub fn transversality(ev: &Evaluator, flag: &DerivedFlag, gamma: &Distribution) -> TransversalityReport {
    let k = flag.derived_length();
    let n = gamma.chart.dim();
    let g = gamma.basis(ev);
    let r = g.len();
    let mut gammas = Vec::with_capacity(k + 1);
    let mut ranks = Vec::with_capacity(k + 1);
    for i in 0..=k {
        let lvl = flag.level(i);
        let ri = intersection_rank(ev, n, &lvl.gens, &g.gens, "transverse");
        ranks.push(ri);
        gammas.push(if ri == 0 {
            Distribution::new(&g.chart, Vec::new())
        } else if ri == r {
            g.clone()
        } else {
            lvl.intersect(ev, &g).basis(ev)
        });
    }
    let ell = if ranks[0] > 0 { None } else { Some(ranks.iter().take_while(|r| **r == 0).count() - 1) };
    let mut p = Vec::with_capacity(k + 1);
    let mut p_prime = vec![None];
    let mut q = Vec::with_capacity(k + 1);
    let mut q_prime = vec![None];
    for i in 0..=k {
        let e = &flag.level(i).gens;
        let ch = RelativeCauchy::new(e, e);
        p.push(dims_at(ev, "symmetry-Cauchy", |pt| {
            let c = ch.at(ev, pt)?;
            let x = pointwise::fields_at(ev, &g.gens, pt)?;
            Ok(pointwise::intersection_dim(ev, n, &c, &x))
        }));
        if i >= 1 {
            let prev = &gammas[i - 1].gens;
            p_prime.push(Some(dims_at(ev, "transverse-Cauchy", |pt| {
                let c = ch.at(ev, pt)?;
                let x = pointwise::fields_at(ev, prev, pt)?;
                Ok(pointwise::intersection_dim(ev, n, &c, &x))
            })));
        }
        let m_hat = flag.ranks()[i] + r - ranks[i];
        if i == k || m_hat >= n {
            q.push(0);
            if i >= 1 {
                q_prime.push(Some(0));
            }
            continue;
        }
        let mut w = e.clone();
        w.extend(gammas[i + 1].gens.iter().cloned());
        let kc = RelativeCauchy::new(e, &w);
        let chi = flag.cauchy_rank(ev, i);
        let kdim = dims_at(ev, "kernel bundle", |pt| kc.at(ev, pt).map(|v| v.len()));
        q.push(kdim.saturating_sub(chi));
        if i >= 1 {
            let prev = &flag.level(i - 1).gens;
            let chi_int = flag.intersection_rank(ev, i);
            let kv = dims_at(ev, "kernel intersection", |pt| {
                let kk: NumVecs = kc.at(ev, pt)?;
                let x = pointwise::fields_at(ev, prev, pt)?;
                Ok(pointwise::intersection_dim(ev, n, &kk, &x))
            });
            q_prime.push(Some(kv.saturating_sub(chi_int)));
        }
    }
    TransversalityReport { r, ell, gamma: gammas, ranks, p, p_prime, q, q_prime }
}

/// Refined derived type of V ⊕ Γ predicted from the type of V and the
/// transverse data: m̂_i = m_i + r - r_i, χ̂^i = χ^i + r - p_i + q_i,
/// χ̂^j_{j-1} = χ^j_{j-1} + r - p'_j + q'_j, for levels with m̂ < n.
pub fn predict_augmented_rdt(rdt: &RefinedDerivedType, rep: &TransversalityReport, n: usize) -> RefinedDerivedType {
    let r = rep.r as i64;
    let mut out = Vec::new();
    for i in 0..=rdt.derived_length() {
        let m = rdt.m(i) as i64 + r - rep.ranks[i] as i64;
        if m >= n as i64 {
            out.push(vec![n, n]);
            break;
        }
        let chi = rdt.chi(i) as i64 + r - rep.p[i] as i64 + rep.q[i] as i64;
        if i == 0 {
            out.push(vec![m as usize, chi as usize]);
        } else {
            let ci = rdt.chi_intersection(i).unwrap_or(0) as i64 + r - rep.p_prime[i].unwrap_or(0) as i64
                + rep.q_prime[i].unwrap_or(0) as i64;
            out.push(vec![m as usize, ci as usize, chi as usize]);
        }
    }
    RefinedDerivedType(out)
}

/// Deceleration of V ⊕ Γ from velocities alone:
/// ⟨∇²_2 - Δ²_2, ..., ∇²_k̂ - Δ²_k̂, Δ_k̂ - ∇_k̂⟩ with ∇_i = r_i - r_{i-1}.
pub fn predicted_quotient_signature(rdt: &RefinedDerivedType, rep: &TransversalityReport, n: usize) -> Signature {
    let r = rep.r as i64;
    let k = rdt.derived_length();
    let khat = (0..=k).find(|i| rdt.m(*i) as i64 + r - rep.ranks[*i] as i64 >= n as i64).unwrap_or(k);
    let delta = |i: usize| rdt.m(i) as i64 - rdt.m(i - 1) as i64;
    let nabla = |i: usize| rep.ranks[i] as i64 - rep.ranks[i - 1] as i64;
    let mut rho = Vec::new();
    for j in 2..=khat {
        let nabla2 = nabla(j) - nabla(j - 1);
        let delta2 = delta(j) - delta(j - 1);
        rho.push(nabla2 - delta2);
    }
    if khat >= 1 {
        rho.push(delta(khat) - nabla(khat));
    }
    Signature(rho)
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SymmetryError {
    #[error("generators meet the derived bundle: rank of Γ ∩ V^(1) is {0}")]
    NotTransverse(usize),
    #[error("{invariant} is not invariant under {generator}: X(φ) = {residue}")]
    NotInvariant { invariant: String, generator: String, residue: Expr },
    #[error("invariants have differential rank {got}, expected {want}")]
    InvariantRank { got: usize, want: usize },
    #[error("cross-section does not invert the invariants: {invariant} becomes {value}")]
    Section { invariant: String, value: Expr },
    #[error("original coordinate {coordinate} survives in the quotient field: {field}")]
    Residue { coordinate: String, field: String },
    #[error("quotient chart: {0}")]
    Chart(#[from] ChartError),
    #[error("pushforward check failed at sample point {0}")]
    Pushforward(usize),
    #[error("bracket [{i}, {j}] leaves the span of the generators: {bracket}")]
    NotClosed { i: String, j: String, bracket: String },
    #[error("bracket [{i}, {j}] has non-constant or unresolved coefficients")]
    NonConstant { i: String, j: String },
    #[error("generators are dependent at every sample point")]
    Dependent,
}

/// V ⊕ Γ; requires Γ ∩ V^(1) = 0.
pub fn augmented(ev: &Evaluator, d: &Distribution, gamma: &Distribution) -> Result<Distribution, SymmetryError> {
    let d1 = d.derived(ev);
    let meet = intersection_rank(ev, d.chart.dim(), &d1.gens, &gamma.gens, "transverse");
    if meet > 0 {
        return Err(SymmetryError::NotTransverse(meet));
    }
    let mut g = d.basis(ev).gens;
    g.extend(gamma.basis(ev).gens);
    Ok(Distribution::new(&d.chart, g))
}

/// Relative Goursat and static feedback quotient analysis of V by Γ.
#[derive(Clone, Debug)]
pub struct QuotientVerdict {
    pub admissibility: AdmissibilityReport,
    pub cauchy_rank: usize,
    pub transversality: TransversalityReport,
    pub rdt: RefinedDerivedType,
    pub predicted: RefinedDerivedType,
    pub predicted_signature: Signature,
    /// Verdict on V ⊕ Γ, with a nonzero Cauchy bundle allowed.
    pub augmented: Option<SflVerdict>,
    pub relative_goursat: bool,
    pub sfl_quotient: bool,
    pub issues: Vec<String>,
}

pub fn quotient_verdict(
    ev: &Evaluator,
    d: &Distribution,
    gamma: &Distribution,
    names: &[String],
    tau: Option<&Expr>,
) -> QuotientVerdict {
    let admissibility = control_admissibility(ev, &gamma.gens, d);
    let flag = DerivedFlag::compute(ev, d);
    let rdt = flag.refined_derived_type(ev);
    let n = d.chart.dim();
    let transversality = transversality(ev, &flag, gamma);
    let predicted = predict_augmented_rdt(&rdt, &transversality, n);
    let predicted_signature = predicted_quotient_signature(&rdt, &transversality, n);
    let cauchy_rank = rdt.chi(0);
    let mut issues = admissibility.failures(names);
    if cauchy_rank != 0 {
        issues.push(format!("Char V has rank {}; the relative test needs it trivial", cauchy_rank));
    }
    let mut v = QuotientVerdict {
        admissibility,
        cauchy_rank,
        transversality,
        rdt,
        predicted,
        predicted_signature,
        augmented: None,
        relative_goursat: false,
        sfl_quotient: false,
        issues,
    };
    let aug = match augmented(ev, d, gamma) {
        Ok(a) => a,
        Err(e) => {
            v.issues.push(e.to_string());
            return v;
        }
    };
    let opts = GoursatOptions { relative: true, tau: tau.cloned() };
    let s = sfl_verdict(ev, &aug, &opts);
    let pre = v.issues.is_empty();
    v.relative_goursat = pre && s.goursat.is_goursat && s.goursat.derived_length() > 1;
    if pre && s.goursat.is_goursat && s.goursat.derived_length() <= 1 {
        v.issues.push("augmented bundle has derived length 1".into());
    }
    v.sfl_quotient = v.relative_goursat && s.class == Linearization::Static;
    v.augmented = Some(s);
    v
}

/// Local coordinates on the quotient given by invariant functions, and a
/// cross-section expressing the original coordinates in them.
#[derive(Clone, Debug)]
pub struct QuotientSpec {
    pub coords: Vec<(Coordinate, Expr)>,
    pub section: BTreeMap<String, Expr>,
}

const PUSHFORWARD_POINTS: usize = 5;

/// dπ(V) in the invariant coordinates, after verifying the invariants and
/// the cross-section, and checking the result against the pushforward of
/// V at sample points.
pub fn quotient(
    ev: &Evaluator,
    d: &Distribution,
    gamma: &Distribution,
    names: &[String],
    spec: &QuotientSpec,
) -> Result<Distribution, SymmetryError> {
    let chart = &d.chart;
    for (c, phi) in &spec.coords {
        for (gi, g) in gamma.gens.iter().enumerate() {
            let x = g.apply(phi);
            if !ev.is_zero(&x) {
                return Err(SymmetryError::NotInvariant {
                    invariant: c.name.clone(),
                    generator: names.get(gi).cloned().unwrap_or_else(|| format!("#{}", gi + 1)),
                    residue: x,
                });
            }
        }
    }
    let r = gamma.rank(ev);
    let jac = SymMatrix::from_rows(
        chart.dim(),
        spec.coords.iter().map(|(_, phi)| (0..chart.dim()).map(|i| phi.differentiate(chart.name(i))).collect()).collect(),
    );
    let got = jac.rank(ev);
    if got != chart.dim() - r || spec.coords.len() != chart.dim() - r {
        return Err(SymmetryError::InvariantRank { got, want: chart.dim() - r });
    }
    let qchart: Arc<Chart> = Chart::new(spec.coords.iter().map(|c| c.0.clone()).collect(), chart.constants().to_vec())?;
    let qnames: BTreeSet<&str> = qchart.coords().iter().map(|c| c.name.as_str()).collect();
    let allowed = |s: &str| qnames.contains(s) || chart.constants().iter().any(|c| c == s);
    for (c, phi) in &spec.coords {
        let back = phi.substitute(&spec.section).map_err(|_| SymmetryError::Section {
            invariant: c.name.clone(),
            value: phi.clone(),
        })?;
        if !ev.is_zero(&back.sub(&Expr::symbol(&c.name))) {
            return Err(SymmetryError::Section { invariant: c.name.clone(), value: back });
        }
    }
    let mut gens = Vec::with_capacity(d.len());
    for z in &d.gens {
        let mut coeffs = Vec::with_capacity(spec.coords.len());
        for (_, phi) in &spec.coords {
            let e = z.apply(phi).substitute(&spec.section).map_err(|_| SymmetryError::Section {
                invariant: phi.to_string(),
                value: z.apply(phi),
            })?;
            if let Some(s) = e.free_symbols().into_iter().find(|s| !allowed(s)) {
                return Err(SymmetryError::Residue { coordinate: s, field: z.to_string() });
            }
            coeffs.push(e);
        }
        gens.push(VectorField::new(qchart.clone(), coeffs));
    }
    let q = Distribution::new(&qchart, gens);
    // dπ(V_p) must equal the span of the quotient fields at π(p).
    let to_orig: BTreeMap<String, Expr> = spec.coords.iter().map(|(c, phi)| (c.name.clone(), phi.clone())).collect();
    let pulled: Vec<VectorField> = q
        .gens
        .iter()
        .map(|g| {
            let c = g.coeffs.iter().map(|e| e.substitute(&to_orig).expect("rational substitution")).collect();
            VectorField::new(qchart.clone(), c)
        })
        .collect();
    let pushed: Vec<VectorField> = d
        .gens
        .iter()
        .map(|z| VectorField::new(qchart.clone(), spec.coords.iter().map(|(_, phi)| z.apply(phi)).collect()))
        .collect();
    let m = qchart.dim();
    let mut checked = 0;
    let mut k = 0;
    while checked < PUSHFORWARD_POINTS && k < 8 * PUSHFORWARD_POINTS {
        let vals = pointwise::fields_at(ev, &pulled, k).and_then(|a| Ok((a, pointwise::fields_at(ev, &pushed, k)?)));
        if let Ok((a, b)) = vals {
            let ra = pointwise::rank_of(ev, m, &a);
            let rb = pointwise::rank_of(ev, m, &b);
            let mut both = a.clone();
            both.extend(b);
            if ra != rb || pointwise::rank_of(ev, m, &both) != ra {
                return Err(SymmetryError::Pushforward(k));
            }
            checked += 1;
        }
        k += 1;
    }
    Ok(q)
}

/// Structure constants c[i][j][l] with [X_i, X_j] = Σ_l c[i][j][l] X_l.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketTable {
    pub names: Vec<String>,
    pub c: Vec<Vec<Vec<Rational>>>,
}

impl BracketTable {
    /// The bracket [X_i, X_j] as a linear combination, e.g. "-2*X1 + X4".
    pub fn entry(&self, i: usize, j: usize) -> String {
        let mut parts: Vec<String> = Vec::new();
        for (l, c) in self.c[i][j].iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let name = &self.names[l];
            let mag = c.abs();
            let body = if mag.is_one() { name.clone() } else { format!("{}*{}", mag, name) };
            let neg = *c < Rational::zero();
            parts.push(match (parts.is_empty(), neg) {
                (true, true) => format!("-{}", body),
                (true, false) => body,
                (false, true) => format!("- {}", body),
                (false, false) => format!("+ {}", body),
            });
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" ")
        }
    }

    pub fn is_antisymmetric(&self) -> bool {
        let n = self.names.len();
        (0..n).all(|i| (0..n).all(|j| self.c[i][j].iter().zip(&self.c[j][i]).all(|(a, b)| (a + b).is_zero())))
    }

    /// Σ_cyclic [[X_i, X_j], X_l] = 0 in terms of the constants.
    pub fn satisfies_jacobi(&self) -> bool {
        let n = self.names.len();
        let bracket_of = |v: &[Rational], l: usize| -> Vec<Rational> {
            let mut out = vec![Rational::zero(); n];
            for (m, cm) in v.iter().enumerate() {
                if cm.is_zero() {
                    continue;
                }
                for (o, x) in self.c[m][l].iter().enumerate() {
                    out[o] += cm * x;
                }
            }
            out
        };
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let a = bracket_of(&self.c[i][j], l);
                    let b = bracket_of(&self.c[j][l], i);
                    let c = bracket_of(&self.c[l][i], j);
                    if (0..n).any(|o| !(&a[o] + &b[o] + &c[o]).is_zero()) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

impl fmt::Display for BracketTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.names.len();
        let cells: Vec<Vec<String>> = (0..n).map(|i| (0..n).map(|j| self.entry(i, j)).collect()).collect();
        let w = cells.iter().flatten().map(|s| s.len()).chain(self.names.iter().map(|s| s.len())).max().unwrap_or(1);
        let nw = self.names.iter().map(|s| s.len()).max().unwrap_or(1);
        write!(f, "{:nw$} |", "")?;
        for name in &self.names {
            write!(f, " {:>w$}", name)?;
        }
        writeln!(f)?;
        for (i, row) in cells.iter().enumerate() {
            write!(f, "{:nw$} |", self.names[i])?;
            for c in row {
                write!(f, " {:>w$}", c)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Replaces generators by rational combinations: row i of `m` gives the new
/// X_i in terms of the old ones.
pub fn change_basis(gens: &[VectorField], m: &[Vec<Rational>]) -> Vec<VectorField> {
    m.iter()
        .map(|row| {
            let cs: Vec<Expr> = row.iter().map(|c| Expr::constant(c.clone())).collect();
            VectorField::combination(&gens[0].chart, &cs, gens)
        })
        .collect()
}

const MAX_DENOMINATOR: i64 = 1000;

fn solve_in_span(ev: &Evaluator, gens: &[VectorField], target: &VectorField) -> Option<Vec<Rational>> {
    let ar = &ev.arith;
    let r = gens.len();
    let tol = ar.div(&ar.int(1), &BigFloat::from_u128(10u128.pow(25), ar.p));
    let mut tries = 0;
    for k in 0..16 {
        let Ok(cols) = pointwise::fields_at(ev, gens, k) else { continue };
        let Ok(tv) = pointwise::fields_at(ev, std::slice::from_ref(target), k) else { continue };
        let n = target.dim();
        let mut m = NumMat::zeros(ar, n, r + 1);
        for (j, (v, s)) in cols.iter().chain(tv.iter()).enumerate() {
            for i in 0..n {
                m.set(i, j, v[i].clone(), s[i].clone());
            }
        }
        let ker = m.nullspace(ar, ev.threshold());
        tries += 1;
        if ker.len() != 1 {
            if tries > 3 {
                return None;
            }
            continue;
        }
        let v = &ker[0];
        if v[r].is_zero() {
            return None;
        }
        let mut out = Vec::with_capacity(r);
        for x in &v[..r] {
            let c = ar.div(&x.neg(), &v[r]);
            if ev.negligible(&crate::expr::Value { v: c.clone(), s: ar.int(1) }) {
                out.push(Rational::zero());
                continue;
            }
            out.push(ar.to_rational(&c, MAX_DENOMINATOR, &tol)?);
        }
        return Some(out);
    }
    None
}

/// Structure constants of a finite-dimensional Lie algebra of vector fields,
/// found numerically, rationalized, and confirmed symbolically.
pub fn bracket_table(ev: &Evaluator, gens: &[VectorField], names: &[String]) -> Result<BracketTable, SymmetryError> {
    let n = gens.len();
    if n > 0 && Distribution::new(&gens[0].chart, gens.to_vec()).rank(ev) < n {
        return Err(SymmetryError::Dependent);
    }
    let mut c = vec![vec![vec![Rational::zero(); n]; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let b = gens[i].bracket(&gens[j]);
            if b.coeffs.iter().all(|e| ev.is_zero(e)) {
                continue;
            }
            let closed = || SymmetryError::NotClosed { i: names[i].clone(), j: names[j].clone(), bracket: b.to_string() };
            let coeffs = solve_in_span(ev, gens, &b).ok_or_else(|| {
                if Distribution::new(&b.chart, gens.to_vec()).contains(ev, &b) {
                    SymmetryError::NonConstant { i: names[i].clone(), j: names[j].clone() }
                } else {
                    closed()
                }
            })?;
            let combo = VectorField::combination(
                &b.chart,
                &coeffs.iter().map(|x| Expr::constant(x.clone())).collect::<Vec<_>>(),
                gens,
            );
            if !b.sub(&combo).coeffs.iter().all(|e| ev.is_zero(e)) {
                return Err(SymmetryError::NonConstant { i: names[i].clone(), j: names[j].clone() });
            }
            c[j][i] = coeffs.iter().map(|x| -x).collect();
            c[i][j] = coeffs;
        }
    }
    Ok(BracketTable { names: names.to_vec(), c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::SampleConfig;

    fn charlet() -> (Arc<Chart>, Distribution) {
        let c = Chart::from_names(
            &[
                ("t", Role::Time),
                ("x1", Role::State),
                ("x2", Role::State),
                ("x3", Role::State),
                ("x4", Role::State),
                ("u1", Role::Control),
                ("u2", Role::Control),
            ],
            &[],
        )
        .unwrap();
        let d = Distribution::parse(&c, &["d_t + x2*d_x1 + u1*d_x2 + u2*d_x3 + x3*(1 - u1)*d_x4", "d_u1", "d_u2"])
            .unwrap();
        (c, d)
    }

    #[test]
    fn charlet_translation_is_admissible() {
        let ev = Evaluator::new(SampleConfig::default());
        let (c, d) = charlet();
        let x = VectorField::parse(&c, "d_x4").unwrap();
        assert!(is_infinitesimal_symmetry(&ev, &x, &d));
        assert!(is_control_admissible(&ev, std::slice::from_ref(&x), &d));
        let u = VectorField::parse(&c, "d_u1").unwrap();
        let rep = control_symmetry_report(&ev, std::slice::from_ref(&u), &d);
        assert_eq!(rep.projection_rank, 0);
        assert!(!rep.ok());
    }

    #[test]
    fn charlet_quotient_is_static_feedback_linearizable() {
        let ev = Evaluator::new(SampleConfig::default());
        let (c, d) = charlet();
        let g = Distribution::parse(&c, &["d_x4"]).unwrap();
        let v = quotient_verdict(&ev, &d, &g, &["X".into()], None);
        assert!(v.issues.is_empty(), "{:?}", v.issues);
        assert_eq!(v.predicted, RefinedDerivedType(vec![vec![4, 1], vec![6, 3, 4], vec![7, 7]]));
        assert_eq!(v.predicted_signature, Signature::new(&[1, 1]));
        assert!(v.relative_goursat);
        assert!(v.sfl_quotient);
    }

    #[test]
    fn abelian_table_is_zero() {
        let ev = Evaluator::new(SampleConfig::default());
        let (c, _) = charlet();
        let g = vec![VectorField::parse(&c, "d_x1").unwrap(), VectorField::parse(&c, "d_x4").unwrap()];
        let t = bracket_table(&ev, &g, &["A".into(), "B".into()]).unwrap();
        assert!(t.c.iter().flatten().flatten().all(|x| x.is_zero()));
        assert_eq!(t.entry(0, 1), "0");
    }

    #[test]
    fn non_closed_brackets_are_reported() {
        let ev = Evaluator::new(SampleConfig::default());
        let (c, _) = charlet();
        let names = ["A".to_string(), "B".to_string()];
        let g = vec![VectorField::parse(&c, "d_x1 + x2*d_x3").unwrap(), VectorField::parse(&c, "d_x2").unwrap()];
        let e = bracket_table(&ev, &g, &names).unwrap_err();
        assert!(matches!(e, SymmetryError::NotClosed { .. }), "{:?}", e);
        let g = vec![VectorField::parse(&c, "d_x1").unwrap(), VectorField::parse(&c, "x1^2*d_x2").unwrap()];
        let e = bracket_table(&ev, &g, &names).unwrap_err();
        assert!(matches!(e, SymmetryError::NonConstant { .. }), "{:?}", e);
    }
}
