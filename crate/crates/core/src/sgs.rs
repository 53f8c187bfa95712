//! Pfaffian systems and the Sluis-Gardner-Shadwick linearizability tests,
//! plain, with a general clock τ, and for symmetry quotients.

use crate::expr::{EvalError, Evaluator, Expr};
use crate::flags::DerivedFlag;
use crate::geometry::{at_points, AltForm, Chart, Distribution, NumForm, OneForm, SymMatrix, VectorField};
use crate::symmetry::{augmented, control_admissibility};
use std::fmt;
use std::sync::Arc;

/// A Pfaffian system I with its derived flag I ⊇ I^(1) ⊇ ... ⊇ I^(k).
#[derive(Clone, Debug)]
pub struct PfaffianSystem {
    pub chart: Arc<Chart>,
    pub generators: Vec<OneForm>,
    pub flag: Vec<Vec<OneForm>>,
}

impl PfaffianSystem {
    /// The Pfaffian system with kernel D. The derived flag is built as
    /// ann D^(j), which for totally regular D is the derived flag of I.
    pub fn of(ev: &Evaluator, d: &Distribution) -> PfaffianSystem {
        let flag = DerivedFlag::compute(ev, d);
        let levels: Vec<Vec<OneForm>> = flag.levels.iter().map(|l| l.annihilator(ev)).collect();
        PfaffianSystem { chart: d.chart.clone(), generators: levels[0].clone(), flag: levels }
    }

    /// The Pfaffian system generated by the given forms.
    pub fn from_forms(ev: &Evaluator, chart: &Arc<Chart>, forms: Vec<OneForm>) -> PfaffianSystem {
        PfaffianSystem::of(ev, &kernel(ev, chart, &forms))
    }

    pub fn derived_length(&self) -> usize {
        self.flag.len() - 1
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.flag.iter().map(|l| l.len()).collect()
    }

    pub fn level(&self, j: usize) -> &[OneForm] {
        &self.flag[j.min(self.flag.len() - 1)]
    }

    pub fn kernel(&self, ev: &Evaluator) -> Distribution {
        kernel(ev, &self.chart, &self.generators)
    }
}

pub fn pfaffian_of(ev: &Evaluator, d: &Distribution) -> PfaffianSystem {
    PfaffianSystem::of(ev, d)
}

/// {X : θ(X) = 0 for all θ}.
pub fn kernel(ev: &Evaluator, chart: &Arc<Chart>, forms: &[OneForm]) -> Distribution {
    if forms.is_empty() {
        return Distribution::tangent(chart);
    }
    let m = SymMatrix::from_rows(chart.dim(), forms.iter().map(|w| w.coeffs.clone()).collect());
    let gens = m.nullspace(ev).into_iter().map(|c| VectorField::new(chart.clone(), c)).collect();
    Distribution::new(chart, gens)
}

fn wedge_all(ev: &Evaluator, forms: &[AltForm], k: usize) -> Result<Option<NumForm>, EvalError> {
    let mut acc: Option<NumForm> = None;
    for f in forms {
        let v = f.eval_at(ev, k)?;
        acc = Some(match acc {
            None => v,
            Some(a) => a.wedge(&v, &ev.arith),
        });
    }
    Ok(acc)
}

/// Whether span(forms) is Frobenius integrable: dθ ∧ θ¹ ∧ ... ∧ θˢ = 0 for
/// every θ, checked at the rank sample points. The forms must be independent.
pub fn is_frobenius(ev: &Evaluator, forms: &[OneForm]) -> bool {
    if forms.len() <= 1 && forms.iter().all(|w| AltForm::from_one_form(w).exterior_derivative().is_zero_const()) {
        return true;
    }
    let theta: Vec<AltForm> = forms.iter().map(AltForm::from_one_form).collect();
    let dtheta: Vec<AltForm> = theta.iter().map(AltForm::exterior_derivative).collect();
    let ok = at_points(ev, |k| {
        let Some(top) = wedge_all(ev, &theta, k)? else { return Ok(true) };
        for d in &dtheta {
            if d.is_zero_const() {
                continue;
            }
            if !d.eval_at(ev, k)?.wedge(&top, &ev.arith).is_negligible(ev) {
                return Ok(false);
            }
        }
        Ok(true)
    });
    ok.iter().all(|r| r.1)
}

/// Whether dτ lies in the span of the forms.
fn contains_differential(ev: &Evaluator, forms: &[OneForm], dtau: &OneForm) -> bool {
    let mut all: Vec<AltForm> = forms.iter().map(AltForm::from_one_form).collect();
    all.push(AltForm::from_one_form(dtau));
    let zero = at_points(ev, |k| Ok(wedge_all(ev, &all, k)?.is_none_or(|w| w.is_negligible(ev))));
    zero.iter().all(|r| r.1)
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SgsError {
    #[error("dτ lies in I^({0}); τ cannot serve as an independence condition")]
    DegenerateClock(usize),
    #[error("derived length {0} is too short for the test")]
    DerivedLength(usize),
}

#[derive(Clone, Debug)]
pub struct SgsLevel {
    pub j: usize,
    pub rank: usize,
    /// I^(j) ⊕ span{dτ} is integrable.
    pub integrable: bool,
}

#[derive(Clone, Debug)]
pub struct SgsReport {
    pub tau: Expr,
    pub levels: Vec<SgsLevel>,
    /// I^(k) = 0.
    pub bracket_generating: bool,
    pub passes: bool,
}

impl fmt::Display for SgsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.levels {
            writeln!(
                f,
                "I^({}) + d({}): rank {} + 1, {}",
                l.j,
                self.tau,
                l.rank,
                if l.integrable { "integrable" } else { "not integrable" }
            )?;
        }
        if !self.bracket_generating {
            writeln!(f, "derived flag does not reach zero")?;
        }
        write!(f, "verdict: {}", if self.passes { "pass" } else { "fail" })
    }
}

/// Tests I^(j) ⊕ span{dτ} for integrability at each level j below the
/// derived length. With τ = t this is the classical test for static
/// feedback linearizability; with another clock it tests for a Brunovsky
/// form with independence condition dτ.
pub fn sgs_test(ev: &Evaluator, sys: &PfaffianSystem, tau: &Expr) -> Result<SgsReport, SgsError> {
    let k = sys.derived_length();
    let bracket_generating = sys.flag.last().is_some_and(|l| l.is_empty());
    if k < 1 {
        return Err(SgsError::DerivedLength(k));
    }
    let dtau = OneForm::differential(&sys.chart, tau);
    let top = if bracket_generating { k } else { k + 1 };
    for j in 0..top {
        if contains_differential(ev, sys.level(j), &dtau) {
            return Err(SgsError::DegenerateClock(j));
        }
    }
    let mut levels = Vec::with_capacity(top);
    for j in 0..top.min(k) {
        let mut forms = sys.level(j).to_vec();
        forms.push(dtau.clone());
        levels.push(SgsLevel { j, rank: sys.level(j).len(), integrable: is_frobenius(ev, &forms) });
    }
    let passes = bracket_generating && levels.iter().all(|l| l.integrable);
    Ok(SgsReport { tau: tau.clone(), levels, bracket_generating, passes })
}

#[derive(Clone, Debug)]
pub struct SgsQuotientReport {
    /// Reasons the test does not apply, from admissibility and transversality.
    pub issues: Vec<String>,
    pub report: Option<SgsReport>,
}

impl SgsQuotientReport {
    pub fn passes(&self) -> bool {
        self.issues.is_empty() && self.report.as_ref().is_some_and(|r| r.passes)
    }
}

/// The S-G-S test applied to Î = ann(D ⊕ Γ) with τ = t.
pub fn sgs_quotient_test(ev: &Evaluator, d: &Distribution, gamma: &Distribution, names: &[String]) -> SgsQuotientReport {
    let mut issues = control_admissibility(ev, &gamma.gens, d).failures(names);
    let t = match d.chart.time_index() {
        Some(i) => Expr::symbol(d.chart.name(i)),
        None => {
            issues.push("chart has no time coordinate".into());
            return SgsQuotientReport { issues, report: None };
        }
    };
    let aug = match augmented(ev, d, gamma) {
        Ok(a) => a,
        Err(e) => {
            issues.push(e.to_string());
            return SgsQuotientReport { issues, report: None };
        }
    };
    let sys = PfaffianSystem::of(ev, &aug);
    match sgs_test(ev, &sys, &t) {
        Ok(r) => {
            if sys.derived_length() <= 1 {
                issues.push("augmented bundle has derived length 1".into());
            }
            SgsQuotientReport { issues, report: Some(r) }
        }
        Err(e) => {
            issues.push(e.to_string());
            SgsQuotientReport { issues, report: None }
        }
    }
}
