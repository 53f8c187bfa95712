//! Report data. The JSON document and the text rendering are both produced
//! from these structs.

use serde::Serialize;
use std::fmt::{self, Write as _};

pub const SCHEMA: &str = "ctrlgeom-report/1";

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct RunConfig {
    pub seed: u64,
    pub samples: usize,
    pub precision: u32,
    pub rank_samples: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub system: String,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analysis: Option<Analysis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<SymmetrySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quotient: Option<QuotientSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch: Option<Vec<BatchRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sgs: Option<SgsSection>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Level {
    pub j: usize,
    pub rank: usize,
    pub new_directions: Vec<String>,
    pub cauchy: Vec<String>,
    /// Char V^(j) ∩ V^(j-1), for 1 <= j <= k-1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intersection: Option<Vec<String>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TopBundle {
    pub kind: &'static str,
    pub basis: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub singular: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Analysis {
    pub dim: usize,
    pub rank: usize,
    pub rdt: Vec<Vec<usize>>,
    pub velocity: Vec<i64>,
    pub deceleration: Vec<i64>,
    pub bracket_generating: bool,
    pub levels: Vec<Level>,
    pub goursat: bool,
    pub relative: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub obstruction: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_bundle: Option<TopBundle>,
    pub linearization: &'static str,
    pub sfl: bool,
    pub ofl: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_ok: Option<bool>,
    pub verdict: String,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Generator {
    pub name: String,
    pub field: String,
    pub symmetry: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BracketTableSection {
    pub names: Vec<String>,
    pub rebased: bool,
    pub rows: Vec<Vec<String>>,
    pub antisymmetric: bool,
    pub jacobi: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Transversality {
    pub r: usize,
    pub ell: Option<usize>,
    pub ranks: Vec<usize>,
    pub p: Vec<usize>,
    pub p_prime: Vec<Option<usize>>,
    pub q: Vec<usize>,
    pub q_prime: Vec<Option<usize>>,
    pub strongly_transverse: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuotientVerdictSection {
    pub admissible: bool,
    pub transversality: Transversality,
    pub rdt: Vec<Vec<usize>>,
    pub predicted_rdt: Vec<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub augmented_rdt: Option<Vec<Vec<usize>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prediction_matches: Option<bool>,
    pub predicted_kappa: Vec<i64>,
    pub relative_goursat: bool,
    pub sfl_quotient: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub obstruction: Option<String>,
    pub issues: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetrySection {
    pub name: String,
    pub generators: Vec<Generator>,
    pub control_symmetry: bool,
    pub projection_rank: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bracket_table: Option<BracketTableSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bracket_error: Option<String>,
    pub verdict: QuotientVerdictSection,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuotientCoord {
    pub name: String,
    pub role: String,
    pub invariant: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuotientSection {
    pub symmetry: String,
    pub name: String,
    pub coords: Vec<QuotientCoord>,
    pub fields: Vec<String>,
    pub relative_sfl: bool,
    pub analysis: Analysis,
}

#[derive(Clone, Debug, Serialize)]
pub struct BatchRow {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub ell: Option<usize>,
    pub predicted_rdt: Vec<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub augmented_rdt: Option<Vec<Vec<usize>>>,
    pub relative_goursat: bool,
    pub sfl_quotient: bool,
    pub predicted_kappa: Vec<i64>,
    pub issues: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SgsLevel {
    pub j: usize,
    pub rank: usize,
    pub integrable: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SgsSection {
    pub tau: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<String>,
    pub pfaffian_ranks: Vec<usize>,
    pub levels: Vec<SgsLevel>,
    pub bracket_generating: bool,
    pub passes: bool,
    pub issues: Vec<String>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn list<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

pub fn rdt_string(r: &[Vec<usize>]) -> String {
    format!("[{}]", r.iter().map(|l| format!("[{}]", list(l))).collect::<Vec<_>>().join(", "))
}

pub fn kappa_string(k: &[i64]) -> String {
    format!("⟨{}⟩", k.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
}

fn opt<T: fmt::Display>(x: &Option<T>) -> String {
    x.as_ref().map(|v| v.to_string()).unwrap_or_else(|| "-".into())
}

fn opt_list(xs: &[Option<usize>]) -> String {
    xs.iter().map(opt).collect::<Vec<_>>().join(", ")
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn span(out: &mut String, indent: &str, label: &str, xs: &[String]) {
    if xs.is_empty() {
        let _ = writeln!(out, "{}{}: 0", indent, label);
        return;
    }
    let _ = writeln!(out, "{}{}:", indent, label);
    for x in xs {
        let _ = writeln!(out, "{}  {}", indent, x);
    }
}

fn render_analysis(out: &mut String, a: &Analysis, indent: &str) {
    let i = indent;
    let _ = writeln!(out, "{}dimension {}, rank {}", i, a.dim, a.rank);
    let _ = writeln!(out, "{}refined derived type: {}", i, rdt_string(&a.rdt));
    let _ = writeln!(out, "{}velocity: {}", i, kappa_string(&a.velocity));
    let _ = writeln!(out, "{}deceleration: {}", i, kappa_string(&a.deceleration));
    if !a.bracket_generating {
        let _ = writeln!(out, "{}not bracket generating", i);
    }
    for l in &a.levels {
        let _ = writeln!(out, "{}level {} (rank {})", i, l.j, l.rank);
        let inner = format!("{}  ", i);
        span(out, &inner, if l.j == 0 { "basis" } else { "new directions" }, &l.new_directions);
        span(out, &inner, "Cauchy bundle", &l.cauchy);
        if let Some(x) = &l.intersection {
            span(out, &inner, "intersection bundle", x);
        }
    }
    if let Some(t) = &a.top_bundle {
        span(out, i, &format!("{} bundle", t.kind), &t.basis);
        if !t.singular.is_empty() {
            span(out, i, "singular sub-bundle", &t.singular);
        }
    }
    let _ = writeln!(out, "{}Goursat{}: {}", i, if a.relative { " (relative)" } else { "" }, yes(a.goursat));
    if let Some(o) = &a.obstruction {
        let _ = writeln!(out, "{}obstruction: {}", i, o);
    }
    if let (Some(t), Some(ok)) = (&a.tau, a.tau_ok) {
        let _ = writeln!(out, "{}independence condition d({}): {}", i, t, if ok { "admissible" } else { "not admissible" });
    }
    for n in &a.notes {
        let _ = writeln!(out, "{}note: {}", i, n);
    }
    let _ = writeln!(out, "{}verdict: {}", i, a.verdict);
}

fn render_transversality(out: &mut String, t: &Transversality) {
    let _ = writeln!(out, "  transversality: r = {}, ell = {}", t.r, opt(&t.ell));
    let _ = writeln!(out, "    r_i:  {}", list(&t.ranks));
    let _ = writeln!(out, "    p_i:  {}", list(&t.p));
    let _ = writeln!(out, "    p'_j: {}", opt_list(&t.p_prime));
    let _ = writeln!(out, "    q_i:  {}", list(&t.q));
    let _ = writeln!(out, "    q'_j: {}", opt_list(&t.q_prime));
    let _ = writeln!(out, "    strongly transverse: {}", yes(t.strongly_transverse));
}

fn render_verdict(out: &mut String, v: &QuotientVerdictSection) {
    let _ = writeln!(out, "  control admissible: {}", yes(v.admissible));
    render_transversality(out, &v.transversality);
    let _ = writeln!(out, "  refined derived type: {}", rdt_string(&v.rdt));
    let _ = writeln!(out, "  predicted augmented type: {}", rdt_string(&v.predicted_rdt));
    if let Some(a) = &v.augmented_rdt {
        let _ = writeln!(out, "  computed augmented type:  {}", rdt_string(a));
    }
    if let Some(m) = v.prediction_matches {
        let _ = writeln!(out, "  prediction matches: {}", yes(m));
    }
    let _ = writeln!(out, "  predicted quotient signature: {}", kappa_string(&v.predicted_kappa));
    let _ = writeln!(out, "  relative Goursat: {}", yes(v.relative_goursat));
    let _ = writeln!(out, "  SFL quotient: {}", yes(v.sfl_quotient));
    if let Some(o) = &v.obstruction {
        let _ = writeln!(out, "  obstruction: {}", o);
    }
    for s in &v.issues {
        let _ = writeln!(out, "  issue: {}", s);
    }
}

fn render_table(out: &mut String, t: &BracketTableSection) {
    let _ = writeln!(out, "  bracket table{}:", if t.rebased { " (rebased)" } else { "" });
    let mut cells: Vec<Vec<String>> = vec![std::iter::once("[,]".to_string()).chain(t.names.iter().cloned()).collect()];
    for (n, row) in t.names.iter().zip(&t.rows) {
        cells.push(std::iter::once(n.clone()).chain(row.iter().cloned()).collect());
    }
    let cols = cells[0].len();
    let widths: Vec<usize> = (0..cols).map(|c| cells.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
    for r in &cells {
        let line: Vec<String> = r.iter().zip(&widths).map(|(s, w)| format!("{:<w$}", s, w = *w)).collect();
        let _ = writeln!(out, "    {}", line.join(" | ").trim_end());
    }
    let _ = writeln!(out, "  antisymmetric: {}, Jacobi: {}", yes(t.antisymmetric), yes(t.jacobi));
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        let c = &self.config;
        let _ = writeln!(
            out,
            "{} {} (seed {}, {} samples, {} digits, {} rank samples)",
            self.command, self.system, c.seed, c.samples, c.precision, c.rank_samples
        );
        if let Some(a) = &self.analysis {
            let _ = writeln!(out, "\nanalysis");
            render_analysis(&mut out, a, "  ");
        }
        if let Some(s) = &self.symmetry {
            let _ = writeln!(out, "\nsymmetry {}", s.name);
            for g in &s.generators {
                let _ = writeln!(out, "  {} = {}  [{}]", g.name, g.field, if g.symmetry { "symmetry" } else { "not a symmetry" });
            }
            let _ = writeln!(out, "  control symmetry: {} ((t, x)-projection rank {})", yes(s.control_symmetry), s.projection_rank);
            if let Some(t) = &s.bracket_table {
                render_table(&mut out, t);
            }
            if let Some(e) = &s.bracket_error {
                let _ = writeln!(out, "  bracket table: {}", e);
            }
            render_verdict(&mut out, &s.verdict);
        }
        if let Some(q) = &self.quotient {
            let _ = writeln!(out, "\nquotient {} by {}", q.name, q.symmetry);
            for c in &q.coords {
                let _ = writeln!(out, "  {} ({}) = {}", c.name, c.role, c.invariant);
            }
            span(&mut out, "  ", "fields", &q.fields);
            let _ = writeln!(out, "  relative verdict says SFL quotient: {}", yes(q.relative_sfl));
            render_analysis(&mut out, &q.analysis, "  ");
        }
        if let Some(rows) = &self.batch {
            let _ = writeln!(out, "\nbatch");
            let _ = writeln!(out, "  name | ell | predicted type | relative Goursat | SFL quotient | kappa");
            for r in rows {
                match &r.error {
                    Some(e) => {
                        let _ = writeln!(out, "  {} | error: {}", r.name, e);
                    }
                    None => {
                        let _ = writeln!(
                            out,
                            "  {} | {} | {} | {} | {} | {}",
                            r.name,
                            opt(&r.ell),
                            rdt_string(&r.predicted_rdt),
                            yes(r.relative_goursat),
                            yes(r.sfl_quotient),
                            kappa_string(&r.predicted_kappa)
                        );
                        if let Some(a) = &r.augmented_rdt {
                            if *a != r.predicted_rdt {
                                let _ = writeln!(out, "    computed augmented type differs: {}", rdt_string(a));
                            }
                        }
                        for s in &r.issues {
                            let _ = writeln!(out, "    issue: {}", s);
                        }
                    }
                }
            }
        }
        if let Some(s) = &self.sgs {
            let _ = writeln!(
                out,
                "\nS-G-S test with clock {}{}",
                s.tau,
                s.symmetry.as_ref().map(|n| format!(" on the quotient by {}", n)).unwrap_or_default()
            );
            let _ = writeln!(out, "  Pfaffian ranks: {}", list(&s.pfaffian_ranks));
            for l in &s.levels {
                let _ = writeln!(
                    out,
                    "  I^({}) + d({}): rank {} + 1, {}",
                    l.j,
                    s.tau,
                    l.rank,
                    if l.integrable { "integrable" } else { "not integrable" }
                );
            }
            if !s.bracket_generating {
                let _ = writeln!(out, "  derived flag does not reach zero");
            }
            for i in &s.issues {
                let _ = writeln!(out, "  issue: {}", i);
            }
            let _ = writeln!(out, "  verdict: {}", if s.passes { "pass" } else { "fail" });
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {}", w);
        }
        f.write_str(&out)
    }
}
