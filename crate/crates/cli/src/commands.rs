//! Command implementations. Each returns a [`Report`]; exit codes are
//! derived from it.

use crate::file::{section_map, Config, FileError, SymmetryBlock, SystemFile};
use crate::report::*;
use ctrlgeom::geometry::{tidy, Distribution, VectorField};
use ctrlgeom::goursat::{sfl_verdict, GoursatOptions, Linearization, SflVerdict, TopBundle as Top};
use ctrlgeom::sgs::{sgs_quotient_test, sgs_test, PfaffianSystem};
use ctrlgeom::symmetry::{
    bracket_table, change_basis, control_symmetry_report, is_infinitesimal_symmetry, quotient, quotient_verdict,
    QuotientSpec, QuotientVerdict,
};
use ctrlgeom::{Evaluator, Expr, SampleConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_REGULARITY: i32 = 3;
pub const EXIT_INDETERMINATE: i32 = 4;
pub const EXIT_INTERNAL: i32 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {err}")]
    Parse { path: String, err: FileError },
    #[error("{0}")]
    Input(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Input(_) => EXIT_INPUT,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

/// The loaded file plus everything needed to evaluate it.
pub struct Session {
    pub name: String,
    pub file: SystemFile,
    pub config: RunConfig,
    pub ev: Evaluator,
    pub threads: usize,
}

/// Precedence: command line, then the file's [config], then the default
/// configuration file, then built-in defaults.
pub fn resolve_config(cli: &Config, file: &Config, env: &Config) -> RunConfig {
    let c = cli.or(file).or(env);
    let d = SampleConfig::default();
    RunConfig {
        seed: c.seed.unwrap_or(d.seed),
        samples: c.samples.unwrap_or(d.samples),
        precision: c.precision.unwrap_or(d.digits),
        rank_samples: c.rank_samples.unwrap_or(d.rank_samples),
    }
}

impl Session {
    pub fn new(name: &str, text: &str, cli: &Config, env: &Config, threads: usize) -> Result<Session, CliError> {
        let file = SystemFile::parse(text).map_err(|err| CliError::Parse { path: name.to_string(), err })?;
        let config = resolve_config(cli, &file.config, env);
        if config.samples == 0 || config.rank_samples == 0 || config.precision < 10 {
            return Err(CliError::Input("samples and rank_samples must be positive and precision at least 10".into()));
        }
        let ev = Evaluator::new(SampleConfig {
            seed: config.seed,
            samples: config.samples,
            digits: config.precision,
            rank_samples: config.rank_samples,
        });
        Ok(Session { name: name.to_string(), file, config, ev, threads: threads.max(1) })
    }

    fn report(&self, command: &str) -> Report {
        Report {
            schema: SCHEMA,
            command: command.to_string(),
            system: self.name.clone(),
            config: self.config.clone(),
            analysis: None,
            symmetry: None,
            quotient: None,
            batch: None,
            sgs: None,
            warnings: Vec::new(),
        }
    }

    fn finish(&self, mut r: Report) -> Report {
        r.warnings = self.ev.warnings();
        r
    }

    fn block(&self, name: &str) -> Result<&SymmetryBlock, CliError> {
        self.file.symmetry(name).ok_or_else(|| CliError::Input(format!("no [symmetry {}] block", name)))
    }

    fn tau(&self, tau: Option<&str>) -> Result<Option<(String, Expr)>, CliError> {
        match tau {
            None => Ok(None),
            Some(s) => {
                let e = self.file.tau(s).map_err(|e| CliError::Input(format!("--tau: {}", e)))?;
                Ok(Some((e.to_string(), e)))
            }
        }
    }
}

fn show(x: &VectorField) -> String {
    tidy(x).to_string()
}

fn show_all(d: &Distribution) -> Vec<String> {
    d.gens.iter().map(show).collect()
}

/// Drops components along coordinate fields that are themselves generators.
/// The span is unchanged.
pub fn strip_coordinate_components(d: &Distribution) -> Distribution {
    let unit: Vec<Option<usize>> = d
        .gens
        .iter()
        .map(|g| {
            let nz: Vec<usize> = (0..g.dim()).filter(|i| !g.coeffs[*i].is_zero_const()).collect();
            (nz.len() == 1 && g.coeffs[nz[0]].is_one()).then(|| nz[0])
        })
        .collect();
    let gens = d
        .gens
        .iter()
        .zip(&unit)
        .map(|(g, u)| {
            if u.is_some() {
                return g.clone();
            }
            let mut h = g.clone();
            for i in unit.iter().flatten() {
                h.coeffs[*i] = Expr::zero();
            }
            if h.is_zero_const() {
                g.clone()
            } else {
                h
            }
        })
        .collect();
    Distribution::new(&d.chart, gens)
}

fn linearization_name(l: Linearization) -> &'static str {
    match l {
        Linearization::Static => "static",
        Linearization::OrbitalOnly => "orbital",
        Linearization::NotLinearizable => "none",
        Linearization::Indeterminate => "indeterminate",
    }
}

fn analysis_of(ev: &Evaluator, d: &Distribution, s: &SflVerdict, relative: bool, tau: Option<String>) -> Analysis {
    let g = &s.goursat;
    let flag = &g.flag;
    let k = flag.derived_length();
    let levels = (0..=k)
        .map(|j| Level {
            j,
            rank: flag.level(j).len(),
            new_directions: flag.new_directions[j].iter().map(show).collect(),
            cauchy: show_all(&flag.cauchy_bundle(ev, j)),
            intersection: (j >= 1 && j < k).then(|| show_all(&flag.intersection_bundle(ev, j))),
        })
        .collect();
    let top_bundle = g.top.as_ref().map(|t| match t {
        Top::Resolvent(w) => TopBundle {
            kind: "resolvent",
            basis: show_all(&w.resolvent),
            singular: w.singular.iter().map(show).collect(),
        },
        Top::Fundamental(pi) => TopBundle { kind: "fundamental", basis: show_all(pi), singular: Vec::new() },
    });
    let kappa = g.is_goursat.then(|| g.signature.0.clone());
    let verdict = match s.class {
        Linearization::Static => format!("SFL, κ={}", kappa_string(&g.signature.0)),
        Linearization::OrbitalOnly => format!("Goursat {}; OFL-only", kappa_string(&g.signature.0)),
        Linearization::NotLinearizable => "not Goursat".to_string(),
        Linearization::Indeterminate => "indeterminate".to_string(),
    };
    Analysis {
        dim: d.chart.dim(),
        rank: g.rdt.m(0),
        rdt: g.rdt.0.clone(),
        velocity: g.rdt.velocity(),
        deceleration: g.signature.0.clone(),
        bracket_generating: flag.bracket_generating,
        levels,
        goursat: g.is_goursat,
        relative,
        obstruction: g.obstruction.as_ref().map(|o| o.to_string()),
        top_bundle,
        linearization: linearization_name(s.class),
        sfl: s.class == Linearization::Static,
        ofl: matches!(s.class, Linearization::Static | Linearization::OrbitalOnly),
        kappa,
        tau_ok: tau.as_ref().and(s.tau_ok),
        tau,
        verdict,
        notes: g.notes.clone(),
    }
}

/// Flag, Goursat and linearizability analysis of a distribution.
pub fn analyze_distribution(ev: &Evaluator, d: &Distribution, tau: Option<(String, Expr)>) -> Analysis {
    let opts = GoursatOptions { relative: false, tau: tau.as_ref().map(|t| t.1.clone()) };
    let s = sfl_verdict(ev, d, &opts);
    analysis_of(ev, d, &s, false, tau.map(|t| t.0))
}

fn verdict_section(v: &QuotientVerdict) -> QuotientVerdictSection {
    let t = &v.transversality;
    let augmented_rdt = v.augmented.as_ref().map(|a| a.goursat.rdt.0.clone());
    QuotientVerdictSection {
        admissible: v.admissibility.ok(),
        transversality: Transversality {
            r: t.r,
            ell: t.ell,
            ranks: t.ranks.clone(),
            p: t.p.clone(),
            p_prime: t.p_prime.clone(),
            q: t.q.clone(),
            q_prime: t.q_prime.clone(),
            strongly_transverse: t.is_strongly_transverse(),
        },
        rdt: v.rdt.0.clone(),
        predicted_rdt: v.predicted.0.clone(),
        prediction_matches: augmented_rdt.as_ref().map(|a| *a == v.predicted.0),
        augmented_rdt,
        predicted_kappa: v.predicted_signature.0.clone(),
        relative_goursat: v.relative_goursat,
        sfl_quotient: v.sfl_quotient,
        obstruction: v.augmented.as_ref().and_then(|a| a.goursat.obstruction.as_ref().map(|o| o.to_string())),
        issues: {
            let mut i = v.issues.clone();
            if v.augmented.as_ref().is_some_and(|a| a.class == Linearization::Indeterminate) {
                i.push(INDETERMINATE_ISSUE.to_string());
            }
            i
        },
    }
}

const INDETERMINATE_ISSUE: &str = "augmented verdict is indeterminate";

fn verdict_for(ev: &Evaluator, d: &Distribution, b: &SymmetryBlock) -> QuotientVerdict {
    quotient_verdict(ev, d, &b.distribution(&d.chart), &b.names(), None)
}

pub fn analyze(s: &Session, tau: Option<&str>) -> Result<Report, CliError> {
    let tau = s.tau(tau)?;
    let mut r = s.report("analyze");
    r.analysis = Some(analyze_distribution(&s.ev, &s.file.distribution(), tau));
    Ok(s.finish(r))
}

pub fn symmetry(s: &Session, name: &str) -> Result<Report, CliError> {
    let b = s.block(name)?;
    let ev = &s.ev;
    let d = s.file.distribution();
    let fields = b.fields();
    let generators = b
        .generators
        .iter()
        .map(|(n, x)| Generator { name: n.clone(), field: show(x), symmetry: is_infinitesimal_symmetry(ev, x, &d) })
        .collect();
    let cs = control_symmetry_report(ev, &fields, &d);
    let m = b.rebase_matrix();
    let gens = match &m {
        Some(m) => change_basis(&fields, m),
        None => fields.clone(),
    };
    let (bracket_table, bracket_error) = match bracket_table(ev, &gens, &b.names()) {
        Ok(t) => {
            let n = t.names.len();
            let rows = (0..n).map(|i| (0..n).map(|j| t.entry(i, j)).collect()).collect();
            let sec = BracketTableSection {
                names: t.names.clone(),
                rebased: m.is_some(),
                rows,
                antisymmetric: t.is_antisymmetric(),
                jacobi: t.satisfies_jacobi(),
            };
            (Some(sec), None)
        }
        Err(e) => (None, Some(e.to_string())),
    };
    let v = verdict_for(ev, &d, b);
    let mut r = s.report("symmetry");
    r.symmetry = Some(SymmetrySection {
        name: name.to_string(),
        generators,
        control_symmetry: cs.ok(),
        projection_rank: cs.projection_rank,
        bracket_table,
        bracket_error,
        verdict: verdict_section(&v),
    });
    Ok(s.finish(r))
}

pub fn quotient_cmd(s: &Session, name: &str, qname: &str) -> Result<Report, CliError> {
    let b = s.block(name)?;
    let q = s.file.quotient(qname).ok_or_else(|| CliError::Input(format!("no [quotient {}] block", qname)))?;
    let ev = &s.ev;
    let d = s.file.distribution();
    let spec = QuotientSpec { coords: q.coords.clone(), section: section_map(q) };
    let gamma = b.distribution(&d.chart);
    let qd = quotient(ev, &d, &gamma, &b.names(), &spec)
        .map_err(|e| CliError::Input(format!("quotient {} by {}: {}", qname, name, e)))?;
    let qd = strip_coordinate_components(&qd);
    let relative = verdict_for(ev, &d, b);
    let mut r = s.report("quotient");
    r.quotient = Some(QuotientSection {
        symmetry: name.to_string(),
        name: qname.to_string(),
        coords: q
            .coords
            .iter()
            .map(|(c, e)| QuotientCoord { name: c.name.clone(), role: c.role.to_string(), invariant: e.to_string() })
            .collect(),
        fields: show_all(&qd),
        relative_sfl: relative.sfl_quotient,
        analysis: analyze_distribution(ev, &qd, None),
    });
    Ok(s.finish(r))
}

fn batch_row(ev: &Evaluator, d: &Distribution, file: &SystemFile, name: &str) -> BatchRow {
    let Some(b) = file.symmetry(name) else {
        return BatchRow {
            name: name.to_string(),
            error: Some(format!("no [symmetry {}] block", name)),
            ell: None,
            predicted_rdt: Vec::new(),
            augmented_rdt: None,
            relative_goursat: false,
            sfl_quotient: false,
            predicted_kappa: Vec::new(),
            issues: Vec::new(),
        };
    };
    let v = verdict_section(&verdict_for(ev, d, b));
    BatchRow {
        name: name.to_string(),
        error: None,
        ell: v.transversality.ell,
        predicted_rdt: v.predicted_rdt,
        augmented_rdt: v.augmented_rdt,
        relative_goursat: v.relative_goursat,
        sfl_quotient: v.sfl_quotient,
        predicted_kappa: v.predicted_kappa,
        issues: v.issues,
    }
}

/// One row per symmetry block. Rows are computed on a pool of `threads`
/// workers and reported in the order given.
pub fn batch(s: &Session, names: &[String]) -> Result<Report, CliError> {
    let d = s.file.distribution();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(s.threads)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let rows = pool.install(|| {
        use rayon::prelude::*;
        names.par_iter().map(|n| batch_row(&s.ev, &d, &s.file, n)).collect::<Vec<_>>()
    });
    let mut r = s.report("batch");
    r.batch = Some(rows);
    Ok(s.finish(r))
}

pub fn sgs(s: &Session, tau: Option<&str>, symmetry: Option<&str>) -> Result<Report, CliError> {
    let ev = &s.ev;
    let d = s.file.distribution();
    let time = d.chart.time_index().map(|i| Expr::symbol(d.chart.name(i)));
    let section = match symmetry {
        Some(name) => {
            if tau.is_some() {
                return Err(CliError::Input("the quotient test uses t; --tau cannot be combined with --symmetry".into()));
            }
            let b = s.block(name)?;
            let t = time.ok_or_else(|| CliError::Input("chart has no time coordinate".into()))?;
            let rep = sgs_quotient_test(ev, &d, &b.distribution(&d.chart), &b.names());
            let aug_ranks = match ctrlgeom::symmetry::augmented(ev, &d, &b.distribution(&d.chart)) {
                Ok(a) => PfaffianSystem::of(ev, &a).ranks(),
                Err(_) => Vec::new(),
            };
            SgsSection {
                tau: t.to_string(),
                symmetry: Some(name.to_string()),
                pfaffian_ranks: aug_ranks,
                levels: rep
                    .report
                    .as_ref()
                    .map(|r| r.levels.iter().map(|l| SgsLevel { j: l.j, rank: l.rank, integrable: l.integrable }).collect())
                    .unwrap_or_default(),
                bracket_generating: rep.report.as_ref().is_some_and(|r| r.bracket_generating),
                passes: rep.passes(),
                issues: rep.issues.clone(),
            }
        }
        None => {
            let t = match s.tau(tau)? {
                Some(t) => t.1,
                None => time.ok_or_else(|| CliError::Input("chart has no time coordinate; pass --tau".into()))?,
            };
            let sys = PfaffianSystem::of(ev, &d);
            let mut sec = SgsSection {
                tau: t.to_string(),
                symmetry: None,
                pfaffian_ranks: sys.ranks(),
                levels: Vec::new(),
                bracket_generating: sys.flag.last().is_some_and(|l| l.is_empty()),
                passes: false,
                issues: Vec::new(),
            };
            match sgs_test(ev, &sys, &t) {
                Ok(r) => {
                    sec.levels = r.levels.iter().map(|l| SgsLevel { j: l.j, rank: l.rank, integrable: l.integrable }).collect();
                    sec.passes = r.passes;
                }
                Err(e) => sec.issues.push(e.to_string()),
            }
            sec
        }
    };
    let mut r = s.report("sgs");
    r.sgs = Some(section);
    Ok(s.finish(r))
}

/// Rank decisions that disagree between sample points mean the system is
/// not regular at the sampled points.
pub fn is_regularity_warning(w: &str) -> bool {
    w.contains("differs across sample points")
}

fn indeterminate(r: &Report) -> bool {
    let a = |x: &Analysis| x.linearization == "indeterminate";
    r.analysis.as_ref().is_some_and(a)
        || r.quotient.as_ref().is_some_and(|q| a(&q.analysis))
        || r.symmetry.as_ref().is_some_and(|s| s.verdict.issues.iter().any(|i| i == INDETERMINATE_ISSUE))
        || r.batch.iter().flatten().any(|b| b.issues.iter().any(|i| i == INDETERMINATE_ISSUE))
}

pub fn exit_code(r: &Report) -> i32 {
    if r.warnings.iter().any(|w| is_regularity_warning(w)) {
        EXIT_REGULARITY
    } else if indeterminate(r) {
        EXIT_INDETERMINATE
    } else {
        EXIT_OK
    }
}
