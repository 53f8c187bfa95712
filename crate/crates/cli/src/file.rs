//! The system file format: a line-oriented text file with `[section]`
//! headers. `#` starts a comment.
//!
//! ```text
//! [chart]
//! time t
//! state x1 x2
//! control u
//! constant h
//!
//! [distribution]
//! T = d_t + x2*d_x1 + u*d_x2
//! U = d_u
//!
//! [symmetry shift]
//! X = d_x1
//! rebase X -> 2*X
//!
//! [quotient shift]
//! coord t time = t
//! coord q state = x2
//! coord v control = u
//! section t = t
//! section x1 = 0
//! section x2 = q
//! section u = v
//!
//! [tau]
//! clock = t + x1
//!
//! [config]
//! seed = 7
//! samples = 8
//! precision = 50
//! ```

use ctrlgeom::expr::{parse_with, Expr, Rational};
use ctrlgeom::geometry::{Chart, Coordinate, Distribution, Role, VectorField};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct FileError {
    pub line: usize,
    pub msg: String,
}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, FileError> {
    Err(FileError { line, msg: msg.into() })
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Config {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub precision: Option<u32>,
    pub rank_samples: Option<usize>,
}

impl Config {
    /// Fills unset values from `other`.
    pub fn or(&self, other: &Config) -> Config {
        Config {
            seed: self.seed.or(other.seed),
            samples: self.samples.or(other.samples),
            precision: self.precision.or(other.precision),
            rank_samples: self.rank_samples.or(other.rank_samples),
        }
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<(), FileError> {
        let bad = || FileError { line, msg: format!("invalid value for {}: '{}'", key, value) };
        match key {
            "seed" => self.seed = Some(value.parse().map_err(|_| bad())?),
            "samples" => self.samples = Some(value.parse().map_err(|_| bad())?),
            "precision" => self.precision = Some(value.parse().map_err(|_| bad())?),
            "rank_samples" => self.rank_samples = Some(value.parse().map_err(|_| bad())?),
            _ => return err(line, format!("unknown config key '{}'", key)),
        }
        Ok(())
    }

    fn is_empty(&self) -> bool {
        *self == Config::default()
    }

    /// Parses a file holding only `key = value` lines, as used for the
    /// default configuration.
    pub fn parse(text: &str) -> Result<Config, FileError> {
        let mut c = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let l = strip(raw);
            if l.is_empty() || l == "[config]" {
                continue;
            }
            let Some((k, v)) = l.split_once('=') else { return err(i + 1, "expected key = value") };
            c.set(i + 1, k.trim(), v.trim())?;
        }
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryBlock {
    pub name: String,
    pub generators: Vec<(String, VectorField)>,
    /// Basis change applied before the bracket table: each generator named
    /// on the left is replaced by a constant combination of the originals.
    pub rebase: Vec<(String, Expr)>,
}

impl SymmetryBlock {
    pub fn names(&self) -> Vec<String> {
        self.generators.iter().map(|g| g.0.clone()).collect()
    }

    pub fn fields(&self) -> Vec<VectorField> {
        self.generators.iter().map(|g| g.1.clone()).collect()
    }

    pub fn distribution(&self, chart: &Arc<Chart>) -> Distribution {
        Distribution::new(chart, self.fields())
    }

    /// The rebase rules as a rational matrix, identity rows elsewhere.
    pub fn rebase_matrix(&self) -> Option<Vec<Vec<Rational>>> {
        if self.rebase.is_empty() {
            return None;
        }
        let names = self.names();
        let n = names.len();
        let mut m: Vec<Vec<Rational>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { Rational::from_integer(1.into()) } else { Rational::from_integer(0.into()) }).collect())
            .collect();
        for (target, e) in &self.rebase {
            let i = names.iter().position(|x| x == target).expect("checked at parse time");
            m[i] = names.iter().map(|x| e.differentiate(x).as_const().cloned().expect("checked at parse time")).collect();
        }
        Some(m)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuotientBlock {
    pub name: String,
    pub coords: Vec<(Coordinate, Expr)>,
    pub section: Vec<(String, Expr)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemFile {
    pub chart: Arc<Chart>,
    pub generators: Vec<(String, VectorField)>,
    pub symmetries: Vec<SymmetryBlock>,
    pub quotients: Vec<QuotientBlock>,
    pub taus: Vec<(String, Expr)>,
    pub config: Config,
}

impl SystemFile {
    pub fn distribution(&self) -> Distribution {
        Distribution::new(&self.chart, self.generators.iter().map(|g| g.1.clone()).collect())
    }

    pub fn symmetry(&self, name: &str) -> Option<&SymmetryBlock> {
        self.symmetries.iter().find(|s| s.name == name)
    }

    pub fn quotient(&self, name: &str) -> Option<&QuotientBlock> {
        self.quotients.iter().find(|s| s.name == name)
    }

    /// A named clock from the [tau] section, or an expression over the chart.
    pub fn tau(&self, s: &str) -> Result<Expr, String> {
        if let Some(t) = self.taus.iter().find(|t| t.0 == s) {
            return Ok(t.1.clone());
        }
        parse_with(s, &|n| self.chart.is_known(n)).map_err(|e| e.to_string())
    }
}

fn strip(raw: &str) -> &str {
    raw.split('#').next().unwrap_or("").trim()
}

struct Section<'a> {
    line: usize,
    kind: &'a str,
    name: Option<&'a str>,
    body: Vec<(usize, &'a str)>,
}

fn sections(text: &str) -> Result<Vec<Section<'_>>, FileError> {
    let mut out: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let l = strip(raw);
        if l.is_empty() {
            continue;
        }
        if let Some(h) = l.strip_prefix('[') {
            let Some(h) = h.strip_suffix(']') else { return err(i + 1, "unterminated section header") };
            let mut parts = h.split_whitespace();
            let kind = parts.next().unwrap_or("");
            let name = parts.next();
            if parts.next().is_some() {
                return err(i + 1, "section header has too many words");
            }
            let named = matches!(kind, "symmetry" | "quotient");
            match (kind, name) {
                ("chart" | "distribution" | "tau" | "config", None) => {}
                ("symmetry" | "quotient", Some(_)) => {}
                _ if named => return err(i + 1, format!("[{}] needs a name", kind)),
                ("chart" | "distribution" | "tau" | "config", Some(_)) => {
                    return err(i + 1, format!("[{}] takes no name", kind))
                }
                _ => return err(i + 1, format!("unknown section [{}]", kind)),
            }
            out.push(Section { line: i + 1, kind, name, body: Vec::new() });
            continue;
        }
        match out.last_mut() {
            Some(s) => s.body.push((i + 1, l)),
            None => return err(i + 1, "content before the first section"),
        }
    }
    Ok(out)
}

fn parse_chart(s: &Section) -> Result<Arc<Chart>, FileError> {
    let mut coords = Vec::new();
    let mut constants = Vec::new();
    for (line, l) in &s.body {
        let mut words = l.split_whitespace();
        let kind = words.next().unwrap_or("");
        let names: Vec<String> = words.map(|w| w.to_string()).collect();
        if names.is_empty() {
            return err(*line, "expected a role followed by names");
        }
        if kind == "constant" {
            constants.extend(names);
            continue;
        }
        let Some(role) = Role::from_name(kind) else { return err(*line, format!("unknown role '{}'", kind)) };
        if role == Role::Time && (names.len() > 1 || coords.iter().any(|c: &Coordinate| c.role == Role::Time)) {
            return err(*line, "at most one time coordinate");
        }
        coords.extend(names.into_iter().map(|name| Coordinate { name, role }));
    }
    if coords.is_empty() {
        return err(s.line, "chart has no coordinates");
    }
    Chart::new(coords, constants).map_err(|e| FileError { line: s.line, msg: e.to_string() })
}

fn split_assignment(line: usize, l: &str) -> Result<(&str, &str), FileError> {
    match l.split_once('=') {
        Some((a, b)) => Ok((a.trim(), b.trim())),
        None => err(line, "expected NAME = EXPRESSION"),
    }
}

fn check_name(line: usize, n: &str, taken: &mut BTreeSet<String>) -> Result<(), FileError> {
    let ok = n.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
        && n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if !ok {
        return err(line, format!("invalid name '{}'", n));
    }
    if !taken.insert(n.to_string()) {
        return err(line, format!("duplicate name '{}'", n));
    }
    Ok(())
}

fn parse_fields(chart: &Arc<Chart>, s: &Section, auto: &str) -> Result<Vec<(String, VectorField)>, FileError> {
    let mut out = Vec::new();
    let mut taken = BTreeSet::new();
    for (line, l) in &s.body {
        if l.starts_with("rebase ") {
            continue;
        }
        let (name, body) = match l.split_once('=') {
            Some((a, b)) => (a.trim().to_string(), b.trim()),
            None => (format!("{}{}", auto, out.len() + 1), *l),
        };
        check_name(*line, &name, &mut taken)?;
        let f = VectorField::parse(chart, body).map_err(|e| FileError { line: *line, msg: e.to_string() })?;
        out.push((name, f));
    }
    if out.is_empty() {
        return err(s.line, "section has no vector fields");
    }
    Ok(out)
}

fn parse_symmetry(chart: &Arc<Chart>, s: &Section) -> Result<SymmetryBlock, FileError> {
    let generators = parse_fields(chart, s, "X")?;
    let names: Vec<String> = generators.iter().map(|g| g.0.clone()).collect();
    let mut rebase = Vec::new();
    let mut seen = BTreeSet::new();
    for (line, l) in &s.body {
        let Some(rule) = l.strip_prefix("rebase ") else { continue };
        let Some((target, body)) = rule.split_once("->") else { return err(*line, "expected rebase NAME -> COMBINATION") };
        let target = target.trim();
        if !names.iter().any(|n| n == target) {
            return err(*line, format!("unknown generator '{}'", target));
        }
        if !seen.insert(target.to_string()) {
            return err(*line, format!("'{}' rebased twice", target));
        }
        let e = parse_with(body.trim(), &|n| names.iter().any(|x| x == n)).map_err(|e| FileError { line: *line, msg: e.to_string() })?;
        let mut rest = e.clone();
        for n in &names {
            let c = e.differentiate(n);
            if !c.is_const() {
                return err(*line, format!("coefficient of {} is not a constant", n));
            }
            rest = rest.sub(&c.mul(&Expr::symbol(n)));
        }
        if !rest.is_zero_const() {
            return err(*line, "rebase rule is not a linear combination of generators");
        }
        rebase.push((target.to_string(), e));
    }
    Ok(SymmetryBlock { name: s.name.unwrap_or_default().to_string(), generators, rebase })
}

fn parse_quotient(chart: &Arc<Chart>, s: &Section) -> Result<QuotientBlock, FileError> {
    let mut coords = Vec::new();
    let mut section = Vec::new();
    let mut taken = BTreeSet::new();
    for (line, l) in &s.body {
        if let Some(rest) = l.strip_prefix("coord ") {
            let (lhs, rhs) = split_assignment(*line, rest)?;
            let words: Vec<&str> = lhs.split_whitespace().collect();
            let [name, role] = words[..] else { return err(*line, "expected coord NAME ROLE = INVARIANT") };
            let Some(role) = Role::from_name(role) else { return err(*line, format!("unknown role '{}'", role)) };
            check_name(*line, name, &mut taken)?;
            let e = parse_with(rhs, &|n| chart.is_known(n)).map_err(|e| FileError { line: *line, msg: e.to_string() })?;
            coords.push((Coordinate { name: name.to_string(), role }, e));
        }
    }
    let qnames: BTreeSet<String> = coords.iter().map(|c| c.0.name.clone()).collect();
    let mut seen = BTreeSet::new();
    for (line, l) in &s.body {
        if l.starts_with("coord ") {
            continue;
        }
        let Some(rest) = l.strip_prefix("section ") else { return err(*line, "expected coord or section") };
        let (name, rhs) = split_assignment(*line, rest)?;
        if chart.index_of(name).is_none() {
            return err(*line, format!("'{}' is not a chart coordinate", name));
        }
        if !seen.insert(name.to_string()) {
            return err(*line, format!("section sets '{}' twice", name));
        }
        let known = |n: &str| qnames.contains(n) || chart.constants().iter().any(|c| c == n);
        let e = parse_with(rhs, &known).map_err(|e| FileError { line: *line, msg: e.to_string() })?;
        section.push((name.to_string(), e));
    }
    if coords.is_empty() {
        return err(s.line, "quotient has no coordinates");
    }
    for c in chart.coords() {
        if !seen.contains(&c.name) {
            return err(s.line, format!("section does not set '{}'", c.name));
        }
    }
    Ok(QuotientBlock { name: s.name.unwrap_or_default().to_string(), coords, section })
}

impl SystemFile {
    pub fn parse(text: &str) -> Result<SystemFile, FileError> {
        let secs = sections(text)?;
        let mut seen = BTreeSet::new();
        for s in &secs {
            let key = (s.kind, s.name);
            if !seen.insert(key) {
                return err(s.line, format!("duplicate section [{}{}]", s.kind, s.name.map(|n| format!(" {}", n)).unwrap_or_default()));
            }
        }
        let Some(cs) = secs.iter().find(|s| s.kind == "chart") else { return err(1, "missing [chart] section") };
        let chart = parse_chart(cs)?;
        let Some(ds) = secs.iter().find(|s| s.kind == "distribution") else {
            return err(1, "missing [distribution] section")
        };
        if let Some((line, _)) = ds.body.iter().find(|(_, l)| l.starts_with("rebase ")) {
            return err(*line, "rebase belongs in a [symmetry] section");
        }
        let generators = parse_fields(&chart, ds, "V")?;
        let mut symmetries = Vec::new();
        let mut quotients = Vec::new();
        let mut taus = Vec::new();
        let mut config = Config::default();
        for s in &secs {
            match s.kind {
                "symmetry" => symmetries.push(parse_symmetry(&chart, s)?),
                "quotient" => quotients.push(parse_quotient(&chart, s)?),
                "tau" => {
                    let mut taken = BTreeSet::new();
                    for (line, l) in &s.body {
                        let (n, rhs) = split_assignment(*line, l)?;
                        check_name(*line, n, &mut taken)?;
                        let e = parse_with(rhs, &|x| chart.is_known(x)).map_err(|e| FileError { line: *line, msg: e.to_string() })?;
                        taus.push((n.to_string(), e));
                    }
                }
                "config" => {
                    for (line, l) in &s.body {
                        let (k, v) = split_assignment(*line, l)?;
                        config.set(*line, k, v)?;
                    }
                }
                _ => {}
            }
        }
        Ok(SystemFile { chart, generators, symmetries, quotients, taus, config })
    }
}

/// Canonical rendering; parsing it gives back an equal file.
impl fmt::Display for SystemFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[chart]")?;
        let mut runs: Vec<(Role, Vec<&str>)> = Vec::new();
        for c in self.chart.coords() {
            match runs.last_mut() {
                Some((r, names)) if *r == c.role && c.role != Role::Time => names.push(&c.name),
                _ => runs.push((c.role, vec![&c.name])),
            }
        }
        for (r, names) in runs {
            writeln!(f, "{} {}", r, names.join(" "))?;
        }
        if !self.chart.constants().is_empty() {
            writeln!(f, "constant {}", self.chart.constants().join(" "))?;
        }
        writeln!(f, "\n[distribution]")?;
        for (n, x) in &self.generators {
            writeln!(f, "{} = {}", n, x)?;
        }
        for s in &self.symmetries {
            writeln!(f, "\n[symmetry {}]", s.name)?;
            for (n, x) in &s.generators {
                writeln!(f, "{} = {}", n, x)?;
            }
            for (n, e) in &s.rebase {
                writeln!(f, "rebase {} -> {}", n, e)?;
            }
        }
        for q in &self.quotients {
            writeln!(f, "\n[quotient {}]", q.name)?;
            for (c, e) in &q.coords {
                writeln!(f, "coord {} {} = {}", c.name, c.role, e)?;
            }
            for (n, e) in &q.section {
                writeln!(f, "section {} = {}", n, e)?;
            }
        }
        if !self.taus.is_empty() {
            writeln!(f, "\n[tau]")?;
            for (n, e) in &self.taus {
                writeln!(f, "{} = {}", n, e)?;
            }
        }
        if !self.config.is_empty() {
            writeln!(f, "\n[config]")?;
            let c = &self.config;
            let entries: [(&str, Option<String>); 4] = [
                ("seed", c.seed.map(|x| x.to_string())),
                ("samples", c.samples.map(|x| x.to_string())),
                ("precision", c.precision.map(|x| x.to_string())),
                ("rank_samples", c.rank_samples.map(|x| x.to_string())),
            ];
            for (k, v) in entries {
                if let Some(v) = v {
                    writeln!(f, "{} = {}", k, v)?;
                }
            }
        }
        Ok(())
    }
}

/// The cross-section as a substitution map.
pub fn section_map(q: &QuotientBlock) -> BTreeMap<String, Expr> {
    q.section.iter().cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "
# single integrator pair
[chart]
time t
state x1 x2
control u
constant h

[distribution]
T = d_t + x2*d_x1 + h*u*d_x2  # drift
d_u

[symmetry shift]
A = d_x1
B = t*d_x1 + d_x2
rebase B -> B - 2*A

[quotient shift]
coord t time = t
coord v control = u
section x1 = 0
section x2 = 0
section t = t
section u = v

[tau]
clock = t + x1

[config]
seed = 11
";

    #[test]
    fn parses_every_section() {
        let f = SystemFile::parse(SAMPLE).unwrap();
        assert_eq!(f.chart.dim(), 4);
        assert_eq!(f.chart.constants(), ["h".to_string()]);
        assert_eq!(f.generators[1].0, "V2");
        let s = f.symmetry("shift").unwrap();
        assert_eq!(s.names(), vec!["A", "B"]);
        let m = s.rebase_matrix().unwrap();
        assert_eq!(m[1], vec![Rational::from_integer((-2).into()), Rational::from_integer(1.into())]);
        assert_eq!(f.quotient("shift").unwrap().coords.len(), 2);
        assert_eq!(f.config.seed, Some(11));
        assert!(f.tau("clock").is_ok());
        assert!(f.tau("t*x2").is_ok());
        assert!(f.tau("nope").is_err());
    }

    #[test]
    fn printing_round_trips() {
        let f = SystemFile::parse(SAMPLE).unwrap();
        let printed = f.to_string();
        let g = SystemFile::parse(&printed).unwrap();
        assert_eq!(f, g);
        assert_eq!(printed, g.to_string());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("[chart]\nstate x\n[distribution]\nd_y\n", 4),
            ("[chart]\nstate x\n[distribution]\nd_x\n[symmetry]\n", 5),
            ("x = 1\n", 1),
            ("[chart]\nwobble x\n", 2),
            ("[chart]\nstate x\n[distribution]\nd_x\n[config]\nseed = many\n", 6),
            ("[chart]\nstate x y\n[distribution]\nd_x\n[symmetry s]\nA = d_y\nrebase A -> A^2\n", 7),
        ];
        for (text, line) in cases {
            let e = SystemFile::parse(text).unwrap_err();
            assert_eq!(e.line, line, "{}", e);
        }
    }
}
