//! Symbolic scalar expressions over the rationals.
//!
//! Every [`Expr`] handed out by the public constructors is normalized:
//! sums and products are flattened, sorted and collected, products are
//! fully expanded over sums, and only sums may appear as bases of
//! negative powers. Trigonometric and exponential applications are opaque.

mod eval;
mod parse;
mod print;

pub use eval::{Arith, EvalError, Evaluator, Point, SampleConfig, Value};
pub use parse::{parse, parse_with, ParseError};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

pub type Rational = BigRational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        match s {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Const(Rational),
    Symbol(Arc<str>),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Power(Expr, i64),
    Apply(Func, Expr),
}

/// Shared, immutable expression handle.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("division by zero")]
    DivisionByZero,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

impl Eq for Expr {}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        self.0.cmp(&other.0)
    }
}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

impl Expr {
    fn wrap(n: Node) -> Expr {
        Expr(Arc::new(n))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    /// Builds an arbitrary, possibly unnormalized, tree.
    pub fn raw(n: Node) -> Expr {
        Expr::wrap(n)
    }

    pub fn zero() -> Expr {
        Expr::constant(Rational::zero())
    }

    pub fn one() -> Expr {
        Expr::constant(Rational::one())
    }

    pub fn int(n: i64) -> Expr {
        Expr::constant(rat(n))
    }

    pub fn frac(n: i64, d: i64) -> Expr {
        Expr::constant(Rational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn constant(c: Rational) -> Expr {
        Expr::wrap(Node::Const(c))
    }

    pub fn symbol(name: &str) -> Expr {
        Expr::wrap(Node::Symbol(Arc::from(name)))
    }

    pub fn as_const(&self) -> Option<&Rational> {
        match self.node() {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self.node() {
            Node::Symbol(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_const(&self) -> bool {
        matches!(self.node(), Node::Const(_))
    }

    /// Structural zero; see [`Evaluator::is_zero`] for the semantic test.
    pub fn is_zero_const(&self) -> bool {
        matches!(self.node(), Node::Const(c) if c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self.node(), Node::Const(c) if c.is_one())
    }

    pub fn add(&self, other: &Expr) -> Expr {
        Expr::sum(vec![self.clone(), other.clone()])
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        Expr::sum(vec![self.clone(), other.neg()])
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        Expr::product(vec![self.clone(), other.clone()])
    }

    pub fn neg(&self) -> Expr {
        self.scale(&rat(-1))
    }

    pub fn scale(&self, c: &Rational) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        if c.is_one() {
            return self.clone();
        }
        match self.node() {
            Node::Const(a) => Expr::constant(a * c),
            Node::Sum(ts) => {
                let terms = ts.iter().map(|t| t.scale(c)).collect();
                Expr::wrap(Node::Sum(terms))
            }
            _ => {
                let (k, m) = split_term(self);
                build_term(&(k * c), &m)
            }
        }
    }

    pub fn div(&self, other: &Expr) -> Result<Expr, ExprError> {
        Ok(self.mul(&other.pow(-1)?))
    }

    pub fn recip(&self) -> Result<Expr, ExprError> {
        self.pow(-1)
    }

    pub fn sin(&self) -> Expr {
        Expr::apply(Func::Sin, self.clone())
    }

    pub fn cos(&self) -> Expr {
        Expr::apply(Func::Cos, self.clone())
    }

    pub fn exp(&self) -> Expr {
        Expr::apply(Func::Exp, self.clone())
    }

    pub fn apply(f: Func, arg: Expr) -> Expr {
        if arg.is_zero_const() {
            return match f {
                Func::Sin => Expr::zero(),
                Func::Cos | Func::Exp => Expr::one(),
            };
        }
        Expr::wrap(Node::Apply(f, arg))
    }

    /// Integer power of a normalized expression.
    pub fn pow(&self, n: i64) -> Result<Expr, ExprError> {
        if n == 0 {
            return Ok(Expr::one());
        }
        if n == 1 {
            return Ok(self.clone());
        }
        match self.node() {
            Node::Const(c) => {
                if c.is_zero() {
                    return if n < 0 { Err(ExprError::DivisionByZero) } else { Ok(Expr::zero()) };
                }
                Ok(Expr::constant(rational_pow(c, n)))
            }
            Node::Product(fs) => {
                let mut out = Vec::with_capacity(fs.len());
                for f in fs {
                    out.push(f.pow(n)?);
                }
                Ok(Expr::product(out))
            }
            Node::Power(b, m) => b.pow(m * n),
            Node::Sum(_) => {
                if n > 0 {
                    Ok(Expr::product(vec![self.clone(); n as usize]))
                } else {
                    let (c, monic) = monic_sum(self);
                    let p = Expr::wrap(Node::Power(monic, n));
                    Ok(build_term(&rational_pow(&c, n), &p))
                }
            }
            Node::Symbol(_) | Node::Apply(..) => Ok(Expr::wrap(Node::Power(self.clone(), n))),
        }
    }

    /// Sum of normalized expressions.
    pub fn sum(items: Vec<Expr>) -> Expr {
        let mut acc: BTreeMap<Expr, Rational> = BTreeMap::new();
        let mut push = |t: &Expr| {
            let (c, m) = split_term(t);
            if c.is_zero() {
                return;
            }
            let e = acc.entry(m).or_insert_with(Rational::zero);
            *e += c;
        };
        for it in &items {
            match it.node() {
                Node::Sum(ts) => ts.iter().for_each(&mut push),
                _ => push(it),
            }
        }
        let mut terms: Vec<Expr> = acc
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(m, c)| build_term(&c, &m))
            .collect();
        match terms.len() {
            0 => Expr::zero(),
            1 => terms.pop().unwrap(),
            _ => Expr::wrap(Node::Sum(terms)),
        }
    }

    /// Product of normalized expressions, expanded over sums.
    pub fn product(items: Vec<Expr>) -> Expr {
        let mut coef = Rational::one();
        let mut bases: BTreeMap<Expr, i64> = BTreeMap::new();
        let mut stack: Vec<Expr> = items;
        while let Some(it) = stack.pop() {
            match it.node() {
                Node::Const(c) => {
                    if c.is_zero() {
                        return Expr::zero();
                    }
                    coef *= c;
                }
                Node::Product(fs) => stack.extend(fs.iter().cloned()),
                Node::Power(b, n) => *bases.entry(b.clone()).or_insert(0) += n,
                Node::Sum(_) => {
                    let (c, monic) = monic_sum(&it);
                    coef *= c;
                    *bases.entry(monic).or_insert(0) += 1;
                }
                Node::Symbol(_) | Node::Apply(..) => *bases.entry(it.clone()).or_insert(0) += 1,
            }
        }
        bases.retain(|_, n| *n != 0);

        if let Some(s) = pick_expansion_base(&bases) {
            let ts = match s.node() {
                Node::Sum(ts) => ts.clone(),
                _ => unreachable!(),
            };
            *bases.get_mut(&s).unwrap() -= 1;
            let mut rest: Vec<Expr> = bases
                .iter()
                .filter(|(_, n)| **n != 0)
                .map(|(b, n)| power_factor(b, *n))
                .collect();
            rest.push(Expr::constant(coef));
            let terms = ts
                .iter()
                .map(|t| {
                    let mut fs = rest.clone();
                    fs.push(t.clone());
                    Expr::product(fs)
                })
                .collect();
            return Expr::sum(terms);
        }

        let mut factors: Vec<Expr> = bases.iter().map(|(b, n)| power_factor(b, *n)).collect();
        if factors.is_empty() {
            return Expr::constant(coef);
        }
        factors.sort();
        let mono = if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            Expr::wrap(Node::Product(factors))
        };
        build_term(&coef, &mono)
    }

    pub fn differentiate(&self, var: &str) -> Expr {
        if !self.contains_symbol(var) {
            return Expr::zero();
        }
        match self.node() {
            Node::Const(_) => Expr::zero(),
            Node::Symbol(s) => {
                if &**s == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Sum(ts) => Expr::sum(ts.iter().map(|t| t.differentiate(var)).collect()),
            Node::Product(fs) => {
                let mut terms = Vec::new();
                for i in 0..fs.len() {
                    let d = fs[i].differentiate(var);
                    if d.is_zero_const() {
                        continue;
                    }
                    let mut g = fs.clone();
                    g[i] = d;
                    terms.push(Expr::product(g));
                }
                Expr::sum(terms)
            }
            Node::Power(b, n) => {
                let db = b.differentiate(var);
                let p = b.pow(n - 1).expect("base of a normalized power is nonzero");
                Expr::product(vec![Expr::int(*n), p, db])
            }
            Node::Apply(f, a) => {
                let da = a.differentiate(var);
                let outer = match f {
                    Func::Sin => a.cos(),
                    Func::Cos => a.sin().neg(),
                    Func::Exp => self.clone(),
                };
                outer.mul(&da)
            }
        }
    }

    pub fn contains_symbol(&self, var: &str) -> bool {
        match self.node() {
            Node::Const(_) => false,
            Node::Symbol(s) => &**s == var,
            Node::Sum(xs) | Node::Product(xs) => xs.iter().any(|x| x.contains_symbol(var)),
            Node::Power(b, _) => b.contains_symbol(var),
            Node::Apply(_, a) => a.contains_symbol(var),
        }
    }

    pub fn free_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            Node::Const(_) => {}
            Node::Symbol(s) => {
                out.insert(s.to_string());
            }
            Node::Sum(xs) | Node::Product(xs) => xs.iter().for_each(|x| x.collect_symbols(out)),
            Node::Power(b, _) => b.collect_symbols(out),
            Node::Apply(_, a) => a.collect_symbols(out),
        }
    }

    /// Simultaneous substitution of symbols, renormalizing the result.
    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Result<Expr, ExprError> {
        if map.is_empty() {
            return Ok(self.clone());
        }
        Ok(match self.node() {
            Node::Const(_) => self.clone(),
            Node::Symbol(s) => map.get(&**s).cloned().unwrap_or_else(|| self.clone()),
            Node::Sum(ts) => {
                let mut out = Vec::with_capacity(ts.len());
                for t in ts {
                    out.push(t.substitute(map)?);
                }
                Expr::sum(out)
            }
            Node::Product(fs) => {
                let mut out = Vec::with_capacity(fs.len());
                for f in fs {
                    out.push(f.substitute(map)?);
                }
                Expr::product(out)
            }
            Node::Power(b, n) => b.substitute(map)?.pow(*n)?,
            Node::Apply(f, a) => Expr::apply(*f, a.substitute(map)?),
        })
    }

    /// Number of nodes, used as a simplicity measure for pivots.
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Symbol(_) => 1,
            Node::Sum(xs) | Node::Product(xs) => 1 + xs.iter().map(Expr::size).sum::<usize>(),
            Node::Power(b, _) => 1 + b.size(),
            Node::Apply(_, a) => 1 + a.size(),
        }
    }

    /// Terms of a sum, or the expression itself as a single term.
    pub fn terms(&self) -> Vec<Expr> {
        match self.node() {
            Node::Sum(ts) => ts.clone(),
            _ if self.is_zero_const() => Vec::new(),
            _ => vec![self.clone()],
        }
    }

    /// Splits a term into its rational coefficient and monomial part.
    pub fn coefficient_split(&self) -> (Rational, Expr) {
        split_term(self)
    }

    /// Factors of a monomial as (base, exponent) pairs, constant excluded.
    pub fn monomial_factors(&self) -> Vec<(Expr, i64)> {
        let (_, m) = split_term(self);
        let fs = match m.node() {
            Node::Const(_) => return Vec::new(),
            Node::Product(fs) => fs.clone(),
            _ => vec![m.clone()],
        };
        fs.iter()
            .map(|f| match f.node() {
                Node::Power(b, n) => (b.clone(), *n),
                _ => (f.clone(), 1),
            })
            .collect()
    }

    /// Rebuilds an unnormalized tree bottom-up through the normalizing constructors.
    pub fn normalize(&self) -> Result<Expr, ExprError> {
        Ok(match self.node() {
            Node::Const(_) | Node::Symbol(_) => self.clone(),
            Node::Sum(ts) => {
                let mut out = Vec::with_capacity(ts.len());
                for t in ts {
                    out.push(t.normalize()?);
                }
                Expr::sum(out)
            }
            Node::Product(fs) => {
                let mut out = Vec::with_capacity(fs.len());
                for f in fs {
                    out.push(f.normalize()?);
                }
                Expr::product(out)
            }
            Node::Power(b, n) => b.normalize()?.pow(*n)?,
            Node::Apply(f, a) => Expr::apply(*f, a.normalize()?),
        })
    }
}

/// Greatest common monomial factor of a list of expressions, with the
/// rational content, such that dividing each by it keeps every exponent
/// of every base non-negative where it was non-negative.
pub fn common_factor(exprs: &[Expr]) -> Expr {
    let mut content: Option<Rational> = None;
    let mut mins: Option<BTreeMap<Expr, i64>> = None;
    for e in exprs {
        for t in e.terms() {
            let (c, _) = split_term(&t);
            content = Some(match content {
                None => c.abs(),
                Some(g) => rational_gcd(&g, &c),
            });
            let fs: BTreeMap<Expr, i64> = t.monomial_factors().into_iter().collect();
            mins = Some(match mins {
                None => fs.into_iter().filter(|(_, n)| *n > 0).collect(),
                Some(m) => m
                    .into_iter()
                    .filter_map(|(b, n)| fs.get(&b).map(|k| (b, n.min(*k))))
                    .filter(|(_, n)| *n > 0)
                    .collect(),
            });
        }
    }
    let mut factors = vec![Expr::constant(content.unwrap_or_else(Rational::one))];
    for (b, n) in mins.unwrap_or_default() {
        factors.push(power_factor(&b, n));
    }
    Expr::product(factors)
}

fn rational_gcd(a: &Rational, b: &Rational) -> Rational {
    use num_integer::Integer;
    let n = a.numer().gcd(b.numer());
    let d = a.denom().lcm(b.denom());
    if n.is_zero() {
        return Rational::one();
    }
    Rational::new(n, d)
}

fn rational_pow(c: &Rational, n: i64) -> Rational {
    let e = n.unsigned_abs();
    let mut num = num_traits::pow::pow(c.numer().clone(), e as usize);
    let mut den = num_traits::pow::pow(c.denom().clone(), e as usize);
    if n < 0 {
        std::mem::swap(&mut num, &mut den);
    }
    Rational::new(num, den)
}

fn power_factor(b: &Expr, n: i64) -> Expr {
    if n == 1 {
        b.clone()
    } else {
        Expr::wrap(Node::Power(b.clone(), n))
    }
}

fn split_term(t: &Expr) -> (Rational, Expr) {
    match t.node() {
        Node::Const(c) => (c.clone(), Expr::one()),
        Node::Product(fs) => match fs[0].node() {
            Node::Const(c) => {
                let rest = &fs[1..];
                let m = if rest.len() == 1 {
                    rest[0].clone()
                } else {
                    Expr::wrap(Node::Product(rest.to_vec()))
                };
                (c.clone(), m)
            }
            _ => (Rational::one(), t.clone()),
        },
        _ => (Rational::one(), t.clone()),
    }
}

fn build_term(c: &Rational, m: &Expr) -> Expr {
    if c.is_zero() {
        return Expr::zero();
    }
    if m.is_one() {
        return Expr::constant(c.clone());
    }
    if c.is_one() {
        return m.clone();
    }
    let mut fs = vec![Expr::constant(c.clone())];
    match m.node() {
        Node::Product(xs) => fs.extend(xs.iter().cloned()),
        _ => fs.push(m.clone()),
    }
    Expr::wrap(Node::Product(fs))
}

/// Writes a sum as c * S' where the leading term of S' has coefficient one.
fn monic_sum(s: &Expr) -> (Rational, Expr) {
    match s.node() {
        Node::Sum(ts) => {
            let (c, _) = split_term(&ts[0]);
            if c.is_one() {
                return (c, s.clone());
            }
            let inv = c.recip();
            let terms = ts.iter().map(|t| t.scale(&inv)).collect();
            (c, Expr::wrap(Node::Sum(terms)))
        }
        _ => (Rational::one(), s.clone()),
    }
}

/// Chooses a positive-exponent sum to distribute over. Sums whose inverse
/// appears inside another pending sum are deferred so cancellations happen
/// before expansion.
fn pick_expansion_base(bases: &BTreeMap<Expr, i64>) -> Option<Expr> {
    let sums: Vec<&Expr> = bases
        .iter()
        .filter(|(b, n)| **n > 0 && matches!(b.node(), Node::Sum(_)))
        .map(|(b, _)| b)
        .collect();
    if sums.is_empty() {
        return None;
    }
    for s in &sums {
        let wanted = sums.iter().any(|o| {
            !std::ptr::eq(*o, *s)
                && o.terms().iter().any(|t| {
                    t.monomial_factors()
                        .iter()
                        .any(|(b, n)| *n < 0 && b == *s)
                })
        });
        if !wanted {
            return Some((*s).clone());
        }
    }
    Some(sums[0].clone())
}

impl Expr {
    /// Small-integer view of a constant.
    pub fn to_i64(&self) -> Option<i64> {
        match self.node() {
            Node::Const(c) if c.is_integer() => c.numer().to_i64(),
            _ => None,
        }
    }
}
