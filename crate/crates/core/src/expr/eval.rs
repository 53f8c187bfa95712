//! High-precision evaluation at deterministic random rational points, and
//! the probabilistic zero test built on it.

use super::{Expr, Func, Node, Rational};
use astro_float::{BigFloat, Consts, RoundingMode};
use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Mutex;

const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constant cache"));
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("pole while evaluating {0}")]
    Pole(String),
}

/// A sampled value together with an error scale: rounding error in `v`
/// is bounded by roughly 2^-p times `s`, and `s >= |v|`.
#[derive(Clone, Debug)]
pub struct Value {
    pub v: BigFloat,
    pub s: BigFloat,
}

/// Exact rational coordinates of one sample point, keyed by symbol name.
#[derive(Clone, Debug, Default)]
pub struct Point {
    pub values: BTreeMap<String, Rational>,
}

/// Arithmetic at a fixed binary precision.
#[derive(Clone, Copy, Debug)]
pub struct Arith {
    pub p: usize,
}

impl Arith {
    pub fn from_digits(digits: u32) -> Arith {
        let bits = (digits as f64 * std::f64::consts::LOG2_10).ceil() as usize + 64;
        Arith { p: bits.div_ceil(64) * 64 }
    }

    pub fn zero(&self) -> BigFloat {
        BigFloat::from_i64(0, self.p)
    }

    pub fn int(&self, n: i64) -> BigFloat {
        BigFloat::from_i64(n, self.p)
    }

    pub fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.p, RM)
    }

    pub fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.p, RM)
    }

    pub fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.p, RM)
    }

    pub fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.p, RM)
    }

    pub fn abs(&self, a: &BigFloat) -> BigFloat {
        a.abs()
    }

    pub fn max(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        if a.cmp(b).is_none_or(|c| c >= 0) {
            a.clone()
        } else {
            b.clone()
        }
    }

    /// `|a| <= |b|`
    pub fn abs_le(&self, a: &BigFloat, b: &BigFloat) -> bool {
        // `BigFloat::abs_cmp` honours the sign of `a`, so compare magnitudes explicitly.
        a.abs().cmp(&b.abs()).is_some_and(|c| c <= 0)
    }

    pub fn powi(&self, a: &BigFloat, n: u64) -> BigFloat {
        a.powi(n as usize, self.p, RM)
    }

    pub fn rational(&self, r: &Rational) -> BigFloat {
        let n = self.bigint(r.numer());
        let d = self.bigint(r.denom());
        self.div(&n, &d)
    }

    fn bigint(&self, i: &BigInt) -> BigFloat {
        if let Some(v) = i.to_i128() {
            return BigFloat::from_i128(v, self.p);
        }
        CONSTS.with(|c| BigFloat::parse(&i.to_string(), astro_float::Radix::Dec, self.p, RM, &mut c.borrow_mut()))
    }

    pub fn func(&self, f: Func, a: &BigFloat) -> BigFloat {
        CONSTS.with(|c| {
            let cc = &mut c.borrow_mut();
            match f {
                Func::Sin => a.sin(self.p, RM, cc),
                Func::Cos => a.cos(self.p, RM, cc),
                Func::Exp => a.exp(self.p, RM, cc),
            }
        })
    }

    pub fn to_f64(&self, a: &BigFloat) -> f64 {
        let s = CONSTS.with(|c| a.format(astro_float::Radix::Dec, RM, &mut c.borrow_mut()));
        s.ok().and_then(|s| s.parse().ok()).unwrap_or(f64::NAN)
    }

    /// Closest rational with denominator at most `max_den`, if it matches
    /// `a` to within `tol` relative.
    pub fn to_rational(&self, a: &BigFloat, max_den: i64, tol: &BigFloat) -> Option<Rational> {
        // Continued-fraction expansion.
        let (mut h0, mut h1) = (BigInt::from(0), BigInt::from(1));
        let (mut k0, mut k1) = (BigInt::from(1), BigInt::from(0));
        let mut x = a.clone();
        for _ in 0..64 {
            let fl = x.floor();
            let ai = self.float_to_bigint(&fl)?;
            let h2 = &ai * &h1 + &h0;
            let k2 = &ai * &k1 + &k0;
            if k2 > BigInt::from(max_den) {
                break;
            }
            h0 = h1;
            h1 = h2;
            k0 = k1;
            k1 = k2;
            let cand = Rational::new(h1.clone(), k1.clone());
            let diff = self.sub(&self.rational(&cand), a);
            let bound = self.mul(tol, &self.max(&self.abs(a), &self.int(1)));
            if self.abs_le(&diff, &bound) {
                return Some(cand);
            }
            let frac = self.sub(&x, &fl);
            if frac.is_zero() {
                break;
            }
            x = self.div(&self.int(1), &frac);
        }
        None
    }

    fn float_to_bigint(&self, a: &BigFloat) -> Option<BigInt> {
        let s = CONSTS.with(|c| a.format(astro_float::Radix::Dec, RM, &mut c.borrow_mut())).ok()?;
        let f: f64 = s.parse().ok()?;
        if f.abs() > 1e15 {
            return None;
        }
        Some(BigInt::from(f.round() as i64))
    }
}

/// Sampling configuration shared by every numeric decision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleConfig {
    pub seed: u64,
    pub samples: usize,
    pub digits: u32,
    pub rank_samples: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig { seed: 20240917, samples: 8, digits: 50, rank_samples: 3 }
    }
}

/// Evaluates expressions at seeded sample points and decides zero-ness.
///
/// Point `k` assigns each symbol a rational p/q with 1 <= p, q <= 1000,
/// derived only from the seed, `k` and the symbol name, so results do
/// not depend on evaluation order.
pub struct Evaluator {
    pub config: SampleConfig,
    pub arith: Arith,
    threshold: BigFloat,
    cache: Mutex<HashMap<(usize, Expr), Value>>,
    warnings: Mutex<BTreeSet<String>>,
}

impl Evaluator {
    pub fn new(config: SampleConfig) -> Evaluator {
        let arith = Arith::from_digits(config.digits);
        let threshold = arith.div(&arith.int(1), &BigFloat::from_u128(10u128.pow(30), arith.p));
        Evaluator {
            config,
            arith,
            threshold,
            cache: Mutex::new(HashMap::new()),
            warnings: Mutex::new(BTreeSet::new()),
        }
    }

    pub fn threshold(&self) -> &BigFloat {
        &self.threshold
    }

    pub fn warn(&self, msg: impl Into<String>) {
        self.warnings.lock().unwrap().insert(msg.into());
    }

    pub fn warnings(&self) -> Vec<String> {
        self.warnings.lock().unwrap().iter().cloned().collect()
    }

    pub fn coordinate(&self, k: usize, name: &str) -> Rational {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in name.bytes().chain((k as u64).to_le_bytes()) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ h);
        let p: i64 = rng.gen_range(1..=1000);
        let q: i64 = rng.gen_range(1..=1000);
        Rational::new(BigInt::from(p), BigInt::from(q))
    }

    pub fn point(&self, k: usize, symbols: &BTreeSet<String>) -> Point {
        Point { values: symbols.iter().map(|s| (s.clone(), self.coordinate(k, s))).collect() }
    }

    /// Whether `v` is zero relative to its error scale.
    pub fn negligible(&self, v: &Value) -> bool {
        let a = &self.arith;
        a.abs_le(&v.v, &a.mul(&self.threshold, &v.s))
    }

    pub fn eval(&self, e: &Expr, k: usize) -> Result<Value, EvalError> {
        let a = &self.arith;
        match e.node() {
            Node::Const(c) => {
                let v = a.rational(c);
                Ok(Value { s: a.abs(&v), v })
            }
            Node::Symbol(s) => {
                let v = a.rational(&self.coordinate(k, s));
                Ok(Value { s: a.abs(&v), v })
            }
            Node::Sum(ts) => {
                let mut v = a.zero();
                let mut s = a.zero();
                for t in ts {
                    let x = self.eval(t, k)?;
                    v = a.add(&v, &x.v);
                    s = a.add(&s, &x.s);
                }
                Ok(Value { v, s })
            }
            Node::Product(fs) => {
                let mut v = a.int(1);
                let mut s = a.int(1);
                for f in fs {
                    let x = self.eval(f, k)?;
                    v = a.mul(&v, &x.v);
                    s = a.mul(&s, &x.s);
                }
                Ok(Value { v, s })
            }
            Node::Power(..) | Node::Apply(..) => {
                let key = (k, e.clone());
                if let Some(v) = self.cache.lock().unwrap().get(&key) {
                    return Ok(v.clone());
                }
                let val = self.eval_uncached(e, k)?;
                self.cache.lock().unwrap().insert(key, val.clone());
                Ok(val)
            }
        }
    }

    fn eval_uncached(&self, e: &Expr, k: usize) -> Result<Value, EvalError> {
        let a = &self.arith;
        match e.node() {
            Node::Power(b, n) => {
                let x = self.eval(b, k)?;
                if *n > 0 {
                    let m = *n as u64;
                    return Ok(Value { v: a.powi(&x.v, m), s: a.powi(&x.s, m) });
                }
                if self.negligible(&x) {
                    return Err(EvalError::Pole(b.to_string()));
                }
                let m = n.unsigned_abs();
                let v = a.div(&a.int(1), &a.powi(&x.v, m));
                // Relative error of the base is amplified by |n|.
                let rel = a.div(&x.s, &a.abs(&x.v));
                let s = a.mul(&a.mul(&a.abs(&v), &rel), &a.int(m as i64));
                Ok(Value { s: a.max(&s, &a.abs(&v)), v })
            }
            Node::Apply(f, arg) => {
                let x = self.eval(arg, k)?;
                let v = a.func(*f, &x.v);
                let s = match f {
                    Func::Sin | Func::Cos => a.max(&x.s, &a.int(1)),
                    Func::Exp => a.mul(&a.abs(&v), &a.max(&x.s, &a.int(1))),
                };
                Ok(Value { s: a.max(&s, &a.abs(&v)), v })
            }
            _ => self.eval(e, k),
        }
    }

    /// Probabilistic zero test: exact for constants, otherwise the
    /// expression must be negligible at every one of `samples` points.
    /// Points at which the expression has a pole are skipped.
    pub fn is_zero(&self, e: &Expr) -> bool {
        if let Some(c) = e.as_const() {
            return c.is_zero();
        }
        let mut good = 0;
        let mut k = 0;
        while good < self.config.samples {
            if k >= 8 * self.config.samples + 8 {
                self.warn(format!("zero test of {} hit poles at every sample point", e));
                return false;
            }
            if let Ok(v) = self.eval(e, k) {
                if !self.negligible(&v) {
                    return false;
                }
                good += 1;
            }
            k += 1;
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn ev() -> Evaluator {
        Evaluator::new(SampleConfig::default())
    }

    #[test]
    fn pythagorean_identity_is_zero() {
        let e = ev();
        assert!(e.is_zero(&parse("sin(th)^2 + cos(th)^2 - 1").unwrap()));
        assert!(e.is_zero(&parse("sin(2*th) - 2*sin(th)*cos(th)").unwrap()));
        assert!(!e.is_zero(&parse("x - 1/1000").unwrap()));
    }

    #[test]
    fn rational_identity_is_zero() {
        let e = ev();
        let s = parse("x/(x+y) + y/(x+y) - 1").unwrap();
        assert!(e.is_zero(&s));
        assert!(!e.is_zero(&parse("x/(x+y)").unwrap()));
    }

    #[test]
    fn large_magnitudes_do_not_fool_threshold() {
        let e = ev();
        let big = parse("(x^12*y^9 + 1)*(x^12*y^9 - 1) - x^24*y^18 + 1").unwrap();
        assert!(e.is_zero(&big));
    }

    #[test]
    fn points_are_deterministic() {
        let e1 = ev();
        let e2 = ev();
        assert_eq!(e1.coordinate(3, "x"), e2.coordinate(3, "x"));
        assert_ne!(e1.coordinate(3, "x"), e1.coordinate(4, "x"));
    }

    #[test]
    fn poles_are_reported() {
        let e = ev();
        let x = parse("1/(x - x + y - y + z)").unwrap();
        assert!(e.eval(&x, 0).is_ok());
    }

    #[test]
    fn rational_reconstruction() {
        let e = ev();
        let a = &e.arith;
        let v = a.rational(&Rational::new((-7).into(), 3.into()));
        let tol = a.div(&a.int(1), &BigFloat::from_u128(10u128.pow(30), a.p));
        assert_eq!(a.to_rational(&v, 1000, &tol), Some(Rational::new((-7).into(), 3.into())));
    }
}
