//! Randomized invariants, shared by the property tests and the acceptance
//! suite. Runs are deterministic.

use ctrlgeom::expr::{Func, Node, Rational};
use ctrlgeom::flags::{brunovsky, brunovsky_type, DerivedFlag, Signature};
use ctrlgeom::geometry::{AltForm, Chart, Distribution, OneForm, Role, VectorField};
use ctrlgeom::{parse, Evaluator, Expr, SampleConfig};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use std::collections::BTreeMap;
use std::sync::Arc;

const VARS: [&str; 4] = ["x", "y", "z", "w"];

fn chart() -> Arc<Chart> {
    Chart::from_names(&VARS.map(|v| (v, Role::Other)), &[]).unwrap()
}

fn ev() -> Evaluator {
    Evaluator::new(SampleConfig::default())
}

/// Small polynomials in the chart variables.
fn poly() -> impl Strategy<Value = Expr> {
    prop::collection::vec((-3i64..=3, 0usize..4, 0i64..=2, 0usize..4, 0i64..=1), 1..4).prop_map(|terms| {
        Expr::sum(
            terms
                .into_iter()
                .map(|(c, a, p, b, q)| {
                    let x = Expr::symbol(VARS[a]).pow(p).unwrap();
                    let y = Expr::symbol(VARS[b]).pow(q).unwrap();
                    Expr::int(c).mul(&x).mul(&y)
                })
                .collect(),
        )
    })
}

/// Unnormalized trees mixing the transcendental functions.
fn tree() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-4i64..=4).prop_map(|n| Expr::raw(Node::Const(Rational::from_integer(n.into())))),
        (0usize..3).prop_map(|i| Expr::raw(Node::Symbol(VARS[i].into()))),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(|v| Expr::raw(Node::Sum(v))),
            prop::collection::vec(inner.clone(), 2..3).prop_map(|v| Expr::raw(Node::Product(v))),
            (inner.clone(), 1i64..=3).prop_map(|(e, n)| Expr::raw(Node::Power(e, n))),
            (inner, 0usize..3).prop_map(|(e, f)| Expr::raw(Node::Apply([Func::Sin, Func::Cos, Func::Exp][f], e))),
        ]
    })
}

fn field() -> impl Strategy<Value = VectorField> {
    prop::collection::vec(poly(), 4).prop_map(|c| VectorField::new(chart(), c))
}

fn one_form() -> impl Strategy<Value = OneForm> {
    prop::collection::vec(poly(), 4).prop_map(|c| OneForm::new(chart(), c))
}

fn vanishes(ev: &Evaluator, x: &VectorField) -> bool {
    x.coeffs.iter().all(|c| ev.is_zero(c))
}

fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn run<S: Strategy>(cases: u32, s: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    runner(cases).run(&s, test).map_err(|e| e.to_string())
}

pub fn bracket_is_antisymmetric(cases: u32) -> Result<(), String> {
    run(cases, (field(), field()), |(x, y)| {
        let ev = ev();
        prop_assert!(vanishes(&ev, &x.bracket(&y).add(&y.bracket(&x))));
        Ok(())
    })
}

pub fn bracket_satisfies_jacobi(cases: u32) -> Result<(), String> {
    run(cases, (field(), field(), field()), |(x, y, z)| {
        let ev = ev();
        let j = x.bracket(&y.bracket(&z)).add(&y.bracket(&z.bracket(&x))).add(&z.bracket(&x.bracket(&y)));
        prop_assert!(vanishes(&ev, &j));
        Ok(())
    })
}

pub fn d_squared_vanishes(cases: u32) -> Result<(), String> {
    run(cases, (tree(), one_form()), |(f, w)| {
        let c = chart();
        let f = f.normalize().unwrap();
        prop_assert!(AltForm::function(&c, f).exterior_derivative().exterior_derivative().is_zero_const());
        prop_assert!(AltForm::from_one_form(&w).exterior_derivative().exterior_derivative().is_zero_const());
        Ok(())
    })
}

pub fn annihilator_pairs_to_zero(cases: u32) -> Result<(), String> {
    run(cases, prop::collection::vec(field(), 1..3), |gens| {
        let ev = ev();
        let d = Distribution::new(&chart(), gens);
        let ann = d.annihilator(&ev);
        prop_assert_eq!(ann.len() + d.rank(&ev), 4);
        for w in &ann {
            for x in &d.gens {
                prop_assert!(ev.is_zero(&w.pair(x)));
            }
        }
        Ok(())
    })
}

pub fn normalize_is_idempotent(cases: u32) -> Result<(), String> {
    run(cases, tree(), |e| {
        if let Ok(n) = e.normalize() {
            prop_assert_eq!(n.normalize().unwrap(), n.clone());
            prop_assert_eq!(parse(&n.to_string()).unwrap(), n);
        }
        Ok(())
    })
}

pub fn rank_is_modular(cases: u32) -> Result<(), String> {
    let gens = || prop::collection::vec(field(), 1..3);
    run(cases, (gens(), gens()), |(a, b)| {
        let ev = ev();
        let c = chart();
        let (a, b) = (Distribution::new(&c, a), Distribution::new(&c, b));
        let sum = a.sum(&ev, &b).rank(&ev);
        let meet = a.intersect(&ev, &b).rank(&ev);
        prop_assert_eq!(sum + meet, a.rank(&ev) + b.rank(&ev));
        Ok(())
    })
}

/// Relative error below 1e-20 at 40 digits with step 1e-15.
pub fn derivative_matches_central_difference(cases: u32) -> Result<(), String> {
    run(cases, (tree(), 0usize..4, 0usize..3), |(e, k, var)| {
        let Ok(e) = e.normalize() else { return Ok(()) };
        let ev = Evaluator::new(SampleConfig { digits: 40, ..SampleConfig::default() });
        let ar = &ev.arith;
        let x = VARS[var];
        let x0 = ev.coordinate(k, x);
        let h = Rational::new(1.into(), num_bigint::BigInt::from(10).pow(15));
        let at = |v: Rational| {
            let m: BTreeMap<String, Expr> = [(x.to_string(), Expr::constant(v))].into();
            e.substitute(&m).ok().and_then(|s| ev.eval(&s, k).ok())
        };
        let (Some(fp), Some(fm)) = (at(&x0 + &h), at(&x0 - &h)) else { return Ok(()) };
        let Ok(d) = ev.eval(&e.differentiate(x), k) else { return Ok(()) };
        let fd = ar.div(&ar.sub(&fp.v, &fm.v), &ar.rational(&(&h * Rational::from_integer(2.into()))));
        let scale = ar.max(&ar.abs(&d.v), &ar.max(&d.s, &ar.int(1)));
        let err = ar.div(&ar.abs(&ar.sub(&fd, &d.v)), &scale);
        let tol = ar.rational(&Rational::new(1.into(), num_bigint::BigInt::from(10).pow(20)));
        prop_assert!(ar.abs_le(&err, &tol), "{} d/d{}: error {}", e, x, err);
        Ok(())
    })
}

/// Generated normal forms: their deceleration is κ and their type is the
/// predicted Brunovsky type.
pub fn brunovsky_forms_have_their_signature(cases: u32) -> Result<(), String> {
    run(cases, (prop::collection::vec(0i64..=2, 1..4), 1i64..=2), |(mut rho, last)| {
        rho.push(last);
        let kappa = Signature(rho);
        let ev = ev();
        let d = brunovsky(&kappa).unwrap();
        let t = DerivedFlag::compute(&ev, &d).refined_derived_type(&ev);
        prop_assert_eq!(t.deceleration(), kappa.clone());
        let m: i64 = kappa.0.iter().sum();
        prop_assert_eq!(t, brunovsky_type(&kappa, m as usize).unwrap());
        Ok(())
    })
}

pub type Property = (&'static str, fn(u32) -> Result<(), String>, u32);

pub const ALL: [Property; 8] = [
    ("bracket antisymmetry", bracket_is_antisymmetric, 100),
    ("Jacobi identity", bracket_satisfies_jacobi, 100),
    ("d∘d = 0", d_squared_vanishes, 100),
    ("annihilator pairing", annihilator_pairs_to_zero, 100),
    ("normalize idempotence", normalize_is_idempotent, 100),
    ("rank modularity", rank_is_modular, 100),
    ("derivative vs central difference", derivative_matches_central_difference, 100),
    ("Brunovsky signature and type", brunovsky_forms_have_their_signature, 3),
];
