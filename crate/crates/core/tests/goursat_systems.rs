use ctrlgeom::catalog;
use ctrlgeom::flags::{DerivedFlag, RefinedDerivedType};
use ctrlgeom::geometry::{Distribution, VectorField};
use ctrlgeom::goursat::{engel_rank, goursat_verdict, sfl_verdict, GoursatOptions, Linearization, Obstruction};
use ctrlgeom::{Evaluator, SampleConfig};

fn ev() -> Evaluator {
    Evaluator::new(SampleConfig::default())
}

fn rdt(v: &[&[usize]]) -> RefinedDerivedType {
    RefinedDerivedType(v.iter().map(|l| l.to_vec()).collect())
}

#[test]
fn example1_engel_rank_and_obstruction() {
    let ev = ev();
    let s = catalog::example1();
    let flag = DerivedFlag::compute(&ev, &s.d);
    assert_eq!(flag.refined_derived_type(&ev), rdt(&[&[4, 0], &[7, 3, 3], &[10, 6, 7], &[12, 9, 10], &[13, 13]]));
    assert_eq!(engel_rank(&ev, &flag.level(1).annihilator(&ev)), 2);
    let b = flag.intersection_bundle(&ev, 2);
    assert!(!b.is_integrable(&ev));
    let v = goursat_verdict(&ev, &s.d, &GoursatOptions::default());
    assert!(!v.is_goursat);
    match v.obstruction {
        Some(Obstruction::IntersectionNotIntegrable { level: 2, bracket }) => {
            // the witness is a bracket of the bundle that leaves it
            assert!(!b.contains(&ev, &bracket));
        }
        other => panic!("unexpected obstruction {:?}", other),
    }
}

#[test]
fn pvtol_is_not_goursat() {
    let ev = ev();
    let s = catalog::pvtol();
    let flag = DerivedFlag::compute(&ev, &s.d);
    assert_eq!(flag.refined_derived_type(&ev), rdt(&[&[3, 0], &[5, 2, 2], &[7, 2, 2], &[9, 9]]));
    let extend = |d: &Distribution, extra: &[&str]| {
        let mut g = d.gens.clone();
        g.extend(extra.iter().map(|e| VectorField::parse(&s.chart, e).unwrap()));
        Distribution::new(&s.chart, g)
    };
    let v1 = extend(&s.d, &["sin(th)*d_x1 - cos(th)*d_z1", "-h*cos(th)*d_x1 - h*sin(th)*d_z1 - d_th1"]);
    let v2 = extend(
        &v1,
        &[
            "-sin(th)*d_x + th1*cos(th)*d_x1 + cos(th)*d_z + th1*sin(th)*d_z1",
            "h*cos(th)*d_x + h*th1*sin(th)*d_x1 + h*sin(th)*d_z - h*th1*cos(th)*d_z1 + d_th",
        ],
    );
    assert!(flag.level(1).same_span(&ev, &v1));
    assert!(flag.level(2).same_span(&ev, &v2));
    let u = Distribution::parse(&s.chart, &["d_u1", "d_u2"]).unwrap();
    for i in 1..=2 {
        assert!(flag.cauchy_bundle(&ev, i).same_span(&ev, &u));
        assert!(flag.intersection_bundle(&ev, i).same_span(&ev, &u));
    }
    let v = goursat_verdict(&ev, &s.d, &GoursatOptions::default());
    assert!(!v.is_goursat);
    assert!(matches!(v.obstruction, Some(Obstruction::TypeMismatch(_))));
}

#[test]
fn charlet_is_not_static_feedback_linearizable() {
    let ev = ev();
    let s = catalog::charlet();
    let v = sfl_verdict(&ev, &s.d, &GoursatOptions::default());
    assert_ne!(v.class, Linearization::Static);
    assert_eq!(
        DerivedFlag::compute(&ev, &s.d).refined_derived_type(&ev),
        rdt(&[&[3, 0], &[5, 2, 2], &[7, 7]])
    );
}

#[test]
fn charlet_augmented_cauchy_bundles() {
    let ev = ev();
    let s = catalog::charlet();
    let aug = ctrlgeom::symmetry::augmented(&ev, &s.d, &s.group(&["X"])).unwrap();
    let flag = DerivedFlag::compute(&ev, &aug);
    assert_eq!(flag.refined_derived_type(&ev), rdt(&[&[4, 1], &[6, 3, 4], &[7, 7]]));
    let want = Distribution::parse(&s.chart, &["d_u1", "d_u2", "d_x4"]).unwrap();
    assert!(flag.intersection_bundle(&ev, 1).same_span(&ev, &want));
    let t = VectorField::parse(&s.chart, "d_t").unwrap();
    let dt = ctrlgeom::geometry::OneForm::differential(&s.chart, &ctrlgeom::Expr::symbol("t"));
    for x in flag.cauchy_bundle(&ev, 1).basis(&ev).gens {
        assert!(ev.is_zero(&dt.pair(&x)));
    }
    assert!(!flag.cauchy_bundle(&ev, 1).contains(&ev, &t));
}

#[test]
fn marino_original_is_not_static_feedback_linearizable() {
    let ev = ev();
    let s = catalog::marino();
    let v = sfl_verdict(&ev, &s.d, &GoursatOptions::default());
    assert_ne!(v.class, Linearization::Static);
    assert_eq!(
        DerivedFlag::compute(&ev, &s.d).refined_derived_type(&ev),
        rdt(&[&[3, 0], &[5, 2, 2], &[7, 3, 3], &[8, 8]])
    );
}
