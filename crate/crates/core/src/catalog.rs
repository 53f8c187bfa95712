//! Worked example systems used by tests, benchmarks and the CLI fixtures.

use crate::geometry::{Chart, Distribution, Role, VectorField};
use std::sync::Arc;

/// A control system with optional symmetry generators.
#[derive(Clone, Debug)]
pub struct System {
    pub chart: Arc<Chart>,
    pub d: Distribution,
    pub symmetries: Vec<(String, VectorField)>,
}

impl System {
    fn build(coords: &[(&str, Role)], constants: &[&str], gens: &[&str], syms: &[(&str, &str)]) -> System {
        let chart = Chart::from_names(coords, constants).expect("catalog chart");
        let d = Distribution::parse(&chart, gens).expect("catalog distribution");
        let symmetries = syms
            .iter()
            .map(|(n, s)| (n.to_string(), VectorField::parse(&chart, s).expect("catalog symmetry")))
            .collect();
        System { chart, d, symmetries }
    }

    pub fn symmetry(&self, name: &str) -> &VectorField {
        &self.symmetries.iter().find(|s| s.0 == name).expect("known symmetry").1
    }

    /// The distribution spanned by the named symmetries.
    pub fn group(&self, names: &[&str]) -> Distribution {
        Distribution::new(&self.chart, names.iter().map(|n| self.symmetry(n).clone()).collect())
    }
}

fn coords<'a>(t: bool, states: &[&'a str], controls: &[&'a str]) -> Vec<(&'a str, Role)> {
    let mut c = Vec::new();
    if t {
        c.push(("t", Role::Time));
    }
    c.extend(states.iter().map(|s| (*s, Role::State)));
    c.extend(controls.iter().map(|s| (*s, Role::Control)));
    c
}

/// Rank 3 on R^7 with a one-dimensional translation symmetry in x4.
pub fn charlet() -> System {
    System::build(
        &coords(true, &["x1", "x2", "x3", "x4"], &["u1", "u2"]),
        &[],
        &["d_t + x2*d_x1 + u1*d_x2 + u2*d_x3 + x3*(1 - u1)*d_x4", "d_u1", "d_u2"],
        &[("X", "d_x4")],
    )
}

/// Rank 3 Goursat bundle on R^7 that is only orbitally linearizable.
pub fn example0() -> System {
    System::build(
        &coords(true, &["x1", "x2", "x3", "x4"], &["u1", "u2"]),
        &[],
        &["d_t + (x2 + u2*x3)*d_x1 + (x3 + u2*x1)*d_x2 + u1*d_x3 + u2*d_x4", "d_u1", "d_u2"],
        &[],
    )
}

/// Rank 4 on R^13 whose first derived bundle has Engel rank 2.
pub fn example1() -> System {
    System::build(
        &coords(true, &["x1", "x2", "x3", "x4", "x5", "x6"], &["u1", "u2", "u3", "v1", "v2", "v3"]),
        &[],
        &[
            "d_t + (x2 + u2*x3)*d_x1 + (x3 + u2*x1)*d_x2 + (x4 + u3*x5)*d_x3 + (u3*x4 + x5)*d_x4 \
             + u1*d_x5 + u2*d_x6 + v1*d_u2 + v2*d_v1 + v3*d_v2",
            "d_v3",
            "d_u3",
            "d_u1",
        ],
        &[],
    )
}

/// Rank 3 on R^8 with a scaling symmetry.
pub fn marino() -> System {
    System::build(
        &coords(true, &["x1", "x2", "x3", "x4", "x5"], &["u1", "u2"]),
        &[],
        &["d_t + (x5*x3 + x2)*d_x1 + (x5*x1 + x3)*d_x2 + u1*d_x3 + x5*d_x4 + u2*d_x5", "d_u1", "d_u2"],
        &[("X", "x1*d_x1 + x2*d_x2 + x3*d_x3 + u1*d_u1")],
    )
}

/// Rank 3 on R^10 with a two-dimensional symmetry group.
pub fn w_system() -> System {
    System::build(
        &coords(true, &["x1", "x2", "x3", "x4", "x5", "x6", "x7"], &["u1", "u2"]),
        &[],
        &[
            "d_t + (x1*u1 + x2)*d_x1 + u2*d_x2 + (u1*x1^2 + x1*x2 + x4)*d_x3 + x5*d_x4 + x6*d_x5 + x7*d_x6 + u1*d_x7",
            "d_u1",
            "d_u2",
        ],
        &[("Y1", "x1*d_x1 + x2*d_x2 + x1^2*d_x3 + u2*d_u2"), ("Y2", "t*d_x3 + d_x4")],
    )
}

/// Planar vertical take-off and landing aircraft with its eight-dimensional
/// symmetry algebra; h is the roll coupling constant.
pub fn pvtol() -> System {
    System::build(
        &coords(true, &["x", "x1", "z", "z1", "th", "th1"], &["u1", "u2"]),
        &["h"],
        &[
            "d_t + x1*d_x + (-u1*sin(th) + h*u2*cos(th))*d_x1 + z1*d_z + (u1*cos(th) + h*u2*sin(th) - 1)*d_z1 \
             + th1*d_th + u2*d_th1",
            "d_u1",
            "d_u2",
        ],
        &[
            (
                "X1",
                "h*sin(th)^2*cos(th)*d_x + h*th1*(3*cos(th)^2 - 1)*sin(th)*d_x1 + (x - h*sin(th)*cos(th)^2)*d_z \
                 + (x1 + 2*h*th1*cos(th) - 3*h*th1*cos(th)^3)*d_z1 + sin(th)^2*d_th + 2*th1*sin(th)*cos(th)*d_th1 \
                 + cos(th)*sin(th)*(5*h*th1^2 - u1)*d_u1 + (2*th1^2*(2*cos(th)^2 - 1) + 2*u2*sin(th)*cos(th))*d_u2",
            ),
            (
                "X2",
                "h*sin(th)*cos(th)^2*d_x + h*th1*cos(th)*(3*cos(th)^2 - 2)*d_x1 - (h*cos(th)^3 + t^2/2 + z)*d_z \
                 + (3*h*th1*cos(th)^2*sin(th) - z1 - t)*d_z1 + cos(th)*sin(th)*d_th + th1*(2*cos(th)^2 - 1)*d_th1 \
                 + ((5*h*th1^2 - u1)*cos(th)^2 - 2*h*th1^2)*d_u1 \
                 + (u2*(2*cos(th)^2 - 1) - 4*th1^2*sin(th)*cos(th))*d_u2",
            ),
            ("X3", "(t^2/2 + z)*d_x + (t + z1)*d_x1 - x*d_z - x1*d_z1 - d_th"),
            ("X4", "(x - h*sin(th))*d_x + (x1 - h*th1*cos(th))*d_x1 + (t^2/2 + h*cos(th) + z)*d_z + (t + z1 - h*th1*sin(th))*d_z1 + (u1 - h*th1^2)*d_u1"),
            ("X5", "t*d_x + d_x1"),
            ("X6", "d_x"),
            ("X7", "t*d_z + d_z1"),
            ("X8", "d_z"),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Evaluator, SampleConfig};
    use crate::geometry::pointwise;
    use crate::symmetry::is_infinitesimal_symmetry;

    #[test]
    fn catalog_symmetries_are_symmetries() {
        let ev = Evaluator::new(SampleConfig::default());
        for s in [charlet(), marino(), w_system(), pvtol()] {
            for (n, x) in &s.symmetries {
                assert!(is_infinitesimal_symmetry(&ev, x, &s.d), "{}", n);
            }
        }
    }

    #[test]
    fn pvtol_algebra_has_rank_eight_at_every_point() {
        // Elimination over eight fields with mixed magnitudes; an error
        // model that compounds scales reported rank 7 at points 0 and 4.
        let ev = Evaluator::new(SampleConfig::default());
        let s = pvtol();
        let g = s.group(&["X1", "X2", "X3", "X4", "X5", "X6", "X7", "X8"]);
        for k in 0..8 {
            let v = pointwise::fields_at(&ev, &g.gens, k).unwrap();
            assert_eq!(pointwise::rank_of(&ev, 9, &v), 8, "point {}", k);
        }
    }
}
