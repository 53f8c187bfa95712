use super::chart::Chart;
use crate::expr::{parse_with, Expr, ParseError};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Vector field in the coordinate frame of a chart.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub chart: Arc<Chart>,
    pub coeffs: Vec<Expr>,
}

/// One-form in the coordinate coframe of a chart.
#[derive(Clone, Debug, PartialEq)]
pub struct OneForm {
    pub chart: Arc<Chart>,
    pub coeffs: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FieldError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("vector field is not linear in the d_ basis: {0}")]
    NotLinear(String),
}

impl VectorField {
    pub fn new(chart: Arc<Chart>, coeffs: Vec<Expr>) -> VectorField {
        assert_eq!(coeffs.len(), chart.dim());
        VectorField { chart, coeffs }
    }

    pub fn zero(chart: &Arc<Chart>) -> VectorField {
        VectorField::new(chart.clone(), vec![Expr::zero(); chart.dim()])
    }

    /// The coordinate field d/d(name).
    pub fn coordinate(chart: &Arc<Chart>, name: &str) -> Option<VectorField> {
        let i = chart.index_of(name)?;
        let mut v = VectorField::zero(chart);
        v.coeffs[i] = Expr::one();
        Some(v)
    }

    /// Parses `c1*d_x1 + c2*d_x2 + ...` where `d_<coord>` is the coordinate field.
    pub fn parse(chart: &Arc<Chart>, s: &str) -> Result<VectorField, FieldError> {
        let basis = |n: &str| n.strip_prefix("d_").is_some_and(|c| chart.index_of(c).is_some());
        let e = parse_with(s, &|n| chart.is_known(n) || basis(n))?;
        let mut coeffs = Vec::with_capacity(chart.dim());
        let mut rest = BTreeMap::new();
        for c in chart.coords() {
            let d = format!("d_{}", c.name);
            let k = e.differentiate(&d);
            if k.free_symbols().iter().any(|s| s.starts_with("d_")) {
                return Err(FieldError::NotLinear(s.to_string()));
            }
            coeffs.push(k);
            rest.insert(d, Expr::zero());
        }
        let remainder = e.substitute(&rest).expect("substituting zero into a polynomial");
        if !remainder.is_zero_const() {
            return Err(FieldError::NotLinear(s.to_string()));
        }
        Ok(VectorField::new(chart.clone(), coeffs))
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero_const(&self) -> bool {
        self.coeffs.iter().all(Expr::is_zero_const)
    }

    /// Directional derivative X(f).
    pub fn apply(&self, f: &Expr) -> Expr {
        let terms = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero_const())
            .map(|(i, c)| c.mul(&f.differentiate(self.chart.name(i))))
            .collect();
        Expr::sum(terms)
    }

    pub fn bracket(&self, other: &VectorField) -> VectorField {
        let n = self.dim();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.apply(&other.coeffs[i]).sub(&other.apply(&self.coeffs[i])));
        }
        VectorField::new(self.chart.clone(), out)
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        let c = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.add(b)).collect();
        VectorField::new(self.chart.clone(), c)
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        let c = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.sub(b)).collect();
        VectorField::new(self.chart.clone(), c)
    }

    pub fn scale(&self, f: &Expr) -> VectorField {
        VectorField::new(self.chart.clone(), self.coeffs.iter().map(|c| c.mul(f)).collect())
    }

    /// Linear combination sum_i c_i X_i.
    pub fn combination(chart: &Arc<Chart>, cs: &[Expr], xs: &[VectorField]) -> VectorField {
        let n = chart.dim();
        let coeffs = (0..n)
            .map(|i| {
                Expr::sum(
                    cs.iter()
                        .zip(xs)
                        .filter(|(c, x)| !c.is_zero_const() && !x.coeffs[i].is_zero_const())
                        .map(|(c, x)| c.mul(&x.coeffs[i]))
                        .collect(),
                )
            })
            .collect();
        VectorField::new(chart.clone(), coeffs)
    }

    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Result<VectorField, crate::expr::ExprError> {
        let mut c = Vec::with_capacity(self.dim());
        for e in &self.coeffs {
            c.push(e.substitute(map)?);
        }
        Ok(VectorField::new(self.chart.clone(), c))
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero_const() {
                continue;
            }
            let name = self.chart.name(i);
            let s = c.to_string();
            let simple = !s[1..].contains([' ', '/']);
            let (neg, body) = match s.strip_prefix('-') {
                Some(b) if simple => (true, b.to_string()),
                _ => (false, s.clone()),
            };
            if !first {
                f.write_str(if neg { " - " } else { " + " })?;
            } else if neg {
                f.write_str("-")?;
            }
            first = false;
            if body == "1" {
                write!(f, "d_{}", name)?;
            } else if simple {
                write!(f, "{}*d_{}", body, name)?;
            } else {
                write!(f, "({})*d_{}", body, name)?;
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

impl OneForm {
    pub fn new(chart: Arc<Chart>, coeffs: Vec<Expr>) -> OneForm {
        assert_eq!(coeffs.len(), chart.dim());
        OneForm { chart, coeffs }
    }

    /// The exact form df.
    pub fn differential(chart: &Arc<Chart>, f: &Expr) -> OneForm {
        let c = chart.coords().iter().map(|c| f.differentiate(&c.name)).collect();
        OneForm::new(chart.clone(), c)
    }

    pub fn pair(&self, x: &VectorField) -> Expr {
        Expr::sum(
            self.coeffs
                .iter()
                .zip(&x.coeffs)
                .filter(|(a, b)| !a.is_zero_const() && !b.is_zero_const())
                .map(|(a, b)| a.mul(b))
                .collect(),
        )
    }
}

impl fmt::Display for OneForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero_const() {
                continue;
            }
            let name = self.chart.name(i);
            if c.is_one() {
                parts.push(format!("d{}", name));
            } else {
                parts.push(format!("({})*d{}", c, name));
            }
        }
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Role;

    fn chart() -> Arc<Chart> {
        Chart::from_names(&[("t", Role::Time), ("x", Role::State), ("u", Role::Control)], &[]).unwrap()
    }

    #[test]
    fn parse_and_print_round_trip() {
        let c = chart();
        let v = VectorField::parse(&c, "d_t + u*d_x - (x^2 + 1)*d_u").unwrap();
        assert_eq!(v.coeffs[1], Expr::symbol("u"));
        let again = VectorField::parse(&c, &v.to_string()).unwrap();
        assert_eq!(v, again);
        assert!(VectorField::parse(&c, "d_t*d_x").is_err());
        assert!(VectorField::parse(&c, "d_t + 1").is_err());
        assert!(VectorField::parse(&c, "d_y").is_err());
    }

    #[test]
    fn bracket_of_coordinate_fields() {
        let c = chart();
        let x = VectorField::parse(&c, "d_t + u*d_x").unwrap();
        let y = VectorField::parse(&c, "d_u").unwrap();
        let b = y.bracket(&x);
        assert_eq!(b, VectorField::parse(&c, "d_x").unwrap());
    }
}
