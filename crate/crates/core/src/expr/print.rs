use super::{Expr, Node};
use num_traits::{One, Signed};
use std::fmt;

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Sum(ts) => {
                // Constant term last.
                let mut ts = ts.clone();
                if ts[0].is_const() {
                    let c = ts.remove(0);
                    ts.push(c);
                }
                for (i, t) in ts.iter().enumerate() {
                    let (c, _) = t.coefficient_split();
                    let neg = c.is_negative();
                    let body = if neg { t.neg() } else { t.clone() };
                    match (i, neg) {
                        (0, true) => write!(f, "-")?,
                        (0, false) => {}
                        (_, true) => write!(f, " - ")?,
                        (_, false) => write!(f, " + ")?,
                    }
                    write_term(f, &body)?;
                }
                Ok(())
            }
            _ => {
                let (c, _) = self.coefficient_split();
                if c.is_negative() {
                    write!(f, "-")?;
                    write_term(f, &self.neg())
                } else {
                    write_term(f, self)
                }
            }
        }
    }
}

/// Writes a term with a non-negative coefficient.
fn write_term(f: &mut fmt::Formatter<'_>, t: &Expr) -> fmt::Result {
    let (c, _) = t.coefficient_split();
    let mut num: Vec<String> = Vec::new();
    let mut den: Vec<String> = Vec::new();
    if !c.numer().is_one() {
        num.push(c.numer().to_string());
    }
    if !c.denom().is_one() {
        den.push(c.denom().to_string());
    }
    for (b, n) in t.monomial_factors() {
        let s = power_string(&b, n.abs());
        if n > 0 {
            num.push(s);
        } else {
            den.push(s);
        }
    }
    if num.is_empty() {
        num.push("1".to_string());
    }
    write!(f, "{}", num.join("*"))?;
    match den.len() {
        0 => Ok(()),
        1 => write!(f, "/{}", den[0]),
        _ => write!(f, "/({})", den.join("*")),
    }
}

fn power_string(b: &Expr, n: i64) -> String {
    let base = atom_string(b);
    if n == 1 {
        base
    } else {
        format!("{}^{}", base, n)
    }
}

fn atom_string(e: &Expr) -> String {
    match e.node() {
        Node::Symbol(s) => s.to_string(),
        Node::Apply(func, a) => format!("{}({})", func.name(), a),
        _ => format!("({})", e),
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;

    #[test]
    fn prints_fractions_and_signs() {
        let e = parse("-(3/4)*x/y + 2*sin(th)^2 - 1").unwrap();
        let s = e.to_string();
        assert_eq!(parse(&s).unwrap(), e);
        assert_eq!(parse("x2/x1").unwrap().to_string(), "x2/x1");
        assert_eq!(parse("1/(x+1)").unwrap().to_string(), "1/(x + 1)");
    }
}
