//! Concrete-syntax printing. Output parses back to the same formula.

use std::fmt;

use crate::term::{Constraint, Formula, Term};

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(&v.name),
            Term::Empty => f.write_str("{}"),
            Term::Cons(..) => {
                let (elems, tail) = self.set_spine();
                f.write_str("{")?;
                for (i, e) in elems.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{e}")?;
                }
                if !matches!(tail, Term::Empty) {
                    write!(f, " / {tail}")?;
                }
                f.write_str("}")
            }
            Term::Int(n) => {
                if n.sign() == num_bigint::Sign::Minus {
                    write!(f, "({n})")
                } else {
                    write!(f, "{n}")
                }
            }
            Term::Neg(a) => write!(f, "-({a})"),
            Term::Add(a, b) => write!(f, "{a} + {}", Paren(b)),
            Term::Sub(a, b) => write!(f, "{a} - {}", Paren(b)),
            Term::Scale(c, v) => {
                if c.sign() == num_bigint::Sign::Minus {
                    write!(f, "({c})*{v}")
                } else {
                    write!(f, "{c}*{v}")
                }
            }
            Term::Ur(name, args) if name == "list" => {
                f.write_str("[")?;
                write_list(f, args)?;
                f.write_str("]")
            }
            Term::Ur(name, args) => {
                f.write_str(name)?;
                if !args.is_empty() {
                    f.write_str("(")?;
                    write_list(f, args)?;
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

/// Parenthesizes right operands of `+`/`-` that are themselves sums.
struct Paren<'a>(&'a Term);

impl fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Term::Add(..) | Term::Sub(..) => write!(f, "({})", self.0),
            t => write!(f, "{t}"),
        }
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, ts: &[Term]) -> fmt::Result {
    for (i, t) in ts.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Constraint::*;
        match self {
            Eq(a, b) | Neq(a, b) | In(a, b) | Nin(a, b) | Leq(a, b) | Lt(a, b) | Gt(a, b)
            | Geq(a, b) => write!(f, "{a} {} {b}", self.name()),
            Un(a, b, c) | Inters(a, b, c) | Diff(a, b, c) | Nun(a, b, c) => {
                write!(f, "{}({a},{b},{c})", self.name())
            }
            Disj(a, b) | Size(a, b) | Subset(a, b) | Ndisj(a, b) => {
                write!(f, "{}({a},{b})", self.name())
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Atom(c) => write!(f, "{c}"),
            Formula::And(fs) => {
                for (i, g) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" & ")?;
                    }
                    match g {
                        Formula::Or(_) => write!(f, "({g})")?,
                        _ => write!(f, "{g}")?,
                    }
                }
                Ok(())
            }
            Formula::Or(fs) => {
                for (i, g) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" or ")?;
                    }
                    match g {
                        Formula::Or(_) => write!(f, "({g})")?,
                        _ => write!(f, "{g}")?,
                    }
                }
                Ok(())
            }
        }
    }
}
