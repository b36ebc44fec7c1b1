//! Precedence-aware printer; output re-parses under the same table.

use super::expr::{Expr, Node, Scalar};
use super::parse::VarTable;
use num_rational::Rational64;

/// Prints in the given chart's names.
pub fn print_with(e: &Expr, table: &VarTable) -> String {
    let mut s = String::new();
    write_expr(e, table, Prec::Sum, &mut s);
    s
}

/// Prints in a generic chart (`x1..`, `u1..`); used for error messages.
pub(crate) fn print_canonical(e: &Expr) -> String {
    let vars = e.vars();
    let n = vars
        .iter()
        .map(|v| match v {
            super::JetVar::Independent(i) => i + 1,
            super::JetVar::Dependent { index, .. } => index.len(),
        })
        .max()
        .unwrap_or(1)
        .max(1);
    let m = vars
        .iter()
        .map(|v| match v {
            super::JetVar::Independent(_) => 0,
            super::JetVar::Dependent { dep, .. } => dep + 1,
        })
        .max()
        .unwrap_or(1)
        .max(1);
    print_with(e, &VarTable::xu(n, m))
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Sum,
    Product,
    Unary,
    Power,
}

fn write_scalar(s: &Scalar, out: &mut String) {
    match s {
        Scalar::Rational(r) => {
            if r.is_integer() {
                out.push_str(&r.numer().to_string());
            } else {
                out.push_str(&format!("{}/{}", r.numer(), r.denom()));
            }
        }
        Scalar::Float(x) => {
            // shortest representation that round-trips
            out.push_str(&format!("{x:?}"));
        }
    }
}

fn scalar_is_negative(s: &Scalar) -> bool {
    match s {
        Scalar::Rational(r) => *r < Rational64::from_integer(0),
        Scalar::Float(x) => *x < 0.0,
    }
}

fn write_expr(e: &Expr, table: &VarTable, ctx: Prec, out: &mut String) {
    match e.node() {
        Node::Const(c) => {
            let needs_parens = scalar_is_negative(c) && ctx > Prec::Sum;
            if needs_parens {
                out.push('(');
            }
            write_scalar(c, out);
            if needs_parens {
                out.push(')');
            }
        }
        Node::Var(v) => out.push_str(&table.name_of(v)),
        Node::Sum(terms) => {
            let needs_parens = ctx > Prec::Sum;
            if needs_parens {
                out.push('(');
            }
            for (k, t) in terms.iter().enumerate() {
                if k == 0 {
                    write_expr(t, table, Prec::Sum, out);
                    continue;
                }
                // render `+ (-a)` and `+ Neg(a)` as `- a`
                match t.node() {
                    Node::Neg(inner) => {
                        out.push_str(" - ");
                        write_expr(inner, table, Prec::Product, out);
                    }
                    Node::Const(c) if scalar_is_negative(c) => {
                        out.push_str(" - ");
                        write_scalar(&negate_scalar(c), out);
                    }
                    Node::Product(fs)
                        if fs
                            .first()
                            .and_then(|f| f.as_const())
                            .is_some_and(|c| scalar_is_negative(&c)) =>
                    {
                        out.push_str(" - ");
                        let mut fs2 = fs.clone();
                        let c = fs2[0].as_const().unwrap();
                        let flipped = negate_scalar(&c);
                        if flipped.is_one() {
                            fs2.remove(0);
                        } else {
                            fs2[0] = Expr::constant(flipped);
                        }
                        write_expr(&Expr::mul(fs2), table, Prec::Product, out);
                    }
                    _ => {
                        out.push_str(" + ");
                        write_expr(t, table, Prec::Sum, out);
                    }
                }
            }
            if needs_parens {
                out.push(')');
            }
        }
        Node::Product(factors) => {
            let needs_parens = ctx > Prec::Product;
            if needs_parens {
                out.push('(');
            }
            for (k, f) in factors.iter().enumerate() {
                if k > 0 {
                    out.push('*');
                }
                write_expr(f, table, Prec::Unary, out);
            }
            if needs_parens {
                out.push(')');
            }
        }
        Node::Neg(inner) => {
            let needs_parens = ctx > Prec::Sum;
            if needs_parens {
                out.push('(');
            }
            out.push('-');
            write_expr(inner, table, Prec::Unary, out);
            if needs_parens {
                out.push(')');
            }
        }
        Node::Quotient(a, b) => {
            let needs_parens = ctx > Prec::Product;
            if needs_parens {
                out.push('(');
            }
            write_expr(a, table, Prec::Unary, out);
            out.push('/');
            write_expr(b, table, Prec::Power, out);
            if needs_parens {
                out.push(')');
            }
        }
        Node::Power(base, q) => {
            write_expr(base, table, Prec::Power, out);
            out.push('^');
            if q.is_integer() {
                let v = *q.numer();
                if v < 0 {
                    out.push_str(&format!("({v})"));
                } else {
                    out.push_str(&v.to_string());
                }
            } else {
                out.push_str(&format!("({}/{})", q.numer(), q.denom()));
            }
        }
        Node::Unary(f, arg) => {
            out.push_str(f.name());
            out.push('(');
            write_expr(arg, table, Prec::Sum, out);
            out.push(')');
        }
    }
}

fn negate_scalar(s: &Scalar) -> Scalar {
    s.neg()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{parse, JetSpace, MultiIndex};

    #[test]
    fn prints_and_reparses() {
        let space = JetSpace::new(2, 1, 2).with_cap(4);
        let table = VarTable::xu(2, 1);
        for src in [
            "u_x^2/2 + u_y^2/2",
            "sqrt(1 + u_x^2 + u_y^2)",
            "-u_xx - u_yy",
            "(1 + u_x^2)^(3/2)",
            "x*u - 3/4*u_xy",
            "sin(x)*cos(y) - exp(u)/(2 + u_x^2)",
        ] {
            let e = parse(src, &space, &table).unwrap();
            let printed = print_with(&e, &table);
            let reparsed = parse(&printed, &space, &table)
                .unwrap_or_else(|err| panic!("`{printed}` failed to reparse: {err}"));
            assert_eq!(e, reparsed, "round-trip changed `{src}` -> `{printed}`");
        }
    }

    #[test]
    fn negative_leading_coefficient() {
        let e = Expr::neg(Expr::dependent(0, MultiIndex::new(vec![2])));
        assert_eq!(print_with(&e, &VarTable::xu(1, 1)), "-u_xx");
    }
}
