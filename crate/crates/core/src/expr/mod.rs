//! Scalar expressions in chart coordinates and their evaluation as truncated
//! multivariate Taylor jets.
//!
//! An [`Expr`] is an abstract syntax tree over coordinate variables `x1..xn`,
//! numeric literals, `pi`, the usual elementary functions and arithmetic.
//! Expressions evaluate either to a plain value ([`Expr::eval`]) or to a
//! [`Jet`] carrying all partial derivatives up to a chosen total order.
//! Evaluation happens exactly as parsed; there is no simplification pass.

mod jet;
mod parse;

pub use jet::{Jet, JetSpace};
pub use parse::{parse_expr, parse_expr_with_names};

use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryFn {
    Neg,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl UnaryFn {
    fn name(self) -> &'static str {
        match self {
            UnaryFn::Neg => "-",
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Tan => "tan",
            UnaryFn::Sinh => "sinh",
            UnaryFn::Cosh => "cosh",
            UnaryFn::Tanh => "tanh",
            UnaryFn::Exp => "exp",
            UnaryFn::Ln => "ln",
            UnaryFn::Sqrt => "sqrt",
            UnaryFn::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Expression tree over chart coordinates. Variables are stored 0-based and
/// print 1-based (`x1`, `x2`, ...).
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Var(usize),
    Unary(UnaryFn, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Binary(BinOp::Add, Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Binary(BinOp::Sub, Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Binary(BinOp::Mul, Box::new(a), Box::new(b))
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::Binary(BinOp::Div, Box::new(a), Box::new(b))
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        Expr::Binary(BinOp::Pow, Box::new(a), Box::new(b))
    }

    pub fn neg(a: Expr) -> Expr {
        Expr::Unary(UnaryFn::Neg, Box::new(a))
    }

    pub fn unary(f: UnaryFn, a: Expr) -> Expr {
        Expr::Unary(f, Box::new(a))
    }

    pub fn exp(a: Expr) -> Expr {
        Expr::Unary(UnaryFn::Exp, Box::new(a))
    }

    pub fn sin(a: Expr) -> Expr {
        Expr::Unary(UnaryFn::Sin, Box::new(a))
    }

    pub fn cos(a: Expr) -> Expr {
        Expr::Unary(UnaryFn::Cos, Box::new(a))
    }

    pub fn sqrt(a: Expr) -> Expr {
        Expr::Unary(UnaryFn::Sqrt, Box::new(a))
    }

    /// Largest variable index appearing in the tree, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Num(_) | Expr::Pi => None,
            Expr::Var(i) => Some(*i),
            Expr::Unary(_, a) => a.max_var(),
            Expr::Binary(_, a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    pub fn is_constant(&self) -> bool {
        self.max_var().is_none()
    }

    /// Shift every variable index by `offset` (for embedding a factor chart
    /// into a product chart).
    pub fn shift_vars(&self, offset: usize) -> Expr {
        match self {
            Expr::Num(v) => Expr::Num(*v),
            Expr::Pi => Expr::Pi,
            Expr::Var(i) => Expr::Var(i + offset),
            Expr::Unary(f, a) => Expr::Unary(*f, Box::new(a.shift_vars(offset))),
            Expr::Binary(op, a, b) => Expr::Binary(
                *op,
                Box::new(a.shift_vars(offset)),
                Box::new(b.shift_vars(offset)),
            ),
        }
    }

    /// Plain value evaluation.
    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Pi => Ok(std::f64::consts::PI),
            Expr::Var(i) => {
                if *i < point.len() {
                    Ok(point[*i])
                } else {
                    Err(Error::Dimension(format!(
                        "variable x{} evaluated at a point of dimension {}",
                        i + 1,
                        point.len()
                    )))
                }
            }
            Expr::Unary(f, a) => {
                let x = a.eval(point)?;
                let y = match f {
                    UnaryFn::Neg => -x,
                    UnaryFn::Sin => x.sin(),
                    UnaryFn::Cos => x.cos(),
                    UnaryFn::Tan => {
                        if x.cos().abs() < 1e-14 {
                            return Err(self.domain_err("tan at a pole"));
                        }
                        x.tan()
                    }
                    UnaryFn::Sinh => x.sinh(),
                    UnaryFn::Cosh => x.cosh(),
                    UnaryFn::Tanh => x.tanh(),
                    UnaryFn::Exp => x.exp(),
                    UnaryFn::Ln => {
                        if x <= 0.0 {
                            return Err(self.domain_err("ln of non-positive argument"));
                        }
                        x.ln()
                    }
                    UnaryFn::Sqrt => {
                        if x < 0.0 {
                            return Err(self.domain_err("sqrt of negative argument"));
                        }
                        x.sqrt()
                    }
                    UnaryFn::Abs => x.abs(),
                };
                Ok(y)
            }
            Expr::Binary(op, a, b) => {
                let x = a.eval(point)?;
                let y = b.eval(point)?;
                match op {
                    BinOp::Add => Ok(x + y),
                    BinOp::Sub => Ok(x - y),
                    BinOp::Mul => Ok(x * y),
                    BinOp::Div => {
                        if y.abs() < 1e-300 {
                            return Err(self.domain_err("division by zero"));
                        }
                        Ok(x / y)
                    }
                    BinOp::Pow => {
                        let yr = y.round();
                        if (y - yr).abs() < 1e-12 {
                            if x == 0.0 && yr < 0.0 {
                                return Err(self.domain_err("zero base with negative exponent"));
                            }
                            Ok(x.powi(yr as i32))
                        } else {
                            if x <= 0.0 {
                                return Err(self
                                    .domain_err("non-integer power of non-positive base"));
                            }
                            Ok(x.powf(y))
                        }
                    }
                }
            }
        }
    }

    /// Evaluate as a jet of all partial derivatives through total order
    /// `space.order()` at `point`. The jet stores derivative values, not
    /// Taylor coefficients.
    pub fn eval_jet_in(&self, point: &[f64], space: &Arc<JetSpace>) -> Result<Jet> {
        if point.len() != space.n() {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, jet space expects {}",
                point.len(),
                space.n()
            )));
        }
        self.eval_jet_rec(point, space)
    }

    /// Convenience: evaluate at `point` with order `k` over `point.len()` variables.
    pub fn eval_jet(&self, point: &[f64], order: usize) -> Result<Jet> {
        let space = JetSpace::get(point.len(), order);
        self.eval_jet_in(point, &space)
    }

    fn eval_jet_rec(&self, point: &[f64], space: &Arc<JetSpace>) -> Result<Jet> {
        match self {
            Expr::Num(v) => Ok(Jet::constant(space.clone(), *v)),
            Expr::Pi => Ok(Jet::constant(space.clone(), std::f64::consts::PI)),
            Expr::Var(i) => {
                if *i >= space.n() {
                    return Err(Error::Dimension(format!(
                        "variable x{} out of range for {} coordinates",
                        i + 1,
                        space.n()
                    )));
                }
                Ok(Jet::variable(space.clone(), *i, point[*i]))
            }
            Expr::Unary(f, a) => {
                let j = a.eval_jet_rec(point, space)?;
                let out = match f {
                    UnaryFn::Neg => Ok(j.neg()),
                    UnaryFn::Sin => Ok(j.sin()),
                    UnaryFn::Cos => Ok(j.cos()),
                    UnaryFn::Tan => {
                        let c = j.cos();
                        if c.value().abs() < 1e-14 {
                            Err("tan at a pole".to_string())
                        } else {
                            Ok(j.sin().div(&c))
                        }
                    }
                    UnaryFn::Sinh => Ok(j.sinh()),
                    UnaryFn::Cosh => Ok(j.cosh()),
                    UnaryFn::Tanh => {
                        // cosh never vanishes
                        Ok(j.sinh().div(&j.cosh()))
                    }
                    UnaryFn::Exp => Ok(j.exp()),
                    UnaryFn::Ln => {
                        if j.value() <= 0.0 {
                            Err("ln of non-positive argument".to_string())
                        } else {
                            Ok(j.ln())
                        }
                    }
                    UnaryFn::Sqrt => {
                        if j.value() <= 0.0 {
                            Err("sqrt of non-positive argument".to_string())
                        } else {
                            Ok(j.sqrt())
                        }
                    }
                    UnaryFn::Abs => {
                        if j.value() > 0.0 {
                            Ok(j)
                        } else if j.value() < 0.0 {
                            Ok(j.neg())
                        } else {
                            Err("abs is not differentiable at zero".to_string())
                        }
                    }
                };
                out.map_err(|detail| self.domain_err(&detail))
            }
            Expr::Binary(op, a, b) => match op {
                BinOp::Add => Ok(a.eval_jet_rec(point, space)?.add(&b.eval_jet_rec(point, space)?)),
                BinOp::Sub => Ok(a.eval_jet_rec(point, space)?.sub(&b.eval_jet_rec(point, space)?)),
                BinOp::Mul => Ok(a.eval_jet_rec(point, space)?.mul(&b.eval_jet_rec(point, space)?)),
                BinOp::Div => {
                    let num = a.eval_jet_rec(point, space)?;
                    let den = b.eval_jet_rec(point, space)?;
                    if den.value().abs() < 1e-300 {
                        return Err(self.domain_err("division by zero"));
                    }
                    Ok(num.div(&den))
                }
                BinOp::Pow => {
                    // The exponent must be constant; one differentiation rule.
                    if !b.is_constant() {
                        return Err(self.domain_err("exponent must be a constant expression"));
                    }
                    let e = b.eval(&[])?;
                    let base = a.eval_jet_rec(point, space)?;
                    let er = e.round();
                    if (e - er).abs() < 1e-12 {
                        base.powi(er as i64).map_err(|d| self.domain_err(&d))
                    } else if base.value() > 0.0 {
                        Ok(base.powf(e))
                    } else {
                        Err(self.domain_err("non-integer power of non-positive base"))
                    }
                }
            },
        }
    }

    fn domain_err(&self, detail: &str) -> Error {
        Error::Domain {
            expr: self.to_string(),
            detail: detail.to_string(),
        }
    }

    /// Symbolic partial derivative with respect to variable `v` (0-based).
    /// Constant subtrees fold to keep the output readable; no other
    /// simplification happens.
    pub fn diff(&self, v: usize) -> Expr {
        match self {
            Expr::Num(_) | Expr::Pi => Expr::Num(0.0),
            Expr::Var(i) => Expr::Num(if *i == v { 1.0 } else { 0.0 }),
            Expr::Unary(f, a) => {
                let da = a.diff(v);
                if is_zero(&da) {
                    return Expr::Num(0.0);
                }
                let outer = match f {
                    UnaryFn::Neg => return fold_neg(da),
                    UnaryFn::Sin => Expr::cos((**a).clone()),
                    UnaryFn::Cos => Expr::neg(Expr::sin((**a).clone())),
                    UnaryFn::Tan => Expr::div(
                        Expr::num(1.0),
                        Expr::pow(Expr::cos((**a).clone()), Expr::num(2.0)),
                    ),
                    UnaryFn::Sinh => Expr::unary(UnaryFn::Cosh, (**a).clone()),
                    UnaryFn::Cosh => Expr::unary(UnaryFn::Sinh, (**a).clone()),
                    UnaryFn::Tanh => Expr::div(
                        Expr::num(1.0),
                        Expr::pow(Expr::unary(UnaryFn::Cosh, (**a).clone()), Expr::num(2.0)),
                    ),
                    UnaryFn::Exp => Expr::exp((**a).clone()),
                    UnaryFn::Ln => Expr::div(Expr::num(1.0), (**a).clone()),
                    UnaryFn::Sqrt => Expr::div(
                        Expr::num(0.5),
                        Expr::sqrt((**a).clone()),
                    ),
                    UnaryFn::Abs => Expr::div(
                        (**a).clone(),
                        Expr::unary(UnaryFn::Abs, (**a).clone()),
                    ),
                };
                fold_mul(outer, da)
            }
            Expr::Binary(op, a, b) => {
                let (a, b) = (&**a, &**b);
                match op {
                    BinOp::Add => fold_add(a.diff(v), b.diff(v)),
                    BinOp::Sub => fold_sub(a.diff(v), b.diff(v)),
                    BinOp::Mul => fold_add(
                        fold_mul(a.diff(v), b.clone()),
                        fold_mul(a.clone(), b.diff(v)),
                    ),
                    BinOp::Div => fold_sub(
                        fold_div(a.diff(v), b.clone()),
                        fold_div(
                            fold_mul(a.clone(), b.diff(v)),
                            Expr::pow(b.clone(), Expr::num(2.0)),
                        ),
                    ),
                    BinOp::Pow => {
                        // exponent is constant by construction
                        let da = a.diff(v);
                        if is_zero(&da) {
                            return Expr::Num(0.0);
                        }
                        let e = b.clone();
                        let em1 = fold_sub(e.clone(), Expr::num(1.0));
                        fold_mul(fold_mul(e, Expr::pow(a.clone(), em1)), da)
                    }
                }
            }
        }
    }

    /// Render with custom coordinate names instead of `x1..xn`.
    pub fn to_text(&self, names: &[String]) -> String {
        let mut s = String::new();
        self.fmt_prec(&mut s, 0, Some(names));
        s
    }

    fn fmt_prec(&self, out: &mut String, parent_prec: u8, names: Option<&[String]>) {
        let prec = self.prec();
        let need_paren = prec < parent_prec;
        if need_paren {
            out.push('(');
        }
        match self {
            Expr::Num(v) => out.push_str(&format!("{}", v)),
            Expr::Pi => out.push_str("pi"),
            Expr::Var(i) => match names {
                Some(ns) if *i < ns.len() => out.push_str(&ns[*i]),
                _ => out.push_str(&format!("x{}", i + 1)),
            },
            Expr::Unary(UnaryFn::Neg, a) => {
                out.push('-');
                a.fmt_prec(out, 3, names);
            }
            Expr::Unary(f, a) => {
                out.push_str(f.name());
                out.push('(');
                a.fmt_prec(out, 0, names);
                out.push(')');
            }
            Expr::Binary(op, a, b) => {
                // parse is left-associative, so right operands of + and *
                // parenthesize at equal precedence to keep round-trips exact
                let (lp, rp, sym) = match op {
                    BinOp::Add => (1, 2, " + "),
                    BinOp::Sub => (1, 2, " - "),
                    BinOp::Mul => (2, 3, "*"),
                    BinOp::Div => (2, 3, "/"),
                    BinOp::Pow => (5, 4, "^"),
                };
                a.fmt_prec(out, lp, names);
                out.push_str(sym);
                b.fmt_prec(out, rp, names);
            }
        }
        if need_paren {
            out.push(')');
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::Num(_) | Expr::Pi | Expr::Var(_) => 6,
            Expr::Unary(UnaryFn::Neg, _) => 3,
            Expr::Unary(..) => 6,
            Expr::Binary(BinOp::Add, ..) | Expr::Binary(BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul, ..) | Expr::Binary(BinOp::Div, ..) => 2,
            Expr::Binary(BinOp::Pow, ..) => 4,
        }
    }
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 1.0)
}

fn fold_add(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        b
    } else if is_zero(&b) {
        a
    } else {
        Expr::add(a, b)
    }
}

fn fold_sub(a: Expr, b: Expr) -> Expr {
    if is_zero(&b) {
        a
    } else if is_zero(&a) {
        fold_neg(b)
    } else if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        Expr::Num(x - y)
    } else {
        Expr::sub(a, b)
    }
}

fn fold_mul(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) || is_zero(&b) {
        Expr::Num(0.0)
    } else if is_one(&a) {
        b
    } else if is_one(&b) {
        a
    } else {
        Expr::mul(a, b)
    }
}

fn fold_div(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        Expr::Num(0.0)
    } else if is_one(&b) {
        a
    } else {
        Expr::div(a, b)
    }
}

fn fold_neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        other => Expr::neg(other),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.fmt_prec(&mut s, 0, None);
        f.write_str(&s)
    }
}
