//! Closed-form time functions: parse, evaluate, differentiate symbolically,
//! and test constancy on a grid.
//!
//! A [`CoeffExpr`] is an immutable tree over the time variable `t`, the
//! constant `pi`, decimal literals, `sin`/`cos`/`exp`/`sqrt`, the four
//! arithmetic operators and powers with constant exponents. Trees are built
//! through the smart constructors (or the overloaded operators), which fold
//! constant subtrees and drop arithmetic identities so that derivatives stay
//! compact. No further algebraic normalization is attempted; whether an
//! expression is constant is decided numerically on a grid.

use std::fmt;
use std::sync::Arc;

use crate::{Error, Result, TimeGrid};

mod parse;
pub use parse::parse;

/// Default tolerance for constancy and algebraic residual checks.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryFn {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// A closed-form function of time.
#[derive(Debug, Clone, PartialEq)]
pub enum CoeffExpr {
    Literal(f64),
    /// The time variable `t`.
    Time,
    Pi,
    Unary(UnaryFn, Arc<CoeffExpr>),
    Binary(BinOp, Arc<CoeffExpr>, Arc<CoeffExpr>),
    /// Power with a constant exponent.
    Pow(Arc<CoeffExpr>, f64),
}

/// Outcome of sampling an expression for constancy on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constancy {
    pub constant: bool,
    /// Value at the first grid point, representative when constant.
    pub value: f64,
    /// Largest deviation from the first grid point's value.
    pub max_residual: f64,
}

impl CoeffExpr {
    pub fn literal(x: f64) -> Self {
        CoeffExpr::Literal(x)
    }

    pub fn time() -> Self {
        CoeffExpr::Time
    }

    pub fn pi() -> Self {
        CoeffExpr::Pi
    }

    pub fn sin(e: CoeffExpr) -> Self {
        Self::unary(UnaryFn::Sin, e)
    }

    pub fn cos(e: CoeffExpr) -> Self {
        Self::unary(UnaryFn::Cos, e)
    }

    pub fn exp(e: CoeffExpr) -> Self {
        Self::unary(UnaryFn::Exp, e)
    }

    pub fn sqrt(e: CoeffExpr) -> Self {
        Self::unary(UnaryFn::Sqrt, e)
    }

    fn unary(f: UnaryFn, e: CoeffExpr) -> Self {
        if f == UnaryFn::Neg {
            return -e;
        }
        if let CoeffExpr::Literal(x) = e {
            let v = match f {
                UnaryFn::Sin => x.sin(),
                UnaryFn::Cos => x.cos(),
                UnaryFn::Exp => x.exp(),
                UnaryFn::Sqrt => x.sqrt(),
                UnaryFn::Neg => unreachable!(),
            };
            // keep the node when folding would hide a domain error
            if v.is_finite() {
                return CoeffExpr::Literal(v);
            }
        }
        CoeffExpr::Unary(f, Arc::new(e))
    }

    /// Power with a constant exponent; the only power form in the grammar.
    pub fn pow(base: CoeffExpr, exponent: f64) -> Self {
        if exponent == 1.0 {
            return base;
        }
        if exponent == 0.0 {
            return CoeffExpr::Literal(1.0);
        }
        if let CoeffExpr::Literal(x) = base {
            let v = x.powf(exponent);
            if v.is_finite() {
                return CoeffExpr::Literal(v);
            }
        }
        CoeffExpr::Pow(Arc::new(base), exponent)
    }

    /// Evaluate at time `t`. Domain violations (division by zero, square root
    /// of a negative, fractional power of a negative) and non-finite results
    /// are reported as errors naming the offending subexpression.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let v = match self {
            CoeffExpr::Literal(x) => *x,
            CoeffExpr::Time => t,
            CoeffExpr::Pi => std::f64::consts::PI,
            CoeffExpr::Unary(f, e) => {
                let x = e.eval(t)?;
                match f {
                    UnaryFn::Sin => x.sin(),
                    UnaryFn::Cos => x.cos(),
                    UnaryFn::Exp => x.exp(),
                    UnaryFn::Neg => -x,
                    UnaryFn::Sqrt => {
                        if x < 0.0 {
                            return Err(self.eval_error(t, "square root of a negative value"));
                        }
                        x.sqrt()
                    }
                }
            }
            CoeffExpr::Binary(op, a, b) => {
                let x = a.eval(t)?;
                let y = b.eval(t)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(self.eval_error(t, "division by zero"));
                        }
                        x / y
                    }
                }
            }
            CoeffExpr::Pow(base, c) => {
                let x = base.eval(t)?;
                if x < 0.0 && c.fract() != 0.0 {
                    return Err(self.eval_error(t, "fractional power of a negative value"));
                }
                if x == 0.0 && *c < 0.0 {
                    return Err(self.eval_error(t, "negative power of zero"));
                }
                x.powf(*c)
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.eval_error(t, "non-finite result"))
        }
    }

    fn eval_error(&self, t: f64, reason: &'static str) -> Error {
        Error::Eval {
            t,
            reason,
            subexpr: self.to_string(),
        }
    }

    /// Symbolic derivative with respect to `t`. Closed: the result is again a
    /// `CoeffExpr`.
    pub fn differentiate(&self) -> CoeffExpr {
        use CoeffExpr as E;
        match self {
            E::Literal(_) | E::Pi => E::Literal(0.0),
            E::Time => E::Literal(1.0),
            E::Unary(f, e) => {
                let u = e.as_ref().clone();
                let du = e.differentiate();
                match f {
                    UnaryFn::Sin => E::cos(u) * du,
                    UnaryFn::Cos => -E::sin(u) * du,
                    UnaryFn::Exp => E::exp(u) * du,
                    UnaryFn::Neg => -du,
                    UnaryFn::Sqrt => du / (E::literal(2.0) * E::sqrt(u)),
                }
            }
            E::Binary(op, a, b) => {
                let (u, v) = (a.as_ref().clone(), b.as_ref().clone());
                let (du, dv) = (a.differentiate(), b.differentiate());
                match op {
                    BinOp::Add => du + dv,
                    BinOp::Sub => du - dv,
                    BinOp::Mul => du * v + u * dv,
                    BinOp::Div => (du * v.clone() - u * dv) / (v.clone() * v),
                }
            }
            E::Pow(base, c) => {
                let u = base.as_ref().clone();
                let du = base.differentiate();
                E::literal(*c) * E::pow(u, c - 1.0) * du
            }
        }
    }

    /// Sample the expression on `grid` and decide constancy: constant iff
    /// `max |e(t_i) - e(t_0)| <= tol * (1 + |e(t_0)|)`.
    pub fn is_constant(&self, grid: &TimeGrid, tol: f64) -> Result<Constancy> {
        let mut it = grid.iter();
        let v0 = self.eval(it.next().expect("grid has at least 2 points"))?;
        let mut max_residual = 0.0f64;
        for t in it {
            max_residual = max_residual.max((self.eval(t)? - v0).abs());
        }
        Ok(Constancy {
            constant: max_residual <= tol * (1.0 + v0.abs()),
            value: v0,
            max_residual,
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            CoeffExpr::Binary(BinOp::Add | BinOp::Sub, ..) => 0,
            CoeffExpr::Binary(BinOp::Mul | BinOp::Div, ..) => 1,
            CoeffExpr::Unary(UnaryFn::Neg, _) => 2,
            CoeffExpr::Pow(..) => 3,
            CoeffExpr::Literal(x) if *x < 0.0 => 2,
            _ => 4,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let prec = self.precedence();
        if prec < min_prec {
            write!(f, "(")?;
            self.fmt_prec(f, 0)?;
            return write!(f, ")");
        }
        match self {
            CoeffExpr::Literal(x) => write!(f, "{x}"),
            CoeffExpr::Time => write!(f, "t"),
            CoeffExpr::Pi => write!(f, "pi"),
            CoeffExpr::Unary(UnaryFn::Neg, e) => {
                write!(f, "-")?;
                e.fmt_prec(f, 2)
            }
            CoeffExpr::Unary(func, e) => {
                let name = match func {
                    UnaryFn::Sin => "sin",
                    UnaryFn::Cos => "cos",
                    UnaryFn::Exp => "exp",
                    UnaryFn::Sqrt => "sqrt",
                    UnaryFn::Neg => unreachable!(),
                };
                write!(f, "{name}(")?;
                e.fmt_prec(f, 0)?;
                write!(f, ")")
            }
            CoeffExpr::Binary(op, a, b) => {
                // adding a negative literal reads better as subtraction and
                // reparses to the identical value
                if let (BinOp::Add, CoeffExpr::Literal(x)) = (op, b.as_ref()) {
                    if *x < 0.0 && x.is_finite() {
                        a.fmt_prec(f, 0)?;
                        return write!(f, " - {}", -x);
                    }
                }
                let (sym, p) = match op {
                    BinOp::Add => (" + ", 0),
                    BinOp::Sub => (" - ", 0),
                    BinOp::Mul => (" * ", 1),
                    BinOp::Div => (" / ", 1),
                };
                a.fmt_prec(f, p)?;
                write!(f, "{sym}")?;
                // left-associative: the right operand must bind strictly tighter
                b.fmt_prec(f, p + 1)
            }
            CoeffExpr::Pow(base, c) => {
                base.fmt_prec(f, 4)?;
                if *c < 0.0 {
                    write!(f, "^({c})")
                } else {
                    write!(f, "^{c}")
                }
            }
        }
    }
}

impl fmt::Display for CoeffExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl From<f64> for CoeffExpr {
    fn from(x: f64) -> Self {
        CoeffExpr::Literal(x)
    }
}

// The operators are the tree constructors; each folds literal operands and
// drops arithmetic identities so derivative trees stay compact.

impl std::ops::Add for CoeffExpr {
    type Output = CoeffExpr;
    fn add(self, rhs: CoeffExpr) -> CoeffExpr {
        match (self, rhs) {
            (CoeffExpr::Literal(x), CoeffExpr::Literal(y)) => CoeffExpr::Literal(x + y),
            (CoeffExpr::Literal(0.0), b) => b,
            (a, CoeffExpr::Literal(0.0)) => a,
            (a, b) => CoeffExpr::Binary(BinOp::Add, Arc::new(a), Arc::new(b)),
        }
    }
}

impl std::ops::Sub for CoeffExpr {
    type Output = CoeffExpr;
    fn sub(self, rhs: CoeffExpr) -> CoeffExpr {
        match (self, rhs) {
            (CoeffExpr::Literal(x), CoeffExpr::Literal(y)) => CoeffExpr::Literal(x - y),
            (a, CoeffExpr::Literal(0.0)) => a,
            (CoeffExpr::Literal(0.0), b) => -b,
            (a, b) => CoeffExpr::Binary(BinOp::Sub, Arc::new(a), Arc::new(b)),
        }
    }
}

impl std::ops::Mul for CoeffExpr {
    type Output = CoeffExpr;
    fn mul(self, rhs: CoeffExpr) -> CoeffExpr {
        match (self, rhs) {
            (CoeffExpr::Literal(x), CoeffExpr::Literal(y)) => CoeffExpr::Literal(x * y),
            (CoeffExpr::Literal(0.0), _) | (_, CoeffExpr::Literal(0.0)) => {
                CoeffExpr::Literal(0.0)
            }
            (CoeffExpr::Literal(1.0), b) => b,
            (a, CoeffExpr::Literal(1.0)) => a,
            (a, b) => CoeffExpr::Binary(BinOp::Mul, Arc::new(a), Arc::new(b)),
        }
    }
}

impl std::ops::Div for CoeffExpr {
    type Output = CoeffExpr;
    fn div(self, rhs: CoeffExpr) -> CoeffExpr {
        match (self, rhs) {
            (CoeffExpr::Literal(x), CoeffExpr::Literal(y)) if y != 0.0 => {
                CoeffExpr::Literal(x / y)
            }
            (a, CoeffExpr::Literal(1.0)) => a,
            (a, b) => CoeffExpr::Binary(BinOp::Div, Arc::new(a), Arc::new(b)),
        }
    }
}

impl std::ops::Neg for CoeffExpr {
    type Output = CoeffExpr;
    fn neg(self) -> CoeffExpr {
        match self {
            CoeffExpr::Literal(x) => CoeffExpr::Literal(-x),
            // --x = x
            CoeffExpr::Unary(UnaryFn::Neg, inner) => inner.as_ref().clone(),
            other => CoeffExpr::Unary(UnaryFn::Neg, Arc::new(other)),
        }
    }
}
