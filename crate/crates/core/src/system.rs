//! Second-order linear time-varying systems:
//! `a2(t) y'' + a1(t) y' + a0(t) y = x(t)` for `t >= t0`, with an optional
//! initial state. Includes JSON file I/O, the structure function and
//! commutativity invariant of a system, and a generator that manufactures
//! systems guaranteed to be eligible for a commutative pair.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::expr::{parse, CoeffExpr, Constancy};
use crate::{Error, Result, TimeGrid};

/// Output value and output derivative at the initial time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub y0: f64,
    pub dy0: f64,
}

impl InitialState {
    pub fn new(y0: f64, dy0: f64) -> Result<Self> {
        if y0.is_finite() && dy0.is_finite() {
            Ok(Self { y0, dy0 })
        } else {
            Err(Error::InvalidInitialState)
        }
    }

    pub fn zero() -> Self {
        Self { y0: 0.0, dy0: 0.0 }
    }

    pub fn is_zero(&self) -> bool {
        self.y0 == 0.0 && self.dy0 == 0.0
    }
}

/// A second-order linear time-varying system.
///
/// The leading coefficient must be strictly positive on the working grid;
/// a sign change would drag `a2^0.5` into complex arithmetic, which this
/// crate does not model.
#[derive(Debug, Clone, PartialEq)]
pub struct LTVSystem {
    pub a2: CoeffExpr,
    pub a1: CoeffExpr,
    pub a0: CoeffExpr,
    pub t0: f64,
    pub ic: Option<InitialState>,
}

/// On-disk JSON schema: expression strings plus the initial time.
#[derive(Serialize, Deserialize)]
struct SystemFile {
    a2: String,
    a1: String,
    a0: String,
    t0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    ic: Option<InitialState>,
}

impl LTVSystem {
    /// Build a system, validating that `a2 > 0` and that all coefficients
    /// evaluate finitely on `grid`.
    pub fn new(
        a2: CoeffExpr,
        a1: CoeffExpr,
        a0: CoeffExpr,
        t0: f64,
        ic: Option<InitialState>,
        grid: &TimeGrid,
    ) -> Result<Self> {
        if !t0.is_finite() {
            return Err(Error::Config("t0 must be finite".into()));
        }
        if let Some(state) = &ic {
            InitialState::new(state.y0, state.dy0)?;
        }
        for t in grid.iter() {
            let v = a2.eval(t)?;
            if v <= 0.0 {
                return Err(Error::LeadingCoefficient { t, value: v });
            }
            a1.eval(t)?;
            a0.eval(t)?;
        }
        Ok(Self { a2, a1, a0, t0, ic })
    }

    /// Parse a system from its JSON document, validating on the default
    /// working grid `[t0, t0 + 10]`.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: SystemFile = serde_json::from_str(text)?;
        let a2 = parse(&file.a2)?;
        let a1 = parse(&file.a1)?;
        let a0 = parse(&file.a0)?;
        let grid = TimeGrid::default_span(file.t0);
        Self::new(a2, a1, a0, file.t0, file.ic, &grid)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let file = SystemFile {
            a2: self.a2.to_string(),
            a1: self.a1.to_string(),
            a0: self.a0.to_string(),
            t0: self.t0,
            ic: self.ic,
        };
        serde_json::to_string_pretty(&file).expect("system file serialization cannot fail")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    /// The initial state, defaulting to zero (the relaxed case) when unset.
    pub fn initial_state(&self) -> InitialState {
        self.ic.unwrap_or_else(InitialState::zero)
    }

    /// The structure function `f = a2^(-1/2) * (2*a1 - a2') / 4`.
    pub fn structure_function(&self) -> CoeffExpr {
        let da2 = self.a2.differentiate();
        CoeffExpr::pow(self.a2.clone(), -0.5)
            * (CoeffExpr::literal(2.0) * self.a1.clone() - da2)
            / CoeffExpr::literal(4.0)
    }

    /// The commutativity invariant `a0 - f^2 - a2^(1/2) * f'` as an
    /// expression; the system admits a non-trivial commutative pair exactly
    /// when this is constant.
    pub fn invariant_expr(&self) -> CoeffExpr {
        let f = self.structure_function();
        let df = f.differentiate();
        self.a0.clone() - f.clone() * f - CoeffExpr::pow(self.a2.clone(), 0.5) * df
    }

    /// Test the invariant for constancy on `grid`.
    pub fn commutativity_invariant(&self, grid: &TimeGrid, tol: f64) -> Result<Constancy> {
        self.invariant_expr().is_constant(grid, tol)
    }
}

/// Manufacture a system with prescribed leading coefficient, structure
/// function and (constant) invariant value:
/// `a1 = 2*a2^(1/2)*f + a2'/2`, `a0 = value + f^2 + a2^(1/2)*f'`.
///
/// The result satisfies `structure_function == f` and
/// `commutativity_invariant == value` by construction, which makes this the
/// primary generator for randomized tests.
pub fn generate(
    a2: CoeffExpr,
    f: CoeffExpr,
    invariant_value: f64,
    t0: f64,
    grid: &TimeGrid,
) -> Result<LTVSystem> {
    let da2 = a2.differentiate();
    let df = f.differentiate();
    let sqrt_a2 = CoeffExpr::pow(a2.clone(), 0.5);
    let a1 = CoeffExpr::literal(2.0) * sqrt_a2.clone() * f.clone()
        + da2 / CoeffExpr::literal(2.0);
    let a0 = CoeffExpr::literal(invariant_value) + f.clone() * f + sqrt_a2 * df;
    LTVSystem::new(a2, a1, a0, t0, None, grid)
}
