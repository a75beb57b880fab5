//! The commutativity and transitivity algebra for second-order LTV systems.
//!
//! Two systems commute in cascade exactly when the second's coefficient
//! vector is an affine image of the first's,
//!
//! ```text
//! [b2]   [a2    0       0] [c2]
//! [b1] = [a1    a2^0.5  0] [c1]
//! [b0]   [a0    f_A     1] [c0]
//! ```
//!
//! with constant multipliers and a constant commutativity invariant, plus
//! matching initial-state conditions in the unrelaxed case. This module
//! synthesizes pairs from constants, recovers constants from pairs, maps
//! constants and invariants across the two directions of a pair, composes
//! constants along a chain, and grades transitivity across three systems.
//!
//! Pairs obtainable from each other by constant feed-forward/feedback gains
//! (`c1 = 0`) are excluded throughout.

use serde::{Deserialize, Serialize};

use crate::expr::CoeffExpr;
use crate::system::{InitialState, LTVSystem};
use crate::{Error, Result, TimeGrid};

/// The constant triple linking the coefficient vectors of a commutative pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairConstants {
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl PairConstants {
    /// Validated constructor: `c2 > 0` (the pair is second-order and
    /// `c2^0.5` is taken), `c1 != 0` (gain-derivable pairs are excluded),
    /// all finite.
    pub fn new(c2: f64, c1: f64, c0: f64) -> Result<Self> {
        if !(c2.is_finite() && c1.is_finite() && c0.is_finite()) {
            return Err(Error::InvalidConstants("constants must be finite".into()));
        }
        if c2 <= 0.0 {
            return Err(Error::InvalidConstants(format!(
                "c2 must be strictly positive, got {c2}"
            )));
        }
        if c1 == 0.0 {
            return Err(Error::InvalidConstants(
                "c1 must be nonzero (gain-derivable pairs are excluded)".into(),
            ));
        }
        Ok(Self { c2, c1, c0 })
    }
}

/// Graded outcome of a pair check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    CommutativeZeroIC,
    CommutativeNonzeroIC,
    NotCommutative,
}

/// Per-condition max residuals gathered during a pair check. A field is
/// `None` when the check never reached that condition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub k2_constancy: Option<f64>,
    pub k1_constancy: Option<f64>,
    pub k0_constancy: Option<f64>,
    pub invariant_a_constancy: Option<f64>,
    pub invariant_b_constancy: Option<f64>,
    /// Largest componentwise gap between the two initial states.
    pub ic_state_gap: Option<f64>,
    /// `|(c2 + c0 - 1)^2 - c1^2 (1 - A0)|`.
    pub state_feasibility_gap: Option<f64>,
    /// `|dy0 - rho * y0|` for the required initial-derivative ratio `rho`.
    pub derivative_ratio_gap: Option<f64>,
}

/// Structured verdict of [`check_pair`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutativityReport {
    pub verdict: Verdict,
    /// Recovered constants; present whenever all three rows were constant
    /// and the pair is not gain-derivable, even if an initial-state
    /// condition failed afterwards.
    pub constants: Option<PairConstants>,
    pub invariant_a0: f64,
    pub invariant_b0: f64,
    pub residuals: Residuals,
    pub failed_condition: Option<String>,
}

impl CommutativityReport {
    pub fn is_commutative(&self) -> bool {
        self.verdict != Verdict::NotCommutative
    }
}

/// Outcome of a transitivity check over systems A, B, C.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitivityReport {
    pub ab: CommutativityReport,
    pub bc: CommutativityReport,
    pub ac: CommutativityReport,
    /// Composition of the recovered A-B and B-C constants.
    pub composed: Option<PairConstants>,
    /// Largest componentwise gap between the composed constants and the
    /// constants recovered directly from the (A, C) pair.
    pub composition_gap: Option<f64>,
    /// Residual of the shared-state offset identity linking the two pair
    /// constants; evaluated only when both pairs commute with nonzero states.
    pub offset_consistency_residual: Option<f64>,
    /// Residual of `offset(composed) == offset(first link)`; evaluated under
    /// the same condition.
    pub composed_offset_residual: Option<f64>,
    /// All three pairs commutative and the constants compose within
    /// tolerance.
    pub transitive: bool,
}

/// `b2 = c2 a2`, `b1 = c2 a1 + c1 a2^0.5`, `b0 = c2 a0 + c1 f_A + c0`.
///
/// The returned system has no initial state; obtain one with
/// [`required_initial_state`].
pub fn synthesize_pair(
    a: &LTVSystem,
    k: &PairConstants,
    grid: &TimeGrid,
    tol: f64,
) -> Result<LTVSystem> {
    let inv = a.commutativity_invariant(grid, tol)?;
    if !inv.constant {
        return Err(Error::NotEligible {
            residual: inv.max_residual,
        });
    }
    let f_a = a.structure_function();
    let b2 = CoeffExpr::literal(k.c2) * a.a2.clone();
    let b1 = CoeffExpr::literal(k.c2) * a.a1.clone()
        + CoeffExpr::literal(k.c1) * CoeffExpr::pow(a.a2.clone(), 0.5);
    let b0 = CoeffExpr::literal(k.c2) * a.a0.clone()
        + CoeffExpr::literal(k.c1) * f_a
        + CoeffExpr::literal(k.c0);
    LTVSystem::new(b2, b1, b0, a.t0, None, grid)
}

/// Recover candidate constants pointwise, test each row for constancy, test
/// the invariant, and grade the initial-state conditions. Failures are
/// verdicts, not errors.
pub fn check_pair(
    a: &LTVSystem,
    b: &LTVSystem,
    grid: &TimeGrid,
    tol: f64,
) -> Result<CommutativityReport> {
    if a.t0 != b.t0 {
        return Err(Error::InitialTimeMismatch(a.t0, b.t0));
    }

    let inv_a = a.commutativity_invariant(grid, tol)?;
    let inv_b = b.commutativity_invariant(grid, tol)?;
    let mut residuals = Residuals {
        invariant_a_constancy: Some(inv_a.max_residual),
        invariant_b_constancy: Some(inv_b.max_residual),
        ..Residuals::default()
    };

    let fail = |residuals: Residuals, constants: Option<PairConstants>, label: &str| {
        Ok(CommutativityReport {
            verdict: Verdict::NotCommutative,
            constants,
            invariant_a0: inv_a.value,
            invariant_b0: inv_b.value,
            residuals,
            failed_condition: Some(label.to_string()),
        })
    };

    // first row: k2 = b2 / a2
    let k2_expr = b.a2.clone() / a.a2.clone();
    let k2 = k2_expr.is_constant(grid, tol)?;
    residuals.k2_constancy = Some(k2.max_residual);
    if !k2.constant {
        return fail(residuals, None, "k2 not constant");
    }

    // second row: k1 = (b1 - k2 a1) / a2^0.5
    let k1_expr = (b.a1.clone() - CoeffExpr::literal(k2.value) * a.a1.clone())
        / CoeffExpr::pow(a.a2.clone(), 0.5);
    let k1 = k1_expr.is_constant(grid, tol)?;
    residuals.k1_constancy = Some(k1.max_residual);
    if !k1.constant {
        return fail(residuals, None, "k1 not constant");
    }

    // third row: k0 = b0 - k2 a0 - k1 f_A
    let k0_expr = b.a0.clone()
        - CoeffExpr::literal(k2.value) * a.a0.clone()
        - CoeffExpr::literal(k1.value) * a.structure_function();
    let k0 = k0_expr.is_constant(grid, tol)?;
    residuals.k0_constancy = Some(k0.max_residual);
    if !k0.constant {
        return fail(residuals, None, "k0 not constant");
    }

    if k1.value.abs() <= tol {
        return fail(residuals, None, "feedthrough-derivable pair, excluded");
    }
    if !inv_a.constant {
        return fail(residuals, None, "invariant not constant");
    }
    let constants = PairConstants::new(k2.value, k1.value, k0.value)?;

    let state_a = a.initial_state();
    let state_b = b.initial_state();
    if state_a.is_zero() && state_b.is_zero() {
        return Ok(CommutativityReport {
            verdict: Verdict::CommutativeZeroIC,
            constants: Some(constants),
            invariant_a0: inv_a.value,
            invariant_b0: inv_b.value,
            residuals,
            failed_condition: None,
        });
    }

    // unrelaxed case: equal states, feasibility, and the derivative ratio
    let state_gap = (state_a.y0 - state_b.y0)
        .abs()
        .max((state_a.dy0 - state_b.dy0).abs());
    residuals.ic_state_gap = Some(state_gap);
    if state_gap > tol {
        return fail(residuals, Some(constants), "initial states differ");
    }

    let feasibility = state_feasibility_gap(&constants, inv_a.value);
    residuals.state_feasibility_gap = Some(feasibility);
    if feasibility > tol {
        return fail(residuals, Some(constants), "state feasibility violated");
    }

    let rho = derivative_ratio(a, &constants)?;
    let ratio_gap = (state_b.dy0 - rho * state_b.y0).abs();
    residuals.derivative_ratio_gap = Some(ratio_gap);
    if ratio_gap > tol * (1.0 + (rho * state_b.y0).abs()) {
        return fail(residuals, Some(constants), "derivative ratio violated");
    }

    Ok(CommutativityReport {
        verdict: Verdict::CommutativeNonzeroIC,
        constants: Some(constants),
        invariant_a0: inv_a.value,
        invariant_b0: inv_b.value,
        residuals,
        failed_condition: None,
    })
}

/// `(c2 + c0 - 1) / c1`, the constant part of the required
/// initial-derivative ratio of a pair.
pub fn ratio_offset(k: &PairConstants) -> f64 {
    (k.c2 + k.c0 - 1.0) / k.c1
}

/// `|(c2 + c0 - 1)^2 - c1^2 (1 - A0)|`: zero exactly when a shared nonzero
/// initial state can commute under these constants.
pub fn state_feasibility_gap(k: &PairConstants, invariant_a0: f64) -> f64 {
    let lhs = (k.c2 + k.c0 - 1.0).powi(2);
    let rhs = k.c1 * k.c1 * (1.0 - invariant_a0);
    (lhs - rhs).abs()
}

/// The ratio `rho` with `dy0 = rho * y0` required of a commuting initial
/// state: `rho = -a2(t0)^(-1/2) * [offset(k) + f_A(t0)]`.
pub fn derivative_ratio(a: &LTVSystem, k: &PairConstants) -> Result<f64> {
    let a2_t0 = a.a2.eval(a.t0)?;
    let f_t0 = a.structure_function().eval(a.t0)?;
    Ok(-a2_t0.powf(-0.5) * (ratio_offset(k) + f_t0))
}

/// The initial state `(y0, rho * y0)` that lets the pair `(A, B(k))` commute
/// with nonzero states. Fails when the feasibility condition does not hold
/// for these constants (in particular whenever `A0 > 1`, which admits no
/// real solution).
pub fn required_initial_state(
    a: &LTVSystem,
    k: &PairConstants,
    y0: f64,
    grid: &TimeGrid,
    tol: f64,
) -> Result<InitialState> {
    let inv = a.commutativity_invariant(grid, tol)?;
    if !inv.constant {
        return Err(Error::NotEligible {
            residual: inv.max_residual,
        });
    }
    let gap = state_feasibility_gap(k, inv.value);
    if gap > tol {
        return Err(Error::NoCommutingState { gap });
    }
    let rho = derivative_ratio(a, k)?;
    InitialState::new(y0, rho * y0)
}

/// The constants describing the same pair in the opposite direction:
/// `(1/c2, -c1/c2^1.5, c1^2/(2 c2^2) - c0/c2)`. An involution.
pub fn invert_constants(k: &PairConstants) -> PairConstants {
    PairConstants {
        c2: 1.0 / k.c2,
        c1: -k.c1 / k.c2.powf(1.5),
        c0: k.c1 * k.c1 / (2.0 * k.c2 * k.c2) - k.c0 / k.c2,
    }
}

/// Map the invariant across a pair: `B0 = c2 A0 + c0 - c1^2 / (4 c2)`.
/// The inverse direction is this function with [`invert_constants`].
pub fn transform_invariant(invariant_a0: f64, k: &PairConstants) -> f64 {
    k.c2 * invariant_a0 + k.c0 - k.c1 * k.c1 / (4.0 * k.c2)
}

/// Map the structure function across a pair:
/// `f_B = c2^0.5 f_A + c1 / (2 c2^0.5)`.
pub fn transform_structure(f_a: &CoeffExpr, k: &PairConstants) -> CoeffExpr {
    let root = k.c2.sqrt();
    CoeffExpr::literal(root) * f_a.clone() + CoeffExpr::literal(k.c1 / (2.0 * root))
}

/// Inverse of [`transform_structure`]:
/// `f_A = c2^(-0.5) f_B - c1 / (2 c2)`.
pub fn transform_structure_inverse(f_b: &CoeffExpr, k: &PairConstants) -> CoeffExpr {
    CoeffExpr::literal(1.0 / k.c2.sqrt()) * f_b.clone()
        - CoeffExpr::literal(k.c1 / (2.0 * k.c2))
}

/// Compose constants along a chain: `k` links A to B, `m` links B to C, and
/// the result links A to C directly:
/// `p = (m2 k2, m2 k1 + m1 k2^0.5, m2 k0 + m1 k1 / (2 k2^0.5) + m0)`.
///
/// A composed `|p1| <= tol` means A and C are related by pure gains, which
/// falls outside the standing exclusion and is reported as an error.
pub fn compose_constants(
    k: &PairConstants,
    m: &PairConstants,
    tol: f64,
) -> Result<PairConstants> {
    let root = k.c2.sqrt();
    let p2 = m.c2 * k.c2;
    let p1 = m.c2 * k.c1 + m.c1 * root;
    let p0 = m.c2 * k.c0 + m.c1 * k.c1 / (2.0 * root) + m.c0;
    if p1.abs() <= tol {
        return Err(Error::DegenerateComposition { c1: p1 });
    }
    PairConstants::new(p2, p1, p0)
}

/// Residual of the identity forced on two adjacent links when both pairs
/// commute with a shared nonzero state:
/// `offset(m) == c2^0.5 * (offset(k) - c1 / (2 c2))`.
///
/// Also holds with `m` replaced by `invert_constants(k)` for every valid `k`.
pub fn offset_consistency_residual(k: &PairConstants, m: &PairConstants) -> f64 {
    let mapped = k.c2.sqrt() * (ratio_offset(k) - k.c1 / (2.0 * k.c2));
    (ratio_offset(m) - mapped).abs()
}

/// Residual of `offset(p) == offset(k)` for a composed chain; zero whenever
/// the offset consistency between the links holds.
pub fn composed_offset_residual(k: &PairConstants, p: &PairConstants) -> f64 {
    (ratio_offset(p) - ratio_offset(k)).abs()
}

/// Check all three pairs of a chain, compose the recovered constants, and
/// compare against the directly recovered (A, C) constants.
pub fn check_transitivity(
    a: &LTVSystem,
    b: &LTVSystem,
    c: &LTVSystem,
    grid: &TimeGrid,
    tol: f64,
) -> Result<TransitivityReport> {
    let ab = check_pair(a, b, grid, tol)?;
    let bc = check_pair(b, c, grid, tol)?;
    let ac = check_pair(a, c, grid, tol)?;

    let composed = match (&ab.constants, &bc.constants) {
        (Some(k), Some(m)) => compose_constants(k, m, tol).ok(),
        _ => None,
    };
    let composition_gap = match (&composed, &ac.constants) {
        (Some(p), Some(q)) => Some(
            (p.c2 - q.c2)
                .abs()
                .max((p.c1 - q.c1).abs())
                .max((p.c0 - q.c0).abs()),
        ),
        _ => None,
    };

    let both_nonzero_ic = ab.verdict == Verdict::CommutativeNonzeroIC
        && bc.verdict == Verdict::CommutativeNonzeroIC;
    let (offset_consistency, composed_offset) = match (&ab.constants, &bc.constants, &composed) {
        (Some(k), Some(m), Some(p)) if both_nonzero_ic => (
            Some(offset_consistency_residual(k, m)),
            Some(composed_offset_residual(k, p)),
        ),
        _ => (None, None),
    };

    let transitive = ab.is_commutative()
        && bc.is_commutative()
        && ac.is_commutative()
        && composition_gap.map(|g| g <= tol).unwrap_or(false);

    Ok(TransitivityReport {
        ab,
        bc,
        ac,
        composed,
        composition_gap,
        offset_consistency_residual: offset_consistency,
        composed_offset_residual: composed_offset,
        transitive,
    })
}

#[cfg(test)]
mod tests;
