//! Uniform time grids used by constancy checks and coefficient validation.

use crate::{Error, Result};

/// Number of grid points used when none is specified.
pub const DEFAULT_GRID_POINTS: usize = 1001;

/// Length of the default working span starting at a system's initial time.
pub const DEFAULT_SPAN: f64 = 10.0;

/// A uniformly sampled closed interval `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    start: f64,
    end: f64,
    points: usize,
}

impl TimeGrid {
    pub fn new(start: f64, end: f64, points: usize) -> Result<Self> {
        if !start.is_finite() || !end.is_finite() {
            return Err(Error::Grid("endpoints must be finite".into()));
        }
        if end <= start {
            return Err(Error::Grid(format!(
                "end ({end}) must be greater than start ({start})"
            )));
        }
        if points < 2 {
            return Err(Error::Grid("need at least 2 points".into()));
        }
        Ok(Self { start, end, points })
    }

    /// The default working grid for a system starting at `t0`: 1001 points on
    /// `[t0, t0 + 10]`.
    pub fn default_span(t0: f64) -> Self {
        Self {
            start: t0,
            end: t0 + DEFAULT_SPAN,
            points: DEFAULT_GRID_POINTS,
        }
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        let span = self.end - self.start;
        let denom = (self.points - 1) as f64;
        (0..self.points).map(move |i| self.start + span * (i as f64) / denom)
    }
}
