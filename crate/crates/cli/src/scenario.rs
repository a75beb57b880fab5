//! Built-in demonstration scenarios.
//!
//! All three share the same system template: A with unit leading
//! coefficient, damping `3 + sin t` and a constant commutativity invariant
//! of 1; B is A's pair under k = (1, -2, 0); C is B's pair under the
//! scenario's m. The input is `40 sin(10 pi t)` over `[0, 10]` at a fixed
//! step of 0.02.
//!
//! * figure 2 — matched nonzero states `(1, -1.5)` on every stage; all three
//!   pairs commute in the unrelaxed sense.
//! * figure 3 — zero states and m = (1, -1, 3); all three pairs commute in
//!   the relaxed sense.
//! * figure 4 — arbitrary states that violate the derivative-ratio
//!   condition; the pairs are not commutative, but the order difference
//!   decays as the state responses die out.

use ltv_commute::commute::{synthesize_pair, PairConstants};
use ltv_commute::sim::{Integrator, SimulationConfig};
use ltv_commute::system::{InitialState, LTVSystem};
use ltv_commute::{parse, Result, TimeGrid, DEFAULT_TOL};

pub struct Scenario {
    pub figure: u8,
    pub a: LTVSystem,
    pub b: LTVSystem,
    pub c: LTVSystem,
    pub k: PairConstants,
    pub m: PairConstants,
    pub config: SimulationConfig,
    /// Comparison windows reported for every pair (early and late span).
    pub windows: Vec<(f64, f64)>,
}

impl Scenario {
    pub fn figure(figure: u8) -> Result<Scenario> {
        let grid = TimeGrid::default_span(0.0);
        let a = LTVSystem::new(
            parse("1")?,
            parse("3 + sin(t)")?,
            parse("3.25 + 0.25*sin(t)^2 + 1.5*sin(t) + 0.5*cos(t)")?,
            0.0,
            None,
            &grid,
        )?;
        let k = PairConstants::new(1.0, -2.0, 0.0)?;
        let m = match figure {
            3 => PairConstants::new(1.0, -1.0, 3.0)?,
            _ => PairConstants::new(1.0, 3.0, 3.0)?,
        };
        let b = synthesize_pair(&a, &k, &grid, DEFAULT_TOL)?;
        let c = synthesize_pair(&b, &m, &grid, DEFAULT_TOL)?;

        let states: [Option<InitialState>; 3] = match figure {
            2 => [Some(InitialState { y0: 1.0, dy0: -1.5 }); 3],
            3 => [None; 3],
            4 => [
                Some(InitialState { y0: 0.4, dy0: -0.3 }),
                Some(InitialState { y0: 0.2, dy0: -0.4 }),
                Some(InitialState { y0: -0.5, dy0: 0.5 }),
            ],
            other => {
                return Err(ltv_commute::Error::Config(format!(
                    "unknown figure {other}; available: 2, 3, 4"
                )))
            }
        };
        let [sa, sb, sc] = states;
        let mut a = a;
        let mut b = b;
        let mut c = c;
        a.ic = sa;
        b.ic = sb;
        c.ic = sc;

        Ok(Scenario {
            figure,
            a,
            b,
            c,
            k,
            m,
            config: SimulationConfig::new(0.0, 10.0, 0.02, Integrator::Bs3, parse("40*sin(10*pi*t)")?)?,
            windows: vec![(0.0, 1.0), (9.0, 10.0)],
        })
    }
}
