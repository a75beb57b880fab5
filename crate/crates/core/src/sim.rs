//! Fixed-step simulation of cascade connections.
//!
//! Every stage of a chain is a second-order system in state `(y, y')`; the
//! whole cascade advances as one coupled state vector so that no inter-stage
//! interpolation is needed. The working integrator is the fixed-step
//! third-order Bogacki-Shampine method; a classical fourth-order Runge-Kutta
//! run at a much finer step serves as the reference oracle that separates
//! genuine non-commutativity from integration error.
//!
//! Chain order convention: the leftmost system receives the external input,
//! each later stage is driven by the output of the stage before it, and the
//! chain output is the last stage's output.

use std::io::Write;

use crate::expr::CoeffExpr;
use crate::system::LTVSystem;
use crate::{Error, Result};

/// Fixed-step integrators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// Third-order Bogacki-Shampine:
    /// `s1 = f(t, y)`, `s2 = f(t + h/2, y + h s1 / 2)`,
    /// `s3 = f(t + 3h/4, y + 3h s2 / 4)`,
    /// `y+ = y + h (2 s1 + 3 s2 + 4 s3) / 9`.
    Bs3,
    /// Classical fourth-order Runge-Kutta, used for reference runs.
    Rk4Reference,
}

/// Span, step, integrator and input signal of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub t0: f64,
    pub tf: f64,
    pub step: f64,
    pub integrator: Integrator,
    pub input: CoeffExpr,
}

impl SimulationConfig {
    pub fn new(
        t0: f64,
        tf: f64,
        step: f64,
        integrator: Integrator,
        input: CoeffExpr,
    ) -> Result<Self> {
        if !t0.is_finite() || !tf.is_finite() || tf <= t0 {
            return Err(Error::Config(format!(
                "need finite tf > t0, got t0 = {t0}, tf = {tf}"
            )));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::Config(format!("step must be positive, got {step}")));
        }
        let count = (tf - t0) / step;
        let rounded = count.round();
        // the span must hold an integer number of steps, up to 1 ulp
        if rounded < 1.0 || (count - rounded).abs() > rounded.abs() * f64::EPSILON {
            return Err(Error::Config(format!(
                "span ({t0}..{tf}) is not an integer multiple of step {step}"
            )));
        }
        Ok(Self {
            t0,
            tf,
            step,
            integrator,
            input,
        })
    }

    /// Number of steps; samples are `steps() + 1` including both endpoints.
    pub fn steps(&self) -> usize {
        ((self.tf - self.t0) / self.step).round() as usize
    }
}

/// Uniformly sampled outputs of a simulated chain.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// One sampled output signal per stage; the cascade output is the last.
    pub stages: Vec<Vec<f64>>,
    pub meta: SimulationConfig,
}

impl Trajectory {
    /// The cascade output (the final stage's output).
    pub fn output(&self) -> &[f64] {
        self.stages.last().expect("chain is nonempty")
    }
}

/// State-derivative function of a single system:
/// `(y, y') -> (y', (u - a1 y' - a0 y) / a2)` given exogenous input `u`.
pub fn to_state_space(
    sys: &LTVSystem,
) -> impl Fn(f64, [f64; 2], f64) -> Result<[f64; 2]> + '_ {
    move |t, state, u| stage_derivative(sys, t, state[0], state[1], u)
}

fn stage_derivative(sys: &LTVSystem, t: f64, y: f64, dy: f64, u: f64) -> Result<[f64; 2]> {
    let a2 = sys.a2.eval(t)?;
    if a2 <= 0.0 {
        return Err(Error::LeadingCoefficient { t, value: a2 });
    }
    let a1 = sys.a1.eval(t)?;
    let a0 = sys.a0.eval(t)?;
    Ok([dy, (u - a1 * dy - a0 * y) / a2])
}

/// Derivative of the coupled cascade state. Stage `i`'s drive is stage
/// `i-1`'s output component of the same state vector, so the coupling is
/// exact at every integrator substage.
fn chain_derivative(
    chain: &[LTVSystem],
    input: &CoeffExpr,
    t: f64,
    state: &[f64],
    out: &mut [f64],
) -> Result<()> {
    let mut drive = input.eval(t)?;
    for (i, sys) in chain.iter().enumerate() {
        let y = state[2 * i];
        let dy = state[2 * i + 1];
        let d = stage_derivative(sys, t, y, dy, drive)?;
        out[2 * i] = d[0];
        out[2 * i + 1] = d[1];
        drive = y;
    }
    Ok(())
}

struct StepWork {
    probe: Vec<f64>,
    s1: Vec<f64>,
    s2: Vec<f64>,
    s3: Vec<f64>,
    s4: Vec<f64>,
}

impl StepWork {
    fn new(dim: usize) -> Self {
        Self {
            probe: vec![0.0; dim],
            s1: vec![0.0; dim],
            s2: vec![0.0; dim],
            s3: vec![0.0; dim],
            s4: vec![0.0; dim],
        }
    }
}

fn displace(probe: &mut [f64], state: &[f64], slope: &[f64], factor: f64) {
    for ((dst, y), s) in probe.iter_mut().zip(state).zip(slope) {
        *dst = y + factor * s;
    }
}

fn rk_step(
    integrator: Integrator,
    chain: &[LTVSystem],
    input: &CoeffExpr,
    t: f64,
    h: f64,
    state: &mut [f64],
    w: &mut StepWork,
) -> Result<()> {
    chain_derivative(chain, input, t, state, &mut w.s1)?;
    match integrator {
        Integrator::Bs3 => {
            displace(&mut w.probe, state, &w.s1, h / 2.0);
            chain_derivative(chain, input, t + h / 2.0, &w.probe, &mut w.s2)?;
            displace(&mut w.probe, state, &w.s2, 3.0 * h / 4.0);
            chain_derivative(chain, input, t + 3.0 * h / 4.0, &w.probe, &mut w.s3)?;
            for (i, y) in state.iter_mut().enumerate() {
                *y += h * (2.0 * w.s1[i] + 3.0 * w.s2[i] + 4.0 * w.s3[i]) / 9.0;
            }
        }
        Integrator::Rk4Reference => {
            displace(&mut w.probe, state, &w.s1, h / 2.0);
            chain_derivative(chain, input, t + h / 2.0, &w.probe, &mut w.s2)?;
            displace(&mut w.probe, state, &w.s2, h / 2.0);
            chain_derivative(chain, input, t + h / 2.0, &w.probe, &mut w.s3)?;
            displace(&mut w.probe, state, &w.s3, h);
            chain_derivative(chain, input, t + h, &w.probe, &mut w.s4)?;
            for (i, y) in state.iter_mut().enumerate() {
                *y += h * (w.s1[i] + 2.0 * w.s2[i] + 2.0 * w.s3[i] + w.s4[i]) / 6.0;
            }
        }
    }
    Ok(())
}

fn run(
    chain: &[LTVSystem],
    cfg: &SimulationConfig,
    substep: f64,
    substeps_per_sample: usize,
    integrator: Integrator,
) -> Result<Trajectory> {
    if chain.is_empty() {
        return Err(Error::Config("chain must contain at least one system".into()));
    }
    let samples = cfg.steps();
    let dim = 2 * chain.len();
    let mut state: Vec<f64> = chain
        .iter()
        .flat_map(|s| {
            let ic = s.initial_state();
            [ic.y0, ic.dy0]
        })
        .collect();
    let mut work = StepWork::new(dim);

    let mut stages = vec![Vec::with_capacity(samples + 1); chain.len()];
    let mut times = Vec::with_capacity(samples + 1);
    let record = |stages: &mut Vec<Vec<f64>>, state: &[f64]| {
        for (i, stage) in stages.iter_mut().enumerate() {
            stage.push(state[2 * i]);
        }
    };

    times.push(cfg.t0);
    record(&mut stages, &state);
    for sample in 0..samples {
        for sub in 0..substeps_per_sample {
            let t = cfg.t0 + ((sample * substeps_per_sample + sub) as f64) * substep;
            rk_step(integrator, chain, &cfg.input, t, substep, &mut state, &mut work)?;
        }
        if !state.iter().all(|v| v.is_finite()) {
            return Err(Error::Unstable {
                step: sample,
                t: cfg.t0 + ((sample + 1) as f64) * cfg.step,
            });
        }
        times.push(cfg.t0 + ((sample + 1) as f64) * cfg.step);
        record(&mut stages, &state);
    }

    Ok(Trajectory {
        times,
        stages,
        meta: cfg.clone(),
    })
}

/// Simulate a cascade with the configured integrator. Each system's own
/// initial state (zero when unset) initializes its stage.
pub fn simulate_chain(chain: &[LTVSystem], cfg: &SimulationConfig) -> Result<Trajectory> {
    run(chain, cfg, cfg.step, 1, cfg.integrator)
}

/// Default step refinement of [`reference_run`].
pub const REFERENCE_REFINE: usize = 20;

/// Reference oracle: classical RK4 at `cfg.step / refine`, sampled back on
/// `cfg`'s grid so results compare directly against [`simulate_chain`].
pub fn reference_run(
    chain: &[LTVSystem],
    cfg: &SimulationConfig,
    refine: usize,
) -> Result<Trajectory> {
    if refine == 0 {
        return Err(Error::Config("refine must be at least 1".into()));
    }
    run(
        chain,
        cfg,
        cfg.step / refine as f64,
        refine,
        Integrator::Rk4Reference,
    )
}

/// Difference metrics between two chain outputs on identical grids.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ComparisonMetrics {
    pub max_abs_diff: f64,
    pub rms_diff: f64,
    pub windows: Vec<WindowMetrics>,
}

/// Max difference restricted to a time window.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct WindowMetrics {
    pub start: f64,
    pub end: f64,
    pub max_abs_diff: f64,
}

/// Compare the cascade outputs of two runs, over the full span and over the
/// given `[start, end]` windows.
pub fn compare(
    first: &Trajectory,
    second: &Trajectory,
    windows: &[(f64, f64)],
) -> Result<ComparisonMetrics> {
    if first.times != second.times {
        return Err(Error::GridMismatch);
    }
    let a = first.output();
    let b = second.output();
    let mut max_abs = 0.0f64;
    let mut sum_sq = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let d = (x - y).abs();
        max_abs = max_abs.max(d);
        sum_sq += d * d;
    }
    let rms = (sum_sq / a.len() as f64).sqrt();
    let windows = windows
        .iter()
        .map(|&(start, end)| {
            let mut w = 0.0f64;
            for ((t, x), y) in first.times.iter().zip(a).zip(b) {
                if *t >= start && *t <= end {
                    w = w.max((x - y).abs());
                }
            }
            WindowMetrics {
                start,
                end,
                max_abs_diff: w,
            }
        })
        .collect();
    Ok(ComparisonMetrics {
        max_abs_diff: max_abs,
        rms_diff: rms,
        windows,
    })
}

/// Write a single run as CSV with header `t,y`, one row per sample.
pub fn write_csv(traj: &Trajectory, mut w: impl Write) -> Result<()> {
    writeln!(w, "t,y")?;
    for (t, y) in traj.times.iter().zip(traj.output()) {
        writeln!(w, "{t:.12e},{y:.12e}")?;
    }
    Ok(())
}

/// Write two runs on the same grid as CSV with header
/// `t,y_first,y_second,abs_diff`.
pub fn write_comparison_csv(
    first: &Trajectory,
    second: &Trajectory,
    mut w: impl Write,
) -> Result<()> {
    if first.times != second.times {
        return Err(Error::GridMismatch);
    }
    writeln!(w, "t,y_first,y_second,abs_diff")?;
    for ((t, a), b) in first.times.iter().zip(first.output()).zip(second.output()) {
        writeln!(w, "{t:.12e},{a:.12e},{b:.12e},{:.12e}", (a - b).abs())?;
    }
    Ok(())
}
