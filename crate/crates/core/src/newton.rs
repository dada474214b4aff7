//! The rank-r Newton iteration engine.
//!
//! Iterates `x_{j+1} = x_j - f_x(x_j)_rank-r^† f(x_j)`, where the
//! pseudoinverse is taken of the rank-r projection of the Jacobian.
//! With r equal to the full column rank this reduces to Gauss-Newton
//! (and to classical Newton on square nonsingular systems). With r
//! below full rank it converges to nonisolated zeros on exact data and
//! to stationary points of the projected residual on perturbed data,
//! which is what regularizes problems given through empirical data.

use num_complex::Complex64;

use crate::cfmt::format_e;
use crate::error::{Error, Result};
use crate::linalg::{rank_r_from_svd, svd, vec_is_finite, vec_norm, vec_sub, GAP_WARN_THRESHOLD};
use crate::mapping::{MappingHandle, Point};

/// Options for one Newton run.
#[derive(Debug, Clone)]
pub struct NewtonOptions {
    /// Projection rank of the Jacobian.
    pub rank: usize,
    pub max_steps: usize,
    /// Stop when the step size stays below this for two consecutive
    /// steps while the residual plateaus. `None` selects
    /// `1e-14 * max(1, |x0|)`.
    pub shift_tol: Option<f64>,
    /// Declare a zero when the residual falls below this. `None`
    /// selects `1e-12 * (1 + |f(x0)|)`.
    pub residual_tol: Option<f64>,
    /// Emit trace lines to stdout while iterating.
    pub trace: bool,
}

impl NewtonOptions {
    pub fn new(rank: usize) -> Self {
        Self {
            rank,
            max_steps: 50,
            shift_tol: None,
            residual_tol: None,
            trace: false,
        }
    }

    pub fn with_max_steps(mut self, n: usize) -> Self {
        self.max_steps = n;
        self
    }

    pub fn with_shift_tol(mut self, t: f64) -> Self {
        self.shift_tol = Some(t);
        self
    }

    pub fn with_residual_tol(mut self, t: f64) -> Self {
        self.residual_tol = Some(t);
        self
    }

    pub fn with_trace(mut self, on: bool) -> Self {
        self.trace = on;
        self
    }
}

/// Why a run terminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NewtonStatus {
    /// Residual fell below the residual tolerance.
    ConvergedZero,
    /// Shifts fell below the shift tolerance for two consecutive steps
    /// while the residual plateaued: a stationary point of the projected
    /// equation, generally not a zero of the data system.
    ConvergedStationary,
    MaxSteps,
    Diverged,
    /// Converged, but the spectral gap σ_r/σ_{r+1} at the final iterate
    /// is below 10 — the projection rank is suspect (near-ultrasingular).
    RankGapWarning,
}

impl NewtonStatus {
    pub fn converged(self) -> bool {
        matches!(
            self,
            NewtonStatus::ConvergedZero | NewtonStatus::ConvergedStationary
        )
    }

    /// Converged including the gap-warning case.
    pub fn converged_loosely(self) -> bool {
        self.converged() || self == NewtonStatus::RankGapWarning
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NewtonStatus::ConvergedZero => "converged-zero",
            NewtonStatus::ConvergedStationary => "converged-stationary",
            NewtonStatus::MaxSteps => "max-steps",
            NewtonStatus::Diverged => "diverged",
            NewtonStatus::RankGapWarning => "rank-gap-warning",
        }
    }
}

impl std::fmt::Display for NewtonStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Residual and shift of one step. The residual is recorded from step 0
/// on; shifts exist from step 1 on.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    pub residual: f64,
    pub shift: Option<f64>,
}

/// Full record of a Newton run.
#[derive(Debug, Clone)]
pub struct IterationTrace {
    pub steps: Vec<StepRecord>,
    pub status: NewtonStatus,
    /// `1/σ_r` of the Jacobian at the final iterate: the norm of the
    /// pseudoinverse of its rank-r projection, which serves as the
    /// condition number of the singular solution.
    pub condition: f64,
    /// Spectral gap σ_r/σ_{r+1} at the final iterate.
    pub gap: f64,
    pub rank: usize,
    pub final_point: Point,
    pub final_flat: Vec<Complex64>,
}

impl IterationTrace {
    pub fn final_residual(&self) -> f64 {
        self.steps.last().map(|s| s.residual).unwrap_or(f64::NAN)
    }

    pub fn final_shift(&self) -> Option<f64> {
        self.steps.last().and_then(|s| s.shift)
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    pub fn shifts(&self) -> Vec<f64> {
        self.steps.iter().filter_map(|s| s.shift).collect()
    }

    /// Renders the trace in the fixed line format.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (j, rec) in self.steps.iter().enumerate() {
            out.push_str(&render_step_line(j, rec));
            out.push('\n');
        }
        out
    }
}

/// One trace line: `Step %4d:  residual = %9.2e` for step 0, with
/// `    shift = %9.2e` appended from step 1 on.
pub fn render_step_line(step: usize, rec: &StepRecord) -> String {
    match rec.shift {
        None => format!("Step {:4}:  residual = {}", step, format_e(rec.residual, 2, 9)),
        Some(s) => format!(
            "Step {:4}:  residual = {}    shift = {}",
            step,
            format_e(rec.residual, 2, 9),
            format_e(s, 2, 9)
        ),
    }
}

/// Runs the rank-r Newton iteration from a structured initial point.
///
/// Termination: `converged-zero` once the residual is at or below the
/// residual tolerance; `converged-stationary` once the shift stays at
/// or below the shift tolerance for two consecutive steps while the
/// residual plateaus (relative change at most 1%). A rank-deficient
/// Jacobian (σ_r = 0) aborts with an error naming the step; non-finite
/// evaluations terminate with `diverged`.
pub fn rank_r_newton(
    f: &MappingHandle,
    x0: &Point,
    opts: &NewtonOptions,
) -> Result<IterationTrace> {
    let n = f.domain_dim();
    let m = f.codomain_dim();
    let r = opts.rank;
    if r == 0 || r > n.min(m) {
        return Err(Error::InvalidRank {
            rank: r,
            rows: m,
            cols: n,
        });
    }

    let mut x = f.domain().embed(x0)?;
    let shift_tol = opts
        .shift_tol
        .unwrap_or_else(|| 1e-14 * vec_norm(&x).max(1.0));

    let mut fx = f.eval_flat(&x)?;
    let mut residual = vec_norm(&fx);
    let residual_tol = opts.residual_tol.unwrap_or(1e-12 * (1.0 + residual));

    let mut steps = vec![StepRecord {
        residual,
        shift: None,
    }];
    if opts.trace {
        println!("{}", render_step_line(0, &steps[0]));
    }

    if !vec_is_finite(&fx) || !residual.is_finite() {
        return finish(f, x, steps, NewtonStatus::Diverged, r);
    }

    let mut status = NewtonStatus::MaxSteps;
    let mut prev_shift = f64::INFINITY;

    if residual <= residual_tol {
        status = NewtonStatus::ConvergedZero;
        return finish(f, x, steps, status, r);
    }

    for step in 1..=opts.max_steps {
        let jac = f.jac_flat(&x)?;
        let factors = svd(&jac)?;
        if factors.sigma[r - 1] <= 0.0 {
            return Err(Error::JacobianRankDeficient { rank: r, step });
        }
        let proj = rank_r_from_svd(&factors, r, m, n)?;
        let dx = proj.pinv_apply(&fx)?;
        let shift = vec_norm(&dx);
        let x_next = vec_sub(&x, &dx);

        if !vec_is_finite(&x_next) || !shift.is_finite() {
            status = NewtonStatus::Diverged;
            break;
        }
        let fx_next = f.eval_flat(&x_next)?;
        let residual_next = vec_norm(&fx_next);

        let rec = StepRecord {
            residual: residual_next,
            shift: Some(shift),
        };
        steps.push(rec);
        if opts.trace {
            println!("{}", render_step_line(step, &rec));
        }

        if !vec_is_finite(&fx_next) || !residual_next.is_finite() {
            x = x_next;
            status = NewtonStatus::Diverged;
            break;
        }

        let plateau = (residual_next - residual).abs() <= 0.01 * residual;
        let two_small_shifts = shift <= shift_tol && prev_shift <= shift_tol;

        x = x_next;
        fx = fx_next;
        residual = residual_next;
        prev_shift = shift;

        if residual <= residual_tol {
            status = NewtonStatus::ConvergedZero;
            break;
        }
        if two_small_shifts && plateau {
            status = NewtonStatus::ConvergedStationary;
            break;
        }
    }

    finish(f, x, steps, status, r)
}

fn finish(
    f: &MappingHandle,
    x: Vec<Complex64>,
    steps: Vec<StepRecord>,
    status: NewtonStatus,
    r: usize,
) -> Result<IterationTrace> {
    let (condition, gap) = final_spectrum(f, &x, r);
    let status = if status.converged() && gap < GAP_WARN_THRESHOLD {
        NewtonStatus::RankGapWarning
    } else {
        status
    };
    let final_point = f.domain().extract(&x)?;
    Ok(IterationTrace {
        steps,
        status,
        condition,
        gap,
        rank: r,
        final_point,
        final_flat: x,
    })
}

fn final_spectrum(f: &MappingHandle, x: &[Complex64], r: usize) -> (f64, f64) {
    if !vec_is_finite(x) {
        return (f64::NAN, f64::NAN);
    }
    let Ok(jac) = f.jac_flat(x) else {
        return (f64::NAN, f64::NAN);
    };
    let Ok(factors) = svd(&jac) else {
        return (f64::NAN, f64::NAN);
    };
    let sigma = &factors.sigma;
    let p = sigma.len();
    if r == 0 || r > p || sigma[r - 1] <= 0.0 {
        return (f64::INFINITY, 0.0);
    }
    let condition = 1.0 / sigma[r - 1];
    let gap = if r == p || sigma[r] == 0.0 {
        f64::INFINITY
    } else {
        sigma[r - 1] / sigma[r]
    };
    (condition, gap)
}

/// `1/σ_r(f_x(x))`: the norm of the pseudoinverse of the rank-r
/// projected Jacobian, reported as the condition number of a singular
/// solution at `x`.
pub fn condition_estimate(f: &MappingHandle, x: &Point, r: usize) -> Result<f64> {
    let jac = f.jacobian(x)?;
    let factors = svd(&jac)?;
    if r == 0 || r > factors.sigma.len() {
        return Err(Error::InvalidRank {
            rank: r,
            rows: jac.rows(),
            cols: jac.cols(),
        });
    }
    if factors.sigma[r - 1] <= 0.0 {
        return Err(Error::RankDeficient { requested: r });
    }
    Ok(1.0 / factors.sigma[r - 1])
}

/// Checks that the final shifts of a trace contract quadratically:
/// over the last `window` above-floor steps, each consecutive pair must
/// satisfy `s_{j+1} <= 10 * s_j^2` (with the floor absorbing terminal
/// rounding). Returns false when there are not enough steps to judge.
pub fn shifts_quadratic(shifts: &[f64], floor: f64, window: usize) -> bool {
    let above: Vec<usize> = shifts
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > floor)
        .map(|(i, _)| i)
        .collect();
    if above.len() < 2 {
        return false;
    }
    let tail = &above[above.len().saturating_sub(window)..];
    let mut pairs = 0;
    for &j in tail {
        if j + 1 < shifts.len() {
            let bound = (10.0 * shifts[j] * shifts[j]).max(floor);
            if shifts[j + 1] > bound {
                return false;
            }
            pairs += 1;
        }
    }
    pairs >= 2
}
