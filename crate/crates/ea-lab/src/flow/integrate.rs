//! Adaptive integration of the geodesic field with blowup detection.
//!
//! The stepper is the Dormand-Prince 5(4) embedded pair with a standard
//! step controller (safety 0.9, growth clamped to [0.2, 5]). The quadratic
//! field sends solutions to infinity in finite time along expanding
//! directions, so termination is three-valued: the horizon was reached, the
//! state norm crossed the blowup threshold, or the step size collapsed
//! without norm growth.
//!
//! Blowup times are estimated by extrapolating the reciprocal state norm,
//! which decays asymptotically linearly for a quadratic field, to zero
//! across the last accepted steps.
//!
//! `q(x, x)` is a first integral, recorded at every sample; the largest
//! absolute deviation from its initial value is the reported energy drift.
//! That drift stays at the tolerance scale while the state norm is of order
//! one, but it is an absolute quantity: near blowup the conserved value is
//! the small difference of huge terms and the recorded drift grows with the
//! square of the state norm.

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::metric::MetricAlgebra;
use crate::scalar::{RealScalar, Scalar};
use serde::Serialize;

use super::geodesic_field;

/// Euclidean norm above which a state counts as blown up.
pub const BLOWUP_NORM: f64 = 1e8;

/// Steps below this size abort the run.
pub const MIN_STEP: f64 = 1e-12;

/// Hard cap on accepted plus rejected steps.
pub const MAX_STEPS: usize = 4_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    /// Integrated to the requested horizon.
    HorizonReached,
    /// State norm crossed [`BLOWUP_NORM`]; the escape time estimate comes
    /// from the reciprocal-norm extrapolation.
    BlowupDetected { estimated_time: f64 },
    /// Step size fell below [`MIN_STEP`] without norm growth.
    StepFailure { time: f64 },
}

#[derive(Clone, Copy, Debug)]
pub struct IntegrationOptions {
    /// Relative and absolute tolerance of the embedded error estimate.
    pub tol: f64,
    /// Integration endpoint; negative integrates backward in time.
    pub horizon: f64,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions {
            tol: 1e-10,
            horizon: 100.0,
        }
    }
}

/// One geodesic, sampled at every accepted step.
///
/// Times increase in storage order regardless of integration direction;
/// for a backward run the initial state is therefore the last sample.
#[derive(Clone, Debug)]
pub struct Trajectory<S: Scalar> {
    pub times: Vec<S>,
    pub states: Vec<Vector<S>>,
    /// `q(x(t), x(t))` at each sample.
    pub q_values: Vec<S>,
    pub termination: Termination,
    /// Largest `|q(x(t),x(t)) - q(x(0),x(0))|` over the samples.
    pub energy_drift: S,
}

impl<S: RealScalar> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Sample closest to time `t`.
    pub fn nearest(&self, t: S) -> (S, &Vector<S>) {
        let k = self
            .times
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (**a - t).abs().partial_cmp(&(**b - t).abs()).unwrap()
            })
            .map(|(k, _)| k)
            .expect("nonempty trajectory");
        (self.times[k], &self.states[k])
    }
}

/// Dormand-Prince 5(4) trial step. Returns the fifth-order candidate and
/// the scaled error norm (acceptable when at most one).
pub(crate) fn dp54_step<S: RealScalar>(
    f: &impl Fn(&Vector<S>) -> Vector<S>,
    y: &Vector<S>,
    h: S,
    tol: S,
) -> (Vector<S>, S) {
    let a = |n: f64, d: f64| S::from_f64_lossy(n / d);
    let k1 = f(y);
    let k2 = f(&stage(y, h, &[(&k1, a(1.0, 5.0))]));
    let k3 = f(&stage(y, h, &[(&k1, a(3.0, 40.0)), (&k2, a(9.0, 40.0))]));
    let k4 = f(&stage(
        y,
        h,
        &[
            (&k1, a(44.0, 45.0)),
            (&k2, a(-56.0, 15.0)),
            (&k3, a(32.0, 9.0)),
        ],
    ));
    let k5 = f(&stage(
        y,
        h,
        &[
            (&k1, a(19372.0, 6561.0)),
            (&k2, a(-25360.0, 2187.0)),
            (&k3, a(64448.0, 6561.0)),
            (&k4, a(-212.0, 729.0)),
        ],
    ));
    let k6 = f(&stage(
        y,
        h,
        &[
            (&k1, a(9017.0, 3168.0)),
            (&k2, a(-355.0, 33.0)),
            (&k3, a(46732.0, 5247.0)),
            (&k4, a(49.0, 176.0)),
            (&k5, a(-5103.0, 18656.0)),
        ],
    ));
    let y5 = stage(
        y,
        h,
        &[
            (&k1, a(35.0, 384.0)),
            (&k3, a(500.0, 1113.0)),
            (&k4, a(125.0, 192.0)),
            (&k5, a(-2187.0, 6784.0)),
            (&k6, a(11.0, 84.0)),
        ],
    );
    let k7 = f(&y5);
    // Difference of the embedded fourth-order weights against the fifth.
    let err_vec = stage(
        &Vector::zeros(y.dim()),
        h,
        &[
            (&k1, a(71.0, 57600.0)),
            (&k3, a(-71.0, 16695.0)),
            (&k4, a(71.0, 1920.0)),
            (&k5, a(-17253.0, 339200.0)),
            (&k6, a(22.0, 525.0)),
            (&k7, a(-1.0, 40.0)),
        ],
    );
    let mut err_sq = S::zero();
    for i in 0..y.dim() {
        let scale = tol + tol * y[i].abs().max(y5[i].abs());
        let e = err_vec[i] / scale;
        err_sq = err_sq + e * e;
    }
    let n = S::from_f64_lossy(y.dim() as f64);
    (y5, (err_sq / n).sqrt())
}

fn stage<S: RealScalar>(y: &Vector<S>, h: S, terms: &[(&Vector<S>, S)]) -> Vector<S> {
    let mut out = y.clone();
    for (k, c) in terms {
        for i in 0..out.dim() {
            out[i] = out[i] + h * *c * k[i];
        }
    }
    out
}

/// Step-size update shared by the integrators.
pub(crate) fn next_step_size<S: RealScalar>(h: S, err: S) -> S {
    let safety = S::from_f64_lossy(0.9);
    let tiny = S::from_f64_lossy(1e-30);
    let exponent = S::from_f64_lossy(-0.2);
    let factor = safety * err.max(tiny).powf(exponent);
    let lo = S::from_f64_lossy(0.2);
    let hi = S::from_f64_lossy(5.0);
    h * factor.max(lo).min(hi)
}

/// Integrates `x' = ad*_x x` from `x0`, forward for positive horizon and
/// backward for negative.
pub fn integrate_geodesic<S: RealScalar>(
    ma: &MetricAlgebra<S>,
    x0: &Vector<S>,
    opts: &IntegrationOptions,
) -> Result<Trajectory<S>> {
    if x0.dim() != ma.dim() {
        return Err(Error::InvalidInput(format!(
            "initial state has dimension {}, algebra has {}",
            x0.dim(),
            ma.dim()
        )));
    }
    if !(opts.tol > 0.0) || opts.horizon == 0.0 || !opts.horizon.is_finite() {
        return Err(Error::InvalidInput(
            "tolerance must be positive and horizon nonzero finite".to_string(),
        ));
    }
    let backward = opts.horizon < 0.0;
    let span = S::from_f64_lossy(opts.horizon.abs());
    let sign = if backward { -S::one() } else { S::one() };
    // Backward runs integrate s |-> x(-s), whose field is -F.
    let f = move |y: &Vector<S>| geodesic_field(ma, y).scale(&sign);

    let tol = S::from_f64_lossy(opts.tol);
    let blowup = S::from_f64_lossy(BLOWUP_NORM);
    let min_step = S::from_f64_lossy(MIN_STEP);

    let mut t = S::zero();
    let mut y = x0.clone();
    let mut times = vec![S::zero()];
    let mut states = vec![y.clone()];
    // (internal time, 1/|x|) of recent accepted steps, for the blowup fit.
    let mut recip_tail: Vec<(S, S)> = vec![(S::zero(), recip_norm(&y))];

    let mut h = {
        let fy = f(&y).norm();
        let scale = (S::one() + y.norm()) / (S::one() + fy);
        (S::from_f64_lossy(0.01) * scale).min(span)
    };

    let mut termination = None;
    let mut steps = 0usize;
    while termination.is_none() {
        steps += 1;
        if steps > MAX_STEPS {
            termination = Some(Termination::StepFailure {
                time: external_time(t, backward).to_f64_lossy(),
            });
            break;
        }
        let remaining = span - t;
        if remaining <= S::zero() {
            termination = Some(Termination::HorizonReached);
            break;
        }
        let clipped = h.min(remaining);
        let (candidate, err) = dp54_step(&f, &y, clipped, tol);
        if err <= S::one() {
            t = t + clipped;
            y = candidate;
            times.push(t);
            states.push(y.clone());
            recip_tail.push((t, recip_norm(&y)));
            if recip_tail.len() > 8 {
                recip_tail.remove(0);
            }
            if y.norm() >= blowup {
                let t_star = extrapolate_blowup(&recip_tail).unwrap_or(t);
                termination = Some(Termination::BlowupDetected {
                    estimated_time: external_time(t_star, backward)
                        .to_f64()
                        .expect("time fits in f64"),
                });
                break;
            }
            if t >= span {
                termination = Some(Termination::HorizonReached);
                break;
            }
        }
        h = next_step_size(clipped, err);
        if h < min_step {
            termination = Some(Termination::StepFailure {
                time: external_time(t, backward)
                    .to_f64()
                    .expect("time fits in f64"),
            });
        }
    }
    let termination = termination.expect("loop exits with a termination");

    let form = ma.form();
    let mut times: Vec<S> = times
        .into_iter()
        .map(|s| external_time(s, backward))
        .collect();
    let mut states = states;
    if backward {
        times.reverse();
        states.reverse();
    }
    let q_values: Vec<S> = states.iter().map(|x| form.eval(x, x)).collect();
    let q0 = if backward {
        *q_values.last().expect("nonempty trajectory")
    } else {
        q_values[0]
    };
    let energy_drift = q_values
        .iter()
        .map(|q| (*q - q0).abs())
        .fold(S::zero(), |m, d| m.max(d));

    Ok(Trajectory {
        times,
        states,
        q_values,
        termination,
        energy_drift,
    })
}

fn external_time<S: RealScalar>(s: S, backward: bool) -> S {
    if backward {
        -s
    } else {
        s
    }
}

fn recip_norm<S: RealScalar>(y: &Vector<S>) -> S {
    let n = y.norm();
    if n > S::zero() {
        S::one() / n
    } else {
        S::zero()
    }
}

/// Least-squares line through the reciprocal-norm tail; its zero crossing
/// estimates the escape time. `None` when the tail is too short or not
/// decreasing.
fn extrapolate_blowup<S: RealScalar>(tail: &[(S, S)]) -> Option<S> {
    if tail.len() < 2 {
        return None;
    }
    let n = S::from_f64_lossy(tail.len() as f64);
    let (mut st, mut sr, mut stt, mut str_) = (S::zero(), S::zero(), S::zero(), S::zero());
    for &(t, r) in tail {
        st = st + t;
        sr = sr + r;
        stt = stt + t * t;
        str_ = str_ + t * r;
    }
    let denom = n * stt - st * st;
    if denom.abs() <= S::zero() {
        return None;
    }
    let slope = (n * str_ - st * sr) / denom;
    if slope >= S::zero() {
        return None;
    }
    let intercept = (sr - slope * st) / n;
    Some(-intercept / slope)
}
