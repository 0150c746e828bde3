//! Spherized dynamics: orbits of the direction field on the unit sphere.
//!
//! Scaling by positive reals sends geodesics to geodesics with rescaled
//! time, so the qualitative picture lives on the unit sphere with the
//! tangential field `G(u) = F(u) - (F(u) . u) u`. Zeros of `G` are exactly
//! the directions where `F(v)` is parallel to `v`.
//!
//! Closed orbits are detected on the section through the start point with
//! normal along the initial velocity: a sign change of the section
//! coordinate between accepted steps is refined by cubic Hermite
//! interpolation, so returns are found even when no accepted step lands
//! near the start. Verdicts are conservative: a class is only claimed when
//! its defining inequality holds with the documented margins, everything
//! else stays `Unresolved` with the collected evidence attached.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::metric::MetricAlgebra;
use crate::scalar::{RealScalar, Scalar};
use serde::Serialize;

use super::integrate::{dp54_step, next_step_size, MIN_STEP};
use super::{
    cubic_hermite, field_jacobian, geodesic_field, sphere_field, sphere_field_unchecked,
};

/// `|G(u)|` below this means `u` sits at a fixed point.
pub const FIXED_POINT_TOL: f64 = 1e-9;

/// Refined return distance below which a loop closes.
pub const CLOSED_ORBIT_TOL: f64 = 1e-6;

/// Shortest admissible period for a closed orbit.
pub const MIN_PERIOD: f64 = 1e-3;

/// Largest angle between initial and returning velocity of a closed orbit.
pub const MAX_RETURN_ANGLE_DEG: f64 = 30.0;

/// No closed orbit is claimed within this distance of a fixed point.
pub const FIXED_POINT_EXCLUSION: f64 = 10.0 * CLOSED_ORBIT_TOL;

/// Section crossings farther than this from the start are ignored; keeps
/// far-side crossings of the section plane out of the return candidates.
const SECTION_CAPTURE: f64 = 0.05;

/// Newton iterations used when polishing a candidate zero of `G`.
pub const NEWTON_MAX_ITER: usize = 160;

/// Residual target of the Newton polish.
pub const NEWTON_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrbitClass {
    /// The initial point itself is a zero of the sphere field.
    FixedPoint { residual: f64 },
    /// The orbit slowed below the fixed point tolerance; `target` is the
    /// polished zero when the polish converges, otherwise the final point
    /// (zeros with degenerate linearization defeat the polish).
    ConvergesToFixedPoint { target: Vec<f64> },
    /// The orbit returned to its start transversally.
    ClosedOrbit { period: f64, return_distance: f64 },
    /// No verdict within the horizon.
    Unresolved { reason: String },
}

/// Raw numbers backing a verdict.
#[derive(Clone, Debug, Serialize)]
pub struct OrbitEvidence {
    pub horizon: f64,
    pub steps: usize,
    /// Closest refined section return after `MIN_PERIOD`, if any crossing
    /// happened within the capture radius.
    pub min_return_distance: Option<f64>,
    pub min_return_time: Option<f64>,
    pub final_speed: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitVerdict {
    pub class: OrbitClass,
    pub evidence: OrbitEvidence,
}

/// One spherized orbit: samples at accepted steps plus the verdict.
#[derive(Clone, Debug)]
pub struct SphereOrbit<S: Scalar> {
    pub initial: Vector<S>,
    pub times: Vec<S>,
    pub states: Vec<Vector<S>>,
    pub verdict: OrbitVerdict,
}

#[derive(Clone, Copy, Debug)]
pub struct OrbitOptions {
    /// Sphere-time horizon; negative runs the direction field backward.
    pub horizon: f64,
    pub tol: f64,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        OrbitOptions {
            horizon: 200.0,
            tol: 1e-9,
        }
    }
}

/// Damped Gauss-Newton for `G(u) = 0` on the sphere: tangential updates
/// with renormalization after each step. Returns the polished point and its
/// residual when the iteration settles below [`NEWTON_TOL`].
pub fn newton_polish_sphere<S: RealScalar>(
    ma: &MetricAlgebra<S>,
    start: &Vector<S>,
) -> Option<(Vector<S>, S)> {
    let n = ma.dim();
    let mut u = start.normalized();
    let accept = S::from_f64_lossy(NEWTON_TOL);
    // Damping starts at a scale that suppresses right-hand-side noise but
    // may relax far below it: residuals of degenerate zeros shrink as a
    // power of the offset, and holding the damp at a fixed floor would
    // freeze their slow modes long before the offset reaches its own floor.
    let init_damp = S::from_f64_lossy(1e-12);
    let damp_floor = S::from_f64_lossy(1e-300);
    let damp_cap = S::from_f64_lossy(1e6);
    let damp_step = S::from_f64_lossy(1e2);
    let half = S::from_f64_lossy(0.5);
    let mut damp = init_damp;
    let mut best: Option<(Vector<S>, S)> = None;
    for _ in 0..NEWTON_MAX_ITER {
        let g = sphere_field_unchecked(ma, &u);
        let gn = g.norm();
        if !gn.is_finite() {
            break;
        }
        match &mut best {
            Some((bu, bn)) => {
                if gn < *bn {
                    bu.clone_from(&u);
                    *bn = gn;
                } else if *bn <= accept {
                    // An accepted root has hit its attainable floor. For
                    // nondegenerate zeros the floor sits near machine
                    // precision within a few steps; for degenerate zeros
                    // the residual is a power of the offset and keeps
                    // contracting, which carries the root far below the
                    // acceptance level and makes downstream eigenvalue,
                    // causal, and dedup decisions clean.
                    break;
                }
            }
            None => best = Some((u.clone(), gn)),
        }
        if gn.is_zero() {
            break;
        }
        let j = sphere_jacobian(ma, &u);
        let jt = j.transpose();
        let jtj = &jt * &j;
        let scale = jtj.max_abs();
        if scale <= S::zero() {
            break;
        }
        let inv = S::one() / scale;
        // The radial direction is removed from the step below, so pin it
        // inside the solve as well: left free, its near-zero pivot turns
        // curvature noise in the right-hand side into enormous spurious
        // components. The system is normalized so the damping is relative
        // to the problem scale, which keeps the slow modes of degenerate
        // zeros contracting even as the whole Jacobian shrinks.
        let mut m = Matrix::from_fn(n, n, |i, k| (jtj[(i, k)] + scale * u[i] * u[k]) * inv);
        for i in 0..n {
            m[(i, i)] = m[(i, i)] + damp;
        }
        let rhs = jt.matvec(&g).scale(&inv);
        let escalate = |d: S| {
            let next = d * damp_step;
            if next > damp_cap {
                None
            } else {
                Some(next)
            }
        };
        // Zero pivot threshold: the pinned, damped system is positive
        // definite, and pivots near the damp are exactly the directions
        // the damp controls.
        let delta = match m.solve_with_pivot_tol(&rhs, &S::zero()) {
            Ok(d) => d,
            Err(_) => match escalate(damp) {
                Some(d) => {
                    damp = d;
                    continue;
                }
                None => break,
            },
        };
        // Tangential part only; the radial component is noise.
        let radial = delta.dot(&u);
        let mut delta = &delta - &u.scale(&radial);
        let dn = delta.norm();
        if !dn.is_finite() {
            break;
        }
        if dn > S::one() {
            delta = delta.scale(&(S::one() / dn));
        }
        // Backtracking keeps the iteration a descent for |G|: zeros are
        // minima of the squared residual even when they are saddles of the
        // flow, so basins widen instead of full steps wandering off. When
        // even short steps fail, Levenberg-Marquardt escalation bends the
        // direction toward the gradient; it relaxes again while steps
        // succeed, so clean Newton contraction is kept where it works.
        let mut improved = false;
        for _ in 0..10 {
            let cand = (&u - &delta).normalized();
            if sphere_field_unchecked(ma, &cand).norm() < gn {
                u = cand;
                improved = true;
                break;
            }
            delta = delta.scale(&half);
        }
        if improved {
            damp = (damp / damp_step).max(damp_floor);
        } else {
            match escalate(damp) {
                Some(d) => damp = d,
                None => break,
            }
        }
    }
    match best {
        Some((bu, bn)) if bn <= accept => Some((bu, bn)),
        _ => None,
    }
}

/// Jacobian of the spherized field at a unit vector.
fn sphere_jacobian<S: RealScalar>(ma: &MetricAlgebra<S>, u: &Vector<S>) -> Matrix<S> {
    let n = ma.dim();
    let f = geodesic_field(ma, u);
    let df = field_jacobian(ma, u);
    let radial = f.dot(u);
    // G = F - (F.u) u; DG = DF - (F.u) I - u (DF^T u + F)^T.
    let grad = &df.transpose().matvec(u) + &f;
    Matrix::from_fn(n, n, |i, j| {
        let mut v = df[(i, j)];
        if i == j {
            v = v - radial;
        }
        v - u[i] * grad[j]
    })
}

/// Integrates the sphere field from a unit vector and classifies the orbit.
pub fn classify_sphere_orbit<S: RealScalar>(
    ma: &MetricAlgebra<S>,
    u0: &Vector<S>,
    opts: &OrbitOptions,
) -> Result<SphereOrbit<S>> {
    if u0.dim() != ma.dim() {
        return Err(Error::InvalidInput(format!(
            "initial direction has dimension {}, algebra has {}",
            u0.dim(),
            ma.dim()
        )));
    }
    // Validates the unit-norm contract.
    let g0 = sphere_field(ma, u0)?;
    if !(opts.tol > 0.0) || opts.horizon == 0.0 || !opts.horizon.is_finite() {
        return Err(Error::InvalidInput(
            "tolerance must be positive and horizon nonzero finite".to_string(),
        ));
    }

    let fix_tol = S::from_f64_lossy(FIXED_POINT_TOL);
    let close_tol = S::from_f64_lossy(CLOSED_ORBIT_TOL);
    let min_period = S::from_f64_lossy(MIN_PERIOD);
    let cos_max_angle = S::from_f64_lossy(MAX_RETURN_ANGLE_DEG.to_radians().cos());
    let exclusion = S::from_f64_lossy(FIXED_POINT_EXCLUSION);
    let capture = S::from_f64_lossy(SECTION_CAPTURE);

    let start = u0.normalized();
    let mut times = vec![S::zero()];
    let mut states = vec![start.clone()];

    if g0.norm() <= fix_tol {
        let verdict = OrbitVerdict {
            class: OrbitClass::FixedPoint {
                residual: g0.norm().to_f64_lossy(),
            },
            evidence: OrbitEvidence {
                horizon: opts.horizon,
                steps: 0,
                min_return_distance: None,
                min_return_time: None,
                final_speed: g0.norm().to_f64_lossy(),
            },
        };
        return Ok(SphereOrbit {
            initial: u0.clone(),
            times,
            states,
            verdict,
        });
    }

    let backward = opts.horizon < 0.0;
    let sign = if backward { -S::one() } else { S::one() };
    let f = move |u: &Vector<S>| sphere_field_unchecked(ma, u).scale(&sign);
    let span = S::from_f64_lossy(opts.horizon.abs());
    let tol = S::from_f64_lossy(opts.tol);
    let min_step = S::from_f64_lossy(MIN_STEP);

    // Section through the start, normal along the initial velocity.
    let section_normal = f(&start).normalized();
    let section = |u: &Vector<S>| (u - &start).dot(&section_normal);

    let mut u = start.clone();
    let mut t = S::zero();
    let mut s_prev = S::zero();
    let mut h = S::from_f64_lossy(0.01);
    let mut steps = 0usize;
    let mut min_return: Option<(S, S)> = None;

    let final_class: OrbitClass = loop {
        if t >= span {
            break OrbitClass::Unresolved {
                reason: "horizon reached without convergence or recurrence".to_string(),
            };
        }
        if steps > 4_000_000 {
            break OrbitClass::Unresolved {
                reason: "step budget exhausted".to_string(),
            };
        }
        steps += 1;
        let clipped = h.min(span - t);
        let (candidate, err) = dp54_step(&f, &u, clipped, tol);
        if err <= S::one() {
            let u_prev = u.clone();
            let t_prev = t;
            t = t + clipped;
            u = candidate.normalized();
            times.push(if backward { -t } else { t });
            states.push(u.clone());

            let speed = f(&u).norm();
            if speed <= fix_tol {
                let target = newton_polish_sphere(ma, &u)
                    .map(|(v, _)| v)
                    .unwrap_or_else(|| u.clone());
                break OrbitClass::ConvergesToFixedPoint {
                    target: target.iter().map(|x| x.to_f64_lossy()).collect(),
                };
            }

            let s_now = section(&u);
            let crossed = s_prev < S::zero() && s_now >= S::zero();
            if crossed && u.dist(&start) < capture {
                let d_a = f(&u_prev);
                let d_b = f(&u);
                // Bisect the section coordinate on the Hermite interpolant.
                let mut lo = S::zero();
                let mut hi = S::one();
                for _ in 0..80 {
                    let mid = (lo + hi) / S::from_int(2);
                    let p = cubic_hermite(&u_prev, &d_a, &u, &d_b, clipped, mid);
                    if section(&p.normalized()) < S::zero() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let theta = (lo + hi) / S::from_int(2);
                let p = cubic_hermite(&u_prev, &d_a, &u, &d_b, clipped, theta).normalized();
                let d = p.dist(&start);
                let t_cross = t_prev + theta * clipped;
                if t_cross >= min_period {
                    if min_return.map_or(true, |(best, _)| d < best) {
                        min_return = Some((d, t_cross));
                    }
                    if d < close_tol {
                        let g_now = f(&p);
                        let g_start = f(&start);
                        let aligned =
                            g_now.dot(&g_start) >= cos_max_angle * g_now.norm() * g_start.norm();
                        let near_fixed_point = newton_polish_sphere(ma, &p)
                            .map(|(root, _)| p.dist(&root) < exclusion)
                            .unwrap_or(false);
                        if aligned && !near_fixed_point {
                            break OrbitClass::ClosedOrbit {
                                period: t_cross.to_f64_lossy(),
                                return_distance: d.to_f64_lossy(),
                            };
                        }
                    }
                }
            }
            s_prev = s_now;
        }
        h = next_step_size(clipped, err);
        if h < min_step {
            break OrbitClass::Unresolved {
                reason: "step size collapsed".to_string(),
            };
        }
    };

    let final_speed = sphere_field_unchecked(ma, &u).norm().to_f64_lossy();
    let verdict = OrbitVerdict {
        class: final_class,
        evidence: OrbitEvidence {
            horizon: opts.horizon,
            steps,
            min_return_distance: min_return.map(|(d, _)| d.to_f64_lossy()),
            min_return_time: min_return.map(|(_, tc)| tc.to_f64_lossy()),
            final_speed,
        },
    };
    Ok(SphereOrbit {
        initial: u0.clone(),
        times,
        states,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Builtin, LieAlgebra};
    use crate::metric::BilinearForm;
    use crate::scalar::rat;

    fn sl2() -> MetricAlgebra<f64> {
        Builtin::Sl2.metric_algebra().to_float()
    }

    #[test]
    fn v0_direction_is_a_fixed_point() {
        let ma = sl2();
        let u0 = Vector(vec![0.375, -0.5, 1.0]).normalized();
        let orbit = classify_sphere_orbit(&ma, &u0, &OrbitOptions::default()).unwrap();
        assert!(matches!(orbit.verdict.class, OrbitClass::FixedPoint { .. }));
    }

    #[test]
    fn e_direction_is_a_fixed_point() {
        let ma = sl2();
        let u0 = Vector(vec![1.0, 0.0, 0.0]);
        let orbit = classify_sphere_orbit(&ma, &u0, &OrbitOptions::default()).unwrap();
        assert!(matches!(orbit.verdict.class, OrbitClass::FixedPoint { .. }));
    }

    #[test]
    fn plane_orbit_converges_to_positive_e() {
        // Within the invariant plane the direction flow pushes every
        // non-fixed direction toward the e axis. The zero there has a fully
        // degenerate linearization, so the speed decays like t^(-3/2) and a
        // long horizon is needed before it drops below the tolerance.
        let ma = sl2();
        let u0 = Vector(vec![0.0, 1.0, 0.0]);
        let opts = OrbitOptions {
            horizon: 2e7,
            tol: 1e-9,
        };
        let orbit = classify_sphere_orbit(&ma, &u0, &opts).unwrap();
        match &orbit.verdict.class {
            OrbitClass::ConvergesToFixedPoint { target } => {
                assert!(target[0] > 0.999, "target {target:?}");
                assert!(target[1].abs() < 1e-2);
                assert!(target[2].abs() < 1e-5);
            }
            other => panic!("expected convergence, got {other:?}"),
        }
    }

    #[test]
    fn non_unit_start_is_rejected() {
        let ma = sl2();
        let bad = Vector(vec![1.0, 1.0, 0.0]);
        assert!(classify_sphere_orbit(&ma, &bad, &OrbitOptions::default()).is_err());
    }

    #[test]
    fn rigid_body_polhode_is_a_closed_orbit() {
        // Compact cross-product algebra with distinct inertia eigenvalues:
        // solutions near the stable axes are periodic, so the spherized
        // orbit closes. This exercises the return branch that the builtin
        // geometries never hit.
        let so3: LieAlgebra<f64> = LieAlgebra::from_brackets(
            &["x", "y", "z"],
            &[
                (0, 1, &[(2, rat(1, 1))]),
                (1, 2, &[(0, rat(1, 1))]),
                (2, 0, &[(1, rat(1, 1))]),
            ],
        )
        .unwrap()
        .to_float();
        let inertia = BilinearForm::new(Matrix::from_rows(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 3.0],
        ]))
        .unwrap();
        let ma = MetricAlgebra::new(so3, inertia).unwrap();
        let u0 = Vector(vec![1.0, 0.25, 0.1]).normalized();
        let orbit = classify_sphere_orbit(&ma, &u0, &OrbitOptions::default()).unwrap();
        match orbit.verdict.class {
            OrbitClass::ClosedOrbit {
                period,
                return_distance,
            } => {
                // Linearization at the stable axis gives 2 pi sqrt(3), the
                // finite amplitude stretches it slightly.
                assert!(period > 10.5 && period < 12.0, "period {period}");
                assert!(return_distance < CLOSED_ORBIT_TOL);
            }
            ref other => panic!("expected closed orbit, got {other:?}"),
        }
    }

    #[test]
    fn newton_polish_lands_on_fixed_directions() {
        let ma = sl2();
        let near_v0 = Vector(vec![0.376, -0.499, 1.001]).normalized();
        let (root, residual) = newton_polish_sphere(&ma, &near_v0).unwrap();
        assert!(residual < 1e-12);
        let v0 = Vector(vec![0.375, -0.5, 1.0]).normalized();
        assert!(root.dist(&v0) < 1e-9);
    }
}
