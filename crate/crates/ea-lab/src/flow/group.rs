//! Group-level curves: matrix realizations and solving `g' = g X(t)`.
//!
//! A trajectory in the algebra determines a curve in any matrix group
//! realizing it: push the algebra samples through the realization and
//! integrate the left-invariant transport equation. Between stored samples
//! the algebra path is interpolated by cubic Hermite using the field values
//! at the endpoints, and each interval is covered by enough fourth-order
//! Runge-Kutta substeps that the transport error stays below the sample
//! accuracy.

use crate::algebra::{Builtin, LieAlgebra};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::metric::MetricAlgebra;
use crate::scalar::{rat, RealScalar, Rational, Scalar};

use super::integrate::Trajectory;
use super::{cubic_hermite, geodesic_field};

/// Largest admissible homomorphism residual for float realizations.
pub const REALIZATION_TOL: f64 = 1e-9;

/// Linear map from the algebra into square matrices, one image per basis
/// element, checked to respect brackets on construction.
#[derive(Clone, Debug)]
pub struct MatrixRealization<S: Scalar> {
    images: Vec<Matrix<S>>,
    size: usize,
}

impl<S: Scalar> MatrixRealization<S> {
    /// Builds a realization after checking `[r(b_i), r(b_j)] = r([b_i, b_j])`
    /// on all basis pairs, up to `tol` in the largest matrix entry.
    pub fn new(algebra: &LieAlgebra<S>, images: Vec<Matrix<S>>, tol: S) -> Result<Self> {
        if images.len() != algebra.dim() {
            return Err(Error::InvalidRealization(format!(
                "{} images for a dimension {} algebra",
                images.len(),
                algebra.dim()
            )));
        }
        let size = match images.first() {
            Some(m) => m.rows(),
            None => return Err(Error::InvalidRealization("empty realization".to_string())),
        };
        for m in &images {
            if m.rows() != size || m.cols() != size {
                return Err(Error::InvalidRealization(
                    "images must be square matrices of one common size".to_string(),
                ));
            }
        }
        let realization = MatrixRealization { images, size };
        let residual = realization.homomorphism_residual(algebra);
        if residual > tol {
            return Err(Error::InvalidRealization(format!(
                "bracket mismatch, largest entry {}",
                residual
            )));
        }
        Ok(realization)
    }

    /// Largest entry of `[r(b_i), r(b_j)] - r([b_i, b_j])` over basis pairs.
    pub fn homomorphism_residual(&self, algebra: &LieAlgebra<S>) -> S {
        let n = self.images.len();
        let mut worst = S::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                let commutator = &(&self.images[i] * &self.images[j])
                    - &(&self.images[j] * &self.images[i]);
                let coeffs = algebra.bracket(&Vector::basis(n, i), &Vector::basis(n, j));
                let expected = self.apply(&coeffs);
                let gap = (&commutator - &expected).max_abs();
                if gap > worst {
                    worst = gap;
                }
            }
        }
        worst
    }

    /// Image of an algebra vector: the matching linear combination of the
    /// basis images.
    pub fn apply(&self, x: &Vector<S>) -> Matrix<S> {
        let mut out = Matrix::zeros(self.size, self.size);
        for (i, img) in self.images.iter().enumerate() {
            if x[i].is_zero() {
                continue;
            }
            out = &out + &img.scale(&x[i]);
        }
        out
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn images(&self) -> &[Matrix<S>] {
        &self.images
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> MatrixRealization<T> {
        MatrixRealization {
            images: self.images.iter().map(|m| m.map(&f)).collect(),
            size: self.size,
        }
    }
}

impl MatrixRealization<Rational> {
    pub fn to_float<F: Scalar>(&self) -> MatrixRealization<F> {
        self.map(F::from_rational)
    }
}

/// Exact matrix realization of a builtin algebra.
///
/// The three-dimensional algebras act on affine 3-space: translations fill
/// the last column, the distinguished direction acts by `diag(1, -1, 0)`
/// scaling or an infinitesimal rotation. The split form uses a 2x2 block
/// for the trace form realization, and the product stacks its factors into
/// diagonal blocks.
pub fn builtin_realization(b: Builtin) -> MatrixRealization<Rational> {
    let entry = |pairs: &[(usize, usize, Rational)], size: usize| {
        let mut m = Matrix::zeros(size, size);
        for (i, j, v) in pairs {
            m[(*i, *j)] = v.clone();
        }
        m
    };
    let images = match b {
        Builtin::Sl2 => vec![
            entry(&[(1, 0, rat(1, 1))], 2),
            entry(&[(0, 0, rat(1, 2)), (1, 1, rat(-1, 2))], 2),
            entry(&[(0, 1, rat(1, 2))], 2),
        ],
        Builtin::Sol => vec![
            entry(&[(0, 2, rat(1, 1))], 3),
            entry(&[(1, 2, rat(1, 1))], 3),
            entry(&[(0, 0, rat(1, 1)), (1, 1, rat(-1, 1))], 3),
        ],
        Builtin::Euc => vec![
            entry(&[(0, 2, rat(1, 1))], 3),
            entry(&[(1, 2, rat(1, 1))], 3),
            entry(&[(0, 1, rat(1, 1)), (1, 0, rat(-1, 1))], 3),
        ],
        Builtin::SolEuc => {
            let shift = |m: &Matrix<Rational>| {
                let mut out = Matrix::zeros(6, 6);
                for i in 0..3 {
                    for j in 0..3 {
                        out[(i + 3, j + 3)] = m[(i, j)].clone();
                    }
                }
                out
            };
            let embed = |m: &Matrix<Rational>| {
                let mut out = Matrix::zeros(6, 6);
                for i in 0..3 {
                    for j in 0..3 {
                        out[(i, j)] = m[(i, j)].clone();
                    }
                }
                out
            };
            let sol = builtin_realization(Builtin::Sol);
            let euc = builtin_realization(Builtin::Euc);
            let mut images: Vec<Matrix<Rational>> =
                sol.images().iter().map(&embed).collect();
            images.extend(euc.images().iter().map(&shift));
            images
        }
    };
    MatrixRealization::new(&b.algebra(), images, Rational::from_integer(0.into()))
        .expect("builtin realizations respect brackets")
}

/// Matrix exponential by scaling and squaring with a Taylor core.
///
/// The input is halved until its largest entry times the size is at most a
/// quarter, the series is summed to machine precision, and the result is
/// squared back up.
pub fn matrix_exp<S: RealScalar>(a: &Matrix<S>) -> Matrix<S> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "exponential of a non-square matrix");
    let quarter = S::from_f64_lossy(0.25);
    let two = S::from_int(2);
    let mut scaled = a.clone();
    let mut squarings = 0u32;
    let mut bound = a.max_abs() * S::from_f64_lossy(n as f64);
    while bound > quarter && squarings < 64 {
        bound = bound / two;
        squarings += 1;
    }
    if squarings > 0 {
        let factor = S::one() / S::from_f64_lossy(f64::powi(2.0, squarings as i32));
        scaled = scaled.scale(&factor);
    }

    let mut sum = Matrix::identity(n);
    let mut term = Matrix::identity(n);
    for k in 1..=40 {
        term = &term * &scaled;
        term = term.scale(&(S::one() / S::from_int(k)));
        sum = &sum + &term;
        if term.max_abs() <= S::from_f64_lossy(1e-20) * (S::one() + sum.max_abs()) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Group curve samples aligned with the trajectory that produced them.
#[derive(Clone, Debug)]
pub struct GroupCurve<S: Scalar> {
    pub times: Vec<S>,
    pub matrices: Vec<Matrix<S>>,
}

#[derive(Clone, Copy, Debug)]
pub struct ReconstructOptions {
    /// Substeps per unit of time and unit of field magnitude; each stored
    /// interval gets at least two.
    pub substep_density: f64,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        ReconstructOptions {
            substep_density: 16.0,
        }
    }
}

/// Solves `g' = g r(x(t))` through the stored trajectory with `g = I` at
/// time zero, which backward trajectories store last.
pub fn reconstruct_group_curve<S: RealScalar>(
    ma: &MetricAlgebra<S>,
    realization: &MatrixRealization<S>,
    traj: &Trajectory<S>,
    opts: &ReconstructOptions,
) -> Result<GroupCurve<S>> {
    if traj.states.is_empty() {
        return Err(Error::InvalidInput("empty trajectory".to_string()));
    }
    if realization.images().len() != ma.dim() {
        return Err(Error::InvalidRealization(format!(
            "realization covers dimension {}, algebra has {}",
            realization.images().len(),
            ma.dim()
        )));
    }
    if !(opts.substep_density > 0.0) {
        return Err(Error::InvalidInput(
            "substep density must be positive".to_string(),
        ));
    }
    let anchor = traj
        .times
        .iter()
        .position(|t| t.is_zero())
        .ok_or_else(|| Error::InvalidInput("trajectory lacks a time-zero sample".to_string()))?;

    let n = realization.size();
    let mut matrices = vec![Matrix::<S>::zeros(0, 0); traj.states.len()];
    matrices[anchor] = Matrix::identity(n);

    // March outward from the anchor in both directions; each interval is
    // integrated with the same interpolant regardless of direction.
    for k in anchor..traj.states.len().saturating_sub(1) {
        let g = transport_interval(ma, realization, traj, k, false, opts);
        matrices[k + 1] = &matrices[k] * &g;
    }
    for k in (0..anchor).rev() {
        let g = transport_interval(ma, realization, traj, k, true, opts);
        matrices[k] = &matrices[k + 1] * &g;
    }

    Ok(GroupCurve {
        times: traj.times.clone(),
        matrices,
    })
}

/// Transport over stored interval `[t_k, t_{k+1}]`: the matrix `g` with
/// `gamma(end) = gamma(start) g`, start and end swapped when `reversed`.
fn transport_interval<S: RealScalar>(
    ma: &MetricAlgebra<S>,
    realization: &MatrixRealization<S>,
    traj: &Trajectory<S>,
    k: usize,
    reversed: bool,
    opts: &ReconstructOptions,
) -> Matrix<S> {
    let x_a = &traj.states[k];
    let x_b = &traj.states[k + 1];
    let dt = traj.times[k + 1] - traj.times[k];
    let d_a = geodesic_field(ma, x_a);
    let d_b = geodesic_field(ma, x_b);
    let magnitude = x_a.max_abs().max(x_b.max_abs());
    let count = (opts.substep_density * dt.to_f64_lossy().abs() * (1.0 + magnitude.to_f64_lossy()))
        .ceil()
        .max(2.0)
        .min(4096.0) as usize;

    // X as a function of the interval parameter in [0, 1].
    let x_at = |theta: S| {
        let x = cubic_hermite(x_a, &d_a, x_b, &d_b, dt, theta);
        realization.apply(&x)
    };

    let n = realization.size();
    let mut g = Matrix::<S>::identity(n);
    let h = (S::one() / S::from_int(count as i64)) * if reversed { -S::one() } else { S::one() };
    let start = if reversed { S::one() } else { S::zero() };
    // dg/dtheta = g X(theta) dt, classic fourth-order Runge-Kutta.
    for step in 0..count {
        let theta = start + h * S::from_int(step as i64);
        let half = h / S::from_int(2);
        let scale = dt;
        let k1 = (&g * &x_at(theta)).scale(&scale);
        let g2 = &g + &k1.scale(&half);
        let k2 = (&g2 * &x_at(theta + half)).scale(&scale);
        let g3 = &g + &k2.scale(&half);
        let k3 = (&g3 * &x_at(theta + half)).scale(&scale);
        let g4 = &g + &k3.scale(&h);
        let k4 = (&g4 * &x_at(theta + h)).scale(&scale);
        let sixth = h / S::from_int(6);
        let two = S::from_int(2);
        let incr = &(&k1 + &k4) + &(&k2 + &k3).scale(&two);
        g = &g + &incr.scale(&sixth);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::integrate::{integrate_geodesic, IntegrationOptions, Termination};
    use num_traits::Zero;

    fn close(a: &Matrix<f64>, b: &Matrix<f64>, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn builtin_realizations_respect_brackets_exactly() {
        for b in Builtin::ALL {
            let r = builtin_realization(b);
            assert!(r.homomorphism_residual(&b.algebra()).is_zero(), "{b}");
        }
    }

    #[test]
    fn shuffled_images_are_rejected() {
        let good = builtin_realization(Builtin::Sl2);
        let mut images = good.images().to_vec();
        images.swap(0, 1);
        let err = MatrixRealization::new(
            &Builtin::Sl2.algebra(),
            images,
            Rational::from_integer(0.into()),
        );
        assert!(matches!(err, Err(Error::InvalidRealization(_))));
    }

    #[test]
    fn exp_of_split_null_direction_matches_closed_form() {
        // V = r(v0) squares to I/4, so exp(sV) = cosh(s/2) I + 2 sinh(s/2) V.
        let r: MatrixRealization<f64> = builtin_realization(Builtin::Sl2).to_float();
        let v0 = Vector(vec![0.375, -0.5, 1.0]);
        let v = r.apply(&v0);
        let vv = &v * &v;
        let quarter_identity = Matrix::identity(2).scale(&0.25);
        assert!(close(&vv, &quarter_identity, 1e-15));
        for s in [-3.0, -1.0, 0.0, 0.5, 2.0, 4.5] {
            let got = matrix_exp(&v.scale(&s));
            let c = (s / 2.0).cosh();
            let d = 2.0 * (s / 2.0).sinh();
            let want = &Matrix::identity(2).scale(&c) + &v.scale(&d);
            assert!(close(&got, &want, 1e-12), "s = {s}");
        }
    }

    #[test]
    fn exp_of_rotation_generator_matches_closed_form() {
        let r: MatrixRealization<f64> = builtin_realization(Builtin::Euc).to_float();
        let e = Vector(vec![0.0, 0.0, 1.0]);
        let gen = r.apply(&e);
        for theta in [0.0, 0.3, 1.0, 3.1, -2.2] {
            let got = matrix_exp(&gen.scale(&theta));
            let want = Matrix::from_rows(vec![
                vec![theta.cos(), theta.sin(), 0.0],
                vec![-theta.sin(), theta.cos(), 0.0],
                vec![0.0, 0.0, 1.0],
            ]);
            assert!(close(&got, &want, 1e-12), "theta = {theta}");
        }
    }

    #[test]
    fn constant_trajectory_reconstructs_one_parameter_subgroup() {
        // e1 is a zero of the field in the split-scaling algebra, so the
        // group curve is exp(t r(e1)) = I + t E13 exactly.
        let ma = Builtin::Sol.metric_algebra().to_float::<f64>();
        let r: MatrixRealization<f64> = builtin_realization(Builtin::Sol).to_float();
        let x0 = Vector(vec![1.0, 0.0, 0.0]);
        let opts = IntegrationOptions {
            tol: 1e-10,
            horizon: 2.0,
        };
        let traj = integrate_geodesic(&ma, &x0, &opts).unwrap();
        assert_eq!(traj.termination, Termination::HorizonReached);
        let curve =
            reconstruct_group_curve(&ma, &r, &traj, &ReconstructOptions::default()).unwrap();
        for (t, g) in curve.times.iter().zip(&curve.matrices) {
            let mut want = Matrix::identity(3);
            want[(0, 2)] = *t;
            assert!(close(g, &want, 1e-10), "t = {t}");
        }
    }

    #[test]
    fn radial_curve_stays_on_one_parameter_family() {
        // Along a radial solution all samples are parallel, so the curve is
        // exp(s(t) r(v0)) with s(t) = -ln(1 - t), checkable in closed form.
        let ma = Builtin::Sl2.metric_algebra().to_float::<f64>();
        let r: MatrixRealization<f64> = builtin_realization(Builtin::Sl2).to_float();
        let v0 = Vector(vec![0.375, -0.5, 1.0]);
        let opts = IntegrationOptions {
            tol: 1e-12,
            horizon: 0.9,
        };
        let traj = integrate_geodesic(&ma, &v0, &opts).unwrap();
        assert_eq!(traj.termination, Termination::HorizonReached);
        let curve =
            reconstruct_group_curve(&ma, &r, &traj, &ReconstructOptions::default()).unwrap();
        let v = r.apply(&v0);
        for (t, g) in curve.times.iter().zip(&curve.matrices) {
            let s = -(1.0 - t).ln();
            let c = (s / 2.0).cosh();
            let d = 2.0 * (s / 2.0).sinh();
            let want = &Matrix::identity(2).scale(&c) + &v.scale(&d);
            assert!(close(g, &want, 1e-6), "t = {t}");
        }
    }

    #[test]
    fn backward_trajectory_anchors_identity_at_time_zero() {
        let ma = Builtin::Sol.metric_algebra().to_float::<f64>();
        let r: MatrixRealization<f64> = builtin_realization(Builtin::Sol).to_float();
        let x0 = Vector(vec![1.0, 0.0, 0.0]);
        let opts = IntegrationOptions {
            tol: 1e-10,
            horizon: -1.5,
        };
        let traj = integrate_geodesic(&ma, &x0, &opts).unwrap();
        let curve =
            reconstruct_group_curve(&ma, &r, &traj, &ReconstructOptions::default()).unwrap();
        let last = curve.matrices.last().unwrap();
        assert!(close(last, &Matrix::identity(3), 0.0));
        for (t, g) in curve.times.iter().zip(&curve.matrices) {
            let mut want = Matrix::identity(3);
            want[(0, 2)] = *t;
            assert!(close(g, &want, 1e-10), "t = {t}");
        }
    }
}
