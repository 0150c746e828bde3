//! The geodesic vector field and its structural residuals.
//!
//! On a metric Lie algebra the geodesic equation reads `x' = ad*_x x`, a
//! quadratic field `F`. Everything here works for any scalar: over
//! rationals the residuals certify invariance claims exactly, over floats
//! they feed the numeric pipeline.
//!
//! The quadratic structure is exploited throughout: `F(x) = B(x, x)` for
//! the symmetric bilinear map `B(u, v) = (ad*_u v + ad*_v u) / 2`, so
//! statements about `F` on a subspace reduce to finitely many values of `B`
//! on basis pairs.

pub mod group;
pub mod integrate;
pub mod sphere;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::metric::MetricAlgebra;
use crate::scalar::{RealScalar, Scalar};

/// Unit vectors may be off the sphere by at most this much.
pub const UNIT_SPHERE_TOL: f64 = 1e-9;

/// Cubic Hermite value on one step from `y_a` to `y_b` with endpoint
/// derivatives `d_a`, `d_b`; `theta` in `[0, 1]`, `h` the step length.
pub(crate) fn cubic_hermite<S: RealScalar>(
    y_a: &Vector<S>,
    d_a: &Vector<S>,
    y_b: &Vector<S>,
    d_b: &Vector<S>,
    h: S,
    theta: S,
) -> Vector<S> {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    let two = S::from_int(2);
    let three = S::from_int(3);
    let c_a = two * t3 - three * t2 + S::one();
    let c_da = (t3 - two * t2 + theta) * h;
    let c_b = three * t2 - two * t3;
    let c_db = (t3 - t2) * h;
    Vector::from_fn(y_a.dim(), |i| {
        c_a * y_a[i] + c_da * d_a[i] + c_b * y_b[i] + c_db * d_b[i]
    })
}

/// The Euler-Arnold field `F(x) = ad*_x x`.
pub fn geodesic_field<S: Scalar>(ma: &MetricAlgebra<S>, x: &Vector<S>) -> Vector<S> {
    ma.adstar_matrix(x).matvec(x)
}

/// Polarization of `F`: the symmetric bilinear map with `B(x, x) = F(x)`.
pub fn polarized_field<S: Scalar>(
    ma: &MetricAlgebra<S>,
    u: &Vector<S>,
    v: &Vector<S>,
) -> Vector<S> {
    let half = S::one() / S::from_int(2);
    let uv = ma.adstar_matrix(u).matvec(v);
    let vu = ma.adstar_matrix(v).matvec(u);
    (&uv + &vu).scale(&half)
}

/// Jacobian of `F` at `x`: `DF(x) w = B(x, w) + B(w, x) = ad*_x w + ad*_w x`.
pub fn field_jacobian<S: Scalar>(ma: &MetricAlgebra<S>, x: &Vector<S>) -> Matrix<S> {
    let n = ma.dim();
    let m_x = ma.adstar_matrix(x);
    Matrix::from_fn(n, n, |i, j| {
        m_x[(i, j)].clone() + ma.adstar_basis(j).matvec(x)[i].clone()
    })
}

/// How far `F` moves a subspace out of itself.
///
/// `F` maps `span(v_1..v_m)` into itself exactly when every polarized value
/// `B(v_i, v_j)` stays in the span; the residual is the largest coefficient
/// of any such value's component orthogonal to the span (Euclidean
/// projection via normal equations, exact over rationals). Zero iff the
/// subspace is invariant under the flow.
pub fn invariant_subspace_residual<S: Scalar>(
    ma: &MetricAlgebra<S>,
    span: &[Vector<S>],
) -> Result<S> {
    let n = ma.dim();
    if span.is_empty() || span.len() > n {
        return Err(Error::InvalidInput(format!(
            "span of {} vectors in dimension {n}",
            span.len()
        )));
    }
    for v in span {
        if v.dim() != n {
            return Err(Error::InvalidInput(
                "span vector dimension mismatch".to_string(),
            ));
        }
    }
    let s = Matrix::from_cols(span);
    if s.rank() != span.len() {
        return Err(Error::InvalidInput(
            "span vectors are linearly dependent".to_string(),
        ));
    }
    let st = s.transpose();
    let gram_inv = (&st * &s).inverse().expect("full-rank Gram matrix");
    let mut worst = S::zero();
    for i in 0..span.len() {
        for j in i..span.len() {
            let w = polarized_field(ma, &span[i], &span[j]);
            let coeffs = gram_inv.matvec(&st.matvec(&w));
            let residual = (&w - &s.matvec(&coeffs)).max_abs();
            if residual > worst {
                worst = residual;
            }
        }
    }
    Ok(worst)
}

/// How far the projection onto `line` along `complement` is from commuting
/// with `F`.
///
/// Both composites are quadratic maps, so they agree everywhere exactly
/// when their polarizations agree on basis pairs; the residual is the
/// largest coefficient mismatch over those pairs. Zero iff the projection
/// is equivariant for the flow.
pub fn projection_equivariance_residual<S: Scalar>(
    ma: &MetricAlgebra<S>,
    line: &Vector<S>,
    complement: &[Vector<S>],
) -> Result<S> {
    let n = ma.dim();
    if complement.len() + 1 != n {
        return Err(Error::InvalidInput(format!(
            "line plus {} complement vectors do not span dimension {n}",
            complement.len()
        )));
    }
    let mut cols = vec![line.clone()];
    cols.extend_from_slice(complement);
    let t = Matrix::from_cols(&cols);
    let t_inv = t
        .inverse()
        .map_err(|_| Error::InvalidInput("line and complement do not span".to_string()))?;
    // sigma(v) = (first coordinate of v in the adapted basis) * line.
    let sigma_coeff = |v: &Vector<S>| t_inv.matvec(v)[0].clone();
    let f_line = geodesic_field(ma, line);
    let mut worst = S::zero();
    for i in 0..n {
        let bi = Vector::basis(n, i);
        let ci = sigma_coeff(&bi);
        for j in i..n {
            let bj = Vector::basis(n, j);
            let cj = sigma_coeff(&bj);
            // sigma(B(b_i, b_j)) versus B(sigma b_i, sigma b_j).
            let lhs = line.scale(&sigma_coeff(&polarized_field(ma, &bi, &bj)));
            let rhs = f_line.scale(&(ci.clone() * cj));
            let m = (&lhs - &rhs).max_abs();
            if m > worst {
                worst = m;
            }
        }
    }
    Ok(worst)
}

/// The spherized field: the tangential part of `F` on the unit sphere,
/// `G(u) = F(u) - (F(u) . u) u`. Rejects inputs off the sphere.
pub fn sphere_field<S: RealScalar>(ma: &MetricAlgebra<S>, u: &Vector<S>) -> Result<Vector<S>> {
    let norm_err = (u.norm() - S::one()).abs();
    if norm_err > S::from_f64_lossy(UNIT_SPHERE_TOL) {
        return Err(Error::InvalidInput(format!(
            "sphere field needs a unit vector, |u| is off by {norm_err}"
        )));
    }
    Ok(sphere_field_unchecked(ma, u))
}

pub(crate) fn sphere_field_unchecked<S: RealScalar>(
    ma: &MetricAlgebra<S>,
    u: &Vector<S>,
) -> Vector<S> {
    let f = geodesic_field(ma, u);
    let radial = f.dot(u);
    &f - &u.scale(&radial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Builtin;
    use crate::scalar::{rat, Rational};
    use num_traits::Zero;

    fn rv(coords: &[(i64, i64)]) -> Vector<Rational> {
        Vector(coords.iter().map(|&(n, d)| rat(n, d)).collect())
    }

    fn iv(coords: &[i64]) -> Vector<Rational> {
        Vector(coords.iter().map(|&n| rat(n, 1)).collect())
    }

    #[test]
    fn sl2_field_fixes_v0_exactly() {
        let ma = Builtin::Sl2.metric_algebra();
        let v0 = rv(&[(3, 8), (-1, 2), (1, 1)]);
        assert_eq!(geodesic_field(&ma, &v0), v0);
        assert!(ma.form().eval(&v0, &v0).is_zero());
    }

    #[test]
    fn sol_field_matches_closed_form() {
        let ma = Builtin::Sol.metric_algebra();
        let x = rv(&[(2, 3), (-1, 5), (7, 2)]);
        let (a, b, c) = (rat(2, 3), rat(-1, 5), rat(7, 2));
        let expect = Vector(vec![
            b.clone() * b.clone() - a * c.clone(),
            -b * c.clone(),
            c.clone() * c,
        ]);
        assert_eq!(geodesic_field(&ma, &x), expect);
    }

    #[test]
    fn euc_field_matches_closed_form() {
        let ma = Builtin::Euc.metric_algebra();
        let x = rv(&[(1, 2), (4, 3), (-3, 7)]);
        let (a, b, c) = (rat(1, 2), rat(4, 3), rat(-3, 7));
        let expect = Vector(vec![
            a * b.clone() - b.clone() * c.clone(),
            c.clone() * c.clone(),
            -b * c,
        ]);
        assert_eq!(geodesic_field(&ma, &x), expect);
    }

    #[test]
    fn field_is_two_homogeneous() {
        let ma = Builtin::SolEuc.metric_algebra();
        let x = rv(&[(1, 2), (-2, 3), (3, 4), (1, 5), (0, 1), (5, 6)]);
        let c = rat(-7, 3);
        let lhs = geodesic_field(&ma, &x.scale(&c));
        let rhs = geodesic_field(&ma, &x).scale(&(c.clone() * c));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn biinvariant_metric_has_zero_field() {
        let g = Builtin::Sl2.algebra();
        let k = crate::metric::BilinearForm::new(g.killing_form()).unwrap();
        let ma = MetricAlgebra::new(g, k).unwrap();
        let x = rv(&[(5, 7), (-3, 2), (11, 4)]);
        assert!(geodesic_field(&ma, &x).is_zero());
    }

    #[test]
    fn polarization_recovers_field_on_diagonal() {
        let ma = Builtin::Sl2.metric_algebra();
        let x = rv(&[(1, 3), (2, 5), (-1, 2)]);
        assert_eq!(polarized_field(&ma, &x, &x), geodesic_field(&ma, &x));
    }

    #[test]
    fn field_jacobian_is_directional_derivative_of_quadratic() {
        let ma = Builtin::Sol.metric_algebra();
        let x = rv(&[(1, 2), (1, 3), (-2, 5)]);
        let w = rv(&[(3, 1), (-1, 4), (1, 7)]);
        // For quadratic F: F(x + w) - F(x) - F(w) = DF(x) w exactly.
        let lhs = &(&geodesic_field(&ma, &(&x + &w)) - &geodesic_field(&ma, &x))
            - &geodesic_field(&ma, &w);
        assert_eq!(field_jacobian(&ma, &x).matvec(&w), lhs);
    }

    #[test]
    fn sl2_plane_span_e_h_is_invariant() {
        let ma = Builtin::Sl2.metric_algebra();
        let span = [iv(&[1, 0, 0]), iv(&[0, 1, 0])];
        assert!(invariant_subspace_residual(&ma, &span).unwrap().is_zero());
    }

    #[test]
    fn sol_plane_span_e1_e2_is_invariant() {
        let ma = Builtin::Sol.metric_algebra();
        let span = [iv(&[1, 0, 0]), iv(&[0, 1, 0])];
        assert!(invariant_subspace_residual(&ma, &span).unwrap().is_zero());
    }

    #[test]
    fn euc_translation_plane_is_invariant() {
        let ma = Builtin::Euc.metric_algebra();
        let span = [iv(&[1, 0, 0]), iv(&[0, 1, 0])];
        assert!(invariant_subspace_residual(&ma, &span).unwrap().is_zero());
    }

    #[test]
    fn euc_span_f1_e_is_not_invariant() {
        // B(e, e) = F(e) = f2 sticks straight out of span(f1, e).
        let ma = Builtin::Euc.metric_algebra();
        let span = [iv(&[1, 0, 0]), iv(&[0, 0, 1])];
        assert_eq!(invariant_subspace_residual(&ma, &span).unwrap(), rat(1, 1));
    }

    #[test]
    fn dependent_span_is_rejected() {
        let ma = Builtin::Sl2.metric_algebra();
        let span = [iv(&[1, 1, 0]), iv(&[2, 2, 0])];
        assert!(invariant_subspace_residual(&ma, &span).is_err());
    }

    #[test]
    fn sl2_projection_onto_v0_is_equivariant() {
        let ma = Builtin::Sl2.metric_algebra();
        let v0 = rv(&[(3, 8), (-1, 2), (1, 1)]);
        let complement = [iv(&[1, 0, 0]), iv(&[0, 1, 0])];
        assert!(projection_equivariance_residual(&ma, &v0, &complement)
            .unwrap()
            .is_zero());
    }

    #[test]
    fn sol_projection_onto_h_is_equivariant() {
        let ma = Builtin::Sol.metric_algebra();
        let h = iv(&[0, 0, 1]);
        let complement = [iv(&[1, 0, 0]), iv(&[0, 1, 0])];
        assert!(projection_equivariance_residual(&ma, &h, &complement)
            .unwrap()
            .is_zero());
    }

    #[test]
    fn sl2_projection_onto_e_is_not_equivariant() {
        let ma = Builtin::Sl2.metric_algebra();
        let e = iv(&[1, 0, 0]);
        let complement = [iv(&[0, 1, 0]), iv(&[0, 0, 1])];
        let r = projection_equivariance_residual(&ma, &e, &complement).unwrap();
        assert!(r > rat(0, 1));
    }

    #[test]
    fn degenerate_projection_basis_is_rejected() {
        let ma = Builtin::Sl2.metric_algebra();
        let e = iv(&[1, 0, 0]);
        let complement = [iv(&[1, 0, 0]), iv(&[0, 0, 1])];
        assert!(projection_equivariance_residual(&ma, &e, &complement).is_err());
    }

    #[test]
    fn sphere_field_is_tangent_and_rejects_non_unit_input() {
        let ma: MetricAlgebra<f64> = Builtin::Sl2.metric_algebra().to_float();
        let u = Vector(vec![0.6, 0.8, 0.0]);
        let g = sphere_field(&ma, &u).unwrap();
        assert!(g.dot(&u).abs() < 1e-14);
        let bad = Vector(vec![1.0, 1.0, 0.0]);
        assert!(sphere_field(&ma, &bad).is_err());
    }

    #[test]
    fn sphere_field_vanishes_at_projective_fixed_directions() {
        let ma: MetricAlgebra<f64> = Builtin::Sl2.metric_algebra().to_float();
        let v0 = Vector(vec![0.375, -0.5, 1.0]);
        let u = v0.normalized();
        assert!(sphere_field(&ma, &u).unwrap().norm() < 1e-15);
    }
}
