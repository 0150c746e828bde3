//! Nondegenerate symmetric bilinear forms and metric Lie algebras.
//!
//! A left-invariant semi-Riemannian metric on a Lie group is, at the
//! identity, a nondegenerate symmetric form `q` on the Lie algebra. The
//! geodesic flow only sees the pair (algebra, form), packaged here as
//! [`MetricAlgebra`] together with cached `ad` and `ad*` basis matrices.
//!
//! The metric adjoint is fixed by `q(ad*_x u, w) = q(u, [x, w])`, which in
//! matrix form is `ad*_x = Q^{-1} (ad_x)^T Q`. All builtin pairings are
//! rational, so the cache is exact on the rational path.

use crate::algebra::{Builtin, LieAlgebra};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::scalar::{rat, Rational, RealScalar, Scalar};
use serde::Serialize;

/// Eigenvalues below this (relative) size count as zero when floats decide
/// a signature.
pub const SIGNATURE_EIGEN_TOL: f64 = 1e-10;

/// `|q(v,v)| <= NULL_TOL * |v|^2` counts as null on the float path.
pub const NULL_TOL: f64 = 1e-9;

#[derive(Clone, PartialEq)]
pub struct BilinearForm<S> {
    q: Matrix<S>,
}

impl<S: Scalar> std::fmt::Debug for BilinearForm<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BilinearForm({:?})", self.q)
    }
}

impl<S: Scalar> BilinearForm<S> {
    /// Wraps a symmetric matrix. Degeneracy is only rejected once the form
    /// is paired with an algebra or asked for its signature.
    pub fn new(q: Matrix<S>) -> Result<Self> {
        if q.rows() != q.cols() {
            return Err(Error::InvalidInput(format!(
                "form matrix is {}x{}, expected square",
                q.rows(),
                q.cols()
            )));
        }
        if !q.is_symmetric() {
            return Err(Error::InvalidInput(
                "form matrix is not symmetric".to_string(),
            ));
        }
        Ok(BilinearForm { q })
    }

    pub fn dim(&self) -> usize {
        self.q.rows()
    }

    pub fn matrix(&self) -> &Matrix<S> {
        &self.q
    }

    pub fn eval(&self, u: &Vector<S>, v: &Vector<S>) -> S {
        u.dot(&self.q.matvec(v))
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> BilinearForm<T> {
        BilinearForm { q: self.q.map(f) }
    }
}

impl BilinearForm<Rational> {
    pub fn to_float<F: Scalar>(&self) -> BilinearForm<F> {
        self.map(F::from_rational)
    }

    /// Sylvester inertia `(positive, negative)` by exact congruence
    /// diagonalization. Degenerate forms are rejected.
    pub fn signature(&self) -> Result<(usize, usize)> {
        congruence_inertia(&self.q)
    }
}

impl BilinearForm<f64> {
    /// Sylvester inertia `(positive, negative)` from the symmetric
    /// eigenvalues; near-zero eigenvalues mean the form is numerically
    /// degenerate.
    pub fn signature(&self) -> Result<(usize, usize)> {
        let scale = self.q.max_abs().max(1.0);
        let eig = self.q.symmetric_eigenvalues(1e-12);
        let mut pos = 0;
        let mut neg = 0;
        for lambda in eig {
            if lambda.abs() <= SIGNATURE_EIGEN_TOL * scale {
                return Err(Error::DegenerateForm);
            }
            if lambda > 0.0 {
                pos += 1;
            } else {
                neg += 1;
            }
        }
        Ok((pos, neg))
    }
}

/// Inertia of a symmetric matrix by congruence diagonalization
/// (symmetric row/column elimination). Exact over rationals; valid over
/// floats as a cross-check of the eigenvalue route.
pub fn congruence_inertia<S: Scalar>(q: &Matrix<S>) -> Result<(usize, usize)> {
    assert_eq!(q.rows(), q.cols());
    let n = q.rows();
    let mut a = q.clone();
    let scale = {
        let m = a.max_abs();
        if m > S::one() {
            m
        } else {
            S::one()
        }
    };
    let tol = S::pivot_tol() * scale;
    let mut pos = 0;
    let mut neg = 0;
    for k in 0..n {
        if a[(k, k)].abs() <= tol {
            // Prefer a symmetric swap with a later nonzero diagonal entry.
            if let Some(j) = ((k + 1)..n).find(|&j| a[(j, j)].abs() > tol) {
                swap_symmetric(&mut a, k, j);
            } else if let Some(j) = ((k + 1)..n).find(|&j| a[(k, j)].abs() > tol) {
                // All trailing diagonal entries vanish; fold row/col j into
                // k, making a[k][k] = 2 a[k][j] != 0.
                add_symmetric(&mut a, k, j);
            } else {
                return Err(Error::DegenerateForm);
            }
        }
        let p = a[(k, k)].clone();
        if p > S::zero() {
            pos += 1;
        } else {
            neg += 1;
        }
        for i in (k + 1)..n {
            let f = a[(i, k)].clone() / p.clone();
            if f.is_zero() {
                continue;
            }
            // Congruence by E = I - f e_i e_k^T: row op then column op.
            for j in 0..n {
                let sub = a[(k, j)].clone() * f.clone();
                a[(i, j)] = a[(i, j)].clone() - sub;
            }
            for j in 0..n {
                let sub = a[(j, k)].clone() * f.clone();
                a[(j, i)] = a[(j, i)].clone() - sub;
            }
        }
    }
    Ok((pos, neg))
}

fn swap_symmetric<S: Scalar>(a: &mut Matrix<S>, k: usize, j: usize) {
    let n = a.rows();
    for c in 0..n {
        let tmp = a[(k, c)].clone();
        a[(k, c)] = a[(j, c)].clone();
        a[(j, c)] = tmp;
    }
    for r in 0..n {
        let tmp = a[(r, k)].clone();
        a[(r, k)] = a[(r, j)].clone();
        a[(r, j)] = tmp;
    }
}

fn add_symmetric<S: Scalar>(a: &mut Matrix<S>, k: usize, j: usize) {
    let n = a.rows();
    for c in 0..n {
        let add = a[(j, c)].clone();
        a[(k, c)] = a[(k, c)].clone() + add;
    }
    for r in 0..n {
        let add = a[(r, j)].clone();
        a[(r, k)] = a[(r, k)].clone() + add;
    }
}

/// The factor `A` with `q(x, y) = bi(A x, y)` for a nondegenerate reference
/// form `bi`: `A = Bi^{-1} Q`. `A` is automatically self-adjoint for `bi`
/// when both matrices are symmetric.
pub fn self_adjoint_factor<S: Scalar>(
    bi: &BilinearForm<S>,
    q: &BilinearForm<S>,
) -> Result<Matrix<S>> {
    if bi.dim() != q.dim() {
        return Err(Error::InvalidInput(format!(
            "form dimensions differ: {} vs {}",
            bi.dim(),
            q.dim()
        )));
    }
    Ok(&bi.matrix().inverse()? * q.matrix())
}

/// Sign of `q(v, v)`: the causal character of a direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CausalType {
    Timelike,
    Null,
    Spacelike,
}

/// Causal character with the null band scaled by the squared Euclidean
/// norm of `v`.
pub fn causal_type<S: RealScalar>(form: &BilinearForm<S>, v: &Vector<S>) -> Result<CausalType> {
    if v.is_zero() {
        return Err(Error::InvalidInput(
            "causal type of the zero vector is undefined".to_string(),
        ));
    }
    let qv = form.eval(v, v);
    let band = S::from_f64_lossy(NULL_TOL) * v.dot(v);
    Ok(if qv.abs() <= band {
        CausalType::Null
    } else if qv > S::zero() {
        CausalType::Spacelike
    } else {
        CausalType::Timelike
    })
}

/// A Lie algebra paired with a nondegenerate form, plus cached adjoint data.
#[derive(Clone)]
pub struct MetricAlgebra<S> {
    algebra: LieAlgebra<S>,
    form: BilinearForm<S>,
    label: Option<String>,
    ad: Vec<Matrix<S>>,
    adstar: Vec<Matrix<S>>,
}

impl<S: Scalar> std::fmt::Debug for MetricAlgebra<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "MetricAlgebra({:?}, label={:?})",
            self.algebra, self.label
        )
    }
}

impl<S: Scalar> MetricAlgebra<S> {
    pub fn new(algebra: LieAlgebra<S>, form: BilinearForm<S>) -> Result<Self> {
        if algebra.dim() != form.dim() {
            return Err(Error::InvalidInput(format!(
                "algebra dimension {} does not match form dimension {}",
                algebra.dim(),
                form.dim()
            )));
        }
        let q_inv = form
            .matrix()
            .inverse()
            .map_err(|_| Error::DegenerateForm)?;
        let dim = algebra.dim();
        let ad: Vec<Matrix<S>> = (0..dim)
            .map(|i| algebra.ad_matrix(&Vector::basis(dim, i)))
            .collect();
        let adstar = ad
            .iter()
            .map(|a| &(&q_inv * &a.transpose()) * form.matrix())
            .collect();
        Ok(MetricAlgebra {
            algebra,
            form,
            label: None,
            ad,
            adstar,
        })
    }

    fn with_label(mut self, label: &str) -> Self {
        self.label = Some(label.to_string());
        self
    }

    pub fn algebra(&self) -> &LieAlgebra<S> {
        &self.algebra
    }

    pub fn form(&self) -> &BilinearForm<S> {
        &self.form
    }

    /// Builtin pairing this metric algebra was loaded as, if any.
    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    /// Cached `ad*` matrix of the `i`-th basis vector.
    pub fn adstar_basis(&self, i: usize) -> &Matrix<S> {
        &self.adstar[i]
    }

    pub fn ad_basis(&self, i: usize) -> &Matrix<S> {
        &self.ad[i]
    }

    /// `ad*_x` for an arbitrary `x`, assembled linearly from the cache.
    pub fn adstar_matrix(&self, x: &Vector<S>) -> Matrix<S> {
        assert_eq!(x.dim(), self.dim());
        let mut out = Matrix::zeros(self.dim(), self.dim());
        for (i, m) in self.adstar.iter().enumerate() {
            if x[i].is_zero() {
                continue;
            }
            out = &out + &m.scale(&x[i]);
        }
        out
    }

    pub fn ad_matrix(&self, x: &Vector<S>) -> Matrix<S> {
        self.algebra.ad_matrix(x)
    }

    /// Largest entry of `ad*_{b_i} + ad_{b_i}` over the basis. Zero exactly
    /// when the metric is bi-invariant.
    pub fn biinvariance_residual(&self) -> S {
        let mut worst = S::zero();
        for i in 0..self.dim() {
            let m = (&self.adstar[i] + &self.ad[i]).max_abs();
            if m > worst {
                worst = m;
            }
        }
        worst
    }
}

impl MetricAlgebra<Rational> {
    pub fn to_float<F: Scalar>(&self) -> MetricAlgebra<F> {
        MetricAlgebra {
            algebra: self.algebra.to_float(),
            form: self.form.to_float(),
            label: self.label.clone(),
            ad: self.ad.iter().map(|m| m.map(F::from_rational)).collect(),
            adstar: self
                .adstar
                .iter()
                .map(|m| m.map(F::from_rational))
                .collect(),
        }
    }
}

impl Builtin {
    /// The metric each builtin algebra is studied with.
    pub fn standard_form(self) -> BilinearForm<Rational> {
        let z = || rat(0, 1);
        let q = match self {
            // K*A for the Killing form K and the unipotent factor A below.
            Builtin::Sl2 => Matrix::from_rows(vec![
                vec![z(), z(), rat(2, 1)],
                vec![z(), rat(2, 1), rat(2, 1)],
                vec![rat(2, 1), rat(2, 1), z()],
            ]),
            Builtin::Sol | Builtin::Euc => involution_form(),
            Builtin::SolEuc => {
                let mut m = Matrix::zeros(6, 6);
                let block = involution_form();
                for i in 0..3 {
                    for j in 0..3 {
                        m[(i, j)] = block[(i, j)].clone();
                        m[(i + 3, j + 3)] = block[(i, j)].clone();
                    }
                }
                m
            }
        };
        BilinearForm::new(q).expect("builtin forms are symmetric")
    }

    /// Builtin algebra paired with its standard form, labeled for the
    /// completeness criteria registry.
    pub fn metric_algebra(self) -> MetricAlgebra<Rational> {
        MetricAlgebra::new(self.algebra(), self.standard_form())
            .expect("builtin pairings are nondegenerate")
            .with_label(self.name())
    }
}

/// The 3x3 form exchanging the first and third basis vectors: the standard
/// pairing for both `sol` and `euc`.
fn involution_form() -> Matrix<Rational> {
    let z = || rat(0, 1);
    Matrix::from_rows(vec![
        vec![z(), z(), rat(1, 1)],
        vec![z(), rat(1, 1), z()],
        vec![rat(1, 1), z(), z()],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn rmat(entries: &[&[i64]]) -> Matrix<Rational> {
        Matrix::from_rows(
            entries
                .iter()
                .map(|row| row.iter().map(|&x| rat(x, 1)).collect())
                .collect(),
        )
    }

    #[test]
    fn builtin_signatures() {
        assert_eq!(Builtin::Sl2.standard_form().signature().unwrap(), (2, 1));
        assert_eq!(Builtin::Sol.standard_form().signature().unwrap(), (2, 1));
        assert_eq!(Builtin::Euc.standard_form().signature().unwrap(), (2, 1));
        assert_eq!(Builtin::SolEuc.standard_form().signature().unwrap(), (4, 2));
    }

    #[test]
    fn float_signature_agrees_with_exact_route() {
        for b in Builtin::ALL {
            let exact = b.standard_form().signature().unwrap();
            let float: BilinearForm<f64> = b.standard_form().to_float();
            assert_eq!(float.signature().unwrap(), exact, "{b}");
        }
    }

    #[test]
    fn degenerate_form_is_rejected() {
        let q = BilinearForm::new(rmat(&[&[1, 0], &[0, 0]])).unwrap();
        assert!(matches!(q.signature(), Err(Error::DegenerateForm)));
        let qf: BilinearForm<f64> = q.to_float();
        assert!(matches!(qf.signature(), Err(Error::DegenerateForm)));
        assert!(MetricAlgebra::new(
            LieAlgebra::from_brackets(&["a", "b"], &[]).unwrap(),
            q
        )
        .is_err());
    }

    #[test]
    fn asymmetric_matrix_is_rejected() {
        assert!(BilinearForm::new(rmat(&[&[0, 1], &[2, 0]])).is_err());
    }

    #[test]
    fn sol_adstar_matrices_match_display() {
        let ma = Builtin::Sol.metric_algebra();
        assert_eq!(
            *ma.adstar_basis(0),
            rmat(&[&[0, 0, -1], &[0, 0, 0], &[0, 0, 0]])
        );
        assert_eq!(
            *ma.adstar_basis(1),
            rmat(&[&[0, 1, 0], &[0, 0, 0], &[0, 0, 0]])
        );
        assert_eq!(
            *ma.adstar_basis(2),
            rmat(&[&[0, 0, 0], &[0, -1, 0], &[0, 0, 1]])
        );
    }

    #[test]
    fn euc_adstar_matrices_match_display() {
        let ma = Builtin::Euc.metric_algebra();
        assert_eq!(
            *ma.adstar_basis(0),
            rmat(&[&[0, 1, 0], &[0, 0, 0], &[0, 0, 0]])
        );
        assert_eq!(
            *ma.adstar_basis(1),
            rmat(&[&[0, 0, -1], &[0, 0, 0], &[0, 0, 0]])
        );
        assert_eq!(
            *ma.adstar_basis(2),
            rmat(&[&[0, 0, 0], &[0, 0, 1], &[0, -1, 0]])
        );
    }

    #[test]
    fn sl2_adstar_matrices_match_adjoint_identity_solution() {
        // Derived by solving q(ad*_x u, w) = q(u, [x, w]) on basis triples,
        // independently of the Q^{-1} ad^T Q implementation below.
        let ma = Builtin::Sl2.metric_algebra();
        assert_eq!(
            *ma.adstar_basis(0),
            rmat(&[&[0, -1, -2], &[0, 0, 1], &[0, 0, 0]])
        );
        assert_eq!(
            *ma.adstar_basis(1),
            rmat(&[&[1, 1, -1], &[0, 0, 1], &[0, 0, -1]])
        );
        assert_eq!(
            *ma.adstar_basis(2),
            rmat(&[&[1, 2, 1], &[-1, -2, -1], &[0, 1, 1]])
        );
    }

    #[test]
    fn adjoint_identity_holds_on_all_builtin_basis_triples() {
        for b in Builtin::ALL {
            let ma = b.metric_algebra();
            let n = ma.dim();
            for i in 0..n {
                let adstar = ma.adstar_basis(i);
                let bi = Vector::basis(n, i);
                for j in 0..n {
                    let bj = Vector::basis(n, j);
                    let lhs_vec = adstar.matvec(&bj);
                    for k in 0..n {
                        let bk = Vector::basis(n, k);
                        let lhs = ma.form().eval(&lhs_vec, &bk);
                        let rhs = ma.form().eval(&bj, &ma.algebra().bracket(&bi, &bk));
                        assert_eq!(lhs, rhs, "{b} triple ({i},{j},{k})");
                    }
                }
            }
        }
    }

    #[test]
    fn killing_metric_on_sl2_is_biinvariant() {
        let g = Builtin::Sl2.algebra();
        let k = BilinearForm::new(g.killing_form()).unwrap();
        let ma = MetricAlgebra::new(g, k).unwrap();
        assert!(ma.biinvariance_residual().is_zero());
    }

    #[test]
    fn standard_sl2_metric_is_not_biinvariant() {
        let ma = Builtin::Sl2.metric_algebra();
        assert!(!ma.biinvariance_residual().is_zero());
    }

    #[test]
    fn self_adjoint_factor_recovers_unipotent_part() {
        // For sl2: Q = K*A with A = I + N, N the nilpotent shift below.
        let g = Builtin::Sl2.algebra();
        let k = BilinearForm::new(g.killing_form()).unwrap();
        let q = Builtin::Sl2.standard_form();
        let a = self_adjoint_factor(&k, &q).unwrap();
        assert_eq!(
            a,
            rmat(&[&[1, 1, 0], &[0, 1, 1], &[0, 0, 1]])
        );
    }

    #[test]
    fn self_adjoint_factor_of_equal_forms_is_identity() {
        let q = Builtin::Sol.standard_form();
        assert_eq!(self_adjoint_factor(&q, &q).unwrap(), Matrix::identity(3));
    }

    #[test]
    fn causal_types_of_sl2_directions() {
        let q: BilinearForm<f64> = Builtin::Sl2.standard_form().to_float();
        let v0 = Vector(vec![0.375, -0.5, 1.0]);
        assert_eq!(causal_type(&q, &v0).unwrap(), CausalType::Null);
        let h = Vector(vec![0.0, 1.0, 0.0]);
        assert_eq!(causal_type(&q, &h).unwrap(), CausalType::Spacelike);
        let timelike = Vector(vec![1.0, 0.0, -1.0]);
        assert_eq!(causal_type(&q, &timelike).unwrap(), CausalType::Timelike);
        assert!(causal_type(&q, &Vector::zeros(3)).is_err());
    }

    #[test]
    fn congruence_inertia_matches_eigen_route_on_floats() {
        let q = rmat(&[&[0, 0, 2], &[0, 2, 2], &[2, 2, 0]]);
        assert_eq!(congruence_inertia(&q).unwrap(), (2, 1));
        let qf = q.map(f64::from_rational);
        assert_eq!(congruence_inertia(&qf).unwrap(), (2, 1));
    }
}
