//! Finite-dimensional Lie algebras given by structure constants.
//!
//! An algebra is a rank-3 tensor `c[i][j][k]`: the coefficient of basis
//! vector `k` in the bracket of basis vectors `i` and `j`. Constructors
//! enforce antisymmetry; the Jacobi identity is checked separately through
//! [`LieAlgebra::jacobi_residual`] so that deliberately broken tensors can
//! still be inspected.
//!
//! Four builtin algebras cover the geometry this crate studies: `sl2`
//! (trace-free 2x2 matrices), `sol` (the 3-dimensional solvable algebra with
//! one hyperbolic derivation), `euc` (the algebra of the Euclidean plane
//! motions), and their direct sum `sol_euc`.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::scalar::{rat, Rational, Scalar};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, PartialEq)]
pub struct LieAlgebra<S> {
    dim: usize,
    basis_names: Vec<String>,
    /// Flat rank-3 tensor, index `(i * dim + j) * dim + k`.
    c: Vec<S>,
}

/// Largest dimension the dense algorithms are tuned for.
pub const MAX_DIM: usize = 12;

impl<S: Scalar> LieAlgebra<S> {
    /// Builds an algebra from sparse brackets `[b_i, b_j] = sum coeff * b_k`
    /// for `i > j` or `i < j`; the opposite orientation is filled in by
    /// antisymmetry. Unlisted pairs bracket to zero.
    pub fn from_brackets(
        basis_names: &[&str],
        brackets: &[(usize, usize, &[(usize, S)])],
    ) -> Result<Self> {
        let dim = basis_names.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidInput(format!(
                "dimension {dim} outside supported range 1..={MAX_DIM}"
            )));
        }
        let mut c = vec![S::zero(); dim * dim * dim];
        let mut seen = vec![false; dim * dim];
        for &(i, j, coeffs) in brackets {
            if i >= dim || j >= dim {
                return Err(Error::InvalidInput(format!(
                    "bracket index ({i},{j}) out of range for dimension {dim}"
                )));
            }
            if i == j {
                return Err(Error::InvalidInput(format!(
                    "bracket ({i},{i}) of a basis vector with itself must be zero"
                )));
            }
            if seen[i * dim + j] || seen[j * dim + i] {
                return Err(Error::InvalidInput(format!(
                    "bracket ({i},{j}) specified twice"
                )));
            }
            seen[i * dim + j] = true;
            seen[j * dim + i] = true;
            for &(k, ref coeff) in coeffs {
                if k >= dim {
                    return Err(Error::InvalidInput(format!(
                        "bracket ({i},{j}) names component {k} out of range"
                    )));
                }
                c[(i * dim + j) * dim + k] = coeff.clone();
                c[(j * dim + i) * dim + k] = -coeff.clone();
            }
        }
        Ok(LieAlgebra {
            dim,
            basis_names: basis_names.iter().map(|s| s.to_string()).collect(),
            c,
        })
    }

    /// Builds an algebra from a full tensor, rejecting antisymmetry
    /// violations. Jacobi is not enforced here.
    pub fn from_tensor(basis_names: Vec<String>, c: Vec<S>) -> Result<Self> {
        let dim = basis_names.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidInput(format!(
                "dimension {dim} outside supported range 1..={MAX_DIM}"
            )));
        }
        if c.len() != dim * dim * dim {
            return Err(Error::InvalidInput(format!(
                "tensor has {} entries, expected {}",
                c.len(),
                dim * dim * dim
            )));
        }
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let upper = c[(i * dim + j) * dim + k].clone();
                    let lower = c[(j * dim + i) * dim + k].clone();
                    if !(upper + lower).is_zero() {
                        return Err(Error::InvalidInput(format!(
                            "structure tensor is not antisymmetric at ({i},{j},{k})"
                        )));
                    }
                }
            }
        }
        Ok(LieAlgebra {
            dim,
            basis_names,
            c,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis_names(&self) -> &[String] {
        &self.basis_names
    }

    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> &S {
        &self.c[(i * self.dim + j) * self.dim + k]
    }

    /// Bracket of two coefficient vectors.
    pub fn bracket(&self, x: &Vector<S>, y: &Vector<S>) -> Vector<S> {
        assert_eq!(x.dim(), self.dim);
        assert_eq!(y.dim(), self.dim);
        let mut out: Vector<S> = Vector::zeros(self.dim);
        for i in 0..self.dim {
            if x[i].is_zero() {
                continue;
            }
            for j in 0..self.dim {
                if y[j].is_zero() {
                    continue;
                }
                let f = x[i].clone() * y[j].clone();
                for k in 0..self.dim {
                    let cijk = self.structure_constant(i, j, k);
                    if cijk.is_zero() {
                        continue;
                    }
                    out[k] = out[k].clone() + cijk.clone() * f.clone();
                }
            }
        }
        out
    }

    /// Matrix of `ad_x = [x, -]` in the chosen basis.
    pub fn ad_matrix(&self, x: &Vector<S>) -> Matrix<S> {
        assert_eq!(x.dim(), self.dim);
        Matrix::from_fn(self.dim, self.dim, |k, j| {
            (0..self.dim).fold(S::zero(), |acc, i| {
                acc + x[i].clone() * self.structure_constant(i, j, k).clone()
            })
        })
    }

    /// Killing form `K(x, y) = tr(ad_x ad_y)` on basis pairs.
    pub fn killing_form(&self) -> Matrix<S> {
        let ads: Vec<Matrix<S>> = (0..self.dim)
            .map(|i| self.ad_matrix(&Vector::basis(self.dim, i)))
            .collect();
        Matrix::from_fn(self.dim, self.dim, |i, j| (&ads[i] * &ads[j]).trace())
    }

    /// Largest coefficient of the Jacobi cyclic sum over basis triples.
    /// Zero exactly when the tensor satisfies the Jacobi identity.
    pub fn jacobi_residual(&self) -> S {
        let mut worst = S::zero();
        for i in 0..self.dim {
            let bi = Vector::basis(self.dim, i);
            for j in (i + 1)..self.dim {
                let bj = Vector::basis(self.dim, j);
                for k in (j + 1)..self.dim {
                    let bk = Vector::basis(self.dim, k);
                    let cyc = &(&self.bracket(&bi, &self.bracket(&bj, &bk))
                        + &self.bracket(&bj, &self.bracket(&bk, &bi)))
                        + &self.bracket(&bk, &self.bracket(&bi, &bj));
                    let m = cyc.max_abs();
                    if m > worst {
                        worst = m;
                    }
                }
            }
        }
        worst
    }

    /// Direct sum: blocks bracket internally, cross brackets vanish.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        let dim = self.dim + other.dim;
        if dim > MAX_DIM {
            return Err(Error::InvalidInput(format!(
                "direct sum dimension {dim} exceeds {MAX_DIM}"
            )));
        }
        let mut names = self.basis_names.clone();
        names.extend(other.basis_names.iter().cloned());
        let mut c = vec![S::zero(); dim * dim * dim];
        for i in 0..self.dim {
            for j in 0..self.dim {
                for k in 0..self.dim {
                    c[(i * dim + j) * dim + k] = self.structure_constant(i, j, k).clone();
                }
            }
        }
        for i in 0..other.dim {
            for j in 0..other.dim {
                for k in 0..other.dim {
                    c[((self.dim + i) * dim + self.dim + j) * dim + self.dim + k] =
                        other.structure_constant(i, j, k).clone();
                }
            }
        }
        LieAlgebra::from_tensor(names, c)
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> LieAlgebra<T> {
        LieAlgebra {
            dim: self.dim,
            basis_names: self.basis_names.clone(),
            c: self.c.iter().map(f).collect(),
        }
    }
}

impl LieAlgebra<Rational> {
    /// Rounds the exact structure constants into a float-scalar algebra.
    pub fn to_float<F: Scalar>(&self) -> LieAlgebra<F> {
        self.map(F::from_rational)
    }
}

impl<S: Scalar> fmt::Debug for LieAlgebra<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LieAlgebra(dim={}, basis={:?})", self.dim, self.basis_names)
    }
}

/// The builtin algebras.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Builtin {
    Sl2,
    Sol,
    Euc,
    SolEuc,
}

impl Builtin {
    pub const ALL: [Builtin; 4] = [Builtin::Sl2, Builtin::Sol, Builtin::Euc, Builtin::SolEuc];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Sl2 => "sl2",
            Builtin::Sol => "sol",
            Builtin::Euc => "euc",
            Builtin::SolEuc => "sol_euc",
        }
    }

    /// Exact structure constants of the builtin.
    pub fn algebra(self) -> LieAlgebra<Rational> {
        let one = || rat(1, 1);
        match self {
            // Basis (e, h, f): [f,e] = h, [h,e] = -e, [h,f] = f.
            Builtin::Sl2 => LieAlgebra::from_brackets(
                &["e", "h", "f"],
                &[
                    (2, 0, &[(1, one())]),
                    (1, 0, &[(0, -one())]),
                    (1, 2, &[(2, one())]),
                ],
            ),
            // Basis (e1, e2, h): [h,e1] = e1, [h,e2] = -e2.
            Builtin::Sol => LieAlgebra::from_brackets(
                &["e1", "e2", "h"],
                &[(2, 0, &[(0, one())]), (2, 1, &[(1, -one())])],
            ),
            // Basis (f1, f2, e): [e,f1] = -f2, [e,f2] = f1.
            Builtin::Euc => LieAlgebra::from_brackets(
                &["f1", "f2", "e"],
                &[(2, 0, &[(1, -one())]), (2, 1, &[(0, one())])],
            ),
            Builtin::SolEuc => Builtin::Sol
                .algebra()
                .direct_sum(&Builtin::Euc.algebra()),
        }
        .expect("builtin tables are well-formed")
    }
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sl2" => Ok(Builtin::Sl2),
            "sol" => Ok(Builtin::Sol),
            "euc" => Ok(Builtin::Euc),
            "sol_euc" => Ok(Builtin::SolEuc),
            other => Err(Error::UnknownBuiltin(other.to_string())),
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use num_traits::Zero;

    fn rv(coords: &[(i64, i64)]) -> Vector<Rational> {
        Vector(coords.iter().map(|&(n, d)| rat(n, d)).collect())
    }

    #[test]
    fn sl2_bracket_table() {
        let g = Builtin::Sl2.algebra();
        let e = Vector::basis(3, 0);
        let h = Vector::basis(3, 1);
        let f = Vector::basis(3, 2);
        assert_eq!(g.bracket(&f, &e), h);
        assert_eq!(g.bracket(&h, &e), e.scale(&rat(-1, 1)));
        assert_eq!(g.bracket(&h, &f), f);
        assert_eq!(g.bracket(&e, &e), Vector::zeros(3));
    }

    #[test]
    fn sol_and_euc_bracket_tables() {
        let sol = Builtin::Sol.algebra();
        let e1 = Vector::basis(3, 0);
        let e2 = Vector::basis(3, 1);
        let h = Vector::basis(3, 2);
        assert_eq!(sol.bracket(&h, &e1), e1);
        assert_eq!(sol.bracket(&h, &e2), e2.scale(&rat(-1, 1)));
        assert_eq!(sol.bracket(&e1, &e2), Vector::zeros(3));

        let euc = Builtin::Euc.algebra();
        let f1 = Vector::basis(3, 0);
        let f2 = Vector::basis(3, 1);
        let e = Vector::basis(3, 2);
        assert_eq!(euc.bracket(&e, &f1), f2.scale(&rat(-1, 1)));
        assert_eq!(euc.bracket(&e, &f2), f1);
    }

    #[test]
    fn all_builtins_satisfy_jacobi() {
        for b in Builtin::ALL {
            assert!(b.algebra().jacobi_residual().is_zero(), "{b}");
        }
    }

    #[test]
    fn broken_tensor_has_unit_jacobi_residual() {
        // [b0,b1] = b0 and [b1,b2] = b1 with [b0,b2] = 0 violates Jacobi:
        // the cyclic sum on (b0,b1,b2) collapses to [b0,b1] = b0.
        let g: LieAlgebra<Rational> = LieAlgebra::from_brackets(
            &["b0", "b1", "b2"],
            &[(0, 1, &[(0, rat(1, 1))]), (1, 2, &[(1, rat(1, 1))])],
        )
        .unwrap();
        assert_eq!(g.jacobi_residual(), rat(1, 1));
    }

    #[test]
    fn sl2_killing_form_values() {
        let k = Builtin::Sl2.algebra().killing_form();
        let expect = Matrix::from_rows(vec![
            vec![rat(0, 1), rat(0, 1), rat(2, 1)],
            vec![rat(0, 1), rat(2, 1), rat(0, 1)],
            vec![rat(2, 1), rat(0, 1), rat(0, 1)],
        ]);
        assert_eq!(k, expect);
    }

    #[test]
    fn sol_killing_form_is_rank_one() {
        let k = Builtin::Sol.algebra().killing_form();
        for i in 0..3 {
            for j in 0..3 {
                let want = if (i, j) == (2, 2) { rat(2, 1) } else { rat(0, 1) };
                assert_eq!(k[(i, j)], want, "K[{i}][{j}]");
            }
        }
    }

    #[test]
    fn euc_killing_form_matches_rotation_generator() {
        let k = Builtin::Euc.algebra().killing_form();
        for i in 0..3 {
            for j in 0..3 {
                let want = if (i, j) == (2, 2) { rat(-2, 1) } else { rat(0, 1) };
                assert_eq!(k[(i, j)], want, "K[{i}][{j}]");
            }
        }
    }

    #[test]
    fn direct_sum_matches_builtin_product() {
        let s = Builtin::Sol
            .algebra()
            .direct_sum(&Builtin::Euc.algebra())
            .unwrap();
        assert_eq!(s, Builtin::SolEuc.algebra());
        assert_eq!(s.dim(), 6);
        // Cross brackets vanish.
        let h = Vector::basis(6, 2);
        let e = Vector::basis(6, 5);
        assert!(s.bracket(&h, &e).is_zero());
    }

    #[test]
    fn ad_matrix_columns_are_brackets() {
        let g = Builtin::Sl2.algebra();
        let x = rv(&[(3, 8), (-1, 2), (1, 1)]);
        let m = g.ad_matrix(&x);
        for j in 0..3 {
            assert_eq!(m.col(j), g.bracket(&x, &Vector::basis(3, j)));
        }
    }

    #[test]
    fn from_tensor_rejects_symmetric_entries() {
        let mut c = vec![rat(0, 1); 8];
        c[(0 * 2 + 1) * 2 + 0] = rat(1, 1);
        c[(1 * 2 + 0) * 2 + 0] = rat(1, 1);
        let err = LieAlgebra::from_tensor(vec!["a".into(), "b".into()], c);
        assert!(err.is_err());
    }

    #[test]
    fn builtin_names_roundtrip() {
        for b in Builtin::ALL {
            assert_eq!(b.name().parse::<Builtin>().unwrap(), b);
        }
        assert!("su2".parse::<Builtin>().is_err());
    }
}
