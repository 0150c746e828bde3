//! Integer matrices conjugate to a hyperbolic-by-rotation block form and
//! the rank-4 lattices they preserve.
//!
//! A palindromic quartic `x^4 + a x^3 + b x^2 + a x + 1` has reciprocal
//! root pairs. Substituting `y = x + 1/x` folds it onto the resolvent
//! `y^2 + a y + (b - 2)`; a resolvent root `y > 2` unfolds to a real pair
//! `(lambda, 1/lambda)` with `lambda > 1`, and a root in `(-2, 2)` to a
//! unit-circle pair `e^{+-i alpha}` with `cos(alpha) = y/2`. When the
//! quartic is irreducible over the rationals it cannot be cyclotomic (one
//! root is off the unit circle), so `e^{i alpha}` is not a root of unity
//! and `alpha` is an irrational multiple of pi. The companion matrix is
//! then an integer matrix of determinant one, conjugate over the reals to
//! `diag(lambda, 1/lambda, R_alpha)`, and the columns of the inverse
//! conjugation span a rank-4 lattice preserved by that block form.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use serde::Serialize;

/// Block-diagonalization residual bound for a certificate.
pub const CERTIFICATE_TOL: f64 = 1e-10;

/// Lattice-preservation residual bound.
pub const PRESERVATION_TOL: f64 = 1e-9;

/// The palindromic quartic `x^4 + a x^3 + b x^2 + a x + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ReciprocalQuartic {
    pub a: i64,
    pub b: i64,
}

/// Why a quartic fails the loxodromic screen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    /// No resolvent root above 2, so no real eigenvalue pair off the unit
    /// circle.
    NoHyperbolicFactor,
    /// No resolvent root strictly inside (-2, 2), so no rotation block.
    NoEllipticFactor,
    /// Splits into integer quadratics `(x^2 + p x + u)(x^2 + q x + u)`,
    /// so the rotation part is a root of unity.
    Reducible { p: i64, q: i64, u: i64 },
}

impl std::fmt::Display for Rejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rejection::NoHyperbolicFactor => write!(f, "no resolvent root above 2"),
            Rejection::NoEllipticFactor => write!(f, "no resolvent root inside (-2, 2)"),
            Rejection::Reducible { p, q, u } => write!(
                f,
                "reducible: (x^2 + {p} x + {u})(x^2 + {q} x + {u})"
            ),
        }
    }
}

fn integer_sqrt(n: i64) -> Option<i64> {
    if n < 0 {
        return None;
    }
    let r = (n as f64).sqrt().round() as i64;
    for c in [r - 1, r, r + 1] {
        if c >= 0 && c * c == n {
            return Some(c);
        }
    }
    None
}

impl ReciprocalQuartic {
    pub fn new(a: i64, b: i64) -> Self {
        Self { a, b }
    }

    /// Coefficient vector `(1, a, b, a, 1)` from the constant term up.
    pub fn coefficients(&self) -> [i64; 5] {
        [1, self.a, self.b, self.a, 1]
    }

    /// Resolvent `y^2 + a y + (b - 2)` evaluated at an integer.
    fn resolvent_at(&self, y: i64) -> i64 {
        y * y + self.a * y + self.b - 2
    }

    /// Integer quadratic factorization `(x^2 + p x + u)(x^2 + q x + u)`
    /// if one exists. Monic with constant term 1 forces the constant
    /// terms of any rational factorization to be a unit pair, so this
    /// test is exhaustive for splitting into quadratics.
    fn integer_split(&self) -> Option<Rejection> {
        // u = 1: p + q = a and p q = b - 2, an integer pair iff the
        // resolvent discriminant is a square of matching parity.
        let disc = self.a * self.a - 4 * (self.b - 2);
        if let Some(k) = integer_sqrt(disc) {
            if (self.a + k) % 2 == 0 {
                return Some(Rejection::Reducible {
                    p: (self.a - k) / 2,
                    q: (self.a + k) / 2,
                    u: 1,
                });
            }
        }
        // u = -1 forces the odd coefficients to cancel, so a = 0 and the
        // split is (x^2 + m x - 1)(x^2 - m x - 1) with m^2 = -b - 2.
        if self.a == 0 {
            if let Some(m) = integer_sqrt(-self.b - 2) {
                return Some(Rejection::Reducible { p: m, q: -m, u: -1 });
            }
        }
        None
    }

    /// Screens for a hyperbolic pair, an elliptic pair, and rational
    /// irreducibility. `None` means accepted. All tests are exact integer
    /// arithmetic: the resolvent is monic, so its larger root exceeds 2
    /// iff it is negative at 2, and its smaller root lies above -2 iff it
    /// is positive at -2. Values at +-2 equal the quartic at +-1, so an
    /// accepted quartic has no rational root and irreducibility reduces
    /// to the quadratic split test.
    pub fn rejection(&self) -> Option<Rejection> {
        if self.resolvent_at(2) >= 0 {
            return Some(Rejection::NoHyperbolicFactor);
        }
        if self.resolvent_at(-2) <= 0 {
            return Some(Rejection::NoEllipticFactor);
        }
        self.integer_split()
    }

    pub fn is_loxodromic(&self) -> bool {
        self.rejection().is_none()
    }

    /// Companion matrix acting on `(1, x, x^2, x^3)` coordinates, with the
    /// negated coefficients in the last row; its determinant is the
    /// constant term, 1, and `(1, mu, mu^2, mu^3)` is an eigenvector for
    /// every root `mu`.
    pub fn companion(&self) -> [[i64; 4]; 4] {
        [
            [0, 1, 0, 0],
            [0, 0, 1, 0],
            [0, 0, 0, 1],
            [-1, -self.a, -self.b, -self.a],
        ]
    }
}

/// Exact 4x4 integer determinant by cofactor expansion.
pub fn det4(m: &[[i64; 4]; 4]) -> i64 {
    fn det3(m: [[i128; 3]; 3]) -> i128 {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
    let mut det: i128 = 0;
    for col in 0..4 {
        let mut minor = [[0i128; 3]; 3];
        for r in 1..4 {
            let mut cc = 0;
            for c in 0..4 {
                if c != col {
                    minor[r - 1][cc] = m[r][c] as i128;
                    cc += 1;
                }
            }
        }
        let term = (m[0][col] as i128) * det3(minor);
        det += if col % 2 == 0 { term } else { -term };
    }
    det as i64
}

/// All accepted quartics with `|a|, |b| <= bound`, in lexicographic
/// `(a, b)` order.
pub fn enumerate_candidates(bound: i64) -> Vec<ReciprocalQuartic> {
    let mut out = Vec::new();
    for a in -bound..=bound {
        for b in -bound..=bound {
            let q = ReciprocalQuartic::new(a, b);
            if q.is_loxodromic() {
                out.push(q);
            }
        }
    }
    out
}

/// An integer matrix with certified eigenstructure
/// `(lambda, 1/lambda, e^{+-i alpha})` and the real conjugation realizing
/// its block-diagonal form.
#[derive(Clone, Debug, Serialize)]
pub struct LoxodromicCertificate {
    pub quartic: ReciprocalQuartic,
    /// The real eigenvalue above 1.
    pub lambda: f64,
    /// Rotation angle in (0, pi), an irrational multiple of pi.
    pub alpha: f64,
    pub companion: [[i64; 4]; 4],
    /// Columns: eigenvectors for lambda and 1/lambda, then the real and
    /// imaginary parts of the `e^{i alpha}` eigenvector.
    pub conjugation: Vec<Vec<f64>>,
    /// Max entry of `S^{-1} C S - diag(lambda, 1/lambda, R_alpha)`.
    pub residual: f64,
}

/// The block form `diag(lambda, 1/lambda, R_alpha)` the companion matrix
/// is conjugate to. The rotation block is the matrix of the companion
/// action on the plane spanned by the real and imaginary eigenvector
/// parts, in that basis.
pub fn block_form(lambda: f64, alpha: f64) -> Matrix<f64> {
    let (s, c) = alpha.sin_cos();
    let mut d = Matrix::zeros(4, 4);
    d[(0, 0)] = lambda;
    d[(1, 1)] = 1.0 / lambda;
    d[(2, 2)] = c;
    d[(2, 3)] = s;
    d[(3, 2)] = -s;
    d[(3, 3)] = c;
    d
}

impl LoxodromicCertificate {
    pub fn conjugation_matrix(&self) -> Matrix<f64> {
        Matrix::from_fn(4, 4, |r, c| self.conjugation[r][c])
    }
}

/// Certifies an accepted quartic: extracts `lambda` and `alpha` from the
/// resolvent roots, assembles the eigenvector conjugation, and verifies
/// the block-diagonalization residual.
pub fn certify(q: &ReciprocalQuartic) -> Result<LoxodromicCertificate> {
    if let Some(reason) = q.rejection() {
        return Err(Error::QuarticRejected(reason.to_string()));
    }
    let a = q.a as f64;
    let disc = (q.a * q.a - 4 * (q.b - 2)) as f64;
    let y1 = (-a + disc.sqrt()) / 2.0;
    let y2 = (-a - disc.sqrt()) / 2.0;
    // x + 1/x = y unfolds to x^2 - y x + 1 = 0.
    let lambda = (y1 + (y1 * y1 - 4.0).sqrt()) / 2.0;
    let alpha = (y2 / 2.0).acos();
    let (sin_a, cos_a) = alpha.sin_cos();
    let power_col = |re: f64, im: f64| -> [(f64, f64); 4] {
        let mut p = [(1.0, 0.0); 4];
        for k in 1..4 {
            let (pr, pi) = p[k - 1];
            p[k] = (pr * re - pi * im, pr * im + pi * re);
        }
        p
    };
    let v1 = power_col(lambda, 0.0);
    let v2 = power_col(1.0 / lambda, 0.0);
    let ve = power_col(cos_a, sin_a);
    let s = Matrix::from_fn(4, 4, |r, c| match c {
        0 => v1[r].0,
        1 => v2[r].0,
        2 => ve[r].0,
        _ => ve[r].1,
    });
    let comp = q.companion();
    let c_float = Matrix::from_fn(4, 4, |r, c| comp[r][c] as f64);
    let s_inv = s.inverse()?;
    let diff = &(&(&s_inv * &c_float) * &s) - &block_form(lambda, alpha);
    let residual = diff.max_abs();
    if residual >= CERTIFICATE_TOL {
        return Err(Error::QuarticRejected(format!(
            "block-diagonalization residual {residual:.3e} exceeds {CERTIFICATE_TOL:.0e}"
        )));
    }
    Ok(LoxodromicCertificate {
        quartic: *q,
        lambda,
        alpha,
        companion: comp,
        conjugation: (0..4)
            .map(|r| (0..4).map(|c| s[(r, c)]).collect())
            .collect(),
        residual,
    })
}

/// A rank-4 lattice preserved by the block form: the column lattice of
/// the inverse conjugation, on which `diag(lambda, 1/lambda, R_alpha)`
/// acts by the integer companion matrix.
#[derive(Clone, Debug, Serialize)]
pub struct GammaLattice {
    pub lambda: f64,
    pub alpha: f64,
    /// Lattice generators as columns.
    pub generators: Vec<Vec<f64>>,
    /// Max entry of `phi S^{-1} - S^{-1} C` with `phi` the block form.
    pub preservation_residual: f64,
}

/// Builds the preserved lattice from a certificate and verifies the
/// preservation identity.
pub fn build_gamma(cert: &LoxodromicCertificate) -> Result<GammaLattice> {
    let s = cert.conjugation_matrix();
    let s_inv = s.inverse()?;
    let phi = block_form(cert.lambda, cert.alpha);
    let c_float = Matrix::from_fn(4, 4, |r, c| cert.companion[r][c] as f64);
    let residual = (&(&phi * &s_inv) - &(&s_inv * &c_float)).max_abs();
    if residual >= PRESERVATION_TOL {
        return Err(Error::QuarticRejected(format!(
            "lattice-preservation residual {residual:.3e} exceeds {PRESERVATION_TOL:.0e}"
        )));
    }
    Ok(GammaLattice {
        lambda: cert.lambda,
        alpha: cert.alpha,
        generators: (0..4)
            .map(|r| (0..4).map(|c| s_inv[(r, c)]).collect())
            .collect(),
        preservation_residual: residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_quartic_is_accepted_with_known_spectrum() {
        let q = ReciprocalQuartic::new(-3, 3);
        assert!(q.is_loxodromic());
        let cert = certify(&q).unwrap();
        // Resolvent roots (3 +- sqrt 5)/2; unfolding the larger gives
        // lambda = (y1 + sqrt(y1^2 - 4))/2.
        let y1 = (3.0 + 5.0f64.sqrt()) / 2.0;
        let y2 = (3.0 - 5.0f64.sqrt()) / 2.0;
        let lambda = (y1 + (y1 * y1 - 4.0).sqrt()) / 2.0;
        assert!((cert.lambda - lambda).abs() < 1e-12);
        assert!((cert.lambda - 2.1537).abs() < 1e-4);
        assert!((cert.alpha - (y2 / 2.0).acos()).abs() < 1e-12);
        assert!((cert.alpha - 1.3786).abs() < 1e-4);
        assert!(cert.residual < CERTIFICATE_TOL);
    }

    #[test]
    fn root_of_unity_factor_is_rejected_with_witness() {
        // (x^2 - 3x + 1)(x^2 - x + 1): the second factor is cyclotomic.
        let q = ReciprocalQuartic::new(-4, 5);
        assert_eq!(
            q.rejection(),
            Some(Rejection::Reducible { p: -3, q: -1, u: 1 })
        );
        assert!(certify(&q).is_err());
    }

    #[test]
    fn unit_circle_only_quartic_is_rejected() {
        // x^4 + 1: resolvent roots +-sqrt 2, none above 2.
        let q = ReciprocalQuartic::new(0, 0);
        assert_eq!(q.rejection(), Some(Rejection::NoHyperbolicFactor));
    }

    #[test]
    fn even_split_family_is_rejected() {
        // x^4 - 6x^2 + 1 = (x^2 + 2x - 1)(x^2 - 2x - 1). An even quartic
        // has opposite resolvent roots, so the window screen already
        // fails; the split test still finds the factorization.
        let q = ReciprocalQuartic::new(0, -6);
        assert_eq!(q.rejection(), Some(Rejection::NoEllipticFactor));
        assert_eq!(
            q.integer_split(),
            Some(Rejection::Reducible { p: 2, q: -2, u: -1 })
        );
    }

    #[test]
    fn enumeration_contains_the_golden_quartic() {
        let found = enumerate_candidates(10);
        assert!(!found.is_empty());
        assert!(found.contains(&ReciprocalQuartic::new(-3, 3)));
    }

    #[test]
    fn every_candidate_certifies_with_unimodular_companion() {
        for q in enumerate_candidates(10) {
            let cert = certify(&q).unwrap_or_else(|e| panic!("({}, {}): {e}", q.a, q.b));
            assert_eq!(det4(&cert.companion), 1);
            assert!(cert.residual < CERTIFICATE_TOL);
            assert!(cert.lambda > 1.0);
            assert!(cert.alpha > 0.0 && cert.alpha < std::f64::consts::PI);
            // Reciprocal pair multiplies to one; the rotation pair sits
            // on the unit circle by construction, so the product of all
            // four eigenvalue moduli is the leading-over-constant ratio.
            assert!((cert.lambda * (1.0 / cert.lambda) - 1.0).abs() < 1e-12);
            let gamma = build_gamma(&cert).unwrap();
            assert!(gamma.preservation_residual < PRESERVATION_TOL);
        }
    }

    #[test]
    fn rejections_reproduce_their_reasons() {
        for a in -10..=10 {
            for b in -10..=10 {
                let q = ReciprocalQuartic::new(a, b);
                match q.rejection() {
                    None => assert!(certify(&q).is_ok()),
                    Some(Rejection::NoHyperbolicFactor) => {
                        assert!(q.resolvent_at(2) >= 0);
                    }
                    Some(Rejection::NoEllipticFactor) => {
                        assert!(q.resolvent_at(-2) <= 0);
                    }
                    Some(Rejection::Reducible { p, q: qq, u }) => {
                        // Expand the witness product and compare.
                        assert_eq!(p + qq, a);
                        assert_eq!(p * qq + 2 * u, b);
                        assert_eq!(u * u, 1);
                    }
                }
            }
        }
    }

    #[test]
    fn gamma_generators_are_independent() {
        let cert = certify(&ReciprocalQuartic::new(-3, 3)).unwrap();
        let gamma = build_gamma(&cert).unwrap();
        let g = Matrix::from_fn(4, 4, |r, c| gamma.generators[r][c]);
        assert!(g.inverse().is_ok());
    }
}
