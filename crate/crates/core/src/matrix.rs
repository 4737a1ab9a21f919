//! 2x2 matrices, the symmetric/skew split, and the boundedness classifier.
//!
//! The dichotomy: the one-parameter (circular) lacunary maximal operator
//! attached to A fails to be bounded exactly when A = cI, c != 0; the
//! two-parameter (elliptic) one fails exactly when A = diag(c, c*4^a) with
//! c != 0 and a an integer.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Matrix2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Matrix2 {
    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Matrix2 { a11, a12, a21, a22 }
    }

    pub const fn diag(a: f64, d: f64) -> Self {
        Matrix2::new(a, 0.0, 0.0, d)
    }

    pub const fn identity() -> Self {
        Matrix2::diag(1.0, 1.0)
    }

    /// The standard symplectic matrix J = [[0,-2],[2,0]] of the group law.
    pub const fn j() -> Self {
        Matrix2::new(0.0, -2.0, 2.0, 0.0)
    }

    pub const fn zero() -> Self {
        Matrix2::new(0.0, 0.0, 0.0, 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.a11.is_finite() && self.a12.is_finite() && self.a21.is_finite() && self.a22.is_finite()
    }

    pub fn is_symmetric(&self) -> bool {
        self.a12 == self.a21
    }

    pub fn max_abs(&self) -> f64 {
        self.a11
            .abs()
            .max(self.a12.abs())
            .max(self.a21.abs())
            .max(self.a22.abs())
    }

    pub fn add(&self, o: &Matrix2) -> Matrix2 {
        Matrix2::new(
            self.a11 + o.a11,
            self.a12 + o.a12,
            self.a21 + o.a21,
            self.a22 + o.a22,
        )
    }

    pub fn scale(&self, c: f64) -> Matrix2 {
        Matrix2::new(c * self.a11, c * self.a12, c * self.a21, c * self.a22)
    }

    /// A v for a column vector v.
    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.a11 * v[0] + self.a12 * v[1],
            self.a21 * v[0] + self.a22 * v[1],
        ]
    }

    /// x^T A y.
    pub fn bilinear(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        let ay = self.apply(y);
        x[0] * ay[0] + x[1] * ay[1]
    }
}

/// A = sym + skew with sym = (A + A^T)/2, skew = (A - A^T)/2.
pub fn decompose(a: &Matrix2) -> (Matrix2, Matrix2) {
    let off = 0.5 * (a.a12 + a.a21);
    let sym = Matrix2::new(a.a11, off, off, a.a22);
    let w = 0.5 * (a.a12 - a.a21);
    let skew = Matrix2::new(0.0, w, -w, 0.0);
    (sym, skew)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixClassification {
    /// Whether the one-parameter lacunary maximal operator is L^p bounded.
    pub circular_bounded: bool,
    /// Whether the two-parameter lacunary maximal operator is L^p bounded.
    pub elliptic_bounded: bool,
    pub witness_c: Option<f64>,
    pub witness_a: Option<i64>,
}

pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-9;

/// Boundedness classifier. `tol` is relative to the max-abs entry of A; the
/// integrality of a = log2 sqrt(d/b) is accepted when |a - round(a)| <= tol.
pub fn classify(a: &Matrix2, tol: f64) -> Result<MatrixClassification> {
    if !a.is_finite() {
        return Err(Error::NonFinite("matrix entry"));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("classify tol must be > 0".into()));
    }
    let scale = a.max_abs();
    if scale == 0.0 {
        // The forbidden forms require c != 0, so the zero matrix is bounded
        // in both senses (degenerate averages, but not the dichotomy's case).
        return Ok(MatrixClassification {
            circular_bounded: true,
            elliptic_bounded: true,
            witness_c: None,
            witness_a: None,
        });
    }
    let eps = tol * scale;
    let diagonal = a.a12.abs() <= eps && a.a21.abs() <= eps;
    let b = a.a11;
    let d = a.a22;

    let circular_forbidden = diagonal && (b - d).abs() <= eps && b.abs() > eps;
    if circular_forbidden {
        let c = 0.5 * (b + d);
        return Ok(MatrixClassification {
            circular_bounded: false,
            elliptic_bounded: false,
            witness_c: Some(c),
            witness_a: Some(0),
        });
    }

    // diag(c, c*4^a): b and d nonzero with the same sign, log4(d/b) integral.
    let mut elliptic_forbidden = false;
    let mut witness_a = None;
    if diagonal && b.abs() > eps && d.abs() > eps && (b > 0.0) == (d > 0.0) {
        let aexp = 0.5 * (d / b).log2();
        let rounded = aexp.round();
        if (aexp - rounded).abs() <= tol {
            elliptic_forbidden = true;
            witness_a = Some(rounded as i64);
        }
    }
    Ok(MatrixClassification {
        circular_bounded: true,
        elliptic_bounded: !elliptic_forbidden,
        witness_c: if elliptic_forbidden { Some(b) } else { None },
        witness_a,
    })
}

/// Coefficients (b/2, e, d/2) of the quadratic form (1/2) x^T S x for a
/// symmetric S = [[b,e],[e,d]]; the form drives the shear map
/// (x, x3) -> (x, x3 - (1/2) x^T S x).
pub fn shear_coefficients(sym: &Matrix2) -> Result<(f64, f64, f64)> {
    if !sym.is_symmetric() {
        return Err(Error::NotSymmetric((sym.a12 - sym.a21).abs()));
    }
    Ok((0.5 * sym.a11, sym.a12, 0.5 * sym.a22))
}

/// (1/2) x^T S x for symmetric S (no symmetry check; callers validate).
pub fn half_quadratic_form(sym: &Matrix2, x: [f64; 2]) -> f64 {
    0.5 * sym.bilinear(x, x)
}
