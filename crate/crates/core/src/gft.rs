//! The group Fourier transform as a discretized integral operator: for
//! lambda != 0 the transform of f acts on test functions on the line with
//! kernel K(x, y) = F^{2,3} f(x - y, lambda (x + y)/2, lambda / 4), where
//! F^{2,3} is the Euclidean transform in the second and third variables.
//! Twisted convolution becomes operator composition, and the squared L^2 norm
//! equals (1/4) Int |K_lambda|_HS^2 |lambda| d lambda.

use crate::averages::twisted_convolution;
use crate::error::{Error, Result};
use crate::grid::{pairwise_sum, Axis, GridFunction3};
use num_complex::Complex64;
use rayon::prelude::*;

/// Frequencies beyond `WINDOW_FRAC / h` of a grid with step h are treated as
/// unreliable: the quadrature of e^{-2 pi i b q} against linearly
/// interpolated samples aliases there, and the affected kernel entries are
/// zeroed (recorded in `clipped_fraction`).
pub const WINDOW_FRAC: f64 = 0.4;

#[derive(Debug, Clone)]
pub struct GFTOperator {
    pub lambda: f64,
    /// 1-D grid the operator acts on.
    pub grid: Axis,
    /// Row-major n x n kernel matrix.
    pub kernel: Vec<Complex64>,
    /// Fraction of (x + y) diagonals whose frequency fell outside the
    /// reliable window and were zeroed.
    pub clipped_fraction: f64,
}

impl GFTOperator {
    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn h(&self) -> f64 {
        self.grid.width(0)
    }

    /// Hilbert-Schmidt norm: sqrt( Sum |K|^2 h^2 ).
    pub fn hs_norm(&self) -> f64 {
        let terms: Vec<f64> = self.kernel.iter().map(|v| v.norm_sqr()).collect();
        pairwise_sum(&terms).sqrt() * self.h()
    }

    pub fn scale(&self, c: Complex64) -> GFTOperator {
        GFTOperator {
            lambda: self.lambda,
            grid: self.grid.clone(),
            kernel: self.kernel.iter().map(|v| v * c).collect(),
            clipped_fraction: self.clipped_fraction,
        }
    }

    /// Operator composition: (A B)(x, y) = Int A(x, z) B(z, y) dz.
    pub fn compose(&self, other: &GFTOperator) -> Result<GFTOperator> {
        if self.n() != other.n() {
            return Err(Error::GridMismatch("GFT operators on different grids".into()));
        }
        let n = self.n();
        let h = self.h();
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (j, slot) in row.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for z in 0..n {
                    acc += self.kernel[i * n + z] * other.kernel[z * n + j];
                }
                *slot = acc * h;
            }
        });
        Ok(GFTOperator {
            lambda: self.lambda,
            grid: self.grid.clone(),
            kernel: out,
            clipped_fraction: self.clipped_fraction.max(other.clipped_fraction),
        })
    }

    pub fn sub(&self, other: &GFTOperator) -> Result<GFTOperator> {
        if self.n() != other.n() {
            return Err(Error::GridMismatch("GFT operators on different grids".into()));
        }
        Ok(GFTOperator {
            lambda: self.lambda,
            grid: self.grid.clone(),
            kernel: self
                .kernel
                .iter()
                .zip(&other.kernel)
                .map(|(a, b)| a - b)
                .collect(),
            clipped_fraction: self.clipped_fraction.max(other.clipped_fraction),
        })
    }
}

pub fn default_line_grid() -> Axis {
    Axis::uniform(-8.0, 8.0, 128).unwrap()
}

fn uniform_step(ax: &Axis, what: &str) -> Result<f64> {
    let h = ax.width(0);
    for i in 0..ax.n() {
        if (ax.width(i) - h).abs() > 1e-12 * h {
            return Err(Error::InvalidGrid(format!("{what} must be uniform")));
        }
    }
    Ok(h)
}

/// Build the transform at one lambda. `f` must live on uniform axes.
pub fn gft(f: &GridFunction3<Complex64>, lambda: f64, grid1d: &Axis) -> Result<GFTOperator> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidParameter("gft needs lambda != 0".into()));
    }
    let ax = f.axes();
    let h0 = uniform_step(&ax[0], "gft data axis 1")?;
    let h2 = uniform_step(&ax[1], "gft data axis 2")?;
    let h3 = uniform_step(&ax[2], "gft data axis 3")?;
    let h1 = uniform_step(grid1d, "gft 1-D grid")?;
    let n1 = grid1d.n();
    let [n_a, n_b, n_c] = f.resolution();
    let wmax2 = WINDOW_FRAC / h2;
    let wmax3 = WINDOW_FRAC / h3;

    let c = lambda / 4.0;
    if c.abs() > wmax3 {
        // the third-variable frequency lambda/4 is already beyond the grid's
        // reliable window: the whole operator is unreliable, report it clipped
        return Ok(GFTOperator {
            lambda,
            grid: grid1d.clone(),
            kernel: vec![Complex64::new(0.0, 0.0); n1 * n1],
            clipped_fraction: 1.0,
        });
    }

    // distinct first arguments a = x - y = k h1 and diagonals
    // b = lambda (x + y)/2 = lambda (2 x_0 + s h1)/2
    let n_diff = 2 * n1 - 1;
    let n_sum = 2 * n1 - 1;
    let x0 = grid1d.center(0);

    // phase factors for the s-transform at frequency c
    let es: Vec<Complex64> = (0..n_c)
        .map(|k| {
            let ph = -2.0 * std::f64::consts::PI * c * ax[2].center(k);
            Complex64::new(ph.cos(), ph.sin()) * h3
        })
        .collect();

    // G[ia][j] = (interp of f along axis 1 at a) transformed in the third axis
    let g: Vec<Vec<Complex64>> = (0..n_diff)
        .into_par_iter()
        .map(|ia| {
            let a = (ia as i64 - (n1 as i64 - 1)) as f64 * h1;
            let t = (a - ax[0].center(0)) / h0;
            let i0 = t.floor();
            let fr = t - i0;
            let i0 = i0 as i64;
            let mut row = vec![Complex64::new(0.0, 0.0); n_b];
            let mut any = false;
            for (off, w) in [(0i64, 1.0 - fr), (1, fr)] {
                let ii = i0 + off;
                if ii < 0 || ii >= n_a as i64 || w == 0.0 {
                    continue;
                }
                any = true;
                for j in 0..n_b {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in 0..n_c {
                        acc += f.get(ii as usize, j, k) * es[k];
                    }
                    row[j] += acc * w;
                }
            }
            if !any {
                row.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            }
            row
        })
        .collect();

    // T[ia][ib]: transform of G in the second axis at frequency b, clipped
    // outside the window
    let mut clipped = 0usize;
    let bvals: Vec<f64> = (0..n_sum)
        .map(|s| lambda * (2.0 * x0 + s as f64 * h1) / 2.0)
        .collect();
    for &b in &bvals {
        if b.abs() > wmax2 {
            clipped += 1;
        }
    }
    let t: Vec<Vec<Complex64>> = bvals
        .par_iter()
        .map(|&b| {
            if b.abs() > wmax2 {
                return vec![Complex64::new(0.0, 0.0); n_diff];
            }
            let eq: Vec<Complex64> = (0..n_b)
                .map(|j| {
                    let ph = -2.0 * std::f64::consts::PI * b * ax[1].center(j);
                    Complex64::new(ph.cos(), ph.sin()) * h2
                })
                .collect();
            (0..n_diff)
                .map(|ia| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for j in 0..n_b {
                        acc += g[ia][j] * eq[j];
                    }
                    acc
                })
                .collect()
        })
        .collect();

    let mut kernel = vec![Complex64::new(0.0, 0.0); n1 * n1];
    for i in 0..n1 {
        for j in 0..n1 {
            kernel[i * n1 + j] = t[i + j][i + n1 - 1 - j];
        }
    }
    Ok(GFTOperator {
        lambda,
        grid: grid1d.clone(),
        kernel,
        clipped_fraction: clipped as f64 / n_sum as f64,
    })
}

pub fn gft_real(f: &GridFunction3<f64>, lambda: f64, grid1d: &Axis) -> Result<GFTOperator> {
    gft(&crate::averages::to_complex(f), lambda, grid1d)
}

/// Symmetric log-spaced lambda quadrature on [2^lo, 2^hi] (both signs),
/// trapezoid in log2 lambda: nodes and d-lambda weights.
#[derive(Debug, Clone)]
pub struct LambdaQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub lo_exp: f64,
}

impl LambdaQuadrature {
    pub fn log_spaced(lo_exp: f64, hi_exp: f64, n_per_sign: usize) -> Result<Self> {
        if n_per_sign < 2 || !(lo_exp < hi_exp) {
            return Err(Error::InvalidParameter("bad lambda quadrature spec".into()));
        }
        let du = (hi_exp - lo_exp) / (n_per_sign - 1) as f64;
        let ln2 = std::f64::consts::LN_2;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for sign in [1.0, -1.0] {
            for i in 0..n_per_sign {
                let u = lo_exp + i as f64 * du;
                let lam = sign * u.exp2();
                let endpoint = i == 0 || i == n_per_sign - 1;
                nodes.push(lam);
                weights.push(du * ln2 * lam.abs() * if endpoint { 0.5 } else { 1.0 });
            }
        }
        Ok(LambdaQuadrature {
            nodes,
            weights,
            lo_exp,
        })
    }

    pub fn default_quadrature() -> Self {
        LambdaQuadrature::log_spaced(-6.0, 6.0, 25).unwrap()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PlancherelResult {
    pub lhs: f64,
    pub rhs: f64,
    /// Estimated contribution of the omitted neighborhood of lambda = 0.
    pub truncation_estimate: f64,
}

impl PlancherelResult {
    pub fn rel_discrepancy(&self) -> f64 {
        (self.rhs - self.lhs) / self.lhs
    }
}

/// lhs = ||f||_{L^2}^2 versus rhs = (1/4) Int |f^(lambda)|_HS^2 |lambda| d lambda.
pub fn plancherel_check(
    f: &GridFunction3<f64>,
    quad: &LambdaQuadrature,
    grid1d: &Axis,
) -> Result<PlancherelResult> {
    let lhs = f.lp_norm(2.0)?.powi(2);
    let fc = crate::averages::to_complex(f);
    let contribs: Vec<(f64, f64)> = quad
        .nodes
        .par_iter()
        .zip(&quad.weights)
        .map(|(&lam, &w)| {
            let op = gft(&fc, lam, grid1d).expect("lambda != 0 by construction");
            let hs2 = op.hs_norm().powi(2);
            (0.25 * w * lam.abs() * hs2, hs2)
        })
        .collect();
    let rhs = pairwise_sum(&contribs.iter().map(|c| c.0).collect::<Vec<_>>());
    // the integrand behaves like C |lambda| near 0; estimate the omitted
    // [0, 2^lo] piece from the smallest computed node (both signs)
    let lam_min = quad.lo_exp.exp2();
    let hs2_small = quad
        .nodes
        .iter()
        .zip(&contribs)
        .filter(|(l, _)| l.abs() <= lam_min * 1.001)
        .map(|(_, c)| c.1)
        .fold(0.0, f64::max);
    let truncation_estimate = 2.0 * 0.25 * hs2_small * lam_min * lam_min / 2.0;
    Ok(PlancherelResult {
        lhs,
        rhs,
        truncation_estimate,
    })
}

/// HS distance between gft(f *_J g) and gft(f) gft(g), normalized by
/// |f^|_HS |g^|_HS.
pub fn convolution_check(
    f: &GridFunction3<f64>,
    g: &GridFunction3<f64>,
    lambda: f64,
    grid1d: &Axis,
) -> Result<f64> {
    let fc = crate::averages::to_complex(f);
    let gc = crate::averages::to_complex(g);
    let conv = twisted_convolution(&fc, &gc)?;
    let kh = gft(&conv, lambda, grid1d)?;
    let kf = gft(&fc, lambda, grid1d)?;
    let kg = gft(&gc, lambda, grid1d)?;
    let prod = kf.compose(&kg)?;
    let num = kh.sub(&prod)?.hs_norm();
    let den = kf.hs_norm() * kg.hs_norm();
    if den == 0.0 {
        return Ok(if num == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(num / den)
}
