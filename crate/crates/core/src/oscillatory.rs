//! Oscillatory-integral building blocks: the circle phase and its general
//! perturbation, discretized kernel operators with dyadic bump and projection
//! factors, operator-norm estimation, scalar oscillatory integrals, the
//! measure transform, van der Corput checks, and decay regression.

use crate::cutoffs::{beta, phi};
use crate::error::{Error, Result};
use crate::grid::Axis;
use crate::lp::multiplier_1d;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

pub const DOMAIN_LIMIT: f64 = 0.75;
const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseSpec {
    Circle,
    General {
        b: f64,
        d: f64,
        e: f64,
        k1: i32,
        k2: i32,
    },
}

impl PhaseSpec {
    fn coeffs(&self) -> (f64, f64, f64) {
        // (e, b*4^{k1}/2^{k1+k2}, d*4^{k2}/2^{k1+k2})
        match *self {
            PhaseSpec::Circle => (0.0, 0.0, 0.0),
            PhaseSpec::General { b, d, e, k1, k2 } => {
                let denom = ((k1 + k2) as f64).exp2();
                (
                    e,
                    b * ((2 * k1) as f64).exp2() / denom,
                    d * ((2 * k2) as f64).exp2() / denom,
                )
            }
        }
    }
}

fn check_domain(x: f64, y: f64) -> Result<f64> {
    let u = x - y;
    if u.abs() > DOMAIN_LIMIT {
        return Err(Error::InvalidParameter(format!(
            "|x - y| = {} exceeds the phase domain {DOMAIN_LIMIT}",
            u.abs()
        )));
    }
    Ok(u)
}

/// Phi(x, y): (e(x-y) + (x+y)) sqrt(1-(x-y)^2) + B (x-y)^2 + D (1-(x-y)^2)
/// with B = b 4^{k1}/2^{k1+k2}, D = d 4^{k2}/2^{k1+k2}; the circle phase is
/// the case e = B = D = 0.
pub fn phase_eval(p: &PhaseSpec, x: f64, y: f64) -> Result<f64> {
    let u = check_domain(x, y)?;
    let (e, bb, dd) = p.coeffs();
    let root = (1.0 - u * u).sqrt();
    Ok((e * u + (x + y)) * root + bb * u * u + dd * (1.0 - u * u))
}

/// Mixed second derivative d^2 Phi / dx dy.
pub fn phase_hessian(p: &PhaseSpec, x: f64, y: f64) -> Result<f64> {
    let u = check_domain(x, y)?;
    let (e, bb, dd) = p.coeffs();
    let den = (1.0 - u * u).powf(1.5);
    Ok(((x + y) + e * (3.0 * u - 2.0 * u * u * u)) / den - 2.0 * bb + 2.0 * dd)
}

/// d^2/dy^2 of the mixed Hessian (the dyadic-cutoff lower bound driver).
pub fn phase_hessian_dy2(p: &PhaseSpec, x: f64, y: f64) -> Result<f64> {
    let u = check_domain(x, y)?;
    let (e, _, _) = p.coeffs();
    let v = y - x; // = -u
    let w2 = 1.0 - v * v;
    let core = -2.0 * e * u * u * u + 3.0 * e * u + x + y;
    Ok(6.0 * v / w2.powf(2.5)
        + 15.0 * v * v * core / w2.powf(3.5)
        + 3.0 * core / w2.powf(2.5)
        + 6.0 * e * (u - 4.0 * u * u * u) / w2.powf(2.5))
}

/// d Phi / dy (used by the oscillation-resolution rule).
pub fn phase_dy(p: &PhaseSpec, x: f64, y: f64) -> Result<f64> {
    let u = check_domain(x, y)?;
    let (e, bb, dd) = p.coeffs();
    let root = (1.0 - u * u).sqrt();
    // d/dy: u' = -1
    Ok(-e * root + root + (e * u + (x + y)) * u / root - 2.0 * bb * u + 2.0 * dd * u)
}

#[derive(Debug, Clone)]
pub struct OscKernelSpec {
    pub phase: PhaseSpec,
    /// total frequency lambda 2^{k1+k2} multiplying the phase
    pub freq: f64,
    pub s: u32,
    /// optional spatial dyadic cutoff phi(2^{-m} y) on the input side
    pub m: Option<i32>,
    /// optional P^2 factor phi((freq / 2^{ell2}) y)
    pub ell2: Option<i32>,
    /// optional P^1 frequency projection phi(2^{-ell1} xi)
    pub ell1: Option<i32>,
    pub grid: Axis,
}

pub const RESOLUTION_POINTS_PER_PERIOD: f64 = 8.0;

impl OscKernelSpec {
    /// Minimum grid size demanded by the resolution rule
    /// step <= (1/8) (freq * sup|d_y Phi|)^{-1} on the kernel support.
    pub fn required_resolution(&self) -> Result<usize> {
        let ax = &self.grid;
        let len = ax.hi() - ax.lo();
        let mut sup_dy: f64 = 0.0;
        let probes = 256;
        for i in 0..=probes {
            for j in 0..=probes {
                let x = ax.lo() + len * i as f64 / probes as f64;
                let y = ax.lo() + len * j as f64 / probes as f64;
                let u = x - y;
                if beta((self.s as f64).exp2() * u) == 0.0 {
                    continue;
                }
                if let Some(m) = self.m {
                    if phi((-m as f64).exp2() * y) == 0.0 {
                        continue;
                    }
                }
                if let Some(l2) = self.ell2 {
                    if phi(self.freq * (-l2 as f64).exp2() * y) == 0.0 {
                        continue;
                    }
                }
                if u.abs() <= DOMAIN_LIMIT {
                    sup_dy = sup_dy.max(phase_dy(&self.phase, x, y)?.abs());
                }
            }
        }
        let need = (len * RESOLUTION_POINTS_PER_PERIOD * self.freq.abs() * sup_dy).ceil();
        Ok((need as usize).max(2))
    }

    pub fn check_resolution(&self) -> Result<()> {
        let need = self.required_resolution()?;
        if self.grid.n() < need {
            return Err(Error::UnderResolved {
                got: self.grid.n(),
                need,
            });
        }
        Ok(())
    }
}

/// Dense kernel matrix: entries
/// h * e^{-2 pi i freq Phi(x,y)} beta(2^s (x-y)) [phi(2^{-m} y)] [phi((freq/2^{ell2}) y)].
/// The P^1 projection is not folded in (it is applied on the vector side by
/// `op_norm_projected`).
pub fn build_osc_operator(spec: &OscKernelSpec) -> Result<Vec<Complex64>> {
    spec.check_resolution()?;
    let ax = &spec.grid;
    let n = ax.n();
    let h = ax.width(0);
    for i in 0..n {
        if (ax.width(i) - h).abs() > 1e-12 * h {
            return Err(Error::InvalidGrid("osc operator needs a uniform grid".into()));
        }
    }
    let centers: Vec<f64> = ax.centers().to_vec();
    let col_weight: Vec<f64> = centers
        .iter()
        .map(|&y| {
            let mut w = 1.0;
            if let Some(m) = spec.m {
                w *= phi((-m as f64).exp2() * y);
            }
            if let Some(l2) = spec.ell2 {
                w *= phi(spec.freq * (-l2 as f64).exp2() * y);
            }
            w
        })
        .collect();
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = centers[i];
            (0..n)
                .map(|j| {
                    let y = centers[j];
                    let amp = beta((spec.s as f64).exp2() * (x - y)) * col_weight[j];
                    if amp == 0.0 {
                        return Complex64::new(0.0, 0.0);
                    }
                    let ph = -TWO_PI
                        * spec.freq
                        * phase_eval(&spec.phase, x, y).expect("support inside domain");
                    Complex64::new(ph.cos(), ph.sin()) * (amp * h)
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

pub const OP_NORM_MAX_ITER: usize = 600;

/// Largest singular value by power iteration on the Gram operator A^H A.
pub fn op_norm(matrix: &[Complex64], n: usize, tol: f64) -> Result<f64> {
    op_norm_projected(matrix, n, tol, None)
}

/// Same, for M P where P is a real 1-D Fourier multiplier (self-adjoint), so
/// the Gram iteration is v -> P M^H M P v.
pub fn op_norm_projected(
    matrix: &[Complex64],
    n: usize,
    tol: f64,
    projection: Option<(&Axis, i32)>,
) -> Result<f64> {
    if matrix.len() != n * n {
        return Err(Error::InvalidParameter("matrix size mismatch".into()));
    }
    if matrix.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite("matrix entry"));
    }
    let apply_p = |v: &[Complex64]| -> Vec<Complex64> {
        match projection {
            None => v.to_vec(),
            Some((ax, l1)) => multiplier_1d(v, ax.width(0), |xi| phi((-l1 as f64).exp2() * xi)),
        }
    };
    // deterministic pseudo-random start
    let mut state = 0x9e3779b97f4a7c15u64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut v: Vec<Complex64> = (0..n).map(|_| Complex64::new(next(), next())).collect();
    let norm = |w: &[Complex64]| w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nv = norm(&v);
    v.iter_mut().for_each(|z| *z /= nv);
    let matvec = |m: &[Complex64], w: &[Complex64], conj: bool| -> Vec<Complex64> {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut acc = Complex64::new(0.0, 0.0);
                if conj {
                    for j in 0..n {
                        acc += m[j * n + i].conj() * w[j];
                    }
                } else {
                    for j in 0..n {
                        acc += m[i * n + j] * w[j];
                    }
                }
                acc
            })
            .collect()
    };
    let mut prev = 0.0f64;
    for it in 0..OP_NORM_MAX_ITER {
        let w = apply_p(&v);
        let w = matvec(matrix, &w, false);
        let w = matvec(matrix, &w, true);
        let w = apply_p(&w);
        let nw = norm(&w);
        if nw == 0.0 {
            return Ok(0.0);
        }
        let sigma = nw.sqrt();
        v = w;
        v.iter_mut().for_each(|z| *z /= nw);
        if it > 5 && (sigma - prev).abs() <= tol * sigma.max(1e-300) {
            return Ok(sigma);
        }
        prev = sigma;
    }
    Err(Error::NoConvergence(OP_NORM_MAX_ITER))
}

/// Dense oracle: embed the complex matrix as the real 2n x 2n
/// [[Re, -Im], [Im, Re]] and take the square root of the top eigenvalue of
/// B^T B (a symmetric eigenproblem).
pub fn op_norm_dense(matrix: &[Complex64], n: usize) -> Result<f64> {
    if matrix.len() != n * n {
        return Err(Error::InvalidParameter("matrix size mismatch".into()));
    }
    let mut b = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = matrix[i * n + j];
            b[(i, j)] = z.re;
            b[(i, j + n)] = -z.im;
            b[(i + n, j)] = z.im;
            b[(i + n, j + n)] = z.re;
        }
    }
    let gram = b.transpose() * &b;
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v));
    Ok(top.max(0.0).sqrt())
}

#[derive(Debug, Clone)]
pub struct DecayFit {
    pub parameter: String,
    /// (parameter value, log2 measured quantity), the points used in the fit
    pub samples: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
    /// parameter values dropped (under-resolved or pre-asymptotic)
    pub excluded: Vec<f64>,
}

pub fn fit_line(samples: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = samples.len() as f64;
    let sx: f64 = samples.iter().map(|p| p.0).sum();
    let sy: f64 = samples.iter().map(|p| p.1).sum();
    let sxx: f64 = samples.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = samples.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let max_res = samples
        .iter()
        .map(|&(x, y)| (y - slope * x - intercept).abs())
        .fold(0.0, f64::max);
    (slope, intercept, max_res)
}

/// Fit log2 operator norm against a sweep parameter. Under-resolved specs are
/// excluded (and reported); the two smallest remaining parameter values are
/// dropped as pre-asymptotic unless that would leave fewer than 4 points.
pub fn decay_sweep(
    parameter: &str,
    specs: &[(f64, OscKernelSpec)],
    tol: f64,
) -> Result<DecayFit> {
    if specs.len() < 4 {
        return Err(Error::InvalidParameter(
            "decay_sweep needs at least 4 specs".into(),
        ));
    }
    let mut excluded = Vec::new();
    let mut pts = Vec::new();
    for (val, spec) in specs {
        match spec.check_resolution() {
            Err(Error::UnderResolved { .. }) => {
                excluded.push(*val);
                continue;
            }
            Err(e) => return Err(e),
            Ok(()) => {}
        }
        let mat = build_osc_operator(spec)?;
        let proj = spec.ell1.map(|l1| (&spec.grid, l1));
        let nm = op_norm_projected(&mat, spec.grid.n(), tol, proj)?;
        pts.push((*val, nm.max(1e-300).log2()));
    }
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let drop = if pts.len() >= 6 { 2 } else { 0 };
    for p in &pts[..drop] {
        excluded.push(p.0);
    }
    let used: Vec<(f64, f64)> = pts[drop..].to_vec();
    if used.len() < 2 {
        return Err(Error::InvalidParameter(
            "decay_sweep: fewer than 2 resolved points".into(),
        ));
    }
    let (slope, intercept, max_residual) = fit_line(&used);
    Ok(DecayFit {
        parameter: parameter.to_string(),
        samples: used,
        slope,
        intercept,
        max_residual,
        excluded,
    })
}

/// CSV export: parameter,value,log2_norm,slope_running.
pub fn decay_fit_csv(fit: &DecayFit) -> String {
    let mut out = String::from("parameter,value,log2_norm,slope_running\n");
    for i in 0..fit.samples.len() {
        let running = if i >= 1 {
            let (s, _, _) = fit_line(&fit.samples[..=i]);
            format!("{s:.6}")
        } else {
            String::new()
        };
        out.push_str(&format!(
            "{},{},{:.6},{}\n",
            fit.parameter, fit.samples[i].0, fit.samples[i].1, running
        ));
    }
    out
}

const GL16_X: [f64; 16] = [
    -0.9894009349916499,
    -0.9445750230732326,
    -0.8656312023878318,
    -0.755404408355003,
    -0.6178762444026438,
    -0.45801677765722737,
    -0.2816035507792589,
    -0.09501250983763744,
    0.09501250983763744,
    0.2816035507792589,
    0.45801677765722737,
    0.6178762444026438,
    0.755404408355003,
    0.8656312023878318,
    0.9445750230732326,
    0.9894009349916499,
];
const GL16_W: [f64; 16] = [
    0.027152459411754094,
    0.062253523938647894,
    0.09515851168249278,
    0.12462897125553387,
    0.14959598881657673,
    0.16915651939500254,
    0.18260341504492358,
    0.18945061045506849,
    0.18945061045506849,
    0.18260341504492358,
    0.16915651939500254,
    0.14959598881657673,
    0.12462897125553387,
    0.09515851168249278,
    0.062253523938647894,
    0.027152459411754094,
];

/// Int_{pi/4}^{3pi/4} e^{-2 pi i eta . (cos t, sin t, cos 2t, sin 2t)} dt by
/// composite 16-point Gauss-Legendre with panel count scaled to |eta| (the
/// phase has total variation O(|eta|), so this resolves every oscillation
/// with many points to spare).
pub fn scalar_osc_integral(eta: [f64; 4]) -> Complex64 {
    let mag = (eta[0] * eta[0] + eta[1] * eta[1] + eta[2] * eta[2] + eta[3] * eta[3]).sqrt();
    let panels = ((mag / 4.0).ceil() as usize).clamp(32, 400_000);
    let a = std::f64::consts::FRAC_PI_4;
    let b = 3.0 * std::f64::consts::FRAC_PI_4;
    let hp = (b - a) / panels as f64;
    let mut re = 0.0;
    let mut im = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * hp;
        for q in 0..16 {
            let th = mid + 0.5 * hp * GL16_X[q];
            let ph = -TWO_PI
                * (eta[0] * th.cos()
                    + eta[1] * th.sin()
                    + eta[2] * (2.0 * th).cos()
                    + eta[3] * (2.0 * th).sin());
            let w = 0.5 * hp * GL16_W[q];
            re += w * ph.cos();
            im += w * ph.sin();
        }
    }
    Complex64::new(re, im)
}

/// Transform of the dyadic-scale measure:
/// e^{2 pi i (b 4^{k1} + d 4^{k2}) xi3} * I(eta) with
/// eta = (2^{k1} xi1, 2^{k2} xi2, (b 4^{k1} - d 4^{k2}) xi3, e 2^{k1+k2} xi3).
pub fn measure_fourier(b: f64, d: f64, e: f64, k1: i32, k2: i32, xi: [f64; 3]) -> Complex64 {
    let p1 = (k1 as f64).exp2();
    let p2 = (k2 as f64).exp2();
    let q1 = ((2 * k1) as f64).exp2();
    let q2 = ((2 * k2) as f64).exp2();
    let eta = [
        p1 * xi[0],
        p2 * xi[1],
        (b * q1 - d * q2) * xi[2],
        e * p1 * p2 * xi[2],
    ];
    let ph = TWO_PI * (b * q1 + d * q2) * xi[2];
    Complex64::new(ph.cos(), ph.sin()) * scalar_osc_integral(eta)
}

#[derive(Debug, Clone, Copy)]
pub struct VdcResult {
    pub lhs: f64,
    pub rhs: f64,
}

/// c_k table: generous fixed constants for the inequality check.
pub fn vdc_constant(k: u32) -> f64 {
    5.0 * (k as f64).exp2()
}

/// Van der Corput check on [a, b]: lhs = |Int e^{i lambda phase} psi|,
/// rhs = c_k lambda^{-1/k} (|psi(b)| + Int |psi'|). Hypotheses:
/// |phase^{(k)}| >= 1 on [a, b] (verified on samples by finite differences);
/// for k = 1 the derivative must additionally be monotone, so the caller
/// supplies the sign-change count of phase'' (must be 0).
pub fn vdc_check(
    phase: impl Fn(f64) -> f64,
    psi: impl Fn(f64) -> f64,
    interval: (f64, f64),
    lambda: f64,
    k: u32,
    dd_sign_changes: Option<usize>,
) -> Result<VdcResult> {
    let (a, b) = interval;
    if !(b > a) || !(lambda > 0.0) || k == 0 {
        return Err(Error::InvalidParameter("vdc_check: bad interval/lambda/k".into()));
    }
    if k == 1 && dd_sign_changes != Some(0) {
        return Err(Error::VdcHypothesis(
            "k = 1 needs a monotone derivative (supply dd_sign_changes = 0)".into(),
        ));
    }
    // verify |phase^{(k)}| >= 1 on a sample grid by central differences
    let nchk = 512;
    let hd = (b - a) / 2048.0;
    for i in 0..=nchk {
        let x = a + (b - a) * i as f64 / nchk as f64;
        let d = match k {
            1 => (phase(x + hd) - phase(x - hd)) / (2.0 * hd),
            2 => (phase(x + hd) - 2.0 * phase(x) + phase(x - hd)) / (hd * hd),
            3 => {
                (phase(x + 2.0 * hd) - 2.0 * phase(x + hd) + 2.0 * phase(x - hd)
                    - phase(x - 2.0 * hd))
                    / (2.0 * hd * hd * hd)
            }
            _ => {
                return Err(Error::InvalidParameter(
                    "vdc_check supports derivative orders 1..3".into(),
                ))
            }
        };
        if d.abs() < 0.999 {
            return Err(Error::VdcHypothesis(format!(
                "|phase^({k})({x:.4})| = {:.4} < 1",
                d.abs()
            )));
        }
    }
    // dense quadrature, resolving the oscillation scale
    let sup_d1 = {
        let mut s: f64 = 0.0;
        for i in 0..=nchk {
            let x = a + (b - a) * i as f64 / nchk as f64;
            s = s.max(((phase(x + hd) - phase(x - hd)) / (2.0 * hd)).abs());
        }
        s
    };
    let nq = (((b - a) * lambda * sup_d1 * 8.0 / TWO_PI).ceil() as usize).clamp(2048, 4_000_000);
    let hq = (b - a) / nq as f64;
    let mut re = 0.0;
    let mut im = 0.0;
    let mut tv = 0.0; // Int |psi'|
    for i in 0..nq {
        let x = a + (i as f64 + 0.5) * hq;
        let ph = lambda * phase(x);
        let w = psi(x) * hq;
        re += w * ph.cos();
        im += w * ph.sin();
        tv += (psi(x + 0.5 * hq) - psi(x - 0.5 * hq)).abs();
    }
    let lhs = (re * re + im * im).sqrt();
    let rhs = vdc_constant(k) * lambda.powf(-1.0 / k as f64) * (psi(b).abs() + tv);
    Ok(VdcResult { lhs, rhs })
}
