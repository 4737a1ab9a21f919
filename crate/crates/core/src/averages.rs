//! Elliptic averaging operators, the lifted (conjugated) route, twisted
//! convolution under the group law, and lacunary maximal functions.
//!
//! Group law: (x, x3) . (y, y3) = (x + y, x3 + y3 + x^T J y), J = [[0,-2],[2,0]].

use crate::error::{Error, Result};
use crate::grid::{pairwise_sum, pointwise_sup, Axis, GridFunction3, GridScalar};
use crate::matrix::{decompose, Matrix2};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

pub const THETA_FLOOR: usize = 64;
pub const THETA_DEFAULT: usize = 512;

/// Quadrature for the arc measure d-sigma on the circle (total mass 2*pi on
/// the full circle). The uniform rule is the periodic trapezoid rule, which
/// is spectrally accurate for smooth integrands.
#[derive(Debug, Clone)]
pub struct ThetaQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ThetaQuadrature {
    pub fn uniform(n: usize) -> Result<Self> {
        if n < THETA_FLOOR {
            return Err(Error::QuadratureTooCoarse {
                got: n,
                floor: THETA_FLOOR,
            });
        }
        let w = 2.0 * std::f64::consts::PI / n as f64;
        Ok(ThetaQuadrature {
            nodes: (0..n).map(|i| i as f64 * w).collect(),
            weights: vec![w; n],
        })
    }

    /// Gauss-Legendre rule on a subinterval [a, b] of the circle parameter.
    pub fn gauss_legendre(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < THETA_FLOOR {
            return Err(Error::QuadratureTooCoarse {
                got: n,
                floor: THETA_FLOOR,
            });
        }
        let (x, w) = gauss_legendre_nodes(n);
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        Ok(ThetaQuadrature {
            nodes: x.iter().map(|&t| mid + half * t).collect(),
            weights: w.iter().map(|&t| half * t).collect(),
        })
    }

    pub fn default_circle() -> Self {
        ThetaQuadrature::uniform(THETA_DEFAULT).expect("default above floor")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        // Chebyshev initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_p(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_p(n, x);
        xs[n - 1 - i] = x;
        ws[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (xs, ws)
}

fn legendre_p(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[derive(Debug, Clone, Copy)]
pub struct ScaleParams {
    pub t1: f64,
    pub t2: f64,
}

impl ScaleParams {
    pub fn new(t1: f64, t2: f64) -> Result<Self> {
        if !(t1 > 0.0 && t2 > 0.0) || !t1.is_finite() || !t2.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "scales must be positive finite, got ({t1}, {t2})"
            )));
        }
        Ok(ScaleParams { t1, t2 })
    }

    pub fn dyadic(k1: i32, k2: i32) -> Self {
        ScaleParams {
            t1: (k1 as f64).exp2(),
            t2: (k2 as f64).exp2(),
        }
    }
}

fn check_orbit(f: &GridFunction3<f64>, axes: &[Axis; 3], reach: [f64; 3]) -> Result<()> {
    // Zero extension is only sound if f really vanishes near its boundary;
    // when the orbit leaves the data box and the boundary layer carries mass,
    // the result would be silently truncated.
    let fb = f.bounding_box();
    let escapes = (0..3).any(|ax| {
        axes[ax].lo() - reach[ax] < fb.lo[ax] || axes[ax].hi() + reach[ax] > fb.hi[ax]
    });
    if !escapes {
        return Ok(());
    }
    let [n1, n2, n3] = f.resolution();
    let mut boundary_mass: f64 = 0.0;
    for (i, j, k, v) in f.iter_cells() {
        if i == 0 || j == 0 || k == 0 || i == n1 - 1 || j == n2 - 1 || k == n3 - 1 {
            boundary_mass = boundary_mass.max(v.magnitude());
        }
    }
    if boundary_mass > 0.0 {
        return Err(Error::InvalidParameter(format!(
            "orbit leaves the data box while the boundary layer is nonzero \
             (max boundary sample {boundary_mass:.3e}); enlarge the box or \
             shrink the evaluation region"
        )));
    }
    Ok(())
}

/// x |-> Int_{S^1} f(x - (t1 y1, t2 y2), x3 - x^T A (t1 y1, t2 y2)) d-sigma(y),
/// evaluated at the cell centers of `eval_axes`.
pub fn elliptic_average_on(
    f: &GridFunction3<f64>,
    a: &Matrix2,
    scales: ScaleParams,
    q: &ThetaQuadrature,
    eval_axes: [Axis; 3],
) -> Result<GridFunction3<f64>> {
    if !a.is_finite() {
        return Err(Error::NonFinite("matrix entry"));
    }
    let amax = a.max_abs();
    let reach_x = [scales.t1, scales.t2];
    // |x^T A (ty)| <= |A|_max * 2 * max|x| * max t ; crude but safe bound
    let xmax = eval_axes[0].lo().abs().max(eval_axes[0].hi().abs()).max(
        eval_axes[1].lo().abs().max(eval_axes[1].hi().abs()),
    );
    let reach3 = 2.0 * amax * xmax * scales.t1.max(scales.t2);
    check_orbit(f, &eval_axes, [reach_x[0], reach_x[1], reach3])?;
    GridFunction3::sample(
        |x1, x2, x3| {
            let terms: Vec<f64> = q
                .nodes
                .iter()
                .zip(&q.weights)
                .map(|(&th, &w)| {
                    let y = [scales.t1 * th.cos(), scales.t2 * th.sin()];
                    let shift = a.bilinear([x1, x2], y);
                    w * f.eval([x1 - y[0], x2 - y[1], x3 - shift])
                })
                .collect();
            pairwise_sum(&terms)
        },
        eval_axes,
    )
}

pub fn elliptic_average(
    f: &GridFunction3<f64>,
    a: &Matrix2,
    scales: ScaleParams,
    q: &ThetaQuadrature,
) -> Result<GridFunction3<f64>> {
    elliptic_average_on(f, a, scales, q, f.axes().clone())
}

/// The lifted average: the measure's third coordinate is
/// (1/2) y^T A_s y + x^T A_w y with y = (t1 cos, t2 sin); conjugating by the
/// shear of A_s turns this into the elliptic average.
pub fn lifted_average_on(
    f: &GridFunction3<f64>,
    a: &Matrix2,
    scales: ScaleParams,
    q: &ThetaQuadrature,
    eval_axes: [Axis; 3],
) -> Result<GridFunction3<f64>> {
    if !a.is_finite() {
        return Err(Error::NonFinite("matrix entry"));
    }
    let (sym, skew) = decompose(a);
    let amax = a.max_abs();
    let xmax = eval_axes[0].lo().abs().max(eval_axes[0].hi().abs()).max(
        eval_axes[1].lo().abs().max(eval_axes[1].hi().abs()),
    );
    let t = scales.t1.max(scales.t2);
    let reach3 = amax * t * t + 2.0 * amax * xmax * t;
    check_orbit(f, &eval_axes, [scales.t1, scales.t2, reach3])?;
    GridFunction3::sample(
        |x1, x2, x3| {
            let terms: Vec<f64> = q
                .nodes
                .iter()
                .zip(&q.weights)
                .map(|(&th, &w)| {
                    let y = [scales.t1 * th.cos(), scales.t2 * th.sin()];
                    let shift = 0.5 * sym.bilinear(y, y) + skew.bilinear([x1, x2], y);
                    w * f.eval([x1 - y[0], x2 - y[1], x3 - shift])
                })
                .collect();
            pairwise_sum(&terms)
        },
        eval_axes,
    )
}

/// The conjugated route for E^A: shear by +A_s, lifted average, shear back.
/// Must agree with `elliptic_average` — the two are independent code paths.
pub fn shear_transport(
    f: &GridFunction3<f64>,
    a: &Matrix2,
    scales: ScaleParams,
    q: &ThetaQuadrature,
) -> Result<GridFunction3<f64>> {
    let (sym, _) = decompose(a);
    let (sheared, _) = f.shear(&sym, 1.0)?;
    let averaged = lifted_average_on(&sheared, a, scales, q, f.axes().clone())?;
    let (out, _) = averaged.shear(&sym, -1.0)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxMode {
    Circular,
    Elliptic,
}

/// Pointwise sup of |E^A| over a finite dyadic index set. Circular mode uses
/// k1 = k2 = k.
pub fn lacunary_max(
    f: &GridFunction3<f64>,
    a: &Matrix2,
    mode: MaxMode,
    k_range: &[(i32, i32)],
    q: &ThetaQuadrature,
) -> Result<GridFunction3<f64>> {
    if k_range.is_empty() {
        return Err(Error::EmptyRange);
    }
    let mut pieces = Vec::with_capacity(k_range.len());
    for &(k1, k2) in k_range {
        if mode == MaxMode::Circular && k1 != k2 {
            return Err(Error::InvalidParameter(
                "circular mode requires k1 = k2".into(),
            ));
        }
        pieces.push(elliptic_average(f, a, ScaleParams::dyadic(k1, k2), q)?);
    }
    let refs: Vec<&GridFunction3<f64>> = pieces.iter().collect();
    pointwise_sup(&refs)
}

fn fft_axis3(
    g: &GridFunction3<Complex64>,
    inverse: bool,
) -> Vec<Complex64> {
    let [n1, n2, n3] = g.resolution();
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n3)
    } else {
        planner.plan_fft_forward(n3)
    };
    let mut data: Vec<Complex64> = g.data().to_vec();
    data.par_chunks_mut(n3).for_each(|line| fft.process(line));
    if inverse {
        let s = 1.0 / n3 as f64;
        data.par_iter_mut().for_each(|v| *v *= s);
    }
    let _ = (n1, n2);
    data
}

/// Twisted convolution f *_J g on a common uniform grid:
/// (f *_J g)(x) = Int f(x . y^{-1}) g(y) dy, computed per frequency in x3
/// (the group FT in the central variable turns the law into a twisted planar
/// convolution, evaluated by direct quadrature with bilinear interpolation).
pub fn twisted_convolution(
    f: &GridFunction3<Complex64>,
    g: &GridFunction3<Complex64>,
) -> Result<GridFunction3<Complex64>> {
    if !f.same_grid(g) {
        return Err(Error::GridMismatch("twisted_convolution grids differ".into()));
    }
    let [n1, n2, n3] = f.resolution();
    let ax = f.axes();
    let h3 = ax[2].width(0);
    for k in 0..n3 {
        if (ax[2].width(k) - h3).abs() > 1e-12 * h3 {
            return Err(Error::InvalidGrid(
                "twisted_convolution needs a uniform third axis".into(),
            ));
        }
    }
    let c1: Vec<f64> = ax[0].centers().to_vec();
    let c2: Vec<f64> = ax[1].centers().to_vec();
    let vol_xy: Vec<f64> = (0..n1 * n2)
        .map(|ij| ax[0].width(ij / n2) * ax[1].width(ij % n2))
        .collect();

    let c0 = ax[2].center(0);
    let ft = fft_axis3(f, false); // layout: (i1, i2, m)
    let gt = fft_axis3(g, false);

    // per-mu twisted planar convolution
    let mut out_t = vec![Complex64::new(0.0, 0.0); n1 * n2 * n3];
    let mus: Vec<f64> = (0..n3)
        .map(|m| {
            let mm = if m <= n3 / 2 { m as i64 } else { m as i64 - n3 as i64 };
            mm as f64 / (n3 as f64 * h3)
        })
        .collect();

    // slices of ft viewed as 2-D complex fields per mu, with bilinear lookup
    let lookup = |data: &[Complex64], m: usize, p1: f64, p2: f64| -> Complex64 {
        // bilinear interp on (c1, c2); zero outside
        let sten = |c: &[f64], p: f64, lo: f64, hi: f64| -> Option<(usize, f64)> {
            if p < lo || p > hi {
                return None;
            }
            let n = c.len();
            let i = match c.binary_search_by(|x| x.partial_cmp(&p).unwrap()) {
                Ok(i) => i.min(n - 2),
                Err(0) => 0,
                Err(i) if i >= n => n - 2,
                Err(i) => i - 1,
            };
            Some((i, (p - c[i]) / (c[i + 1] - c[i])))
        };
        let (i, fi) = match sten(&c1, p1, ax[0].lo(), ax[0].hi()) {
            Some(v) => v,
            None => return Complex64::new(0.0, 0.0),
        };
        let (j, fj) = match sten(&c2, p2, ax[1].lo(), ax[1].hi()) {
            Some(v) => v,
            None => return Complex64::new(0.0, 0.0),
        };
        let at = |i: usize, j: usize| data[(i * n2 + j) * n3 + m];
        at(i, j) * ((1.0 - fi) * (1.0 - fj))
            + at((i + 1).min(n1 - 1), j) * (fi * (1.0 - fj))
            + at(i, (j + 1).min(n2 - 1)) * ((1.0 - fi) * fj)
            + at((i + 1).min(n1 - 1), (j + 1).min(n2 - 1)) * (fi * fj)
    };

    out_t
        .par_chunks_mut(n3)
        .enumerate()
        .for_each(|(ij, line)| {
            let (i1, i2) = (ij / n2, ij % n2);
            let (x1, x2) = (c1[i1], c2[i2]);
            for (m, slot) in line.iter_mut().enumerate() {
                let mu = mus[m];
                let mut acc = Complex64::new(0.0, 0.0);
                for j1 in 0..n1 {
                    for j2 in 0..n2 {
                        let gv = gt[(j1 * n2 + j2) * n3 + m];
                        if gv.norm_sqr() == 0.0 {
                            continue;
                        }
                        let (y1, y2) = (c1[j1], c2[j2]);
                        // x^T J y = 2 (x2 y1 - x1 y2)
                        let twist = -2.0 * std::f64::consts::PI * mu * 2.0 * (x2 * y1 - x1 * y2);
                        let fv = lookup(&ft, m, x1 - y1, x2 - y2);
                        acc += fv * gv * Complex64::new(twist.cos(), twist.sin()) * vol_xy[j1 * n2 + j2];
                    }
                }
                // one factor h3 from g's x3 integral (f's FT and the inverse
                // transform cancel the other); the phase accounts for the
                // axis origin: the DFT indexes from 0 but the first cell
                // center sits at c0, and of the three origin phases (f, g,
                // inverse) exactly one survives
                let ph = -2.0 * std::f64::consts::PI * mu * c0;
                *slot = acc * h3 * Complex64::new(ph.cos(), ph.sin());
            }
        });

    let tmp = GridFunction3::from_axes_and_data(ax.clone(), out_t)?;
    let out = fft_axis3(&tmp, true);
    GridFunction3::from_axes_and_data(ax.clone(), out)
}

/// Real-input convenience wrapper around `twisted_convolution`.
pub fn twisted_convolution_real(
    f: &GridFunction3<f64>,
    g: &GridFunction3<f64>,
) -> Result<GridFunction3<f64>> {
    let fc = to_complex(f);
    let gc = to_complex(g);
    let out = twisted_convolution(&fc, &gc)?;
    GridFunction3::from_axes_and_data(
        out.axes().clone(),
        out.data().iter().map(|v| v.re).collect(),
    )
}

pub fn to_complex(f: &GridFunction3<f64>) -> GridFunction3<Complex64> {
    GridFunction3::from_axes_and_data(
        f.axes().clone(),
        f.data().iter().map(|&v| Complex64::new(v, 0.0)).collect(),
    )
    .expect("same layout")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Box3;

    fn bump(r: f64, c: [f64; 3]) -> impl Fn(f64, f64, f64) -> f64 + Sync {
        move |x, y, z| {
            let r2 = ((x - c[0]).powi(2) + (y - c[1]).powi(2) + (z - c[2]).powi(2)) / (r * r);
            if r2 < 1.0 {
                (-1.0 / (1.0 - r2)).exp()
            } else {
                0.0
            }
        }
    }

    #[test]
    fn constant_average_is_two_pi() {
        let bx = Box3::cube(-4.0, 4.0).unwrap();
        let f = GridFunction3::sample_uniform(|_, _, _| 1.0, &bx, [24, 24, 24]).unwrap();
        let small = [
            Axis::uniform(-0.5, 0.5, 4).unwrap(),
            Axis::uniform(-0.5, 0.5, 4).unwrap(),
            Axis::uniform(-0.5, 0.5, 4).unwrap(),
        ];
        let q = ThetaQuadrature::uniform(128).unwrap();
        let out = elliptic_average_on(
            &f,
            &Matrix2::zero(),
            ScaleParams::new(1.0, 1.0).unwrap(),
            &q,
            small,
        )
        .unwrap();
        for &v in out.data() {
            assert!((v - 2.0 * std::f64::consts::PI).abs() < 1e-10);
        }
    }

    #[test]
    fn linear_x3_averages_to_two_pi_x3() {
        // the A-term integrates to zero over the full circle
        let bx = Box3::cube(-6.0, 6.0).unwrap();
        let f = GridFunction3::sample_uniform(|_, _, z| z, &bx, [24, 24, 48]).unwrap();
        let small = [
            Axis::uniform(-0.5, 0.5, 4).unwrap(),
            Axis::uniform(-0.5, 0.5, 4).unwrap(),
            Axis::uniform(-0.5, 0.5, 8).unwrap(),
        ];
        let q = ThetaQuadrature::uniform(256).unwrap();
        let a = Matrix2::new(1.0, 0.5, -0.3, 2.0);
        let out =
            elliptic_average_on(&f, &a, ScaleParams::new(1.0, 0.7).unwrap(), &q, small).unwrap();
        for (i, j, k, v) in out.iter_cells() {
            let x3 = out.axes()[2].center(k);
            let _ = (i, j);
            assert!(
                (v - 2.0 * std::f64::consts::PI * x3).abs() < 1e-8,
                "x3 = {x3}, got {v}"
            );
        }
    }

    #[test]
    fn quadrature_floor_enforced() {
        assert!(ThetaQuadrature::uniform(32).is_err());
        assert!(ThetaQuadrature::uniform(64).is_ok());
    }

    #[test]
    fn lifted_average_hits_slab_value() {
        // A = I: the lifted measure's third coordinate is t^2/2, so the
        // indicator of B_10 x [0, delta] averages to 2*pi at ((0,0), 1/2 + delta/2)
        let delta = 0.25;
        let bx = Box3::new([-11.0, -11.0, -0.5], [11.0, 11.0, 1.5]).unwrap();
        let f = GridFunction3::sample_uniform(
            |x, y, z| {
                if x * x + y * y <= 100.0 && (0.0..=delta).contains(&z) {
                    1.0
                } else {
                    0.0
                }
            },
            &bx,
            [44, 44, 64],
        )
        .unwrap();
        let q = ThetaQuadrature::uniform(128).unwrap();
        let eval = [
            Axis::uniform(-0.25, 0.25, 2).unwrap(),
            Axis::uniform(-0.25, 0.25, 2).unwrap(),
            Axis::uniform(0.5, 0.5 + delta, 2).unwrap(),
        ];
        let out = lifted_average_on(
            &f,
            &Matrix2::identity(),
            ScaleParams::new(1.0, 1.0).unwrap(),
            &q,
            eval,
        )
        .unwrap();
        let v = out.eval([0.0, 0.0, 0.5 + delta / 2.0]);
        assert!(
            (v - 2.0 * std::f64::consts::PI).abs() < 1e-8,
            "expected 2*pi, got {v}"
        );
    }

    #[test]
    fn transport_equals_direct_symmetric_zero() {
        let bx = Box3::cube(-4.0, 4.0).unwrap();
        let f = GridFunction3::sample_uniform(bump(1.2, [0.2, 0.0, 0.1]), &bx, [32, 32, 32])
            .unwrap();
        let q = ThetaQuadrature::uniform(128).unwrap();
        let s = ScaleParams::new(1.0, 1.0).unwrap();
        // A = J has A_s = 0: transport is literally the direct route
        let d = elliptic_average(&f, &Matrix2::j(), s, &q).unwrap();
        let t = shear_transport(&f, &Matrix2::j(), s, &q).unwrap();
        let sup = d
            .data()
            .iter()
            .zip(t.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(sup < 1e-12, "sup diff {sup}");
    }

    #[test]
    fn transport_equals_direct_random_matrix() {
        let bx = Box3::cube(-4.0, 4.0).unwrap();
        let f = GridFunction3::sample_uniform(bump(1.1, [0.1, -0.2, 0.0]), &bx, [40, 40, 40])
            .unwrap();
        let q = ThetaQuadrature::uniform(256).unwrap();
        let s = ScaleParams::new(1.0, 0.5).unwrap();
        let a = Matrix2::new(0.6, 0.4, -0.2, -0.3);
        let d = elliptic_average(&f, &a, s, &q).unwrap();
        let t = shear_transport(&f, &a, s, &q).unwrap();
        // compare away from the data boundary where shears resample cleanly
        let mut sup: f64 = 0.0;
        for (i, j, k, vd) in d.iter_cells() {
            let p = [
                d.axes()[0].center(i),
                d.axes()[1].center(j),
                d.axes()[2].center(k),
            ];
            if p[0].abs() < 2.0 && p[1].abs() < 2.0 && p[2].abs() < 2.0 {
                sup = sup.max((vd - t.get(i, j, k)).abs());
            }
        }
        // interpolation tolerance at this resolution is ~5e-3 for the bump
        assert!(sup < 5e-2, "sup diff {sup}");
    }

    #[test]
    fn lacunary_singleton_and_monotone() {
        let bx = Box3::cube(-4.0, 4.0).unwrap();
        let f = GridFunction3::sample_uniform(bump(1.0, [0.0; 3]), &bx, [24, 24, 24]).unwrap();
        let q = ThetaQuadrature::uniform(64).unwrap();
        let a = Matrix2::identity();
        let single = lacunary_max(&f, &a, MaxMode::Circular, &[(0, 0)], &q).unwrap();
        let avg = elliptic_average(&f, &a, ScaleParams::dyadic(0, 0), &q).unwrap();
        for (s, v) in single.data().iter().zip(avg.data()) {
            assert!((s - v.abs()).abs() < 1e-14);
        }
        let both = lacunary_max(&f, &a, MaxMode::Circular, &[(0, 0), (-1, -1)], &q).unwrap();
        for (b, s) in both.data().iter().zip(single.data()) {
            assert!(b + 1e-14 >= *s);
        }
        assert!(lacunary_max(&f, &a, MaxMode::Circular, &[], &q).is_err());
        assert!(lacunary_max(&f, &a, MaxMode::Circular, &[(0, 1)], &q).is_err());
    }

    #[test]
    fn twisted_conv_at_identity_is_twist_free() {
        let bx = Box3::cube(-3.0, 3.0).unwrap();
        let f = GridFunction3::sample_uniform(bump(1.2, [0.3, 0.0, 0.2]), &bx, [32, 32, 32])
            .unwrap();
        let g = GridFunction3::sample_uniform(bump(1.0, [-0.2, 0.4, 0.0]), &bx, [32, 32, 32])
            .unwrap();
        let conv = twisted_convolution_real(&f, &g).unwrap();
        // brute-force reference at a grid center x*:
        // f *_J g(x*) = Int f(x1*-y1, x2*-y2, x3*-y3-x*^T J y) g(y, y3) dy
        let n = 32;
        let x = [
            f.axes()[0].center(n / 2),
            f.axes()[1].center(n / 2 - 1),
            f.axes()[2].center(n / 2),
        ];
        let mut reference = 0.0;
        for (i, j, k, gv) in g.iter_cells() {
            let p = [
                g.axes()[0].center(i),
                g.axes()[1].center(j),
                g.axes()[2].center(k),
            ];
            let twist = 2.0 * (x[1] * p[0] - x[0] * p[1]);
            reference += f.eval([x[0] - p[0], x[1] - p[1], x[2] - p[2] - twist])
                * gv
                * g.cell_volume(i, j, k);
        }
        let got = conv.get(n / 2, n / 2 - 1, n / 2);
        assert!(
            (got - reference).abs() <= 0.03 * reference.abs().max(1e-6),
            "got {got}, reference {reference}"
        );
    }

    #[test]
    fn twisted_conv_with_narrow_bump_is_identity_like() {
        let bx = Box3::cube(-3.0, 3.0).unwrap();
        let f = GridFunction3::sample_uniform(bump(1.3, [0.0; 3]), &bx, [24, 24, 24]).unwrap();
        let sup_f = f.lp_norm(f64::INFINITY).unwrap();
        let mut errs = Vec::new();
        for w in [0.9, 0.45] {
            let raw = GridFunction3::sample_uniform(bump(w, [0.0; 3]), &bx, [24, 24, 24]).unwrap();
            let mass = raw.abs_mass();
            let g = raw.map(|v| v / mass);
            let conv = twisted_convolution_real(&f, &g).unwrap();
            let sup: f64 = conv
                .data()
                .iter()
                .zip(f.data())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            errs.push(sup / sup_f);
        }
        // mollifier limit: narrower bump approximates f better
        assert!(errs[1] < errs[0], "errors {errs:?}");
        assert!(errs[1] < 0.25, "errors {errs:?}");
    }
}
