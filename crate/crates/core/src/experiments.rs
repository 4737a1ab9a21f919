//! End-to-end experiments: the divergence law for the lacunary maximal
//! operator applied to thin slabs, and the boundedness dichotomy scan that
//! confronts the analytic classification with measured Fourier decay.

use crate::error::{Error, Result};
use crate::grid::Axis;
use crate::matrix::{classify, decompose, Matrix2, MatrixClassification, DEFAULT_CLASSIFY_TOL};
use crate::oscillatory::{fit_line, measure_fourier};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CounterexampleSpec {
    pub matrix: Matrix2,
    pub m: u32,
    pub delta: f64,
    pub p: f64,
    /// inclusive lacunary index range; slab centers 2^{2k-1} must sit in [0, 3]
    pub k_lo: i32,
    pub k_hi: i32,
    /// planar resolution on [-1,1]^2
    pub spatial_n: usize,
}

impl CounterexampleSpec {
    /// The standard scale chain: delta = 2^{1-2m}, k from 1-m to 0.
    pub fn standard(matrix: Matrix2, m: u32, p: f64) -> Result<Self> {
        let spec = CounterexampleSpec {
            matrix,
            m,
            delta: (1.0 - 2.0 * m as f64).exp2(),
            p,
            k_lo: 1 - m as i32,
            k_hi: 0,
            spatial_n: 128,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || !(self.p >= 1.0) || self.k_lo > self.k_hi || self.spatial_n < 8 {
            return Err(Error::InvalidParameter(
                "counterexample spec: need m >= 1, p >= 1, a nonempty k range".into(),
            ));
        }
        let lo = (-2.0 * self.m as f64).exp2();
        if !(self.delta > lo && self.delta < 4.0 * lo) {
            return Err(Error::InvalidParameter(format!(
                "delta = {} incompatible with m = {}: need 2^(-2m) < delta < 2^(-2m+2)",
                self.delta, self.m
            )));
        }
        if !self.matrix.is_finite() {
            return Err(Error::NonFinite("matrix entry"));
        }
        Ok(())
    }

    pub fn slab_centers(&self) -> Vec<f64> {
        (self.k_lo..=self.k_hi)
            .map(|k| ((2 * k - 1) as f64).exp2())
            .collect()
    }
}

pub const STRAT_CELLS_PER_SLAB: usize = 8;
pub const STRAT_BACKGROUND_RATIO: f64 = 1.06;

/// Third-axis map for the slab experiment: uniform bands of step delta/8 on
/// [s - 2 delta, s + 3 delta] around every slab base s, log-spaced background
/// elsewhere on [0, 3].
pub fn stratified_axis(spec: &CounterexampleSpec) -> Result<Axis> {
    spec.validate()?;
    let (lo, hi) = (0.0f64, 3.0f64);
    let mut pts = vec![lo, hi];
    let h = spec.delta / STRAT_CELLS_PER_SLAB as f64;
    for s in spec.slab_centers() {
        let a = (s - 2.0 * spec.delta).max(lo);
        let b = (s + 3.0 * spec.delta).min(hi);
        let n = ((b - a) / h).ceil() as usize;
        for i in 0..=n {
            pts.push(a + (b - a) * i as f64 / n as f64);
        }
    }
    let mut x = spec.delta / 4.0;
    while x < hi {
        pts.push(x);
        x *= STRAT_BACKGROUND_RATIO;
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * hi);
    let axis = Axis::from_edges(pts)?;
    // every slab must carry at least 8 cells
    for s in spec.slab_centers() {
        let cells = axis
            .centers()
            .iter()
            .filter(|&&c| c >= s && c <= s + spec.delta)
            .count();
        if cells < STRAT_CELLS_PER_SLAB {
            return Err(Error::UnresolvedSlab {
                width: spec.delta,
                need: spec.delta / STRAT_CELLS_PER_SLAB as f64,
            });
        }
    }
    Ok(axis)
}

/// theta-measure of { theta : c(theta) in [lo, hi] } for the lifted-measure
/// height c(theta) = (1/2) y^T A_s y + x^T A_w y, y = t (cos, sin) theta,
/// computed as the empirical measure of a dense uniform theta sample.
struct ArcSampler {
    /// sorted heights of n uniform theta samples
    sorted: Vec<f64>,
}

pub const ARC_SAMPLES: usize = 4096;

impl ArcSampler {
    fn new(sym: &Matrix2, skew: &Matrix2, x: [f64; 2], t: f64) -> Self {
        let step = TWO_PI / ARC_SAMPLES as f64;
        let (dc, ds) = (step.cos(), step.sin());
        let (mut c, mut s) = (1.0f64, 0.0f64);
        let mut vals = Vec::with_capacity(ARC_SAMPLES);
        for _ in 0..ARC_SAMPLES {
            let y = [t * c, t * s];
            vals.push(0.5 * sym.bilinear(y, y) + skew.bilinear(x, y));
            let (nc, ns) = (c * dc - s * ds, s * dc + c * ds);
            c = nc;
            s = ns;
        }
        vals.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        ArcSampler { sorted: vals }
    }

    fn measure(&self, lo: f64, hi: f64) -> f64 {
        let a = self.sorted.partition_point(|&v| v < lo);
        let b = self.sorted.partition_point(|&v| v <= hi);
        TWO_PI * (b - a) as f64 / ARC_SAMPLES as f64
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DivergenceResult {
    pub m: u32,
    pub delta: f64,
    pub p: f64,
    /// R(delta) = ||max_k E_k h_delta||_p / ||h_delta||_p on B_1 x [0, 3]
    pub r_norm: f64,
    /// R(delta) / m^{1/p}
    pub r_scaled: f64,
    /// slab-union closed form, available when A = I
    pub oracle_r: Option<f64>,
}

/// The divergence experiment: apply the lacunary maximal average to the slab
/// function h_delta = chi_{B_10}(x) chi_{[0,delta]}(x_3) and measure the
/// p-norm ratio on B_1 x [0, 3]. The spatial average is the identity here
/// (|x - t y| < 10 always on the evaluation box), so the maximal value at
/// (x, x_3) is the largest theta-measure of { c_k(theta) in [x_3-delta, x_3] }
/// over the index range.
pub fn divergence_experiment(spec: &CounterexampleSpec) -> Result<DivergenceResult> {
    spec.validate()?;
    let t_max = (spec.k_hi as f64).exp2();
    if 1.0 + t_max * spec.matrix.max_abs().max(1.0) >= 10.0 {
        return Err(Error::InvalidParameter(
            "orbit may leave the slab support B_10; shrink the k range".into(),
        ));
    }
    let axis3 = stratified_axis(spec)?;
    let x3c: Vec<f64> = axis3.centers().to_vec();
    let w3: Vec<f64> = (0..axis3.n()).map(|i| axis3.width(i)).collect();
    let (sym, skew) = decompose(&spec.matrix);
    let n = spec.spatial_n;
    let hs = 2.0 / n as f64;
    let cells: Vec<[f64; 2]> = (0..n * n)
        .map(|idx| {
            let i = idx / n;
            let j = idx % n;
            [-1.0 + (i as f64 + 0.5) * hs, -1.0 + (j as f64 + 0.5) * hs]
        })
        .filter(|x| x[0] * x[0] + x[1] * x[1] <= 1.0)
        .collect();
    let ts: Vec<f64> = (spec.k_lo..=spec.k_hi).map(|k| (k as f64).exp2()).collect();
    let total: f64 = cells
        .par_iter()
        .map(|&x| {
            let samplers: Vec<ArcSampler> =
                ts.iter().map(|&t| ArcSampler::new(&sym, &skew, x, t)).collect();
            let mut acc = 0.0;
            for (i, &x3) in x3c.iter().enumerate() {
                let v = samplers
                    .iter()
                    .map(|s| s.measure(x3 - spec.delta, x3))
                    .fold(0.0, f64::max);
                if v > 0.0 {
                    acc += v.powf(spec.p) * w3[i];
                }
            }
            acc * hs * hs
        })
        .sum();
    let h_norm = (100.0 * std::f64::consts::PI * spec.delta).powf(1.0 / spec.p);
    let r_norm = total.powf(1.0 / spec.p) / h_norm;
    let n_slabs = (spec.k_hi - spec.k_lo + 1) as f64;
    let is_identity = (spec.matrix.a11 - 1.0).abs() < 1e-12
        && (spec.matrix.a22 - 1.0).abs() < 1e-12
        && spec.matrix.a12.abs() < 1e-12
        && spec.matrix.a21.abs() < 1e-12;
    // disjoint slabs, each of measure-value 2 pi over the unit disc:
    // ||sup||_p^p = (2 pi)^p (pi) (n delta)
    let oracle_r = is_identity.then(|| TWO_PI * (n_slabs / 100.0).powf(1.0 / spec.p));
    Ok(DivergenceResult {
        m: spec.m,
        delta: spec.delta,
        p: spec.p,
        r_norm,
        r_scaled: r_norm / n_slabs.powf(1.0 / spec.p),
        oracle_r,
    })
}

pub const DEGENERACY_SLOPE_THRESHOLD: f64 = -0.05;
pub const XI3_OCTAVES: std::ops::RangeInclusive<i32> = 4..=12;

#[derive(Debug, Clone, Serialize)]
pub struct PairScan {
    pub k1: i32,
    pub k2: i32,
    pub slope: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DichotomyVerdict {
    pub matrix: Matrix2,
    pub classification: MatrixClassification,
    pub scanned: bool,
    pub pairs: Vec<PairScan>,
    pub scan_circular_bounded: bool,
    pub scan_elliptic_bounded: bool,
    pub agrees: bool,
}

/// Scan |measure_fourier(0, 0, xi3)| decay over all dyadic pairs |k_i| <=
/// k_max and compare the degeneracy pattern against the analytic
/// classification. Matrices with a skew part are bounded by the twist
/// mechanism and are reported straight from classify without a scan.
pub fn dichotomy_scan(a: &Matrix2, k_max: i32, tol: f64) -> Result<DichotomyVerdict> {
    if !a.is_finite() {
        return Err(Error::NonFinite("matrix entry"));
    }
    if a.max_abs() == 0.0 {
        return Err(Error::InvalidParameter(
            "dichotomy scan needs a nonzero matrix".into(),
        ));
    }
    let classification = classify(a, tol)?;
    let (sym, skew) = decompose(a);
    let scale = a.max_abs();
    if skew.max_abs() > tol * scale {
        return Ok(DichotomyVerdict {
            matrix: *a,
            classification,
            scanned: false,
            pairs: Vec::new(),
            scan_circular_bounded: true,
            scan_elliptic_bounded: true,
            agrees: classification.circular_bounded && classification.elliptic_bounded,
        });
    }
    let (b, e, d) = (sym.a11, sym.a12, sym.a22);
    let mut pair_list = Vec::new();
    for k1 in -k_max..=k_max {
        for k2 in -k_max..=k_max {
            pair_list.push((k1, k2));
        }
    }
    let pairs: Vec<PairScan> = pair_list
        .par_iter()
        .map(|&(k1, k2)| {
            let pts: Vec<(f64, f64)> = XI3_OCTAVES
                .map(|j| {
                    let xi3 = (j as f64).exp2();
                    let v = measure_fourier(b, d, e, k1, k2, [0.0, 0.0, xi3]).norm();
                    (j as f64, v.max(1e-300).log2())
                })
                .collect();
            let (slope, _, _) = fit_line(&pts);
            PairScan {
                k1,
                k2,
                slope,
                degenerate: slope >= DEGENERACY_SLOPE_THRESHOLD,
            }
        })
        .collect();
    let circular_degenerate = pairs.iter().any(|p| p.degenerate && p.k1 == p.k2);
    let elliptic_degenerate = pairs.iter().any(|p| p.degenerate);
    let scan_circular_bounded = !circular_degenerate;
    let scan_elliptic_bounded = !elliptic_degenerate;
    Ok(DichotomyVerdict {
        matrix: *a,
        classification,
        scanned: true,
        pairs,
        scan_circular_bounded,
        scan_elliptic_bounded,
        agrees: scan_circular_bounded == classification.circular_bounded
            && scan_elliptic_bounded == classification.elliptic_bounded,
    })
}

/// The fixed matrix suite for the dichotomy correspondence test: forbidden
/// circular forms, forbidden elliptic forms for a in {-2..2}, near-miss
/// diagonals, mixed-sign and rank-deficient diagonals, symmetric matrices
/// with e != 0, skew and general non-symmetric matrices.
pub fn curated_suite() -> Vec<(&'static str, Matrix2)> {
    vec![
        ("identity", Matrix2::identity()),
        ("2I", Matrix2::diag(2.0, 2.0)),
        ("-I", Matrix2::diag(-1.0, -1.0)),
        ("diag(1,4)", Matrix2::diag(1.0, 4.0)),
        ("diag(1,16)", Matrix2::diag(1.0, 16.0)),
        ("diag(4,1)", Matrix2::diag(4.0, 1.0)),
        ("diag(16,1)", Matrix2::diag(16.0, 1.0)),
        ("diag(1,1/16)", Matrix2::diag(1.0, 0.0625)),
        ("diag(3,12)", Matrix2::diag(3.0, 12.0)),
        ("diag(1,2)", Matrix2::diag(1.0, 2.0)),
        ("diag(1,3)", Matrix2::diag(1.0, 3.0)),
        ("diag(2,3)", Matrix2::diag(2.0, 3.0)),
        ("diag(1,-1)", Matrix2::diag(1.0, -1.0)),
        ("diag(1,0)", Matrix2::diag(1.0, 0.0)),
        ("diag(0,1)", Matrix2::diag(0.0, 1.0)),
        ("sym e=1/2", Matrix2::new(1.0, 0.5, 0.5, 1.0)),
        ("sym all-ones", Matrix2::new(1.0, 1.0, 1.0, 1.0)),
        ("sym e=1/4 a=1", Matrix2::new(2.0, 0.25, 0.25, 8.0)),
        ("J", Matrix2::j()),
        ("skew w=1", Matrix2::new(0.0, 1.0, -1.0, 0.0)),
        ("upper triangular", Matrix2::new(1.0, 2.0, 0.0, 3.0)),
        ("I plus skew", Matrix2::new(1.0, -1.0, 1.0, 1.0)),
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub name: String,
    pub verdict: DichotomyVerdict,
}

pub fn run_suite(k_max: i32) -> Result<Vec<SuiteOutcome>> {
    curated_suite()
        .into_iter()
        .map(|(name, a)| {
            Ok(SuiteOutcome {
                name: name.to_string(),
                verdict: dichotomy_scan(&a, k_max, DEFAULT_CLASSIFY_TOL)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        let s = CounterexampleSpec::standard(Matrix2::identity(), 3, 2.0).unwrap();
        assert_eq!(s.delta, 2.0f64.powi(-5));
        assert_eq!((s.k_lo, s.k_hi), (-2, 0));
        let mut bad = s.clone();
        bad.delta = 1.0;
        assert!(bad.validate().is_err());
        assert_eq!(s.slab_centers(), vec![0.03125, 0.125, 0.5]);
    }

    #[test]
    fn stratified_axis_resolves_slabs() {
        let s = CounterexampleSpec::standard(Matrix2::identity(), 4, 2.0).unwrap();
        let ax = stratified_axis(&s).unwrap();
        assert!(ax.lo() == 0.0 && ax.hi() == 3.0);
        for c in s.slab_centers() {
            let cells = ax
                .centers()
                .iter()
                .filter(|&&x| x >= c && x <= c + s.delta)
                .count();
            assert!(cells >= STRAT_CELLS_PER_SLAB, "slab {c}: {cells} cells");
        }
    }

    #[test]
    fn arc_sampler_identity_and_rotation() {
        let (sym, skew) = decompose(&Matrix2::identity());
        let s = ArcSampler::new(&sym, &skew, [0.3, -0.2], 0.5);
        // constant height t^2/2 = 0.125
        assert!((s.measure(0.1, 0.2) - TWO_PI).abs() < 1e-12);
        assert!(s.measure(0.2, 0.3) == 0.0);

        // skew case: height rho cos(theta + phase), rho = 2 t r
        let (sym, skew) = decompose(&Matrix2::j());
        let (x, t) = ([0.6, 0.0], 0.25);
        let rho = 2.0 * t * 0.6;
        let s = ArcSampler::new(&sym, &skew, x, t);
        let (lo, hi) = (0.2 * rho, 0.7 * rho);
        let exact = 2.0 * ((lo / rho).acos() - (hi / rho).acos());
        let got = s.measure(lo, hi);
        assert!((got - exact).abs() < 1e-2, "{got} vs {exact}");
    }

    #[test]
    fn single_slab_continuity() {
        let mut base = CounterexampleSpec::standard(Matrix2::identity(), 1, 2.0).unwrap();
        base.spatial_n = 64;
        let r0 = divergence_experiment(&base).unwrap();
        let mut pert = base.clone();
        pert.matrix = Matrix2::new(1.0 + 1e-9, 0.0, 0.0, 1.0 - 1e-9);
        let r1 = divergence_experiment(&pert).unwrap();
        assert!((r0.r_norm - r1.r_norm).abs() < 1e-6 * r0.r_norm);
        let oracle = r0.oracle_r.unwrap();
        assert!((r0.r_norm - oracle).abs() < 0.05 * oracle, "{r0:?}");
    }

    #[test]
    fn identity_matches_slab_union_oracle() {
        let mut spec = CounterexampleSpec::standard(Matrix2::identity(), 3, 2.0).unwrap();
        spec.spatial_n = 64;
        let r = divergence_experiment(&spec).unwrap();
        let oracle = r.oracle_r.unwrap();
        assert!((r.r_norm / oracle - 1.0).abs() < 0.1, "{r:?}");
        assert!((r.r_scaled - TWO_PI / 10.0).abs() < 0.05);
    }

    #[test]
    fn orbit_escape_rejected() {
        let mut s = CounterexampleSpec::standard(Matrix2::identity(), 2, 2.0).unwrap();
        s.matrix = Matrix2::diag(50.0, 50.0);
        assert!(divergence_experiment(&s).is_err());
    }

    #[test]
    fn scan_identity_and_diag14() {
        let v = dichotomy_scan(&Matrix2::identity(), 2, DEFAULT_CLASSIFY_TOL).unwrap();
        assert!(v.agrees && !v.scan_circular_bounded && !v.scan_elliptic_bounded);
        for p in &v.pairs {
            assert_eq!(p.degenerate, p.k1 == p.k2, "pair {:?}", (p.k1, p.k2));
        }
        let v = dichotomy_scan(&Matrix2::diag(1.0, 4.0), 2, DEFAULT_CLASSIFY_TOL).unwrap();
        assert!(v.agrees && v.scan_circular_bounded && !v.scan_elliptic_bounded);
        for p in &v.pairs {
            assert_eq!(p.degenerate, p.k1 == p.k2 + 1, "pair {:?}", (p.k1, p.k2));
        }
    }

    #[test]
    fn scan_e_nonzero_no_degenerate_pair() {
        let v = dichotomy_scan(
            &Matrix2::new(1.0, 1.0, 1.0, 1.0),
            2,
            DEFAULT_CLASSIFY_TOL,
        )
        .unwrap();
        assert!(v.agrees && v.scan_circular_bounded && v.scan_elliptic_bounded);
    }

    #[test]
    fn scan_skew_reports_bounded() {
        let v = dichotomy_scan(&Matrix2::j(), 2, DEFAULT_CLASSIFY_TOL).unwrap();
        assert!(!v.scanned && v.agrees);
        assert!(dichotomy_scan(&Matrix2::zero(), 2, DEFAULT_CLASSIFY_TOL).is_err());
    }
}
