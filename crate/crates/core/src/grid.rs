//! Sampled functions on R^2 x R: cell-centered grids (optionally nonuniform
//! along an axis), trilinear interpolation with zero extension outside the
//! box, L^p norms, the shear transform, and flat-binary snapshots.

use crate::error::{Error, Result};
use crate::matrix::{half_quadratic_form, Matrix2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// Pairwise (cascade) summation: deterministic and accurate independent of
/// traversal chunking.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let (a, b) = v.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3 {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Box3 {
    pub fn new(lo: [f64; 3], hi: [f64; 3]) -> Result<Self> {
        for ax in 0..3 {
            if !(lo[ax] < hi[ax]) || !lo[ax].is_finite() || !hi[ax].is_finite() {
                return Err(Error::InvalidGrid(format!(
                    "axis {ax}: need finite lower < upper, got [{}, {}]",
                    lo[ax], hi[ax]
                )));
            }
        }
        Ok(Box3 { lo, hi })
    }

    pub fn cube(lo: f64, hi: f64) -> Result<Self> {
        Box3::new([lo; 3], [hi; 3])
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|ax| p[ax] >= self.lo[ax] && p[ax] <= self.hi[ax])
    }
}

/// One cell-centered axis, described by its n+1 strictly increasing edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    edges: Vec<f64>,
    #[serde(skip)]
    centers: Vec<f64>,
}

impl Axis {
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("axis resolution {n} < 2")));
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidGrid(format!("bad axis bounds [{lo}, {hi}]")));
        }
        let h = (hi - lo) / n as f64;
        let edges = (0..=n).map(|i| lo + i as f64 * h).collect();
        Ok(Axis::finish(edges))
    }

    /// Nonuniform axis from explicit edges (strictly increasing).
    pub fn from_edges(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 3 {
            return Err(Error::InvalidGrid("need at least 3 edges".into()));
        }
        for w in edges.windows(2) {
            if !(w[0] < w[1]) || !w[0].is_finite() || !w[1].is_finite() {
                return Err(Error::InvalidGrid(
                    "axis edges must be finite and strictly increasing".into(),
                ));
            }
        }
        Ok(Axis::finish(edges))
    }

    fn finish(edges: Vec<f64>) -> Self {
        let centers = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Axis { edges, centers }
    }

    pub fn n(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn lo(&self) -> f64 {
        self.edges[0]
    }

    pub fn hi(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    pub fn center(&self, i: usize) -> f64 {
        self.centers[i]
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn width(&self, i: usize) -> f64 {
        self.edges[i + 1] - self.edges[i]
    }

    pub fn min_width(&self) -> f64 {
        (0..self.n()).map(|i| self.width(i)).fold(f64::INFINITY, f64::min)
    }

    /// Interpolation stencil for a point inside the box: segment index i
    /// (between centers i and i+1) and fractional weight. Linear
    /// extrapolation from the outermost centers keeps affine functions exact
    /// up to the box edges; `None` outside the box.
    fn stencil(&self, p: f64) -> Option<(usize, f64)> {
        if p < self.lo() || p > self.hi() {
            return None;
        }
        let c = &self.centers;
        let n = c.len();
        if n == 1 {
            return Some((0, 0.0));
        }
        let i = match c.binary_search_by(|x| x.partial_cmp(&p).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) if i >= n => n - 2,
            Err(i) => i - 1,
        };
        let frac = (p - c[i]) / (c[i + 1] - c[i]);
        Some((i, frac))
    }
}

/// Scalar sample type: real or complex.
pub trait GridScalar:
    Copy + Send + Sync + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self> + 'static
{
    const DTYPE: &'static str;
    const WIDTH: usize; // number of f64 lanes
    fn zero() -> Self;
    fn magnitude(self) -> f64;
    fn scale(self, c: f64) -> Self;
    fn is_finite(self) -> bool;
    fn write_lanes(self, out: &mut Vec<f64>);
    fn read_lanes(lanes: &[f64]) -> Self;
}

impl GridScalar for f64 {
    const DTYPE: &'static str = "f64";
    const WIDTH: usize = 1;
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn scale(self, c: f64) -> Self {
        self * c
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn write_lanes(self, out: &mut Vec<f64>) {
        out.push(self);
    }
    fn read_lanes(lanes: &[f64]) -> Self {
        lanes[0]
    }
}

impl GridScalar for Complex64 {
    const DTYPE: &'static str = "c64";
    const WIDTH: usize = 2;
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
    fn scale(self, c: f64) -> Self {
        self * c
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn write_lanes(self, out: &mut Vec<f64>) {
        out.push(self.re);
        out.push(self.im);
    }
    fn read_lanes(lanes: &[f64]) -> Self {
        Complex64::new(lanes[0], lanes[1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction3<T: GridScalar = f64> {
    axes: [Axis; 3],
    data: Vec<T>,
}

#[derive(Debug, Clone, Copy)]
pub struct ShearReport {
    /// |mass after| / |mass before| (Riemann sums of |f|); values well below
    /// 1 mean the sheared support escaped the box.
    pub mass_ratio: f64,
    pub escaped: bool,
}

pub const SHEAR_MASS_WARN: f64 = 0.999;

impl<T: GridScalar> GridFunction3<T> {
    pub fn from_axes_and_data(axes: [Axis; 3], data: Vec<T>) -> Result<Self> {
        let count = axes[0].n() * axes[1].n() * axes[2].n();
        if data.len() != count {
            return Err(Error::InvalidGrid(format!(
                "sample count {} != resolution product {}",
                data.len(),
                count
            )));
        }
        Ok(GridFunction3 { axes, data })
    }

    /// Sample a callable at cell centers.
    pub fn sample(
        field: impl Fn(f64, f64, f64) -> T + Sync,
        axes: [Axis; 3],
    ) -> Result<Self> {
        let (n1, n2, n3) = (axes[0].n(), axes[1].n(), axes[2].n());
        let data: Vec<T> = (0..n1 * n2 * n3)
            .into_par_iter()
            .map(|idx| {
                let i = idx / (n2 * n3);
                let j = (idx / n3) % n2;
                let k = idx % n3;
                field(axes[0].center(i), axes[1].center(j), axes[2].center(k))
            })
            .collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field sample"));
        }
        GridFunction3::from_axes_and_data(axes, data)
    }

    pub fn sample_uniform(
        field: impl Fn(f64, f64, f64) -> T + Sync,
        bx: &Box3,
        res: [usize; 3],
    ) -> Result<Self> {
        let axes = [
            Axis::uniform(bx.lo[0], bx.hi[0], res[0])?,
            Axis::uniform(bx.lo[1], bx.hi[1], res[1])?,
            Axis::uniform(bx.lo[2], bx.hi[2], res[2])?,
        ];
        GridFunction3::sample(field, axes)
    }

    pub fn axes(&self) -> &[Axis; 3] {
        &self.axes
    }

    pub fn bounding_box(&self) -> Box3 {
        Box3 {
            lo: [self.axes[0].lo(), self.axes[1].lo(), self.axes[2].lo()],
            hi: [self.axes[0].hi(), self.axes[1].hi(), self.axes[2].hi()],
        }
    }

    pub fn resolution(&self) -> [usize; 3] {
        [self.axes[0].n(), self.axes[1].n(), self.axes[2].n()]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.axes[1].n() + j) * self.axes[2].n() + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.data[self.index(i, j, k)]
    }

    /// Trilinear interpolation; zero outside the box.
    pub fn eval(&self, p: [f64; 3]) -> T {
        let s0 = self.axes[0].stencil(p[0]);
        let s1 = self.axes[1].stencil(p[1]);
        let s2 = self.axes[2].stencil(p[2]);
        let ((i, fi), (j, fj), (k, fk)) = match (s0, s1, s2) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => return T::zero(),
        };
        let mut acc = T::zero();
        for (di, wi) in [(0usize, 1.0 - fi), (1, fi)] {
            if wi == 0.0 {
                continue;
            }
            for (dj, wj) in [(0usize, 1.0 - fj), (1, fj)] {
                if wj == 0.0 {
                    continue;
                }
                for (dk, wk) in [(0usize, 1.0 - fk), (1, fk)] {
                    if wk == 0.0 {
                        continue;
                    }
                    let v = self.get(
                        (i + di).min(self.axes[0].n() - 1),
                        (j + dj).min(self.axes[1].n() - 1),
                        (k + dk).min(self.axes[2].n() - 1),
                    );
                    acc = acc + v.scale(wi * wj * wk);
                }
            }
        }
        acc
    }

    pub fn cell_volume(&self, i: usize, j: usize, k: usize) -> f64 {
        self.axes[0].width(i) * self.axes[1].width(j) * self.axes[2].width(k)
    }

    /// Riemann sum of |f| (total mass of the absolute value).
    pub fn abs_mass(&self) -> f64 {
        let terms: Vec<f64> = self
            .iter_cells()
            .map(|(i, j, k, v)| v.magnitude() * self.cell_volume(i, j, k))
            .collect();
        pairwise_sum(&terms)
    }

    pub fn iter_cells(&self) -> impl Iterator<Item = (usize, usize, usize, T)> + '_ {
        let (n2, n3) = (self.axes[1].n(), self.axes[2].n());
        self.data.iter().enumerate().map(move |(idx, &v)| {
            let i = idx / (n2 * n3);
            let j = (idx / n3) % n2;
            let k = idx % n3;
            (i, j, k, v)
        })
    }

    /// (cell volume x Sum |samples|^p)^{1/p}; max |samples| for p = infinity.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p.is_infinite() && p > 0.0 {
            return Ok(self
                .data
                .iter()
                .map(|v| v.magnitude())
                .fold(0.0, f64::max));
        }
        if !(p >= 1.0) {
            return Err(Error::InvalidParameter(format!("lp_norm: p = {p}")));
        }
        let terms: Vec<f64> = self
            .iter_cells()
            .map(|(i, j, k, v)| v.magnitude().powf(p) * self.cell_volume(i, j, k))
            .collect();
        Ok(pairwise_sum(&terms).powf(1.0 / p))
    }

    /// g(x, x3) = f(x, x3 + sign * (1/2) x^T S x), resampled on the same grid.
    pub fn shear(&self, sym: &Matrix2, sign: f64) -> Result<(Self, ShearReport)> {
        if !sym.is_symmetric() {
            return Err(Error::NotSymmetric((sym.a12 - sym.a21).abs()));
        }
        let axes = self.axes.clone();
        let out = GridFunction3::sample(
            |x1, x2, x3| {
                let q = half_quadratic_form(sym, [x1, x2]);
                self.eval([x1, x2, x3 + sign * q])
            },
            axes,
        )?;
        let before = self.abs_mass();
        let after = out.abs_mass();
        let ratio = if before > 0.0 { after / before } else { 1.0 };
        let report = ShearReport {
            mass_ratio: ratio,
            escaped: ratio < SHEAR_MASS_WARN,
        };
        Ok((out, report))
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.axes == other.axes
    }

    pub fn map(&self, f: impl Fn(T) -> T + Sync) -> Self {
        GridFunction3 {
            axes: self.axes.clone(),
            data: self.data.par_iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip(&self, other: &Self, f: impl Fn(T, T) -> T + Sync) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch("zip over different grids".into()));
        }
        Ok(GridFunction3 {
            axes: self.axes.clone(),
            data: self
                .data
                .par_iter()
                .zip(other.data.par_iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Binary snapshot: one JSON header line (box, resolution, dtype, edges),
    /// then the samples as little-endian f64 lanes.
    pub fn save(&self, path: &Path) -> Result<()> {
        let header = SnapshotHeader {
            dtype: T::DTYPE.to_string(),
            resolution: self.resolution(),
            boxx: self.bounding_box(),
            edges: [
                self.axes[0].edges.clone(),
                self.axes[1].edges.clone(),
                self.axes[2].edges.clone(),
            ],
        };
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        let mut lanes = Vec::with_capacity(self.data.len() * T::WIDTH);
        for &v in &self.data {
            v.write_lanes(&mut lanes);
        }
        for x in lanes {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut header_bytes = Vec::new();
        let mut byte = [0u8; 1];
        loop {
            r.read_exact(&mut byte)?;
            if byte[0] == b'\n' {
                break;
            }
            header_bytes.push(byte[0]);
        }
        let header: SnapshotHeader = serde_json::from_slice(&header_bytes)?;
        if header.dtype != T::DTYPE {
            return Err(Error::InvalidGrid(format!(
                "dtype mismatch: file {}, requested {}",
                header.dtype,
                T::DTYPE
            )));
        }
        let axes = [
            Axis::from_edges(header.edges[0].clone())?,
            Axis::from_edges(header.edges[1].clone())?,
            Axis::from_edges(header.edges[2].clone())?,
        ];
        let count = axes[0].n() * axes[1].n() * axes[2].n();
        let mut raw = vec![0u8; count * T::WIDTH * 8];
        r.read_exact(&mut raw)?;
        let lanes: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let data = lanes.chunks_exact(T::WIDTH).map(T::read_lanes).collect();
        GridFunction3::from_axes_and_data(axes, data)
    }
}

#[derive(Serialize, Deserialize)]
struct SnapshotHeader {
    dtype: String,
    resolution: [usize; 3],
    #[serde(rename = "box")]
    boxx: Box3,
    edges: [Vec<f64>; 3],
}

/// Pointwise maximum of absolute values over a family on one common grid.
pub fn pointwise_sup<T: GridScalar>(family: &[&GridFunction3<T>]) -> Result<GridFunction3<f64>> {
    let first = family.first().ok_or(Error::EmptyRange)?;
    for g in &family[1..] {
        if !first.same_grid(g) {
            return Err(Error::GridMismatch("pointwise_sup over different grids".into()));
        }
    }
    let n = first.data().len();
    let data: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|idx| {
            family
                .iter()
                .map(|g| g.data()[idx].magnitude())
                .fold(0.0, f64::max)
        })
        .collect();
    GridFunction3::from_axes_and_data(first.axes.clone(), data)
}
