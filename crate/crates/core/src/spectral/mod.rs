//! Grid functions on the torus `[-π, π)^N`, truncated Fourier spectra,
//! analysis/synthesis and rectangular partial sums.
//!
//! Coefficients are normalized as plain averages over the grid, so
//! [`analyze`] and [`synthesize`] are exact inverses on band-limited data
//! and the discrete Parseval identity carries no `(2π)^N` factor.

mod blocks;
mod fft;
mod kernels;
mod shell;

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::MultiIndex;

pub use blocks::{split_lacunary_blocks, BlockSplit};
pub use kernels::{cesaro_mean, dirichlet_kernel, fejer_kernel, fejer_mean};
pub use shell::{build_shell_tensor, sweep, ShellLayout, ShellTensor};

/// Row-major strides (axis 0 slowest).
pub(crate) fn strides_of(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for a in (0..shape.len().saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * shape[a + 1];
    }
    strides
}

/// Visits every multi-index of `shape` in row-major order.
pub(crate) fn for_each_index(shape: &[usize], mut f: impl FnMut(usize, &[usize])) {
    if shape.contains(&0) {
        return;
    }
    let mut idx = vec![0usize; shape.len()];
    let total: usize = shape.iter().product();
    for flat in 0..total {
        f(flat, &idx);
        for a in (0..shape.len()).rev() {
            idx[a] += 1;
            if idx[a] < shape[a] {
                break;
            }
            idx[a] = 0;
        }
    }
}

/// Uniform grid on `T^N` with `L_j` points per axis at `x = -π + 2π l / L_j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    resolution: Vec<usize>,
}

impl TorusGrid {
    pub fn new(resolution: Vec<usize>) -> Result<Self> {
        if resolution.is_empty() {
            return Err(Error::InvalidGrid("grid needs at least one axis".into()));
        }
        if let Some(&bad) = resolution.iter().find(|&&l| l < 2 || l % 2 != 0) {
            return Err(Error::InvalidGrid(format!(
                "resolution {bad} is not an even integer >= 2"
            )));
        }
        Ok(Self { resolution })
    }

    pub fn cube(dimension: usize, points_per_axis: usize) -> Result<Self> {
        Self::new(vec![points_per_axis; dimension])
    }

    pub fn dimension(&self) -> usize {
        self.resolution.len()
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coordinate(&self, axis: usize, l: usize) -> f64 {
        -PI + 2.0 * PI * l as f64 / self.resolution[axis] as f64
    }

    /// Coordinates of the point with row-major position `flat`.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let strides = strides_of(&self.resolution);
        strides
            .iter()
            .enumerate()
            .map(|(a, &s)| self.coordinate(a, (flat / s) % self.resolution[a]))
            .collect()
    }

    /// Lebesgue measure represented by one grid point.
    pub fn cell_measure(&self) -> f64 {
        (2.0 * PI).powi(self.dimension() as i32) / self.len() as f64
    }

    fn check_nyquist(&self, bandwidth: &[usize]) -> Result<()> {
        if bandwidth.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                found: bandwidth.len(),
            });
        }
        for (axis, (&b, &l)) in bandwidth.iter().zip(&self.resolution).enumerate() {
            if 2 * b >= l {
                return Err(Error::Aliasing {
                    axis,
                    bandwidth: b,
                    resolution: l,
                });
            }
        }
        Ok(())
    }
}

/// Fourier coefficients `c_ν` on the symmetric box `|ν_j| <= B_j`, stored
/// row-major with `ν_j` running from `-B_j` to `B_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    bandwidth: Vec<usize>,
    coeffs: Vec<Complex64>,
}

/// A partial-sum index after clamping to the spectrum's bandwidth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clamped {
    pub index: MultiIndex,
    /// Axes whose requested component exceeded the bandwidth.
    pub clamped_axes: Vec<usize>,
}

impl Spectrum {
    pub fn new(bandwidth: Vec<usize>, coeffs: Vec<Complex64>) -> Result<Self> {
        if bandwidth.is_empty() {
            return Err(Error::InvalidSpectrum("dimension must be at least 1".into()));
        }
        let expected: usize = bandwidth.iter().map(|b| 2 * b + 1).product();
        if coeffs.len() != expected {
            return Err(Error::InvalidSpectrum(format!(
                "{} coefficients for a box of {expected}",
                coeffs.len()
            )));
        }
        if let Some(pos) = coeffs.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { bandwidth, coeffs })
    }

    pub fn zeros(bandwidth: Vec<usize>) -> Result<Self> {
        let len = bandwidth.iter().map(|b| 2 * b + 1).product();
        Self::new(bandwidth, vec![Complex64::new(0.0, 0.0); len])
    }

    /// One coefficient `value` at `mode`, all others zero.
    pub fn single_mode(bandwidth: Vec<usize>, mode: &[i64], value: Complex64) -> Result<Self> {
        let mut s = Self::zeros(bandwidth)?;
        s.set(mode, value)?;
        Ok(s)
    }

    pub fn dimension(&self) -> usize {
        self.bandwidth.len()
    }

    pub fn bandwidth(&self) -> &[usize] {
        &self.bandwidth
    }

    pub fn shape(&self) -> Vec<usize> {
        self.bandwidth.iter().map(|b| 2 * b + 1).collect()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Flat position of mode `ν`, or `None` outside the box.
    pub fn position(&self, mode: &[i64]) -> Option<usize> {
        if mode.len() != self.dimension() {
            return None;
        }
        let mut pos = 0usize;
        for (&v, &b) in mode.iter().zip(&self.bandwidth) {
            if v.unsigned_abs() as usize > b {
                return None;
            }
            pos = pos * (2 * b + 1) + (v + b as i64) as usize;
        }
        Some(pos)
    }

    /// Mode `ν` stored at flat position `pos`.
    pub fn mode_at(&self, pos: usize) -> Vec<i64> {
        let mut rest = pos;
        let mut mode = vec![0i64; self.dimension()];
        for (a, &b) in self.bandwidth.iter().enumerate().rev() {
            let w = 2 * b + 1;
            mode[a] = (rest % w) as i64 - b as i64;
            rest /= w;
        }
        mode
    }

    /// Coefficient at `ν`; zero outside the stored box.
    pub fn get(&self, mode: &[i64]) -> Complex64 {
        self.position(mode).map_or(Complex64::new(0.0, 0.0), |p| self.coeffs[p])
    }

    pub fn set(&mut self, mode: &[i64], value: Complex64) -> Result<()> {
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(Error::NonFinite(0));
        }
        let pos = self
            .position(mode)
            .ok_or_else(|| Error::InvalidSpectrum(format!("mode {mode:?} outside bandwidth {:?}", self.bandwidth)))?;
        self.coeffs[pos] = value;
        Ok(())
    }

    /// Visits `(ν, c_ν)` in storage order.
    pub fn for_each_mode(&self, mut f: impl FnMut(&[i64], Complex64)) {
        let shape = self.shape();
        let mut mode = vec![0i64; self.dimension()];
        for_each_index(&shape, |flat, idx| {
            for (m, (&i, &b)) in mode.iter_mut().zip(idx.iter().zip(&self.bandwidth)) {
                *m = i as i64 - b as i64;
            }
            f(&mode, self.coeffs[flat]);
        });
    }

    /// New spectrum with `c_ν` replaced by `f(ν, c_ν)`.
    pub fn map_modes(&self, mut f: impl FnMut(&[i64], Complex64) -> Complex64) -> Result<Self> {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        self.for_each_mode(|mode, c| coeffs.push(f(mode, c)));
        Self::new(self.bandwidth.clone(), coeffs)
    }

    /// `Σ |c_ν|²`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Discrete `L_2` norm of the synthesized function, via Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.energy().sqrt()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            bandwidth: self.bandwidth.clone(),
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// Coefficients outside the box `|ν_j| <= n_j` set to zero.
    pub fn truncated(&self, n: &[usize]) -> Result<Self> {
        self.check_index_dim(n)?;
        self.map_modes(|mode, c| {
            if mode.iter().zip(n).all(|(&v, &cap)| v.unsigned_abs() as usize <= cap) {
                c
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn clamp_index(&self, n: &[usize]) -> Result<Clamped> {
        self.check_index_dim(n)?;
        let mut clamped_axes = Vec::new();
        let comps = n
            .iter()
            .zip(&self.bandwidth)
            .enumerate()
            .map(|(a, (&v, &b))| {
                if v > b {
                    clamped_axes.push(a);
                    b
                } else {
                    v
                }
            })
            .collect();
        Ok(Clamped {
            index: MultiIndex::new(comps)?,
            clamped_axes,
        })
    }

    fn check_index_dim(&self, n: &[usize]) -> Result<()> {
        if n.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                found: n.len(),
            });
        }
        Ok(())
    }

    /// `Σ_{ν outside box(n)} |c_ν|`, the sup-norm bound on `f - S_n`.
    pub fn tail_l1(&self, n: &[usize]) -> f64 {
        let mut total = 0.0;
        self.for_each_mode(|mode, c| {
            if mode.iter().zip(n).any(|(&v, &cap)| v.unsigned_abs() as usize > cap) {
                total += c.norm();
            }
        });
        total
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&SpectrumDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SpectrumDoc = serde_json::from_str(text)?;
        doc.try_into()
    }
}

/// JSON layout of a spectrum: `{N, B, coefficients: [[re, im], ...]}` with
/// coefficients in row-major `ν` order from `-B` to `+B`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumDoc {
    #[serde(rename = "N")]
    pub dimension: usize,
    #[serde(rename = "B")]
    pub bandwidth: Vec<usize>,
    pub coefficients: Vec<[f64; 2]>,
}

impl From<&Spectrum> for SpectrumDoc {
    fn from(s: &Spectrum) -> Self {
        Self {
            dimension: s.dimension(),
            bandwidth: s.bandwidth.clone(),
            coefficients: s.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

impl TryFrom<SpectrumDoc> for Spectrum {
    type Error = Error;

    fn try_from(doc: SpectrumDoc) -> Result<Self> {
        if doc.dimension != doc.bandwidth.len() {
            return Err(Error::DimensionMismatch {
                expected: doc.dimension,
                found: doc.bandwidth.len(),
            });
        }
        let coeffs = doc
            .coefficients
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        Spectrum::new(doc.bandwidth, coeffs)
    }
}

/// Complex samples on every point of a [`TorusGrid`], row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: TorusGrid,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: TorusGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(pos) = values.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { grid, values })
    }

    pub fn from_real(grid: TorusGrid, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// `(mean |f|²)^{1/2}`, the grid analogue of the Parseval norm.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        if self.grid != other.grid {
            return Err(Error::InvalidGrid("grids differ".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(GridFunction {
            grid: self.grid.clone(),
            values,
        })
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.add(&GridFunction {
            grid: other.grid.clone(),
            values: other.values.iter().map(|v| -v).collect(),
        })
    }

    /// Restriction to the axes marked `None` in `fixed`, holding the other
    /// axes at the given grid positions.
    pub fn slice(&self, fixed: &[Option<usize>]) -> Result<GridFunction> {
        let res = self.grid.resolution();
        if fixed.len() != res.len() {
            return Err(Error::DimensionMismatch {
                expected: res.len(),
                found: fixed.len(),
            });
        }
        for (a, f) in fixed.iter().enumerate() {
            if matches!(f, Some(l) if *l >= res[a]) {
                return Err(Error::InvalidGrid(format!("slice position out of range on axis {a}")));
            }
        }
        let kept: Vec<usize> = (0..res.len()).filter(|&a| fixed[a].is_none()).collect();
        if kept.is_empty() {
            return Err(Error::InvalidGrid("a slice must keep at least one axis".into()));
        }
        let sub_grid = TorusGrid::new(kept.iter().map(|&a| res[a]).collect())?;
        let strides = strides_of(res);
        let mut values = Vec::with_capacity(sub_grid.len());
        for_each_index(sub_grid.resolution(), |_, idx| {
            let mut flat = 0;
            for (a, f) in fixed.iter().enumerate() {
                let l = match f {
                    Some(l) => *l,
                    None => idx[kept.iter().position(|&k| k == a).expect("kept axis")],
                };
                flat += l * strides[a];
            }
            values.push(self.values[flat]);
        });
        Ok(GridFunction { grid: sub_grid, values })
    }

    /// CSV rows `x1[,x2],re,im` for one- and two-dimensional functions.
    pub fn to_csv(&self) -> Result<String> {
        let n = self.grid.dimension();
        if n > 2 {
            return Err(Error::InvalidArgument(
                "CSV export covers 1D and 2D slices; use slice() first".into(),
            ));
        }
        let mut out = String::new();
        let header: Vec<String> = (1..=n).map(|a| format!("x{a}")).collect();
        let _ = writeln!(out, "{},re,im", header.join(","));
        for (flat, v) in self.values.iter().enumerate() {
            let coords: Vec<String> = self.grid.point(flat).iter().map(|x| x.to_string()).collect();
            let _ = writeln!(out, "{},{},{}", coords.join(","), v.re, v.im);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&GridFunctionDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GridFunctionDoc = serde_json::from_str(text)?;
        doc.try_into()
    }
}

/// JSON layout of a grid function: `{N, L, values: [[re, im], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunctionDoc {
    #[serde(rename = "N")]
    pub dimension: usize,
    #[serde(rename = "L")]
    pub resolution: Vec<usize>,
    pub values: Vec<[f64; 2]>,
}

impl From<&GridFunction> for GridFunctionDoc {
    fn from(f: &GridFunction) -> Self {
        Self {
            dimension: f.grid.dimension(),
            resolution: f.grid.resolution().to_vec(),
            values: f.values.iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

impl TryFrom<GridFunctionDoc> for GridFunction {
    type Error = Error;

    fn try_from(doc: GridFunctionDoc) -> Result<Self> {
        if doc.dimension != doc.resolution.len() {
            return Err(Error::DimensionMismatch {
                expected: doc.dimension,
                found: doc.resolution.len(),
            });
        }
        let grid = TorusGrid::new(doc.resolution)?;
        let values = doc.values.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        GridFunction::new(grid, values)
    }
}

fn parity_sign(mode: &[i64]) -> f64 {
    if mode.iter().sum::<i64>().rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Fourier coefficients `c_ν = (1/∏L_j) Σ_l f(x_l) e^{-i(ν·x_l)}` on the box
/// `|ν_j| <= B_j`.
pub fn analyze(f: &GridFunction, bandwidth: &[usize]) -> Result<Spectrum> {
    let grid = f.grid();
    grid.check_nyquist(bandwidth)?;
    let mut data = f.values().to_vec();
    fft::transform(&mut data, grid.resolution(), fft::Direction::Forward);
    let strides = strides_of(grid.resolution());
    let norm = 1.0 / grid.len() as f64;
    let mut s = Spectrum::zeros(bandwidth.to_vec())?;
    let res = grid.resolution();
    let coeffs: Vec<Complex64> = {
        let mut out = Vec::with_capacity(s.len());
        s.for_each_mode(|mode, _| {
            let pos: usize = mode
                .iter()
                .zip(res)
                .zip(&strides)
                .map(|((&v, &l), &st)| v.rem_euclid(l as i64) as usize * st)
                .sum();
            out.push(data[pos] * (parity_sign(mode) * norm));
        });
        out
    };
    s.coeffs = coeffs;
    Ok(s)
}

/// `f(x_l) = Σ_ν c_ν e^{i(ν·x_l)}` on the grid via a zero-padded inverse DFT.
pub fn synthesize(s: &Spectrum, grid: &TorusGrid) -> Result<GridFunction> {
    grid.check_nyquist(s.bandwidth())?;
    let res = grid.resolution();
    let strides = strides_of(res);
    let mut data = vec![Complex64::new(0.0, 0.0); grid.len()];
    s.for_each_mode(|mode, c| {
        let pos: usize = mode
            .iter()
            .zip(res)
            .zip(&strides)
            .map(|((&v, &l), &st)| v.rem_euclid(l as i64) as usize * st)
            .sum();
        data[pos] = c * parity_sign(mode);
    });
    fft::transform(&mut data, res, fft::Direction::Inverse);
    GridFunction::new(grid.clone(), data)
}

/// Mode-by-mode evaluation of the series at every grid point. Works for any
/// resolution; used as the fallback and as a cross-check for [`synthesize`].
pub fn synthesize_direct(s: &Spectrum, grid: &TorusGrid) -> Result<GridFunction> {
    if grid.dimension() != s.dimension() {
        return Err(Error::DimensionMismatch {
            expected: s.dimension(),
            found: grid.dimension(),
        });
    }
    // phase[a][l][ν_a + B_a] = e^{i ν_a x_a(l)}
    let phases: Vec<Vec<Vec<Complex64>>> = (0..grid.dimension())
        .map(|a| {
            let b = s.bandwidth()[a] as i64;
            (0..grid.resolution()[a])
                .map(|l| {
                    let x = grid.coordinate(a, l);
                    (-b..=b).map(|v| Complex64::cis(v as f64 * x)).collect()
                })
                .collect()
        })
        .collect();
    let shape = s.shape();
    let mut values = Vec::with_capacity(grid.len());
    for_each_index(grid.resolution(), |_, point| {
        let mut total = Complex64::new(0.0, 0.0);
        for_each_index(&shape, |flat, mode_pos| {
            let c = s.coeffs[flat];
            if c.re == 0.0 && c.im == 0.0 {
                return;
            }
            let mut term = c;
            for (a, &p) in mode_pos.iter().enumerate() {
                term *= phases[a][point[a]][p];
            }
            total += term;
        });
        values.push(total);
    });
    GridFunction::new(grid.clone(), values)
}

/// Rectangular partial sum `S_n(x; f) = Σ_{|ν_j| <= n_j} c_ν e^{i(ν·x)}` on
/// the grid. Components beyond the bandwidth act as the bandwidth; see
/// [`Spectrum::clamp_index`] to report that.
pub fn partial_sum(s: &Spectrum, n: &[usize], grid: &TorusGrid) -> Result<GridFunction> {
    let clamped = s.clamp_index(n)?;
    synthesize(&s.truncated(&clamped.index)?, grid)
}

/// `S_n(x; f)` at an arbitrary point by direct summation over the box.
pub fn partial_sum_at(s: &Spectrum, n: &[usize], x: &[f64]) -> Result<Complex64> {
    s.check_index_dim(n)?;
    if x.len() != s.dimension() {
        return Err(Error::DimensionMismatch {
            expected: s.dimension(),
            found: x.len(),
        });
    }
    let mut total = Complex64::new(0.0, 0.0);
    s.for_each_mode(|mode, c| {
        if mode.iter().zip(n).all(|(&v, &cap)| v.unsigned_abs() as usize <= cap) {
            let phase: f64 = mode.iter().zip(x).map(|(&v, &xi)| v as f64 * xi).sum();
            total += c * Complex64::cis(phase);
        }
    });
    Ok(total)
}
