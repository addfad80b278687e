//! Cumulative shell sums for O(1) rectangular partial-sum queries.
//!
//! For a fixed point `x`, let `G_I(x)` collect the modes with `|ν_j| = i_j`
//! on every axis. The prefix sums `P_n = Σ_{I <= n} G_I` are exactly the
//! rectangular partial sums `S_n(x)`. They are built by contracting one axis
//! at a time: along axis `a` the `2B_a + 1` signed frequencies collapse into
//! a running sum over `|ν_a| = 0, 1, ...`, and only the requested levels are
//! kept. A full sweep over the grid reuses the contractions of the outer axes
//! across all points that share them.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spectral::{strides_of, Spectrum, TorusGrid};

const ABSENT: u32 = u32::MAX;

/// Which prefix levels `n_j` are stored on each axis.
///
/// Requested components above the bandwidth are clamped to it, since `S_n`
/// no longer changes past `B_j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShellLayout {
    bandwidth: Vec<usize>,
    levels: Vec<Vec<usize>>,
    slots: Vec<Vec<u32>>,
    strides: Vec<usize>,
}

impl ShellLayout {
    /// Every level `0..=B_j` on every axis.
    pub fn full(bandwidth: &[usize]) -> Self {
        let levels = bandwidth.iter().map(|&b| (0..=b).collect()).collect();
        Self::build(bandwidth.to_vec(), levels)
    }

    pub fn with_levels(bandwidth: &[usize], levels: Vec<Vec<usize>>) -> Result<Self> {
        if levels.len() != bandwidth.len() {
            return Err(Error::DimensionMismatch {
                expected: bandwidth.len(),
                found: levels.len(),
            });
        }
        let mut cleaned = Vec::with_capacity(levels.len());
        for (axis, (mut lv, &b)) in levels.into_iter().zip(bandwidth).enumerate() {
            if lv.is_empty() {
                return Err(Error::InvalidArgument(format!("no levels requested on axis {axis}")));
            }
            for v in lv.iter_mut() {
                *v = (*v).min(b);
            }
            lv.sort_unstable();
            lv.dedup();
            cleaned.push(lv);
        }
        Ok(Self::build(bandwidth.to_vec(), cleaned))
    }

    /// The smallest layout answering every index in `indices`.
    pub fn covering<I, M>(bandwidth: &[usize], indices: I) -> Result<Self>
    where
        I: IntoIterator<Item = M>,
        M: AsRef<[usize]>,
    {
        let mut levels = vec![Vec::new(); bandwidth.len()];
        for n in indices {
            let n = n.as_ref();
            if n.len() != bandwidth.len() {
                return Err(Error::DimensionMismatch {
                    expected: bandwidth.len(),
                    found: n.len(),
                });
            }
            for ((lv, &v), &b) in levels.iter_mut().zip(n).zip(bandwidth) {
                lv.push(v.min(b));
            }
        }
        Self::with_levels(bandwidth, levels)
    }

    fn build(bandwidth: Vec<usize>, levels: Vec<Vec<usize>>) -> Self {
        let slots = levels
            .iter()
            .zip(&bandwidth)
            .map(|(lv, &b)| {
                let mut table = vec![ABSENT; b + 1];
                for (k, &v) in lv.iter().enumerate() {
                    table[v] = k as u32;
                }
                table
            })
            .collect();
        let shape: Vec<usize> = levels.iter().map(Vec::len).collect();
        let strides = strides_of(&shape);
        Self {
            bandwidth,
            levels,
            slots,
            strides,
        }
    }

    pub fn dimension(&self) -> usize {
        self.bandwidth.len()
    }

    pub fn bandwidth(&self) -> &[usize] {
        &self.bandwidth
    }

    pub fn levels(&self, axis: usize) -> &[usize] {
        &self.levels[axis]
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_full(&self) -> bool {
        self.levels
            .iter()
            .zip(&self.bandwidth)
            .all(|(lv, &b)| lv.len() == b + 1)
    }

    /// Position of `S_n` in a tensor with this layout, after clamping.
    pub fn offset(&self, n: &[usize]) -> Option<usize> {
        if n.len() != self.dimension() {
            return None;
        }
        let mut off = 0;
        for (a, &v) in n.iter().enumerate() {
            let slot = self.slots[a][v.min(self.bandwidth[a])];
            if slot == ABSENT {
                return None;
            }
            off += slot as usize * self.strides[a];
        }
        Some(off)
    }
}

/// Partial sums `S_n(x)` for every stored level combination at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct ShellTensor {
    layout: ShellLayout,
    values: Vec<Complex64>,
}

impl ShellTensor {
    pub fn layout(&self) -> &ShellLayout {
        &self.layout
    }

    /// Raw prefix values in layout order.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn at_offset(&self, offset: usize) -> Complex64 {
        self.values[offset]
    }

    pub fn get(&self, n: &[usize]) -> Option<Complex64> {
        self.layout.offset(n).map(|o| self.values[o])
    }

    /// `S_n(x)`. Panics if the layout does not store `n`.
    pub fn partial_sum(&self, n: &[usize]) -> Complex64 {
        match self.get(n) {
            Some(v) => v,
            None => panic!("index {n:?} is not stored in this shell layout"),
        }
    }

    /// The shell `G_I(x)` by inclusion–exclusion over the `2^N` corners of
    /// the prefix box. `None` if a needed level is not stored.
    pub fn shell(&self, index: &[usize]) -> Option<Complex64> {
        let dim = self.layout.dimension();
        if index.len() != dim {
            return None;
        }
        if index.iter().zip(self.layout.bandwidth()).any(|(&i, &b)| i > b) {
            return Some(Complex64::new(0.0, 0.0));
        }
        let mut total = Complex64::new(0.0, 0.0);
        let mut corner = index.to_vec();
        'corners: for mask in 0u32..(1 << dim) {
            let mut negative = false;
            for a in 0..dim {
                if mask & (1 << a) != 0 {
                    if index[a] == 0 {
                        continue 'corners;
                    }
                    corner[a] = index[a] - 1;
                    negative = !negative;
                } else {
                    corner[a] = index[a];
                }
            }
            let p = self.get(&corner)?;
            if negative {
                total -= p;
            } else {
                total += p;
            }
        }
        Some(total)
    }
}

struct AxisPlan {
    bandwidth: usize,
    levels: Vec<usize>,
    top: usize,
    outer: usize,
    inner: usize,
    resolution: usize,
    /// `phases[l * (top + 1) + i] = e^{i · i · x_a(l)}`
    phases: Vec<Complex64>,
}

struct Plan<'a> {
    coeffs: &'a [Complex64],
    axes: Vec<AxisPlan>,
    stage_len: Vec<usize>,
}

impl<'a> Plan<'a> {
    fn new(s: &'a Spectrum, layout: &ShellLayout, points: &[Vec<f64>]) -> Result<Self> {
        let dim = s.dimension();
        if layout.bandwidth() != s.bandwidth() {
            return Err(Error::InvalidArgument(format!(
                "shell layout bandwidth {:?} differs from spectrum bandwidth {:?}",
                layout.bandwidth(),
                s.bandwidth()
            )));
        }
        if points.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: points.len(),
            });
        }
        let widths: Vec<usize> = s.bandwidth().iter().map(|b| 2 * b + 1).collect();
        let mut axes = Vec::with_capacity(dim);
        let mut stage_len = Vec::with_capacity(dim);
        for a in 0..dim {
            let levels = layout.levels(a).to_vec();
            let top = *levels.last().expect("layout levels are nonempty");
            let outer: usize = (0..a).map(|b| layout.levels(b).len()).product();
            let inner: usize = widths[a + 1..].iter().product();
            let mut phases = Vec::with_capacity(points[a].len() * (top + 1));
            for &x in &points[a] {
                phases.extend((0..=top).map(|i| Complex64::cis(i as f64 * x)));
            }
            stage_len.push(outer * levels.len() * inner);
            axes.push(AxisPlan {
                bandwidth: s.bandwidth()[a],
                levels,
                top,
                outer,
                inner,
                resolution: points[a].len(),
                phases,
            });
        }
        Ok(Self {
            coeffs: s.coeffs(),
            axes,
            stage_len,
        })
    }

    fn scratch(&self) -> Vec<Vec<Complex64>> {
        let n = self.axes.len();
        self.stage_len[..n - 1]
            .iter()
            .map(|&len| vec![Complex64::new(0.0, 0.0); len])
            .collect()
    }

    /// Contracts axis `axis` at grid position `l` into the next stage.
    fn step(
        &self,
        axis: usize,
        l: usize,
        stages: &mut [Vec<Complex64>],
        out: &mut [Complex64],
        acc: &mut Vec<Complex64>,
    ) {
        let last = axis + 1 == self.axes.len();
        let ax = &self.axes[axis];
        let phase = &ax.phases[l * (ax.top + 1)..(l + 1) * (ax.top + 1)];
        if axis == 0 {
            let dst = if last { out } else { &mut stages[0][..] };
            contract(self.coeffs, dst, ax, phase, acc);
        } else {
            let (left, right) = stages.split_at_mut(axis);
            let src = &left[axis - 1];
            let dst = if last { out } else { &mut right[0][..] };
            contract(src, dst, ax, phase, acc);
        }
    }

    fn descend<T, F>(
        &self,
        axis: usize,
        stages: &mut [Vec<Complex64>],
        tensor: &mut ShellTensor,
        acc: &mut Vec<Complex64>,
        f: &F,
        out: &mut Vec<T>,
    ) where
        F: Fn(&ShellTensor) -> T,
    {
        for l in 0..self.axes[axis].resolution {
            self.step(axis, l, stages, &mut tensor.values, acc);
            if axis + 1 == self.axes.len() {
                out.push(f(tensor));
            } else {
                self.descend(axis + 1, stages, tensor, acc, f, out);
            }
        }
    }
}

fn contract(src: &[Complex64], dst: &mut [Complex64], ax: &AxisPlan, phase: &[Complex64], acc: &mut Vec<Complex64>) {
    let inner = ax.inner;
    let width = 2 * ax.bandwidth + 1;
    let nl = ax.levels.len();
    let b = ax.bandwidth;
    if inner == 1 {
        // Pair terms first (independent, vectorizable), then a prefix sum.
        let top = ax.top;
        // Every level 0..=top stored: a plain running sum.
        let dense = nl == top + 1;
        acc.clear();
        acc.resize(top + 1, Complex64::new(0.0, 0.0));
        for o in 0..ax.outer {
            let row = &src[o * width..(o + 1) * width];
            let pos = &row[b + 1..=b + top];
            let neg = &row[b - top..b];
            for ((t, (p, n)), ph) in acc[1..]
                .iter_mut()
                .zip(pos.iter().zip(neg.iter().rev()))
                .zip(&phase[1..])
            {
                *t = p * ph + n * ph.conj();
            }
            let out = &mut dst[o * nl..(o + 1) * nl];
            let mut a = Complex64::new(0.0, 0.0) + row[b];
            if dense {
                out[0] = a;
                for (d, t) in out[1..].iter_mut().zip(&acc[1..]) {
                    a += t;
                    *d = a;
                }
                continue;
            }
            let mut i = 0;
            for (d, &level) in out.iter_mut().zip(&ax.levels) {
                while i < level {
                    i += 1;
                    a += acc[i];
                }
                *d = a;
            }
        }
        return;
    }
    for o in 0..ax.outer {
        acc.clear();
        acc.resize(inner, Complex64::new(0.0, 0.0));
        let base = o * width * inner;
        let mut k = 0;
        for i in 0..=ax.top {
            let pos = &src[base + (b + i) * inner..base + (b + i + 1) * inner];
            if i == 0 {
                for (a, s) in acc.iter_mut().zip(pos) {
                    *a += s;
                }
            } else {
                let neg = &src[base + (b - i) * inner..base + (b - i + 1) * inner];
                let ph = phase[i];
                let phc = ph.conj();
                for ((a, p), n) in acc.iter_mut().zip(pos).zip(neg) {
                    *a += p * ph + n * phc;
                }
            }
            if i == ax.levels[k] {
                dst[(o * nl + k) * inner..(o * nl + k + 1) * inner].copy_from_slice(acc);
                k += 1;
            }
        }
    }
}

/// Shell tensor of `s` at the single point `x`.
pub fn build_shell_tensor(s: &Spectrum, x: &[f64], layout: &ShellLayout) -> Result<ShellTensor> {
    let points: Vec<Vec<f64>> = x.iter().map(|&v| vec![v]).collect();
    let plan = Plan::new(s, layout, &points)?;
    let mut stages = plan.scratch();
    let mut tensor = ShellTensor {
        layout: layout.clone(),
        values: vec![Complex64::new(0.0, 0.0); layout.len()],
    };
    let mut acc = Vec::new();
    for axis in 0..plan.axes.len() {
        plan.step(axis, 0, &mut stages, &mut tensor.values, &mut acc);
    }
    Ok(tensor)
}

/// Evaluates `f` on the shell tensor of every grid point and returns the
/// results in row-major grid order.
///
/// Work is split over the first axis; each point's values are computed in a
/// fixed order, so the output does not depend on the number of threads.
pub fn sweep<T, F>(s: &Spectrum, grid: &TorusGrid, layout: &ShellLayout, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&ShellTensor) -> T + Sync,
{
    if grid.dimension() != s.dimension() {
        return Err(Error::DimensionMismatch {
            expected: s.dimension(),
            found: grid.dimension(),
        });
    }
    let points: Vec<Vec<f64>> = (0..grid.dimension())
        .map(|a| (0..grid.resolution()[a]).map(|l| grid.coordinate(a, l)).collect())
        .collect();
    let plan = Plan::new(s, layout, &points)?;
    let per_slab = grid.len() / grid.resolution()[0];
    let slabs: Vec<Vec<T>> = (0..grid.resolution()[0])
        .into_par_iter()
        .map(|l0| {
            let mut stages = plan.scratch();
            let mut tensor = ShellTensor {
                layout: layout.clone(),
                values: vec![Complex64::new(0.0, 0.0); layout.len()],
            };
            let mut acc = Vec::new();
            let mut out = Vec::with_capacity(per_slab);
            plan.step(0, l0, &mut stages, &mut tensor.values, &mut acc);
            if plan.axes.len() == 1 {
                out.push(f(&tensor));
            } else {
                plan.descend(1, &mut stages, &mut tensor, &mut acc, &f, &mut out);
            }
            out
        })
        .collect();
    Ok(slabs.into_iter().flatten().collect())
}
