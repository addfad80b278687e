//! Difference operators, slowly growing sequences, convex weights, the
//! iterated-sum family `A^{(R)}` and the multiple Abel summation identity.
//!
//! Regimes are numbered 0, 1, 2 here; they correspond to the single sum, the
//! double sum and the `Δ²b`-weighted average.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{JkIndexSpace, MultiIndex};
use crate::spectral::{partial_sum, GridFunction, Spectrum, TorusGrid};

/// `Δ^order b_j` with `Δ¹b_j = b_j − b_{j+1}` and `Δ²b_j = Δ¹b_j − Δ¹b_{j+1}`.
pub fn difference(b: &[f64], order: usize, j: usize) -> Result<f64> {
    if order > 2 {
        return Err(Error::InvalidArgument(format!("difference order {order} exceeds 2")));
    }
    if j + order >= b.len() {
        return Err(Error::RangeOverflow {
            index: j,
            order,
            len: b.len(),
        });
    }
    Ok(match order {
        0 => b[j],
        1 => b[j] - b[j + 1],
        _ => b[j] - 2.0 * b[j + 1] + b[j + 2],
    })
}

/// An even sequence `b_j = b_{−j}` stored for `j = 0..=J`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexWeight {
    values: Vec<f64>,
    /// Set when the raw values were replaced by their convex minorant.
    repaired: bool,
    /// Most negative second difference of the raw values (0 if none).
    raw_min_second_difference: f64,
}

/// Checks of the convex-weight conditions on the stored range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub nonincreasing: bool,
    pub convex: bool,
    pub min_second_difference: f64,
    /// `j Δ¹b_j` is nonincreasing from `j = 1` on.
    pub j_first_difference_decreasing: bool,
    /// `Σ_{j=1}^{J-2} j Δ²b_j`.
    pub weighted_second_difference_sum: f64,
}

impl ConvexWeight {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("weight sequence is empty".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self {
            values,
            repaired: false,
            raw_min_second_difference: 0.0,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest stored `j`.
    pub fn range(&self) -> usize {
        self.values.len() - 1
    }

    pub fn is_repaired(&self) -> bool {
        self.repaired
    }

    pub fn raw_min_second_difference(&self) -> f64 {
        self.raw_min_second_difference
    }

    /// `b_j` for any `j` in `−J..=J`.
    pub fn get(&self, j: i64) -> Option<f64> {
        self.values.get(j.unsigned_abs() as usize).copied()
    }

    pub fn difference(&self, order: usize, j: usize) -> Result<f64> {
        difference(&self.values, order, j)
    }

    pub fn report(&self) -> ConvexityReport {
        let b = &self.values;
        let d1: Vec<f64> = b.windows(2).map(|w| w[0] - w[1]).collect();
        let d2: Vec<f64> = d1.windows(2).map(|w| w[0] - w[1]).collect();
        let min_d2 = d2.iter().copied().fold(f64::INFINITY, f64::min);
        let jd1: Vec<f64> = d1.iter().enumerate().skip(1).map(|(j, d)| j as f64 * d).collect();
        Self::slack_report(
            d1.iter().all(|&d| d >= 0.0),
            min_d2,
            jd1.windows(2).all(|w| w[1] <= w[0] + 1e-12),
            d2.iter().enumerate().skip(1).map(|(j, d)| j as f64 * d).sum(),
        )
    }

    fn slack_report(nonincreasing: bool, min_d2: f64, jd1: bool, sum: f64) -> ConvexityReport {
        let min_d2 = if min_d2.is_finite() { min_d2 } else { 0.0 };
        ConvexityReport {
            nonincreasing,
            convex: min_d2 >= -CONVEXITY_TOLERANCE,
            min_second_difference: min_d2,
            j_first_difference_decreasing: jd1,
            weighted_second_difference_sum: sum,
        }
    }
}

const CONVEXITY_TOLERANCE: f64 = 1e-12;

/// Positive even sequence `p_j`, nondecreasing in `|j|`, stored for `j >= 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlowSequence {
    values: Vec<f64>,
    unbounded: bool,
}

impl SlowSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("slow sequence is empty".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidArgument("slow sequence must be positive".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("slow sequence must be nondecreasing".into()));
        }
        Ok(Self {
            values,
            unbounded: false,
        })
    }

    /// `p ≡ 1` on `0..=len-1`.
    pub fn constant(len: usize) -> Self {
        Self {
            values: vec![1.0; len.max(1)],
            unbounded: false,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, j: i64) -> Option<f64> {
        self.values.get(j.unsigned_abs() as usize).copied()
    }

    /// The input tails decayed far enough for `p_j` to keep growing.
    pub fn is_unbounded(&self) -> bool {
        self.unbounded
    }

    /// The input tails did not decay; `p_j` stays capped.
    pub fn is_capped(&self) -> bool {
        !self.unbounded
    }
}

/// Builds `p_j = min(ln(j+3), (t_0 / (t_j + t_0 2^{−j}))^{1/2})` from the
/// tails `t_j = Σ_{i >= j} a_i` of a convergent nonnegative series, then
/// takes running maxima.
///
/// `Σ a_j p_j` stays finite because `p_j <= (t_0 / t_j)^{1/2}` and
/// `Σ (t_j − t_{j+1}) / t_j^{1/2} <= 2 t_0^{1/2}`. The sequence is flagged
/// unbounded when the last tail is below `10⁻³ t_0`.
pub fn build_slow_sequence(tails: &[f64]) -> Result<SlowSequence> {
    let t0 = *tails
        .first()
        .ok_or_else(|| Error::InvalidArgument("no tail sums given".into()))?;
    if t0.is_nan() || t0 <= 0.0 || !t0.is_finite() {
        return Err(Error::InvalidArgument(format!("t(0) must be positive, got {t0}")));
    }
    if tails.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidArgument(
            "tail sums must be finite and nonnegative".into(),
        ));
    }
    if tails.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidArgument("tail sums must be nonincreasing".into()));
    }
    let mut values = Vec::with_capacity(tails.len());
    let mut running = 0.0f64;
    for (j, &t) in tails.iter().enumerate() {
        let growth = (t0 / (t + t0 * 0.5f64.powi(j as i32))).sqrt();
        running = running.max(((j + 3) as f64).ln().min(growth));
        values.push(running);
    }
    let unbounded = *tails.last().expect("nonempty") < 1e-3 * t0;
    Ok(SlowSequence { values, unbounded })
}

/// `b_j = (ln(j+2) p_j)^{−1/2}`. If some second difference is below
/// `−10⁻¹²`, the values are replaced by their greatest convex minorant on
/// the stored range and the result is marked as repaired.
pub fn build_convex_b(p: &SlowSequence) -> ConvexWeight {
    let raw: Vec<f64> = p
        .values()
        .iter()
        .enumerate()
        .map(|(j, &pj)| (((j + 2) as f64).ln() * pj).powf(-0.5))
        .collect();
    let min_d2 = raw.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).fold(0.0f64, f64::min);
    if min_d2 >= -CONVEXITY_TOLERANCE {
        return ConvexWeight {
            values: raw,
            repaired: false,
            raw_min_second_difference: min_d2,
        };
    }
    ConvexWeight {
        values: convex_minorant(&raw),
        repaired: true,
        raw_min_second_difference: min_d2,
    }
}

/// Lower convex hull of the points `(j, v_j)`, sampled back at every `j`.
fn convex_minorant(v: &[f64]) -> Vec<f64> {
    let mut hull: Vec<usize> = Vec::with_capacity(v.len());
    for j in 0..v.len() {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b if it lies on or above the chord a → j
            let cross = (v[b] - v[a]) * (j - a) as f64 - (v[j] - v[a]) * (b - a) as f64;
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(j);
    }
    let mut out = vec![0.0; v.len()];
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        for (j, slot) in out.iter_mut().enumerate().take(b + 1).skip(a) {
            let t = (j - a) as f64 / (b - a) as f64;
            *slot = v[a] + t * (v[b] - v[a]);
        }
    }
    if hull.len() == 1 {
        out[0] = v[0];
    }
    out
}

/// Per-coordinate summation regimes, each in `{0, 1, 2}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RVector(Vec<u8>);

impl RVector {
    pub fn new(entries: Vec<u8>) -> Result<Self> {
        if let Some(&bad) = entries.iter().find(|&&r| r > 2) {
            return Err(Error::InvalidArgument(format!("regime {bad} is not in {{0,1,2}}")));
        }
        Ok(Self(entries))
    }

    pub fn entries(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All `3^ν` vectors in lexicographic order.
    pub fn all(nu: usize) -> Vec<RVector> {
        let total = 3usize.pow(nu as u32);
        (0..total)
            .map(|mut code| {
                let mut e = vec![0u8; nu];
                for slot in e.iter_mut().rev() {
                    *slot = (code % 3) as u8;
                    code /= 3;
                }
                RVector(e)
            })
            .collect()
    }
}

/// Real values `A_I` on the box `0 <= i_j <= n_j`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperSequence {
    extent: Vec<usize>,
    values: Vec<f64>,
}

impl HyperSequence {
    /// `extent[j] = n_j`, the largest index on coordinate `j`.
    pub fn new(extent: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if extent.is_empty() {
            return Err(Error::InvalidArgument("sequence needs at least one coordinate".into()));
        }
        let expected: usize = extent.iter().map(|n| n + 1).product();
        if values.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "{} values for a box of {expected}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { extent, values })
    }

    pub fn nu(&self) -> usize {
        self.extent.len()
    }

    pub fn extent(&self) -> &[usize] {
        &self.extent
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, index: &[usize]) -> Option<f64> {
        if index.len() != self.nu() {
            return None;
        }
        let mut pos = 0;
        for (&i, &n) in index.iter().zip(&self.extent) {
            if i > n {
                return None;
            }
            pos = pos * (n + 1) + i;
        }
        Some(self.values[pos])
    }

    /// Contracts the coordinates in `order`, weighting `i_j` by
    /// `kernels[j][i_j]`.
    fn contract(&self, kernels: &[Vec<f64>], order: &[usize]) -> f64 {
        let mut shape: Vec<usize> = self.extent.iter().map(|n| n + 1).collect();
        let mut axes: Vec<usize> = (0..self.nu()).collect();
        let mut data = self.values.clone();
        for &coord in order {
            let a = axes
                .iter()
                .position(|&c| c == coord)
                .expect("coordinate not yet contracted");
            let len = shape[a];
            let inner: usize = shape[a + 1..].iter().product();
            let outer: usize = shape[..a].iter().product();
            let k = &kernels[coord];
            let mut next = vec![0.0; outer * inner];
            for o in 0..outer {
                for i in 0..len {
                    let w = k[i];
                    if w == 0.0 {
                        continue;
                    }
                    let src = &data[(o * len + i) * inner..(o * len + i + 1) * inner];
                    for (d, s) in next[o * inner..(o + 1) * inner].iter_mut().zip(src) {
                        *d += w * s;
                    }
                }
            }
            data = next;
            shape.remove(a);
            axes.remove(a);
        }
        data[0]
    }
}

/// Coefficient of `A_i` in the regime `r` sum up to `κ`; regime 2 is left
/// without the `1/Δ²b_κ` normalization.
fn kernel(r: u8, kappa: usize, len: usize, d2: &[f64]) -> Vec<f64> {
    (0..len)
        .map(|i| {
            if i > kappa {
                return 0.0;
            }
            match r {
                0 => 1.0,
                1 => (kappa - i + 1) as f64,
                _ => (i..=kappa).map(|a| d2[a] * (a - i + 1) as f64).sum(),
            }
        })
        .collect()
}

fn second_differences(b: &ConvexWeight, upto: usize) -> Result<Vec<f64>> {
    (0..=upto).map(|j| b.difference(2, j)).collect()
}

fn check_kappa(a: &HyperSequence, kappa: &[usize]) -> Result<()> {
    if kappa.len() != a.nu() || kappa.iter().zip(a.extent()).any(|(&k, &n)| k > n) {
        return Err(Error::IndexOutOfRange {
            index: kappa.to_vec(),
            shape: a.extent().to_vec(),
        });
    }
    Ok(())
}

/// `A^{(R)}_κ`: per coordinate a single sum (regime 0), a double sum
/// (regime 1) or `(1/Δ²b_κ) Σ_{α<=κ} Δ²b_α A^{(regime 1)}_α` (regime 2).
pub fn a_family(a: &HyperSequence, r: &RVector, b: &ConvexWeight, kappa: &[usize]) -> Result<f64> {
    let order: Vec<usize> = (0..a.nu()).collect();
    a_family_in_order(a, r, b, kappa, &order)
}

/// [`a_family`] with the coordinates summed in the given order.
pub fn a_family_in_order(
    a: &HyperSequence,
    r: &RVector,
    b: &ConvexWeight,
    kappa: &[usize],
    order: &[usize],
) -> Result<f64> {
    check_kappa(a, kappa)?;
    if r.len() != a.nu() {
        return Err(Error::DimensionMismatch {
            expected: a.nu(),
            found: r.len(),
        });
    }
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..a.nu()).collect::<Vec<_>>() {
        return Err(Error::InvalidArgument(format!("{order:?} is not a permutation")));
    }
    let mut kernels = Vec::with_capacity(a.nu());
    for (j, (&rj, &kj)) in r.entries().iter().zip(kappa).enumerate() {
        let len = a.extent()[j] + 1;
        if rj == 2 {
            let d2 = second_differences(b, kj)?;
            if d2[kj] == 0.0 {
                return Err(Error::DegenerateWeight {
                    coordinate: j,
                    index: kj,
                });
            }
            let scale = 1.0 / d2[kj];
            kernels.push(kernel(2, kj, len, &d2).into_iter().map(|v| v * scale).collect());
        } else {
            kernels.push(kernel(rj, kj, len, &[]));
        }
    }
    Ok(a.contract(&kernels, order))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbelCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub difference: f64,
}

/// Both sides of the multiple Abel summation identity
/// `Σ_{I<=n} A_I ∏ b_{i_j} = Σ_{R ∈ {0,1,2}^ν} ∏ Δ^{r_j} b_{n_j−r_j} · A^{(R)}_{n−R}`.
///
/// Regime-2 terms use `Δ²b_{n−2} A^{(2)}_{n−2} = Σ_α Δ²b_α A^{(1)}_α`
/// directly, so a vanishing `Δ²b_{n−2}` causes no division by zero.
pub fn abel_identity_check(a: &HyperSequence, b: &ConvexWeight, n: &[usize]) -> Result<AbelCheck> {
    check_kappa(a, n)?;
    for (coordinate, &v) in n.iter().enumerate() {
        if v < 2 {
            return Err(Error::IndexTooSmall {
                coordinate,
                value: v,
                minimum: 2,
            });
        }
    }
    let top = *n.iter().max().expect("nonempty");
    if top > b.range() {
        return Err(Error::RangeOverflow {
            index: top,
            order: 0,
            len: b.values().len(),
        });
    }
    let nu = a.nu();
    let order: Vec<usize> = (0..nu).collect();

    let lhs_kernels: Vec<Vec<f64>> = (0..nu)
        .map(|j| {
            (0..=a.extent()[j])
                .map(|i| if i <= n[j] { b.values()[i] } else { 0.0 })
                .collect()
        })
        .collect();
    let lhs = a.contract(&lhs_kernels, &order);

    let d2 = second_differences(b, top - 2)?;
    let mut rhs = 0.0;
    for r in RVector::all(nu) {
        let mut factor = 1.0;
        let mut kernels = Vec::with_capacity(nu);
        for ((&rj, &nj), &ext) in r.entries().iter().zip(n).zip(a.extent()) {
            let kappa = nj - rj as usize;
            let len = ext + 1;
            match rj {
                0 => factor *= b.values()[nj],
                1 => factor *= b.difference(1, nj - 1)?,
                _ => {}
            }
            kernels.push(kernel(rj, kappa, len, &d2));
        }
        if factor != 0.0 {
            rhs += factor * a.contract(&kernels, &order);
        }
    }
    Ok(AbelCheck {
        lhs,
        rhs,
        difference: (lhs - rhs).abs(),
    })
}

/// Anchor `α = 2^{M²}` with `M` the largest integer such that `2^{M²} <= n`.
pub fn dyadic_square_anchor(n: usize) -> Result<(u32, usize)> {
    if n == 0 {
        return Err(Error::IndexTooSmall {
            coordinate: 0,
            value: 0,
            minimum: 1,
        });
    }
    let mut m: u32 = 0;
    loop {
        let next = (m + 1) * (m + 1);
        if next >= usize::BITS || (1usize << next) > n {
            break;
        }
        m += 1;
    }
    Ok((m, 1usize << (m * m)))
}

/// One anchored free axis of a telescoping split.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anchor {
    pub axis: usize,
    pub n: usize,
    pub m: u32,
    pub alpha: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Telescope {
    pub anchors: Vec<Anchor>,
    /// `S_{idx_{j−1}} − S_{idx_j}` where `idx_j` has the first `j` free
    /// components replaced by their anchors.
    pub differences: Vec<GridFunction>,
    pub remainder: GridFunction,
    pub remainder_index: MultiIndex,
}

impl Telescope {
    /// Sum of all returned terms.
    pub fn reassemble(&self) -> Result<GridFunction> {
        let mut total = self.remainder.clone();
        for d in &self.differences {
            total = total.add(d)?;
        }
        Ok(total)
    }
}

/// Writes `S_n` as differences across the anchors `2^{M²}` of all free axes
/// but the last, plus the partial sum at the fully anchored index.
pub fn telescope_split(s: &Spectrum, space: &JkIndexSpace, n: &MultiIndex, grid: &TorusGrid) -> Result<Telescope> {
    if n.dimension() != space.dimension() {
        return Err(Error::DimensionMismatch {
            expected: space.dimension(),
            found: n.dimension(),
        });
    }
    if !space.contains(n) {
        return Err(Error::InvalidArgument(format!("{n} is not in {}", space.describe())));
    }
    let free = space.sample().free_axes();
    let mut anchors = Vec::new();
    for &axis in free.iter().take(free.len().saturating_sub(1)) {
        let (m, alpha) = dyadic_square_anchor(n[axis]).map_err(|_| Error::IndexTooSmall {
            coordinate: axis,
            value: n[axis],
            minimum: 1,
        })?;
        anchors.push(Anchor {
            axis,
            n: n[axis],
            m,
            alpha,
        });
    }
    let mut current = n.clone();
    let mut previous = partial_sum(s, &current, grid)?;
    let mut differences = Vec::with_capacity(anchors.len());
    for anchor in &anchors {
        current = current.with(anchor.axis, anchor.alpha);
        let next = partial_sum(s, &current, grid)?;
        differences.push(previous.sub(&next)?);
        previous = next;
    }
    Ok(Telescope {
        anchors,
        differences,
        remainder: previous,
        remainder_index: current,
    })
}
