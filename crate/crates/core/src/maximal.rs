//! Maximal operators `M(x) = max_n |S_n(x)| / √W(n)` over finite index
//! families, their `L_2` norms and level-set measures.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{DiagonalIndexSpace, JkIndexSpace, MultiIndex};
use crate::spectral::{sweep, GridFunction, ShellLayout, Spectrum, TorusGrid};
use crate::weyl::{sigma_functional, unit_weight, WeylWeight};

/// The maximal function on a grid together with the index that attains it
/// at every point.
#[derive(Clone, Debug, PartialEq)]
pub struct MaximalReport {
    grid: TorusGrid,
    pub space: String,
    pub weight: String,
    pub values: Vec<f64>,
    /// First index (in enumeration order) attaining the maximum.
    pub argmax: Vec<MultiIndex>,
    /// `(mean M²)^{1/2}` over the grid.
    pub l2_norm: f64,
    /// `(Σ|c_ν|²)^{1/2}`.
    pub input_l2_norm: f64,
    /// `l2_norm / input_l2_norm`, or 0 for a zero input.
    pub ratio: f64,
}

impl MaximalReport {
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_grid_function(&self) -> GridFunction {
        let vals = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        GridFunction::new(self.grid.clone(), vals).expect("finite maximal values")
    }

    pub fn level_set_measure(&self, alpha: f64) -> Result<f64> {
        level_set_fraction(&self.values, alpha).map(|frac| frac * torus_measure(&self.grid))
    }
}

fn torus_measure(grid: &TorusGrid) -> f64 {
    (2.0 * PI).powi(grid.dimension() as i32)
}

fn level_set_fraction(values: &[f64], alpha: f64) -> Result<f64> {
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(Error::InvalidArgument(format!("level must be positive, got {alpha}")));
    }
    let count = values.iter().filter(|&&v| v > alpha).count();
    Ok(count as f64 / values.len() as f64)
}

/// `μ{x : |M(x)| > α}` with each grid point carrying `(2π)^N / #points`.
pub fn level_set_measure(m: &GridFunction, alpha: f64) -> Result<f64> {
    let mags: Vec<f64> = m.values().iter().map(|v| v.norm()).collect();
    level_set_fraction(&mags, alpha).map(|frac| frac * torus_measure(m.grid()))
}

/// Maximal functions for several nested index sets and weights from one
/// sweep over the grid.
///
/// `tiers[i]` says which set index `i` first belongs to; set `t` is the
/// union of tiers `0..=t`. Returns reports indexed `[weight][tier]`.
pub fn tiered_maximal(
    s: &Spectrum,
    grid: &TorusGrid,
    indices: &[MultiIndex],
    tiers: &[usize],
    weights: &[&WeylWeight],
    space_names: &[String],
) -> Result<Vec<Vec<MaximalReport>>> {
    if indices.is_empty() {
        return Err(Error::InvalidArgument("empty index set".into()));
    }
    if tiers.len() != indices.len() {
        return Err(Error::InvalidArgument("one tier per index required".into()));
    }
    let tier_count = space_names.len();
    if tiers.iter().any(|&t| t >= tier_count) {
        return Err(Error::InvalidArgument("tier out of range".into()));
    }
    for w in weights {
        if w.dimension() != s.dimension() {
            return Err(Error::DimensionMismatch {
                expected: s.dimension(),
                found: w.dimension(),
            });
        }
    }
    let layout = ShellLayout::covering(s.bandwidth(), indices)?;
    let offsets: Vec<usize> = indices
        .iter()
        .map(|n| layout.offset(n).expect("covering layout stores every index"))
        .collect();
    let wc = weights.len();
    let inv: Vec<Vec<f64>> = weights
        .iter()
        .map(|w| {
            indices
                .iter()
                .map(|n| {
                    let v = w.value_at_index(n);
                    if v > 0.0 {
                        Ok(1.0 / v)
                    } else {
                        Err(Error::InvalidArgument(format!("weight is not positive at {n}")))
                    }
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    // Indices grouped by tier, in enumeration order within each group, so
    // each weight runs one tight argmax loop per tier.
    struct Group {
        offsets: Vec<usize>,
        ordinals: Vec<u32>,
        inv: Vec<Vec<f64>>,
    }
    let groups: Vec<Group> = (0..tier_count)
        .map(|tier| {
            let members: Vec<usize> = (0..indices.len()).filter(|&i| tiers[i] == tier).collect();
            Group {
                offsets: members.iter().map(|&i| offsets[i]).collect(),
                ordinals: members.iter().map(|&i| i as u32).collect(),
                inv: inv
                    .iter()
                    .map(|col| members.iter().map(|&i| col[i]).collect())
                    .collect(),
            }
        })
        .collect();
    // Per-point state is laid out `[tier][weight]`.
    let per_point = sweep(s, grid, &layout, |t| {
        let norms: Vec<f64> = t.values().iter().map(|v| v.norm_sqr()).collect();
        let mut best = vec![-1.0f64; tier_count * wc];
        let mut arg = vec![0u32; tier_count * wc];
        for (g, group) in groups.iter().enumerate() {
            for (w, inv_w) in group.inv.iter().enumerate() {
                let (mut b, mut a) = (-1.0f64, usize::MAX);
                for (j, (&off, &iw)) in group.offsets.iter().zip(inv_w).enumerate() {
                    let v = norms[off] * iw;
                    if v > b {
                        b = v;
                        a = j;
                    }
                }
                if a != usize::MAX {
                    best[g * wc + w] = b;
                    arg[g * wc + w] = group.ordinals[a];
                }
            }
        }
        for tier in 1..tier_count {
            for w in 0..wc {
                let (prev, cur) = ((tier - 1) * wc + w, tier * wc + w);
                if best[prev] > best[cur] || (best[prev] == best[cur] && arg[prev] < arg[cur]) {
                    best[cur] = best[prev];
                    arg[cur] = arg[prev];
                }
            }
        }
        (best, arg)
    })?;

    let input = s.l2_norm();
    let mut out = Vec::with_capacity(wc);
    for (w, weight) in weights.iter().enumerate() {
        let mut row = Vec::with_capacity(tier_count);
        for (tier, name) in space_names.iter().enumerate() {
            let slot = tier * wc + w;
            let values: Vec<f64> = per_point.iter().map(|(b, _)| b[slot].max(0.0).sqrt()).collect();
            let argmax = per_point
                .iter()
                .map(|(_, a)| indices[a[slot] as usize].clone())
                .collect();
            let l2 = (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt();
            row.push(MaximalReport {
                grid: grid.clone(),
                space: name.clone(),
                weight: weight.describe(),
                values,
                argmax,
                l2_norm: l2,
                input_l2_norm: input,
                ratio: if input > 0.0 { l2 / input } else { 0.0 },
            });
        }
        out.push(row);
    }
    Ok(out)
}

fn single(
    s: &Spectrum,
    grid: &TorusGrid,
    indices: Vec<MultiIndex>,
    w: &WeylWeight,
    name: String,
) -> Result<MaximalReport> {
    let tiers = vec![0; indices.len()];
    let mut reports = tiered_maximal(s, grid, &indices, &tiers, &[w], &[name])?;
    Ok(reports.remove(0).remove(0))
}

fn check_space(s: &Spectrum, dimension: usize) -> Result<()> {
    if dimension != s.dimension() {
        return Err(Error::DimensionMismatch {
            expected: s.dimension(),
            found: dimension,
        });
    }
    Ok(())
}

/// `M(x) = max_{n ∈ space} |S_n(x)| / √W(n)`.
pub fn weighted_maximal(s: &Spectrum, space: &JkIndexSpace, w: &WeylWeight, grid: &TorusGrid) -> Result<MaximalReport> {
    check_space(s, space.dimension())?;
    single(s, grid, space.iter().collect(), w, space.describe())
}

/// `M(x) = max_{n ∈ space} |S_n(x)|` for a space with exactly one free axis.
pub fn unweighted_maximal_one_free(s: &Spectrum, space: &JkIndexSpace, grid: &TorusGrid) -> Result<MaximalReport> {
    let free = space.sample().free_axes().len();
    if free != 1 {
        return Err(Error::WrongFreeAxisCount {
            expected: 1,
            found: free,
        });
    }
    unweighted_maximal(s, space, grid)
}

/// `M(x) = max_{n ∈ space} |S_n(x)|`.
pub fn unweighted_maximal(s: &Spectrum, space: &JkIndexSpace, grid: &TorusGrid) -> Result<MaximalReport> {
    check_space(s, space.dimension())?;
    single(
        s,
        grid,
        space.iter().collect(),
        &unit_weight(s.dimension()),
        space.describe(),
    )
}

/// `M(x) = max |S_n(x)|` over indices whose non-lacunary components share
/// one value `n0`.
pub fn diagonal_maximal(s: &Spectrum, space: &DiagonalIndexSpace, grid: &TorusGrid) -> Result<MaximalReport> {
    check_space(s, space.sample().dimension())?;
    single(
        s,
        grid,
        space.iter().collect(),
        &unit_weight(s.dimension()),
        space.describe(),
    )
}

/// Maximal functions over a chain of nested spaces (typically one space at
/// doubling free caps) for each weight, from one sweep. Returns
/// `[weight][space]`.
pub fn nested_maximal(
    s: &Spectrum,
    spaces: &[JkIndexSpace],
    weights: &[&WeylWeight],
    grid: &TorusGrid,
) -> Result<Vec<Vec<MaximalReport>>> {
    let top = spaces
        .last()
        .ok_or_else(|| Error::InvalidArgument("no spaces given".into()))?;
    check_space(s, top.dimension())?;
    for pair in spaces.windows(2) {
        if let Some(n) = pair[0].iter().find(|n| !pair[1].contains(n)) {
            return Err(Error::InvalidSpace(format!("spaces are not nested: {n} escapes")));
        }
    }
    let indices: Vec<MultiIndex> = top.iter().collect();
    let tiers: Vec<usize> = indices
        .iter()
        .map(|n| {
            spaces
                .iter()
                .position(|sp| sp.contains(n))
                .expect("top space contains n")
        })
        .collect();
    let names: Vec<String> = spaces.iter().map(JkIndexSpace::describe).collect();
    tiered_maximal(s, grid, &indices, &tiers, weights, &names)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakTypeRow {
    pub alpha: f64,
    pub measure: f64,
    pub ratio: f64,
}

/// `α² μ{M > α} / Σ` over an α-grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakTypeTable {
    pub sigma: f64,
    pub rows: Vec<WeakTypeRow>,
    pub max_ratio: f64,
    pub argmax_alpha: f64,
}

/// Weak-type table of an already computed maximal function against the
/// coefficient functional value `sigma`.
pub fn weak_type_table(m: &MaximalReport, sigma: f64, alphas: &[f64]) -> Result<WeakTypeTable> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::DegenerateInput(format!(
            "coefficient functional must be positive, got {sigma}"
        )));
    }
    let mut rows = Vec::with_capacity(alphas.len());
    let (mut max_ratio, mut argmax_alpha) = (0.0, alphas.first().copied().unwrap_or(0.0));
    for &alpha in alphas {
        let measure = m.level_set_measure(alpha)?;
        let ratio = alpha * alpha * measure / sigma;
        if ratio > max_ratio {
            max_ratio = ratio;
            argmax_alpha = alpha;
        }
        rows.push(WeakTypeRow { alpha, measure, ratio });
    }
    Ok(WeakTypeTable {
        sigma,
        rows,
        max_ratio,
        argmax_alpha,
    })
}

/// `α² μ{max_n |S_n| > α} / Σ[f]` with `Σ[f] = Σ |c_ν|² W(ν)`. The
/// supremum is unweighted; `w` only enters through `Σ`.
pub fn weak_type_ratio(
    s: &Spectrum,
    space: &JkIndexSpace,
    w: &WeylWeight,
    grid: &TorusGrid,
    alphas: &[f64],
) -> Result<WeakTypeTable> {
    let sigma = sigma_functional(s, w)?;
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::DegenerateInput("coefficient functional vanishes".into()));
    }
    let m = unweighted_maximal(s, space, grid)?;
    weak_type_table(&m, sigma, alphas)
}
