//! Weyl-multiplier weights `W(ν)` and the coefficient functional
//! `Σ |c_ν|² W(ν)`.
//!
//! All logarithms are natural.

use std::fmt;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::SampleJk;
use crate::spectral::Spectrum;

const LOG_TABLE_LEN: usize = 1 << 12;

/// `ln(k + 2)`, memoized for small `k`.
pub fn log2p(k: u64) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| (0..LOG_TABLE_LEN).map(|k| (k as f64 + 2.0).ln()).collect());
    match table.get(k as usize) {
        Some(&v) => v,
        None => (k as f64 + 2.0).ln(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    /// `∏ ln(|ν_α| + 2)` over the free axes of a sample.
    Product,
    /// `ln²(min(|ν_i|, |ν_j|) + 2)` over exactly two free axes.
    MinPair,
    /// `∏ ln(|ν_j| + 2)` over all axes.
    Full,
    /// Values read from a table on a signed box.
    Custom,
    /// `W ≡ 1`.
    Unit,
}

impl fmt::Display for WeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            WeightKind::Product => "product",
            WeightKind::MinPair => "minpair",
            WeightKind::Full => "full",
            WeightKind::Custom => "custom",
            WeightKind::Unit => "unit",
        };
        f.write_str(name)
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Table {
    bound: Vec<usize>,
    values: Vec<f64>,
}

impl Table {
    // components beyond the bound are clamped to it, keeping the sign
    fn lookup(&self, mode: &[i64]) -> f64 {
        let mut pos = 0usize;
        for (&v, &b) in mode.iter().zip(&self.bound) {
            let bi = b as i64;
            pos = pos * (2 * b + 1) + (v.clamp(-bi, bi) + bi) as usize;
        }
        self.values[pos]
    }
}

/// A weight `W : Z^N → R`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeylWeight {
    kind: WeightKind,
    dimension: usize,
    axes: Vec<usize>,
    table: Option<Table>,
}

/// Weight of the free components: `∏_{α ∉ J_k} ln(|ν_α| + 2)`.
pub fn product_weight(sample: &SampleJk) -> WeylWeight {
    WeylWeight {
        kind: WeightKind::Product,
        dimension: sample.dimension(),
        axes: sample.free_axes().to_vec(),
        table: None,
    }
}

/// `ln²(min(|ν_i|, |ν_j|) + 2)` on the two free axes `i, j` of `sample`.
pub fn min_pair_weight(sample: &SampleJk) -> Result<WeylWeight> {
    let free = sample.free_axes();
    if free.len() != 2 {
        return Err(Error::WrongFreeAxisCount {
            expected: 2,
            found: free.len(),
        });
    }
    Ok(WeylWeight {
        kind: WeightKind::MinPair,
        dimension: sample.dimension(),
        axes: free.to_vec(),
        table: None,
    })
}

/// `∏_{j=1}^{N} ln(|ν_j| + 2)`.
pub fn full_weight(dimension: usize) -> WeylWeight {
    WeylWeight {
        kind: WeightKind::Full,
        dimension,
        axes: (0..dimension).collect(),
        table: None,
    }
}

pub fn unit_weight(dimension: usize) -> WeylWeight {
    WeylWeight {
        kind: WeightKind::Unit,
        dimension,
        axes: Vec::new(),
        table: None,
    }
}

/// Weight given by a table over the signed box `|ν_j| <= bound_j`, row-major
/// from `-bound` to `+bound`. Lookups outside the box clamp each component.
/// The table is taken as is; use [`check_weyl_conditions`] to vet it.
pub fn custom_weight(bound: Vec<usize>, values: Vec<f64>) -> Result<WeylWeight> {
    if bound.is_empty() {
        return Err(Error::InvalidArgument("custom weight needs at least one axis".into()));
    }
    let expected: usize = bound.iter().map(|b| 2 * b + 1).product();
    if values.len() != expected {
        return Err(Error::InvalidArgument(format!(
            "custom weight table has {} entries, box needs {expected}",
            values.len()
        )));
    }
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(pos));
    }
    Ok(WeylWeight {
        kind: WeightKind::Custom,
        dimension: bound.len(),
        axes: (0..bound.len()).collect(),
        table: Some(Table { bound, values }),
    })
}

impl WeylWeight {
    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Axes the weight depends on.
    pub fn axes(&self) -> &[usize] {
        &self.axes
    }

    /// `W(ν)` at a signed mode.
    pub fn value(&self, mode: &[i64]) -> f64 {
        debug_assert_eq!(mode.len(), self.dimension);
        match self.kind {
            WeightKind::Product | WeightKind::Full => {
                self.axes.iter().map(|&a| log2p(mode[a].unsigned_abs())).product()
            }
            WeightKind::MinPair => {
                let m = mode[self.axes[0]].unsigned_abs().min(mode[self.axes[1]].unsigned_abs());
                let l = log2p(m);
                l * l
            }
            WeightKind::Custom => self.table.as_ref().expect("custom table").lookup(mode),
            WeightKind::Unit => 1.0,
        }
    }

    /// `W(n)` at a nonnegative index, as used by maximal operators.
    pub fn value_at_index(&self, n: &[usize]) -> f64 {
        match self.kind {
            WeightKind::Product | WeightKind::Full => self.axes.iter().map(|&a| log2p(n[a] as u64)).product(),
            WeightKind::MinPair => {
                let l = log2p(n[self.axes[0]].min(n[self.axes[1]]) as u64);
                l * l
            }
            WeightKind::Custom => {
                let mode: Vec<i64> = n.iter().map(|&v| v as i64).collect();
                self.value(&mode)
            }
            WeightKind::Unit => 1.0,
        }
    }

    /// Short text such as `product[axes 2,3]`, with 1-based axis labels.
    pub fn describe(&self) -> String {
        match self.kind {
            WeightKind::Unit => "unit".to_string(),
            WeightKind::Custom => {
                format!("custom[bound {:?}]", self.table.as_ref().expect("custom table").bound)
            }
            _ => {
                let labels: Vec<String> = self.axes.iter().map(|a| (a + 1).to_string()).collect();
                format!("{}[axes {}]", self.kind, labels.join(","))
            }
        }
    }
}

/// `Σ_ν |c_ν|² W(ν)` over the spectrum's box.
pub fn sigma_functional(s: &Spectrum, w: &WeylWeight) -> Result<f64> {
    if w.dimension() != s.dimension() {
        return Err(Error::DimensionMismatch {
            expected: s.dimension(),
            found: w.dimension(),
        });
    }
    let mut total = 0.0;
    s.for_each_mode(|mode, c| total += c.norm_sqr() * w.value(mode));
    Ok(total)
}

/// Outcome of one admissibility condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionOutcome {
    pub passed: bool,
    /// First violating index in row-major order, if any.
    pub witness: Option<Vec<i64>>,
    pub detail: Option<String>,
}

impl ConditionOutcome {
    fn from_witness(found: Option<(Vec<i64>, String)>) -> Self {
        match found {
            None => Self {
                passed: true,
                witness: None,
                detail: None,
            },
            Some((w, d)) => Self {
                passed: false,
                witness: Some(w),
                detail: Some(d),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylReport {
    pub weight: String,
    pub bound: Vec<usize>,
    pub positivity: ConditionOutcome,
    pub symmetry: ConditionOutcome,
    pub monotonicity: ConditionOutcome,
}

impl WeylReport {
    pub fn passed(&self) -> bool {
        self.positivity.passed && self.symmetry.passed && self.monotonicity.passed
    }
}

/// Scans the box `|ν_j| <= bound_j` for the first index violating `test`.
/// The first axis is split across threads; the witness is still the first
/// one in row-major order.
fn first_violation<F>(lower: &[i64], upper: &[i64], test: F) -> Option<(Vec<i64>, String)>
where
    F: Fn(&[i64]) -> Option<String> + Sync,
{
    let dim = lower.len();
    (lower[0]..=upper[0]).into_par_iter().find_map_first(|v0| {
        let mut mode = lower.to_vec();
        mode[0] = v0;
        loop {
            if let Some(detail) = test(&mode) {
                return Some((mode, detail));
            }
            let mut a = dim;
            loop {
                if a == 1 {
                    return None;
                }
                a -= 1;
                if mode[a] < upper[a] {
                    mode[a] += 1;
                    break;
                }
                mode[a] = lower[a];
            }
        }
    })
}

/// Exhaustively checks positivity, evenness in every coordinate and
/// coordinatewise monotonicity on `Z^N_0`, all on the box `|ν_j| <= bound_j`.
pub fn check_weyl_conditions(w: &WeylWeight, bound: &[usize]) -> Result<WeylReport> {
    if bound.len() != w.dimension() {
        return Err(Error::DimensionMismatch {
            expected: w.dimension(),
            found: bound.len(),
        });
    }
    let upper: Vec<i64> = bound.iter().map(|&b| b as i64).collect();
    let lower: Vec<i64> = upper.iter().map(|&b| -b).collect();
    let zeros = vec![0i64; bound.len()];

    let positivity = first_violation(&lower, &upper, |m| {
        let v = w.value(m);
        (v.is_nan() || v <= 0.0).then(|| format!("W = {v}"))
    });
    let symmetry = first_violation(&lower, &upper, |m| {
        let abs: Vec<i64> = m.iter().map(|v| v.abs()).collect();
        let (a, b) = (w.value(m), w.value(&abs));
        (a != b).then(|| format!("W = {a} but W(|ν|) = {b}"))
    });
    let monotonicity = first_violation(&zeros, &upper, |m| {
        let here = w.value(m);
        let mut next = m.to_vec();
        for a in 0..m.len() {
            if m[a] < upper[a] {
                next[a] += 1;
                let there = w.value(&next);
                next[a] -= 1;
                if there < here {
                    return Some(format!("W decreases along axis {} ({here} -> {there})", a + 1));
                }
            }
        }
        None
    });

    Ok(WeylReport {
        weight: w.describe(),
        bound: bound.to_vec(),
        positivity: ConditionOutcome::from_witness(positivity),
        symmetry: ConditionOutcome::from_witness(symmetry),
        monotonicity: ConditionOutcome::from_witness(monotonicity),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn product_weight_values() {
        let s1 = SampleJk::new(3, &[0]).unwrap();
        let w = product_weight(&s1);
        assert!((w.value(&[17, 0, 0]) - 0.480453).abs() < 1e-6);
        assert!((w.value(&[17, 0, 0]) - LN2 * LN2).abs() < 1e-15);
        let s2 = SampleJk::new(3, &[0, 1]).unwrap();
        let w2 = product_weight(&s2);
        assert!((w2.value(&[3, -9, 6]) - 2.079442).abs() < 1e-6);
        assert_eq!(w.value(&[5, 2, -3]), w.value(&[-40, 2, -3]));
    }

    #[test]
    fn min_pair_values_and_errors() {
        let s = SampleJk::new(3, &[0]).unwrap();
        let w = min_pair_weight(&s).unwrap();
        assert!((w.value(&[9, 0, 5]) - LN2 * LN2).abs() < 1e-15);
        assert_eq!(w.value(&[1, 3, 7]), w.value(&[1, 7, 3]));
        assert!(matches!(
            min_pair_weight(&SampleJk::new(3, &[0, 1]).unwrap()),
            Err(Error::WrongFreeAxisCount { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn min_pair_below_product() {
        let s = SampleJk::new(3, &[0]).unwrap();
        let (wm, wp) = (min_pair_weight(&s).unwrap(), product_weight(&s));
        for a in 0..64 {
            for b in 0..64 {
                assert!(wm.value(&[0, a, b]) <= wp.value(&[0, a, b]) + 1e-15);
            }
        }
    }

    #[test]
    fn conditions_hold_for_provided_kinds() {
        let s = SampleJk::new(3, &[0]).unwrap();
        for w in [
            product_weight(&s),
            min_pair_weight(&s).unwrap(),
            full_weight(3),
            unit_weight(3),
        ] {
            let r = check_weyl_conditions(&w, &[32, 32, 32]).unwrap();
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn planted_violations_found() {
        let bound = vec![2, 2];
        let mut values = vec![1.0; 25];
        // ν = (1, -1) → position (1+2)*5 + (-1+2) = 16
        values[16] = -0.5;
        let w = custom_weight(bound.clone(), values).unwrap();
        let r = check_weyl_conditions(&w, &bound).unwrap();
        assert!(!r.positivity.passed);
        assert_eq!(r.positivity.witness, Some(vec![1, -1]));
        assert!(!r.symmetry.passed);
        assert!(r.monotonicity.passed);

        let mut values = vec![1.0; 25];
        // ν = (2, 2) below its neighbours; (1, 2) is met first
        values[24] = 0.5;
        values[20] = 0.5;
        values[4] = 0.5;
        values[0] = 0.5;
        let w = custom_weight(bound.clone(), values).unwrap();
        let r = check_weyl_conditions(&w, &bound).unwrap();
        assert!(r.positivity.passed && r.symmetry.passed);
        assert_eq!(r.monotonicity.witness, Some(vec![1, 2]));
    }

    #[test]
    fn sigma_values() {
        let s = SampleJk::new(3, &[0]).unwrap();
        let w = product_weight(&s);
        let one = Spectrum::single_mode(vec![2, 2, 2], &[0, 0, 0], Complex64::new(1.0, 0.0)).unwrap();
        assert!((sigma_functional(&one, &w).unwrap() - LN2 * LN2).abs() < 1e-15);
        let zero = Spectrum::zeros(vec![2, 2, 2]).unwrap();
        assert_eq!(sigma_functional(&zero, &w).unwrap(), 0.0);
        let scaled = one.scaled(Complex64::new(0.0, 3.0));
        assert!((sigma_functional(&scaled, &w).unwrap() - 9.0 * LN2 * LN2).abs() < 1e-13);
        assert!(sigma_functional(&Spectrum::zeros(vec![1]).unwrap(), &w).is_err());
    }

    #[test]
    fn describe_uses_labels() {
        let s = SampleJk::new(3, &[0]).unwrap();
        assert_eq!(product_weight(&s).describe(), "product[axes 2,3]");
        assert_eq!(unit_weight(2).describe(), "unit");
    }
}
