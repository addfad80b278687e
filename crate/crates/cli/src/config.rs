//! Experiment configuration and its plain-text `key = value` form.
//!
//! Axis labels are 1-based here and in every file the CLI reads or writes.

use std::fmt;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use rectsum::lattice::{make_lacunary, GrowthRule, JkIndexSpace, LacunaryFamily, SampleJk};
use rectsum::spectral::TorusGrid;
use serde::{Deserialize, Serialize};

use crate::testfn::{TestFamily, TestParams};

/// Weight used for the weighted maximal function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightChoice {
    Product,
    Minpair,
    Full,
}

impl FromStr for WeightChoice {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "product" => Ok(Self::Product),
            "minpair" | "min_pair" => Ok(Self::Minpair),
            "full" => Ok(Self::Full),
            _ => bail!("unknown weight '{s}' (expected product, minpair or full)"),
        }
    }
}

impl fmt::Display for WeightChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Product => "product",
            Self::Minpair => "minpair",
            Self::Full => "full",
        })
    }
}

/// What the maximal suite divides by.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaximalVariant {
    /// `‖sup |S_n| / √W‖₂ / ‖f‖₂`.
    Weighted,
    /// `‖sup |S_n|‖₂² / Σ₀[f]` with the min-pair weight.
    MinPairEnergy,
}

impl FromStr for MaximalVariant {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weighted" => Ok(Self::Weighted),
            "min_pair_energy" | "minpair_energy" => Ok(Self::MinPairEnergy),
            _ => bail!("unknown variant '{s}' (expected weighted or min_pair_energy)"),
        }
    }
}

/// One exact identity exercised by the identity suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityCheck {
    Abel,
    Shell,
    Telescope,
    Decomposition,
    Blocks,
}

impl IdentityCheck {
    pub const ALL: [Self; 5] = [
        Self::Abel,
        Self::Shell,
        Self::Telescope,
        Self::Decomposition,
        Self::Blocks,
    ];
}

impl FromStr for IdentityCheck {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abel" => Ok(Self::Abel),
            "shell" => Ok(Self::Shell),
            "telescope" => Ok(Self::Telescope),
            "decomposition" => Ok(Self::Decomposition),
            "blocks" => Ok(Self::Blocks),
            _ => bail!("unknown identity check '{s}'"),
        }
    }
}

/// Log-spaced α values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AlphaGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let (lo, hi) = (self.min.ln(), self.max.ln());
        (0..self.count)
            .map(|i| (lo + (hi - lo) * i as f64 / (self.count - 1) as f64).exp())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dimension: usize,
    /// Lacunary axes, 1-based.
    pub jk: Vec<usize>,
    /// One ratio per lacunary axis, or a single shared ratio.
    pub q: Vec<f64>,
    pub lambda_count: usize,
    pub growth: GrowthRule,
    /// Smallest free cap per free axis, or a single shared cap.
    pub free_cap: Vec<usize>,
    /// The cap schedule is `free_cap · 2^i` for `i = 0..=doublings`.
    pub doublings: usize,
    /// Spectrum bandwidth per axis, or a single shared value.
    pub bandwidth: Vec<usize>,
    /// Grid points per axis. Empty means `4 · bandwidth`.
    pub grid: Vec<usize>,
    pub weight: WeightChoice,
    pub variant: MaximalVariant,
    pub family: TestFamily,
    pub beta: f64,
    pub epsilon: f64,
    /// Frequency of the `single_mode` family.
    pub mode: Vec<i64>,
    pub normalize: bool,
    pub seed: u64,
    pub trials: usize,
    /// Minimum index levels of the convergence suite.
    pub levels: Vec<usize>,
    pub alpha: AlphaGrid,
    pub threshold: f64,
    /// Box sizes of the identity suite.
    pub sizes: Vec<usize>,
    /// Random cases per box size in the identity suite.
    pub cases: usize,
    pub checks: Vec<IdentityCheck>,
    /// Negative control: shift one oracle coefficient so the identity
    /// suite must fail.
    pub planted: bool,
    /// Half-width of the box scanned by the Weyl condition check.
    pub weyl_bound: usize,
    /// Output path. Not echoed, so reports written to different files
    /// stay byte-identical.
    #[serde(skip)]
    pub out: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dimension: 3,
            jk: vec![1],
            q: vec![2.0],
            lambda_count: 3,
            growth: GrowthRule::Minimal,
            free_cap: vec![8],
            doublings: 2,
            bandwidth: vec![8],
            grid: Vec::new(),
            weight: WeightChoice::Product,
            variant: MaximalVariant::Weighted,
            family: TestFamily::RandomDecay,
            beta: 1.0,
            epsilon: 0.5,
            mode: Vec::new(),
            normalize: true,
            seed: 0,
            trials: 20,
            levels: vec![4, 8, 16],
            alpha: AlphaGrid {
                min: 0.05,
                max: 20.0,
                count: 24,
            },
            threshold: 1.10,
            sizes: vec![4, 8],
            cases: 10,
            checks: IdentityCheck::ALL.to_vec(),
            planted: false,
            weyl_bound: 64,
            out: None,
        }
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    let inner = value.trim().trim_start_matches('[').trim_end_matches(']').trim();
    if inner.is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|item| {
            item.trim()
                .parse::<T>()
                .map_err(|e| anyhow!("{key}: cannot parse '{}': {e}", item.trim()))
        })
        .collect()
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse::<T>()
        .map_err(|e| anyhow!("{key}: cannot parse '{}': {e}", value.trim()))
}

fn broadcast<T: Clone>(key: &str, values: &[T], len: usize) -> Result<Vec<T>> {
    match values.len() {
        1 => Ok(vec![values[0].clone(); len]),
        n if n == len => Ok(values.to_vec()),
        n => bail!("{key}: expected 1 or {len} values, got {n}"),
    }
}

impl ExperimentConfig {
    /// Sets one key. Keys match the field names; `N` and `Jk` are accepted
    /// as aliases for `dimension` and `jk`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        match key {
            "dimension" | "N" => self.dimension = parse_one(key, value)?,
            "jk" | "Jk" => self.jk = parse_list(key, value)?,
            "q" => self.q = parse_list(key, value)?,
            "lambda_count" => self.lambda_count = parse_one(key, value)?,
            "growth" => {
                self.growth = match value.trim() {
                    "minimal" => GrowthRule::Minimal,
                    "power" => GrowthRule::Power,
                    other => bail!("growth: unknown rule '{other}'"),
                }
            }
            "free_cap" => self.free_cap = parse_list(key, value)?,
            "doublings" => self.doublings = parse_one(key, value)?,
            "bandwidth" => self.bandwidth = parse_list(key, value)?,
            "grid" => self.grid = parse_list(key, value)?,
            "weight" => self.weight = parse_one(key, value)?,
            "variant" => self.variant = parse_one(key, value)?,
            "family" => self.family = parse_one(key, value)?,
            "beta" => self.beta = parse_one(key, value)?,
            "epsilon" => self.epsilon = parse_one(key, value)?,
            "mode" => self.mode = parse_list(key, value)?,
            "normalize" => self.normalize = parse_one(key, value)?,
            "seed" => self.seed = parse_one(key, value)?,
            "trials" => self.trials = parse_one(key, value)?,
            "levels" => self.levels = parse_list(key, value)?,
            "alpha_min" => self.alpha.min = parse_one(key, value)?,
            "alpha_max" => self.alpha.max = parse_one(key, value)?,
            "alpha_count" => self.alpha.count = parse_one(key, value)?,
            "threshold" => self.threshold = parse_one(key, value)?,
            "sizes" => self.sizes = parse_list(key, value)?,
            "cases" => self.cases = parse_one(key, value)?,
            "checks" => self.checks = parse_list(key, value)?,
            "planted" => self.planted = parse_one(key, value)?,
            "weyl_bound" => self.weyl_bound = parse_one(key, value)?,
            "out" => {
                let v = value.trim();
                self.out = (!v.is_empty()).then(|| v.to_string());
            }
            _ => bail!("unknown config key '{key}'"),
        }
        Ok(())
    }

    /// Applies a `key=value` assignment.
    pub fn set_assignment(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| anyhow!("expected key=value, got '{assignment}'"))?;
        self.set(k, v)
    }

    /// Parses a config file body on top of the defaults. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn from_kv_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            cfg.set_assignment(line).with_context(|| format!("line {}", i + 1))?;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            bail!("dimension must be at least 1");
        }
        self.sample()?;
        if self.q.is_empty() && !self.jk.is_empty() {
            bail!("q: at least one ratio required");
        }
        if let Some(q) = self.q.iter().find(|&&q| q.is_nan() || q <= 1.0) {
            bail!("q: ratio {q} must exceed 1");
        }
        if self.lambda_count == 0 {
            bail!("lambda_count must be at least 1");
        }
        if self.free_cap.contains(&0) {
            bail!("free_cap: caps must be at least 1");
        }
        self.space_at(0)?;
        self.grid()?;
        self.test_params()?.check(self.family)?;
        if self.levels.is_empty() {
            bail!("levels: at least one level required");
        }
        let a = &self.alpha;
        if a.min.is_nan() || a.max.is_nan() || a.min <= 0.0 || a.max < a.min || a.count == 0 {
            bail!("alpha grid needs 0 < alpha_min <= alpha_max and alpha_count >= 1");
        }
        if self.threshold.is_nan() || self.threshold <= 0.0 {
            bail!("threshold must be positive");
        }
        Ok(())
    }

    pub fn sample(&self) -> Result<SampleJk> {
        SampleJk::from_labels(self.dimension, &self.jk).context("jk")
    }

    pub fn bandwidth(&self) -> Result<Vec<usize>> {
        broadcast("bandwidth", &self.bandwidth, self.dimension)
    }

    /// Explicit grid, or four points per unit of bandwidth (at least 2).
    pub fn grid(&self) -> Result<TorusGrid> {
        let bw = self.bandwidth()?;
        let res = if self.grid.is_empty() {
            bw.iter().map(|&b| (4 * b).max(2)).collect()
        } else {
            broadcast("grid", &self.grid, self.dimension)?
        };
        let grid = TorusGrid::new(res).context("grid")?;
        for (axis, (&b, &l)) in bw.iter().zip(grid.resolution()).enumerate() {
            if 2 * b >= l {
                bail!("grid: {l} points on axis {} cannot resolve bandwidth {b}", axis + 1);
            }
        }
        Ok(grid)
    }

    pub fn families(&self) -> Result<Vec<LacunaryFamily>> {
        let k = self.jk.len();
        let q = broadcast("q", &self.q, k)?;
        q.iter()
            .map(|&q| make_lacunary(q, self.lambda_count, self.growth).context("lacunary family"))
            .collect()
    }

    /// Free caps at step `i` of the doubling schedule.
    pub fn caps_at(&self, step: usize) -> Result<Vec<usize>> {
        let free = self.dimension.saturating_sub(self.jk.len());
        let base = broadcast("free_cap", &self.free_cap, free)?;
        base.iter()
            .map(|&c| {
                c.checked_shl(step as u32)
                    .filter(|v| v >> step == c)
                    .ok_or_else(|| anyhow!("free_cap: doubling overflows"))
            })
            .collect()
    }

    pub fn space_at(&self, step: usize) -> Result<JkIndexSpace> {
        JkIndexSpace::new(self.sample()?, self.families()?, self.caps_at(step)?).context("index space")
    }

    /// The nested spaces of the cap schedule, smallest first.
    pub fn space_schedule(&self) -> Result<Vec<JkIndexSpace>> {
        (0..=self.doublings).map(|i| self.space_at(i)).collect()
    }

    pub fn test_params(&self) -> Result<TestParams> {
        Ok(TestParams {
            bandwidth: self.bandwidth()?,
            beta: self.beta,
            epsilon: self.epsilon,
            mode: self.mode.clone(),
            normalize: self.normalize,
            free_axes: self.sample()?.free_axes().to_vec(),
        })
    }
}
