//! Commands that act on one given spectrum rather than on random trials.

use anyhow::{bail, Context, Result};
use rectsum::decomp::decompose_two_free;
use rectsum::lattice::MultiIndex;
use rectsum::maximal::{nested_maximal, weak_type_table, WeakTypeTable};
use rectsum::spectral::{GridFunction, Spectrum};
use rectsum::weyl::{product_weight, sigma_functional, unit_weight};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::suites::IDENTITY_TOLERANCE;

pub const MAXIMAL_SCHEMA: &str = "rectsum.maximal/v1";
pub const DECOMPOSITION_SCHEMA: &str = "rectsum.decomposition/v1";

/// Takes dimension and bandwidth from the spectrum, keeping an explicit
/// grid if it still fits.
pub fn adopt_spectrum(cfg: &mut ExperimentConfig, s: &Spectrum) {
    cfg.dimension = s.dimension();
    cfg.bandwidth = s.bandwidth().to_vec();
    if !cfg.grid.is_empty() && cfg.grid.len() != 1 && cfg.grid.len() != s.dimension() {
        cfg.grid.clear();
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionPoint {
    pub cap: usize,
    pub space: String,
    /// `‖M_W‖₂ / ‖f‖₂`.
    pub ratio: f64,
    pub sup: f64,
    /// `‖M‖₂ / ‖f‖₂` without the weight.
    pub unweighted_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaximalOutput {
    pub schema: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub weight: String,
    pub grid: Vec<usize>,
    pub input_l2_norm: f64,
    pub exhaustion: Vec<ExhaustionPoint>,
    /// Weak-type table of the unweighted maximal function at the top cap
    /// against the product-weight functional; absent when it vanishes.
    pub weak_type: Option<WeakTypeTable>,
    /// Weighted maximal function at the top cap, row-major over the grid.
    pub values: Vec<f64>,
    /// Index attaining the maximum at each grid point.
    pub argmax: Vec<Vec<usize>>,
}

pub fn maximal_single(cfg: &ExperimentConfig, s: &Spectrum) -> Result<MaximalOutput> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let spaces = cfg.space_schedule()?;
    let sample = cfg.sample()?;
    let weighted = crate::suites::weighted_weight(cfg, &sample)?;
    let unit = unit_weight(cfg.dimension);
    let reports = nested_maximal(s, &spaces, &[&weighted, &unit], &grid)?;
    let sigma = sigma_functional(s, &product_weight(&sample))?;
    let top = spaces.len() - 1;
    let weak_type = if sigma > 0.0 {
        Some(weak_type_table(&reports[1][top], sigma, &cfg.alpha.values())?)
    } else {
        None
    };
    let exhaustion = (0..spaces.len())
        .map(|i| {
            Ok(ExhaustionPoint {
                cap: cfg.caps_at(i)?.into_iter().max().unwrap_or(0),
                space: spaces[i].describe(),
                ratio: reports[0][i].ratio,
                sup: reports[0][i].sup(),
                unweighted_ratio: reports[1][i].ratio,
            })
        })
        .collect::<Result<_>>()?;
    let best = &reports[0][top];
    Ok(MaximalOutput {
        schema: MAXIMAL_SCHEMA.into(),
        version: rectsum::VERSION.into(),
        config: cfg.clone(),
        weight: weighted.describe(),
        grid: grid.resolution().to_vec(),
        input_l2_norm: best.input_l2_norm,
        exhaustion,
        weak_type,
        values: best.values.clone(),
        argmax: best.argmax.iter().map(|n| n.as_ref().to_vec()).collect(),
    })
}

impl MaximalOutput {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// `alpha,measure,ratio` rows of the weak-type table.
    pub fn weak_type_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["alpha", "measure", "ratio"])?;
        for row in self.weak_type.iter().flat_map(|t| &t.rows) {
            w.write_record([row.alpha.to_string(), row.measure.to_string(), row.ratio.to_string()])?;
        }
        Ok(String::from_utf8(w.into_inner().context("flushing csv")?)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionOutput {
    pub schema: String,
    pub version: String,
    pub index: Vec<usize>,
    /// The two free axes, 1-based.
    pub axes: [usize; 2],
    /// Sup norms of the four terms.
    pub term_sup: [f64; 4],
    pub reassembly_error: f64,
    pub bilinear_gap: f64,
    pub passed: bool,
}

pub fn decompose_single(cfg: &ExperimentConfig, s: &Spectrum, n: &[usize]) -> Result<DecompositionOutput> {
    let sample = cfg.sample()?;
    if n.len() != s.dimension() {
        bail!("index has {} components for dimension {}", n.len(), s.dimension());
    }
    let grid = cfg.grid()?;
    let d = decompose_two_free(s, &sample, &MultiIndex::new(n.to_vec())?, &grid)?;
    let sup = |g: &GridFunction| g.sup_norm();
    let passed = d.reassembly_error <= IDENTITY_TOLERANCE && d.bilinear_gap <= IDENTITY_TOLERANCE;
    Ok(DecompositionOutput {
        schema: DECOMPOSITION_SCHEMA.into(),
        version: rectsum::VERSION.into(),
        index: n.to_vec(),
        axes: [d.axes[0] + 1, d.axes[1] + 1],
        term_sup: [sup(&d.terms[0]), sup(&d.terms[1]), sup(&d.terms[2]), sup(&d.terms[3])],
        reassembly_error: d.reassembly_error,
        bilinear_gap: d.bilinear_gap,
        passed,
    })
}
