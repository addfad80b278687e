//! Reproducible test spectra.

use std::fmt;
use std::str::FromStr;

use anyhow::{bail, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rectsum::spectral::Spectrum;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFamily {
    /// One unit coefficient at `mode`.
    SingleMode,
    /// Gaussian coefficients times `∏(1+|ν_j|)^{-β}`.
    RandomDecay,
    /// A product of independent one-dimensional `RandomDecay` factors.
    Product1d,
    /// `|c_ν|² ∝ (∏_{free} ln(|ν_α|+2))^{-1} (∏(|ν_j|+1))^{-1-ε}` with
    /// random phases: the product-weight functional converges while the
    /// plain energy decays slowly.
    WeylBorderline,
}

impl FromStr for TestFamily {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single_mode" => Ok(Self::SingleMode),
            "random_decay" => Ok(Self::RandomDecay),
            "product_1d" => Ok(Self::Product1d),
            "weyl_borderline" => Ok(Self::WeylBorderline),
            _ => bail!("unknown test family '{s}'"),
        }
    }
}

impl fmt::Display for TestFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::SingleMode => "single_mode",
            Self::RandomDecay => "random_decay",
            Self::Product1d => "product_1d",
            Self::WeylBorderline => "weyl_borderline",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestParams {
    pub bandwidth: Vec<usize>,
    pub beta: f64,
    pub epsilon: f64,
    pub mode: Vec<i64>,
    pub normalize: bool,
    /// 0-based free axes, used by `WeylBorderline`.
    pub free_axes: Vec<usize>,
}

impl TestParams {
    pub fn check(&self, family: TestFamily) -> Result<()> {
        match family {
            TestFamily::SingleMode => {
                if self.mode.len() != self.bandwidth.len() {
                    bail!(
                        "single_mode needs a mode with {} components, got {}",
                        self.bandwidth.len(),
                        self.mode.len()
                    );
                }
                if let Some((a, (m, b))) = self
                    .mode
                    .iter()
                    .zip(&self.bandwidth)
                    .enumerate()
                    .find(|(_, (m, &b))| m.unsigned_abs() as usize > b)
                {
                    bail!("mode component {m} on axis {} exceeds bandwidth {b}", a + 1);
                }
            }
            TestFamily::RandomDecay | TestFamily::Product1d => {
                if !self.beta.is_finite() || self.beta <= 0.5 {
                    bail!("beta must exceed 1/2, got {}", self.beta);
                }
            }
            TestFamily::WeylBorderline => {
                if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
                    bail!("epsilon must be positive, got {}", self.epsilon);
                }
                if self.free_axes.iter().any(|&a| a >= self.bandwidth.len()) {
                    bail!("free axis out of range");
                }
            }
        }
        Ok(())
    }
}

/// The RNG of one trial: the seed picks the key, the trial the stream, so
/// trials never share random numbers and can run in any order.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) / std::f64::consts::SQRT_2
}

fn unit_phase(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
}

fn decay(k: i64, beta: f64) -> f64 {
    (1.0 + k.unsigned_abs() as f64).powf(-beta)
}

pub fn gen_test_function(family: TestFamily, params: &TestParams, seed: u64, trial: usize) -> Result<Spectrum> {
    params.check(family)?;
    let bw = params.bandwidth.clone();
    let mut rng = trial_rng(seed, trial);
    let zero = Spectrum::zeros(bw.clone())?;
    let mut s = match family {
        TestFamily::SingleMode => Spectrum::single_mode(bw, &params.mode, Complex64::new(1.0, 0.0))?,
        TestFamily::RandomDecay => zero.map_modes(|mode, _| {
            let scale: f64 = mode.iter().map(|&k| decay(k, params.beta)).product();
            gaussian(&mut rng) * scale
        })?,
        TestFamily::Product1d => {
            let factors: Vec<Vec<Complex64>> = bw
                .iter()
                .map(|&b| {
                    (-(b as i64)..=b as i64)
                        .map(|k| gaussian(&mut rng) * decay(k, params.beta))
                        .collect()
                })
                .collect();
            zero.map_modes(|mode, _| {
                mode.iter()
                    .zip(&factors)
                    .zip(&bw)
                    .map(|((&k, f), &b)| f[(k + b as i64) as usize])
                    .product()
            })?
        }
        TestFamily::WeylBorderline => zero.map_modes(|mode, _| {
            let logs: f64 = params
                .free_axes
                .iter()
                .map(|&a| (mode[a].unsigned_abs() as f64 + 2.0).ln())
                .product();
            let poly: f64 = mode
                .iter()
                .map(|&k| (k.unsigned_abs() as f64 + 1.0).powf(-1.0 - params.epsilon))
                .product();
            unit_phase(&mut rng) * (poly / logs).sqrt()
        })?,
    };
    if params.normalize {
        let norm = s.l2_norm();
        if norm > 0.0 {
            s = s.scaled(Complex64::new(1.0 / norm, 0.0));
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rectsum::lattice::SampleJk;
    use rectsum::weyl::{product_weight, sigma_functional};

    fn params(bw: Vec<usize>) -> TestParams {
        TestParams {
            bandwidth: bw,
            beta: 2.0,
            epsilon: 0.5,
            mode: vec![1, -2, 0],
            normalize: false,
            free_axes: vec![1, 2],
        }
    }

    #[test]
    fn single_mode_has_one_unit_coefficient() {
        let s = gen_test_function(TestFamily::SingleMode, &params(vec![2, 2, 2]), 0, 0).unwrap();
        assert_eq!(s.get(&[1, -2, 0]), Complex64::new(1.0, 0.0));
        assert_eq!(s.energy(), 1.0);
    }

    #[test]
    fn same_seed_same_spectrum() {
        let p = params(vec![3, 3, 3]);
        for fam in [
            TestFamily::RandomDecay,
            TestFamily::Product1d,
            TestFamily::WeylBorderline,
        ] {
            let a = gen_test_function(fam, &p, 42, 3).unwrap();
            let b = gen_test_function(fam, &p, 42, 3).unwrap();
            assert_eq!(a, b);
            let c = gen_test_function(fam, &p, 42, 4).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn normalization_gives_unit_energy() {
        let mut p = params(vec![3, 2, 4]);
        p.normalize = true;
        let s = gen_test_function(TestFamily::RandomDecay, &p, 1, 0).unwrap();
        assert!((s.energy() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn product_family_factorizes() {
        let p = params(vec![2, 3]);
        let s = gen_test_function(TestFamily::Product1d, &p, 5, 0).unwrap();
        // c(a,b) c(a',b') = c(a,b') c(a',b) for a rank-one array.
        for (a, a2, b, b2) in [(0, 1, -3, 2), (-2, 2, 0, 1), (1, -1, 3, -3)] {
            let lhs = s.get(&[a, b]) * s.get(&[a2, b2]);
            let rhs = s.get(&[a, b2]) * s.get(&[a2, b]);
            assert!((lhs - rhs).norm() < 1e-15);
        }
    }

    #[test]
    fn borderline_functional_matches_direct_sum() {
        let p = params(vec![6, 6, 6]);
        let s = gen_test_function(TestFamily::WeylBorderline, &p, 9, 0).unwrap();
        let w = product_weight(&SampleJk::new(3, &[0]).unwrap());
        // Σ|c|²W collapses to Σ ∏(|ν_j|+1)^{-1-ε}, which factorizes per axis.
        let one_axis: f64 = (-6i64..=6).map(|k| (k.abs() as f64 + 1.0).powf(-1.5)).sum();
        let sigma = sigma_functional(&s, &w).unwrap();
        assert!((sigma - one_axis.powi(3)).abs() < 1e-12 * sigma);
        assert!(s.energy() < sigma);
    }

    #[test]
    fn parameter_checks() {
        let mut p = params(vec![2, 2, 2]);
        p.beta = 0.5;
        assert!(gen_test_function(TestFamily::RandomDecay, &p, 0, 0).is_err());
        p.mode = vec![3, 0, 0];
        assert!(gen_test_function(TestFamily::SingleMode, &p, 0, 0).is_err());
        p.mode = vec![0, 0];
        assert!(gen_test_function(TestFamily::SingleMode, &p, 0, 0).is_err());
        p.epsilon = 0.0;
        assert!(gen_test_function(TestFamily::WeylBorderline, &p, 0, 0).is_err());
    }
}
