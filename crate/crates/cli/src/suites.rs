//! Experiment suites. Each returns a [`Report`] whose `passed` flag is the
//! conjunction of its checks.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rectsum::decomp::decompose_two_free;
use rectsum::lattice::{make_lacunary, GrowthRule, JkIndexSpace, LacunaryFamily, MultiIndex, SampleJk};
use rectsum::maximal::{nested_maximal, weak_type_table};
use rectsum::seqcalc::{
    abel_identity_check, build_convex_b, build_slow_sequence, telescope_split, ConvexWeight, HyperSequence,
};
use rectsum::spectral::{
    partial_sum_at, split_lacunary_blocks, sweep, synthesize_direct, GridFunction, ShellLayout, Spectrum, TorusGrid,
};
use rectsum::weyl::{
    check_weyl_conditions, full_weight, min_pair_weight, product_weight, sigma_functional, unit_weight, WeylWeight,
};

use crate::config::{ExperimentConfig, IdentityCheck, MaximalVariant, WeightChoice};
use crate::report::{median, Report, Row};
use crate::testfn::{gen_test_function, trial_rng};

/// Largest deviation accepted by the identity suite.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;

/// Size of the coefficient shift planted by the negative control.
pub const PLANTED_SHIFT: f64 = 1e-6;

fn metrics<const K: usize>(pairs: [(&str, f64); K]) -> BTreeMap<String, f64> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn top_cap(cfg: &ExperimentConfig, step: usize) -> Result<usize> {
    Ok(cfg.caps_at(step)?.into_iter().max().unwrap_or(0))
}

// ---------------------------------------------------------------- convergence

/// Sup-grid error of lacunary partial sums whose every component is at
/// least a level, against the coefficient tail outside the level box.
pub fn run_convergence_suite(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let bw = cfg.bandwidth()?;
    let dim = cfg.dimension;
    let space = cfg.space_at(cfg.doublings)?;
    let params = cfg.test_params()?;
    let sigma_w = product_weight(&cfg.sample()?);

    let mut levels = cfg.levels.clone();
    levels.sort_unstable();
    levels.dedup();
    let indices: Vec<MultiIndex> = space
        .iter()
        .filter(|n| n.as_ref().iter().all(|&c| c >= levels[0]))
        .collect();
    // An index with smallest component m counts for every level <= m.
    let tiers: Vec<usize> = indices
        .iter()
        .map(|n| {
            let m = n.as_ref().iter().copied().min().unwrap_or(usize::MAX);
            levels.iter().filter(|&&l| l <= m).count() - 1
        })
        .collect();
    let counts: Vec<usize> = (0..levels.len())
        .map(|i| tiers.iter().filter(|&&t| t >= i).count())
        .collect();
    if let Some(i) = counts.iter().position(|&c| c == 0) {
        bail!(
            "no index of {} has all components >= {}; raise lambda_count or the caps",
            space.describe(),
            levels[i]
        );
    }
    let full = MultiIndex::new(bw.clone())?;
    let layout = ShellLayout::covering(&bw, indices.iter().chain(std::iter::once(&full)))?;
    let offsets: Vec<usize> = indices
        .iter()
        .map(|n| layout.offset(n.as_ref()).expect("covering layout"))
        .collect();
    let full_off = layout.offset(&bw).expect("covering layout");
    let tl = levels.len();

    let results: Vec<(Vec<f64>, Vec<f64>, f64, f64)> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let s = gen_test_function(cfg.family, &params, cfg.seed, trial)?;
            let per_point = sweep(&s, &grid, &layout, |t| {
                let f = t.at_offset(full_off);
                let mut worst = vec![0.0f64; tl];
                for (&o, &tier) in offsets.iter().zip(&tiers) {
                    let e = (t.at_offset(o) - f).norm();
                    if e > worst[tier] {
                        worst[tier] = e;
                    }
                }
                for i in (0..tl - 1).rev() {
                    worst[i] = worst[i].max(worst[i + 1]);
                }
                worst
            })?;
            let mut errors = vec![0.0f64; tl];
            for w in &per_point {
                for (e, &v) in errors.iter_mut().zip(w) {
                    *e = e.max(v);
                }
            }
            let tails = levels.iter().map(|&l| s.tail_l1(&vec![l; dim])).collect();
            Ok((errors, tails, s.energy(), sigma_functional(&s, &sigma_w)?))
        })
        .collect::<Result<_>>()?;

    let mut report = Report::new("converge", cfg);
    report.notes.push(format!("index space {}", space.describe()));
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_rise = f64::NEG_INFINITY;
    for (trial, (errors, tails, energy, sigma)) in results.iter().enumerate() {
        for i in 0..tl {
            report.rows.push(Row {
                trial,
                cap: levels[i],
                metrics: metrics([
                    ("error", errors[i]),
                    ("tail_bound", tails[i]),
                    ("indices", counts[i] as f64),
                    ("energy", *energy),
                    ("sigma", *sigma),
                ]),
            });
            worst_excess = worst_excess.max(errors[i] - tails[i]);
            if i > 0 {
                worst_rise = worst_rise.max(errors[i] - errors[i - 1]);
            }
        }
    }
    for (i, &l) in levels.iter().enumerate() {
        let max_err = results.iter().map(|r| r.0[i]).fold(0.0, f64::max);
        report.summary.insert(format!("max_error@{l}"), max_err);
    }
    report.summary.insert("trials".into(), cfg.trials as f64);
    if results.is_empty() {
        report.notes.push("no trials".into());
    } else {
        report.check("error_within_tail_bound", worst_excess <= 0.0, worst_excess, 0.0);
        if tl > 1 {
            report.check("error_nonincreasing_in_level", worst_rise <= 0.0, worst_rise, 0.0);
        }
    }
    report.add_curve("error");
    report.add_curve("tail_bound");
    Ok(report)
}

// -------------------------------------------------------------------- maximal

pub fn weighted_weight(cfg: &ExperimentConfig, sample: &SampleJk) -> Result<WeylWeight> {
    Ok(match cfg.weight {
        WeightChoice::Product => product_weight(sample),
        WeightChoice::Minpair => min_pair_weight(sample).context("minpair weight")?,
        WeightChoice::Full => full_weight(cfg.dimension),
    })
}

/// Maximal ratios over the doubling cap schedule, their stabilization
/// quotients, and the weak-type constant of the unweighted maximal function.
pub fn run_maximal_suite(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let spaces = cfg.space_schedule()?;
    let sample = cfg.sample()?;
    let params = cfg.test_params()?;
    let weighted = weighted_weight(cfg, &sample)?;
    let unit = unit_weight(cfg.dimension);
    let sigma_w = product_weight(&sample);
    let energy_w = match cfg.variant {
        MaximalVariant::Weighted => None,
        MaximalVariant::MinPairEnergy => {
            Some(min_pair_weight(&sample).context("the min_pair_energy variant needs exactly two free axes")?)
        }
    };
    let alphas = cfg.alpha.values();
    let caps: Vec<usize> = (0..spaces.len()).map(|i| top_cap(cfg, i)).collect::<Result<_>>()?;

    struct Trial {
        ratio: Vec<f64>,
        weak: Option<Vec<f64>>,
        rows: Vec<BTreeMap<String, f64>>,
    }

    let trials: Vec<Trial> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let s = gen_test_function(cfg.family, &params, cfg.seed, trial)?;
            let reports = nested_maximal(&s, &spaces, &[&weighted, &unit], &grid)?;
            let sigma = sigma_functional(&s, &sigma_w)?;
            let sigma0 = energy_w.as_ref().map(|w| sigma_functional(&s, w)).transpose()?;
            let mut ratio = Vec::with_capacity(spaces.len());
            let mut weak = (sigma > 0.0).then(Vec::new);
            let mut rows = Vec::with_capacity(spaces.len());
            for (wr, ur) in reports[0].iter().zip(&reports[1]) {
                let r = match sigma0 {
                    None => wr.ratio,
                    Some(s0) if s0 > 0.0 => ur.l2_norm * ur.l2_norm / s0,
                    Some(_) => 0.0,
                };
                let mut m = metrics([
                    ("ratio", r),
                    ("weighted_ratio", wr.ratio),
                    ("weighted_sup", wr.sup()),
                    ("unweighted_ratio", ur.ratio),
                    ("unweighted_sup", ur.sup()),
                    ("input_l2_norm", wr.input_l2_norm),
                    ("sigma", sigma),
                ]);
                if let Some(s0) = sigma0 {
                    m.insert("sigma0".into(), s0);
                }
                if let Some(w) = weak.as_mut() {
                    let table = weak_type_table(ur, sigma, &alphas)?;
                    m.insert("weak_type_max".into(), table.max_ratio);
                    m.insert("weak_type_argmax_alpha".into(), table.argmax_alpha);
                    w.push(table.max_ratio);
                }
                ratio.push(r);
                rows.push(m);
            }
            Ok(Trial { ratio, weak, rows })
        })
        .collect::<Result<_>>()?;

    let mut report = Report::new("maximal", cfg);
    for sp in &spaces {
        report.notes.push(format!("index space {}", sp.describe()));
    }
    report.notes.push(format!("weight {}", weighted.describe()));
    report
        .notes
        .push(format!("coefficient functional weight {}", sigma_w.describe()));
    report.summary.insert("trials".into(), cfg.trials as f64);
    if trials.is_empty() {
        report.notes.push("no trials".into());
        return Ok(report);
    }

    let quotient = |v: &[f64]| -> Option<f64> {
        let n = v.len();
        (n >= 2 && v[n - 2] > 0.0).then(|| v[n - 1] / v[n - 2])
    };
    let mut quotients = Vec::new();
    let mut weak_quotients = Vec::new();
    let mut worst_drop = 0.0f64;
    let mut monotone = true;
    let mut weak_finite = true;
    let mut max_weak = 0.0f64;
    for (t, tr) in trials.into_iter().enumerate() {
        for pair in tr.ratio.windows(2) {
            if pair[1] < pair[0] {
                monotone = false;
                worst_drop = worst_drop.max(pair[0] - pair[1]);
            }
        }
        let q = quotient(&tr.ratio);
        let wq = tr.weak.as_deref().and_then(quotient);
        if let Some(w) = &tr.weak {
            weak_finite &= w.iter().all(|v| v.is_finite());
            max_weak = w.iter().copied().filter(|v| v.is_finite()).fold(max_weak, f64::max);
        } else {
            report.notes.push(format!(
                "trial {t}: coefficient functional vanishes, no weak-type table"
            ));
        }
        let last = tr.rows.len() - 1;
        for (step, mut m) in tr.rows.into_iter().enumerate() {
            if step == last {
                if let Some(q) = q {
                    m.insert("quotient".into(), q);
                }
                if let Some(wq) = wq {
                    m.insert("weak_type_quotient".into(), wq);
                }
            }
            report.rows.push(Row {
                trial: t,
                cap: caps[step],
                metrics: m,
            });
        }
        quotients.extend(q);
        weak_quotients.extend(wq);
    }
    let max_ratio = report.rows.iter().map(|r| r.metrics["ratio"]).fold(0.0, f64::max);
    report.summary.insert("max_ratio".into(), max_ratio);
    report.summary.insert("max_weak_type_ratio".into(), max_weak);
    report.check("ratio_nondecreasing_in_cap", monotone, worst_drop, 0.0);
    report.check("weak_type_finite", weak_finite, max_weak, f64::MAX);
    if let Some(mq) = median(&quotients) {
        report.summary.insert("median_quotient".into(), mq);
        report
            .summary
            .insert("max_quotient".into(), quotients.iter().copied().fold(0.0, f64::max));
        report.check_at_most("median_quotient", mq, cfg.threshold);
    }
    if let Some(mq) = median(&weak_quotients) {
        report.summary.insert("median_weak_type_quotient".into(), mq);
        report.check_at_most("median_weak_type_quotient", mq, cfg.threshold);
    }
    report.add_curve("ratio");
    report.add_curve("weak_type_max");
    Ok(report)
}

// ------------------------------------------------------------------ identities

fn random_spectrum(rng: &mut ChaCha8Rng, bandwidth: Vec<usize>) -> Result<Spectrum> {
    let len: usize = bandwidth.iter().map(|b| 2 * b + 1).product();
    let coeffs = (0..len)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    Ok(Spectrum::new(bandwidth, coeffs)?)
}

fn plant(s: &Spectrum, planted: bool) -> Result<Spectrum> {
    let mut out = s.clone();
    if planted {
        let zero = vec![0i64; s.dimension()];
        out.set(&zero, s.get(&zero) + PLANTED_SHIFT)?;
    }
    Ok(out)
}

/// A convex, nonincreasing, positive weight with at least `len` terms,
/// built from random decreasing tails.
pub fn random_convex_weight(rng: &mut ChaCha8Rng, len: usize) -> Result<ConvexWeight> {
    let steps: Vec<f64> = (0..len).map(|_| rng.random_range(0.05..1.0)).collect();
    let mut tails = vec![0.0; len];
    let mut acc = 0.0;
    for (t, s) in tails.iter_mut().zip(&steps).rev() {
        acc += s;
        *t = acc;
    }
    Ok(build_convex_b(&build_slow_sequence(&tails)?))
}

fn abel_case(rng: &mut ChaCha8Rng, size: usize, planted: bool) -> Result<f64> {
    let nu = rng.random_range(1..=3);
    let n: Vec<usize> = (0..nu).map(|_| rng.random_range(2..=size.max(2))).collect();
    let len = n.iter().map(|v| v + 1).product();
    let a = HyperSequence::new(n.clone(), (0..len).map(|_| rng.random_range(-1.0..1.0)).collect())?;
    let b = random_convex_weight(rng, n.iter().max().copied().unwrap_or(0) + 3)?;
    let check = abel_identity_check(&a, &b, &n)?;
    if !planted {
        return Ok(check.difference);
    }
    let shifted = HyperSequence::new(
        n.clone(),
        a.values().iter().map(|v| v * (1.0 + PLANTED_SHIFT)).collect(),
    )?;
    Ok((check.lhs - abel_identity_check(&shifted, &b, &n)?.rhs).abs())
}

/// Shell-tensor partial sums against direct summation for every index of
/// the box `0..=size` on an 8³ grid.
fn shell_case(rng: &mut ChaCha8Rng, size: usize, planted: bool) -> Result<f64> {
    let s = random_spectrum(rng, vec![3; 3])?;
    let oracle = plant(&s, planted)?;
    let grid = TorusGrid::cube(3, 8)?;
    let side = size + 1;
    let indices: Vec<[usize; 3]> = (0..side * side * side)
        .map(|i| [i / (side * side), (i / side) % side, i % side])
        .collect();
    let layout = ShellLayout::covering(s.bandwidth(), &indices)?;
    let values = sweep(&s, &grid, &layout, |t| {
        indices.iter().map(|n| t.partial_sum(n)).collect::<Vec<_>>()
    })?;
    let mut worst = 0.0f64;
    for (flat, row) in values.iter().enumerate() {
        let x = grid.point(flat);
        for (n, v) in indices.iter().zip(row) {
            worst = worst.max((v - partial_sum_at(&oracle, n, &x)?).norm());
        }
    }
    Ok(worst)
}

/// `S_n` by direct summation of the truncated spectrum.
fn direct_partial_sum(s: &Spectrum, n: &MultiIndex, grid: &TorusGrid) -> Result<GridFunction> {
    let clamped = s.clamp_index(n.as_ref())?;
    Ok(synthesize_direct(&s.truncated(&clamped.index)?, grid)?)
}

fn family_reaching(q: f64, top: usize) -> Result<LacunaryFamily> {
    let mut count = 1;
    loop {
        let fam = make_lacunary(q, count, GrowthRule::Minimal)?;
        if fam.last() >= top {
            return Ok(fam);
        }
        count += 1;
    }
}

/// Random `N = 3` case with `J = {1}`: spectrum of bandwidth `size`, an
/// index with a lacunary first component and free components in
/// `min_free..=size`.
fn index_case(
    rng: &mut ChaCha8Rng,
    size: usize,
    min_free: usize,
) -> Result<(Spectrum, JkIndexSpace, MultiIndex, TorusGrid)> {
    let s = random_spectrum(rng, vec![size; 3])?;
    let sample = SampleJk::new(3, &[0])?;
    let fam = family_reaching(2.0, size.max(1))?;
    let space = JkIndexSpace::uniform(sample, fam.clone(), size)?;
    let lac = fam.terms()[rng.random_range(0..fam.len())];
    let n = MultiIndex::new(vec![
        lac,
        rng.random_range(min_free..=size),
        rng.random_range(min_free..=size),
    ])?;
    let grid = TorusGrid::cube(3, 2 * size + 2)?;
    Ok((s, space, n, grid))
}

fn telescope_case(rng: &mut ChaCha8Rng, size: usize, planted: bool) -> Result<f64> {
    let (s, space, n, grid) = index_case(rng, size.max(1), 1)?;
    let tel = telescope_split(&s, &space, &n, &grid)?;
    let reference = direct_partial_sum(&plant(&s, planted)?, &n, &grid)?;
    Ok(tel.reassemble()?.max_abs_diff(&reference))
}

fn decomposition_case(rng: &mut ChaCha8Rng, size: usize, planted: bool) -> Result<f64> {
    let (s, space, n, grid) = index_case(rng, size, 0)?;
    let d = decompose_two_free(&s, space.sample(), &n, &grid)?;
    let reference = direct_partial_sum(&plant(&s, planted)?, &n, &grid)?;
    Ok(d.sum.max_abs_diff(&reference).max(d.bilinear_gap))
}

/// Largest `|g1 + g2 − f|` coefficient and the number of frequencies not
/// carried by exactly one of `g1`, `g2`, over ratios 1.5, 2 and 3.
fn blocks_case(rng: &mut ChaCha8Rng, size: usize, planted: bool) -> Result<(f64, f64)> {
    let b = (8 * size).clamp(1, 64);
    let s = random_spectrum(rng, vec![b, 2])?;
    let oracle = plant(&s, planted)?;
    let zero = Complex64::new(0.0, 0.0);
    let mut worst = 0.0f64;
    let mut misplaced = 0usize;
    for q in [1.5, 2.0, 3.0] {
        let fam = family_reaching(q, b)?;
        let split = split_lacunary_blocks(&s, 0, &fam)?;
        if !split.uncovered.is_empty() {
            bail!("family {:?} leaves frequencies uncovered", fam.terms());
        }
        oracle.for_each_mode(|mode, c| {
            let (g1, g2) = (split.odd.get(mode), split.even.get(mode));
            worst = worst.max((g1 + g2 - c).norm());
            let exclusive = (g1 == zero) != (g2 == zero);
            if c != zero && !exclusive {
                misplaced += 1;
            }
        });
    }
    Ok((worst, misplaced as f64))
}

/// Exact identities on random cases: one row per (case, box size). With
/// `cfg.planted` set, every oracle sees a shifted coefficient and the suite
/// must fail.
pub fn run_identity_suite(cfg: &ExperimentConfig) -> Result<Report> {
    let planted = cfg.planted;
    let mut checks = cfg.checks.clone();
    checks.sort_unstable();
    checks.dedup();
    let jobs: Vec<(usize, usize)> = cfg
        .sizes
        .iter()
        .flat_map(|&size| (0..cfg.cases).map(move |case| (case, size)))
        .collect();
    let rows: Vec<Row> = jobs
        .par_iter()
        .enumerate()
        .map(|(ordinal, &(case, size))| {
            let mut rng = trial_rng(cfg.seed, ordinal);
            let mut m = BTreeMap::new();
            for check in &checks {
                match check {
                    IdentityCheck::Abel => {
                        m.insert("abel".to_string(), abel_case(&mut rng, size, planted)?);
                    }
                    IdentityCheck::Shell => {
                        m.insert("shell".to_string(), shell_case(&mut rng, size, planted)?);
                    }
                    IdentityCheck::Telescope => {
                        m.insert("telescope".to_string(), telescope_case(&mut rng, size, planted)?);
                    }
                    IdentityCheck::Decomposition => {
                        m.insert(
                            "decomposition".to_string(),
                            decomposition_case(&mut rng, size, planted)?,
                        );
                    }
                    IdentityCheck::Blocks => {
                        let (dev, misplaced) = blocks_case(&mut rng, size, planted)?;
                        m.insert("blocks".to_string(), dev);
                        m.insert("blocks_misplaced".to_string(), misplaced);
                    }
                }
            }
            Ok(Row {
                trial: case,
                cap: size,
                metrics: m,
            })
        })
        .collect::<Result<_>>()?;

    let mut report = Report::new("identities", cfg);
    report.rows = rows;
    report.summary.insert("cases".into(), report.rows.len() as f64);
    if planted {
        report.notes.push(format!("planted coefficient shift {PLANTED_SHIFT}"));
    }
    if report.rows.is_empty() {
        report.notes.push("no cases".into());
        return Ok(report);
    }
    let names: Vec<String> = report.rows[0].metrics.keys().cloned().collect();
    for name in names {
        let worst = report.rows.iter().map(|r| r.metrics[&name]).fold(0.0, f64::max);
        report.summary.insert(format!("max_{name}"), worst);
        let limit = if name == "blocks_misplaced" {
            0.0
        } else {
            IDENTITY_TOLERANCE
        };
        report.check_at_most(&name, worst, limit);
    }
    Ok(report)
}

// ----------------------------------------------------------------------- weyl

/// Exhaustive positivity, evenness and monotonicity checks of the product,
/// min-pair (when the sample leaves two free axes) and full weights.
pub fn run_weyl_suite(cfg: &ExperimentConfig) -> Result<Report> {
    let sample = cfg.sample()?;
    let mut weights = vec![product_weight(&sample)];
    if sample.free_axes().len() == 2 {
        weights.push(min_pair_weight(&sample)?);
    }
    weights.push(full_weight(cfg.dimension));
    let bound = vec![cfg.weyl_bound; cfg.dimension];
    let mut report = Report::new("weyl", cfg);
    for (i, w) in weights.iter().enumerate() {
        let r = check_weyl_conditions(w, &bound)?;
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        report.rows.push(Row {
            trial: i,
            cap: cfg.weyl_bound,
            metrics: metrics([
                ("positivity", flag(r.positivity.passed)),
                ("symmetry", flag(r.symmetry.passed)),
                ("monotonicity", flag(r.monotonicity.passed)),
            ]),
        });
        for (cond, outcome) in [
            ("positivity", &r.positivity),
            ("symmetry", &r.symmetry),
            ("monotonicity", &r.monotonicity),
        ] {
            if let (Some(wit), Some(detail)) = (&outcome.witness, &outcome.detail) {
                report
                    .notes
                    .push(format!("{}: {cond} fails at {wit:?}: {detail}", r.weight));
            }
        }
        report.check(&r.weight, r.passed(), flag(r.passed()), 1.0);
    }
    Ok(report)
}

#[cfg(test)]
#[allow(clippy::field_reassign_with_default)]
mod tests {
    use super::*;
    use crate::testfn::TestFamily;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.bandwidth = vec![2, 4, 4];
        cfg.grid = vec![6, 10, 10];
        cfg.free_cap = vec![2];
        cfg.doublings = 1;
        cfg.trials = 3;
        cfg.levels = vec![1, 2, 4];
        cfg
    }

    #[test]
    fn convergence_small() {
        let r = run_convergence_suite(&small()).unwrap();
        assert!(r.passed, "{:?}", r.checks);
        assert_eq!(r.rows.len(), 3 * 3);
        // Level 4 = bandwidth: all indices sum the whole spectrum.
        assert!(r
            .rows
            .iter()
            .filter(|row| row.cap == 4)
            .all(|row| row.metrics["error"] == 0.0));
    }

    #[test]
    fn convergence_trig_polynomial_exhausted() {
        let mut cfg = small();
        cfg.family = TestFamily::SingleMode;
        cfg.mode = vec![1, -1, 0];
        let r = run_convergence_suite(&cfg).unwrap();
        assert!(r.passed);
        assert!(r.rows.iter().all(|row| row.metrics["error"] == 0.0));
    }

    #[test]
    fn convergence_rejects_unreachable_level() {
        let mut cfg = small();
        cfg.levels = vec![64];
        assert!(run_convergence_suite(&cfg).is_err());
    }

    #[test]
    fn maximal_small() {
        let r = run_maximal_suite(&small()).unwrap();
        assert_eq!(r.rows.len(), 3 * 2);
        assert!(r
            .checks
            .iter()
            .any(|c| c.name == "ratio_nondecreasing_in_cap" && c.passed));
        assert!(r
            .rows
            .iter()
            .filter(|row| row.cap == 4)
            .all(|row| row.metrics.contains_key("quotient")));
    }

    #[test]
    fn maximal_zero_trials() {
        let mut cfg = small();
        cfg.trials = 0;
        let r = run_maximal_suite(&cfg).unwrap();
        assert!(r.rows.is_empty() && r.passed);
        assert!(r.notes.iter().any(|n| n == "no trials"));
        crate::report::Report::from_json(&r.to_json().unwrap()).unwrap();
    }

    #[test]
    fn maximal_single_mode_closed_form() {
        // c_(1,2,3) = 1 with J = {1}, family [1,2,4], caps 4 >= (2,3):
        // M ≡ (ln 4 · ln 5)^{-1/2} and ‖f‖ = 1.
        let mut cfg = small();
        cfg.bandwidth = vec![4, 4, 4];
        cfg.grid = vec![10];
        cfg.free_cap = vec![4];
        cfg.doublings = 0;
        cfg.trials = 1;
        cfg.family = TestFamily::SingleMode;
        cfg.mode = vec![1, 2, 3];
        let r = run_maximal_suite(&cfg).unwrap();
        let expect = 1.0 / (4f64.ln() * 5f64.ln()).sqrt();
        assert!((r.rows[0].metrics["ratio"] - expect).abs() < 1e-12);
    }

    #[test]
    fn min_pair_energy_variant() {
        let mut cfg = small();
        cfg.variant = MaximalVariant::MinPairEnergy;
        let r = run_maximal_suite(&cfg).unwrap();
        for row in &r.rows {
            let m = &row.metrics;
            let expect = m["unweighted_ratio"].powi(2) * m["input_l2_norm"].powi(2) / m["sigma0"];
            assert!((m["ratio"] - expect).abs() < 1e-12 * expect);
        }
        let mut bad = small();
        bad.dimension = 4;
        bad.bandwidth = vec![2];
        bad.grid = vec![6];
        bad.variant = MaximalVariant::MinPairEnergy;
        assert!(run_maximal_suite(&bad).is_err());
    }

    #[test]
    fn identities_pass_and_planted_fails() {
        let mut cfg = ExperimentConfig::default();
        cfg.sizes = vec![2, 3];
        cfg.cases = 2;
        let r = run_identity_suite(&cfg).unwrap();
        assert!(r.passed, "{:?}", r.checks);
        assert_eq!(r.rows.len(), 4);
        cfg.planted = true;
        let bad = run_identity_suite(&cfg).unwrap();
        assert!(!bad.passed);
        for c in bad.checks.iter().filter(|c| c.name != "blocks_misplaced") {
            assert!(!c.passed && c.value > 0.0, "{c:?}");
        }
    }

    #[test]
    fn identities_without_sizes() {
        let mut cfg = ExperimentConfig::default();
        cfg.sizes.clear();
        let r = run_identity_suite(&cfg).unwrap();
        assert!(r.passed && r.rows.is_empty());
        assert!(r.notes.iter().any(|n| n == "no cases"));
    }

    #[test]
    fn weyl_suite_passes() {
        let mut cfg = ExperimentConfig::default();
        cfg.weyl_bound = 6;
        let r = run_weyl_suite(&cfg).unwrap();
        assert!(r.passed);
        assert_eq!(r.rows.len(), 3);
    }
}
