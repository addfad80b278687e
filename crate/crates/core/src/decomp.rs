//! Two-free-axis machinery: the weight `l(t,q) = 1/ln(min(|t|,|q|)+2)`, its
//! differences, the four-term summation-by-parts decomposition of a partial
//! sum, and sums of partial sums over averaged free axes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{JkIndexSpace, MultiIndex, SampleJk};
use crate::spectral::{partial_sum, sweep, GridFunction, ShellLayout, Spectrum, TorusGrid};
use crate::weyl::log2p;

/// `l(t, q) = 1 / ln(min(|t|, |q|) + 2)`.
pub fn l_weight(t: i64, q: i64) -> f64 {
    1.0 / log2p(t.unsigned_abs().min(q.unsigned_abs()))
}

/// `Δl(s) = l(s, s) − l(s+1, s+1)` for `s >= 0`.
pub fn delta_l_diagonal(s: usize) -> f64 {
    let s = s as i64;
    l_weight(s, s) - l_weight(s + 1, s + 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LDifferences {
    /// `Δ_q l(t, q) = l(t, q) − l(t, q+1)`
    pub dq: f64,
    /// `Δ_t Δ_q l(t, q) = l(t,q) − l(t+1,q) − l(t,q+1) + l(t+1,q+1)`
    pub dtdq: f64,
}

pub fn l_differences(t: i64, q: i64) -> LDifferences {
    let dq = l_weight(t, q) - l_weight(t, q + 1);
    let dtdq = l_weight(t, q) - l_weight(t + 1, q) - l_weight(t, q + 1) + l_weight(t + 1, q + 1);
    LDifferences { dq, dtdq }
}

fn check_pair(dimension: usize, axes: [usize; 2]) -> Result<()> {
    if axes[0] == axes[1] || axes.iter().any(|&a| a >= dimension) {
        return Err(Error::InvalidArgument(format!(
            "axes {:?} are not two distinct axes of a {dimension}-dimensional spectrum",
            axes
        )));
    }
    Ok(())
}

/// Spectrum of `g` with `c_m(f) = c_m(g) l(m_a, m_b)` on the axis pair `axes`.
pub fn coefficient_transfer(s_f: &Spectrum, axes: [usize; 2]) -> Result<Spectrum> {
    check_pair(s_f.dimension(), axes)?;
    s_f.map_modes(|m, c| c / l_weight(m[axes[0]], m[axes[1]]))
}

/// Inverse of [`coefficient_transfer`]: `c_m(f) = c_m(g) l(m_a, m_b)`.
pub fn coefficient_transfer_back(s_g: &Spectrum, axes: [usize; 2]) -> Result<Spectrum> {
    check_pair(s_g.dimension(), axes)?;
    s_g.map_modes(|m, c| c * l_weight(m[axes[0]], m[axes[1]]))
}

type TermPair = ([Complex64; 4], [Complex64; 4]);

/// The four terms of the decomposition on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionResult {
    pub index: MultiIndex,
    pub axes: [usize; 2],
    /// Spectrum of `g`.
    pub g: Spectrum,
    /// `I⁽¹⁾..I⁽⁴⁾` from the closed forms on the diagonal.
    pub terms: [GridFunction; 4],
    /// The same four terms from the full double summation by parts.
    pub bilinear_terms: [GridFunction; 4],
    pub sum: GridFunction,
    /// `S_n(x; f)` evaluated from the spectrum of `f`.
    pub reference: GridFunction,
    /// `max |Σ I⁽ʲ⁾ − S_n(f)|` over the grid.
    pub reassembly_error: f64,
    /// Largest gap between closed-form and double-sum terms.
    pub bilinear_gap: f64,
}

/// Splits `S_n(x; f)` along the two free axes of `sample` into
///
/// * `I⁽¹⁾ = −Σ_{t<n₀} S_{n′,t,t}(g) Δl(t)`
/// * `I⁽²⁾ = Σ_{q<n₀} S_{n′,n_a,q}(g) Δl(q)`
/// * `I⁽³⁾ = Σ_{t<n₀} S_{n′,t,n_b}(g) Δl(t)`
/// * `I⁽⁴⁾ = S_n(g) l(n_a, n_b)`
///
/// with `n₀ = min(n_a, n_b)` and `g` from [`coefficient_transfer`]. The
/// mixed difference `Δ_tΔ_q l(t,t)` equals `−Δl(t)`, which fixes the sign of
/// `I⁽¹⁾`.
pub fn decompose_two_free(
    s_f: &Spectrum,
    sample: &SampleJk,
    n: &MultiIndex,
    grid: &TorusGrid,
) -> Result<DecompositionResult> {
    let dim = s_f.dimension();
    if dim < 3 {
        return Err(Error::InvalidArgument(format!(
            "the decomposition needs N >= 3, got {dim}"
        )));
    }
    if sample.dimension() != dim || n.dimension() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: if sample.dimension() != dim {
                sample.dimension()
            } else {
                n.dimension()
            },
        });
    }
    let free = sample.free_axes();
    if free.len() != 2 {
        return Err(Error::WrongFreeAxisCount {
            expected: 2,
            found: free.len(),
        });
    }
    let axes = [free[0], free[1]];
    let (na, nb) = (n[axes[0]], n[axes[1]]);
    let n0 = na.min(nb);
    let g = coefficient_transfer(s_f, axes)?;

    let mut needed = Vec::with_capacity((na + 1) * (nb + 1));
    for t in 0..=na {
        for q in 0..=nb {
            needed.push(n.with(axes[0], t).with(axes[1], q));
        }
    }
    let layout = ShellLayout::covering(g.bandwidth(), &needed)?;
    let dl: Vec<f64> = (0..=n0).map(delta_l_diagonal).collect();
    let lt = |t: usize, q: usize| l_weight(t as i64, q as i64);

    let values = sweep(&g, grid, &layout, |tensor| {
        let v = |t: usize, q: usize| tensor.partial_sum(&n.with(axes[0], t).with(axes[1], q));
        let mut closed = [Complex64::new(0.0, 0.0); 4];
        for (t, &d) in dl.iter().enumerate().take(n0) {
            closed[0] -= v(t, t) * d;
            closed[1] += v(na, t) * d;
            closed[2] += v(t, nb) * d;
        }
        closed[3] = v(na, nb) * lt(na, nb);

        let mut bilinear = [Complex64::new(0.0, 0.0); 4];
        for q in 0..nb {
            for t in 0..na {
                let d = l_differences(t as i64, q as i64).dtdq;
                if d != 0.0 {
                    bilinear[0] += v(t, q) * d;
                }
            }
            bilinear[1] += v(na, q) * (lt(na, q) - lt(na, q + 1));
        }
        for t in 0..na {
            bilinear[2] += v(t, nb) * (lt(t, nb) - lt(t + 1, nb));
        }
        bilinear[3] = v(na, nb) * lt(na, nb);
        (closed, bilinear)
    })?;

    let column =
        |pick: &dyn Fn(&TermPair) -> Complex64| GridFunction::new(grid.clone(), values.iter().map(pick).collect());
    let terms = [
        column(&|p| p.0[0])?,
        column(&|p| p.0[1])?,
        column(&|p| p.0[2])?,
        column(&|p| p.0[3])?,
    ];
    let bilinear_terms = [
        column(&|p| p.1[0])?,
        column(&|p| p.1[1])?,
        column(&|p| p.1[2])?,
        column(&|p| p.1[3])?,
    ];
    let sum = column(&|p| p.0.iter().sum())?;
    let reference = partial_sum(s_f, n, grid)?;
    let reassembly_error = sum.max_abs_diff(&reference);
    let bilinear_gap = terms
        .iter()
        .zip(&bilinear_terms)
        .map(|(a, b)| a.max_abs_diff(b))
        .fold(0.0, f64::max);
    Ok(DecompositionResult {
        index: n.clone(),
        axes,
        g,
        terms,
        bilinear_terms,
        sum,
        reference,
        reassembly_error,
        bilinear_gap,
    })
}

fn check_averaged(space: &JkIndexSpace, averaged: &[usize], caps: &[usize], n: &MultiIndex) -> Result<()> {
    if n.dimension() != space.dimension() {
        return Err(Error::DimensionMismatch {
            expected: space.dimension(),
            found: n.dimension(),
        });
    }
    if averaged.len() != caps.len() {
        return Err(Error::InvalidArgument("one cap per averaged axis required".into()));
    }
    for &a in averaged {
        if a >= space.dimension() || !space.sample().is_free(a) {
            return Err(Error::AxisNotFree(a));
        }
    }
    let mut sorted = averaged.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != averaged.len() {
        return Err(Error::InvalidArgument("averaged axes repeat".into()));
    }
    Ok(())
}

/// `Q = Σ_{n_{a_1}=0}^{p_1} ⋯ Σ_{n_{a_s}=0}^{p_s} S_n(x; f)`, where the
/// averaged free components of `n` run over `0..=p` and all other
/// components are taken from `n`.
pub fn q_operator(
    s: &Spectrum,
    space: &JkIndexSpace,
    averaged: &[usize],
    caps: &[usize],
    n: &MultiIndex,
    grid: &TorusGrid,
) -> Result<GridFunction> {
    check_averaged(space, averaged, caps, n)?;
    let mut indices = vec![n.clone()];
    for (&a, &p) in averaged.iter().zip(caps) {
        indices = indices
            .into_iter()
            .flat_map(|base| (0..=p).map(move |v| base.with(a, v)))
            .collect();
    }
    let layout = ShellLayout::covering(s.bandwidth(), &indices)?;
    let offsets: Vec<usize> = indices
        .iter()
        .map(|m| layout.offset(m).expect("covering layout"))
        .collect();
    let values = sweep(s, grid, &layout, |t| offsets.iter().map(|&o| t.at_offset(o)).sum())?;
    GridFunction::new(grid.clone(), values)
}

/// [`q_operator`] through Cesàro weights: `Σ_{r=0}^{p} S_r` along an axis
/// multiplies `c_ν` by `(p + 1 − |ν|)_+`, so `Q` is one partial sum of the
/// reweighted spectrum at `n_a = p`.
pub fn q_operator_cesaro(
    s: &Spectrum,
    space: &JkIndexSpace,
    averaged: &[usize],
    caps: &[usize],
    n: &MultiIndex,
    grid: &TorusGrid,
) -> Result<GridFunction> {
    check_averaged(space, averaged, caps, n)?;
    let weighted = s.map_modes(|m, c| {
        let mut f = 1.0;
        for (&a, &p) in averaged.iter().zip(caps) {
            f *= (p as f64 + 1.0 - m[a].unsigned_abs() as f64).max(0.0);
        }
        c * f
    })?;
    let mut idx = n.clone();
    for (&a, &p) in averaged.iter().zip(caps) {
        idx = idx.with(a, p);
    }
    partial_sum(&weighted, &idx, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LacunaryFamily;
    use crate::weyl::{min_pair_weight, sigma_functional};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spectrum(bandwidth: Vec<usize>, seed: u64) -> Spectrum {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = bandwidth.iter().map(|b| 2 * b + 1).product();
        let coeffs = (0..len)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        Spectrum::new(bandwidth, coeffs).unwrap()
    }

    #[test]
    fn l_values() {
        assert!((l_weight(0, 0) - 1.0 / std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(l_weight(3, -8), l_weight(-8, 3));
        assert_eq!(l_weight(5, 100), l_weight(5, 7));
        assert!((l_weight(5, 7) - 1.0 / 7f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn l_difference_values() {
        assert_eq!(l_differences(3, 5).dq, 0.0);
        let d = l_differences(5, 3).dq;
        assert!((d - (1.0 / 5f64.ln() - 1.0 / 6f64.ln())).abs() < 1e-15);
        // on the diagonal the mixed difference is −Δl
        for t in 0..20 {
            assert!((l_differences(t, t).dtdq + delta_l_diagonal(t as usize)).abs() < 1e-15);
        }
    }

    #[test]
    fn mixed_difference_vanishes_off_diagonal() {
        for t in -64i64..=64 {
            for q in -64i64..=64 {
                if t != q && t >= 0 && q >= 0 {
                    assert_eq!(l_differences(t, q).dtdq, 0.0, "t={t} q={q}");
                }
            }
        }
    }

    #[test]
    fn transfer_round_trip_and_energy() {
        let s = random_spectrum(vec![2, 3, 3], 1);
        let g = coefficient_transfer(&s, [1, 2]).unwrap();
        let back = coefficient_transfer_back(&g, [1, 2]).unwrap();
        for (a, b) in back.coeffs().iter().zip(s.coeffs()) {
            assert!((a - b).norm() <= 1e-15 * (1.0 + b.norm()));
        }
        let one = Spectrum::single_mode(vec![1, 1, 1], &[1, 0, 0], Complex64::new(2.0, 0.0)).unwrap();
        let g1 = coefficient_transfer(&one, [1, 2]).unwrap();
        assert!((g1.get(&[1, 0, 0]).re - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
        let w = min_pair_weight(&SampleJk::new(3, &[0]).unwrap()).unwrap();
        assert!((g.energy() - sigma_functional(&s, &w).unwrap()).abs() < 1e-10 * g.energy());
        assert!(coefficient_transfer(&s, [1, 1]).is_err());
    }

    #[test]
    fn decomposition_reassembles() {
        let sample = SampleJk::new(3, &[0]).unwrap();
        let grid = TorusGrid::cube(3, 8).unwrap();
        let s = random_spectrum(vec![3, 3, 3], 7);
        let n = MultiIndex::new(vec![4, 5, 3]).unwrap();
        let r = decompose_two_free(&s, &sample, &n, &grid).unwrap();
        assert!(r.reassembly_error <= 1e-10, "{}", r.reassembly_error);
        assert!(r.bilinear_gap <= 1e-12, "{}", r.bilinear_gap);
    }

    #[test]
    fn decomposition_edge_cases() {
        let sample = SampleJk::new(3, &[0]).unwrap();
        let grid = TorusGrid::cube(3, 6).unwrap();
        let zero = Spectrum::zeros(vec![2, 2, 2]).unwrap();
        let n = MultiIndex::new(vec![1, 2, 2]).unwrap();
        let r = decompose_two_free(&zero, &sample, &n, &grid).unwrap();
        assert!(r.terms.iter().all(|t| t.sup_norm() == 0.0));

        let s = random_spectrum(vec![2, 2, 2], 3);
        let n00 = MultiIndex::new(vec![2, 0, 0]).unwrap();
        let r = decompose_two_free(&s, &sample, &n00, &grid).unwrap();
        for t in &r.terms[..3] {
            assert_eq!(t.sup_norm(), 0.0);
        }
        assert!(r.terms[3].max_abs_diff(&r.reference) < 1e-12);

        let two = Spectrum::zeros(vec![2, 2]).unwrap();
        assert!(decompose_two_free(
            &two,
            &SampleJk::new(2, &[]).unwrap(),
            &MultiIndex::zeros(2),
            &TorusGrid::cube(2, 6).unwrap()
        )
        .is_err());
    }

    #[test]
    fn upper_diagonal_sign_matters() {
        // one mode at the diagonal shell (t, q) = (1, 1): only I(1) and I(4) see it
        let sample = SampleJk::new(3, &[0]).unwrap();
        let grid = TorusGrid::cube(3, 6).unwrap();
        let s = Spectrum::single_mode(vec![1, 2, 2], &[0, 1, 1], Complex64::new(1.0, 0.0)).unwrap();
        let n = MultiIndex::new(vec![0, 2, 2]).unwrap();
        let r = decompose_two_free(&s, &sample, &n, &grid).unwrap();
        assert!(r.reassembly_error < 1e-12);
        // with the opposite sign on I(1) the sum would miss by 2|I(1)|
        let flipped = r.reference.sub(&r.terms[0]).unwrap().sub(&r.terms[0]).unwrap();
        assert!(flipped.sub(&r.sum).unwrap().sup_norm() > 0.1);
    }

    fn space() -> JkIndexSpace {
        let fam = LacunaryFamily::new(2.0, vec![1, 2, 4]).unwrap();
        JkIndexSpace::uniform(SampleJk::new(3, &[0]).unwrap(), fam, 8).unwrap()
    }

    #[test]
    fn q_operator_four_terms() {
        let s = random_spectrum(vec![3, 4, 4], 9);
        let grid = TorusGrid::new(vec![8, 10, 10]).unwrap();
        let n = MultiIndex::new(vec![2, 3, 1]).unwrap();
        let q = q_operator(&s, &space(), &[1], &[3], &n, &grid).unwrap();
        let mut brute = GridFunction::zeros(grid.clone());
        for r in 0..=3 {
            brute = brute.add(&partial_sum(&s, &n.with(1, r), &grid).unwrap()).unwrap();
        }
        assert!(q.max_abs_diff(&brute) < 1e-12);
        let c = q_operator_cesaro(&s, &space(), &[1], &[3], &n, &grid).unwrap();
        assert!(q.max_abs_diff(&c) < 1e-10);
        let both = q_operator(&s, &space(), &[1, 2], &[2, 3], &n, &grid).unwrap();
        let both_c = q_operator_cesaro(&s, &space(), &[1, 2], &[2, 3], &n, &grid).unwrap();
        assert!(both.max_abs_diff(&both_c) < 1e-10);
    }

    #[test]
    fn q_operator_edge_cases() {
        let s = random_spectrum(vec![2, 3, 3], 4);
        let grid = TorusGrid::cube(3, 8).unwrap();
        let n = MultiIndex::new(vec![1, 2, 2]).unwrap();
        let q0 = q_operator(&s, &space(), &[2], &[0], &n, &grid).unwrap();
        assert!(q0.max_abs_diff(&partial_sum(&s, &n.with(2, 0), &grid).unwrap()) < 1e-12);
        let excluded = Spectrum::single_mode(vec![2, 3, 3], &[2, 0, 0], Complex64::new(1.0, 0.0)).unwrap();
        let qe = q_operator(&excluded, &space(), &[1], &[3], &n, &grid).unwrap();
        assert_eq!(qe.sup_norm(), 0.0);
        assert!(matches!(
            q_operator(&s, &space(), &[0], &[2], &n, &grid),
            Err(Error::AxisNotFree(0))
        ));
    }
}
