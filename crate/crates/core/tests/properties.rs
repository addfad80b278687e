//! Property tests across modules, each against a brute-force oracle.

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rectsum::decomp::decompose_two_free;
use rectsum::lattice::{make_lacunary, validate_lacunary, GrowthRule, JkIndexSpace, MultiIndex, SampleJk};
use rectsum::maximal::{nested_maximal, unweighted_maximal, weak_type_table, weighted_maximal};
use rectsum::seqcalc::{abel_identity_check, build_convex_b, build_slow_sequence, HyperSequence};
use rectsum::spectral::{analyze, build_shell_tensor, partial_sum, synthesize, Spectrum, TorusGrid};
use rectsum::weyl::{min_pair_weight, product_weight, sigma_functional, unit_weight};

fn direct_sum(s: &Spectrum, n: &[usize], x: &[f64]) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for pos in 0..s.len() {
        let mode = s.mode_at(pos);
        if mode.iter().zip(n).all(|(&v, &m)| v.unsigned_abs() as usize <= m) {
            let phase: f64 = mode.iter().zip(x).map(|(&v, &t)| v as f64 * t).sum();
            total += s.coeffs()[pos] * Complex64::from_polar(1.0, phase);
        }
    }
    total
}

fn spectrum_strategy(max_dim: usize, max_b: usize) -> impl Strategy<Value = Spectrum> {
    prop::collection::vec(0..=max_b, 1..=max_dim).prop_flat_map(|bw| {
        let len: usize = bw.iter().map(|b| 2 * b + 1).product();
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len).prop_map(move |c| {
            Spectrum::new(bw.clone(), c.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap()
        })
    })
}

fn spectrum3(max_b: usize) -> impl Strategy<Value = Spectrum> {
    prop::collection::vec(0..=max_b, 3).prop_flat_map(|bw| {
        let len: usize = bw.iter().map(|b| 2 * b + 1).product();
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len).prop_map(move |c| {
            Spectrum::new(bw.clone(), c.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn synthesis_round_trip_and_parseval(s in spectrum_strategy(3, 4), extra in 1usize..4) {
        let res: Vec<usize> = s.bandwidth().iter().map(|b| 2 * b + 2 * extra).collect();
        let grid = TorusGrid::new(res).unwrap();
        let f = synthesize(&s, &grid).unwrap();
        let back = analyze(&f, s.bandwidth()).unwrap();
        for (a, b) in back.coeffs().iter().zip(s.coeffs()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
        let mean: f64 = f.values().iter().map(|v| v.norm_sqr()).sum::<f64>() / grid.len() as f64;
        prop_assert!((mean - s.energy()).abs() < 1e-10);
    }

    #[test]
    fn partial_sums_match_direct(s in spectrum_strategy(3, 3), n in prop::collection::vec(0usize..5, 3), flat in 0usize..10_000) {
        let n = &n[..s.dimension()];
        let grid = TorusGrid::cube(s.dimension(), 8).unwrap();
        let p = flat % grid.len();
        let x = grid.point(p);
        let g = partial_sum(&s, n, &grid).unwrap();
        prop_assert!((g.values()[p] - direct_sum(&s, n, &x)).norm() < 1e-11);
    }

    #[test]
    fn shells_sum_to_partial_sums(s in spectrum_strategy(3, 3), x0 in -PI..PI, x1 in -PI..PI, x2 in -PI..PI) {
        let dim = s.dimension();
        let x = [x0, x1, x2][..dim].to_vec();
        let t = build_shell_tensor(&s, &x, &rectsum::spectral::ShellLayout::full(s.bandwidth())).unwrap();
        let n: Vec<usize> = s.bandwidth().to_vec();
        // every shell below n, added up, gives S_n
        let total: usize = n.iter().map(|v| v + 1).product();
        let mut acc = Complex64::new(0.0, 0.0);
        for mut flat in 0..total {
            let mut idx = vec![0; dim];
            for a in (0..dim).rev() {
                idx[a] = flat % (n[a] + 1);
                flat /= n[a] + 1;
            }
            acc += t.shell(&idx).unwrap();
        }
        prop_assert!((acc - t.partial_sum(&n)).norm() < 1e-11);
        prop_assert!((acc - direct_sum(&s, &n, &x)).norm() < 1e-11);
    }

    #[test]
    fn lacunary_minimal_families(q in 1.05f64..4.0, count in 1usize..14) {
        let fam = make_lacunary(q, count, GrowthRule::Minimal).unwrap();
        let t = fam.terms();
        prop_assert_eq!(t.len(), count);
        prop_assert!(validate_lacunary(t, q).valid);
        for w in t.windows(2) {
            prop_assert!(w[1] as f64 / w[0] as f64 >= q);
            // one less would break the ratio, unless it collides with w[0]
            prop_assert!(w[1] - 1 == w[0] || ((w[1] - 1) as f64 / w[0] as f64) < q);
        }
    }

    #[test]
    fn index_space_enumeration(cap in 0usize..5, count in 1usize..5, lac in prop::sample::subsequence(vec![0usize, 1, 2], 0..=3)) {
        let fam = make_lacunary(2.0, count, GrowthRule::Minimal).unwrap();
        let space = JkIndexSpace::uniform(SampleJk::new(3, &lac).unwrap(), fam, cap).unwrap();
        let all: Vec<MultiIndex> = space.iter().collect();
        prop_assert_eq!(all.len(), space.len());
        for (i, n) in all.iter().enumerate() {
            prop_assert!(space.contains(n));
            prop_assert_eq!(space.index_at(i), Some(n.clone()));
        }
        let mut sorted = all.clone();
        sorted.sort();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), all.len());
    }

    #[test]
    fn weights_even_monotone_and_ordered(a in -200i64..200, b in -200i64..200, c in -200i64..200) {
        let sample = SampleJk::new(3, &[0]).unwrap();
        let p = product_weight(&sample);
        let m = min_pair_weight(&sample).unwrap();
        let mode = [a, b, c];
        let abs = [a.abs(), b.abs(), c.abs()];
        prop_assert_eq!(p.value(&mode), p.value(&abs));
        prop_assert!(m.value(&mode) <= p.value(&mode));
        for axis in 0..3 {
            let mut up = abs;
            up[axis] += 1;
            prop_assert!(p.value(&up) >= p.value(&abs));
            prop_assert!(m.value(&up) >= m.value(&abs));
        }
    }

    #[test]
    fn abel_identity_random(
        n in prop::collection::vec(2usize..6, 1..=3),
        seed in prop::collection::vec(-1.0f64..1.0, 216),
        steps in prop::collection::vec(0.01f64..1.0, 9),
    ) {
        let len: usize = n.iter().map(|v| v + 1).product();
        let a = HyperSequence::new(n.clone(), seed[..len].to_vec()).unwrap();
        let mut tails: Vec<f64> = steps.iter().rev().scan(0.0, |acc, s| { *acc += s; Some(*acc) }).collect();
        tails.reverse();
        let b = build_convex_b(&build_slow_sequence(&tails).unwrap());
        let r = b.report();
        prop_assert!(r.convex && r.nonincreasing);
        let check = abel_identity_check(&a, &b, &n).unwrap();
        prop_assert!(check.difference < 1e-10);
    }

    #[test]
    fn decomposition_reassembles(s in spectrum3(3), n1 in 0usize..4, n2 in 0usize..4, lam in 0usize..3) {
        let fam = make_lacunary(2.0, 3, GrowthRule::Minimal).unwrap();
        let n = MultiIndex::new(vec![fam.terms()[lam], n1, n2]).unwrap();
        let grid = TorusGrid::cube(3, 8).unwrap();
        let d = decompose_two_free(&s, &SampleJk::new(3, &[0]).unwrap(), &n, &grid).unwrap();
        prop_assert!(d.reassembly_error < 1e-10);
        prop_assert!(d.bilinear_gap < 1e-10);
        let x = grid.point(17);
        prop_assert!((d.sum.values()[17] - direct_sum(&s, n.as_ref(), &x)).norm() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn maximal_dominates_and_grows(s in spectrum3(3), cap in 0usize..3) {
        let sample = SampleJk::new(3, &[0]).unwrap();
        let fam = make_lacunary(2.0, 2, GrowthRule::Minimal).unwrap();
        let small = JkIndexSpace::uniform(sample.clone(), fam.clone(), cap).unwrap();
        let big = small.with_free_caps(vec![cap + 1; 2]).unwrap();
        let grid = TorusGrid::cube(3, 8).unwrap();
        let m = unweighted_maximal(&s, &small, &grid).unwrap();
        for n in small.iter() {
            let g = partial_sum(&s, n.as_ref(), &grid).unwrap();
            for (v, sn) in m.values.iter().zip(g.values()) {
                prop_assert!(*v + 1e-12 >= sn.norm());
            }
        }
        let unit = unit_weight(3);
        let w = product_weight(&sample);
        let nested = nested_maximal(&s, &[small.clone(), big], &[&w, &unit], &grid).unwrap();
        prop_assert_eq!(&nested[1][0].values, &m.values);
        prop_assert_eq!(&nested[0][0].values, &weighted_maximal(&s, &small, &w, &grid).unwrap().values);
        for (a, b) in nested[1][0].values.iter().zip(&nested[1][1].values) {
            prop_assert!(b >= a);
        }
        // Chebyshev: α² μ{M > α} never exceeds the integral of M².
        let sigma = sigma_functional(&s, &w).unwrap();
        if sigma > 0.0 {
            let table = weak_type_table(&m, sigma, &[0.1, 0.5, 1.0, 2.0, 4.0]).unwrap();
            let integral = m.l2_norm * m.l2_norm * (2.0 * PI).powi(3);
            for row in &table.rows {
                prop_assert!(row.ratio * sigma <= integral * (1.0 + 1e-12));
            }
        }
    }
}
