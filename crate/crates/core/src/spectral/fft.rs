//! Unnormalized multi-dimensional DFT over a row-major array, one axis at a
//! time.

use num_complex::Complex64;
use rustfft::FftPlanner;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

pub(crate) fn transform(data: &mut [Complex64], shape: &[usize], direction: Direction) {
    let total: usize = shape.iter().product();
    debug_assert_eq!(data.len(), total);
    let mut planner = FftPlanner::<f64>::new();
    let mut line = Vec::new();
    let mut inner = total;
    for &len in shape {
        inner /= len;
        if len == 1 {
            continue;
        }
        let fft = match direction {
            Direction::Forward => planner.plan_fft_forward(len),
            Direction::Inverse => planner.plan_fft_inverse(len),
        };
        let outer = total / (len * inner);
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        line.resize(len, Complex64::new(0.0, 0.0));
        for o in 0..outer {
            let base = o * len * inner;
            if inner == 1 {
                fft.process_with_scratch(&mut data[base..base + len], &mut scratch);
                continue;
            }
            for i in 0..inner {
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + k * inner + i];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (k, v) in line.iter().enumerate() {
                    data[base + k * inner + i] = *v;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_then_inverse_scales_by_length() {
        let shape = [4, 6, 2];
        let orig: Vec<Complex64> = (0..48)
            .map(|i| Complex64::new(i as f64 * 0.5, (i % 7) as f64))
            .collect();
        let mut data = orig.clone();
        transform(&mut data, &shape, Direction::Forward);
        transform(&mut data, &shape, Direction::Inverse);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a / 48.0 - b).norm() < 1e-12);
        }
    }

    #[test]
    fn matches_naive_dft_in_2d() {
        let shape = [4, 6];
        let data: Vec<Complex64> = (0..24)
            .map(|i| Complex64::new((i * i % 5) as f64, i as f64 * 0.1))
            .collect();
        let mut fast = data.clone();
        transform(&mut fast, &shape, Direction::Forward);
        for k0 in 0..4 {
            for k1 in 0..6 {
                let mut acc = Complex64::new(0.0, 0.0);
                for l0 in 0..4 {
                    for l1 in 0..6 {
                        let angle = -2.0 * std::f64::consts::PI * ((k0 * l0) as f64 / 4.0 + (k1 * l1) as f64 / 6.0);
                        acc += data[l0 * 6 + l1] * Complex64::cis(angle);
                    }
                }
                assert!((acc - fast[k0 * 6 + k1]).norm() < 1e-10);
            }
        }
    }
}
