//! Splitting a spectrum along one axis into odd and even lacunary blocks.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::LacunaryFamily;
use crate::spectral::Spectrum;

/// Result of [`split_lacunary_blocks`].
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSplit {
    /// Frequencies in odd blocks.
    pub odd: Spectrum,
    /// Frequencies in even blocks, including block 0 (`k = 0`).
    pub even: Spectrum,
    /// `|k|` values past the last family term; they were put in the last block.
    pub uncovered: Vec<usize>,
}

/// Partitions the coefficients by the block of `|ν_axis|`: block 0 is
/// `{0}` and block `λ >= 1` is `n^{(λ-1)} < |k| <= n^{(λ)}` with
/// `n^{(0)} = 0`.
pub fn split_lacunary_blocks(s: &Spectrum, axis: usize, family: &LacunaryFamily) -> Result<BlockSplit> {
    if axis >= s.dimension() {
        return Err(Error::InvalidArgument(format!(
            "axis {axis} out of range for dimension {}",
            s.dimension()
        )));
    }
    let b = s.bandwidth()[axis];
    let uncovered: Vec<usize> = (0..=b).filter(|&k| !family.block_of(k).1).collect();
    let zero = Complex64::new(0.0, 0.0);
    let odd = s.map_modes(|mode, c| {
        let (block, _) = family.block_of(mode[axis].unsigned_abs() as usize);
        if block % 2 == 1 {
            c
        } else {
            zero
        }
    })?;
    let even = s.map_modes(|mode, c| {
        let (block, _) = family.block_of(mode[axis].unsigned_abs() as usize);
        if block % 2 == 0 {
            c
        } else {
            zero
        }
    })?;
    Ok(BlockSplit { odd, even, uncovered })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_124_on_bandwidth_4() {
        let fam = LacunaryFamily::new(2.0, vec![1, 2, 4]).unwrap();
        let mut s = Spectrum::zeros(vec![4]).unwrap();
        for k in -4i64..=4 {
            s.set(&[k], Complex64::new(k as f64 + 10.0, 0.0)).unwrap();
        }
        let split = split_lacunary_blocks(&s, 0, &fam).unwrap();
        assert!(split.uncovered.is_empty());
        for k in -4i64..=4 {
            let in_even = matches!(k.abs(), 0 | 2);
            assert_eq!(split.even.get(&[k]).norm() > 0.0, in_even, "k={k}");
            assert_eq!(split.odd.get(&[k]).norm() > 0.0, !in_even, "k={k}");
            assert_eq!(split.even.get(&[k]) + split.odd.get(&[k]), s.get(&[k]));
        }
    }

    #[test]
    fn trailing_frequencies_reported() {
        let fam = LacunaryFamily::new(2.0, vec![1, 2]).unwrap();
        let s = Spectrum::zeros(vec![1, 4]).unwrap();
        let split = split_lacunary_blocks(&s, 1, &fam).unwrap();
        assert_eq!(split.uncovered, vec![3, 4]);
        assert!(split_lacunary_blocks(&s, 2, &fam).is_err());
    }
}
