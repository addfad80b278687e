//! Integer index machinery: multi-indices, samples of lacunary axes, lacunary
//! sequences and the enumeration of `J_k`-lacunary index vectors.
//!
//! Axes are 0-based throughout the library. The CLI and report layers speak
//! 1-based axis labels; [`SampleJk::from_labels`] is the conversion point.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A vector of nonnegative integers, one per torus axis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(components: Vec<usize>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument(
                "a multi-index needs at least one component".into(),
            ));
        }
        Ok(Self(components))
    }

    pub fn zeros(dimension: usize) -> Self {
        Self(vec![0; dimension.max(1)])
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    /// Returns a copy with component `axis` replaced by `value`.
    pub fn with(&self, axis: usize, value: usize) -> Self {
        let mut out = self.clone();
        out.0[axis] = value;
        out
    }
}

impl Deref for MultiIndex {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl AsRef<[usize]> for MultiIndex {
    fn as_ref(&self) -> &[usize] {
        &self.0
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// The sample `J_k` of lacunary axes and its complement, the free axes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleJk {
    dimension: usize,
    lacunary: Vec<usize>,
    free: Vec<usize>,
}

impl SampleJk {
    /// Builds a sample from 0-based lacunary axes, which must be strictly
    /// increasing and below `dimension`.
    pub fn new(dimension: usize, lacunary_axes: &[usize]) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidSample("dimension must be at least 1".into()));
        }
        if lacunary_axes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSample(format!(
                "lacunary axes {lacunary_axes:?} are not strictly increasing"
            )));
        }
        if let Some(&bad) = lacunary_axes.iter().find(|&&a| a >= dimension) {
            return Err(Error::InvalidSample(format!(
                "axis {} outside 1..={dimension}",
                bad + 1
            )));
        }
        let free = (0..dimension).filter(|a| !lacunary_axes.contains(a)).collect();
        Ok(Self {
            dimension,
            lacunary: lacunary_axes.to_vec(),
            free,
        })
    }

    /// Builds a sample from 1-based axis labels, as used on the command line.
    pub fn from_labels(dimension: usize, labels: &[usize]) -> Result<Self> {
        if labels.contains(&0) {
            return Err(Error::InvalidSample("axis labels are 1-based".into()));
        }
        let axes: Vec<usize> = labels.iter().map(|l| l - 1).collect();
        Self::new(dimension, &axes)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of lacunary axes, `k`.
    pub fn k(&self) -> usize {
        self.lacunary.len()
    }

    pub fn lacunary_axes(&self) -> &[usize] {
        &self.lacunary
    }

    pub fn free_axes(&self) -> &[usize] {
        &self.free
    }

    pub fn is_free(&self, axis: usize) -> bool {
        self.free.contains(&axis)
    }

    pub fn lacunary_labels(&self) -> Vec<usize> {
        self.lacunary.iter().map(|a| a + 1).collect()
    }

    pub fn free_labels(&self) -> Vec<usize> {
        self.free.iter().map(|a| a + 1).collect()
    }
}

/// How [`make_lacunary`] grows successive terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthRule {
    /// `n(s+1) = ceil(q * n(s))`, the densest admissible sequence.
    #[default]
    Minimal,
    /// `round(q^s)`, raised where needed to keep the ratio condition.
    Power,
}

/// A lacunary sequence `1 = n(1) < n(2) < ...` with `n(s+1)/n(s) >= q > 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LacunaryFamily {
    ratio: f64,
    terms: Vec<usize>,
}

impl LacunaryFamily {
    pub fn new(ratio: f64, terms: Vec<usize>) -> Result<Self> {
        check_ratio(ratio)?;
        if terms.is_empty() {
            return Err(Error::EmptyFamily);
        }
        let check = validate_lacunary(&terms, ratio);
        if let Some(at) = check.violation {
            return Err(Error::InvalidFamily(format!(
                "terms {terms:?} violate the lacunary condition at position {at}"
            )));
        }
        Ok(Self { ratio, terms })
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn terms(&self) -> &[usize] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn last(&self) -> usize {
        *self.terms.last().expect("families are nonempty")
    }

    /// Block number of frequency `k` in the dyadic-style split: block 0 is
    /// `{0}` and block `λ >= 1` holds `n(λ-1) < |k| <= n(λ)` with `n(0) = 0`.
    /// Frequencies beyond the last term fall into the last block; the
    /// second value reports whether `|k|` was actually covered.
    pub fn block_of(&self, k: usize) -> (usize, bool) {
        if k == 0 {
            return (0, true);
        }
        // first term >= k
        let pos = self.terms.partition_point(|&t| t < k);
        if pos < self.terms.len() {
            (pos + 1, true)
        } else {
            (self.terms.len(), false)
        }
    }
}

fn check_ratio(q: f64) -> Result<()> {
    if !(q.is_finite() && q > 1.0) {
        return Err(Error::InvalidRatio(q));
    }
    Ok(())
}

fn meets_ratio(next: usize, prev: usize, q: f64) -> bool {
    next as f64 / prev as f64 >= q
}

/// Smallest integer `m > prev` with `m / prev >= q`.
fn minimal_successor(prev: usize, q: f64) -> Option<usize> {
    let target = q * prev as f64;
    if !target.is_finite() || target >= usize::MAX as f64 / 2.0 {
        return None;
    }
    // Start just below the float ceiling and walk up, so that the accepted
    // term passes exactly the same ratio test as `validate_lacunary`.
    let mut m = (target.ceil() as usize).saturating_sub(1).max(prev + 1);
    while !meets_ratio(m, prev, q) {
        m += 1;
    }
    Some(m)
}

/// Generates a lacunary family with `count` terms.
pub fn make_lacunary(q: f64, count: usize, rule: GrowthRule) -> Result<LacunaryFamily> {
    check_ratio(q)?;
    if count == 0 {
        return Err(Error::EmptyFamily);
    }
    let mut terms = Vec::with_capacity(count);
    terms.push(1usize);
    for s in 1..count {
        let prev = terms[s - 1];
        let next = minimal_successor(prev, q).ok_or(Error::FamilyOverflow(s))?;
        let next = match rule {
            GrowthRule::Minimal => next,
            GrowthRule::Power => {
                let p = q.powi(s as i32).round();
                if !p.is_finite() || p >= usize::MAX as f64 / 2.0 {
                    return Err(Error::FamilyOverflow(s));
                }
                (p as usize).max(next)
            }
        };
        terms.push(next);
    }
    LacunaryFamily::new(q, terms)
}

/// Outcome of [`validate_lacunary`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LacunaryCheck {
    pub valid: bool,
    /// Position of the first offending term: 0 when the sequence does not
    /// start at 1, otherwise the term whose ratio to its predecessor is short.
    pub violation: Option<usize>,
}

pub fn validate_lacunary(terms: &[usize], q: f64) -> LacunaryCheck {
    let violation = if terms.first() != Some(&1) {
        Some(0)
    } else {
        terms
            .windows(2)
            .position(|w| !meets_ratio(w[1], w[0], q))
            .map(|p| p + 1)
    };
    LacunaryCheck {
        valid: violation.is_none(),
        violation,
    }
}

/// The set of vectors `n^{(λ,m)}[J_k]`: family terms on lacunary axes and
/// every value in `0..=cap` on each free axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JkIndexSpace {
    sample: SampleJk,
    families: Vec<LacunaryFamily>,
    free_caps: Vec<usize>,
}

impl JkIndexSpace {
    pub fn new(sample: SampleJk, families: Vec<LacunaryFamily>, free_caps: Vec<usize>) -> Result<Self> {
        if families.len() != sample.k() {
            return Err(Error::InvalidSpace(format!(
                "{} families for {} lacunary axes",
                families.len(),
                sample.k()
            )));
        }
        if free_caps.len() != sample.free_axes().len() {
            return Err(Error::InvalidSpace(format!(
                "{} caps for {} free axes",
                free_caps.len(),
                sample.free_axes().len()
            )));
        }
        if families.iter().any(|f| f.is_empty()) {
            return Err(Error::EmptyFamily);
        }
        Ok(Self {
            sample,
            families,
            free_caps,
        })
    }

    /// Same families on every lacunary axis and one cap for all free axes.
    pub fn uniform(sample: SampleJk, family: LacunaryFamily, free_cap: usize) -> Result<Self> {
        let families = vec![family; sample.k()];
        let caps = vec![free_cap; sample.free_axes().len()];
        Self::new(sample, families, caps)
    }

    pub fn sample(&self) -> &SampleJk {
        &self.sample
    }

    pub fn families(&self) -> &[LacunaryFamily] {
        &self.families
    }

    pub fn free_caps(&self) -> &[usize] {
        &self.free_caps
    }

    pub fn dimension(&self) -> usize {
        self.sample.dimension()
    }

    pub fn with_free_caps(&self, caps: Vec<usize>) -> Result<Self> {
        Self::new(self.sample.clone(), self.families.clone(), caps)
    }

    /// Closed-form number of indices: product of family lengths times the
    /// product of `cap + 1`.
    pub fn len(&self) -> usize {
        self.radices().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn radices(&self) -> Vec<usize> {
        self.families
            .iter()
            .map(|f| f.len())
            .chain(self.free_caps.iter().map(|c| c + 1))
            .collect()
    }

    fn assemble(&self, digits: &[usize]) -> MultiIndex {
        let mut comps = vec![0; self.dimension()];
        let k = self.sample.k();
        for (slot, &axis) in self.sample.lacunary_axes().iter().enumerate() {
            comps[axis] = self.families[slot].terms()[digits[slot]];
        }
        for (slot, &axis) in self.sample.free_axes().iter().enumerate() {
            comps[axis] = digits[k + slot];
        }
        MultiIndex(comps)
    }

    /// The index at position `ordinal` of the enumeration order.
    pub fn index_at(&self, ordinal: usize) -> Option<MultiIndex> {
        if ordinal >= self.len() {
            return None;
        }
        let radices = self.radices();
        let mut digits = vec![0; radices.len()];
        let mut rest = ordinal;
        for (d, &r) in digits.iter_mut().zip(&radices).rev() {
            *d = rest % r;
            rest /= r;
        }
        Some(self.assemble(&digits))
    }

    /// Membership predicate: lacunary components are family terms and free
    /// components do not exceed their caps.
    pub fn contains(&self, n: &MultiIndex) -> bool {
        if n.dimension() != self.dimension() {
            return false;
        }
        let lac_ok = self
            .sample
            .lacunary_axes()
            .iter()
            .zip(&self.families)
            .all(|(&axis, fam)| fam.terms().binary_search(&n[axis]).is_ok());
        let free_ok = self
            .sample
            .free_axes()
            .iter()
            .zip(&self.free_caps)
            .all(|(&axis, &cap)| n[axis] <= cap);
        lac_ok && free_ok
    }

    /// Lexicographic enumeration over (λ-tuple, m-tuple).
    pub fn iter(&self) -> JkIndices<'_> {
        let radices = self.radices();
        JkIndices {
            space: self,
            digits: vec![0; radices.len()],
            done: radices.contains(&0),
            radices,
        }
    }

    pub fn describe(&self) -> String {
        let fams: Vec<String> = self
            .sample
            .lacunary_labels()
            .iter()
            .zip(&self.families)
            .map(|(l, f)| format!("axis {l}: q={} terms={:?}", f.ratio(), f.terms()))
            .collect();
        format!(
            "N={} Jk={:?} [{}] free={:?} caps={:?}",
            self.dimension(),
            self.sample.lacunary_labels(),
            fams.join("; "),
            self.sample.free_labels(),
            self.free_caps
        )
    }
}

/// Enumerates the vectors `n^{(λ,m)}[J_k]` of a [`JkIndexSpace`].
///
/// # Errors
///
/// Fails with [`Error::EmptyFamily`] when any family has no terms.
pub fn enumerate_jk_indices(space: &JkIndexSpace) -> Result<JkIndices<'_>> {
    if space.families.iter().any(|f| f.is_empty()) {
        return Err(Error::EmptyFamily);
    }
    Ok(space.iter())
}

pub struct JkIndices<'a> {
    space: &'a JkIndexSpace,
    radices: Vec<usize>,
    digits: Vec<usize>,
    done: bool,
}

impl Iterator for JkIndices<'_> {
    type Item = MultiIndex;

    fn next(&mut self) -> Option<MultiIndex> {
        if self.done {
            return None;
        }
        let out = self.space.assemble(&self.digits);
        // odometer, last digit fastest
        let mut pos = self.digits.len();
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            self.digits[pos] += 1;
            if self.digits[pos] < self.radices[pos] {
                break;
            }
            self.digits[pos] = 0;
        }
        Some(out)
    }
}

/// Index vectors whose lacunary components run over families and whose
/// remaining "diagonal" components all share one value `n0` in `0..=cap`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalIndexSpace {
    sample: SampleJk,
    families: Vec<LacunaryFamily>,
    cap: usize,
}

impl DiagonalIndexSpace {
    pub fn new(sample: SampleJk, families: Vec<LacunaryFamily>, cap: usize) -> Result<Self> {
        if families.len() != sample.k() {
            return Err(Error::InvalidSpace(format!(
                "{} families for {} lacunary axes",
                families.len(),
                sample.k()
            )));
        }
        if sample.free_axes().is_empty() {
            return Err(Error::InvalidSpace(
                "a diagonal space needs at least one diagonal axis".into(),
            ));
        }
        Ok(Self { sample, families, cap })
    }

    pub fn sample(&self) -> &SampleJk {
        &self.sample
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.families.iter().map(|f| f.len()).product::<usize>() * (self.cap + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The full space with the diagonal constraint lifted: each diagonal axis
    /// ranges over `0..=cap` independently.
    pub fn enclosing_space(&self) -> JkIndexSpace {
        JkIndexSpace {
            sample: self.sample.clone(),
            families: self.families.clone(),
            free_caps: vec![self.cap; self.sample.free_axes().len()],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = MultiIndex> + '_ {
        let lacunary = JkIndexSpace {
            sample: self.sample.clone(),
            families: self.families.clone(),
            free_caps: vec![0; self.sample.free_axes().len()],
        };
        let base: Vec<MultiIndex> = lacunary.iter().collect();
        base.into_iter().flat_map(move |b| {
            (0..=self.cap).map(move |n0| {
                let mut comps = b.clone().into_vec();
                for &axis in self.sample.free_axes() {
                    comps[axis] = n0;
                }
                MultiIndex(comps)
            })
        })
    }

    pub fn describe(&self) -> String {
        format!(
            "N={} lacunary={:?} diagonal={:?} n0 in 0..={}",
            self.sample.dimension(),
            self.sample.lacunary_labels(),
            self.sample.free_labels(),
            self.cap
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_family() {
        let f = make_lacunary(2.0, 4, GrowthRule::Minimal).unwrap();
        assert_eq!(f.terms(), &[1, 2, 4, 8]);
    }

    #[test]
    fn ratio_one_and_a_half() {
        let f = make_lacunary(1.5, 4, GrowthRule::Minimal).unwrap();
        assert_eq!(f.terms(), &[1, 2, 3, 5]);
        for w in f.terms().windows(2) {
            assert!(w[1] as f64 / w[0] as f64 >= 1.5);
        }
    }

    #[test]
    fn single_term() {
        let f = make_lacunary(3.0, 1, GrowthRule::Minimal).unwrap();
        assert_eq!(f.terms(), &[1]);
    }

    #[test]
    fn power_rule_stays_lacunary() {
        let f = make_lacunary(1.5, 8, GrowthRule::Power).unwrap();
        assert!(validate_lacunary(f.terms(), 1.5).valid);
        let g = make_lacunary(3.0, 5, GrowthRule::Power).unwrap();
        assert_eq!(g.terms(), &[1, 3, 9, 27, 81]);
    }

    #[test]
    fn rejects_bad_ratio() {
        assert!(matches!(
            make_lacunary(1.0, 3, GrowthRule::Minimal),
            Err(Error::InvalidRatio(_))
        ));
        assert!(matches!(
            make_lacunary(0.5, 3, GrowthRule::Minimal),
            Err(Error::InvalidRatio(_))
        ));
        assert!(matches!(
            make_lacunary(f64::NAN, 3, GrowthRule::Minimal),
            Err(Error::InvalidRatio(_))
        ));
    }

    #[test]
    fn overflow_is_reported() {
        assert!(matches!(
            make_lacunary(1e6, 10, GrowthRule::Minimal),
            Err(Error::FamilyOverflow(_))
        ));
    }

    #[test]
    fn validation_cases() {
        assert!(validate_lacunary(&[1, 2, 4, 8], 2.0).valid);
        let c = validate_lacunary(&[1, 2, 3], 2.0);
        assert!(!c.valid);
        assert_eq!(c.violation, Some(2));
        let c = validate_lacunary(&[2, 4, 8], 2.0);
        assert_eq!(c.violation, Some(0));
        assert_eq!(validate_lacunary(&[], 2.0).violation, Some(0));
    }

    #[test]
    fn enumeration_order_and_count() {
        let sample = SampleJk::from_labels(3, &[1]).unwrap();
        let fam = LacunaryFamily::new(2.0, vec![1, 2]).unwrap();
        let space = JkIndexSpace::new(sample, vec![fam], vec![1, 1]).unwrap();
        let all: Vec<Vec<usize>> = space.iter().map(MultiIndex::into_vec).collect();
        assert_eq!(
            all,
            vec![
                vec![1, 0, 0],
                vec![1, 0, 1],
                vec![1, 1, 0],
                vec![1, 1, 1],
                vec![2, 0, 0],
                vec![2, 0, 1],
                vec![2, 1, 0],
                vec![2, 1, 1],
            ]
        );
        assert_eq!(space.len(), 8);
        for (i, idx) in space.iter().enumerate() {
            assert_eq!(space.index_at(i).unwrap(), idx);
        }
        assert!(space.index_at(8).is_none());
    }

    #[test]
    fn two_lacunary_axes() {
        let sample = SampleJk::from_labels(3, &[2, 3]).unwrap();
        let fam = LacunaryFamily::new(2.0, vec![1, 2, 4]).unwrap();
        let space = JkIndexSpace::uniform(sample, fam, 1).unwrap();
        assert_eq!(space.iter().count(), 18);
        assert_eq!(space.len(), 18);
    }

    #[test]
    fn trivial_space_has_one_index() {
        let sample = SampleJk::from_labels(3, &[1]).unwrap();
        let fam = make_lacunary(2.0, 1, GrowthRule::Minimal).unwrap();
        let space = JkIndexSpace::uniform(sample, fam, 0).unwrap();
        let all: Vec<_> = space.iter().collect();
        assert_eq!(all.len(), 1);
        assert_eq!(&*all[0], &[1, 0, 0]);
    }

    #[test]
    fn sample_validation() {
        assert!(SampleJk::from_labels(3, &[2, 1]).is_err());
        assert!(SampleJk::from_labels(3, &[4]).is_err());
        assert!(SampleJk::from_labels(3, &[0]).is_err());
        let s = SampleJk::from_labels(4, &[2, 4]).unwrap();
        assert_eq!(s.lacunary_axes(), &[1, 3]);
        assert_eq!(s.free_axes(), &[0, 2]);
        assert_eq!(s.free_labels(), vec![1, 3]);
    }

    #[test]
    fn empty_family_rejected() {
        assert!(matches!(LacunaryFamily::new(2.0, vec![]), Err(Error::EmptyFamily)));
        assert!(matches!(
            make_lacunary(2.0, 0, GrowthRule::Minimal),
            Err(Error::EmptyFamily)
        ));
    }

    #[test]
    fn block_numbers() {
        let fam = LacunaryFamily::new(2.0, vec![1, 2, 4]).unwrap();
        assert_eq!(fam.block_of(0), (0, true));
        assert_eq!(fam.block_of(1), (1, true));
        assert_eq!(fam.block_of(2), (2, true));
        assert_eq!(fam.block_of(3), (3, true));
        assert_eq!(fam.block_of(4), (3, true));
        assert_eq!(fam.block_of(5), (3, false));
    }

    #[test]
    fn diagonal_space() {
        let sample = SampleJk::from_labels(3, &[1]).unwrap();
        let fam = LacunaryFamily::new(2.0, vec![1, 2]).unwrap();
        let d = DiagonalIndexSpace::new(sample, vec![fam], 2).unwrap();
        let all: Vec<_> = d.iter().collect();
        assert_eq!(all.len(), d.len());
        assert_eq!(d.len(), 6);
        let full = d.enclosing_space();
        assert!(all.iter().all(|n| n[1] == n[2] && full.contains(n)));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn generated_families_validate(q in 1.01f64..6.0, count in 1usize..20) {
                let fam = make_lacunary(q, count, GrowthRule::Minimal).unwrap();
                prop_assert_eq!(fam.len(), count);
                prop_assert!(validate_lacunary(fam.terms(), q).valid);
                let pow = make_lacunary(q, count.min(12), GrowthRule::Power).unwrap();
                prop_assert!(validate_lacunary(pow.terms(), q).valid);
            }

            #[test]
            fn enumeration_matches_closed_form(
                dim in 1usize..5,
                mask in 0u32..16,
                count in 1usize..4,
                caps in proptest::collection::vec(0usize..3, 4),
            ) {
                let lac: Vec<usize> = (0..dim).filter(|a| mask & (1 << a) != 0).collect();
                let sample = SampleJk::new(dim, &lac).unwrap();
                let fam = make_lacunary(2.0, count, GrowthRule::Minimal).unwrap();
                let free_caps = caps[..sample.free_axes().len()].to_vec();
                let space = JkIndexSpace::new(
                    sample.clone(),
                    vec![fam; sample.k()],
                    free_caps,
                ).unwrap();
                let all: Vec<_> = space.iter().collect();
                prop_assert_eq!(all.len(), space.len());
                prop_assert!(all.iter().all(|n| space.contains(n)));
                prop_assert!(all.windows(2).all(|w| w[0] != w[1]));
            }
        }
    }
}
