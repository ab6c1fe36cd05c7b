//! Non-overlapping interval set.
//!
//! Stores disjoint, non-empty closed intervals `[a, b]` keyed by upper
//! endpoint in a balanced ordered map. Supports the closest-larger-interval
//! query and inserts that merge every overlapped interval; a sequence of `q`
//! operations costs `O(q log q)` because each merge removes an interval.

use crate::pcf::PcfError;
use crate::util::OrdF64;
use std::collections::BTreeMap;

#[derive(Clone, Debug, Default)]
pub struct NoiSet {
    /// upper endpoint -> lower endpoint
    by_upper: BTreeMap<OrdF64, f64>,
}

impl NoiSet {
    pub fn new() -> NoiSet {
        NoiSet::default()
    }

    pub fn len(&self) -> usize {
        self.by_upper.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_upper.is_empty()
    }

    /// The stored interval `[a, b]` with the smallest upper endpoint `b >= z`,
    /// if any. `z` itself may lie inside the returned interval.
    pub fn closest_larger(&self, z: f64) -> Option<(f64, f64)> {
        self.by_upper
            .range(OrdF64::new(z)..)
            .next()
            .map(|(b, &a)| (a, b.0))
    }

    /// Insert `[a, b]`, merging it with every interval it overlaps
    /// (touching endpoints count as overlap).
    pub fn insert(&mut self, a: f64, b: f64) -> Result<(), PcfError> {
        if !(a < b) {
            return Err(PcfError::EmptyInterval);
        }
        let mut lo = a;
        let mut hi = b;
        while let Some((a2, b2)) = self.closest_larger(lo) {
            if a2 > hi {
                break;
            }
            self.by_upper.remove(&OrdF64::new(b2));
            lo = lo.min(a2);
            hi = hi.max(b2);
        }
        self.by_upper.insert(OrdF64::new(hi), lo);
        Ok(())
    }

    /// True iff `x` lies in some stored interval.
    pub fn contains(&self, x: f64) -> bool {
        match self.closest_larger(x) {
            Some((a, _)) => a <= x,
            None => false,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.by_upper.iter().map(|(b, &a)| (a, b.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_set_finds_nothing() {
        let s = NoiSet::new();
        assert_eq!(s.closest_larger(3.0), None);
    }

    #[test]
    fn closest_larger_examples() {
        let mut s = NoiSet::new();
        s.insert(1.0, 2.0).unwrap();
        s.insert(5.0, 7.0).unwrap();
        assert_eq!(s.closest_larger(3.0), Some((5.0, 7.0)));
        // z may belong to the returned interval
        assert_eq!(s.closest_larger(1.5), Some((1.0, 2.0)));
    }

    #[test]
    fn disjoint_inserts_stay_disjoint() {
        let mut s = NoiSet::new();
        s.insert(1.0, 2.0).unwrap();
        s.insert(3.0, 4.0).unwrap();
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn overlapping_inserts_merge() {
        let mut s = NoiSet::new();
        s.insert(1.0, 3.0).unwrap();
        s.insert(2.0, 5.0).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.iter().next(), Some((1.0, 5.0)));
    }

    #[test]
    fn touching_intervals_merge() {
        let mut s = NoiSet::new();
        s.insert(1.0, 2.0).unwrap();
        s.insert(2.0, 3.0).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.iter().next(), Some((1.0, 3.0)));
    }

    #[test]
    fn empty_interval_is_rejected() {
        let mut s = NoiSet::new();
        assert_eq!(s.insert(2.0, 2.0).unwrap_err(), PcfError::EmptyInterval);
        assert_eq!(s.insert(3.0, 1.0).unwrap_err(), PcfError::EmptyInterval);
    }

    #[test]
    fn random_inserts_match_naive_union() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let mut s = NoiSet::new();
        let mut naive: Vec<(f64, f64)> = Vec::new();
        for _ in 0..2000 {
            let a = rng.gen_range(0..1000) as f64;
            let b = a + rng.gen_range(1..50) as f64;
            s.insert(a, b).unwrap();
            naive.push((a, b));
        }
        for _ in 0..1000 {
            let x = rng.gen_range(0..1100) as f64 + 0.5;
            let expect = naive.iter().any(|&(a, b)| a <= x && x <= b);
            assert_eq!(s.contains(x), expect, "at x={x}");
        }
    }
}
