//! Small shared helpers.

use std::cmp::Ordering;

/// Total-ordered f64 wrapper for use as a map/set key. NaN is rejected at
/// construction, so `total_cmp` coincides with the numeric order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrdF64(pub f64);

impl OrdF64 {
    pub fn new(v: f64) -> Self {
        assert!(!v.is_nan(), "NaN is not a valid key");
        OrdF64(v)
    }
}

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Integer power by repeated squaring. Exponentiation always follows the
/// same association order, so equal `(base, exp)` inputs yield bit-identical
/// results; rounded values stay canonical across the whole crate.
pub fn pow_int(base: f64, exp: u32) -> f64 {
    let mut result = 1.0f64;
    let mut b = base;
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            result *= b;
        }
        b *= b;
        e >>= 1;
    }
    result
}
