//! Piecewise constant functions in list representation.
//!
//! A [`Pcf`] stores a function `f : [lo, hi] -> ExtValue` as an ordered list
//! of pieces. Piece `i` covers the half-open interval `[x_{i-1}, x_i)` (with
//! `x_{-1} = lo`) and the final breakpoint is closed: `f(hi)` is the value of
//! the last piece. Consecutive pieces always carry distinct values (the list
//! is pruned), and an ordered breakpoint array gives `O(log p)` evaluation.
//!
//! Values live in the extended codomain `{0} ∪ (0, ∞) ∪ {+∞}` plus `-∞` for
//! the pipelines that negate functions. Rounded values are canonicalized
//! through integer exponents so that equal rounded values compare bit-equal
//! and pruning stays deterministic.

mod convolve;
mod noi;

pub use convolve::{
    convolve_general, convolve_monotone, convolve_monotone_combined, maxminus_convolve,
    maxplus_convolve, minminus_convolve, witness_argmin, ConvWitness,
};
pub use noi::NoiSet;

use crate::util::pow_int;
use std::cmp::Ordering;
use std::fmt;

/// Extended value: `-∞ < 0 < finite < +∞`, with exactly one encoding for
/// each of the three non-finite cases. `Finite` never holds `0.0`, `NaN`,
/// or infinities; the smart constructor normalizes them away.
#[derive(Clone, Copy, Debug)]
pub enum ExtValue {
    MinusInf,
    Zero,
    Finite(f64),
    PlusInf,
}

impl ExtValue {
    /// Normalizing constructor for numeric values.
    pub fn finite(v: f64) -> ExtValue {
        assert!(!v.is_nan(), "NaN is not a valid function value");
        if v == 0.0 {
            ExtValue::Zero
        } else if v == f64::INFINITY {
            ExtValue::PlusInf
        } else if v == f64::NEG_INFINITY {
            ExtValue::MinusInf
        } else {
            ExtValue::Finite(v)
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            ExtValue::MinusInf => f64::NEG_INFINITY,
            ExtValue::Zero => 0.0,
            ExtValue::Finite(v) => v,
            ExtValue::PlusInf => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtValue::Zero | ExtValue::Finite(_))
    }

    pub fn is_plus_inf(self) -> bool {
        matches!(self, ExtValue::PlusInf)
    }

    pub fn is_minus_inf(self) -> bool {
        matches!(self, ExtValue::MinusInf)
    }

    /// Addition with `+∞` and `-∞` absorbing; `-∞ + +∞` is an error.
    pub fn checked_add(self, other: ExtValue) -> Result<ExtValue, PcfError> {
        use ExtValue::*;
        Ok(match (self, other) {
            (PlusInf, MinusInf) | (MinusInf, PlusInf) => return Err(PcfError::InfMinusInf),
            (PlusInf, _) | (_, PlusInf) => PlusInf,
            (MinusInf, _) | (_, MinusInf) => MinusInf,
            (Zero, b) => b,
            (a, Zero) => a,
            (Finite(a), Finite(b)) => ExtValue::finite(a + b),
        })
    }

    pub fn neg(self) -> ExtValue {
        match self {
            ExtValue::MinusInf => ExtValue::PlusInf,
            ExtValue::Zero => ExtValue::Zero,
            ExtValue::Finite(v) => ExtValue::Finite(-v),
            ExtValue::PlusInf => ExtValue::MinusInf,
        }
    }

    fn rank(self) -> u8 {
        match self {
            ExtValue::MinusInf => 0,
            ExtValue::Zero | ExtValue::Finite(_) => 1,
            ExtValue::PlusInf => 2,
        }
    }
}

impl PartialEq for ExtValue {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ExtValue {}

impl PartialOrd for ExtValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.rank().cmp(&other.rank()) {
            Ordering::Equal if self.rank() == 1 => self.to_f64().total_cmp(&other.to_f64()),
            ord => ord,
        }
    }
}

impl fmt::Display for ExtValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtValue::MinusInf => write!(f, "-inf"),
            ExtValue::Zero => write!(f, "0"),
            ExtValue::Finite(v) => write!(f, "{v}"),
            ExtValue::PlusInf => write!(f, "inf"),
        }
    }
}

/// Declared monotonicity of a function. A constant function satisfies both
/// directed tags; operations preserve the caller's tag where possible.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Monotonicity {
    Decreasing,
    Increasing,
    General,
}

/// Parameters of the `⌈·⌉_{1+δ}` rounding step: values round up to powers
/// of `1+delta`, and `w` bounds the finite values so the rounded function
/// has at most `2 + ⌈log_{1+δ} w⌉` pieces.
#[derive(Clone, Copy, Debug)]
pub struct RoundingConfig {
    delta: f64,
    w: f64,
}

impl RoundingConfig {
    pub fn new(delta: f64, w: f64) -> Result<RoundingConfig, PcfError> {
        if !(delta > 0.0) || !(w >= 1.0) {
            return Err(PcfError::PreconditionViolated);
        }
        Ok(RoundingConfig { delta, w })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    /// `2 + ⌈log_{1+δ} W⌉`, the piece bound after rounding a monotone function.
    pub fn piece_bound(&self) -> usize {
        2 + (self.w.ln() / (1.0 + self.delta).ln()).ceil() as usize
    }

    /// Smallest natural `i` with `(1+δ)^i >= y`, for `y > 0`.
    pub fn exponent_for(&self, y: f64) -> u32 {
        debug_assert!(y > 0.0 && y.is_finite());
        let base = 1.0 + self.delta;
        let guess = (y.ln() / base.ln()).ceil();
        let mut i = if guess > 0.0 { guess as u32 } else { 0 };
        while i > 0 && pow_int(base, i - 1) >= y {
            i -= 1;
        }
        while pow_int(base, i) < y {
            i += 1;
        }
        i
    }

    /// Canonical `(1+δ)^i`.
    pub fn power(&self, i: u32) -> f64 {
        pow_int(1.0 + self.delta, i)
    }

    /// `⌈y⌉_{1+δ}` on extended values; 0 and +∞ are fixed points.
    pub fn round_up(&self, y: ExtValue) -> Result<ExtValue, PcfError> {
        match y {
            ExtValue::Zero => Ok(ExtValue::Zero),
            ExtValue::PlusInf => Ok(ExtValue::PlusInf),
            ExtValue::MinusInf => Err(PcfError::CodomainViolation),
            ExtValue::Finite(v) => {
                if v < 0.0 || v > self.w {
                    return Err(PcfError::CodomainViolation);
                }
                Ok(ExtValue::finite(self.power(self.exponent_for(v))))
            }
        }
    }
}

/// Errors for piecewise constant function operations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PcfError {
    NonMonotone,
    UnsortedBreakpoints,
    EmptyPieceList,
    OutOfDomain,
    DomainMismatch,
    TagMismatch,
    EmptyList,
    NegativeShift,
    InfMinusInf,
    PreconditionViolated,
    EmptyInterval,
    CodomainViolation,
}

impl fmt::Display for PcfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            PcfError::NonMonotone => "values violate the declared monotonicity tag",
            PcfError::UnsortedBreakpoints => "breakpoints must strictly increase and end at hi",
            PcfError::EmptyPieceList => "a function needs at least one piece",
            PcfError::OutOfDomain => "argument outside the function domain",
            PcfError::DomainMismatch => "operands must share a domain",
            PcfError::TagMismatch => "operands must share a monotonicity direction",
            PcfError::EmptyList => "empty function list",
            PcfError::NegativeShift => "shift distance must be non-negative",
            PcfError::InfMinusInf => "-inf + +inf is undefined",
            PcfError::PreconditionViolated => "operation precondition violated",
            PcfError::EmptyInterval => "interval endpoints must satisfy a < b",
            PcfError::CodomainViolation => "value outside the declared codomain",
        };
        f.write_str(msg)
    }
}

impl std::error::Error for PcfError {}

/// Piecewise constant function over `[lo, hi]` in pruned list representation.
#[derive(Clone, Debug, PartialEq)]
pub struct Pcf {
    lo: f64,
    hi: f64,
    /// Right endpoints of the pieces; strictly increasing, last equals `hi`.
    ends: Vec<f64>,
    values: Vec<ExtValue>,
    tag: Monotonicity,
}

fn prune(ends: &mut Vec<f64>, values: &mut Vec<ExtValue>) {
    let mut w = 0;
    for i in 0..ends.len() {
        if w > 0 && values[w - 1] == values[i] {
            // extend the previous piece
            ends[w - 1] = ends[i];
        } else {
            ends[w] = ends[i];
            values[w] = values[i];
            w += 1;
        }
    }
    ends.truncate(w);
    values.truncate(w);
}

fn values_satisfy(values: &[ExtValue], tag: Monotonicity) -> bool {
    match tag {
        Monotonicity::Decreasing => values.windows(2).all(|w| w[0] >= w[1]),
        Monotonicity::Increasing => values.windows(2).all(|w| w[0] <= w[1]),
        Monotonicity::General => true,
    }
}

/// Best tag for `values`, preferring the caller's hint when compatible.
fn tag_for(values: &[ExtValue], hint: Monotonicity) -> Monotonicity {
    if hint != Monotonicity::General && values_satisfy(values, hint) {
        return hint;
    }
    if values_satisfy(values, Monotonicity::Decreasing) {
        Monotonicity::Decreasing
    } else if values_satisfy(values, Monotonicity::Increasing) {
        Monotonicity::Increasing
    } else {
        Monotonicity::General
    }
}

impl Pcf {
    /// Build a function from `(end, value)` pieces. The first piece starts at
    /// `lo`, ends must strictly increase, and the last end must equal `hi`.
    /// Equal adjacent values are merged; the tag is validated afterwards.
    pub fn from_pieces(
        pieces: &[(f64, ExtValue)],
        lo: f64,
        hi: f64,
        tag: Monotonicity,
    ) -> Result<Pcf, PcfError> {
        if pieces.is_empty() {
            return Err(PcfError::EmptyPieceList);
        }
        if lo.is_nan() || hi.is_nan() || !(lo < hi) {
            return Err(PcfError::UnsortedBreakpoints);
        }
        let mut prev = lo;
        for &(x, _) in pieces {
            if x.is_nan() || !(x > prev) {
                return Err(PcfError::UnsortedBreakpoints);
            }
            prev = x;
        }
        if pieces.last().unwrap().0 != hi {
            return Err(PcfError::UnsortedBreakpoints);
        }
        let mut ends: Vec<f64> = pieces.iter().map(|p| p.0).collect();
        let mut values: Vec<ExtValue> = pieces.iter().map(|p| p.1).collect();
        prune(&mut ends, &mut values);
        if !values_satisfy(&values, tag) {
            return Err(PcfError::NonMonotone);
        }
        Ok(Pcf {
            lo,
            hi,
            ends,
            values,
            tag,
        })
    }

    /// Constant function.
    pub fn constant(lo: f64, hi: f64, value: ExtValue, tag: Monotonicity) -> Pcf {
        Pcf::from_pieces(&[(hi, value)], lo, hi, tag).expect("constant is always valid")
    }

    pub(crate) fn from_raw(
        lo: f64,
        hi: f64,
        mut ends: Vec<f64>,
        mut values: Vec<ExtValue>,
        hint: Monotonicity,
    ) -> Pcf {
        debug_assert!(!ends.is_empty() && ends.len() == values.len());
        debug_assert_eq!(*ends.last().unwrap(), hi);
        prune(&mut ends, &mut values);
        let tag = tag_for(&values, hint);
        Pcf {
            lo,
            hi,
            ends,
            values,
            tag,
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn tag(&self) -> Monotonicity {
        self.tag
    }

    pub fn num_pieces(&self) -> usize {
        self.ends.len()
    }

    pub fn ends(&self) -> &[f64] {
        &self.ends
    }

    pub fn values(&self) -> &[ExtValue] {
        &self.values
    }

    /// Left endpoint of piece `i`.
    pub fn piece_start(&self, i: usize) -> f64 {
        if i == 0 {
            self.lo
        } else {
            self.ends[i - 1]
        }
    }

    /// Iterate `(start, end, value)` triples.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, ExtValue)> + '_ {
        (0..self.ends.len()).map(move |i| (self.piece_start(i), self.ends[i], self.values[i]))
    }

    pub fn last_value(&self) -> ExtValue {
        *self.values.last().unwrap()
    }

    pub fn first_value(&self) -> ExtValue {
        self.values[0]
    }

    /// Evaluate at `x ∈ [lo, hi]` in `O(log p)` by binary search over the
    /// ordered breakpoint array.
    pub fn eval(&self, x: f64) -> Result<ExtValue, PcfError> {
        if x.is_nan() || x < self.lo || x > self.hi {
            return Err(PcfError::OutOfDomain);
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: f64) -> ExtValue {
        let idx = self.ends.partition_point(|&e| e <= x);
        if idx == self.ends.len() {
            // x == hi: the closed right endpoint carries the last value
            *self.values.last().unwrap()
        } else {
            self.values[idx]
        }
    }

    fn check_shared_domain(&self, other: &Pcf) -> Result<(), PcfError> {
        if self.lo != other.lo || self.hi != other.hi {
            return Err(PcfError::DomainMismatch);
        }
        Ok(())
    }

    /// Pointwise minimum of two functions with a shared domain and a shared
    /// monotone direction; at most `p_g + p_h` pieces.
    pub fn min2(&self, other: &Pcf) -> Result<Pcf, PcfError> {
        self.check_shared_domain(other)?;
        if self.tag == Monotonicity::General
            || other.tag == Monotonicity::General
            || self.tag != other.tag
        {
            return Err(PcfError::TagMismatch);
        }
        let mut merged: Vec<f64> = Vec::with_capacity(self.ends.len() + other.ends.len());
        merged.extend_from_slice(&self.ends);
        merged.extend_from_slice(&other.ends);
        merged.sort_unstable_by(f64::total_cmp);
        merged.dedup();
        let mut ends = Vec::with_capacity(merged.len());
        let mut values = Vec::with_capacity(merged.len());
        let mut start = self.lo;
        for &e in &merged {
            let v = self.eval_unchecked(start).min(other.eval_unchecked(start));
            ends.push(e);
            values.push(v);
            start = e;
        }
        let out = Pcf::from_raw(self.lo, self.hi, ends, values, self.tag);
        assert!(out.num_pieces() <= self.num_pieces() + other.num_pieces());
        Ok(out)
    }

    /// Pointwise sum; `+∞` absorbs, `-∞ + +∞` errors. At most `p_g + p_h`
    /// pieces.
    pub fn add(&self, other: &Pcf) -> Result<Pcf, PcfError> {
        self.check_shared_domain(other)?;
        let mut merged: Vec<f64> = Vec::with_capacity(self.ends.len() + other.ends.len());
        merged.extend_from_slice(&self.ends);
        merged.extend_from_slice(&other.ends);
        merged.sort_unstable_by(f64::total_cmp);
        merged.dedup();
        let mut ends = Vec::with_capacity(merged.len());
        let mut values = Vec::with_capacity(merged.len());
        let mut start = self.lo;
        for &e in &merged {
            let v = self
                .eval_unchecked(start)
                .checked_add(other.eval_unchecked(start))?;
            ends.push(e);
            values.push(v);
            start = e;
        }
        let hint = if self.tag == other.tag {
            self.tag
        } else {
            Monotonicity::General
        };
        let out = Pcf::from_raw(self.lo, self.hi, ends, values, hint);
        assert!(out.num_pieces() <= self.num_pieces() + other.num_pieces());
        Ok(out)
    }

    /// Pointwise minimum of many functions, all sharing a domain and a
    /// monotone direction, by the sorted-piece sweep: time
    /// `O(Σp_i log Σp_i)`.
    pub fn multimin(fs: &[&Pcf]) -> Result<Pcf, PcfError> {
        let first = *fs.first().ok_or(PcfError::EmptyList)?;
        let tag = first.tag;
        if tag == Monotonicity::General {
            return Err(PcfError::TagMismatch);
        }
        for f in fs {
            first.check_shared_domain(f)?;
            if f.tag != tag {
                return Err(PcfError::TagMismatch);
            }
        }
        let out = match tag {
            Monotonicity::Decreasing => Self::multimin_decreasing(fs),
            Monotonicity::Increasing => Self::multimin_increasing(fs),
            Monotonicity::General => unreachable!(),
        };
        assert!(out.num_pieces() <= fs.iter().map(|f| f.num_pieces()).sum::<usize>());
        Ok(out)
    }

    /// For decreasing inputs a piece starting at `s` with value `a` dominates
    /// all `x >= s`, so the minimum is the running prefix-minimum over piece
    /// starts.
    fn multimin_decreasing(fs: &[&Pcf]) -> Pcf {
        let first = fs[0];
        let mut items: Vec<(f64, ExtValue)> = Vec::new();
        for f in fs {
            for i in 0..f.num_pieces() {
                items.push((f.piece_start(i), f.values[i]));
            }
        }
        items.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        // (start, running-min value) at each strictly dropping point
        let mut starts: Vec<f64> = Vec::new();
        let mut values: Vec<ExtValue> = Vec::new();
        for (s, v) in items {
            match values.last() {
                None => {
                    debug_assert_eq!(s, first.lo);
                    starts.push(s);
                    values.push(v);
                }
                Some(&cur) if v < cur => {
                    starts.push(s);
                    values.push(v);
                }
                _ => {}
            }
        }
        let mut ends: Vec<f64> = starts[1..].to_vec();
        ends.push(first.hi);
        Pcf::from_raw(first.lo, first.hi, ends, values, Monotonicity::Decreasing)
    }

    /// Mirror of the decreasing sweep: a piece ending at `b` with value `a`
    /// dominates all `x < b`, so sweep ends from the right with a running
    /// minimum. The closed right endpoint takes the minimum of the last
    /// pieces' values.
    fn multimin_increasing(fs: &[&Pcf]) -> Pcf {
        let first = fs[0];
        let mut items: Vec<(f64, ExtValue)> = Vec::new();
        for f in fs {
            for i in 0..f.num_pieces() {
                items.push((f.ends[i], f.values[i]));
            }
        }
        items.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut rev_ends: Vec<f64> = Vec::new();
        let mut rev_values: Vec<ExtValue> = Vec::new();
        let mut running: Option<ExtValue> = None;
        let mut i = 0;
        while i < items.len() {
            let end = items[i].0;
            let mut group_min = items[i].1;
            while i < items.len() && items[i].0 == end {
                group_min = group_min.min(items[i].1);
                i += 1;
            }
            let v = match running {
                None => group_min,
                Some(r) => r.min(group_min),
            };
            if running != Some(v) || rev_ends.is_empty() {
                rev_ends.push(end);
                rev_values.push(v);
            }
            running = Some(v);
        }
        debug_assert_eq!(rev_ends[0], first.hi);
        rev_ends.reverse();
        rev_values.reverse();
        Pcf::from_raw(
            first.lo,
            first.hi,
            rev_ends,
            rev_values,
            Monotonicity::Increasing,
        )
    }

    /// `f_shift(x) = g(x - c)` for `x >= lo + c`, `g(lo)` below; the domain
    /// stays `[lo, hi]` and pieces shifted past `hi` are dropped.
    pub fn shift(&self, c: f64) -> Result<Pcf, PcfError> {
        self.shift_filled(c, None)
    }

    /// Shift with an explicit fill value on `[lo, lo + c)` instead of
    /// `g(lo)`; used by DPs that need `+∞` below the shift point.
    pub fn shift_filled(&self, c: f64, fill: Option<ExtValue>) -> Result<Pcf, PcfError> {
        if c.is_nan() || c < 0.0 {
            return Err(PcfError::NegativeShift);
        }
        if c == 0.0 {
            return Ok(self.clone());
        }
        let fill_v = fill.unwrap_or(self.values[0]);
        let cut = self.lo + c;
        if cut >= self.hi {
            return Ok(Pcf::from_raw(
                self.lo,
                self.hi,
                vec![self.hi],
                vec![fill_v],
                self.tag,
            ));
        }
        let mut ends = vec![cut];
        let mut values = vec![fill_v];
        for i in 0..self.num_pieces() {
            let start = self.piece_start(i) + c;
            if start >= self.hi {
                break;
            }
            ends.push((self.ends[i] + c).min(self.hi));
            values.push(self.values[i]);
        }
        *ends.last_mut().unwrap() = self.hi;
        let out = Pcf::from_raw(self.lo, self.hi, ends, values, self.tag);
        assert!(out.num_pieces() <= self.num_pieces() + usize::from(fill.is_some()));
        Ok(out)
    }

    /// `⌈g⌉_{1+δ}`: round every value up to the next power of `1+δ`, with
    /// `⌈0⌉ = 0` and `⌈∞⌉ = ∞`. Requires a monotone input; the result has at
    /// most `2 + ⌈log_{1+δ} W⌉` pieces.
    pub fn round_up_pow(&self, cfg: &RoundingConfig) -> Result<Pcf, PcfError> {
        if self.tag == Monotonicity::General {
            return Err(PcfError::NonMonotone);
        }
        let mut values = Vec::with_capacity(self.values.len());
        for &v in &self.values {
            values.push(cfg.round_up(v)?);
        }
        let out = Pcf::from_raw(self.lo, self.hi, self.ends.clone(), values, self.tag);
        assert!(out.num_pieces() <= cfg.piece_bound());
        Ok(out)
    }

    /// `⌊g⌋*_δ`: round every value down to a multiple of `δ`; `±∞` are fixed
    /// points. Works on functions with any number of monotone segments.
    pub fn round_down_mult(&self, delta: f64) -> Result<Pcf, PcfError> {
        if !(delta > 0.0) {
            return Err(PcfError::PreconditionViolated);
        }
        let mut values = Vec::with_capacity(self.values.len());
        for &v in &self.values {
            values.push(round_down_to_multiple(v, delta));
        }
        let out = Pcf::from_raw(self.lo, self.hi, self.ends.clone(), values, self.tag);
        // piece bound k * (ceil(W/δ) + 2) from the rounding lemma, checked
        // when the codomain is the non-negative one it is stated for
        let finite_max = self.max_finite();
        if let Some(w) = finite_max {
            if w >= 0.0 && self.values.iter().all(|v| v.to_f64() >= 0.0 || !v.is_finite()) {
                let k = self.monotone_segments();
                let bound = k * ((w.max(delta) / delta).ceil() as usize + 2);
                assert!(out.num_pieces() <= bound);
            }
        }
        Ok(out)
    }

    /// Pointwise negation; swaps the directed tags.
    pub fn negate(&self) -> Pcf {
        let values: Vec<ExtValue> = self.values.iter().map(|v| v.neg()).collect();
        let tag = match self.tag {
            Monotonicity::Decreasing => Monotonicity::Increasing,
            Monotonicity::Increasing => Monotonicity::Decreasing,
            Monotonicity::General => Monotonicity::General,
        };
        Pcf {
            lo: self.lo,
            hi: self.hi,
            ends: self.ends.clone(),
            values,
            tag,
        }
    }

    /// Add a constant to every value (finite arithmetic; infinities fixed).
    pub fn add_const(&self, c: f64) -> Pcf {
        let values: Vec<ExtValue> = self
            .values
            .iter()
            .map(|v| match v {
                ExtValue::Zero => ExtValue::finite(c),
                ExtValue::Finite(x) => ExtValue::finite(x + c),
                other => *other,
            })
            .collect();
        Pcf::from_raw(self.lo, self.hi, self.ends.clone(), values, self.tag)
    }

    /// Largest finite value (0 counts as finite), if any.
    pub fn max_finite(&self) -> Option<f64> {
        self.values
            .iter()
            .filter(|v| v.is_finite())
            .map(|v| v.to_f64())
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }

    /// Number of monotone segments (1 for a monotone function); the minimum
    /// over the two directions of `1 + #violations`.
    pub fn monotone_segments(&self) -> usize {
        if self.values.len() <= 1 {
            return 1;
        }
        let mut asc_breaks = 0usize;
        let mut desc_breaks = 0usize;
        for w in self.values.windows(2) {
            match w[0].cmp(&w[1]) {
                Ordering::Less => desc_breaks += 1,
                Ordering::Greater => asc_breaks += 1,
                Ordering::Equal => {}
            }
        }
        1 + asc_breaks.min(desc_breaks)
    }

    /// Restrict to a subdomain `[lo', hi'] ⊆ [lo, hi]`. The value at the new
    /// closed right endpoint is the value of the piece covering it from the
    /// left, per the list-representation convention.
    pub fn restrict(&self, lo2: f64, hi2: f64) -> Result<Pcf, PcfError> {
        if !(self.lo <= lo2 && lo2 < hi2 && hi2 <= self.hi) {
            return Err(PcfError::OutOfDomain);
        }
        let mut ends = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.num_pieces() {
            if self.piece_start(i) >= hi2 {
                break;
            }
            if self.ends[i] <= lo2 {
                continue;
            }
            ends.push(self.ends[i].min(hi2));
            values.push(self.values[i]);
        }
        Ok(Pcf::from_raw(lo2, hi2, ends, values, self.tag))
    }

    /// Translate the whole domain by `offset` (breakpoints shift rigidly).
    pub fn translate(&self, offset: f64) -> Pcf {
        Pcf {
            lo: self.lo + offset,
            hi: self.hi + offset,
            ends: self.ends.iter().map(|e| e + offset).collect(),
            values: self.values.clone(),
            tag: self.tag,
        }
    }

    /// Widen the domain, extending the first and last pieces. Used by rows
    /// whose semantics are constant beyond their stored domain.
    pub fn expand(&self, lo2: f64, hi2: f64) -> Result<Pcf, PcfError> {
        if !(lo2 <= self.lo && hi2 >= self.hi) {
            return Err(PcfError::OutOfDomain);
        }
        let mut ends = self.ends.clone();
        *ends.last_mut().unwrap() = hi2;
        Ok(Pcf::from_raw(lo2, hi2, ends, self.values.clone(), self.tag))
    }

    /// Check that the stored values satisfy a directed tag; used by tests
    /// and engine invariant checks.
    pub fn satisfies(&self, tag: Monotonicity) -> bool {
        values_satisfy(&self.values, tag)
    }
}

/// `⌊y⌋*_δ = max{ i·δ : i·δ <= y, i ∈ ℤ }`, canonical through the integer
/// quotient; `±∞` are fixed points.
pub fn round_down_to_multiple(y: ExtValue, delta: f64) -> ExtValue {
    match y {
        ExtValue::PlusInf => ExtValue::PlusInf,
        ExtValue::MinusInf => ExtValue::MinusInf,
        ExtValue::Zero => ExtValue::Zero,
        ExtValue::Finite(v) => {
            let i = (v / delta).floor();
            ExtValue::finite(i * delta)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fin(v: f64) -> ExtValue {
        ExtValue::finite(v)
    }

    fn dec(pieces: &[(f64, f64)], lo: f64, hi: f64) -> Pcf {
        let ps: Vec<(f64, ExtValue)> = pieces.iter().map(|&(x, y)| (x, fin(y))).collect();
        Pcf::from_pieces(&ps, lo, hi, Monotonicity::Decreasing).unwrap()
    }

    #[test]
    fn constant_function_has_one_piece() {
        let f = Pcf::from_pieces(&[(4.0, ExtValue::Zero)], 0.0, 4.0, Monotonicity::Decreasing)
            .unwrap();
        assert_eq!(f.num_pieces(), 1);
        assert_eq!(f.eval(0.0).unwrap(), ExtValue::Zero);
        assert_eq!(f.eval(4.0).unwrap(), ExtValue::Zero);
    }

    #[test]
    fn equal_adjacent_values_are_pruned() {
        let f = Pcf::from_pieces(
            &[(2.0, fin(3.0)), (4.0, fin(3.0))],
            0.0,
            4.0,
            Monotonicity::Decreasing,
        )
        .unwrap();
        assert_eq!(f.num_pieces(), 1);
        assert_eq!(f.ends(), &[4.0]);
    }

    #[test]
    fn tag_violation_is_rejected() {
        let err = Pcf::from_pieces(
            &[(2.0, fin(3.0)), (4.0, fin(5.0))],
            0.0,
            4.0,
            Monotonicity::Decreasing,
        )
        .unwrap_err();
        assert_eq!(err, PcfError::NonMonotone);
    }

    #[test]
    fn bad_breakpoints_are_rejected() {
        assert_eq!(
            Pcf::from_pieces(&[], 0.0, 1.0, Monotonicity::General).unwrap_err(),
            PcfError::EmptyPieceList
        );
        assert_eq!(
            Pcf::from_pieces(
                &[(3.0, fin(1.0)), (2.0, fin(0.5))],
                0.0,
                3.0,
                Monotonicity::General
            )
            .unwrap_err(),
            PcfError::UnsortedBreakpoints
        );
        assert_eq!(
            Pcf::from_pieces(&[(3.0, fin(1.0))], 0.0, 4.0, Monotonicity::General).unwrap_err(),
            PcfError::UnsortedBreakpoints
        );
    }

    #[test]
    fn eval_uses_half_open_pieces_and_closed_end() {
        let f = dec(&[(2.0, 3.0), (4.0, 1.0)], 0.0, 4.0);
        assert_eq!(f.eval(0.0).unwrap(), fin(3.0));
        assert_eq!(f.eval(1.999).unwrap(), fin(3.0));
        assert_eq!(f.eval(2.0).unwrap(), fin(1.0));
        assert_eq!(f.eval(4.0).unwrap(), fin(1.0));
        assert_eq!(f.eval(4.1).unwrap_err(), PcfError::OutOfDomain);
        assert_eq!(f.eval(-0.1).unwrap_err(), PcfError::OutOfDomain);
    }

    #[test]
    fn min2_is_idempotent_and_has_plus_inf_identity() {
        let f = dec(&[(2.0, 3.0), (4.0, 1.0)], 0.0, 4.0);
        assert_eq!(f.min2(&f).unwrap(), f);
        let top = Pcf::constant(0.0, 4.0, ExtValue::PlusInf, Monotonicity::Decreasing);
        assert_eq!(f.min2(&top).unwrap(), f);
    }

    #[test]
    fn min2_matches_pointwise_oracle_on_grid() {
        let g = dec(&[(2.0, 5.0), (4.0, 1.0)], 0.0, 4.0);
        let h = dec(&[(1.0, 3.0), (4.0, 2.0)], 0.0, 4.0);
        let m = g.min2(&h).unwrap();
        let mut x = 0.0;
        while x <= 4.0 {
            let expect = g.eval(x).unwrap().min(h.eval(x).unwrap());
            assert_eq!(m.eval(x).unwrap(), expect, "at x={x}");
            x += 0.5;
        }
        assert!(m.num_pieces() <= g.num_pieces() + h.num_pieces());
    }

    #[test]
    fn add_identities() {
        let f = dec(&[(2.0, 3.0), (4.0, 1.0)], 0.0, 4.0);
        let zero = Pcf::constant(0.0, 4.0, ExtValue::Zero, Monotonicity::Decreasing);
        assert_eq!(f.add(&zero).unwrap(), f);
        let two = Pcf::constant(0.0, 4.0, fin(2.0), Monotonicity::Decreasing);
        let three = Pcf::constant(0.0, 4.0, fin(3.0), Monotonicity::Decreasing);
        assert_eq!(
            two.add(&three).unwrap(),
            Pcf::constant(0.0, 4.0, fin(5.0), Monotonicity::Decreasing)
        );
    }

    #[test]
    fn add_checks_breakpoints_pointwise() {
        let g = dec(&[(1.0, 7.0), (3.0, 2.0), (4.0, 1.0)], 0.0, 4.0);
        let h = dec(&[(2.0, 4.0), (4.0, 0.0)], 0.0, 4.0);
        let s = g.add(&h).unwrap();
        for &x in &[0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0] {
            let expect = g.eval(x).unwrap().to_f64() + h.eval(x).unwrap().to_f64();
            assert_eq!(s.eval(x).unwrap().to_f64(), expect);
        }
        assert!(s.num_pieces() <= g.num_pieces() + h.num_pieces());
    }

    #[test]
    fn inf_minus_inf_is_an_error() {
        let lo = Pcf::constant(0.0, 1.0, ExtValue::MinusInf, Monotonicity::General);
        let hi = Pcf::constant(0.0, 1.0, ExtValue::PlusInf, Monotonicity::General);
        assert_eq!(lo.add(&hi).unwrap_err(), PcfError::InfMinusInf);
    }

    #[test]
    fn shift_identity_and_example() {
        let g = dec(&[(2.0, 3.0), (4.0, 1.0)], 0.0, 4.0);
        assert_eq!(g.shift(0.0).unwrap(), g);
        let shifted = g.shift(1.0).unwrap();
        assert_eq!(shifted, dec(&[(3.0, 3.0), (4.0, 1.0)], 0.0, 4.0));
        // pointwise oracle f_shift(x) = g(max(x - 1, 0))
        for &x in &[0.0, 0.5, 1.0, 2.9, 3.0, 3.5, 4.0] {
            let expect = g.eval(f64::max(x - 1.0, 0.0)).unwrap();
            assert_eq!(shifted.eval(x).unwrap(), expect);
        }
    }

    #[test]
    fn constants_are_shift_invariant() {
        let c = Pcf::constant(0.0, 4.0, fin(2.5), Monotonicity::Decreasing);
        for &d in &[0.0, 0.5, 3.0, 10.0] {
            assert_eq!(c.shift(d).unwrap(), c);
        }
    }

    #[test]
    fn negative_shift_is_rejected() {
        let c = Pcf::constant(0.0, 4.0, fin(1.0), Monotonicity::Decreasing);
        assert_eq!(c.shift(-1.0).unwrap_err(), PcfError::NegativeShift);
    }

    #[test]
    fn shift_with_inf_fill() {
        let g = dec(&[(2.0, 3.0), (4.0, 1.0)], 0.0, 4.0);
        let shifted = g.shift_filled(1.0, Some(ExtValue::PlusInf)).unwrap();
        assert_eq!(shifted.eval(0.5).unwrap(), ExtValue::PlusInf);
        assert_eq!(shifted.eval(1.0).unwrap(), fin(3.0));
        assert!(shifted.satisfies(Monotonicity::Decreasing));
    }

    #[test]
    fn round_up_pow_conventions_and_example() {
        let cfg = RoundingConfig::new(0.5, 10.0).unwrap();
        assert_eq!(cfg.round_up(ExtValue::Zero).unwrap(), ExtValue::Zero);
        assert_eq!(cfg.round_up(ExtValue::PlusInf).unwrap(), ExtValue::PlusInf);
        // smallest i with 1.5^i >= 5 is 4, and 1.5^4 = 5.0625
        assert_eq!(cfg.round_up(fin(5.0)).unwrap(), fin(5.0625));
    }

    #[test]
    fn round_up_pow_piece_bound_on_large_function() {
        // 1000 pieces, values decreasing in [1, 1e6], delta = 0.1:
        // bound is 2 + ceil(log_1.1 1e6) = 147
        let n = 1000usize;
        let mut pieces = Vec::new();
        for i in 0..n {
            let y = 1e6 * (1.0 - i as f64 / n as f64) + 1.0;
            pieces.push(((i + 1) as f64, fin(y)));
        }
        let f = Pcf::from_pieces(&pieces, 0.0, n as f64, Monotonicity::Decreasing).unwrap();
        let cfg = RoundingConfig::new(0.1, 1e6).unwrap();
        assert_eq!(cfg.piece_bound(), 147);
        let r = f.round_up_pow(&cfg).unwrap();
        assert!(r.num_pieces() <= 147, "got {}", r.num_pieces());
        // sandwich at every original breakpoint
        for (s, _, v) in f.pieces() {
            let rv = r.eval(s).unwrap().to_f64();
            let orig = v.to_f64();
            assert!(orig <= rv && rv <= 1.1 * orig * (1.0 + 1e-12));
        }
    }

    #[test]
    fn round_up_pow_rejects_non_monotone() {
        let f = Pcf::from_pieces(
            &[(1.0, fin(2.0)), (2.0, fin(5.0)), (3.0, fin(1.0))],
            0.0,
            3.0,
            Monotonicity::General,
        )
        .unwrap();
        let cfg = RoundingConfig::new(0.5, 10.0).unwrap();
        assert_eq!(f.round_up_pow(&cfg).unwrap_err(), PcfError::NonMonotone);
    }

    #[test]
    fn round_down_mult_examples() {
        // oracle: floor(y/δ)·δ with the same float path
        let y = 0.37f64;
        let d = 0.1;
        let expect = (y / d).floor() * d;
        assert_eq!(round_down_to_multiple(fin(y), d), fin(expect));
        // multiples of a binary-exact delta are fixed points
        assert_eq!(round_down_to_multiple(fin(1.75), 0.25), fin(1.75));
        assert_eq!(
            round_down_to_multiple(ExtValue::PlusInf, 0.1),
            ExtValue::PlusInf
        );
        assert_eq!(
            round_down_to_multiple(ExtValue::MinusInf, 0.1),
            ExtValue::MinusInf
        );
    }

    #[test]
    fn negate_is_an_involution() {
        let f = dec(&[(2.0, 3.0), (4.0, 1.0)], 0.0, 4.0);
        assert_eq!(f.negate().negate(), f);
        let zero = Pcf::constant(0.0, 1.0, ExtValue::Zero, Monotonicity::Decreasing);
        assert_eq!(zero.negate().eval(0.0).unwrap(), ExtValue::Zero);
        let inc = Pcf::from_pieces(
            &[(2.0, fin(1.0)), (4.0, fin(3.0))],
            0.0,
            4.0,
            Monotonicity::Increasing,
        )
        .unwrap();
        let neg = inc.negate();
        assert_eq!(neg.tag(), Monotonicity::Decreasing);
        assert_eq!(neg.eval(0.0).unwrap(), fin(-1.0));
        assert_eq!(neg.eval(4.0).unwrap(), fin(-3.0));
    }

    #[test]
    fn multimin_single_input_is_identity() {
        let f = dec(&[(2.0, 3.0), (4.0, 1.0)], 0.0, 4.0);
        assert_eq!(Pcf::multimin(&[&f]).unwrap(), f);
        assert_eq!(Pcf::multimin(&[]).unwrap_err(), PcfError::EmptyList);
    }

    #[test]
    fn multimin_matches_min2_on_random_decreasing_pairs() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let g = random_decreasing(&mut rng);
            let h = random_decreasing(&mut rng);
            let a = Pcf::multimin(&[&g, &h]).unwrap();
            let b = g.min2(&h).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn multimin_of_eight_matches_pointwise_oracle() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let fs: Vec<Pcf> = (0..8).map(|_| random_decreasing_on(&mut rng, 50.0)).collect();
        let refs: Vec<&Pcf> = fs.iter().collect();
        let m = Pcf::multimin(&refs).unwrap();
        let mut probes: Vec<f64> = fs
            .iter()
            .flat_map(|f| f.ends().to_vec())
            .chain(fs.iter().flat_map(|f| (0..f.num_pieces()).map(|i| f.piece_start(i)).collect::<Vec<_>>()))
            .collect();
        probes.push(0.0);
        for x in probes {
            let expect = fs
                .iter()
                .map(|f| f.eval(x).unwrap())
                .min()
                .unwrap();
            assert_eq!(m.eval(x).unwrap(), expect, "at x={x}");
        }
    }

    #[test]
    fn multimin_increasing_matches_pointwise() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let g = random_decreasing(&mut rng).negate();
            let h = random_decreasing(&mut rng).negate();
            let m = Pcf::multimin(&[&g, &h]).unwrap();
            assert_eq!(m.tag(), Monotonicity::Increasing);
            let mut probes: Vec<f64> = g.ends().to_vec();
            probes.extend_from_slice(h.ends());
            probes.push(0.0);
            probes.push(5.0);
            for x in probes {
                let expect = g.eval(x).unwrap().min(h.eval(x).unwrap());
                assert_eq!(m.eval(x).unwrap(), expect, "at x={x}");
            }
        }
    }

    #[test]
    fn monotone_segment_counting() {
        let f = dec(&[(2.0, 3.0), (4.0, 1.0)], 0.0, 4.0);
        assert_eq!(f.monotone_segments(), 1);
        let two = Pcf::from_pieces(
            &[(1.0, fin(2.0)), (2.0, fin(5.0)), (3.0, fin(1.0))],
            0.0,
            3.0,
            Monotonicity::General,
        )
        .unwrap();
        assert_eq!(two.monotone_segments(), 2);
    }

    #[test]
    fn restrict_and_expand_round_trip() {
        let f = dec(&[(2.0, 3.0), (4.0, 1.0), (6.0, 0.5)], 0.0, 6.0);
        let r = f.restrict(1.0, 5.0).unwrap();
        assert_eq!(r.domain(), (1.0, 5.0));
        for &x in &[1.0, 1.5, 2.0, 3.0, 4.0, 4.5] {
            assert_eq!(r.eval(x).unwrap(), f.eval(x).unwrap());
        }
        let e = r.expand(0.0, 8.0).unwrap();
        assert_eq!(e.eval(0.0).unwrap(), fin(3.0));
        assert_eq!(e.eval(7.0).unwrap(), fin(0.5));
    }

    pub(super) fn random_decreasing(rng: &mut impl rand::Rng) -> Pcf {
        random_decreasing_on(rng, 10.0)
    }

    pub(super) fn random_decreasing_on(rng: &mut impl rand::Rng, hi: f64) -> Pcf {
        let p = rng.gen_range(1..=6);
        let mut ends: Vec<f64> = (0..p)
            .map(|_| (rng.gen_range(1..=(hi as i64 * 2)) as f64) / 2.0)
            .collect();
        ends.sort_unstable_by(f64::total_cmp);
        ends.dedup();
        *ends.last_mut().unwrap() = hi;
        ends.dedup();
        let mut vals: Vec<f64> = (0..ends.len())
            .map(|_| rng.gen_range(0..100) as f64 / 4.0)
            .collect();
        vals.sort_unstable_by(|a, b| b.total_cmp(a));
        let pieces: Vec<(f64, ExtValue)> = ends
            .iter()
            .zip(vals.iter())
            .map(|(&e, &v)| (e, ExtValue::finite(v)))
            .collect();
        Pcf::from_pieces(&pieces, 0.0, hi, Monotonicity::Decreasing).unwrap()
    }
}
