//! ℓ∞-necklace alignment with additive error.
//!
//! Two sorted bead vectors `x, y ∈ [0,1)^n` are aligned by choosing a cyclic
//! shift `s` and an offset `c` minimizing the maximum circular distance
//! between matched beads. Beads are stored only as rounded run-length list
//! representations (multiples of `δ = ε/2`), so the state needs `O(1/ε)`
//! space regardless of `n`. A query builds the padded vector `x'` (plus
//! `+∞`s), the mirrored double `y'`, and the `-∞`-padded `x''`, computes
//! `a = (min,−)(x', y')` and `b = (max,−)(x'', y')`, and minimizes
//! `v_s = ½(b − a)` at the index-window positions `2n − s − 1`. The optimal
//! offset for a fixed shift is `c = −½(min z + max z)`.

use crate::pcf::{maxminus_convolve, minminus_convolve, ExtValue, Monotonicity, Pcf, PcfError};
use crate::textio::{field, records, ParseError};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NecklaceError {
    UnsortedBeads,
    LengthMismatch,
    WouldUnsort,
    IndexOutOfRange,
    BadEpsilon,
    Internal,
}

impl fmt::Display for NecklaceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            NecklaceError::UnsortedBeads => "bead vectors must be sorted",
            NecklaceError::LengthMismatch => "bead vectors must have equal lengths",
            NecklaceError::WouldUnsort => "insertion would break the sorted order",
            NecklaceError::IndexOutOfRange => "bead index out of range",
            NecklaceError::BadEpsilon => "epsilon must be positive",
            NecklaceError::Internal => "internal convolution failure",
        };
        f.write_str(msg)
    }
}

impl std::error::Error for NecklaceError {}

impl From<PcfError> for NecklaceError {
    fn from(_: PcfError) -> Self {
        NecklaceError::Internal
    }
}

/// Alignment value with its `(c, s)` witness. The offset is recovered from
/// rounded data, so it is an ε-approximate witness.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlignmentResult {
    pub value: f64,
    pub offset: f64,
    pub shift: usize,
}

/// Run-length encoded sorted vector of rounded values: `(value, count)` runs
/// in non-decreasing value order. The live count per rounded value keeps
/// deletion by index well-defined even though raw beads are never stored.
#[derive(Clone, Debug, Default, PartialEq)]
struct RunVec {
    runs: Vec<(f64, usize)>,
    len: usize,
}

impl RunVec {
    fn from_rounded(values: &[f64]) -> RunVec {
        let mut rv = RunVec::default();
        for &v in values {
            match rv.runs.last_mut() {
                Some((last, count)) if *last == v => *count += 1,
                _ => rv.runs.push((v, 1)),
            }
        }
        rv.len = values.len();
        rv
    }

    fn num_runs(&self) -> usize {
        self.runs.len()
    }

    /// Value of the bead at `idx`.
    fn value_at(&self, mut idx: usize) -> Option<f64> {
        for &(v, c) in &self.runs {
            if idx < c {
                return Some(v);
            }
            idx -= c;
        }
        None
    }

    /// Insert a rounded value at position `idx`; the position must be
    /// compatible with the sorted order of the rounded representation.
    fn insert_at(&mut self, idx: usize, v: f64) -> Result<(), NecklaceError> {
        if idx > self.len {
            return Err(NecklaceError::IndexOutOfRange);
        }
        if idx > 0 && self.value_at(idx - 1).map_or(false, |prev| prev > v) {
            return Err(NecklaceError::WouldUnsort);
        }
        if idx < self.len && self.value_at(idx).map_or(false, |next| next < v) {
            return Err(NecklaceError::WouldUnsort);
        }
        // find the run containing the position (or the append point)
        let mut i = 0;
        let mut off = idx;
        while i < self.runs.len() && off >= self.runs[i].1 {
            off -= self.runs[i].1;
            i += 1;
        }
        if i < self.runs.len() && (off > 0 || self.runs[i].0 == v) {
            // strictly inside a run the order checks force equal values
            if self.runs[i].0 != v {
                return Err(NecklaceError::WouldUnsort);
            }
            self.runs[i].1 += 1;
        } else if i > 0 && self.runs[i - 1].0 == v {
            self.runs[i - 1].1 += 1;
        } else {
            self.runs.insert(i, (v, 1));
        }
        self.len += 1;
        Ok(())
    }

    fn delete_at(&mut self, idx: usize) -> Result<(), NecklaceError> {
        if idx >= self.len {
            return Err(NecklaceError::IndexOutOfRange);
        }
        let mut pos = idx;
        let mut i = 0;
        while pos >= self.runs[i].1 {
            pos -= self.runs[i].1;
            i += 1;
        }
        if self.runs[i].1 == 1 {
            self.runs.remove(i);
        } else {
            self.runs[i].1 -= 1;
        }
        self.len -= 1;
        Ok(())
    }

    /// Materialize the rounded vector (test hook; queries never need it).
    fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len);
        for &(v, c) in &self.runs {
            out.extend(std::iter::repeat(v).take(c));
        }
        out
    }
}

/// Dynamic alignment state over the rounded list representations.
#[derive(Clone, Debug)]
pub struct NecklaceState {
    x: RunVec,
    y: RunVec,
    eps: f64,
    delta: f64,
}

fn round_down(v: f64, delta: f64) -> f64 {
    (v / delta).floor() * delta
}

impl NecklaceState {
    pub fn new(eps: f64) -> Result<NecklaceState, NecklaceError> {
        if !(eps > 0.0) {
            return Err(NecklaceError::BadEpsilon);
        }
        Ok(NecklaceState {
            x: RunVec::default(),
            y: RunVec::default(),
            eps,
            delta: eps / 2.0,
        })
    }

    pub fn from_beads(x: &[f64], y: &[f64], eps: f64) -> Result<NecklaceState, NecklaceError> {
        if x.len() != y.len() {
            return Err(NecklaceError::LengthMismatch);
        }
        if x.windows(2).any(|w| w[0] > w[1]) || y.windows(2).any(|w| w[0] > w[1]) {
            return Err(NecklaceError::UnsortedBeads);
        }
        let mut s = NecklaceState::new(eps)?;
        let xr: Vec<f64> = x.iter().map(|&v| round_down(v, s.delta)).collect();
        let yr: Vec<f64> = y.iter().map(|&v| round_down(v, s.delta)).collect();
        s.x = RunVec::from_rounded(&xr);
        s.y = RunVec::from_rounded(&yr);
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.x.len
    }

    pub fn is_empty(&self) -> bool {
        self.x.len == 0
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Piece counts of the two stored representations.
    pub fn piece_counts(&self) -> (usize, usize) {
        (self.x.num_runs(), self.y.num_runs())
    }

    /// Insert `alpha` at position `i` of `x` and `beta` at position `i` of
    /// `y` (both rounded down to multiples of δ).
    pub fn insert(&mut self, i: usize, alpha: f64, beta: f64) -> Result<(), NecklaceError> {
        let a = round_down(alpha, self.delta);
        let b = round_down(beta, self.delta);
        self.x.insert_at(i, a)?;
        match self.y.insert_at(i, b) {
            Ok(()) => Ok(()),
            Err(e) => {
                self.x.delete_at(i).expect("undo of a fresh insert");
                Err(e)
            }
        }
    }

    pub fn delete(&mut self, i: usize) -> Result<(), NecklaceError> {
        if i >= self.len() {
            return Err(NecklaceError::IndexOutOfRange);
        }
        self.x.delete_at(i)?;
        self.y.delete_at(i)?;
        Ok(())
    }

    /// Rounded vectors, materialized (test hook).
    pub fn rounded_vectors(&self) -> (Vec<f64>, Vec<f64>) {
        (self.x.to_vec(), self.y.to_vec())
    }

    /// Run the alignment pipeline on the stored representations.
    pub fn query(&self) -> Result<AlignmentResult, NecklaceError> {
        let n = self.len();
        if n == 0 {
            // empty necklaces align vacuously
            return Ok(AlignmentResult {
                value: 0.0,
                offset: 0.0,
                shift: 0,
            });
        }
        // x' = x padded with n +inf entries, x'' with n -inf entries, both
        // step functions over [0, 2n); y' is y reversed and doubled
        let mut x_inf: Vec<(f64, ExtValue)> = Vec::with_capacity(self.x.num_runs() + 1);
        let mut pos = 0usize;
        for &(v, c) in &self.x.runs {
            pos += c;
            x_inf.push((pos as f64, ExtValue::finite(v)));
        }
        let mut x_minus = x_inf.clone();
        x_inf.push((2.0 * n as f64, ExtValue::PlusInf));
        x_minus.push((2.0 * n as f64, ExtValue::MinusInf));
        let x_up =
            Pcf::from_pieces(&x_inf, 0.0, 2.0 * n as f64, Monotonicity::General)?;
        let x_down =
            Pcf::from_pieces(&x_minus, 0.0, 2.0 * n as f64, Monotonicity::General)?;
        let mut y_rd: Vec<(f64, ExtValue)> = Vec::with_capacity(2 * self.y.num_runs());
        let mut pos = 0usize;
        for _ in 0..2 {
            for &(v, c) in self.y.runs.iter().rev() {
                pos += c;
                y_rd.push((pos as f64, ExtValue::finite(v)));
            }
        }
        let y_prime = Pcf::from_pieces(&y_rd, 0.0, 2.0 * n as f64, Monotonicity::General)?;

        let a = minminus_convolve(&x_up, &y_prime)?;
        let b = maxminus_convolve(&x_down, &y_prime)?;

        // v_s = (b - a) / 2 at positions 2n - s - 1, s in [0, n)
        let mut best: Option<(f64, usize, f64)> = None;
        for s in 0..n {
            let k = (2 * n - s - 1) as f64;
            let lo = a.eval(k)?;
            let hi = b.eval(k)?;
            let (lo, hi) = (lo.to_f64(), hi.to_f64());
            let v = 0.5 * (hi - lo);
            if best.map_or(true, |(bv, _, _)| v < bv) {
                best = Some((v, s, -0.5 * (lo + hi)));
            }
        }
        let (value, shift, offset) = best.expect("n > 0");
        Ok(AlignmentResult {
            value,
            offset,
            shift,
        })
    }
}

/// Static alignment: round the inputs, then run the query pipeline. The
/// returned value is within additive `eps` of the exact optimum.
pub fn neck_static(x: &[f64], y: &[f64], eps: f64) -> Result<AlignmentResult, NecklaceError> {
    NecklaceState::from_beads(x, y, eps)?.query()
}

/// Bead file: `n eps`, then `n` lines `x_i y_i`.
#[derive(Clone, Debug)]
pub struct NeckInstance {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub eps: f64,
}

pub fn parse_instance(text: &str) -> Result<NeckInstance, ParseError> {
    let recs = records(text);
    let (line, header) = recs
        .first()
        .ok_or_else(|| ParseError::new(0, "empty bead file"))?;
    let n: usize = field(header, 0, *line, "bead count")?;
    let eps: f64 = field(header, 1, *line, "eps")?;
    if recs.len() != n + 1 {
        return Err(ParseError::new(
            *line,
            format!("expected {n} bead lines, found {}", recs.len() - 1),
        ));
    }
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for (line, fields) in &recs[1..] {
        x.push(field(fields, 0, *line, "x bead")?);
        y.push(field(fields, 1, *line, "y bead")?);
    }
    Ok(NeckInstance { x, y, eps })
}

/// Trace ops: `insert i a b` | `delete i` | `query`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TraceOp {
    Insert { at: usize, alpha: f64, beta: f64 },
    Delete { at: usize },
    Query,
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceOp>, ParseError> {
    let mut ops = Vec::new();
    for (line, fields) in records(text) {
        let op = match fields[0] {
            "insert" => TraceOp::Insert {
                at: field(&fields, 1, line, "position")?,
                alpha: field(&fields, 2, line, "alpha")?,
                beta: field(&fields, 3, line, "beta")?,
            },
            "delete" => TraceOp::Delete {
                at: field(&fields, 1, line, "position")?,
            },
            "query" => TraceOp::Query,
            other => return Err(ParseError::new(line, format!("unknown op: {other}"))),
        };
        ops.push(op);
    }
    Ok(ops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::oracle_necklace;
    use rand::{Rng, SeedableRng};

    fn sorted_beads(rng: &mut impl Rng, n: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(0..1000) as f64 / 1000.0).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn identical_necklaces_align_to_zero() {
        let x = [0.1, 0.3, 0.8];
        let r = neck_static(&x, &x, 0.05).unwrap();
        assert!(r.value <= 0.05);
    }

    #[test]
    fn single_bead_aligns_exactly() {
        // one pair is always perfectly alignable through the offset
        let r = neck_static(&[0.2], &[0.7], 0.01).unwrap();
        let oracle = oracle_necklace(&[0.2], &[0.7]).unwrap();
        assert!(r.value >= oracle - 1e-12);
        assert!(r.value <= oracle + 0.01 + 1e-12);
    }

    #[test]
    fn empty_necklace_has_value_zero() {
        let s = NecklaceState::new(0.1).unwrap();
        assert_eq!(s.query().unwrap().value, 0.0);
    }

    #[test]
    fn static_matches_oracle_within_eps() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for &eps in &[0.05, 0.01] {
            for _ in 0..80 {
                let n = rng.gen_range(1..=10);
                let x = sorted_beads(&mut rng, n);
                let y = sorted_beads(&mut rng, n);
                let r = neck_static(&x, &y, eps).unwrap();
                let opt = oracle_necklace(&x, &y).unwrap();
                assert!(
                    r.value >= opt - eps - 1e-12 && r.value <= opt + eps + 1e-12,
                    "value {} vs oracle {opt} (eps {eps})",
                    r.value
                );
            }
        }
    }

    #[test]
    fn index_window_matches_per_shift_formula() {
        // check a and b entry-by-entry against the direct z(s) formula
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..40 {
            let n = rng.gen_range(1..=6);
            let x = sorted_beads(&mut rng, n);
            let y = sorted_beads(&mut rng, n);
            let st = NecklaceState::from_beads(&x, &y, 0.01).unwrap();
            let (xr, yr) = st.rounded_vectors();
            // rebuild the pipeline pieces by hand
            let n_f = n as f64;
            let mut x_pieces: Vec<(f64, ExtValue)> = xr
                .iter()
                .enumerate()
                .map(|(i, &v)| ((i + 1) as f64, ExtValue::finite(v)))
                .collect();
            x_pieces.push((2.0 * n_f, ExtValue::PlusInf));
            let x_up = Pcf::from_pieces(&x_pieces, 0.0, 2.0 * n_f, Monotonicity::General).unwrap();
            let mut y_rd: Vec<(f64, ExtValue)> = Vec::new();
            for k in 0..2 * n {
                y_rd.push(((k + 1) as f64, ExtValue::finite(yr[n - 1 - (k % n)])));
            }
            let y_prime = Pcf::from_pieces(&y_rd, 0.0, 2.0 * n_f, Monotonicity::General).unwrap();
            let a = minminus_convolve(&x_up, &y_prime).unwrap();
            for s in 0..n {
                let pos = (2 * n - s - 1) as f64;
                let expect = (0..n)
                    .map(|i| xr[i] - yr[(i + s) % n])
                    .fold(f64::INFINITY, f64::min);
                assert_eq!(a.eval(pos).unwrap().to_f64(), expect, "s={s}");
            }
        }
    }

    #[test]
    fn insert_then_delete_restores_the_representation() {
        let mut s = NecklaceState::from_beads(&[0.1, 0.5], &[0.2, 0.6], 0.1).unwrap();
        let before = s.clone();
        s.insert(1, 0.3, 0.4).unwrap();
        s.delete(1).unwrap();
        assert_eq!(s.rounded_vectors(), before.rounded_vectors());
    }

    #[test]
    fn dynamic_trace_tracks_the_oracle_and_from_scratch_state() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        let eps = 0.05;
        let mut s = NecklaceState::new(eps).unwrap();
        let mut x: Vec<f64> = Vec::new();
        let mut y: Vec<f64> = Vec::new();
        for _ in 0..100 {
            if x.len() < 10 && (x.is_empty() || rng.gen_bool(0.6)) {
                // choose an insertion position and values preserving order
                let i = rng.gen_range(0..=x.len());
                let alpha = legal_value(&x, i, &mut rng);
                let beta = legal_value(&y, i, &mut rng);
                s.insert(i, alpha, beta).unwrap();
                x.insert(i, alpha);
                y.insert(i, beta);
            } else {
                let i = rng.gen_range(0..x.len());
                s.delete(i).unwrap();
                x.remove(i);
                y.remove(i);
            }
            // representation equals from-scratch rounding of the vectors
            let fresh = NecklaceState::from_beads(&x, &y, eps).unwrap();
            assert_eq!(s.rounded_vectors(), fresh.rounded_vectors());
            // piece budget
            let (px, py) = s.piece_counts();
            let budget = (2.0 / eps).ceil() as usize + 2;
            assert!(px <= budget && py <= budget);
            // value within eps of the oracle on the true vectors
            let v = s.query().unwrap().value;
            let opt = oracle_necklace(&x, &y).unwrap();
            assert!(
                v >= opt - eps - 1e-12 && v <= opt + eps + 1e-12,
                "v={v} opt={opt}"
            );
        }
    }

    fn legal_value(v: &[f64], i: usize, rng: &mut impl Rng) -> f64 {
        let lo = if i == 0 { 0.0 } else { v[i - 1] };
        let hi = if i == v.len() { 1.0 - 1e-9 } else { v[i] };
        lo + (hi - lo) * rng.gen_range(0..=100) as f64 / 100.0
    }

    #[test]
    fn query_is_deterministic() {
        let s = NecklaceState::from_beads(&[0.1, 0.4], &[0.3, 0.9], 0.05).unwrap();
        assert_eq!(s.query().unwrap(), s.query().unwrap());
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert_eq!(
            neck_static(&[0.5, 0.1], &[0.1, 0.5], 0.1).unwrap_err(),
            NecklaceError::UnsortedBeads
        );
        assert_eq!(
            neck_static(&[0.5], &[0.1, 0.5], 0.1).unwrap_err(),
            NecklaceError::LengthMismatch
        );
        let mut s = NecklaceState::from_beads(&[0.2, 0.8], &[0.2, 0.8], 0.1).unwrap();
        assert_eq!(
            s.insert(1, 0.9, 0.5).unwrap_err(),
            NecklaceError::WouldUnsort
        );
        assert_eq!(s.delete(7).unwrap_err(), NecklaceError::IndexOutOfRange);
    }
}
