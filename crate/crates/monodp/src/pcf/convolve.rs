//! (min,+)-convolution of piecewise constant functions, plus the
//! (max,+)/(min,−)/(max,−) variants derived from it.
//!
//! Two algorithms are provided. The monotone algorithm sorts all piece-value
//! pairs by their sum and assigns output pieces right-to-left; it requires at
//! least one monotonically decreasing operand, runs in `O(p² log p)`, and
//! produces a witness for argmin recovery. The general algorithm sweeps the
//! `p²` constant rectangles of the sum in increasing value order, tracking
//! already-assigned regions in a [`NoiSet`]; it needs no monotonicity.
//!
//! Convolutions of step functions that encode index sequences (one entry per
//! unit interval) use a variant of the rectangle sweep whose output interval
//! per rectangle is shrunk by one, which yields the exact sequence
//! convolution `a_k = min_{i+j=k} (u_i + w_j)` instead of its continuous
//! smear across adjacent diagonals.

use super::noi::NoiSet;
use super::{ExtValue, Monotonicity, Pcf, PcfError};
use crate::util::OrdF64;
use std::collections::BTreeMap;

/// Per-piece provenance of a convolution: which operand pieces produced each
/// span of the (unpruned) result. Kept separate from the pruned [`Pcf`] so
/// that pruning does not lose argmin information.
#[derive(Clone, Debug)]
pub struct ConvWitness {
    /// Right endpoints of the witness spans, ascending, last = domain hi.
    ends: Vec<f64>,
    /// 0-based operand piece indices `(i, j)` per span.
    pairs: Vec<(u32, u32)>,
    lo: f64,
    /// Valid splits of a query `x` satisfy `x1 + x2 = x + sum_offset`.
    sum_offset: f64,
}

impl ConvWitness {
    fn lookup(&self, x: f64) -> Option<(u32, u32)> {
        if x < self.lo || x > *self.ends.last()? {
            return None;
        }
        let idx = self.ends.partition_point(|&e| e <= x);
        let idx = idx.min(self.pairs.len() - 1);
        Some(self.pairs[idx])
    }
}

fn require_monotone_pair(f1: &Pcf, f2: &Pcf) -> Result<(), PcfError> {
    if f1.tag() != Monotonicity::Decreasing && f2.tag() != Monotonicity::Decreasing {
        return Err(PcfError::PreconditionViolated);
    }
    Ok(())
}

/// Sorted-pair sweep on the combined domain `[l1+l2, h1+h2]`.
fn convolve_pairs(f1: &Pcf, f2: &Pcf, sum_offset: f64) -> Result<(Pcf, ConvWitness), PcfError> {
    let combined_lo = f1.lo() + f2.lo();
    let combined_hi = f1.hi() + f2.hi();
    let p1 = f1.num_pieces();
    let p2 = f2.num_pieces();
    let mut pairs: Vec<(ExtValue, u32, u32)> = Vec::with_capacity(p1 * p2);
    for i in 0..p1 {
        for j in 0..p2 {
            let v = f1.values()[i].checked_add(f2.values()[j])?;
            pairs.push((v, i as u32, j as u32));
        }
    }
    // ties broken lexicographically so witnesses are deterministic
    pairs.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut x_max = combined_hi;
    let mut rev: Vec<(f64, ExtValue, (u32, u32))> = Vec::new();
    for &(v, i, j) in &pairs {
        let start_sum = f1.piece_start(i as usize) + f2.piece_start(j as usize);
        if start_sum < x_max {
            rev.push((x_max, v, (i, j)));
            x_max = start_sum;
        }
        if x_max <= combined_lo {
            break;
        }
    }
    debug_assert_eq!(x_max, combined_lo);
    rev.reverse();

    let ends: Vec<f64> = rev.iter().map(|p| p.0).collect();
    let values: Vec<ExtValue> = rev.iter().map(|p| p.1).collect();
    let wit_pairs: Vec<(u32, u32)> = rev.iter().map(|p| p.2).collect();
    let witness = ConvWitness {
        ends: ends.clone(),
        pairs: wit_pairs,
        lo: combined_lo,
        sum_offset,
    };
    let pcf = Pcf::from_raw(
        combined_lo,
        combined_hi,
        ends,
        values,
        Monotonicity::Decreasing,
    );
    Ok((pcf, witness))
}

/// `(min,+)`-convolution of two functions over a shared domain `[lo, hi]`:
/// `f(x) = min_{x̄} f1(x̄) + f2(x - x̄)` with both arguments taken inside the
/// domain after translating it to `[0, hi-lo]`. At least one operand must be
/// decreasing; the result is decreasing, has at most `p1·p2` pieces, and the
/// witness recovers an argmin split per query point.
pub fn convolve_monotone(f1: &Pcf, f2: &Pcf) -> Result<(Pcf, ConvWitness), PcfError> {
    if f1.domain() != f2.domain() {
        return Err(PcfError::DomainMismatch);
    }
    require_monotone_pair(f1, f2)?;
    let lo = f1.lo();
    let hi = f1.hi();
    let (combined, mut witness) = convolve_pairs(f1, f2, lo)?;
    // combined lives on [2lo, 2hi]; the shared-domain convolution is the
    // slice [2lo, lo+hi] shifted back onto [lo, hi]
    let result = if lo == 0.0 {
        combined.restrict(lo, hi)?
    } else {
        combined.translate(-lo).restrict(lo, hi)?
    };
    if lo != 0.0 {
        for e in witness.ends.iter_mut() {
            *e -= lo;
        }
        witness.lo -= lo;
    }
    let cut = witness.ends.partition_point(|&e| e < hi);
    witness.ends.truncate(cut + 1);
    witness.pairs.truncate(cut + 1);
    if let Some(last) = witness.ends.last_mut() {
        *last = hi;
    }
    assert!(result.num_pieces() <= f1.num_pieces() * f2.num_pieces());
    Ok((result, witness))
}

/// `(min,+)`-convolution on the combined domain `[l1+l2, h1+h2]` of two
/// decreasing functions whose first pieces are `+∞` plateaus or whose edge
/// values saturate (so that splits outside the stored domains are dominated).
/// Used by DPs whose rows live on differing domains.
pub fn convolve_monotone_combined(f1: &Pcf, f2: &Pcf) -> Result<(Pcf, ConvWitness), PcfError> {
    if f1.tag() != Monotonicity::Decreasing || f2.tag() != Monotonicity::Decreasing {
        return Err(PcfError::PreconditionViolated);
    }
    convolve_pairs(f1, f2, 0.0)
}

/// Recover `x̄*` with `f(x) = f1(x̄*) + f2(x - x̄*)` (shifted by the witness'
/// sum offset on non-zero-based domains) in `O(log p)`. The returned split
/// re-evaluates exactly.
pub fn witness_argmin(
    f: &Pcf,
    w: &ConvWitness,
    f1: &Pcf,
    f2: &Pcf,
    x: f64,
) -> Result<f64, PcfError> {
    let fx = f.eval(x)?;
    let (i, j) = w.lookup(x).ok_or(PcfError::OutOfDomain)?;
    let (i, j) = (i as usize, j as usize);
    let s = x + w.sum_offset;
    let piece1 = (f1.piece_start(i), f1.ends()[i]);
    let piece2 = (f2.piece_start(j), f2.ends()[j]);
    let mut candidates: Vec<f64> = Vec::with_capacity(6);
    candidates.push(piece1.0);
    candidates.push(s - piece2.0);
    // overshoot correction from the witness recovery argument: move right of
    // piece1.0 until the complement falls back into piece j, then half a
    // minimum width to land strictly inside both pieces
    let delta = (s - piece1.0) - piece2.1;
    if delta > 0.0 {
        let base = piece1.0 + delta;
        candidates.push(base + 0.5 * (piece1.1 - base).min(piece2.1 - piece2.0));
        candidates.push(base);
    }
    let lo_bound = piece1.0.max(s - piece2.1);
    let hi_bound = piece1.1.min(s - piece2.0);
    candidates.push(0.5 * (lo_bound + hi_bound));
    candidates.push(hi_bound);
    for cand in candidates {
        if cand < f1.lo() || cand > f1.hi() {
            continue;
        }
        let other = s - cand;
        if other < f2.lo() || other > f2.hi() {
            continue;
        }
        let sum = match f1.eval_unchecked(cand).checked_add(f2.eval_unchecked(other)) {
            Ok(v) => v,
            Err(_) => continue,
        };
        if sum == fx {
            return Ok(cand);
        }
    }
    Err(PcfError::PreconditionViolated)
}

/// `(max,+)`-convolution of two increasing functions with finite,
/// non-negative values, via negation and an offset that keeps the inner
/// `(min,+)` operands non-negative. The witness indexes operand pieces
/// one-to-one, so `witness_argmin` works against the original operands.
pub fn maxplus_convolve(f1: &Pcf, f2: &Pcf) -> Result<(Pcf, ConvWitness), PcfError> {
    if f1.tag() != Monotonicity::Increasing || f2.tag() != Monotonicity::Increasing {
        return Err(PcfError::PreconditionViolated);
    }
    if f1.values().iter().chain(f2.values()).any(|v| !v.is_finite()) {
        return Err(PcfError::PreconditionViolated);
    }
    let c = f1
        .max_finite()
        .unwrap_or(0.0)
        .max(f2.max_finite().unwrap_or(0.0))
        + 1.0;
    let g1 = f1.negate().add_const(c);
    let g2 = f2.negate().add_const(c);
    let (conv, witness) = convolve_monotone(&g1, &g2)?;
    let result = conv.add_const(-2.0 * c).negate();
    debug_assert!(result.satisfies(Monotonicity::Increasing));
    Ok((result, witness))
}

#[derive(Clone, Copy, PartialEq)]
enum SweepMode {
    /// Continuous semantics: rectangle `(i, j)` covers `[s_i+s_j, e_i+e_j)`.
    Continuous,
    /// Integer-sequence semantics: the output interval shrinks by one so a
    /// rectangle covers exactly the diagonals `s_i+s_j ..= e_i+e_j-2`.
    Sequence,
}

/// Rectangle sweep in increasing value order over a [`NoiSet`] of already
/// assigned regions.
fn sweep_convolve(f1: &Pcf, f2: &Pcf, mode: SweepMode) -> Result<Pcf, PcfError> {
    let shrink = match mode {
        SweepMode::Continuous => 0.0,
        SweepMode::Sequence => 1.0,
    };
    let combined_lo = f1.lo() + f2.lo();
    let combined_hi = f1.hi() + f2.hi() - shrink;

    struct Rect {
        lo: f64,
        hi: f64,
        value: ExtValue,
        i: u32,
        j: u32,
    }
    let mut rects: Vec<Rect> = Vec::with_capacity(f1.num_pieces() * f2.num_pieces());
    for i in 0..f1.num_pieces() {
        for j in 0..f2.num_pieces() {
            let value = f1.values()[i].checked_add(f2.values()[j])?;
            let lo = f1.piece_start(i) + f2.piece_start(j);
            let hi = f1.ends()[i] + f2.ends()[j] - shrink;
            debug_assert!(lo < hi);
            rects.push(Rect {
                lo,
                hi,
                value,
                i: i as u32,
                j: j as u32,
            });
        }
    }
    rects.sort_unstable_by(|a, b| a.value.cmp(&b.value).then(a.i.cmp(&b.i)).then(a.j.cmp(&b.j)));

    let mut covered = NoiSet::new();
    let mut assigned: BTreeMap<OrdF64, (f64, ExtValue)> = BTreeMap::new();
    let mut emit = |from: f64, to: f64, v: ExtValue| {
        if from < to {
            assigned.insert(OrdF64::new(from), (to, v));
        }
    };
    for r in &rects {
        let mut z = r.lo;
        loop {
            match covered.closest_larger(z) {
                Some((a, b)) if b < r.hi => {
                    if z < a {
                        emit(z, a, r.value);
                    }
                    z = b;
                }
                Some((a, _)) => {
                    if z < a {
                        emit(z, a.min(r.hi), r.value);
                    }
                    break;
                }
                None => {
                    emit(z, r.hi, r.value);
                    break;
                }
            }
        }
        covered.insert(r.lo, r.hi)?;
    }

    let mut ends = Vec::with_capacity(assigned.len());
    let mut values = Vec::with_capacity(assigned.len());
    let mut cursor = combined_lo;
    for (start, (end, v)) in assigned {
        debug_assert_eq!(start.0, cursor);
        ends.push(end);
        values.push(v);
        cursor = end;
    }
    debug_assert_eq!(cursor, combined_hi);
    let out = Pcf::from_raw(
        combined_lo,
        combined_hi,
        ends,
        values,
        Monotonicity::General,
    );
    assert!(out.num_pieces() <= (f1.num_pieces() + 1) * (f2.num_pieces() + 1));
    Ok(out)
}

/// `(min,+)`-convolution without any monotonicity requirement, on the
/// combined domain `[l1+l2, h1+h2]`: the rectangle sweep of the general
/// convolution lemma. `O(p² log p)` time, at most `(p1+1)(p2+1)` pieces.
pub fn convolve_general(f1: &Pcf, f2: &Pcf) -> Result<Pcf, PcfError> {
    sweep_convolve(f1, f2, SweepMode::Continuous)
}

/// Exact sequence `(min,+)`-convolution of step functions with integer
/// breakpoints where the value on `[k, k+1)` is entry `k`.
fn convolve_sequence(f1: &Pcf, f2: &Pcf) -> Result<Pcf, PcfError> {
    debug_assert!(f1.ends().iter().chain(f2.ends()).all(|e| e.fract() == 0.0));
    sweep_convolve(f1, f2, SweepMode::Sequence)
}

/// `(min,−)`-convolution of integer-grid step sequences:
/// `a_k = min_i { f_i − g_{k−i} }`, computed as `f ⊕ (−g)`.
pub fn minminus_convolve(f: &Pcf, g: &Pcf) -> Result<Pcf, PcfError> {
    convolve_sequence(f, &g.negate())
}

/// `(max,−)`-convolution of integer-grid step sequences:
/// `b_k = max_i { f_i − g_{k−i} } = −min_i { −f_i + g_{k−i} }`.
pub fn maxminus_convolve(f: &Pcf, g: &Pcf) -> Result<Pcf, PcfError> {
    Ok(convolve_sequence(&f.negate(), g)?.negate())
}
