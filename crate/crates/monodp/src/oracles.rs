//! Brute-force reference implementations.
//!
//! These are deliberately simple and exponential: exhaustive subset search
//! for knapsack, assignment enumeration for partitioning, source-set
//! enumeration with an exact tree-flow check for source location, and the
//! per-shift closed form for necklace alignment. They share no code with the
//! solvers they validate and refuse inputs beyond a fixed size budget.
//!
//! Functions are represented as plain `(end, value)` breakpoint slices with
//! `f64::INFINITY` / `f64::NEG_INFINITY` standing in for the extended
//! values, so the oracles do not depend on the crate's function types.

use std::fmt;

/// Hard instance-size limits; oracles refuse anything larger.
pub mod budget {
    pub const KNAPSACK_MAX_ITEMS: usize = 20;
    pub const TREE_MAX_VERTICES: usize = 12;
    pub const NECKLACE_MAX_BEADS: usize = 10;
    pub const PCF_MAX_GRID: usize = 10_000;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleError {
    BudgetExceeded,
    Infeasible,
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::BudgetExceeded => f.write_str("instance exceeds the oracle budget"),
            OracleError::Infeasible => f.write_str("instance is infeasible"),
        }
    }
}

impl std::error::Error for OracleError {}

/// Exhaustive 0-1 knapsack: max total price over subsets of weight at most
/// `budget`. Items are `(price, weight)` pairs.
pub fn oracle_knapsack(items: &[(f64, f64)], budget: f64) -> Result<f64, OracleError> {
    if items.len() > budget::KNAPSACK_MAX_ITEMS {
        return Err(OracleError::BudgetExceeded);
    }
    let mut best = 0.0f64;
    for mask in 0u32..(1 << items.len()) {
        let mut w = 0.0;
        let mut p = 0.0;
        for (i, &(price, weight)) in items.iter().enumerate() {
            if mask >> i & 1 == 1 {
                w += weight;
                p += price;
            }
        }
        if w <= budget {
            best = best.max(p);
        }
    }
    Ok(best)
}

/// A function as a plain breakpoint list: value `v_i` on
/// `[end_{i-1}, end_i)` (first piece starts at `lo`), closed at the last
/// end.
#[derive(Clone, Debug)]
pub struct PlainPcf {
    pub lo: f64,
    pub ends: Vec<f64>,
    pub values: Vec<f64>,
}

impl PlainPcf {
    pub fn hi(&self) -> f64 {
        *self.ends.last().unwrap()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let idx = self.ends.partition_point(|&e| e <= x);
        if idx == self.ends.len() {
            *self.values.last().unwrap()
        } else {
            self.values[idx]
        }
    }

    fn piece_start(&self, i: usize) -> f64 {
        if i == 0 {
            self.lo
        } else {
            self.ends[i - 1]
        }
    }
}

/// Pointwise (min,+)-convolution over a shared domain, by brute force over
/// split points drawn from breakpoint pairs. Evaluates the right-continuous
/// step extension: the closed right endpoint of the domain carries the final
/// piece's value, matching the list-representation convention.
pub fn oracle_convolution(
    f1: &PlainPcf,
    f2: &PlainPcf,
    grid: &[f64],
) -> Result<Vec<f64>, OracleError> {
    if grid.len() > budget::PCF_MAX_GRID {
        return Err(OracleError::BudgetExceeded);
    }
    let lo = f1.lo;
    let hi = f1.hi();
    let mut out = Vec::with_capacity(grid.len());
    for &x in grid {
        let probe = if x == hi { x - (hi - lo) * 1e-12 } else { x };
        let mut best = f64::INFINITY;
        let mut candidates: Vec<f64> = vec![lo, probe];
        for i in 0..f1.values.len() {
            candidates.push(f1.piece_start(i));
        }
        for j in 0..f2.values.len() {
            candidates.push(probe + lo - f2.piece_start(j));
        }
        for c in candidates {
            if c < lo || c > probe {
                continue;
            }
            let other = probe + lo - c;
            if other < lo || other > hi {
                continue;
            }
            let s = f1.eval(c) + f2.eval(other);
            if !s.is_nan() {
                best = best.min(s);
            }
        }
        out.push(best);
    }
    Ok(out)
}

/// Minimum cut over all k-part assignments with strict balance
/// `w(V_i) <= ceil(w(V)/k)`. Vertex weights default to 1 when `weights` is
/// `None`. Works on forests; returns `Infeasible` when no balanced
/// assignment exists.
pub fn oracle_partition(
    n: usize,
    edges: &[(usize, usize, f64)],
    k: usize,
    weights: Option<&[u32]>,
) -> Result<f64, OracleError> {
    if n > budget::TREE_MAX_VERTICES || k == 0 {
        return Err(OracleError::BudgetExceeded);
    }
    let w = |v: usize| weights.map_or(1, |ws| ws[v]) as f64;
    let total: f64 = (0..n).map(w).sum();
    let cap = (total / k as f64).ceil();
    let mut best = f64::INFINITY;
    let mut assign = vec![0usize; n];
    // enumerate k^n labeled assignments
    loop {
        let mut loads = vec![0.0f64; k];
        for v in 0..n {
            loads[assign[v]] += w(v);
        }
        if loads.iter().all(|&l| l <= cap) {
            let cut: f64 = edges
                .iter()
                .filter(|&&(u, v, _)| assign[u] != assign[v])
                .map(|&(_, _, c)| c)
                .sum();
            best = best.min(cut);
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == n {
                if best.is_finite() {
                    return Ok(best);
                }
                return Err(OracleError::Infeasible);
            }
            assign[i] += 1;
            if assign[i] < k {
                break;
            }
            assign[i] = 0;
            i += 1;
        }
    }
}

/// Instance for the source-location oracle: a rooted tree given by parent
/// pointers (`None` for the root), parent-edge capacities, demands, and
/// source eligibility flags.
#[derive(Clone, Debug)]
pub struct SslInstance {
    pub parent: Vec<Option<usize>>,
    pub cap_up: Vec<f64>,
    pub demand: Vec<f64>,
    pub source_allowed: Vec<bool>,
}

/// Net flow each subtree needs from its parent for a fixed source set, or
/// `None` when some edge capacity is exceeded. On trees a flow exists iff
/// every subtree's net deficit (clamped from below by what each child edge
/// can carry upward) is within its parent-edge capacity.
fn ssl_need(inst: &SslInstance, sources: u32, v: usize, children: &[Vec<usize>]) -> Option<f64> {
    let mut need = if sources >> v & 1 == 1 {
        f64::NEG_INFINITY
    } else {
        inst.demand[v]
    };
    for &c in &children[v] {
        let nc = ssl_need(inst, sources, c, children)?;
        if nc > inst.cap_up[c] {
            return None;
        }
        if need != f64::NEG_INFINITY {
            // a child can send at most cap(v,c) upward
            need += nc.max(-inst.cap_up[c]);
        }
    }
    Some(need)
}

/// Minimum number of sources that can supply all demands, by enumerating
/// source sets in order of increasing size; feasibility by the exact
/// bottom-up flow check.
pub fn oracle_ssl(inst: &SslInstance) -> Result<u32, OracleError> {
    let n = inst.parent.len();
    if n > budget::TREE_MAX_VERTICES {
        return Err(OracleError::BudgetExceeded);
    }
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut root = None;
    for v in 0..n {
        match inst.parent[v] {
            Some(p) => children[p].push(v),
            None => root = Some(v),
        }
    }
    let root = root.expect("rooted tree");
    let eligible: Vec<usize> = (0..n).filter(|&v| inst.source_allowed[v]).collect();
    let mut masks: Vec<u32> = (0u32..(1 << eligible.len())).collect();
    masks.sort_by_key(|m| m.count_ones());
    for mask in masks {
        let mut sources = 0u32;
        for (bit, &v) in eligible.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                sources |= 1 << v;
            }
        }
        if let Some(need) = ssl_need(inst, sources, root, &children) {
            if need <= 0.0 {
                return Ok(mask.count_ones());
            }
        }
    }
    Err(OracleError::Infeasible)
}

/// ℓ∞-necklace alignment by the per-shift closed form: for each shift `s`
/// compute `½(max_i z(s)_i − min_i z(s)_i)` with `z(s)_i = x_i − y_{(i+s) mod n}`,
/// take the minimum over shifts. Empty necklaces have objective 0.
pub fn oracle_necklace(x: &[f64], y: &[f64]) -> Result<f64, OracleError> {
    if x.len() != y.len() {
        return Err(OracleError::BudgetExceeded);
    }
    let n = x.len();
    if n > budget::NECKLACE_MAX_BEADS {
        return Err(OracleError::BudgetExceeded);
    }
    if n == 0 {
        return Ok(0.0);
    }
    let mut best = f64::INFINITY;
    for s in 0..n {
        let mut zmin = f64::INFINITY;
        let mut zmax = f64::NEG_INFINITY;
        for i in 0..n {
            let z = x[i] - y[(i + s) % n];
            zmin = zmin.min(z);
            zmax = zmax.max(z);
        }
        best = best.min(0.5 * (zmax - zmin));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knapsack_oracle_basics() {
        assert_eq!(oracle_knapsack(&[], 5.0).unwrap(), 0.0);
        // (p, w) items; the 3-item example has optimum 5 at budget 3
        let items = [(2.0, 1.0), (3.0, 2.0), (4.0, 3.0)];
        assert_eq!(oracle_knapsack(&items, 3.0).unwrap(), 5.0);
        // monotone in the budget
        let mut prev = 0.0;
        for b in 0..8 {
            let v = oracle_knapsack(&items, b as f64).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        // at full weight the whole set fits
        assert_eq!(oracle_knapsack(&items, 6.0).unwrap(), 9.0);
    }

    #[test]
    fn knapsack_oracle_refuses_large_instances() {
        let items = vec![(1.0, 1.0); 21];
        assert_eq!(
            oracle_knapsack(&items, 3.0).unwrap_err(),
            OracleError::BudgetExceeded
        );
    }

    #[test]
    fn convolution_oracle_identity_and_symmetry() {
        let f = PlainPcf {
            lo: 0.0,
            ends: vec![2.0, 4.0],
            values: vec![3.0, 1.0],
        };
        let zero = PlainPcf {
            lo: 0.0,
            ends: vec![4.0],
            values: vec![0.0],
        };
        let grid: Vec<f64> = (0..=8).map(|i| i as f64 / 2.0).collect();
        let with_zero = oracle_convolution(&f, &zero, &grid).unwrap();
        for (i, &x) in grid.iter().enumerate() {
            let probe = if x == 4.0 { x - 4e-12 } else { x };
            assert_eq!(with_zero[i], f.eval(probe));
        }
        let g = PlainPcf {
            lo: 0.0,
            ends: vec![1.0, 4.0],
            values: vec![2.0, 0.0],
        };
        let fg = oracle_convolution(&f, &g, &grid).unwrap();
        let gf = oracle_convolution(&g, &f, &grid).unwrap();
        assert_eq!(fg, gf);
    }

    #[test]
    fn partition_oracle_examples() {
        // single vertex, k = 1
        assert_eq!(oracle_partition(1, &[], 1, None).unwrap(), 0.0);
        // star K_{1,3}, unit caps, k=2: ceil(4/2)=2, best cut is 2
        let star = [(0usize, 1usize, 1.0), (0, 2, 1.0), (0, 3, 1.0)];
        assert_eq!(oracle_partition(4, &star, 2, None).unwrap(), 2.0);
        // forest with k = component count needs no cut
        let forest = [(0usize, 1usize, 5.0), (2usize, 3usize, 5.0)];
        assert_eq!(oracle_partition(4, &forest, 2, None).unwrap(), 0.0);
    }

    #[test]
    fn ssl_oracle_examples() {
        // all demands zero: no sources needed
        let inst = SslInstance {
            parent: vec![None, Some(0)],
            cap_up: vec![0.0, 1.0],
            demand: vec![0.0, 0.0],
            source_allowed: vec![true, true],
        };
        assert_eq!(oracle_ssl(&inst).unwrap(), 0);
        // path a-b with unit demands and caps: one source suffices
        let path = SslInstance {
            parent: vec![None, Some(0)],
            cap_up: vec![0.0, 1.0],
            demand: vec![1.0, 1.0],
            source_allowed: vec![true, true],
        };
        assert_eq!(oracle_ssl(&path).unwrap(), 1);
        // demand beyond reachable capacity with no local source
        let stuck = SslInstance {
            parent: vec![None, Some(0)],
            cap_up: vec![0.0, 1.0],
            demand: vec![0.0, 5.0],
            source_allowed: vec![true, false],
        };
        assert_eq!(oracle_ssl(&stuck).unwrap_err(), OracleError::Infeasible);
        // star with non-source center of demand 3, three unit-cap leaves
        let star = SslInstance {
            parent: vec![None, Some(0), Some(0), Some(0)],
            cap_up: vec![0.0, 1.0, 1.0, 1.0],
            demand: vec![3.0, 0.0, 0.0, 0.0],
            source_allowed: vec![false, true, true, true],
        };
        assert_eq!(oracle_ssl(&star).unwrap(), 3);
    }

    #[test]
    fn necklace_oracle_examples() {
        assert_eq!(oracle_necklace(&[], &[]).unwrap(), 0.0);
        let x = [0.1, 0.4, 0.7];
        assert_eq!(oracle_necklace(&x, &x).unwrap(), 0.0);
        // n = 1: a single pair is perfectly alignable by the offset
        assert_eq!(oracle_necklace(&[0.2], &[0.7]).unwrap(), 0.0);
        // invariant under common rotation of both necklaces
        let y = [0.0, 0.5, 0.9];
        let a = oracle_necklace(&x, &y).unwrap();
        let xr = [0.4, 0.7, 0.1];
        let yr = [0.5, 0.9, 0.0];
        let b = oracle_necklace(&xr, &yr).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}
