//! Simultaneous source location on trees.
//!
//! The row of a vertex `v` is the inverse DP function `DP(v, x)`: the
//! minimum number of sources inside `T_v` such that all demands in `T_v`
//! can be met when `v` receives at most `x` flow from its parent (negative
//! `x` means `T_v` sends flow up). Rows are monotone decreasing piecewise
//! constant functions over `[-cap(p,v)-1, cap(p,v)+1]` satisfying the
//! feasible capacity property: `∞` below `-cap(p,v)` and constant above
//! `cap(p,v)`. An internal row is the minimum of the source case (a
//! constant) and a shifted (min,+)-convolution of the child rows, clamped
//! back to the feasible window; the approximate pipeline additionally
//! rounds values up to powers of `1+δ`, which is its only lossy step.

use crate::engine::{binarize_tree, EngineError, RootedTreeTopology};
use crate::pcf::{
    convolve_monotone_combined, ExtValue, Monotonicity, Pcf, PcfError, RoundingConfig,
};
use crate::textio::{field, records, ParseError};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SslError {
    Infeasible,
    WouldCreateCycle,
    HeightBoundExceeded,
    NotBinary,
    NoSuchEdge,
    UnknownVertex,
    BadInstance,
    Internal,
}

impl fmt::Display for SslError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            SslError::Infeasible => "no source set can satisfy the demands",
            SslError::WouldCreateCycle => "insert endpoints are already connected",
            SslError::HeightBoundExceeded => "tree height exceeds the configured bound",
            SslError::NotBinary => "vertex would exceed two children",
            SslError::NoSuchEdge => "no such edge",
            SslError::UnknownVertex => "unknown vertex",
            SslError::BadInstance => "invalid instance",
            SslError::Internal => "internal failure",
        };
        f.write_str(msg)
    }
}

impl std::error::Error for SslError {}

impl From<PcfError> for SslError {
    fn from(_: PcfError) -> Self {
        SslError::Internal
    }
}

impl From<EngineError> for SslError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::WouldCreateCycle => SslError::WouldCreateCycle,
            EngineError::HeightBoundExceeded => SslError::HeightBoundExceeded,
            EngineError::NoSuchEdge => SslError::NoSuchEdge,
            _ => SslError::Internal,
        }
    }
}

/// Solve mode: the approximate pipeline differs from the exact one only in
/// the per-row rounding step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Approx,
}

/// Per-vertex input data.
#[derive(Clone, Copy, Debug)]
pub struct SslVertex {
    pub demand: f64,
    pub source_allowed: bool,
}

/// Dynamic solver state over a binary forest.
#[derive(Debug)]
pub struct SslState {
    topo: RootedTreeTopology,
    vertices: Vec<SslVertex>,
    rows: Vec<Option<Pcf>>,
    /// `None` runs the exact pipeline; `Some(cfg)` rounds each row.
    rounding: Option<RoundingConfig>,
    /// Edge flows never exceed the total demand, so capacities (including
    /// the infinite gadget edges from binarization) are clamped to this
    /// bound when building row domains. Grows with a full recompute when
    /// demand updates outrun it.
    ceiling: f64,
    last_recomputed: usize,
}

/// Build the 3-piece leaf row on `[-cap-1, cap+1]`: value 1 from `-cap` when
/// the vertex may become a source, value 0 from `d` when the parent edge can
/// carry the demand, `∞` elsewhere.
fn leaf_row(v: &SslVertex, cap_up: f64) -> Pcf {
    let lo = -cap_up - 1.0;
    let hi = cap_up + 1.0;
    let mut candidates: Vec<Pcf> = Vec::with_capacity(2);
    if v.source_allowed {
        candidates.push(step_row(lo, hi, -cap_up, ExtValue::finite(1.0)));
    }
    if cap_up >= v.demand {
        candidates.push(step_row(lo, hi, v.demand, ExtValue::Zero));
    }
    match candidates.len() {
        0 => Pcf::constant(lo, hi, ExtValue::PlusInf, Monotonicity::Decreasing),
        1 => candidates.pop().unwrap(),
        _ => {
            let refs: Vec<&Pcf> = candidates.iter().collect();
            Pcf::multimin(&refs).expect("shared domain and tags")
        }
    }
}

/// `∞` on `[lo, at)`, `value` on `[at, hi]`.
fn step_row(lo: f64, hi: f64, at: f64, value: ExtValue) -> Pcf {
    if at <= lo {
        Pcf::constant(lo, hi, value, Monotonicity::Decreasing)
    } else if at >= hi {
        Pcf::constant(lo, hi, ExtValue::PlusInf, Monotonicity::Decreasing)
    } else {
        Pcf::from_pieces(
            &[(at, ExtValue::PlusInf), (hi, value)],
            lo,
            hi,
            Monotonicity::Decreasing,
        )
        .expect("two ordered pieces")
    }
}

/// Clamp a row to `[-cap-1, cap+1]` and restore the feasible capacity
/// property: `∞` below `-cap`, constant above `cap`. The input row may live
/// on any domain; outside of it the row is read as `∞` on the left and as
/// its last value on the right (both sides have saturated semantics).
fn clamp_feasible(row: &Pcf, cap_up: f64) -> Pcf {
    let lo = -cap_up - 1.0;
    let hi = cap_up + 1.0;
    let eval_ext = |x: f64| -> ExtValue {
        if x < row.lo() {
            ExtValue::PlusInf
        } else if x > row.hi() {
            row.last_value()
        } else {
            row.eval_unchecked(x)
        }
    };
    let plateau = eval_ext(cap_up);
    let mut cuts: Vec<f64> = vec![-cap_up];
    for &e in row.ends() {
        if e > -cap_up && e < cap_up {
            cuts.push(e);
        }
    }
    if row.lo() > -cap_up && row.lo() < cap_up {
        cuts.push(row.lo());
    }
    cuts.push(cap_up);
    cuts.sort_unstable_by(f64::total_cmp);
    cuts.dedup();
    let mut pieces: Vec<(f64, ExtValue)> = vec![(-cap_up, ExtValue::PlusInf)];
    for w in cuts.windows(2) {
        pieces.push((w[1], eval_ext(w[0])));
    }
    pieces.push((hi, plateau));
    Pcf::from_pieces(&pieces, lo, hi, Monotonicity::Decreasing).expect("clamped row is ordered")
}

impl SslState {
    /// Build from a parsed instance; non-binary trees are binarized first
    /// (demands ride on the gadget roots, which stay the only
    /// source-eligible vertices).
    pub fn new(inst: &SslInstance, mode: Mode) -> Result<SslState, SslError> {
        if inst.vertices.iter().any(|v| !v.demand.is_finite() || v.demand < 0.0) {
            // an infinite demand makes every instance infeasible
            return Err(SslError::BadInstance);
        }
        let n = inst.vertices.len();
        if n == 0 {
            return Err(SslError::BadInstance);
        }
        let mut topo = RootedTreeTopology::new(n);
        {
            // root at vertex 0 by BFS over the undirected edges
            let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
            for &(u, v, cap) in &inst.edges {
                if u >= n || v >= n {
                    return Err(SslError::BadInstance);
                }
                adj[u].push((v, cap));
                adj[v].push((u, cap));
            }
            let mut seen = vec![false; n];
            seen[0] = true;
            let mut queue = std::collections::VecDeque::from([0usize]);
            let mut visited = 1;
            while let Some(u) = queue.pop_front() {
                for &(v, cap) in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        visited += 1;
                        topo.attach(u, v, cap);
                        queue.push_back(v);
                    }
                }
            }
            if visited != n || inst.edges.len() != n - 1 {
                return Err(SslError::BadInstance);
            }
        }
        let needs_gadgets = (0..n).any(|v| topo.children(v).len() > 2);
        let (topo, vertices) = if needs_gadgets {
            let b = binarize_tree(&topo, 0);
            let mut vertices = vec![
                SslVertex {
                    demand: 0.0,
                    source_allowed: false,
                };
                b.topology.len()
            ];
            for (orig, &slot) in b.gadget_root.iter().enumerate() {
                vertices[slot] = inst.vertices[orig];
            }
            (b.topology, vertices)
        } else {
            (topo, inst.vertices.clone())
        };
        let rounding = match mode {
            Mode::Exact => None,
            Mode::Approx => {
                let h = topo.component_height(0);
                let delta = (1.0 + inst.eps).ln() / (h + 1) as f64;
                let w = (topo.len() as f64).max(1.0);
                Some(RoundingConfig::new(delta, w).map_err(|_| SslError::BadInstance)?)
            }
        };
        let rows = vec![None; topo.len()];
        let ceiling = vertices.iter().map(|v| v.demand).sum::<f64>() + 1.0;
        let mut state = SslState {
            topo,
            vertices,
            rows,
            rounding,
            ceiling,
            last_recomputed: 0,
        };
        state.recompute_all()?;
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.topo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topo.is_empty()
    }

    /// Rows recomputed by the last update.
    pub fn last_recomputed(&self) -> usize {
        self.last_recomputed
    }

    pub fn row(&self, v: usize) -> Option<&Pcf> {
        self.rows.get(v).and_then(|r| r.as_ref())
    }

    /// Capacity window of the parent edge of `v`, clamped by the demand
    /// ceiling; 0 for roots (the virtual parent edge of `DP(r, 0)`).
    fn window_cap(&self, v: usize) -> f64 {
        if self.topo.parent(v).is_some() {
            self.topo.cap_up(v).min(self.ceiling)
        } else {
            0.0
        }
    }

    /// Down-edge capacity to a child, clamped the same way.
    fn child_cap(&self, child: usize) -> f64 {
        self.topo.cap_up(child).min(self.ceiling)
    }

    fn compute_row(&self, v: usize) -> Result<Pcf, SslError> {
        let vert = self.vertices[v];
        let cap_p = self.window_cap(v);
        let kids = self.topo.children(v);
        let raw = match kids.len() {
            0 => leaf_row(&vert, cap_p),
            1 | 2 => {
                let r1 = self.rows[kids[0]].as_ref().ok_or(SslError::Internal)?;
                let neutral;
                let r2 = if kids.len() == 2 {
                    self.rows[kids[1]].as_ref().ok_or(SslError::Internal)?
                } else {
                    // neutral filler child: no source, no demand, cap 0
                    neutral = leaf_row(
                        &SslVertex {
                            demand: 0.0,
                            source_allowed: false,
                        },
                        0.0,
                    );
                    &neutral
                };
                let shifted = r2.translate(vert.demand);
                let (conv, _) = convolve_monotone_combined(r1, &shifted)?;
                let mut merged = clamp_feasible(&conv, cap_p);
                if vert.source_allowed {
                    let v1 = r1.eval_unchecked(self.child_cap(kids[0]));
                    let v2 = if kids.len() == 2 {
                        r2.eval_unchecked(self.child_cap(kids[1]))
                    } else {
                        r2.eval_unchecked(0.0)
                    };
                    let val = ExtValue::finite(1.0)
                        .checked_add(v1)?
                        .checked_add(v2)?;
                    let source_row = step_row(-cap_p - 1.0, cap_p + 1.0, -cap_p, val);
                    merged = merged.min2(&source_row)?;
                }
                merged
            }
            _ => return Err(SslError::NotBinary),
        };
        let out = match &self.rounding {
            Some(cfg) => raw.round_up_pow(cfg)?,
            None => raw,
        };
        debug_assert!(out.satisfies(Monotonicity::Decreasing));
        debug_assert_eq!(out.first_value(), ExtValue::PlusInf);
        Ok(out)
    }

    fn recompute_all(&mut self) -> Result<(), SslError> {
        let order = self.topo.bottom_up_order();
        self.last_recomputed = order.len();
        for v in order {
            self.rows[v] = Some(self.compute_row(v)?);
        }
        Ok(())
    }

    fn recompute_list(&mut self, dirty: Vec<usize>) -> Result<(), SslError> {
        self.last_recomputed = dirty.len();
        for v in dirty {
            self.rows[v] = Some(self.compute_row(v)?);
        }
        Ok(())
    }

    /// Minimum source count over the whole forest: the sum of `DP(r, 0)`
    /// over component roots.
    pub fn query(&self) -> Result<u32, SslError> {
        let mut total = 0.0f64;
        for r in self.topo.roots() {
            let row = self.rows[r].as_ref().ok_or(SslError::Internal)?;
            match row.eval_unchecked(0.0) {
                ExtValue::PlusInf => return Err(SslError::Infeasible),
                v => total += v.to_f64(),
            }
        }
        // rounded values snap back to an achievable integer count
        let snapped = if (total - total.round()).abs() < 1e-9 {
            total.round()
        } else {
            total.ceil()
        };
        Ok(snapped as u32)
    }

    pub fn set_demand(&mut self, v: usize, d: f64) -> Result<(), SslError> {
        if v >= self.len() || !d.is_finite() || d < 0.0 {
            return Err(SslError::BadInstance);
        }
        self.vertices[v].demand = d;
        let total: f64 = self.vertices.iter().map(|x| x.demand).sum();
        if total + 1.0 > self.ceiling {
            // the clamp bound no longer dominates every possible edge flow
            self.ceiling = 2.0 * (total + 1.0);
            return self.recompute_all();
        }
        let mut dirty = vec![v];
        let mut cur = v;
        while let Some(p) = self.topo.parent(cur) {
            dirty.push(p);
            cur = p;
        }
        self.recompute_list(dirty)
    }

    pub fn set_capacity(&mut self, u: usize, v: usize, cap: f64) -> Result<(), SslError> {
        let child = if self.topo.parent(v) == Some(u) {
            v
        } else if self.topo.parent(u) == Some(v) {
            u
        } else {
            return Err(SslError::NoSuchEdge);
        };
        self.topo.set_cap_up(child, cap);
        let mut dirty = vec![child];
        let mut cur = child;
        while let Some(p) = self.topo.parent(cur) {
            dirty.push(p);
            cur = p;
        }
        self.recompute_list(dirty)
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) -> Result<(), SslError> {
        let dirty = self.topo.cut(u, v)?;
        self.recompute_list(dirty)
    }

    pub fn insert_edge(&mut self, u: usize, v: usize, cap: f64) -> Result<(), SslError> {
        if u >= self.len() || v >= self.len() {
            return Err(SslError::UnknownVertex);
        }
        if self.topo.children(u).len() >= 2 {
            return Err(SslError::NotBinary);
        }
        let dirty = self.topo.link(u, v, cap)?;
        self.recompute_list(dirty)
    }
}

/// Parsed instance: `n eps`; `n-1` lines `u v cap`; `n` lines
/// `v d source_allowed` (vertices 1-based in the file).
#[derive(Clone, Debug)]
pub struct SslInstance {
    pub edges: Vec<(usize, usize, f64)>,
    pub vertices: Vec<SslVertex>,
    pub eps: f64,
}

pub fn parse_instance(text: &str) -> Result<SslInstance, ParseError> {
    let recs = records(text);
    let (line, header) = recs
        .first()
        .ok_or_else(|| ParseError::new(0, "empty instance file"))?;
    let n: usize = field(header, 0, *line, "vertex count")?;
    let eps: f64 = field(header, 1, *line, "eps")?;
    if n == 0 {
        return Err(ParseError::new(*line, "need at least one vertex"));
    }
    if recs.len() != n - 1 + n + 1 {
        return Err(ParseError::new(
            *line,
            format!("expected {} edge lines and {n} vertex lines", n - 1),
        ));
    }
    let mut edges = Vec::with_capacity(n - 1);
    for (line, fields) in &recs[1..n] {
        let u: usize = field(fields, 0, *line, "endpoint")?;
        let v: usize = field(fields, 1, *line, "endpoint")?;
        let cap: f64 = field(fields, 2, *line, "capacity")?;
        if u == 0 || v == 0 || u > n || v > n {
            return Err(ParseError::new(*line, "vertices are 1-based"));
        }
        edges.push((u - 1, v - 1, cap));
    }
    let mut vertices = vec![
        SslVertex {
            demand: 0.0,
            source_allowed: true,
        };
        n
    ];
    for (line, fields) in &recs[n..] {
        let v: usize = field(fields, 0, *line, "vertex")?;
        let d: f64 = field(fields, 1, *line, "demand")?;
        let s: u8 = field(fields, 2, *line, "source flag")?;
        if v == 0 || v > n {
            return Err(ParseError::new(*line, "vertices are 1-based"));
        }
        if !d.is_finite() || d < 0.0 {
            return Err(ParseError::new(*line, "demands must be finite and non-negative"));
        }
        vertices[v - 1] = SslVertex {
            demand: d,
            source_allowed: s != 0,
        };
    }
    Ok(SslInstance {
        edges,
        vertices,
        eps,
    })
}

/// Trace ops: `setdemand v d` | `setcap u v c` | `remove u v` |
/// `insert u v c` | `query` (vertices 1-based).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TraceOp {
    SetDemand { v: usize, d: f64 },
    SetCapacity { u: usize, v: usize, cap: f64 },
    Remove { u: usize, v: usize },
    Insert { u: usize, v: usize, cap: f64 },
    Query,
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceOp>, ParseError> {
    let mut ops = Vec::new();
    for (line, fields) in records(text) {
        let vertex = |idx: usize, what: &str| -> Result<usize, ParseError> {
            let v: usize = field(&fields, idx, line, what)?;
            if v == 0 {
                return Err(ParseError::new(line, "vertices are 1-based"));
            }
            Ok(v - 1)
        };
        let op = match fields[0] {
            "setdemand" => TraceOp::SetDemand {
                v: vertex(1, "vertex")?,
                d: field(&fields, 2, line, "demand")?,
            },
            "setcap" => TraceOp::SetCapacity {
                u: vertex(1, "endpoint")?,
                v: vertex(2, "endpoint")?,
                cap: field(&fields, 3, line, "capacity")?,
            },
            "remove" => TraceOp::Remove {
                u: vertex(1, "endpoint")?,
                v: vertex(2, "endpoint")?,
            },
            "insert" => TraceOp::Insert {
                u: vertex(1, "endpoint")?,
                v: vertex(2, "endpoint")?,
                cap: field(&fields, 3, line, "capacity")?,
            },
            "query" => TraceOp::Query,
            other => return Err(ParseError::new(line, format!("unknown op: {other}"))),
        };
        ops.push(op);
    }
    Ok(ops)
}

/// One-shot solve of a parsed instance.
pub fn solve(inst: &SslInstance, mode: Mode) -> Result<u32, SslError> {
    SslState::new(inst, mode)?.query()
}
