//! Generic engine for DPs with monotone piecewise constant rows.
//!
//! A [`DpTable`] holds one row per vertex of a dependency DAG, a procedure
//! per row that rebuilds it from its inputs, and a cache of computed rows.
//! [`DpTable::compute_all`] fills the cache bottom-up in topological order;
//! [`DpTable::update_row`] recomputes exactly the rows reachable from a
//! changed row. Each recomputation is counted so callers can assert the
//! update cost.
//!
//! [`RootedTreeTopology`] is the mutable forest used by the tree DPs: it
//! supports link and cut with the ordered re-rooting procedure (reverse the
//! root path edge by edge, then reinsert flipped) and reports the `O(h)` rows
//! whose DP cells must be recomputed. [`binarize_tree`] turns an arbitrary
//! -degree tree into a binary one by replacing each vertex with a balanced
//! gadget of infinite-capacity internal edges.

use crate::pcf::{Monotonicity, Pcf};
use std::collections::VecDeque;
use std::fmt;

/// Opaque identifier of a DP row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EngineError {
    CycleDetected,
    PieceBoundExceeded,
    UnknownRow,
    WouldCreateCycle,
    NoSuchEdge,
    NotATree,
    HeightBoundExceeded,
    RowFailed,
}

impl fmt::Display for EngineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            EngineError::CycleDetected => "dependency graph contains a cycle",
            EngineError::PieceBoundExceeded => {
                "a row procedure returned more pieces than declared"
            }
            EngineError::UnknownRow => "unknown row id",
            EngineError::WouldCreateCycle => "link endpoints are already connected",
            EngineError::NoSuchEdge => "no such edge",
            EngineError::NotATree => "input graph is not a tree",
            EngineError::HeightBoundExceeded => "tree height exceeds the configured bound",
            EngineError::RowFailed => "row procedure failed",
        };
        f.write_str(msg)
    }
}

impl std::error::Error for EngineError {}

/// Recompute procedure for one row: takes the cached functions of `In(i)`
/// in dependency insertion order and returns the row function.
pub type RowProcedure = Box<dyn FnMut(&[&Pcf]) -> Result<Pcf, crate::pcf::PcfError>>;

/// Declared well-behavedness parameters `(h, alpha, p)`: `h` bounds
/// `|Reach(i)|`, `alpha` is the per-row approximation factor (metadata),
/// `p` the per-row piece bound enforced after every procedure call.
#[derive(Clone, Copy, Debug, Default)]
pub struct DpParams {
    pub reach_bound: Option<usize>,
    pub alpha: Option<f64>,
    pub piece_bound: Option<usize>,
    /// Expected monotonicity of every cached row, checked after each call.
    pub expect_tag: Option<Monotonicity>,
}

struct RowState {
    inputs: Vec<RowId>,
    outputs: Vec<RowId>,
    proc: RowProcedure,
    cache: Option<Pcf>,
    recomputes: u64,
}

/// DP table over a dependency DAG with per-row recompute procedures and
/// cached row functions.
pub struct DpTable {
    rows: Vec<RowState>,
    params: DpParams,
    last_touched: Vec<RowId>,
}

impl DpTable {
    pub fn new(params: DpParams) -> DpTable {
        DpTable {
            rows: Vec::new(),
            params,
            last_touched: Vec::new(),
        }
    }

    pub fn params(&self) -> &DpParams {
        &self.params
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_row(&mut self, proc: RowProcedure) -> RowId {
        let id = RowId(self.rows.len());
        self.rows.push(RowState {
            inputs: Vec::new(),
            outputs: Vec::new(),
            proc,
            cache: None,
            recomputes: 0,
        });
        id
    }

    /// Declare that computing `to` requires row `from`.
    pub fn add_dependency(&mut self, from: RowId, to: RowId) -> Result<(), EngineError> {
        if from.0 >= self.rows.len() || to.0 >= self.rows.len() {
            return Err(EngineError::UnknownRow);
        }
        self.rows[to.0].inputs.push(from);
        self.rows[from.0].outputs.push(to);
        Ok(())
    }

    /// Replace the procedure of a row; the caller follows up with
    /// [`DpTable::update_row`].
    pub fn set_procedure(&mut self, id: RowId, proc: RowProcedure) -> Result<(), EngineError> {
        let row = self.rows.get_mut(id.0).ok_or(EngineError::UnknownRow)?;
        row.proc = proc;
        Ok(())
    }

    pub fn cached(&self, id: RowId) -> Option<&Pcf> {
        self.rows.get(id.0).and_then(|r| r.cache.as_ref())
    }

    pub fn recompute_count(&self, id: RowId) -> u64 {
        self.rows[id.0].recomputes
    }

    /// Rows recomputed by the most recent `compute_all` / `update_row` call.
    pub fn last_touched(&self) -> &[RowId] {
        &self.last_touched
    }

    fn topo_order(&self, restrict: Option<&[RowId]>) -> Result<Vec<RowId>, EngineError> {
        let in_set: Option<Vec<bool>> = restrict.map(|ids| {
            let mut v = vec![false; self.rows.len()];
            for id in ids {
                v[id.0] = true;
            }
            v
        });
        let member = |id: RowId| in_set.as_ref().map_or(true, |v| v[id.0]);
        let mut indeg = vec![0usize; self.rows.len()];
        let mut count = 0usize;
        for (i, row) in self.rows.iter().enumerate() {
            if !member(RowId(i)) {
                continue;
            }
            count += 1;
            indeg[i] = row.inputs.iter().filter(|r| member(**r)).count();
        }
        let mut queue: VecDeque<RowId> = (0..self.rows.len())
            .map(RowId)
            .filter(|&id| member(id) && indeg[id.0] == 0)
            .collect();
        let mut order = Vec::with_capacity(count);
        while let Some(id) = queue.pop_front() {
            order.push(id);
            for &out in &self.rows[id.0].outputs {
                if member(out) {
                    indeg[out.0] -= 1;
                    if indeg[out.0] == 0 {
                        queue.push_back(out);
                    }
                }
            }
        }
        if order.len() != count {
            return Err(EngineError::CycleDetected);
        }
        Ok(order)
    }

    fn recompute(&mut self, id: RowId) -> Result<(), EngineError> {
        let inputs = self.rows[id.0].inputs.clone();
        let mut cached: Vec<Pcf> = Vec::with_capacity(inputs.len());
        for dep in &inputs {
            cached.push(
                self.rows[dep.0]
                    .cache
                    .clone()
                    .ok_or(EngineError::RowFailed)?,
            );
        }
        let refs: Vec<&Pcf> = cached.iter().collect();
        let row = &mut self.rows[id.0];
        let result = (row.proc)(&refs).map_err(|_| EngineError::RowFailed)?;
        if let Some(bound) = self.params.piece_bound {
            if result.num_pieces() > bound {
                return Err(EngineError::PieceBoundExceeded);
            }
        }
        if let Some(tag) = self.params.expect_tag {
            if !result.satisfies(tag) {
                return Err(EngineError::RowFailed);
            }
        }
        row.cache = Some(result);
        row.recomputes += 1;
        Ok(())
    }

    /// Fill the whole cache bottom-up in topological order.
    pub fn compute_all(&mut self) -> Result<(), EngineError> {
        let order = self.topo_order(None)?;
        self.last_touched.clear();
        for id in order {
            self.recompute(id)?;
            self.last_touched.push(id);
        }
        Ok(())
    }

    /// Rows reachable from `id` (excluding `id`), by reverse DFS. Computed
    /// on demand; in the tree-shaped applications this is the root path.
    pub fn reach(&self, id: RowId) -> Result<Vec<RowId>, EngineError> {
        if id.0 >= self.rows.len() {
            return Err(EngineError::UnknownRow);
        }
        let mut seen = vec![false; self.rows.len()];
        let mut stack = vec![id];
        let mut out = Vec::new();
        while let Some(cur) = stack.pop() {
            for &next in &self.rows[cur.0].outputs {
                if !seen[next.0] {
                    seen[next.0] = true;
                    out.push(next);
                    stack.push(next);
                }
            }
        }
        Ok(out)
    }

    /// Recompute exactly `{id} ∪ Reach(id)` in topological order.
    pub fn update_row(&mut self, id: RowId) -> Result<(), EngineError> {
        let mut affected = self.reach(id)?;
        affected.push(id);
        if let Some(h) = self.params.reach_bound {
            if affected.len() > h + 1 {
                return Err(EngineError::HeightBoundExceeded);
            }
        }
        let order = self.topo_order(Some(&affected))?;
        self.last_touched.clear();
        for row in order {
            self.recompute(row)?;
            self.last_touched.push(row);
        }
        Ok(())
    }
}

/// Rooted forest with per-edge capacities (stored on the child endpoint),
/// supporting link/cut with re-rooting. Capacities are plain `f64` with
/// `f64::INFINITY` for uncuttable edges.
#[derive(Clone, Debug, PartialEq)]
pub struct RootedTreeTopology {
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    cap_up: Vec<f64>,
    height_bound: Option<usize>,
}

impl RootedTreeTopology {
    pub fn new(n: usize) -> RootedTreeTopology {
        RootedTreeTopology {
            parent: vec![None; n],
            children: vec![Vec::new(); n],
            cap_up: vec![0.0; n],
            height_bound: None,
        }
    }

    pub fn with_height_bound(mut self, h: usize) -> RootedTreeTopology {
        self.height_bound = Some(h);
        self
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn add_vertex(&mut self) -> usize {
        self.parent.push(None);
        self.children.push(Vec::new());
        self.cap_up.push(0.0);
        self.parent.len() - 1
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    /// Capacity of the edge from `v` to its parent; 0 for roots.
    pub fn cap_up(&self, v: usize) -> f64 {
        self.cap_up[v]
    }

    pub fn set_cap_up(&mut self, v: usize, cap: f64) {
        self.cap_up[v] = cap;
    }

    pub fn root_of(&self, mut v: usize) -> usize {
        while let Some(p) = self.parent[v] {
            v = p;
        }
        v
    }

    pub fn roots(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&v| self.parent[v].is_none())
            .collect()
    }

    /// Height of the component containing `v`.
    pub fn component_height(&self, v: usize) -> usize {
        let root = self.root_of(v);
        let mut best = 0;
        let mut stack = vec![(root, 0usize)];
        while let Some((u, d)) = stack.pop() {
            best = best.max(d);
            for &c in &self.children[u] {
                stack.push((c, d + 1));
            }
        }
        best
    }

    /// All vertices, children before parents.
    pub fn bottom_up_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.len());
        let mut stack: Vec<(usize, bool)> =
            self.roots().into_iter().map(|r| (r, false)).collect();
        while let Some((v, expanded)) = stack.pop() {
            if expanded {
                order.push(v);
            } else {
                stack.push((v, true));
                for &c in &self.children[v] {
                    stack.push((c, false));
                }
            }
        }
        order
    }

    pub(crate) fn attach(&mut self, parent: usize, child: usize, cap: f64) {
        debug_assert!(self.parent[child].is_none());
        self.parent[child] = Some(parent);
        self.children[parent].push(child);
        self.cap_up[child] = cap;
    }

    fn detach(&mut self, child: usize) -> f64 {
        let p = self.parent[child].expect("detach of a root");
        self.children[p].retain(|&c| c != child);
        self.parent[child] = None;
        let cap = self.cap_up[child];
        self.cap_up[child] = 0.0;
        cap
    }

    /// Cut the edge between `u` and `v` (either orientation); the child
    /// endpoint becomes a root. Returns the vertices whose DP rows must be
    /// recomputed, ordered bottom-up with respect to the new forest.
    pub fn cut(&mut self, u: usize, v: usize) -> Result<Vec<usize>, EngineError> {
        let child = if self.parent[v] == Some(u) {
            v
        } else if self.parent[u] == Some(v) {
            u
        } else {
            return Err(EngineError::NoSuchEdge);
        };
        let old_parent = self.parent[child].unwrap();
        self.detach(child);
        let mut dirty = vec![child, old_parent];
        let mut cur = old_parent;
        while let Some(p) = self.parent[cur] {
            dirty.push(p);
            cur = p;
        }
        Ok(dirty)
    }

    /// Link `v` under parent `u` with edge capacity `cap`, re-rooting `v`'s
    /// component first when `v` is not its root: the root path is deleted
    /// top-down and reinserted flipped, so only two DP cells change per
    /// step. Returns the recompute list, ordered bottom-up in the new tree.
    pub fn link(&mut self, u: usize, v: usize, cap: f64) -> Result<Vec<usize>, EngineError> {
        if self.root_of(u) == self.root_of(v) {
            return Err(EngineError::WouldCreateCycle);
        }
        // path from v up to its current root
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        // delete the path edges root-down, then reinsert flipped
        let mut caps: Vec<f64> = Vec::with_capacity(path.len().saturating_sub(1));
        for i in 0..path.len() - 1 {
            caps.push(self.cap_up[path[i]]);
        }
        for i in (0..path.len() - 1).rev() {
            self.detach(path[i]);
        }
        for i in 0..path.len().saturating_sub(1) {
            self.attach(path[i], path[i + 1], caps[i]);
        }
        self.attach(u, v, cap);
        if let Some(bound) = self.height_bound {
            if self.component_height(u) > bound {
                return Err(EngineError::HeightBoundExceeded);
            }
        }
        // dirty rows: the reversed path deepest-first, then u's root path
        let mut dirty: Vec<usize> = path.iter().rev().copied().collect();
        let mut cur = u;
        dirty.push(cur);
        while let Some(p) = self.parent[cur] {
            dirty.push(p);
            cur = p;
        }
        Ok(dirty)
    }
}

/// A graph given as an undirected edge list, the sparsifier input.
#[derive(Clone, Debug)]
pub struct EdgeListGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

/// Binarization result: the new topology plus the map from original
/// vertices to their gadget roots `r_u`.
#[derive(Clone, Debug)]
pub struct BinarizedTree {
    pub topology: RootedTreeTopology,
    pub root: usize,
    /// original vertex -> gadget root in the binarized tree
    pub gadget_root: Vec<usize>,
}

/// Replace every vertex `u` with more than two children by a balanced binary
/// gadget with `deg(u)` leaves whose internal edges have capacity `∞`; the
/// original edge `(u, v)` becomes an edge from its gadget leaf to `r_v` with
/// the original capacity. Vertices with at most two children keep their
/// edges, so an already-binary tree maps isomorphically. The gadget shape is
/// fixed (left-to-right tournament pairing, height `⌈log2 deg⌉`) for
/// determinism.
pub fn binarize_tree(topo: &RootedTreeTopology, root: usize) -> BinarizedTree {
    let n = topo.len();
    let mut out = RootedTreeTopology::new(0);
    let mut gadget_root = vec![usize::MAX; n];
    // gadget roots share the original vertex indexing
    for v in 0..n {
        gadget_root[v] = out.add_vertex();
    }
    let mut queue = VecDeque::new();
    queue.push_back(root);
    while let Some(u) = queue.pop_front() {
        let kids = topo.children(u);
        let ru = gadget_root[u];
        let attach_points: Vec<usize> = if kids.len() <= 2 {
            vec![ru; kids.len()]
        } else {
            let slots: Vec<usize> = (0..kids.len()).map(|_| out.add_vertex()).collect();
            let mut level = slots.clone();
            while level.len() > 2 {
                let mut next = Vec::with_capacity(level.len().div_ceil(2));
                let mut i = 0;
                while i + 1 < level.len() {
                    let p = out.add_vertex();
                    out.attach(p, level[i], f64::INFINITY);
                    out.attach(p, level[i + 1], f64::INFINITY);
                    next.push(p);
                    i += 2;
                }
                if i < level.len() {
                    next.push(level[i]);
                }
                level = next;
            }
            for &node in &level {
                out.attach(ru, node, f64::INFINITY);
            }
            slots
        };
        for (&slot, &child) in attach_points.iter().zip(kids.iter()) {
            out.attach(slot, gadget_root[child], topo.cap_up(child));
            queue.push_back(child);
        }
    }
    BinarizedTree {
        topology: out,
        root: gadget_root[root],
        gadget_root,
    }
}

/// A cut sparsifier tree: cuts in the tree over-approximate cuts of the
/// original graph by at most `quality`.
#[derive(Clone, Debug)]
pub struct SparsifierTree {
    pub tree: BinarizedTree,
    pub quality: f64,
}

/// Pluggable sparsifier entry point. The shipped implementation only accepts
/// inputs that are already trees: it roots them at vertex 0, binarizes, and
/// reports quality 1. Non-tree inputs signal that a general-graph sparsifier
/// plugin is required.
pub fn sparsifier_interface(g: &EdgeListGraph) -> Result<SparsifierTree, EngineError> {
    if g.n == 0 || g.edges.len() + 1 != g.n {
        return Err(EngineError::NotATree);
    }
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); g.n];
    for &(u, v, cap) in &g.edges {
        if u >= g.n || v >= g.n || u == v {
            return Err(EngineError::NotATree);
        }
        adj[u].push((v, cap));
        adj[v].push((u, cap));
    }
    let mut topo = RootedTreeTopology::new(g.n);
    let mut seen = vec![false; g.n];
    seen[0] = true;
    let mut queue = VecDeque::new();
    queue.push_back(0usize);
    let mut visited = 1usize;
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
    if visited != g.n {
        return Err(EngineError::NotATree);
    }
    Ok(SparsifierTree {
        tree: binarize_tree(&topo, 0),
        quality: 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcf::{ExtValue, RoundingConfig};

    fn const_proc(v: f64) -> RowProcedure {
        Box::new(move |_inputs| {
            Ok(Pcf::constant(
                0.0,
                1.0,
                ExtValue::finite(v),
                Monotonicity::Decreasing,
            ))
        })
    }

    /// Scales its single input by exactly (1+delta).
    fn scale_proc(delta: f64) -> RowProcedure {
        Box::new(move |inputs| {
            let f = inputs[0];
            let values: Vec<(f64, ExtValue)> = f
                .ends()
                .iter()
                .zip(f.values())
                .map(|(&e, &v)| (e, ExtValue::finite(v.to_f64() * (1.0 + delta))))
                .collect();
            Pcf::from_pieces(&values, f.lo(), f.hi(), f.tag())
        })
    }

    #[test]
    fn single_leaf_row_caches_its_constant() {
        let mut t = DpTable::new(DpParams::default());
        let r = t.add_row(const_proc(7.0));
        t.compute_all().unwrap();
        assert_eq!(
            t.cached(r).unwrap().eval(0.5).unwrap(),
            ExtValue::finite(7.0)
        );
    }

    #[test]
    fn chain_of_scalers_stays_within_level_bound() {
        // okay-behaved chain: each level multiplies by exactly (1+delta), so
        // the level-l row is within (1+delta)^(l+1) of the scaling-free run
        let delta = 0.1;
        let mut t = DpTable::new(DpParams::default());
        let leaf = t.add_row(const_proc(1.0));
        let mut prev = leaf;
        let mut rows = vec![leaf];
        for _ in 0..6 {
            let r = t.add_row(scale_proc(delta));
            t.add_dependency(prev, r).unwrap();
            rows.push(r);
            prev = r;
        }
        t.compute_all().unwrap();
        for (level, row) in rows.iter().enumerate() {
            let got = t.cached(*row).unwrap().eval(0.5).unwrap().to_f64();
            assert!(got >= 1.0);
            assert!(got <= (1.0 + delta).powi(level as i32 + 1) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn update_row_touches_exactly_reach() {
        // balanced binary tree with 16 leaves
        let mut t = DpTable::new(DpParams::default());
        let n = 16usize;
        let nodes = 2 * n - 1;
        let ids: Vec<RowId> = (0..nodes)
            .map(|i| {
                if i >= n - 1 {
                    t.add_row(const_proc(i as f64))
                } else {
                    t.add_row(Box::new(|inputs: &[&Pcf]| inputs[0].min2(inputs[1])))
                }
            })
            .collect();
        for i in 0..n - 1 {
            t.add_dependency(ids[2 * i + 1], ids[i]).unwrap();
            t.add_dependency(ids[2 * i + 2], ids[i]).unwrap();
        }
        t.compute_all().unwrap();
        let before: Vec<u64> = ids.iter().map(|&i| t.recompute_count(i)).collect();
        // leaf change: exactly the root path, 1 + log2(16) = 5 rows
        t.update_row(ids[nodes - 1]).unwrap();
        assert_eq!(t.last_touched().len(), 5);
        let after: Vec<u64> = ids.iter().map(|&i| t.recompute_count(i)).collect();
        let touched = before.iter().zip(&after).filter(|(b, a)| a != b).count();
        assert_eq!(touched, 5);
        // sink row: only itself
        t.update_row(ids[0]).unwrap();
        assert_eq!(t.last_touched(), &[ids[0]]);
    }

    #[test]
    fn update_matches_from_scratch() {
        let mut t = DpTable::new(DpParams::default());
        let a = t.add_row(const_proc(3.0));
        let b = t.add_row(const_proc(5.0));
        let root = t.add_row(Box::new(|inputs: &[&Pcf]| inputs[0].min2(inputs[1])));
        t.add_dependency(a, root).unwrap();
        t.add_dependency(b, root).unwrap();
        t.compute_all().unwrap();
        t.set_procedure(a, const_proc(10.0)).unwrap();
        t.update_row(a).unwrap();
        let incremental = t.cached(root).unwrap().clone();
        t.compute_all().unwrap();
        assert_eq!(&incremental, t.cached(root).unwrap());
    }

    #[test]
    fn compute_all_is_idempotent() {
        let mut t = DpTable::new(DpParams::default());
        let a = t.add_row(const_proc(3.0));
        let root = t.add_row(scale_proc(0.25));
        t.add_dependency(a, root).unwrap();
        t.compute_all().unwrap();
        let first = t.cached(root).unwrap().clone();
        t.compute_all().unwrap();
        assert_eq!(&first, t.cached(root).unwrap());
    }

    #[test]
    fn cycles_are_detected() {
        let mut t = DpTable::new(DpParams::default());
        let a = t.add_row(const_proc(1.0));
        let b = t.add_row(const_proc(2.0));
        t.add_dependency(a, b).unwrap();
        t.add_dependency(b, a).unwrap();
        assert_eq!(t.compute_all().unwrap_err(), EngineError::CycleDetected);
    }

    #[test]
    fn piece_bound_violations_are_hard_errors() {
        let params = DpParams {
            piece_bound: Some(1),
            ..DpParams::default()
        };
        let mut t = DpTable::new(params);
        t.add_row(Box::new(|_| {
            Pcf::from_pieces(
                &[(1.0, ExtValue::finite(2.0)), (2.0, ExtValue::finite(1.0))],
                0.0,
                2.0,
                Monotonicity::Decreasing,
            )
        }));
        assert_eq!(
            t.compute_all().unwrap_err(),
            EngineError::PieceBoundExceeded
        );
    }

    #[test]
    fn rounding_chain_stays_within_level_bound() {
        let delta = 0.2;
        let cfg = RoundingConfig::new(delta, 1e6).unwrap();
        let mut t = DpTable::new(DpParams::default());
        let leaf = t.add_row(Box::new(|_| {
            Pcf::from_pieces(
                &[(1.0, ExtValue::finite(100.0)), (2.0, ExtValue::finite(7.0))],
                0.0,
                2.0,
                Monotonicity::Decreasing,
            )
        }));
        let mut prev = leaf;
        let mut rows = vec![leaf];
        for _ in 0..5 {
            let r = t.add_row(Box::new(move |inputs: &[&Pcf]| {
                inputs[0].round_up_pow(&cfg)
            }));
            t.add_dependency(prev, r).unwrap();
            rows.push(r);
            prev = r;
        }
        t.compute_all().unwrap();
        for (level, row) in rows.iter().enumerate().skip(1) {
            let f = t.cached(*row).unwrap();
            for (x, e) in [(0.5, 100.0), (1.5, 7.0)] {
                let got = f.eval(x).unwrap().to_f64();
                assert!(got >= e);
                assert!(got <= (1.0 + delta).powi(level as i32 + 1) * e * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn link_cut_round_trip_restores_topology() {
        let mut t = RootedTreeTopology::new(4);
        t.attach(0, 1, 2.0);
        t.attach(1, 2, 3.0);
        t.attach(1, 3, 4.0);
        let before = t.clone();
        let dirty_cut = t.cut(1, 2).unwrap();
        assert!(dirty_cut.contains(&2) && dirty_cut.contains(&1));
        let dirty_link = t.link(1, 2, 3.0).unwrap();
        assert_eq!(t, before);
        assert!(dirty_link.len() <= 2 * 4 + 2);
    }

    #[test]
    fn link_to_root_needs_no_rerooting() {
        let mut t = RootedTreeTopology::new(3);
        t.attach(0, 1, 1.0);
        let dirty = t.link(1, 2, 5.0).unwrap();
        assert_eq!(dirty, vec![2, 1, 0]);
        assert_eq!(t.parent(2), Some(1));
    }

    #[test]
    fn link_rerooting_reverses_the_path() {
        // chain 0 -> 1 -> 2 (0 the root), then link 2 under the root 3
        let mut t = RootedTreeTopology::new(4);
        t.attach(0, 1, 1.0);
        t.attach(1, 2, 2.0);
        t.link(3, 2, 9.0).unwrap();
        assert_eq!(t.parent(2), Some(3));
        assert_eq!(t.parent(1), Some(2));
        assert_eq!(t.parent(0), Some(1));
        assert_eq!(t.cap_up(1), 2.0);
        assert_eq!(t.cap_up(0), 1.0);
        assert_eq!(t.cap_up(2), 9.0);
    }

    #[test]
    fn random_link_cut_matches_naive_forest() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let n = 64usize;
        let mut t = RootedTreeTopology::new(n);
        let mut edges: Vec<(usize, usize, f64)> = Vec::new();
        let connected = |edges: &Vec<(usize, usize, f64)>, a: usize, b: usize| {
            let mut seen = vec![false; n];
            let mut stack = vec![a];
            seen[a] = true;
            while let Some(u) = stack.pop() {
                if u == b {
                    return true;
                }
                for &(x, y, _) in edges.iter() {
                    let other = if x == u {
                        y
                    } else if y == u {
                        x
                    } else {
                        continue;
                    };
                    if !seen[other] {
                        seen[other] = true;
                        stack.push(other);
                    }
                }
            }
            false
        };
        for _ in 0..200 {
            let u = rng.gen_range(0..n);
            let v = rng.gen_range(0..n);
            if u == v {
                continue;
            }
            if rng.gen_bool(0.6) {
                let cap = rng.gen_range(1..10) as f64;
                if connected(&edges, u, v) {
                    assert_eq!(
                        t.link(u, v, cap).unwrap_err(),
                        EngineError::WouldCreateCycle
                    );
                } else {
                    t.link(u, v, cap).unwrap();
                    edges.push((u, v, cap));
                }
            } else if let Some(pos) = edges
                .iter()
                .position(|&(x, y, _)| (x == u && y == v) || (x == v && y == u))
            {
                t.cut(u, v).unwrap();
                edges.remove(pos);
            } else if t.parent(u) != Some(v) && t.parent(v) != Some(u) {
                assert_eq!(t.cut(u, v).unwrap_err(), EngineError::NoSuchEdge);
            }
            let mut got: Vec<(usize, usize)> = (0..n)
                .filter_map(|c| t.parent(c).map(|p| (p.min(c), p.max(c))))
                .collect();
            got.sort_unstable();
            let mut expect: Vec<(usize, usize)> = edges
                .iter()
                .map(|&(x, y, _)| (x.min(y), x.max(y)))
                .collect();
            expect.sort_unstable();
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn binarize_keeps_binary_trees_isomorphic() {
        let mut t = RootedTreeTopology::new(5);
        t.attach(0, 1, 1.0);
        t.attach(0, 2, 2.0);
        t.attach(1, 3, 3.0);
        t.attach(1, 4, 4.0);
        let b = binarize_tree(&t, 0);
        assert_eq!(b.topology.len(), 5);
        assert_eq!(b.topology.children(b.gadget_root[0]).len(), 2);
        assert_eq!(b.topology.cap_up(b.gadget_root[3]), 3.0);
    }

    #[test]
    fn binarize_star_builds_balanced_gadget() {
        let mut t = RootedTreeTopology::new(6);
        for v in 1..6 {
            t.attach(0, v, v as f64);
        }
        let b = binarize_tree(&t, 0);
        for v in 0..b.topology.len() {
            assert!(b.topology.children(v).len() <= 2);
        }
        for v in 1..6 {
            assert_eq!(b.topology.cap_up(b.gadget_root[v]), v as f64);
        }
        // gadget height for 5 leaves is ceil(log2 5) = 3, plus the level of
        // the attached original children below the gadget leaves
        assert!(b.topology.component_height(b.root) <= 4);
        for v in 0..b.topology.len() {
            if b.topology.parent(v).is_some() && !b.gadget_root.contains(&v) {
                assert!(b.topology.cap_up(v).is_infinite());
            }
        }
    }

    /// min cut between two vertices of a tree: the minimum capacity on the
    /// connecting path.
    fn path_mincut(t: &RootedTreeTopology, a: usize, b: usize) -> f64 {
        let mut up_a = vec![a];
        let mut cur = a;
        while let Some(p) = t.parent(cur) {
            up_a.push(p);
            cur = p;
        }
        let mut up_b = vec![b];
        cur = b;
        while let Some(p) = t.parent(cur) {
            up_b.push(p);
            cur = p;
        }
        let on_a: std::collections::HashSet<usize> = up_a.iter().copied().collect();
        let lca = *up_b.iter().find(|v| on_a.contains(v)).unwrap();
        up_a.truncate(up_a.iter().position(|&v| v == lca).unwrap());
        up_b.truncate(up_b.iter().position(|&v| v == lca).unwrap());
        up_a.into_iter()
            .chain(up_b)
            .map(|v| t.cap_up(v))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn binarize_preserves_pairwise_mincuts() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let n = rng.gen_range(2..=12);
            let mut t = RootedTreeTopology::new(n);
            for v in 1..n {
                let p = rng.gen_range(0..v);
                t.attach(p, v, rng.gen_range(1..20) as f64);
            }
            let b = binarize_tree(&t, 0);
            for _ in 0..10 {
                let x = rng.gen_range(0..n);
                let y = rng.gen_range(0..n);
                if x == y {
                    continue;
                }
                let orig = path_mincut(&t, x, y);
                let bin = path_mincut(&b.topology, b.gadget_root[x], b.gadget_root[y]);
                assert_eq!(orig, bin, "mincut mismatch for pair ({x},{y})");
            }
        }
    }

    #[test]
    fn sparsifier_accepts_trees_and_rejects_graphs() {
        let tree = EdgeListGraph {
            n: 3,
            edges: vec![(0, 1, 1.0), (1, 2, 2.0)],
        };
        let s = sparsifier_interface(&tree).unwrap();
        assert_eq!(s.quality, 1.0);
        let cyclic = EdgeListGraph {
            n: 3,
            edges: vec![(0, 1, 1.0), (1, 2, 2.0), (2, 0, 3.0)],
        };
        assert_eq!(
            sparsifier_interface(&cyclic).unwrap_err(),
            EngineError::NotATree
        );
    }
}
