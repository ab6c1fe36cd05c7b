//! Layered dynamic knapsack: price classes, a small maintained instance
//! over the per-class lightest items, and fractional knapsack over the rest.
//!
//! Items are grouped into price classes `V_ℓ = {i : (1+ε)^ℓ <= p_i <
//! (1+ε)^{ℓ+1}}`. `X` is the union of the `1/ε` lightest items of every
//! class and is maintained in an inner [`ItemTree`]; the remaining items
//! form `Y` and live in density-ordered augmented trees `U_ℓ` (one per class
//! prefix) that answer fractional knapsack queries from subtree weight and
//! profit sums. A value query walks the pieces of the inner root function,
//! spends each piece's budget on `X` and the rest fractionally on
//! `U_{ℓ_i}` with `(1+ε)^{ℓ_i} = ⌈ε·y_i⌉_{1+ε}`, and keeps the best
//! combination. Reported values re-sum true prices, so they are genuine
//! lower bounds.

use super::{ItemTree, KnapsackError};
use crate::util::{pow_int, OrdF64};
use std::collections::{BTreeSet, HashMap, HashSet};

/// Key in density order: `(-density, id)` so that ascending key order is
/// descending density with a deterministic id tiebreak.
pub type DensityKey = (OrdF64, u64);

fn density_key(price: f64, weight: f64, id: u64) -> DensityKey {
    (OrdF64::new(-(price / weight)), id)
}

/// splitmix64, used for deterministic treap priorities.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

const NIL: usize = usize::MAX;

#[derive(Clone, Debug)]
struct Node {
    key: DensityKey,
    weight: f64,
    profit: f64,
    sub_weight: f64,
    sub_profit: f64,
    count: usize,
    prio: u64,
    left: usize,
    right: usize,
}

/// Balanced search tree over items in density order, augmented with subtree
/// weight and profit sums. Implemented as a treap with priorities derived
/// from the item id.
#[derive(Clone, Debug, Default)]
pub struct DensityTree {
    nodes: Vec<Node>,
    root: usize,
    free: Vec<usize>,
}

/// Result of a fractional-knapsack query: total profit and weight of the
/// fully packed prefix, plus the fractionally cut item (if the budget ran
/// out mid-item).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FracResult {
    pub full_profit: f64,
    pub full_weight: f64,
    /// `(key, profit fraction contributed by the cut item)`
    pub cut: Option<(DensityKey, f64)>,
}

impl DensityTree {
    pub fn new() -> DensityTree {
        DensityTree {
            nodes: Vec::new(),
            root: NIL,
            free: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        if self.root == NIL {
            0
        } else {
            self.nodes[self.root].count
        }
    }

    pub fn is_empty(&self) -> bool {
        self.root == NIL
    }

    fn pull(&mut self, t: usize) {
        let (l, r) = (self.nodes[t].left, self.nodes[t].right);
        let mut w = self.nodes[t].weight;
        let mut p = self.nodes[t].profit;
        let mut c = 1;
        for s in [l, r] {
            if s != NIL {
                w += self.nodes[s].sub_weight;
                p += self.nodes[s].sub_profit;
                c += self.nodes[s].count;
            }
        }
        self.nodes[t].sub_weight = w;
        self.nodes[t].sub_profit = p;
        self.nodes[t].count = c;
    }

    /// Split into keys `< key` and keys `>= key`.
    fn split(&mut self, t: usize, key: &DensityKey) -> (usize, usize) {
        if t == NIL {
            return (NIL, NIL);
        }
        if self.nodes[t].key < *key {
            let (l, r) = self.split(self.nodes[t].right, key);
            self.nodes[t].right = l;
            self.pull(t);
            (t, r)
        } else {
            let (l, r) = self.split(self.nodes[t].left, key);
            self.nodes[t].left = r;
            self.pull(t);
            (l, t)
        }
    }

    fn merge(&mut self, l: usize, r: usize) -> usize {
        if l == NIL {
            return r;
        }
        if r == NIL {
            return l;
        }
        if self.nodes[l].prio > self.nodes[r].prio {
            let m = self.merge(self.nodes[l].right, r);
            self.nodes[l].right = m;
            self.pull(l);
            l
        } else {
            let m = self.merge(l, self.nodes[r].left);
            self.nodes[r].left = m;
            self.pull(r);
            r
        }
    }

    pub fn insert(&mut self, id: u64, price: f64, weight: f64) {
        let key = density_key(price, weight, id);
        let node = Node {
            key,
            weight,
            profit: price,
            sub_weight: weight,
            sub_profit: price,
            count: 1,
            prio: mix(id),
            left: NIL,
            right: NIL,
        };
        let idx = match self.free.pop() {
            Some(i) => {
                self.nodes[i] = node;
                i
            }
            None => {
                self.nodes.push(node);
                self.nodes.len() - 1
            }
        };
        let (l, r) = self.split(self.root, &key);
        let lr = self.merge(l, idx);
        self.root = self.merge(lr, r);
    }

    pub fn remove(&mut self, id: u64, price: f64, weight: f64) -> bool {
        let key = density_key(price, weight, id);
        let (l, rest) = self.split(self.root, &key);
        let upper = (key.0, key.1 + 1);
        let (mid, r) = self.split(rest, &upper);
        let found = mid != NIL;
        if found {
            debug_assert_eq!(self.nodes[mid].count, 1);
            self.free.push(mid);
        }
        self.root = self.merge(l, r);
        found
    }

    /// Greedy fractional knapsack over the stored items in density order,
    /// using the subtree aggregates; at most one item is cut fractionally.
    pub fn fractional(&self, budget: f64) -> FracResult {
        let mut res = FracResult {
            full_profit: 0.0,
            full_weight: 0.0,
            cut: None,
        };
        let mut budget = budget.max(0.0);
        let mut t = self.root;
        while t != NIL {
            let node = &self.nodes[t];
            let left = node.left;
            let left_w = if left == NIL {
                0.0
            } else {
                self.nodes[left].sub_weight
            };
            if left_w <= budget {
                if left != NIL {
                    res.full_profit += self.nodes[left].sub_profit;
                    res.full_weight += left_w;
                    budget -= left_w;
                }
                if node.weight <= budget {
                    res.full_profit += node.profit;
                    res.full_weight += node.weight;
                    budget -= node.weight;
                    t = node.right;
                } else {
                    if budget > 0.0 {
                        res.cut = Some((node.key, node.profit * budget / node.weight));
                    } else {
                        res.cut = Some((node.key, 0.0));
                    }
                    return res;
                }
            } else {
                t = left;
            }
        }
        res
    }

    /// Ids in density order, stopping before `limit` (exclusive); all items
    /// when `limit` is `None`.
    pub fn collect_until(&self, limit: Option<DensityKey>) -> Vec<u64> {
        let mut out = Vec::new();
        self.walk(self.root, limit.as_ref(), &mut out);
        out
    }

    fn walk(&self, t: usize, limit: Option<&DensityKey>, out: &mut Vec<u64>) {
        if t == NIL {
            return;
        }
        let node = &self.nodes[t];
        if let Some(lim) = limit {
            if node.key >= *lim {
                self.walk(node.left, limit, out);
                return;
            }
        }
        self.walk(node.left, limit, out);
        out.push(node.key.1);
        self.walk(node.right, limit, out);
    }

    /// Subtree aggregate invariant check against brute recomputation;
    /// used by the test suites after every update.
    pub fn aggregates_consistent(&self) -> bool {
        self.check(self.root).is_some()
    }

    fn check(&self, t: usize) -> Option<(f64, f64, usize)> {
        if t == NIL {
            return Some((0.0, 0.0, 0));
        }
        let n = &self.nodes[t];
        let (lw, lp, lc) = self.check(n.left)?;
        let (rw, rp, rc) = self.check(n.right)?;
        let w = lw + rw + n.weight;
        let p = lp + rp + n.profit;
        let c = lc + rc + 1;
        (w == n.sub_weight && p == n.sub_profit && c == n.count).then_some((w, p, c))
    }
}

/// The stored answer of the last value query; membership and solution
/// queries read it until the next update invalidates it.
#[derive(Clone, Debug)]
struct StoredSolution {
    value: f64,
    x_ids: HashSet<u64>,
    ell: usize,
    cut_key: Option<DensityKey>,
    budget_x: f64,
}

/// Fully dynamic layered knapsack state.
pub struct FastState {
    eps: f64,
    budget: f64,
    w_bound: f64,
    num_classes: usize,
    inv_eps: usize,
    items: HashMap<u64, (f64, f64)>,
    /// `V_ℓ` sorted non-decreasingly by weight
    classes: Vec<BTreeSet<(OrdF64, u64)>>,
    x_set: HashSet<u64>,
    /// outer id -> id inside the inner tree
    inner_ids: HashMap<u64, u64>,
    inner: ItemTree,
    /// `U_ℓ = ∪_{ℓ' <= ℓ} V'_{ℓ'}` as density trees
    u_trees: Vec<DensityTree>,
    next_id: u64,
    sol: Option<StoredSolution>,
}

impl FastState {
    pub fn new(budget: f64, eps: f64) -> Result<FastState, KnapsackError> {
        FastState::with_w_bound(budget, eps, super::DEFAULT_W_BOUND)
    }

    pub fn with_w_bound(budget: f64, eps: f64, w_bound: f64) -> Result<FastState, KnapsackError> {
        if !(eps > 0.0) {
            return Err(KnapsackError::BadEpsilon);
        }
        // snap eps to 1/ceil(1/eps) so 1/eps is an integer
        let inv_eps = (1.0 / eps).ceil() as usize;
        let eps = 1.0 / inv_eps as f64;
        let num_classes = (w_bound.ln() / (1.0 + eps).ln()).ceil() as usize + 1;
        let inner = ItemTree::build_with(&[], budget, eps, w_bound)?;
        Ok(FastState {
            eps,
            budget,
            w_bound,
            num_classes,
            inv_eps,
            items: HashMap::new(),
            classes: vec![BTreeSet::new(); num_classes],
            x_set: HashSet::new(),
            inner_ids: HashMap::new(),
            inner,
            u_trees: vec![DensityTree::new(); num_classes],
            next_id: 0,
            sol: None,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn live_items(&self) -> usize {
        self.items.len()
    }

    pub fn x_len(&self) -> usize {
        self.x_set.len()
    }

    /// `|X| <= (1/ε)·L` by construction.
    pub fn x_bound(&self) -> usize {
        self.inv_eps * self.num_classes
    }

    pub fn u_trees(&self) -> &[DensityTree] {
        &self.u_trees
    }

    pub fn x_set(&self) -> &HashSet<u64> {
        &self.x_set
    }

    /// Price class index: largest `ℓ` with `(1+ε)^ℓ <= p`.
    fn class_of(&self, price: f64) -> usize {
        let base = 1.0 + self.eps;
        let mut ell = (price.ln() / base.ln()).floor().max(0.0) as u32;
        while pow_int(base, ell + 1) <= price {
            ell += 1;
        }
        while ell > 0 && pow_int(base, ell) > price {
            ell -= 1;
        }
        (ell as usize).min(self.num_classes - 1)
    }

    pub fn insert(&mut self, price: f64, weight: f64) -> Result<u64, KnapsackError> {
        super::validate_item(price, weight, self.w_bound)?;
        let id = self.next_id;
        self.next_id += 1;
        self.items.insert(id, (price, weight));
        let ell = self.class_of(price);
        self.classes[ell].insert((OrdF64::new(weight), id));
        self.resettle_class(ell)?;
        self.sol = None;
        Ok(id)
    }

    pub fn delete(&mut self, id: u64) -> Result<(), KnapsackError> {
        let (price, weight) = self
            .items
            .remove(&id)
            .ok_or(KnapsackError::UnknownItem)?;
        let ell = self.class_of(price);
        self.classes[ell].remove(&(OrdF64::new(weight), id));
        if self.x_set.remove(&id) {
            let inner_id = self.inner_ids.remove(&id).expect("X item has an inner id");
            self.inner.delete(inner_id)?;
        } else {
            for tree in &mut self.u_trees[ell..] {
                tree.remove(id, price, weight);
            }
        }
        self.resettle_class(ell)?;
        self.sol = None;
        Ok(())
    }

    /// Recompute the `1/ε` lightest items of class `ell` and move at most
    /// one item into `X` and one out into the `U` trees.
    fn resettle_class(&mut self, ell: usize) -> Result<(), KnapsackError> {
        let want: HashSet<u64> = self.classes[ell]
            .iter()
            .take(self.inv_eps)
            .map(|&(_, id)| id)
            .collect();
        let have: Vec<u64> = self.classes[ell]
            .iter()
            .filter(|&&(_, id)| self.x_set.contains(&id))
            .map(|&(_, id)| id)
            .collect();
        for id in &have {
            if !want.contains(id) {
                // displaced from X into Y
                self.x_set.remove(id);
                let inner_id = self.inner_ids.remove(id).expect("inner id");
                self.inner.delete(inner_id)?;
                let (p, w) = self.items[id];
                for tree in &mut self.u_trees[ell..] {
                    tree.insert(*id, p, w);
                }
            }
        }
        for id in want {
            if !self.x_set.contains(&id) {
                let (p, w) = self.items[&id];
                // a previously-Y item leaves the U trees
                for tree in &mut self.u_trees[ell..] {
                    tree.remove(id, p, w);
                }
                self.x_set.insert(id);
                let inner_id = self.inner.insert(p, w)?;
                self.inner_ids.insert(id, inner_id);
            }
        }
        Ok(())
    }

    /// Approximate optimum: the best piece-wise split of the budget between
    /// the inner `X` instance and fractional knapsack on a `U_ℓ` prefix. The
    /// returned value re-sums true prices of the implied solution.
    pub fn query_value(&mut self) -> Result<f64, KnapsackError> {
        let inner_to_outer: HashMap<u64, u64> =
            self.inner_ids.iter().map(|(&o, &i)| (i, o)).collect();
        let root = self.inner.root_pcf().clone();
        let mut best: Option<StoredSolution> = None;
        for i in 0..root.num_pieces() {
            let x_budget = root.piece_start(i);
            if x_budget > self.budget {
                break;
            }
            let y = root.values()[i].to_f64();
            let ell = if y > 0.0 {
                let target = self.eps * y;
                let base = 1.0 + self.eps;
                let mut e = 0u32;
                while pow_int(base, e) < target {
                    e += 1;
                }
                (e as usize).min(self.num_classes - 1)
            } else {
                0
            };
            let frac = self.u_trees[ell].fractional(self.budget - x_budget);
            let x_ids: HashSet<u64> = self
                .inner
                .solution_at(x_budget)?
                .into_iter()
                .map(|iid| inner_to_outer[&iid])
                .collect();
            let px: f64 = x_ids.iter().map(|id| self.items[id].0).sum();
            let value = px + frac.full_profit;
            if best.as_ref().map_or(true, |b| value > b.value) {
                best = Some(StoredSolution {
                    value,
                    x_ids,
                    ell,
                    cut_key: frac.cut.map(|(k, _)| k),
                    budget_x: x_budget,
                });
            }
        }
        let sol = best.unwrap_or(StoredSolution {
            value: 0.0,
            x_ids: HashSet::new(),
            ell: 0,
            cut_key: None,
            budget_x: 0.0,
        });
        let value = sol.value;
        self.sol = Some(sol);
        Ok(value)
    }

    /// The solution fixed by the last value query: the stored `X` part plus
    /// every `U_ℓ` item strictly denser than the fractional cut.
    pub fn query_solution(&self) -> Result<Vec<u64>, KnapsackError> {
        let sol = self.sol.as_ref().ok_or(KnapsackError::StaleQuery)?;
        let mut out: Vec<u64> = sol.x_ids.iter().copied().collect();
        out.sort_unstable();
        out.extend(self.u_trees[sol.ell].collect_until(sol.cut_key));
        Ok(out)
    }

    /// O(1)-style membership against the stored solution.
    pub fn query_membership(&self, id: u64) -> Result<bool, KnapsackError> {
        let sol = self.sol.as_ref().ok_or(KnapsackError::StaleQuery)?;
        if sol.x_ids.contains(&id) {
            return Ok(true);
        }
        let Some(&(price, weight)) = self.items.get(&id) else {
            return Ok(false);
        };
        if self.x_set.contains(&id) {
            return Ok(false);
        }
        if self.class_of(price) > sol.ell {
            return Ok(false);
        }
        let key = density_key(price, weight, id);
        Ok(match sol.cut_key {
            Some(cut) => key < cut,
            None => true,
        })
    }

    /// Total weight of the stored solution; test hook for feasibility.
    pub fn solution_weight(&self) -> Result<f64, KnapsackError> {
        let ids = self.query_solution()?;
        Ok(ids.iter().map(|id| self.items[id].1).sum())
    }

    /// Budget split chosen by the last value query (X-side budget).
    pub fn solution_budget_x(&self) -> Option<f64> {
        self.sol.as_ref().map(|s| s.budget_x)
    }
}
