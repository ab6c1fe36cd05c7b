//! Fully dynamic 0-1 knapsack.
//!
//! [`ItemTree`] keeps the items at the leaves of a balanced binary tree; an
//! internal node holds the (max,+)-convolution of its children, rounded up
//! to powers of `1+δ` with `δ = ln(1+ε)/⌈log₂ n⌉`, so every node function
//! has `O(log_{1+δ} W)` pieces and the root evaluated at the budget is a
//! `(1+ε)`-approximation of the optimum. Inserting or deleting an item
//! changes one leaf row and recomputes only the root path.
//!
//! [`fast::FastState`] is the layered variant: price classes, a small inner
//! instance over the lightest items per class, and fractional knapsack over
//! density-ordered augmented trees for the rest.

pub mod fast;

use crate::engine::{DpParams, DpTable, EngineError, RowId, RowProcedure};
use crate::pcf::{
    maxplus_convolve, witness_argmin, ConvWitness, ExtValue, Monotonicity, Pcf, PcfError,
    RoundingConfig,
};
use crate::textio::{field, records, ParseError};
use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

/// Default upper bound on the total price mass `W = Σ p_i` when the caller
/// does not configure one.
pub const DEFAULT_W_BOUND: f64 = 1e9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KnapsackError {
    BadEpsilon,
    BadItem,
    UnknownItem,
    StaleQuery,
    Internal,
}

impl fmt::Display for KnapsackError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            KnapsackError::BadEpsilon => "epsilon must be positive",
            KnapsackError::BadItem => "item price must lie in [1, W] and weight must be positive",
            KnapsackError::UnknownItem => "unknown item id",
            KnapsackError::StaleQuery => "no value query since the last update",
            KnapsackError::Internal => "internal engine failure",
        };
        f.write_str(msg)
    }
}

impl std::error::Error for KnapsackError {}

impl From<EngineError> for KnapsackError {
    fn from(_: EngineError) -> Self {
        KnapsackError::Internal
    }
}

impl From<PcfError> for KnapsackError {
    fn from(_: PcfError) -> Self {
        KnapsackError::Internal
    }
}

/// A live item. Deleted items are represented by empty slots whose leaf
/// function is constant 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Item {
    pub id: u64,
    pub price: f64,
    pub weight: f64,
}

/// Pre-rounding convolution and witness per internal node, for solution
/// extraction.
type AuxStore = Rc<RefCell<HashMap<usize, (Pcf, ConvWitness)>>>;

/// Balanced convolution tree over item leaves.
pub struct ItemTree {
    table: DpTable,
    aux: AuxStore,
    /// heap-indexed rows: node `i` has children `2i+1`, `2i+2`; leaves at
    /// `slots-1 .. 2*slots-1`
    rows: Vec<RowId>,
    slots: usize,
    items: Vec<Option<Item>>,
    free: Vec<usize>,
    id_to_slot: HashMap<u64, usize>,
    next_id: u64,
    budget: f64,
    eps: f64,
    w_bound: f64,
    t_cap: f64,
    cfg: RoundingConfig,
    rebuilds: u64,
}

fn leaf_proc(item: Option<Item>, t_cap: f64) -> RowProcedure {
    Box::new(move |_inputs| {
        Ok(match item {
            Some(it) if it.weight > 0.0 && it.weight <= t_cap => Pcf::from_pieces(
                &[
                    (it.weight, ExtValue::Zero),
                    (t_cap, ExtValue::finite(it.price)),
                ],
                0.0,
                t_cap,
                Monotonicity::Increasing,
            )
            .expect("leaf pieces are valid"),
            // empty slot, deleted item, or an item too heavy for any
            // queryable budget
            _ => Pcf::constant(0.0, t_cap, ExtValue::Zero, Monotonicity::Increasing),
        })
    })
}

fn merge_proc(node: usize, cfg: RoundingConfig, aux: AuxStore) -> RowProcedure {
    Box::new(move |inputs| {
        let (conv, wit) = maxplus_convolve(inputs[0], inputs[1])?;
        let rounded = conv.round_up_pow(&cfg)?;
        aux.borrow_mut().insert(node, (conv, wit));
        Ok(rounded)
    })
}

impl fmt::Debug for ItemTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ItemTree")
            .field("live", &self.live_items())
            .field("slots", &self.slots)
            .field("budget", &self.budget)
            .field("eps", &self.eps)
            .finish()
    }
}

impl ItemTree {
    /// Build a tree over `items` (given as `(price, weight)` pairs) with
    /// budget `budget` and error parameter `eps`, using the default `W`
    /// bound.
    pub fn build(items: &[(f64, f64)], budget: f64, eps: f64) -> Result<ItemTree, KnapsackError> {
        ItemTree::build_with(items, budget, eps, DEFAULT_W_BOUND)
    }

    pub fn build_with(
        items: &[(f64, f64)],
        budget: f64,
        eps: f64,
        w_bound: f64,
    ) -> Result<ItemTree, KnapsackError> {
        if !(eps > 0.0) {
            return Err(KnapsackError::BadEpsilon);
        }
        for &(p, w) in items {
            validate_item(p, w, w_bound)?;
        }
        let live: Vec<Item> = items
            .iter()
            .enumerate()
            .map(|(i, &(price, weight))| Item {
                id: i as u64,
                price,
                weight,
            })
            .collect();
        let mut tree = ItemTree::build_from(live, items.len() as u64, budget, eps, w_bound)?;
        tree.rebuilds = 0;
        Ok(tree)
    }

    fn build_from(
        live: Vec<Item>,
        next_id: u64,
        budget: f64,
        eps: f64,
        w_bound: f64,
    ) -> Result<ItemTree, KnapsackError> {
        let slots = live.len().next_power_of_two().max(2);
        let height = slots.ilog2() as usize;
        let delta = (1.0 + eps).ln() / height as f64;
        let cfg = RoundingConfig::new(delta, w_bound).map_err(|_| KnapsackError::BadEpsilon)?;
        let max_w = live.iter().map(|it| it.weight).fold(0.0f64, f64::max);
        let t_cap = budget + max_w + 1.0;

        let aux: AuxStore = Rc::new(RefCell::new(HashMap::new()));
        let params = DpParams {
            reach_bound: None,
            alpha: Some(1.0 + delta),
            piece_bound: Some(cfg.piece_bound()),
            expect_tag: Some(Monotonicity::Increasing),
        };
        let mut table = DpTable::new(params);
        let nodes = 2 * slots - 1;
        let mut items: Vec<Option<Item>> = vec![None; slots];
        let mut id_to_slot = HashMap::new();
        for (slot, it) in live.into_iter().enumerate() {
            id_to_slot.insert(it.id, slot);
            items[slot] = Some(it);
        }
        let mut rows = Vec::with_capacity(nodes);
        for node in 0..nodes {
            let row = if node >= slots - 1 {
                let slot = node - (slots - 1);
                table.add_row(leaf_proc(items[slot], t_cap))
            } else {
                table.add_row(merge_proc(node, cfg, Rc::clone(&aux)))
            };
            rows.push(row);
        }
        for node in 0..slots - 1 {
            table.add_dependency(rows[2 * node + 1], rows[node])?;
            table.add_dependency(rows[2 * node + 2], rows[node])?;
        }
        table.compute_all()?;
        let free = (0..slots).rev().filter(|&s| items[s].is_none()).collect();
        Ok(ItemTree {
            table,
            aux,
            rows,
            slots,
            items,
            free,
            id_to_slot,
            next_id,
            budget,
            eps,
            w_bound,
            t_cap,
            cfg,
            rebuilds: 0,
        })
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn live_items(&self) -> usize {
        self.id_to_slot.len()
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    /// Number of doubling/halving rebuilds performed so far.
    pub fn rebuilds(&self) -> u64 {
        self.rebuilds
    }

    /// Rows recomputed by the last update (root path length).
    pub fn last_update_rows(&self) -> usize {
        self.table.last_touched().len()
    }

    /// Largest piece count over all cached node functions.
    pub fn max_pieces(&self) -> usize {
        self.rows
            .iter()
            .filter_map(|&r| self.table.cached(r))
            .map(|f| f.num_pieces())
            .max()
            .unwrap_or(0)
    }

    /// Declared per-node piece bound `2 + ⌈log_{1+δ} W⌉`.
    pub fn piece_bound(&self) -> usize {
        self.cfg.piece_bound()
    }

    pub fn root_pcf(&self) -> &Pcf {
        self.table.cached(self.rows[0]).expect("tree is computed")
    }

    pub fn item(&self, id: u64) -> Option<Item> {
        self.id_to_slot.get(&id).and_then(|&s| self.items[s])
    }

    fn rebuild(&mut self, extra: Option<(f64, f64)>) -> Result<Option<u64>, KnapsackError> {
        let mut live: Vec<Item> = self.items.iter().flatten().copied().collect();
        let mut next_id = self.next_id;
        let new_id = extra.map(|(price, weight)| {
            let id = next_id;
            next_id += 1;
            live.push(Item { id, price, weight });
            id
        });
        let mut rebuilt =
            ItemTree::build_from(live, next_id, self.budget, self.eps, self.w_bound)?;
        rebuilt.rebuilds = self.rebuilds + 1;
        *self = rebuilt;
        Ok(new_id)
    }

    /// Insert an item, returning its id. Triggers a doubling rebuild when no
    /// free leaf slot remains.
    pub fn insert(&mut self, price: f64, weight: f64) -> Result<u64, KnapsackError> {
        validate_item(price, weight, self.w_bound)?;
        let Some(slot) = self.free.pop() else {
            return Ok(self.rebuild(Some((price, weight)))?.expect("id assigned"));
        };
        let id = self.next_id;
        self.next_id += 1;
        let item = Item { id, price, weight };
        self.items[slot] = Some(item);
        self.id_to_slot.insert(id, slot);
        let row = self.rows[self.slots - 1 + slot];
        self.table
            .set_procedure(row, leaf_proc(Some(item), self.t_cap))?;
        self.table.update_row(row)?;
        Ok(id)
    }

    /// Delete an item by id. Triggers a halving rebuild when the live count
    /// drops below half the slots.
    pub fn delete(&mut self, id: u64) -> Result<(), KnapsackError> {
        let slot = *self
            .id_to_slot
            .get(&id)
            .ok_or(KnapsackError::UnknownItem)?;
        self.id_to_slot.remove(&id);
        self.items[slot] = None;
        self.free.push(slot);
        let row = self.rows[self.slots - 1 + slot];
        self.table.set_procedure(row, leaf_proc(None, self.t_cap))?;
        self.table.update_row(row)?;
        if self.live_items() * 2 < self.slots && self.slots > 2 {
            self.rebuild(None)?;
        }
        Ok(())
    }

    /// Approximate optimum value: the root function at the budget.
    pub fn query_value(&self) -> f64 {
        self.root_pcf().eval_unchecked(self.budget).to_f64()
    }

    /// Extract a feasible solution achieving at least `query_value /
    /// (1+eps)`, by descending the tree with the convolution witnesses.
    pub fn query_solution(&self) -> Result<Vec<u64>, KnapsackError> {
        self.solution_at(self.budget)
    }

    /// Solution extraction at an arbitrary budget `x <= B`.
    pub fn solution_at(&self, x: f64) -> Result<Vec<u64>, KnapsackError> {
        let mut out = Vec::new();
        self.collect(0, x, &mut out)?;
        Ok(out)
    }

    fn collect(&self, node: usize, x: f64, out: &mut Vec<u64>) -> Result<(), KnapsackError> {
        let f = self
            .table
            .cached(self.rows[node])
            .ok_or(KnapsackError::Internal)?;
        if f.eval_unchecked(x) == ExtValue::Zero {
            return Ok(());
        }
        if node >= self.slots - 1 {
            let slot = node - (self.slots - 1);
            let item = self.items[slot].ok_or(KnapsackError::Internal)?;
            out.push(item.id);
            return Ok(());
        }
        let aux = self.aux.borrow();
        let (conv, wit) = aux.get(&node).ok_or(KnapsackError::Internal)?;
        let left = self
            .table
            .cached(self.rows[2 * node + 1])
            .ok_or(KnapsackError::Internal)?;
        let right = self
            .table
            .cached(self.rows[2 * node + 2])
            .ok_or(KnapsackError::Internal)?;
        let split = witness_argmin(conv, wit, left, right, x)?;
        drop(aux);
        self.collect(2 * node + 1, split, out)?;
        self.collect(2 * node + 2, x - split, out)
    }
}

fn validate_item(price: f64, weight: f64, w_bound: f64) -> Result<(), KnapsackError> {
    if !(price >= 1.0) || price > w_bound || !(weight > 0.0) {
        return Err(KnapsackError::BadItem);
    }
    Ok(())
}

/// Parsed knapsack instance: line 1 `n B eps`, then `n` lines `p w`.
#[derive(Clone, Debug)]
pub struct KnInstance {
    pub items: Vec<(f64, f64)>,
    pub budget: f64,
    pub eps: f64,
}

pub fn parse_instance(text: &str) -> Result<KnInstance, ParseError> {
    let recs = records(text);
    let (line, header) = recs
        .first()
        .ok_or_else(|| ParseError::new(0, "empty instance file"))?;
    let n: usize = field(header, 0, *line, "item count")?;
    let budget: f64 = field(header, 1, *line, "budget")?;
    let eps: f64 = field(header, 2, *line, "eps")?;
    if recs.len() != n + 1 {
        return Err(ParseError::new(
            *line,
            format!("expected {n} item lines, found {}", recs.len() - 1),
        ));
    }
    let mut items = Vec::with_capacity(n);
    for (line, fields) in &recs[1..] {
        let p: f64 = field(fields, 0, *line, "price")?;
        let w: f64 = field(fields, 1, *line, "weight")?;
        items.push((p, w));
    }
    Ok(KnInstance { items, budget, eps })
}

/// One line of an update trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TraceOp {
    Insert { price: f64, weight: f64 },
    Delete { id: u64 },
    Query,
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceOp>, ParseError> {
    let mut ops = Vec::new();
    for (line, fields) in records(text) {
        let op = match fields[0] {
            "insert" => TraceOp::Insert {
                price: field(&fields, 1, line, "price")?,
                weight: field(&fields, 2, line, "weight")?,
            },
            "delete" => TraceOp::Delete {
                id: field(&fields, 1, line, "id")?,
            },
            "query" => TraceOp::Query,
            other => return Err(ParseError::new(line, format!("unknown op: {other}"))),
        };
        ops.push(op);
    }
    Ok(ops)
}
