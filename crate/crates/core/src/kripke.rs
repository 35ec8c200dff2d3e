//! Finite GL-models and finitely presented tail-limit extensions.
//!
//! A tail-limit extension hangs an infinite descending chain `t1, t2, ...`
//! below a base world `t0`, plus a limit world `t_omega` below the whole
//! chain. Each `ti` (i >= 1) sees every `tj` with `j < i` and every base
//! successor of `t0`; the limit sees all of them. The tail valuation is an
//! explicit prefix followed by a constant continuation, which makes
//! evaluation exact and finite (see [`eval_tail_limit`]).

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{subformula_closure, Formula};

/// Truth values of variables at one world. Variables that are absent are
/// false.
pub type Valuation = BTreeMap<String, bool>;

fn holds(v: &Valuation, p: &str) -> bool {
    v.get(p).copied().unwrap_or(false)
}

fn true_vars(v: &Valuation) -> BTreeSet<&str> {
    v.iter().filter(|(_, b)| **b).map(|(k, _)| k.as_str()).collect()
}

/// Extensional equality of valuations (absent counts as false).
pub fn same_valuation(a: &Valuation, b: &Valuation) -> bool {
    true_vars(a) == true_vars(b)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("model has no worlds")]
    Empty,
    #[error("world {0:?} is listed twice")]
    DuplicateWorld(String),
    #[error("unknown world {0:?}")]
    UnknownWorld(String),
    #[error("world {0:?} lies on a cycle of the accessibility relation")]
    IrreflexivityViolation(String),
    #[error("malformed model file: {0}")]
    Malformed(String),
}

/// A finite Kripke model whose relation is transitive and irreflexive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KripkeModel {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
    succ: Vec<BTreeSet<usize>>,
    val: Vec<Valuation>,
}

/// Builds a model, closing `rel` transitively. Fails if the closure has a
/// loop, i.e. the frame is not a GL-frame.
pub fn validate_model(
    worlds: Vec<String>,
    rel: Vec<(String, String)>,
    val: BTreeMap<String, Valuation>,
) -> Result<KripkeModel, ModelError> {
    if worlds.is_empty() {
        return Err(ModelError::Empty);
    }
    let mut index = BTreeMap::new();
    for (i, w) in worlds.iter().enumerate() {
        if index.insert(w.clone(), i).is_some() {
            return Err(ModelError::DuplicateWorld(w.clone()));
        }
    }
    let lookup = |w: &String| {
        index
            .get(w)
            .copied()
            .ok_or_else(|| ModelError::UnknownWorld(w.clone()))
    };
    let n = worlds.len();
    let mut succ = vec![BTreeSet::new(); n];
    for (a, b) in &rel {
        succ[lookup(a)?].insert(lookup(b)?);
    }
    // Warshall-style closure; models here are small.
    let mut changed = true;
    while changed {
        changed = false;
        for w in 0..n {
            let reach: Vec<usize> = succ[w]
                .iter()
                .flat_map(|&v| succ[v].iter().copied())
                .collect();
            for r in reach {
                changed |= succ[w].insert(r);
            }
        }
    }
    if let Some(w) = (0..n).find(|&w| succ[w].contains(&w)) {
        return Err(ModelError::IrreflexivityViolation(worlds[w].clone()));
    }
    let mut vals = vec![Valuation::new(); n];
    for (w, v) in val {
        vals[lookup(&w)?] = v;
    }
    Ok(KripkeModel {
        names: worlds,
        index,
        succ,
        val: vals,
    })
}

impl KripkeModel {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn worlds(&self) -> &[String] {
        &self.names
    }

    pub fn world_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn world_name(&self, w: usize) -> &str {
        &self.names[w]
    }

    pub fn successors(&self, w: usize) -> &BTreeSet<usize> {
        &self.succ[w]
    }

    pub fn valuation(&self, w: usize) -> &Valuation {
        &self.val[w]
    }

    /// The (transitively closed) relation as name pairs, in index order.
    pub fn relation(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (w, s) in self.succ.iter().enumerate() {
            for &v in s {
                out.push((self.names[w].clone(), self.names[v].clone()));
            }
        }
        out
    }

    /// Truth of every formula in `table` at every world.
    pub fn truth_table(&self, table: &SubTable) -> Vec<Vec<bool>> {
        let n = self.len();
        let mut t: Vec<Vec<bool>> = Vec::with_capacity(table.order.len());
        for g in &table.order {
            let row: Vec<bool> = match g {
                Formula::Var(p) => (0..n).map(|w| holds(&self.val[w], p)).collect(),
                Formula::Bottom => vec![false; n],
                Formula::Implies(a, b) => {
                    let (ia, ib) = (table.idx(a), table.idx(b));
                    (0..n).map(|w| !t[ia][w] || t[ib][w]).collect()
                }
                Formula::Box(a) => {
                    let ia = table.idx(a);
                    (0..n)
                        .map(|w| self.succ[w].iter().all(|&v| t[ia][v]))
                        .collect()
                }
            };
            t.push(row);
        }
        t
    }
}

/// Subformulas of a formula set, ordered so that children precede parents.
#[derive(Debug, Clone)]
pub struct SubTable {
    pub order: Vec<Formula>,
    index: HashMap<Formula, usize>,
}

impl SubTable {
    pub fn new<'a, I: IntoIterator<Item = &'a Formula>>(fs: I) -> SubTable {
        let mut order: Vec<Formula> = subformula_closure(fs).formulas.into_iter().collect();
        order.sort_by_key(|g| g.size());
        let index = order.iter().cloned().enumerate().map(|(i, g)| (g, i)).collect();
        SubTable { order, index }
    }

    pub fn idx(&self, f: &Formula) -> usize {
        self.index[f]
    }

    pub fn get(&self, f: &Formula) -> Option<usize> {
        self.index.get(f).copied()
    }
}

/// Standard Kripke truth of `f` at world `w`.
pub fn eval_at(m: &KripkeModel, w: &str, f: &Formula) -> Result<bool, ModelError> {
    let wi = m
        .world_index(w)
        .ok_or_else(|| ModelError::UnknownWorld(w.to_string()))?;
    Ok(eval_index(m, wi, f))
}

pub fn eval_index(m: &KripkeModel, w: usize, f: &Formula) -> bool {
    let table = SubTable::new([f]);
    m.truth_table(&table)[table.idx(f)][w]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TailLimitModel {
    pub base: KripkeModel,
    pub attach: usize,
    pub tail_prefix: Vec<Valuation>,
    pub tail_constant: Valuation,
    pub limit_val: Valuation,
}

pub fn build_tail_limit(
    base: KripkeModel,
    attach: &str,
    tail_prefix: Vec<Valuation>,
    tail_constant: Valuation,
    limit_val: Valuation,
) -> Result<TailLimitModel, ModelError> {
    let attach = base
        .world_index(attach)
        .ok_or_else(|| ModelError::UnknownWorld(attach.to_string()))?;
    Ok(TailLimitModel {
        base,
        attach,
        tail_prefix,
        tail_constant,
        limit_val,
    })
}

impl TailLimitModel {
    /// Valuation of tail world `ti`; `t0` is the attachment world.
    pub fn tail_valuation(&self, i: usize) -> &Valuation {
        if i == 0 {
            self.base.valuation(self.attach)
        } else {
            self.tail_prefix.get(i - 1).unwrap_or(&self.tail_constant)
        }
    }

    /// All of `t0, t1, ...` share one valuation.
    pub fn is_constant(&self) -> bool {
        let c = &self.tail_constant;
        same_valuation(self.base.valuation(self.attach), c)
            && self.tail_prefix.iter().all(|v| same_valuation(v, c))
    }

    /// Constant, and the limit shares the tail valuation too.
    pub fn is_strongly_constant(&self) -> bool {
        self.is_constant() && same_valuation(&self.limit_val, &self.tail_constant)
    }

    pub fn attach_name(&self) -> &str {
        self.base.world_name(self.attach)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LimitVerdict {
    pub at_limit: bool,
    pub eventually_always: bool,
    pub stabilization_index: usize,
}

/// Truth of all subformulas of a formula set throughout a tail-limit model.
#[derive(Debug, Clone)]
pub struct TailEvaluation {
    pub table: SubTable,
    /// `base[i][w]`: subformula `i` at base world `w`.
    pub base: Vec<Vec<bool>>,
    /// `tail[j][i]`: subformula `i` at `t(j+1)`, up to the stabilization index.
    pub tail: Vec<Vec<bool>>,
    pub limit: Vec<bool>,
    /// Least `n` such that every subformula has the same truth at all `ti`, `i >= n`.
    pub stabilization_index: usize,
}

impl TailEvaluation {
    /// Truth of subformula `f` at `ti` for any `i` (0 is the attachment world).
    pub fn at_tail(&self, tm: &TailLimitModel, i: usize, f: &Formula) -> Option<bool> {
        let k = self.table.get(f)?;
        if i == 0 {
            return Some(self.base[k][tm.attach]);
        }
        let j = i.min(self.stabilization_index) - 1;
        Some(self.tail[j][k])
    }

    pub fn stable(&self, f: &Formula) -> Option<bool> {
        let k = self.table.get(f)?;
        Some(self.tail[self.stabilization_index - 1][k])
    }

    pub fn at_limit(&self, f: &Formula) -> Option<bool> {
        self.table.get(f).map(|k| self.limit[k])
    }
}

/// Evaluates the subformulas of `fs` at base, tail and limit worlds.
///
/// For each boxed subformula the summary records whether its body held at
/// every base successor of `t0` and at every tail world seen so far. Truth
/// at `t(i+1)` depends only on its valuation and that summary. The summary
/// only ever flips from true to false, so once the valuation is constant and
/// the summary stops changing, all later tail worlds agree.
pub fn eval_tail_limit_all<'a, I>(tm: &TailLimitModel, fs: I) -> TailEvaluation
where
    I: IntoIterator<Item = &'a Formula>,
{
    let table = SubTable::new(fs);
    let base = tm.base.truth_table(&table);
    let t0 = tm.attach;
    let succ0 = tm.base.successors(t0);

    // summary[i] for boxed entries; ignored elsewhere.
    let mut summary: Vec<bool> = table
        .order
        .iter()
        .map(|g| match g {
            Formula::Box(a) => {
                let ia = table.idx(a);
                base[ia][t0] && succ0.iter().all(|&x| base[ia][x])
            }
            _ => true,
        })
        .collect();

    let row_at = |val: &Valuation, summary: &[bool]| -> Vec<bool> {
        let mut row: Vec<bool> = Vec::with_capacity(table.order.len());
        for (i, g) in table.order.iter().enumerate() {
            let v = match g {
                Formula::Var(p) => holds(val, p),
                Formula::Bottom => false,
                Formula::Implies(a, b) => !row[table.idx(a)] || row[table.idx(b)],
                Formula::Box(_) => summary[i],
            };
            row.push(v);
        }
        row
    };

    let k = tm.tail_prefix.len();
    let mut tail = Vec::new();
    let mut i = 1;
    loop {
        let row = row_at(tm.tail_valuation(i), &summary);
        let next: Vec<bool> = table
            .order
            .iter()
            .enumerate()
            .map(|(j, g)| match g {
                Formula::Box(a) => summary[j] && row[table.idx(a)],
                _ => true,
            })
            .collect();
        tail.push(row);
        let settled = next == summary;
        summary = next;
        if i > k && settled {
            break;
        }
        i += 1;
    }
    let limit = row_at(&tm.limit_val, &summary);
    TailEvaluation {
        table,
        base,
        tail,
        limit,
        stabilization_index: i,
    }
}

pub fn eval_tail_limit(tm: &TailLimitModel, f: &Formula) -> LimitVerdict {
    let ev = eval_tail_limit_all(tm, [f]);
    LimitVerdict {
        at_limit: ev.at_limit(f).unwrap_or(false),
        eventually_always: ev.stable(f).unwrap_or(false),
        stabilization_index: ev.stabilization_index,
    }
}

/// Where to evaluate inside a tail-limit model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WorldRef {
    Base(usize),
    Tail(usize),
    Stable,
    Limit,
}

impl TailLimitModel {
    /// Resolves `limit`, `t#`, base ids and `t<k>`, in that order.
    pub fn resolve(&self, name: &str) -> Result<WorldRef, ModelError> {
        if name == "limit" {
            return Ok(WorldRef::Limit);
        }
        if name == "t#" {
            return Ok(WorldRef::Stable);
        }
        if let Some(w) = self.base.world_index(name) {
            return Ok(WorldRef::Base(w));
        }
        if let Some(rest) = name.strip_prefix('t') {
            if let Ok(k) = rest.parse::<usize>() {
                return Ok(if k == 0 {
                    WorldRef::Base(self.attach)
                } else {
                    WorldRef::Tail(k)
                });
            }
        }
        Err(ModelError::UnknownWorld(name.to_string()))
    }

    pub fn eval_ref(&self, at: &WorldRef, f: &Formula) -> bool {
        match at {
            WorldRef::Base(w) => eval_index(&self.base, *w, f),
            _ => {
                let ev = eval_tail_limit_all(self, [f]);
                match at {
                    WorldRef::Tail(i) => ev.at_tail(self, *i, f),
                    WorldRef::Stable => ev.stable(f),
                    _ => ev.at_limit(f),
                }
                .unwrap_or(false)
            }
        }
    }
}

/// On-disk model shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelFile {
    pub worlds: Vec<String>,
    pub rel: Vec<(String, String)>,
    pub val: BTreeMap<String, Valuation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailFile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TailFile {
    pub attach: String,
    #[serde(default)]
    pub prefix: Vec<Valuation>,
    #[serde(default)]
    pub constant: Valuation,
    #[serde(default)]
    pub limit: Valuation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnyModel {
    Plain(KripkeModel),
    Tail(TailLimitModel),
}

impl ModelFile {
    pub fn into_model(self) -> Result<AnyModel, ModelError> {
        let base = validate_model(self.worlds, self.rel, self.val)?;
        match self.tail {
            None => Ok(AnyModel::Plain(base)),
            Some(t) => Ok(AnyModel::Tail(build_tail_limit(
                base, &t.attach, t.prefix, t.constant, t.limit,
            )?)),
        }
    }

    pub fn parse(text: &str) -> Result<AnyModel, ModelError> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| ModelError::Malformed(e.to_string()))?;
        file.into_model()
    }
}

impl From<&KripkeModel> for ModelFile {
    fn from(m: &KripkeModel) -> ModelFile {
        ModelFile {
            worlds: m.names.clone(),
            rel: m.relation(),
            val: m
                .names
                .iter()
                .cloned()
                .zip(m.val.iter().cloned())
                .collect(),
            tail: None,
        }
    }
}

impl From<&TailLimitModel> for ModelFile {
    fn from(tm: &TailLimitModel) -> ModelFile {
        let mut file = ModelFile::from(&tm.base);
        file.tail = Some(TailFile {
            attach: tm.attach_name().to_string(),
            prefix: tm.tail_prefix.clone(),
            constant: tm.tail_constant.clone(),
            limit: tm.limit_val.clone(),
        });
        file
    }
}

impl From<&AnyModel> for ModelFile {
    fn from(m: &AnyModel) -> ModelFile {
        match m {
            AnyModel::Plain(k) => k.into(),
            AnyModel::Tail(t) => t.into(),
        }
    }
}

impl AnyModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelFile::from(self)).expect("model serializes")
    }
}
