//! GL_lin: the logic of finite strict linear orders `<{0..n}, >`, and the
//! omega-plus frame obtained by hanging a tail and a limit below the top.
//!
//! On a linear frame the truth of every subformula at world `w` depends only
//! on the valuation at `w` and on which subformulas held at all worlds below
//! `w`. That summary only shrinks as `w` grows, so the search below walks
//! summaries breadth-first instead of enumerating whole models.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use crate::formula::Formula;
use crate::kripke::{
    build_tail_limit, eval_tail_limit, validate_model, KripkeModel, SubTable, TailLimitModel,
    Valuation,
};

/// Worlds `0..=top`, where `w` sees `w'` iff `w > w'`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NatFrameModel {
    pub top: usize,
    pub val: Vec<Valuation>,
}

impl NatFrameModel {
    /// Number of worlds.
    pub fn size(&self) -> usize {
        self.top + 1
    }

    pub fn to_kripke(&self) -> KripkeModel {
        let worlds: Vec<String> = (0..=self.top).map(|w| w.to_string()).collect();
        let rel = (1..=self.top).map(|w| (w.to_string(), (w - 1).to_string())).collect();
        let val = worlds.iter().cloned().zip(self.val.iter().cloned()).collect();
        validate_model(worlds, rel, val).expect("linear frames are GL-frames")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GlLinVerdict {
    ValidAtBound { bound: usize },
    Invalid { witness: NatFrameModel, world: usize },
}

impl GlLinVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, GlLinVerdict::ValidAtBound { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            GlLinVerdict::ValidAtBound { .. } => "valid-at-bound",
            GlLinVerdict::Invalid { .. } => "invalid",
        }
    }
}

pub fn default_bound(f: &Formula) -> usize {
    crate::formula::subformula_closure([f]).len() + 1
}

type Summary = Vec<bool>;

/// Per-world evaluation over a fixed subformula table.
struct Lin {
    table: SubTable,
    vars: Vec<Arc<str>>,
    root: usize,
}

impl Lin {
    fn new(f: &Formula) -> Lin {
        let table = SubTable::new([f]);
        let root = table.idx(f);
        Lin {
            vars: f.vars().into_iter().collect(),
            table,
            root,
        }
    }

    fn valuations(&self) -> usize {
        1 << self.vars.len()
    }

    fn valuation(&self, mask: usize) -> Valuation {
        self.vars
            .iter()
            .enumerate()
            .map(|(j, p)| (p.to_string(), mask >> j & 1 == 1))
            .collect()
    }

    /// The "held everywhere below" summary of a world with no successors.
    fn empty_summary(&self) -> Summary {
        vec![true; self.table.order.len()]
    }

    /// Truth of every subformula at a world with valuation `mask` whose
    /// successors are summarized by `below`.
    fn truths(&self, below: &Summary, mask: usize) -> Vec<bool> {
        let mut t = vec![false; self.table.order.len()];
        for (i, g) in self.table.order.iter().enumerate() {
            t[i] = match g {
                Formula::Var(p) => {
                    let j = self.vars.iter().position(|v| v == p).unwrap();
                    mask >> j & 1 == 1
                }
                Formula::Bottom => false,
                Formula::Implies(a, b) => !t[self.table.idx(a)] || t[self.table.idx(b)],
                Formula::Box(a) => below[self.table.idx(a)],
            };
        }
        t
    }

    fn extend(below: &Summary, truths: &[bool]) -> Summary {
        below.iter().zip(truths).map(|(a, b)| *a && *b).collect()
    }
}

/// Searches nat-frames with at most `bound` worlds for a world refuting `f`.
/// The first witness has the fewest worlds; ties go to the smallest
/// valuation masks, lowest world first. Because a world's behaviour depends
/// on its successors only through the shrinking summary, a bound of one more
/// than the number of subformulas already covers every nat-frame.
pub fn gllin_valid(f: &Formula, bound: usize) -> GlLinVerdict {
    let lin = Lin::new(f);
    let start = lin.empty_summary();
    // Each queue entry is a summary with the valuation masks that reached it.
    let mut seen: BTreeSet<Summary> = BTreeSet::from([start.clone()]);
    let mut queue: VecDeque<(Summary, Vec<usize>)> = VecDeque::from([(start, vec![])]);
    while let Some((below, path)) = queue.pop_front() {
        if path.len() >= bound {
            continue;
        }
        for mask in 0..lin.valuations() {
            let t = lin.truths(&below, mask);
            let mut path = path.clone();
            path.push(mask);
            if !t[lin.root] {
                let witness = NatFrameModel {
                    top: path.len() - 1,
                    val: path.iter().map(|m| lin.valuation(*m)).collect(),
                };
                return GlLinVerdict::Invalid {
                    world: witness.top,
                    witness,
                };
            }
            let next = Lin::extend(&below, &t);
            if seen.insert(next.clone()) {
                queue.push_back((next, path));
            }
        }
    }
    GlLinVerdict::ValidAtBound { bound }
}

/// Truth at the limit of every strongly constant tail-limit extension of
/// every nat-model; this is membership in the S-closure of GL_lin. Exact:
/// all reachable summaries are explored.
pub fn s_gllin_valid(f: &Formula) -> bool {
    let lin = Lin::new(f);
    let mut seen: BTreeSet<Summary> = BTreeSet::new();
    let mut queue = VecDeque::from([lin.empty_summary()]);
    // Summaries below the attachment world t0 are the base summaries
    // extended by t0's truths, which are exactly the non-initial states.
    let mut attached: Vec<Summary> = Vec::new();
    while let Some(below) = queue.pop_front() {
        for mask in 0..lin.valuations() {
            let next = Lin::extend(&below, &lin.truths(&below, mask));
            if seen.insert(next.clone()) {
                attached.push(next.clone());
                queue.push_back(next);
            }
        }
    }
    attached.iter().all(|s0| {
        (0..lin.valuations()).all(|c| {
            let mut s = s0.clone();
            loop {
                let next = Lin::extend(&s, &lin.truths(&s, c));
                if next == s {
                    break;
                }
                s = next;
            }
            lin.truths(&s, c)[lin.root]
        })
    })
}

/// Brute-force evaluation on an explicit nat-model, for cross-checks.
pub fn eval_nat(m: &NatFrameModel, w: usize, f: &Formula) -> bool {
    crate::kripke::eval_index(&m.to_kripke(), w, f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OmegaConfig {
    /// Longest explicit tail prefix tried.
    pub prefix_len_max: usize,
    /// Most base worlds tried.
    pub base_max: usize,
    /// Variables beyond this many (in sorted order) are held false.
    pub exhaustive_var_bound: usize,
}

impl Default for OmegaConfig {
    fn default() -> Self {
        OmegaConfig {
            prefix_len_max: 1,
            base_max: 2,
            exhaustive_var_bound: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OmegaVerdict {
    Refuted(TailLimitModel),
    NoCounterexampleFound,
}

/// Every omega-plus model within `cfg`, in a fixed order: base size, then
/// prefix length, then valuation bits. The base is a nat-frame attached at
/// its top world.
pub fn omega_models(f: &Formula, cfg: &OmegaConfig) -> impl Iterator<Item = TailLimitModel> {
    let vars: Vec<String> = f
        .vars()
        .into_iter()
        .take(cfg.exhaustive_var_bound)
        .map(|v| v.to_string())
        .collect();
    let cfg = *cfg;
    (1..=cfg.base_max.max(1)).flat_map(move |worlds| {
        let vars = vars.clone();
        (0..=cfg.prefix_len_max).flat_map(move |k| {
            let vars = vars.clone();
            let slots = worlds + k + 2;
            let bits = vars.len() * slots;
            (0u64..1 << bits).map(move |mask| {
                let val = |slot: usize| -> Valuation {
                    vars.iter()
                        .enumerate()
                        .map(|(j, p)| (p.clone(), mask >> (slot * vars.len() + j) & 1 == 1))
                        .collect()
                };
                let base = NatFrameModel {
                    top: worlds - 1,
                    val: (0..worlds).map(val).collect(),
                };
                build_tail_limit(
                    base.to_kripke(),
                    &(worlds - 1).to_string(),
                    (worlds..worlds + k).map(val).collect(),
                    val(worlds + k),
                    val(worlds + k + 1),
                )
                .expect("top world exists")
            })
        })
    })
}

/// Refutation search at the limit of omega-plus models. Finding nothing is
/// not a validity proof.
pub fn omega_refute_search(f: &Formula, cfg: &OmegaConfig) -> OmegaVerdict {
    for tm in omega_models(f, cfg) {
        if !eval_tail_limit(&tm, f).at_limit {
            return OmegaVerdict::Refuted(tm);
        }
    }
    OmegaVerdict::NoCounterexampleFound
}

/// Nat-frame witness as a plain valuation map keyed by world name.
pub fn witness_valuations(m: &NatFrameModel) -> BTreeMap<String, Valuation> {
    m.val.iter().enumerate().map(|(w, v)| (w.to_string(), v.clone())).collect()
}

/// The linearity scheme `box(box a -> b) | box(b & box b -> a)`.
pub fn linearity(a: &Formula, b: &Formula) -> Formula {
    Formula::or(
        Formula::boxed(Formula::imp(Formula::boxed(a.clone()), b.clone())),
        Formula::boxed(Formula::imp(
            Formula::and(b.clone(), Formula::boxed(b.clone())),
            a.clone(),
        )),
    )
}

/// Memoized `gllin_valid` at the default bound, for repeated oracle calls.
#[derive(Default)]
pub struct GlLinOracle {
    memo: HashMap<Formula, bool>,
}

impl GlLinOracle {
    pub fn valid(&mut self, f: &Formula) -> bool {
        if let Some(v) = self.memo.get(f) {
            return *v;
        }
        let v = gllin_valid(f, default_bound(f)).is_valid();
        self.memo.insert(f.clone(), v);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::f;
    use proptest::prelude::*;

    #[test]
    fn linearity_is_valid() {
        let g = f("box(box p -> q) | box(q & box q -> p)");
        assert_eq!(gllin_valid(&g, 6), GlLinVerdict::ValidAtBound { bound: 6 });
        assert!(gllin_valid(&f("box(box p -> p) -> box p"), 8).is_valid());
        // Not a GL theorem: it fails on a branching frame.
        assert!(!crate::prover::gl_provable(&crate::formula::seq(
            "=> box(box p -> q) | box(q & box q -> p)"
        )));
    }

    #[test]
    fn reflection_has_a_one_world_witness() {
        match gllin_valid(&f("box p -> p"), 4) {
            GlLinVerdict::Invalid { witness, world } => {
                assert_eq!(witness.size(), 1);
                assert_eq!(world, 0);
                assert_eq!(witness.val[0].get("p"), Some(&false));
                assert!(!eval_nat(&witness, world, &f("box p -> p")));
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn omega_search() {
        let cfg = OmegaConfig::default();
        match omega_refute_search(&f("box p -> p"), &cfg) {
            OmegaVerdict::Refuted(tm) => {
                assert!(!eval_tail_limit(&tm, &f("box p -> p")).at_limit);
            }
            v => panic!("{v:?}"),
        }
        for g in ["~box bot", "box(box p | box q) -> box p | box q"] {
            assert_eq!(omega_refute_search(&f(g), &cfg), OmegaVerdict::NoCounterexampleFound, "{g}");
        }
    }

    #[test]
    fn s_closure() {
        assert!(s_gllin_valid(&f("box p -> p")));
        assert!(s_gllin_valid(&f("~box bot")));
        assert!(!s_gllin_valid(&f("p")));
        assert!(!s_gllin_valid(&f("box p")));
    }

    fn arb_formula() -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof![Just(Formula::Bottom), Just(Formula::var("p")), Just(Formula::var("q"))];
        leaf.prop_recursive(4, 12, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::imp(a, b)),
                inner.prop_map(Formula::boxed),
            ]
        })
    }

    fn brute(g: &Formula, bound: usize) -> bool {
        let vars: Vec<String> = g.vars().iter().map(|v| v.to_string()).collect();
        for worlds in 1..=bound {
            for mask in 0u64..1 << (vars.len() * worlds) {
                let m = NatFrameModel {
                    top: worlds - 1,
                    val: (0..worlds)
                        .map(|w| {
                            vars.iter()
                                .enumerate()
                                .map(|(j, p)| (p.clone(), mask >> (w * vars.len() + j) & 1 == 1))
                                .collect()
                        })
                        .collect(),
                };
                let k = m.to_kripke();
                if (0..worlds).any(|w| !crate::kripke::eval_index(&k, w, g)) {
                    return false;
                }
            }
        }
        true
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn agrees_with_brute_force(g in arb_formula()) {
            prop_assert_eq!(gllin_valid(&g, 4).is_valid(), brute(&g, 4));
        }

        #[test]
        fn witnesses_refute(g in arb_formula()) {
            if let GlLinVerdict::Invalid { witness, world } = gllin_valid(&g, default_bound(&g)) {
                prop_assert!(!eval_nat(&witness, world, &g));
            }
        }

        #[test]
        fn default_bound_is_stable(g in arb_formula()) {
            let b = default_bound(&g);
            prop_assert_eq!(gllin_valid(&g, b).is_valid(), gllin_valid(&g, b + 2).is_valid());
        }

        #[test]
        fn gl_theorems_are_gllin_valid(g in arb_formula()) {
            let s = crate::formula::Sequent::new(crate::formula::SeqKind::Gl, [], [g.clone()]);
            if crate::prover::gl_provable(&s) {
                prop_assert!(gllin_valid(&g, default_bound(&g)).is_valid());
            }
        }
    }
}
