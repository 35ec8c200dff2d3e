//! The four sequent calculi GLseq, Sseq, Dseq2 and Dseq3, proof trees, and
//! an independent proof checker.
//!
//! Rule schemata, with `Γ`, `Δ` finite sets and `□Γ = {□γ | γ ∈ Γ}`:
//!
//! ```text
//! glbox    □Γ => □φ        from  Γ, □Γ, □φ => φ
//! lift_s   Γ =s> Δ         from  Γ => Δ
//! boxl_s   □φ, Γ =s> Δ     from  φ, Γ =s> Δ
//! dbox_gl  □Γ =d> □Δ       from  Γ, □Γ => □Δ
//! dbox_s   □Γ =d> □Δ       from  □Γ =s> □Δ
//! ```
//!
//! plus initial sequents `φ => φ`, `bot =>`, weakening, `->L`, `->R` and
//! cut for each arrow. The checker re-derives every set-level side condition
//! from the node and its premises; it does not trust the annotation beyond
//! using it to pick a candidate.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::formula::{
    parse_formula, parse_sequent, subformula_closure, Formula, FormulaSet, SeqKind, Sequent,
    SubformulaClosure,
};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Calculus {
    GlSeq,
    SSeq,
    DSeq2,
    DSeq3,
}

impl Calculus {
    pub const ALL: [Calculus; 4] = [Calculus::GlSeq, Calculus::SSeq, Calculus::DSeq2, Calculus::DSeq3];

    pub fn name(self) -> &'static str {
        match self {
            Calculus::GlSeq => "glseq",
            Calculus::SSeq => "sseq",
            Calculus::DSeq2 => "dseq2",
            Calculus::DSeq3 => "dseq3",
        }
    }

    /// Sequent kinds the calculus can talk about.
    pub fn has_kind(self, kind: SeqKind) -> bool {
        match kind {
            SeqKind::Gl => true,
            SeqKind::S => matches!(self, Calculus::SSeq | Calculus::DSeq3),
            SeqKind::D => matches!(self, Calculus::DSeq2 | Calculus::DSeq3),
        }
    }

    /// Membership of a rule (at a given conclusion kind) per the table of
    /// calculi.
    pub fn admits(self, rule: RuleName, kind: SeqKind) -> bool {
        match rule {
            RuleName::Init
            | RuleName::InitBot
            | RuleName::Weakening
            | RuleName::ImpL
            | RuleName::ImpR
            | RuleName::Cut => self.has_kind(kind),
            RuleName::GlBox => true,
            RuleName::LiftS | RuleName::BoxLS => matches!(self, Calculus::SSeq | Calculus::DSeq3),
            RuleName::DBoxGl => self == Calculus::DSeq2,
            RuleName::DBoxS => self == Calculus::DSeq3,
        }
    }
}

impl fmt::Display for Calculus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Calculus {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Calculus::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown calculus {s:?}"))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum RuleName {
    Init,
    InitBot,
    Weakening,
    ImpL,
    ImpR,
    Cut,
    GlBox,
    LiftS,
    BoxLS,
    DBoxGl,
    DBoxS,
}

impl RuleName {
    pub const ALL: [RuleName; 11] = [
        RuleName::Init,
        RuleName::InitBot,
        RuleName::Weakening,
        RuleName::ImpL,
        RuleName::ImpR,
        RuleName::Cut,
        RuleName::GlBox,
        RuleName::LiftS,
        RuleName::BoxLS,
        RuleName::DBoxGl,
        RuleName::DBoxS,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleName::Init => "init",
            RuleName::InitBot => "init_bot",
            RuleName::Weakening => "weak",
            RuleName::ImpL => "impl",
            RuleName::ImpR => "impr",
            RuleName::Cut => "cut",
            RuleName::GlBox => "glbox",
            RuleName::LiftS => "lift_s",
            RuleName::BoxLS => "boxl_s",
            RuleName::DBoxGl => "dbox_gl",
            RuleName::DBoxS => "dbox_s",
        }
    }

    fn arity(self) -> usize {
        match self {
            RuleName::Init | RuleName::InitBot => 0,
            RuleName::ImpL | RuleName::Cut => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for RuleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        RuleName::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown rule {s:?}"))
    }
}

/// Optional instantiation data carried by a node.
///
/// `formula` is the principal formula (for `impl`, `impr`, `init`, `boxl_s`
/// and `glbox`, where it is the boxed right formula) or the cut formula.
/// `gamma`/`delta` are the unboxed sets of the modal rules.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Annotation {
    pub formula: Option<Formula>,
    pub gamma: Option<FormulaSet>,
    pub delta: Option<FormulaSet>,
}

impl Annotation {
    pub fn formula(f: Formula) -> Annotation {
        Annotation {
            formula: Some(f),
            ..Annotation::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.formula.is_none() && self.gamma.is_none() && self.delta.is_none()
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ProofTree {
    pub conclusion: Sequent,
    pub rule: RuleName,
    pub premises: Vec<Arc<ProofTree>>,
    pub ann: Annotation,
}

impl ProofTree {
    pub fn leaf(rule: RuleName, conclusion: Sequent, ann: Annotation) -> Arc<ProofTree> {
        Arc::new(ProofTree {
            conclusion,
            rule,
            premises: Vec::new(),
            ann,
        })
    }

    pub fn node(
        rule: RuleName,
        conclusion: Sequent,
        premises: Vec<Arc<ProofTree>>,
        ann: Annotation,
    ) -> Arc<ProofTree> {
        Arc::new(ProofTree {
            conclusion,
            rule,
            premises,
            ann,
        })
    }

    /// Visits each distinct node once (subtrees may be shared).
    pub fn for_each_node<'a>(self: &'a Arc<ProofTree>, mut visit: impl FnMut(&'a Arc<ProofTree>)) {
        let mut seen: HashSet<*const ProofTree> = HashSet::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            if !seen.insert(Arc::as_ptr(n)) {
                continue;
            }
            visit(n);
            stack.extend(n.premises.iter().rev());
        }
    }

    pub fn kinds(self: &Arc<ProofTree>) -> BTreeSet<SeqKind> {
        let mut out = BTreeSet::new();
        self.for_each_node(|n| {
            out.insert(n.conclusion.kind);
        });
        out
    }

    pub fn rules(self: &Arc<ProofTree>) -> BTreeSet<RuleName> {
        let mut out = BTreeSet::new();
        self.for_each_node(|n| {
            out.insert(n.rule);
        });
        out
    }

    pub fn has_cuts(self: &Arc<ProofTree>) -> bool {
        self.rules().contains(&RuleName::Cut)
    }

    /// Number of nodes in the fully expanded tree.
    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(|p| p.size()).sum::<usize>()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum CutPolicy {
    NoneAllowed,
    SemiAnalytic,
    Unrestricted,
}

impl CutPolicy {
    pub fn name(self) -> &'static str {
        match self {
            CutPolicy::NoneAllowed => "none",
            CutPolicy::SemiAnalytic => "semi",
            CutPolicy::Unrestricted => "any",
        }
    }
}

impl FromStr for CutPolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(CutPolicy::NoneAllowed),
            "semi" => Ok(CutPolicy::SemiAnalytic),
            "any" => Ok(CutPolicy::Unrestricted),
            _ => Err(format!("unknown cut policy {s:?}")),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum Violation {
    #[error("rule {rule} is not part of {calculus} (at a {kind} sequent)")]
    RuleNotInCalculus {
        rule: RuleName,
        calculus: Calculus,
        kind: SeqKind,
    },
    #[error("rule {rule}: expected {expected} arrow, found {found}")]
    ArrowMismatch {
        rule: RuleName,
        expected: SeqKind,
        found: SeqKind,
    },
    #[error("rule {rule}: {detail}{}", .formula.as_ref().map(|f| format!(" ({f})")).unwrap_or_default())]
    SchemaMismatch {
        rule: RuleName,
        formula: Option<Formula>,
        detail: String,
    },
    #[error("rule {rule} needs {expected} premises, found {found}")]
    WrongPremiseCount {
        rule: RuleName,
        expected: usize,
        found: usize,
    },
}

fn mismatch(rule: RuleName, formula: Option<&Formula>, detail: &str) -> Violation {
    Violation::SchemaMismatch {
        rule,
        formula: formula.cloned(),
        detail: detail.to_string(),
    }
}

fn with(set: &FormulaSet, f: &Formula) -> FormulaSet {
    let mut s = set.clone();
    s.insert(f.clone());
    s
}

fn without(set: &FormulaSet, f: &Formula) -> FormulaSet {
    let mut s = set.clone();
    s.remove(f);
    s
}

fn boxes(set: &FormulaSet) -> FormulaSet {
    set.iter().map(|g| Formula::boxed(g.clone())).collect()
}

fn all_boxed(set: &FormulaSet) -> Option<FormulaSet> {
    set.iter().map(|g| g.unbox().cloned()).collect()
}

fn expect_kind(rule: RuleName, expected: SeqKind, found: SeqKind) -> Result<(), Violation> {
    if expected == found {
        Ok(())
    } else {
        Err(Violation::ArrowMismatch {
            rule,
            expected,
            found,
        })
    }
}

/// Candidates for a principal formula: the annotation if present, else the
/// sorted members of `pool` satisfying `pred`.
fn candidates<'a>(
    ann: &'a Annotation,
    pool: impl Iterator<Item = &'a Formula>,
    pred: impl Fn(&Formula) -> bool,
) -> Vec<&'a Formula> {
    match &ann.formula {
        Some(f) => vec![f],
        None => pool.filter(|g| pred(g)).collect(),
    }
}

fn check_ann_sets(rule: RuleName, ann: &Annotation, gamma: &FormulaSet, delta: Option<&FormulaSet>) -> Result<(), Violation> {
    if let Some(g) = &ann.gamma {
        if g != gamma {
            return Err(mismatch(rule, None, "annotated gamma does not match the conclusion"));
        }
    }
    if let (Some(d), Some(want)) = (&ann.delta, delta) {
        if d != want {
            return Err(mismatch(rule, None, "annotated delta does not match the conclusion"));
        }
    }
    Ok(())
}

/// Validates one inference step. On success returns the cut formula for cut
/// nodes and `None` otherwise.
pub fn check_inference(node: &ProofTree, calculus: Calculus) -> Result<Option<Formula>, Violation> {
    let rule = node.rule;
    let c = &node.conclusion;
    if !calculus.admits(rule, c.kind) {
        return Err(Violation::RuleNotInCalculus {
            rule,
            calculus,
            kind: c.kind,
        });
    }
    if node.premises.len() != rule.arity() {
        return Err(Violation::WrongPremiseCount {
            rule,
            expected: rule.arity(),
            found: node.premises.len(),
        });
    }
    let ps: Vec<&Sequent> = node.premises.iter().map(|p| &p.conclusion).collect();
    let ann = &node.ann;
    match rule {
        RuleName::Init => {
            if c.left.len() != 1 || c.left != c.right {
                return Err(mismatch(rule, None, "conclusion is not of the form φ ⇒ φ"));
            }
            if let Some(f) = &ann.formula {
                if !c.left.contains(f) {
                    return Err(mismatch(rule, Some(f), "annotated formula is not the initial formula"));
                }
            }
            Ok(None)
        }
        RuleName::InitBot => {
            if c.left.len() == 1 && c.left.contains(&Formula::Bottom) && c.right.is_empty() {
                Ok(None)
            } else {
                Err(mismatch(rule, None, "conclusion is not ⊥ ⇒"))
            }
        }
        RuleName::Weakening => {
            let p = ps[0];
            expect_kind(rule, c.kind, p.kind)?;
            if let Some(f) = p.left.difference(&c.left).next() {
                return Err(mismatch(rule, Some(f), "premise left formula missing from conclusion"));
            }
            if let Some(f) = p.right.difference(&c.right).next() {
                return Err(mismatch(rule, Some(f), "premise right formula missing from conclusion"));
            }
            Ok(None)
        }
        RuleName::ImpL => {
            let (p1, p2) = (ps[0], ps[1]);
            expect_kind(rule, c.kind, p1.kind)?;
            expect_kind(rule, c.kind, p2.kind)?;
            let cands = candidates(ann, c.left.iter(), |g| matches!(g, Formula::Implies(..)));
            for f in &cands {
                let Formula::Implies(a, b) = f else { continue };
                // Γ = p1.left; conclusion adds α→β to it.
                let ok = c.left.contains(f)
                    && with(&p1.left, f) == c.left
                    && p1.right == with(&c.right, a)
                    && p2.left == with(&p1.left, b)
                    && p2.right == c.right;
                if ok {
                    return Ok(None);
                }
            }
            Err(mismatch(rule, cands.first().copied(), "no principal implication fits the premises"))
        }
        RuleName::ImpR => {
            let p = ps[0];
            expect_kind(rule, c.kind, p.kind)?;
            let cands = candidates(ann, c.right.iter(), |g| matches!(g, Formula::Implies(..)));
            for f in &cands {
                let Formula::Implies(a, b) = f else { continue };
                if !c.right.contains(f) || p.left != with(&c.left, a) {
                    continue;
                }
                // Δ either keeps α→β or not.
                if p.right == with(&c.right, b) || p.right == with(&without(&c.right, f), b) {
                    return Ok(None);
                }
            }
            Err(mismatch(rule, cands.first().copied(), "no principal implication fits the premise"))
        }
        RuleName::Cut => {
            let (p1, p2) = (ps[0], ps[1]);
            expect_kind(rule, c.kind, p1.kind)?;
            expect_kind(rule, c.kind, p2.kind)?;
            let cands: Vec<&Formula> = match &ann.formula {
                Some(f) => vec![f],
                None => p1.right.intersection(&p2.left).collect(),
            };
            for f in &cands {
                if !p1.right.contains(f) || !p2.left.contains(f) {
                    continue;
                }
                let left_ok = [p2.left.clone(), without(&p2.left, f)]
                    .iter()
                    .any(|pi| p1.left.union(pi).cloned().collect::<FormulaSet>() == c.left);
                let right_ok = [p1.right.clone(), without(&p1.right, f)]
                    .iter()
                    .any(|d| d.union(&p2.right).cloned().collect::<FormulaSet>() == c.right);
                if left_ok && right_ok {
                    return Ok(Some((*f).clone()));
                }
            }
            Err(mismatch(rule, cands.first().copied(), "no cut formula fits the premises"))
        }
        RuleName::GlBox => {
            let p = ps[0];
            expect_kind(rule, SeqKind::Gl, c.kind)?;
            expect_kind(rule, SeqKind::Gl, p.kind)?;
            let gamma = all_boxed(&c.left)
                .ok_or_else(|| mismatch(rule, c.left.iter().find(|g| !g.is_box()), "left side must be all boxed"))?;
            if c.right.len() != 1 {
                return Err(mismatch(rule, None, "right side must be a single boxed formula"));
            }
            let boxed_phi = c.right.iter().next().unwrap();
            let phi = boxed_phi
                .unbox()
                .ok_or_else(|| mismatch(rule, Some(boxed_phi), "right formula is not boxed"))?;
            check_ann_sets(rule, ann, &gamma, None)?;
            if let Some(f) = &ann.formula {
                if f != boxed_phi {
                    return Err(mismatch(rule, Some(f), "annotated formula is not the boxed right formula"));
                }
            }
            let mut want_left: FormulaSet = gamma.union(&c.left).cloned().collect();
            want_left.insert(boxed_phi.clone());
            if p.left != want_left {
                return Err(mismatch(rule, None, "premise left must be Γ, □Γ, □φ"));
            }
            if p.right.len() != 1 || !p.right.contains(phi) {
                return Err(mismatch(rule, Some(phi), "premise right must be φ"));
            }
            Ok(None)
        }
        RuleName::LiftS => {
            let p = ps[0];
            expect_kind(rule, SeqKind::S, c.kind)?;
            expect_kind(rule, SeqKind::Gl, p.kind)?;
            if p.left == c.left && p.right == c.right {
                Ok(None)
            } else {
                Err(mismatch(rule, None, "premise and conclusion must have the same sets"))
            }
        }
        RuleName::BoxLS => {
            let p = ps[0];
            expect_kind(rule, SeqKind::S, c.kind)?;
            expect_kind(rule, SeqKind::S, p.kind)?;
            if p.right != c.right {
                return Err(mismatch(rule, None, "right sides must agree"));
            }
            let cands = candidates(ann, c.left.iter(), |g| g.is_box());
            for f in &cands {
                let Some(phi) = f.unbox() else { continue };
                if !c.left.contains(f) {
                    continue;
                }
                // Γ may itself contain □φ, and p.left may already contain φ.
                let ok = [without(&c.left, f), c.left.clone()]
                    .iter()
                    .any(|gamma| with(gamma, phi) == p.left && with(gamma, f) == c.left);
                if ok {
                    return Ok(None);
                }
            }
            Err(mismatch(rule, cands.first().copied(), "no boxed principal formula fits the premise"))
        }
        RuleName::DBoxGl | RuleName::DBoxS => {
            let p = ps[0];
            expect_kind(rule, SeqKind::D, c.kind)?;
            let premise_kind = if rule == RuleName::DBoxGl { SeqKind::Gl } else { SeqKind::S };
            expect_kind(rule, premise_kind, p.kind)?;
            let gamma = all_boxed(&c.left)
                .ok_or_else(|| mismatch(rule, c.left.iter().find(|g| !g.is_box()), "left side must be all boxed"))?;
            let delta = all_boxed(&c.right)
                .ok_or_else(|| mismatch(rule, c.right.iter().find(|g| !g.is_box()), "right side must be all boxed"))?;
            check_ann_sets(rule, ann, &gamma, Some(&delta))?;
            let want_left: FormulaSet = if rule == RuleName::DBoxGl {
                gamma.union(&boxes(&gamma)).cloned().collect()
            } else {
                boxes(&gamma)
            };
            if p.left != want_left {
                return Err(mismatch(rule, None, "premise left side does not match the schema"));
            }
            if p.right != boxes(&delta) {
                return Err(mismatch(rule, None, "premise right side must be □Δ"));
            }
            Ok(None)
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct CutEntry {
    pub conclusion: String,
    pub formula: String,
    pub kind: SeqKind,
    pub boxed: bool,
    pub in_sf: bool,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ProofReport {
    pub valid: bool,
    pub end_sequent: Sequent,
    pub cut_inventory: Vec<CutEntry>,
    pub subformula_ok: bool,
    /// Offending node conclusions with their violation, in visit order.
    pub errors: Vec<(Sequent, String)>,
}

impl Serialize for SeqKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.arrow())
    }
}

/// Checks a whole proof: every step, every cut against `policy`, and the
/// subformula property (enforced only under `NoneAllowed`).
pub fn check_proof(p: &Arc<ProofTree>, calculus: Calculus, policy: CutPolicy) -> ProofReport {
    let end = p.conclusion.clone();
    let sf = end.closure();
    let mut errors = Vec::new();
    let mut cuts = Vec::new();
    let mut subformula_ok = true;
    p.for_each_node(|n| {
        if !n.conclusion.formulas().all(|g| sf.contains(g)) {
            subformula_ok = false;
        }
        match check_inference(n, calculus) {
            Err(v) => errors.push((n.conclusion.clone(), v.to_string())),
            Ok(Some(cf)) => {
                let local: SubformulaClosure = n.conclusion.closure();
                let entry = CutEntry {
                    conclusion: n.conclusion.to_string(),
                    formula: cf.to_string(),
                    kind: n.conclusion.kind,
                    boxed: cf.is_box(),
                    in_sf: local.contains(&cf),
                };
                let allowed = match policy {
                    CutPolicy::NoneAllowed => false,
                    CutPolicy::SemiAnalytic => entry.kind == SeqKind::D && entry.boxed && entry.in_sf,
                    CutPolicy::Unrestricted => true,
                };
                if !allowed {
                    errors.push((
                        n.conclusion.clone(),
                        format!("cut on {cf} not allowed under policy {}", policy.name()),
                    ));
                }
                cuts.push(entry);
            }
            Ok(None) => {}
        }
    });
    if policy == CutPolicy::NoneAllowed && !subformula_ok {
        errors.push((end.clone(), "subformula property violated".to_string()));
    }
    ProofReport {
        valid: errors.is_empty(),
        end_sequent: end,
        cut_inventory: cuts,
        subformula_ok,
        errors,
    }
}

/// Weakens `p` to `target` (whose sides must include `p`'s), collapsing
/// stacked weakenings into one step. Returns `p` itself when nothing changes.
pub fn weaken(p: Arc<ProofTree>, target: &Sequent) -> Arc<ProofTree> {
    if p.conclusion == *target {
        return p;
    }
    let inner = if p.rule == RuleName::Weakening {
        p.premises[0].clone()
    } else {
        p
    };
    if inner.conclusion == *target {
        return inner;
    }
    ProofTree::node(RuleName::Weakening, target.clone(), vec![inner], Annotation::default())
}

/// Subformula closure of a proof's end-sequent; convenience for reports.
pub fn end_closure(p: &ProofTree) -> SubformulaClosure {
    subformula_closure(p.conclusion.formulas())
}

// JSON proof files.

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProofFileError {
    #[error("malformed proof file: {0}")]
    Malformed(String),
}

fn malformed(msg: impl Into<String>) -> ProofFileError {
    ProofFileError::Malformed(msg.into())
}

fn set_json(set: &FormulaSet) -> Value {
    Value::Array(set.iter().map(|g| Value::String(g.to_string())).collect())
}

fn node_json(p: &ProofTree) -> Value {
    let mut obj = serde_json::Map::new();
    obj.insert("seq".into(), Value::String(p.conclusion.to_string()));
    obj.insert("rule".into(), Value::String(p.rule.name().to_string()));
    let mut ann = serde_json::Map::new();
    if let Some(f) = &p.ann.formula {
        ann.insert("formula".into(), Value::String(f.to_string()));
    }
    if let Some(g) = &p.ann.gamma {
        ann.insert("gamma".into(), set_json(g));
    }
    if let Some(d) = &p.ann.delta {
        ann.insert("delta".into(), set_json(d));
    }
    obj.insert("ann".into(), Value::Object(ann));
    obj.insert(
        "premises".into(),
        Value::Array(p.premises.iter().map(|q| node_json(q)).collect()),
    );
    Value::Object(obj)
}

pub fn proof_to_json(p: &ProofTree, calculus: Calculus) -> Value {
    let mut obj = serde_json::Map::new();
    obj.insert("calculus".into(), Value::String(calculus.name().to_string()));
    obj.insert("root".into(), node_json(p));
    Value::Object(obj)
}

pub fn proof_to_string(p: &ProofTree, calculus: Calculus) -> String {
    serde_json::to_string_pretty(&proof_to_json(p, calculus)).expect("proof serializes")
}

fn parse_set(v: &Value) -> Result<FormulaSet, ProofFileError> {
    let arr = v.as_array().ok_or_else(|| malformed("expected a list of formulas"))?;
    arr.iter()
        .map(|x| {
            let s = x.as_str().ok_or_else(|| malformed("formula must be a string"))?;
            parse_formula(s).map_err(|e| malformed(e.to_string()))
        })
        .collect()
}

fn node_from_json(
    v: &Value,
    cache: &mut BTreeMap<String, Arc<ProofTree>>,
) -> Result<Arc<ProofTree>, ProofFileError> {
    let obj = v.as_object().ok_or_else(|| malformed("node must be an object"))?;
    let seq = obj
        .get("seq")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed("node needs a \"seq\" string"))?;
    let conclusion = parse_sequent(seq).map_err(|e| malformed(format!("{seq:?}: {e}")))?;
    let rule: RuleName = obj
        .get("rule")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed("node needs a \"rule\" string"))?
        .parse()
        .map_err(malformed)?;
    let mut ann = Annotation::default();
    if let Some(a) = obj.get("ann") {
        let a = a.as_object().ok_or_else(|| malformed("\"ann\" must be an object"))?;
        if let Some(f) = a.get("formula") {
            let s = f.as_str().ok_or_else(|| malformed("ann.formula must be a string"))?;
            ann.formula = Some(parse_formula(s).map_err(|e| malformed(e.to_string()))?);
        }
        if let Some(g) = a.get("gamma") {
            ann.gamma = Some(parse_set(g)?);
        }
        if let Some(d) = a.get("delta") {
            ann.delta = Some(parse_set(d)?);
        }
    }
    let premises = match obj.get("premises") {
        None => Vec::new(),
        Some(ps) => ps
            .as_array()
            .ok_or_else(|| malformed("\"premises\" must be a list"))?
            .iter()
            .map(|q| node_from_json(q, cache))
            .collect::<Result<_, _>>()?,
    };
    let node = ProofTree {
        conclusion,
        rule,
        premises,
        ann,
    };
    // Re-share identical subtrees so that checking stays linear in the file.
    let key = serde_json::to_string(&node_json(&node)).unwrap_or_default();
    Ok(cache.entry(key).or_insert_with(|| Arc::new(node)).clone())
}

pub fn proof_from_json(v: &Value) -> Result<(Calculus, Arc<ProofTree>), ProofFileError> {
    let obj = v.as_object().ok_or_else(|| malformed("proof file must be an object"))?;
    let calculus: Calculus = obj
        .get("calculus")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed("missing \"calculus\""))?
        .parse()
        .map_err(malformed)?;
    let root = obj.get("root").ok_or_else(|| malformed("missing \"root\""))?;
    let mut cache = BTreeMap::new();
    Ok((calculus, node_from_json(root, &mut cache)?))
}

pub fn proof_from_str(text: &str) -> Result<(Calculus, Arc<ProofTree>), ProofFileError> {
    let v: Value = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
    proof_from_json(&v)
}

/// Hand-written proofs used by tests, the CLI and the acceptance suite.
pub mod fixtures {
    use super::*;
    use crate::formula::{f, seq};

    fn n(rule: RuleName, s: &str, premises: Vec<Arc<ProofTree>>) -> Arc<ProofTree> {
        ProofTree::node(rule, seq(s), premises, Annotation::default())
    }

    fn na(rule: RuleName, s: &str, ann: &str, premises: Vec<Arc<ProofTree>>) -> Arc<ProofTree> {
        ProofTree::node(rule, seq(s), premises, Annotation::formula(f(ann)))
    }

    /// `box p | box q => box p, box q` at the given arrow, by `->L` on
    /// `~box p -> box q` (the expansion of the disjunction).
    fn or_left(arrow: &str) -> Arc<ProofTree> {
        let s = |t: &str| t.replace("=>", arrow);
        na(
            RuleName::ImpL,
            &s("box p | box q => box p, box q"),
            "box p | box q",
            vec![
                // Γ => Δ, ~box p
                na(
                    RuleName::ImpR,
                    &s("box p | box q => box p, box q, ~box p"),
                    "~box p",
                    vec![n(
                        RuleName::Weakening,
                        &s("box p, box p | box q => box p, box q, bot"),
                        vec![n(RuleName::Init, &s("box p => box p"), vec![])],
                    )],
                ),
                // box q, Γ => Δ
                n(
                    RuleName::Weakening,
                    &s("box q, box p | box q => box p, box q"),
                    vec![n(RuleName::Init, &s("box q => box q"), vec![])],
                ),
            ],
        )
    }

    /// `=> A` from `box(box p | box q) => box p, box q` by `->R` twice
    /// (the second realises the disjunction on the right).
    fn d_axiom_tail(arrow: &str, modal: Arc<ProofTree>) -> Arc<ProofTree> {
        let s = |t: &str| t.replace("=>", arrow);
        // box p | box q on the right unfolds to ~box p -> box q
        let or_r = na(
            RuleName::ImpR,
            &s("box(box p | box q) => box p | box q"),
            "box p | box q",
            vec![na(
                RuleName::ImpL,
                &s("box(box p | box q), ~box p => box q"),
                "~box p",
                vec![
                    n(
                        RuleName::Weakening,
                        &s("box(box p | box q), ~box p => box q, box p"),
                        vec![modal],
                    ),
                    n(
                        RuleName::Weakening,
                        &s("bot, box(box p | box q), ~box p => box q"),
                        vec![n(RuleName::InitBot, &s("bot =>"), vec![])],
                    ),
                ],
            )],
        );
        na(
            RuleName::ImpR,
            &s("=> box(box p | box q) -> box p | box q"),
            "box(box p | box q) -> box p | box q",
            vec![or_r],
        )
    }

    /// Cut-free Dseq2 proof of `=d> box(box p | box q) -> box p | box q`.
    pub fn example_d2_axiom() -> Arc<ProofTree> {
        let modal = n(
            RuleName::DBoxGl,
            "box(box p | box q) =d> box p, box q",
            vec![n(
                RuleName::Weakening,
                "box p | box q, box(box p | box q) => box p, box q",
                vec![or_left("=>")],
            )],
        );
        d_axiom_tail("=d>", modal)
    }

    /// The S-level subtree of the Dseq3 proof: `box(box p | box q) =s> box p, box q`.
    pub fn example_d3_axiom_subtree() -> Arc<ProofTree> {
        na(
            RuleName::BoxLS,
            "box(box p | box q) =s> box p, box q",
            "box(box p | box q)",
            vec![or_left("=s>")],
        )
    }

    /// Cut-free Dseq3 proof of `=d> box(box p | box q) -> box p | box q`.
    pub fn example_d3_axiom() -> Arc<ProofTree> {
        let modal = n(
            RuleName::DBoxS,
            "box(box p | box q) =d> box p, box q",
            vec![example_d3_axiom_subtree()],
        );
        d_axiom_tail("=d>", modal)
    }

    /// Cut-free Dseq2 proof of `=d> ~box bot`.
    pub fn example_d2_consistency() -> Arc<ProofTree> {
        na(
            RuleName::ImpR,
            "=d> ~box bot",
            "~box bot",
            vec![n(
                RuleName::Weakening,
                "box bot =d> bot",
                vec![n(
                    RuleName::DBoxGl,
                    "box bot =d>",
                    vec![n(
                        RuleName::Weakening,
                        "bot, box bot =>",
                        vec![n(RuleName::InitBot, "bot =>", vec![])],
                    )],
                )],
            )],
        )
    }

    /// Dseq2 proof of `box box box p =d> box p` with one cut on `box box p`.
    pub fn failure_with_cut() -> Arc<ProofTree> {
        let lift = |from: &str, to: &str, base: &str| {
            n(
                RuleName::DBoxGl,
                to,
                vec![n(
                    RuleName::Weakening,
                    from,
                    vec![n(RuleName::Init, base, vec![])],
                )],
            )
        };
        na(
            RuleName::Cut,
            "box box box p =d> box p",
            "box box p",
            vec![
                lift(
                    "box box p, box box box p => box box p",
                    "box box box p =d> box box p",
                    "box box p => box box p",
                ),
                lift("box p, box box p => box p", "box box p =d> box p", "box p => box p"),
            ],
        )
    }

    /// Cut-free Dseq3 proof of `box box box p =d> box p` via two `boxl_s` steps.
    pub fn failure_d3() -> Arc<ProofTree> {
        n(
            RuleName::DBoxS,
            "box box box p =d> box p",
            vec![na(
                RuleName::BoxLS,
                "box box box p =s> box p",
                "box box box p",
                vec![na(
                    RuleName::BoxLS,
                    "box box p, box box box p =s> box p",
                    "box box p",
                    vec![n(
                        RuleName::Weakening,
                        "box p, box box p, box box box p =s> box p",
                        vec![n(RuleName::Init, "box p =s> box p", vec![])],
                    )],
                )],
            )],
        )
    }

    /// GLseq proof of Löb's axiom.
    pub fn lob_gl() -> Arc<ProofTree> {
        // box(box p -> p), box p => p   closes on box p -> p by ->L
        let inner = na(
            RuleName::ImpL,
            "box p -> p, box(box p -> p), box p => p",
            "box p -> p",
            vec![
                n(
                    RuleName::Weakening,
                    "box p -> p, box(box p -> p), box p => p, box p",
                    vec![n(RuleName::Init, "box p => box p", vec![])],
                ),
                n(
                    RuleName::Weakening,
                    "p, box p -> p, box(box p -> p), box p => p",
                    vec![n(RuleName::Init, "p => p", vec![])],
                ),
            ],
        );
        na(
            RuleName::ImpR,
            "=> box(box p -> p) -> box p",
            "box(box p -> p) -> box p",
            vec![na(RuleName::GlBox, "box(box p -> p) => box p", "box p", vec![inner])],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::formula::{f, seq};

    fn single(rule: RuleName, c: &str, ps: &[&str]) -> ProofTree {
        ProofTree {
            conclusion: seq(c),
            rule,
            premises: ps
                .iter()
                .map(|p| ProofTree::leaf(RuleName::Init, seq(p), Annotation::default()))
                .collect(),
            ann: Annotation::default(),
        }
    }

    #[test]
    fn d_axiom_modal_step() {
        let node = single(
            RuleName::DBoxGl,
            "box(box p | box q) =d> box p, box q",
            &["box p | box q, box(box p | box q) => box p, box q"],
        );
        assert_eq!(check_inference(&node, Calculus::DSeq2), Ok(None));
        assert!(matches!(
            check_inference(&node, Calculus::DSeq3),
            Err(Violation::RuleNotInCalculus { .. })
        ));
    }

    #[test]
    fn boxl_absorbs_gamma() {
        let node = single(RuleName::BoxLS, "box box p =s> box p", &["box p =s> box p"]);
        assert_eq!(check_inference(&node, Calculus::SSeq), Ok(None));
        // principal kept in the premise
        let node = single(RuleName::BoxLS, "box box p =s> box p", &["box p, box box p =s> box p"]);
        assert_eq!(check_inference(&node, Calculus::SSeq), Ok(None));
        let node = single(RuleName::BoxLS, "box box p =s> box p", &["p =s> box p"]);
        assert!(check_inference(&node, Calculus::SSeq).is_err());
    }

    #[test]
    fn arrow_and_schema_errors() {
        let node = single(RuleName::LiftS, "p =s> p", &["p =s> p"]);
        assert!(matches!(
            check_inference(&node, Calculus::SSeq),
            Err(Violation::ArrowMismatch { .. })
        ));
        let node = single(RuleName::GlBox, "box p, q => box r", &["p, box p, q, box r => r"]);
        assert!(matches!(
            check_inference(&node, Calculus::GlSeq),
            Err(Violation::SchemaMismatch { formula: Some(_), .. })
        ));
        let node = single(RuleName::Weakening, "p => q", &["r => q"]);
        assert!(check_inference(&node, Calculus::GlSeq).is_err());
        let node = single(RuleName::ImpL, "p -> q => r", &["=> r"]);
        assert!(matches!(
            check_inference(&node, Calculus::GlSeq),
            Err(Violation::WrongPremiseCount { .. })
        ));
    }

    #[test]
    fn init_forms() {
        let ok = ProofTree::leaf(RuleName::Init, seq("p => p"), Annotation::default());
        assert_eq!(check_inference(&ok, Calculus::GlSeq), Ok(None));
        let bad = ProofTree::leaf(RuleName::Init, seq("p, q => p"), Annotation::default());
        assert!(check_inference(&bad, Calculus::GlSeq).is_err());
        let bot = ProofTree::leaf(RuleName::InitBot, seq("bot =d>"), Annotation::default());
        assert!(check_inference(&bot, Calculus::GlSeq).is_err());
        assert_eq!(check_inference(&bot, Calculus::DSeq2), Ok(None));
    }

    #[test]
    fn examples_check() {
        let r = check_proof(&example_d2_axiom(), Calculus::DSeq2, CutPolicy::NoneAllowed);
        assert!(r.valid && r.subformula_ok, "{:?}", r.errors);
        let r = check_proof(&example_d3_axiom(), Calculus::DSeq3, CutPolicy::NoneAllowed);
        assert!(r.valid && r.subformula_ok, "{:?}", r.errors);
        let r = check_proof(&example_d2_consistency(), Calculus::DSeq2, CutPolicy::NoneAllowed);
        assert!(r.valid, "{:?}", r.errors);
        let r = check_proof(&failure_d3(), Calculus::DSeq3, CutPolicy::NoneAllowed);
        assert!(r.valid, "{:?}", r.errors);
        let r = check_proof(&lob_gl(), Calculus::GlSeq, CutPolicy::NoneAllowed);
        assert!(r.valid, "{:?}", r.errors);
        assert_eq!(lob_gl().kinds(), [SeqKind::Gl].into_iter().collect());
    }

    #[test]
    fn failure_tree_policies() {
        let p = failure_with_cut();
        let none = check_proof(&p, Calculus::DSeq2, CutPolicy::NoneAllowed);
        assert!(!none.valid);
        let semi = check_proof(&p, Calculus::DSeq2, CutPolicy::SemiAnalytic);
        assert!(semi.valid, "{:?}", semi.errors);
        assert_eq!(semi.cut_inventory.len(), 1);
        let cut = &semi.cut_inventory[0];
        assert!(cut.boxed && cut.in_sf && cut.kind == SeqKind::D);
        assert_eq!(cut.formula, "box box p");
    }

    #[test]
    fn json_round_trip() {
        for (p, c) in [
            (example_d2_axiom(), Calculus::DSeq2),
            (example_d3_axiom(), Calculus::DSeq3),
            (failure_with_cut(), Calculus::DSeq2),
        ] {
            let text = proof_to_string(&p, c);
            let (c2, q) = proof_from_str(&text).unwrap();
            assert_eq!(c2, c);
            assert_eq!(*q, *p);
            assert_eq!(proof_to_string(&q, c2), text);
        }
        assert!(proof_from_str("{\"calculus\":\"x\"}").is_err());
        assert!(proof_from_str("{\"calculus\":\"glseq\",\"root\":{\"seq\":\"p\",\"rule\":\"init\"}}").is_err());
    }

    #[test]
    fn annotation_is_not_trusted() {
        let mut node = single(RuleName::ImpR, "=> p -> p", &["p => p"]);
        assert_eq!(check_inference(&node, Calculus::GlSeq), Ok(None));
        node.ann = Annotation::formula(f("q -> q"));
        assert!(check_inference(&node, Calculus::GlSeq).is_err());
    }
}
