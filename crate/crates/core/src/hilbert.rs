//! Hilbert systems GLH, SH, DH, DH2, DH3 and their GL_lin variants.
//!
//! A proof is a list of lines, each an axiom instance or a rule step. The
//! "theorem of L" side conditions are decided by an oracle (the GLseq or
//! Sseq prover for GL, nat-frame search for GL_lin) unless an explicit
//! subproof is attached; with `require_subproofs` the subproof is mandatory.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::calculi::{check_proof, Calculus, CutPolicy, ProofTree, RuleName};
use crate::formula::{parse_formula, Formula, FormulaSet, SeqKind, Sequent};
use crate::glin::{s_gllin_valid, GlLinOracle};
use crate::prover::{gl_provable, prove, prove_gl, prove_s, Verdict};
use crate::transforms::embed_gl_into_d;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Oracle {
    Gl,
    GlLin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SystemId {
    Glh,
    S(Oracle),
    D(Oracle),
    D2(Oracle),
    D3(Oracle),
}

impl SystemId {
    pub const SH: SystemId = SystemId::S(Oracle::Gl);
    pub const DH: SystemId = SystemId::D(Oracle::Gl);
    pub const DH2: SystemId = SystemId::D2(Oracle::Gl);
    pub const DH3: SystemId = SystemId::D3(Oracle::Gl);

    pub fn name(self) -> &'static str {
        use Oracle::*;
        use SystemId::*;
        match self {
            Glh => "glh",
            S(Gl) => "sh",
            D(Gl) => "dh",
            D2(Gl) => "dh2",
            D3(Gl) => "dh3",
            S(GlLin) => "s-gllin",
            D(GlLin) => "d-gllin",
            D2(GlLin) => "d2-gllin",
            D3(GlLin) => "d3-gllin",
        }
    }

    pub fn schemes(self) -> &'static [Scheme] {
        use Scheme::*;
        match self {
            SystemId::Glh => &[Taut, K, Lob],
            SystemId::S(_) => &[Taut, K, Lob, Thm, Refl],
            SystemId::D(_) => &[Taut, K, Lob, Thm, NonBot, D],
            SystemId::D2(_) => &[Taut, Dh2],
            SystemId::D3(_) => &[Taut, Dh3],
        }
    }

    fn oracle(self) -> Oracle {
        match self {
            SystemId::Glh => Oracle::Gl,
            SystemId::S(o) | SystemId::D(o) | SystemId::D2(o) | SystemId::D3(o) => o,
        }
    }
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [
            SystemId::Glh,
            SystemId::SH,
            SystemId::DH,
            SystemId::DH2,
            SystemId::DH3,
            SystemId::S(Oracle::GlLin),
            SystemId::D(Oracle::GlLin),
            SystemId::D2(Oracle::GlLin),
            SystemId::D3(Oracle::GlLin),
        ]
        .into_iter()
        .find(|x| x.name() == s)
        .ok_or_else(|| format!("unknown system {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Taut,
    K,
    Lob,
    /// A theorem of the oracle logic.
    Thm,
    Refl,
    NonBot,
    D,
    Dh2,
    Dh3,
}

impl Scheme {
    pub const ALL: [Scheme; 9] = [
        Scheme::Taut,
        Scheme::K,
        Scheme::Lob,
        Scheme::Thm,
        Scheme::Refl,
        Scheme::NonBot,
        Scheme::D,
        Scheme::Dh2,
        Scheme::Dh3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Taut => "taut",
            Scheme::K => "k",
            Scheme::Lob => "lob",
            Scheme::Thm => "thm",
            Scheme::Refl => "refl",
            Scheme::NonBot => "nonbot",
            Scheme::D => "d",
            Scheme::Dh2 => "dh2",
            Scheme::Dh3 => "dh3",
        }
    }

    fn needs_witness(self) -> bool {
        matches!(self, Scheme::Dh2 | Scheme::Dh3)
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown scheme {s:?}"))
    }
}

/// Γ and Δ of a `⋀□Γ -> ⋁□Δ` axiom, in list order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Witness {
    pub gamma: Vec<Formula>,
    pub delta: Vec<Formula>,
}

impl Witness {
    pub fn formula(&self) -> Formula {
        Formula::imp(
            Formula::conj(self.gamma.iter().cloned().map(Formula::boxed).collect::<Vec<_>>()),
            Formula::disj(self.delta.iter().cloned().map(Formula::boxed).collect::<Vec<_>>()),
        )
    }

    /// `⋀(Γ, □Γ) -> ⋁□Δ`.
    pub fn side_formula(&self) -> Formula {
        let left: Vec<Formula> = self
            .gamma
            .iter()
            .cloned()
            .chain(self.gamma.iter().cloned().map(Formula::boxed))
            .collect();
        Formula::imp(
            Formula::conj(left),
            Formula::disj(self.delta.iter().cloned().map(Formula::boxed).collect::<Vec<_>>()),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Justification {
    Axiom {
        scheme: Scheme,
        witness: Option<Witness>,
        /// Explicit proof of the side condition, in the system it belongs to.
        sub: Option<Box<HilbertProof>>,
    },
    /// `imp` holds `from -> this`.
    Mp { from: usize, imp: usize },
    /// Necessitation; GLH only.
    Nec { from: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Line {
    pub formula: Formula,
    pub just: Justification,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertProof {
    pub system: SystemId,
    pub lines: Vec<Line>,
}

impl HilbertProof {
    pub fn conclusion(&self) -> Option<&Formula> {
        self.lines.last().map(|l| &l.formula)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HilbertError {
    #[error("formula does not match the witness shape: {0}")]
    MalformedWitness(String),
    #[error("collapse lemma needs a non-empty list")]
    EmptyDelta,
    #[error("input proof is not valid: {0}")]
    InvalidInputProof(String),
    #[error("malformed proof file: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CheckOptions {
    pub require_subproofs: bool,
}

// Propositional tautology check: sequent search treating variables, ⊥ and
// boxed formulas as atoms. Kept separate from the prover on purpose.

fn taut_seq(mut left: Vec<Formula>, mut right: Vec<Formula>) -> bool {
    if left.contains(&Formula::Bottom) || left.iter().any(|g| right.contains(g)) {
        return true;
    }
    if let Some(i) = right.iter().position(|g| matches!(g, Formula::Implies(..))) {
        let Formula::Implies(a, b) = right.swap_remove(i) else { unreachable!() };
        left.push((*a).clone());
        right.push((*b).clone());
        return taut_seq(left, right);
    }
    if let Some(i) = left.iter().position(|g| matches!(g, Formula::Implies(..))) {
        let Formula::Implies(a, b) = left.swap_remove(i) else { unreachable!() };
        let mut r1 = right.clone();
        r1.push((*a).clone());
        if !taut_seq(left.clone(), r1) {
            return false;
        }
        left.push((*b).clone());
        return taut_seq(left, right);
    }
    left.contains(&Formula::Bottom) || left.iter().any(|g| right.contains(g))
}

pub fn is_tautology(f: &Formula) -> bool {
    taut_seq(vec![], vec![f.clone()])
}

fn match_k(f: &Formula) -> bool {
    // box(a -> b) -> (box a -> box b)
    let Formula::Implies(l, r) = f else { return false };
    let (Formula::Box(ab), Formula::Implies(ba, bb)) = (&**l, &**r) else { return false };
    let (Formula::Implies(a, b), Formula::Box(a2), Formula::Box(b2)) = (&**ab, &**ba, &**bb) else {
        return false;
    };
    a == a2 && b == b2
}

fn match_lob(f: &Formula) -> bool {
    // box(box a -> a) -> box a
    let Formula::Implies(l, r) = f else { return false };
    let (Formula::Box(inner), Formula::Box(a)) = (&**l, &**r) else { return false };
    **inner == Formula::imp(Formula::boxed((**a).clone()), (**a).clone())
}

fn match_refl(f: &Formula) -> bool {
    let Formula::Implies(l, r) = f else { return false };
    matches!(&**l, Formula::Box(a) if a == r)
}

fn match_d(f: &Formula) -> bool {
    // box(box a | box b) -> box a | box b
    let Formula::Implies(l, r) = f else { return false };
    let Formula::Box(inner) = &**l else { return false };
    if inner != r {
        return false;
    }
    let Formula::Implies(na, bb) = &**r else { return false };
    let Formula::Implies(ba, bot) = &**na else { return false };
    ba.is_box() && bb.is_box() && **bot == Formula::Bottom
}

/// Membership oracles, memoized per checker run.
#[derive(Default)]
struct Oracles {
    gllin: GlLinOracle,
    gl: HashMap<Formula, bool>,
}

impl Oracles {
    fn theorem(&mut self, o: Oracle, f: &Formula) -> bool {
        match o {
            Oracle::Gl => *self
                .gl
                .entry(f.clone())
                .or_insert_with(|| gl_provable(&Sequent::new(SeqKind::Gl, [], [f.clone()]))),
            Oracle::GlLin => self.gllin.valid(f),
        }
    }

    fn dh2_side(&mut self, o: Oracle, w: &Witness) -> bool {
        match o {
            Oracle::Gl => {
                let left = w.gamma.iter().cloned().chain(w.gamma.iter().cloned().map(Formula::boxed));
                gl_provable(&Sequent::new(SeqKind::Gl, left, w.delta.iter().cloned().map(Formula::boxed)))
            }
            Oracle::GlLin => self.gllin.valid(&w.side_formula()),
        }
    }

    fn dh3_side(&mut self, o: Oracle, w: &Witness) -> bool {
        match o {
            Oracle::Gl => prove_s(&Sequent::new(
                SeqKind::S,
                w.gamma.iter().cloned().map(Formula::boxed),
                w.delta.iter().cloned().map(Formula::boxed),
            ))
            .is_ok(),
            Oracle::GlLin => s_gllin_valid(&w.formula()),
        }
    }
}

fn scheme_holds(f: &Formula, system: SystemId, scheme: Scheme, w: Option<&Witness>, or: &mut Oracles) -> Result<bool, HilbertError> {
    if scheme.needs_witness() {
        let w = w.ok_or_else(|| HilbertError::MalformedWitness(format!("{} needs gamma and delta", scheme.name())))?;
        if w.formula() != *f {
            return Err(HilbertError::MalformedWitness(format!("expected {}", w.formula())));
        }
        return Ok(match scheme {
            Scheme::Dh2 => or.dh2_side(system.oracle(), w),
            _ => or.dh3_side(system.oracle(), w),
        });
    }
    Ok(match scheme {
        Scheme::Taut => is_tautology(f),
        Scheme::K => match_k(f),
        Scheme::Lob => match_lob(f),
        Scheme::Refl => match_refl(f),
        Scheme::NonBot => *f == Formula::not(Formula::boxed(Formula::Bottom)),
        Scheme::D => match_d(f),
        Scheme::Thm => or.theorem(system.oracle(), f),
        Scheme::Dh2 | Scheme::Dh3 => unreachable!(),
    })
}

/// The first scheme of `system` that `f` instantiates. Schemes with
/// witnesses are only tried when a witness is supplied.
pub fn recognize_axiom(f: &Formula, system: SystemId, witness: Option<&Witness>) -> Result<Option<Scheme>, HilbertError> {
    let mut or = Oracles::default();
    for &s in system.schemes() {
        if s.needs_witness() != witness.is_some() {
            continue;
        }
        if scheme_holds(f, system, s, witness, &mut or)? {
            return Ok(Some(s));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertReport {
    pub valid: bool,
    pub conclusion: Option<Formula>,
    /// First offending line (0-based) with the reason.
    pub first_error: Option<(usize, String)>,
}

/// The system and formula a side-condition subproof must establish.
fn sub_target(system: SystemId, scheme: Scheme, f: &Formula, w: Option<&Witness>) -> Result<(SystemId, Formula), String> {
    if system.oracle() == Oracle::GlLin {
        return Err("no Hilbert system is available for GL_lin subproofs".into());
    }
    match scheme {
        Scheme::Thm => Ok((SystemId::Glh, f.clone())),
        Scheme::Dh2 => Ok((SystemId::Glh, w.map(|w| w.side_formula()).ok_or("missing witness")?)),
        Scheme::Dh3 => Ok((SystemId::SH, f.clone())),
        _ => Err(format!("scheme {} takes no subproof", scheme.name())),
    }
}

pub fn check_hilbert_proof(p: &HilbertProof, system: SystemId, opts: CheckOptions) -> HilbertReport {
    let mut or = Oracles::default();
    check_with(p, system, opts, &mut or)
}

fn check_with(p: &HilbertProof, system: SystemId, opts: CheckOptions, or: &mut Oracles) -> HilbertReport {
    let fail = |i: usize, msg: String| HilbertReport {
        valid: false,
        conclusion: p.conclusion().cloned(),
        first_error: Some((i, msg)),
    };
    if p.lines.is_empty() {
        return fail(0, "empty proof".into());
    }
    for (i, line) in p.lines.iter().enumerate() {
        let f = &line.formula;
        match &line.just {
            Justification::Axiom { scheme, witness, sub } => {
                if !system.schemes().contains(scheme) {
                    return fail(i, format!("scheme {} is not an axiom of {system}", scheme.name()));
                }
                let takes_sub = matches!(scheme, Scheme::Thm | Scheme::Dh2 | Scheme::Dh3);
                if let Some(sub) = sub {
                    let (sys, want) = match sub_target(system, *scheme, f, witness.as_ref()) {
                        Ok(t) => t,
                        Err(e) => return fail(i, e),
                    };
                    if sub.system != sys || sub.conclusion() != Some(&want) {
                        return fail(i, format!("subproof must be a {sys} proof of {want}"));
                    }
                    let r = check_with(sub, sys, opts, or);
                    if !r.valid {
                        let (j, e) = r.first_error.unwrap_or_default();
                        return fail(i, format!("subproof line {j}: {e}"));
                    }
                    if let (Scheme::Dh2 | Scheme::Dh3, Some(w)) = (scheme, witness) {
                        if w.formula() != *f {
                            return fail(i, format!("formula does not match the witness shape {}", w.formula()));
                        }
                    }
                    continue;
                }
                if opts.require_subproofs && takes_sub {
                    return fail(i, format!("scheme {} needs an explicit subproof", scheme.name()));
                }
                match scheme_holds(f, system, *scheme, witness.as_ref(), or) {
                    Ok(true) => {}
                    Ok(false) => return fail(i, format!("not an instance of {}", scheme.name())),
                    Err(e) => return fail(i, e.to_string()),
                }
            }
            Justification::Mp { from, imp } => {
                if *from >= i || *imp >= i {
                    return fail(i, "modus ponens must cite earlier lines".into());
                }
                let want = Formula::imp(p.lines[*from].formula.clone(), f.clone());
                if p.lines[*imp].formula != want {
                    return fail(i, format!("line {imp} is not {want}"));
                }
            }
            Justification::Nec { from } => {
                if system != SystemId::Glh {
                    return fail(i, format!("necessitation is not a rule of {system}"));
                }
                if *from >= i {
                    return fail(i, "necessitation must cite an earlier line".into());
                }
                if *f != Formula::boxed(p.lines[*from].formula.clone()) {
                    return fail(i, format!("expected box of line {from}"));
                }
            }
        }
    }
    HilbertReport {
        valid: true,
        conclusion: p.conclusion().cloned(),
        first_error: None,
    }
}

// Building proofs.

fn curried(prems: &[Formula], concl: Formula) -> Formula {
    prems.iter().rev().fold(concl, |acc, p| Formula::imp(p.clone(), acc))
}

struct Builder {
    system: SystemId,
    lines: Vec<Line>,
    index: HashMap<Formula, usize>,
}

impl Builder {
    fn new(system: SystemId) -> Builder {
        Builder {
            system,
            lines: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn push(&mut self, formula: Formula, just: Justification) -> usize {
        if let Some(&i) = self.index.get(&formula) {
            return i;
        }
        let i = self.lines.len();
        self.index.insert(formula.clone(), i);
        self.lines.push(Line { formula, just });
        i
    }

    fn f(&self, i: usize) -> &Formula {
        &self.lines[i].formula
    }

    fn axiom(&mut self, f: Formula, scheme: Scheme) -> usize {
        self.push(
            f,
            Justification::Axiom {
                scheme,
                witness: None,
                sub: None,
            },
        )
    }

    fn axiom_full(&mut self, f: Formula, scheme: Scheme, witness: Option<Witness>, sub: Option<HilbertProof>) -> usize {
        self.push(
            f,
            Justification::Axiom {
                scheme,
                witness,
                sub: sub.map(Box::new),
            },
        )
    }

    fn mp(&mut self, imp: usize, from: usize) -> usize {
        let Formula::Implies(a, b) = self.f(imp).clone() else {
            panic!("modus ponens on a non-implication");
        };
        debug_assert_eq!(*a, *self.f(from));
        self.push((*b).clone(), Justification::Mp { from, imp })
    }

    fn nec(&mut self, from: usize) -> usize {
        let f = Formula::boxed(self.f(from).clone());
        self.push(f, Justification::Nec { from })
    }

    /// Derives `concl` from the given lines by one tautology and modus ponens.
    fn taut_from(&mut self, prems: &[usize], concl: Formula) -> usize {
        if let Some(&i) = self.index.get(&concl) {
            return i;
        }
        let fs: Vec<Formula> = prems.iter().map(|&i| self.f(i).clone()).collect();
        let mut cur = self.axiom(curried(&fs, concl), Scheme::Taut);
        for &p in prems {
            cur = self.mp(cur, p);
        }
        cur
    }

    /// Copies `other` in, returning the line of its conclusion.
    fn splice(&mut self, other: &HilbertProof) -> usize {
        let mut map = Vec::with_capacity(other.lines.len());
        for l in &other.lines {
            let just = match &l.just {
                Justification::Mp { from, imp } => Justification::Mp {
                    from: map[*from],
                    imp: map[*imp],
                },
                Justification::Nec { from } => Justification::Nec { from: map[*from] },
                j => j.clone(),
            };
            map.push(self.push(l.formula.clone(), just));
        }
        *map.last().expect("spliced proof is empty")
    }

    /// From `C1 -> ... -> Cn -> D` derives `box C1 -> ... -> box Cn -> box D`
    /// with necessitation and K. GLH only.
    fn box_curried(&mut self, line: usize, prems: &[Formula], concl: &Formula) -> usize {
        let mut cur = self.nec(line);
        let mut boxed_prems: Vec<Formula> = Vec::new();
        for (k, c) in prems.iter().enumerate() {
            let rest = curried(&prems[k + 1..], concl.clone());
            let k_ax = Formula::imp(
                Formula::boxed(Formula::imp(c.clone(), rest.clone())),
                Formula::imp(Formula::boxed(c.clone()), Formula::boxed(rest.clone())),
            );
            let k_line = self.axiom(k_ax, Scheme::K);
            boxed_prems.push(Formula::boxed(c.clone()));
            cur = if k == 0 {
                self.mp(k_line, cur)
            } else {
                self.taut_from(&[cur, k_line], curried(&boxed_prems, Formula::boxed(rest)))
            };
        }
        cur
    }

    /// `box g -> box box g`, via Löb on `g & box g`.
    fn four(&mut self, g: &Formula) -> usize {
        let bg = Formula::boxed(g.clone());
        let target = Formula::imp(bg.clone(), Formula::boxed(bg.clone()));
        if let Some(&i) = self.index.get(&target) {
            return i;
        }
        let psi = Formula::and(g.clone(), bg.clone());
        let bpsi = Formula::boxed(psi.clone());
        // box psi -> box g and box psi -> box box g
        let t1 = self.axiom(Formula::imp(psi.clone(), g.clone()), Scheme::Taut);
        let down1 = self.box_curried(t1, std::slice::from_ref(&psi), g);
        let t2 = self.axiom(Formula::imp(psi.clone(), bg.clone()), Scheme::Taut);
        let down2 = self.box_curried(t2, std::slice::from_ref(&psi), &bg);
        // g -> (box psi -> psi), using box psi -> box g
        let step = Formula::imp(g.clone(), Formula::imp(bpsi.clone(), psi.clone()));
        let s1 = self.taut_from(&[down1], step);
        let up = self.box_curried(s1, std::slice::from_ref(g), &Formula::imp(bpsi.clone(), psi.clone()));
        let lob = self.axiom(
            Formula::imp(Formula::boxed(Formula::imp(bpsi.clone(), psi.clone())), bpsi.clone()),
            Scheme::Lob,
        );
        self.taut_from(&[up, lob, down2], target)
    }

    fn finish(self) -> HilbertProof {
        HilbertProof {
            system: self.system,
            lines: self.lines,
        }
    }

    /// Ends the proof on line `i` by moving it last.
    fn finish_at(mut self, i: usize) -> HilbertProof {
        if i + 1 != self.lines.len() {
            let f = self.f(i).clone();
            // `(f -> f)`-free restatement: an MP from a tautology f -> f would
            // be deduplicated, so copy via a fresh top-level step instead.
            let t = Formula::imp(f.clone(), f.clone());
            self.index.remove(&f);
            let tl = self.axiom(t, Scheme::Taut);
            let l = self.lines.len();
            self.lines.push(Line {
                formula: f.clone(),
                just: Justification::Mp { from: i, imp: tl },
            });
            self.index.insert(f, l);
        }
        self.finish()
    }
}

fn seq_formula(s: &Sequent) -> Formula {
    s.to_formula()
}

fn system_for(calc: Calculus, kind: SeqKind) -> SystemId {
    match (kind, calc) {
        (SeqKind::Gl, _) => SystemId::Glh,
        (SeqKind::S, _) => SystemId::SH,
        (SeqKind::D, Calculus::DSeq2) => SystemId::DH2,
        (SeqKind::D, _) => SystemId::DH3,
    }
}

struct Converter {
    calc: Calculus,
    memo: HashMap<(*const ProofTree, SystemId), HilbertProof>,
}

impl Converter {
    /// A proof of the node's sequent formula in the system of its kind.
    fn convert(&mut self, n: &Arc<ProofTree>) -> HilbertProof {
        let sys = system_for(self.calc, n.conclusion.kind);
        let key = (Arc::as_ptr(n), sys);
        if let Some(p) = self.memo.get(&key) {
            return p.clone();
        }
        let mut b = Builder::new(sys);
        let end = self.emit(n, &mut b, &mut HashMap::new());
        let p = b.finish_at(end);
        self.memo.insert(key, p.clone());
        p
    }

    fn emit(&mut self, n: &Arc<ProofTree>, b: &mut Builder, lines: &mut HashMap<*const ProofTree, usize>) -> usize {
        if let Some(&i) = lines.get(&Arc::as_ptr(n)) {
            return i;
        }
        let c = &n.conclusion;
        let target = seq_formula(c);
        let i = match n.rule {
            RuleName::Init | RuleName::InitBot => b.axiom(target, Scheme::Taut),
            RuleName::Weakening | RuleName::ImpL | RuleName::ImpR | RuleName::Cut => {
                let ps: Vec<usize> = n.premises.iter().map(|q| self.emit(q, b, lines)).collect();
                b.taut_from(&ps, target)
            }
            RuleName::GlBox => {
                let q = self.emit(&n.premises[0], b, lines);
                let boxed_phi = c.right.iter().next().unwrap().clone();
                let phi = boxed_phi.unbox().unwrap().clone();
                let gamma: Vec<Formula> = c.left.iter().filter_map(|g| g.unbox().cloned()).collect();
                let mut prems: Vec<Formula> = gamma.clone();
                prems.extend(c.left.iter().cloned());
                let loop_f = Formula::imp(boxed_phi.clone(), phi.clone());
                let cur = b.taut_from(&[q], curried(&prems, loop_f.clone()));
                let boxed = b.box_curried(cur, &prems, &loop_f);
                let lob = b.axiom(Formula::imp(Formula::boxed(loop_f), boxed_phi), Scheme::Lob);
                let mut support = vec![boxed, lob];
                for g in &gamma {
                    support.push(b.four(g));
                }
                b.taut_from(&support, target)
            }
            RuleName::BoxLS => {
                let q = self.emit(&n.premises[0], b, lines);
                let p = &n.premises[0].conclusion;
                let bf = match &n.ann.formula {
                    Some(f) => f.clone(),
                    None => c
                        .left
                        .iter()
                        .find(|g| g.unbox().is_some_and(|x| p.left.contains(x)))
                        .cloned()
                        .expect("boxl_s has a boxed principal formula"),
                };
                let refl = b.axiom(Formula::imp(bf.clone(), bf.unbox().unwrap().clone()), Scheme::Refl);
                b.taut_from(&[q, refl], target)
            }
            RuleName::LiftS => {
                let sub = self.convert(&n.premises[0]);
                b.axiom_full(target, Scheme::Thm, None, Some(sub))
            }
            RuleName::DBoxGl | RuleName::DBoxS => {
                let w = Witness {
                    gamma: c.left.iter().map(|g| g.unbox().unwrap().clone()).collect(),
                    delta: c.right.iter().map(|g| g.unbox().unwrap().clone()).collect(),
                };
                let sub = if n.rule == RuleName::DBoxGl {
                    let q = self.convert(&n.premises[0]);
                    let mut gb = Builder::new(SystemId::Glh);
                    let end = gb.splice(&q);
                    let side = gb.taut_from(&[end], w.side_formula());
                    gb.finish_at(side)
                } else {
                    self.convert(&n.premises[0])
                };
                let scheme = if n.rule == RuleName::DBoxGl { Scheme::Dh2 } else { Scheme::Dh3 };
                debug_assert_eq!(w.formula(), target);
                b.axiom_full(target, scheme, Some(w), Some(sub))
            }
        };
        lines.insert(Arc::as_ptr(n), i);
        i
    }
}

fn self_check(p: HilbertProof) -> HilbertProof {
    let r = check_hilbert_proof(&p, p.system, CheckOptions { require_subproofs: true });
    assert!(r.valid, "generated {} proof fails at {:?}", p.system, r.first_error);
    p
}

/// A Hilbert proof of `⋀Γ -> ⋁Δ` for the end-sequent `Γ ⇒ Δ` of `p`, in the
/// system matching the calculus and sequent kind (GLH, SH, DH2 or DH3).
/// Side conditions carry explicit subproofs.
pub fn seq_proof_to_hilbert(p: &Arc<ProofTree>, calculus: Calculus) -> Result<HilbertProof, HilbertError> {
    let r = check_proof(p, calculus, CutPolicy::Unrestricted);
    if !r.valid {
        let e = r.errors.first().map(|(s, e)| format!("{s}: {e}")).unwrap_or_default();
        return Err(HilbertError::InvalidInputProof(e));
    }
    let mut c = Converter {
        calc: calculus,
        memo: HashMap::new(),
    };
    Ok(self_check(c.convert(p)))
}

/// Proves a GL theorem in GLH via the GLseq prover.
pub fn glh_proof_of(f: &Formula) -> Option<HilbertProof> {
    let tree = prove_gl(&Sequent::new(SeqKind::Gl, [], [f.clone()])).ok()?;
    let q = seq_proof_to_hilbert(&tree, Calculus::GlSeq).ok()?;
    let mut b = Builder::new(SystemId::Glh);
    let end = b.splice(&q);
    let i = b.taut_from(&[end], f.clone());
    Some(b.finish_at(i))
}

fn thm_line(b: &mut Builder, f: Formula) -> usize {
    let sub = glh_proof_of(&f).unwrap_or_else(|| panic!("{f} is not a GL theorem"));
    b.axiom_full(f, Scheme::Thm, None, Some(sub))
}

/// A DH proof of `box ⋁□Δ -> ⋁□Δ` (disjunction right-nested over `delta`).
pub fn derive_collapse_lemma(delta: &[Formula]) -> Result<HilbertProof, HilbertError> {
    if delta.is_empty() {
        return Err(HilbertError::EmptyDelta);
    }
    let mut b = Builder::new(SystemId::DH);
    let end = collapse(&mut b, delta);
    Ok(self_check(b.finish_at(end)))
}

fn d_axiom(a: &Formula, c: &Formula) -> Formula {
    let body = Formula::or(Formula::boxed(a.clone()), Formula::boxed(c.clone()));
    Formula::imp(Formula::boxed(body.clone()), body)
}

fn collapse(b: &mut Builder, delta: &[Formula]) -> usize {
    let x = Formula::disj(delta.iter().cloned().map(Formula::boxed).collect::<Vec<_>>());
    let goal = Formula::imp(Formula::boxed(x.clone()), x.clone());
    match delta {
        [d] => {
            let bd = Formula::boxed(d.clone());
            let dd = Formula::or(bd.clone(), bd.clone());
            let mono = thm_line(b, Formula::imp(Formula::boxed(bd.clone()), Formula::boxed(dd)));
            let ax = b.axiom(d_axiom(d, d), Scheme::D);
            b.taut_from(&[mono, ax], goal)
        }
        [d1, d2] => b.axiom(d_axiom(d1, d2), Scheme::D),
        [d1, rest @ ..] => {
            let inner = collapse(b, rest);
            let xr = Formula::disj(rest.iter().cloned().map(Formula::boxed).collect::<Vec<_>>());
            let bd1 = Formula::boxed(d1.clone());
            let mono = thm_line(
                b,
                Formula::imp(
                    Formula::boxed(Formula::or(bd1.clone(), xr.clone())),
                    Formula::boxed(Formula::or(bd1, Formula::boxed(xr.clone()))),
                ),
            );
            let ax = b.axiom(d_axiom(d1, &xr), Scheme::D);
            b.taut_from(&[mono, ax, inner], goal)
        }
        [] => unreachable!(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    D2ToD,
    DToD2,
}

/// Translates a DH2 proof into DH or back, keeping the final formula.
pub fn translate_hilbert_d2_d(p: &HilbertProof, dir: Direction) -> Result<HilbertProof, HilbertError> {
    let (src, dst) = match dir {
        Direction::D2ToD => (SystemId::DH2, SystemId::DH),
        Direction::DToD2 => (SystemId::DH, SystemId::DH2),
    };
    let r = check_hilbert_proof(p, src, CheckOptions::default());
    if p.system != src || !r.valid {
        return Err(HilbertError::InvalidInputProof(format!(
            "expected a valid {src} proof ({:?})",
            r.first_error
        )));
    }
    let mut b = Builder::new(dst);
    let mut map = Vec::with_capacity(p.lines.len());
    for line in &p.lines {
        let f = &line.formula;
        let i = match &line.just {
            Justification::Mp { from, imp } => {
                let (from, imp) = (map[*from], map[*imp]);
                b.mp(imp, from)
            }
            Justification::Nec { .. } => unreachable!("no necessitation outside GLH"),
            Justification::Axiom { scheme: Scheme::Taut, .. } => b.axiom(f.clone(), Scheme::Taut),
            Justification::Axiom { scheme, witness, .. } => match dir {
                Direction::D2ToD => expand_dh2_axiom(&mut b, f, witness.as_ref().expect("checked witness")),
                Direction::DToD2 => {
                    let q = dh2_proof_of(f, *scheme).ok_or_else(|| {
                        HilbertError::InvalidInputProof(format!("no DH2 proof found for {f}"))
                    })?;
                    let end = b.splice(&q);
                    b.taut_from(&[end], f.clone())
                }
            },
        };
        map.push(i);
    }
    let last = *map.last().unwrap();
    Ok(self_check(b.finish_at(last)))
}

/// `⋀□Γ -> ⋁□Δ` in DH: the GL theorem `⋀□Γ -> box ⋁□Δ`, then the collapse
/// lemma (or `~box bot` when Δ is empty).
fn expand_dh2_axiom(b: &mut Builder, f: &Formula, w: &Witness) -> usize {
    let x = Formula::disj(w.delta.iter().cloned().map(Formula::boxed).collect::<Vec<_>>());
    let up_f = Formula::imp(
        Formula::conj(w.gamma.iter().cloned().map(Formula::boxed).collect::<Vec<_>>()),
        Formula::boxed(x.clone()),
    );
    let up = thm_line(b, up_f);
    let down = if w.delta.is_empty() {
        b.axiom(Formula::not(Formula::boxed(Formula::Bottom)), Scheme::NonBot)
    } else {
        let q = derive_collapse_lemma(&w.delta).expect("non-empty delta");
        b.splice(&q)
    };
    b.taut_from(&[up, down], f.clone())
}

/// A DH2 proof of a DH axiom, through the D-calculi: GL theorems are
/// embedded from GLseq, the D axioms are proved in Dseq2 directly.
fn dh2_proof_of(f: &Formula, scheme: Scheme) -> Option<HilbertProof> {
    let tree = match scheme {
        Scheme::NonBot | Scheme::D => {
            let s = Sequent::new(SeqKind::D, [], [f.clone()]);
            match prove(&s, Calculus::DSeq2, CutPolicy::NoneAllowed).ok()? {
                Verdict::Provable(t) => t,
                _ => match prove(&s, Calculus::DSeq2, CutPolicy::SemiAnalytic).ok()? {
                    Verdict::Provable(t) => t,
                    _ => return None,
                },
            }
        }
        _ => {
            let g = prove_gl(&Sequent::new(SeqKind::Gl, [], [f.clone()])).ok()?;
            embed_gl_into_d(&g, Calculus::DSeq2).ok()?
        }
    };
    seq_proof_to_hilbert(&tree, Calculus::DSeq2).ok()
}

// JSON.

fn formula_list(v: Option<&Value>, key: &str) -> Result<Vec<Formula>, HilbertError> {
    match v {
        None => Ok(vec![]),
        Some(Value::Array(xs)) => xs
            .iter()
            .map(|x| {
                let s = x.as_str().ok_or_else(|| HilbertError::Malformed(format!("{key} entries must be strings")))?;
                parse_formula(s).map_err(|e| HilbertError::Malformed(format!("{key}: {e}")))
            })
            .collect(),
        Some(_) => Err(HilbertError::Malformed(format!("{key} must be a list"))),
    }
}

fn index(obj: &Map<String, Value>, key: &str, line: usize) -> Result<usize, HilbertError> {
    let v = obj
        .get(key)
        .and_then(Value::as_u64)
        .ok_or_else(|| HilbertError::Malformed(format!("line {line}: {key} must be a line number")))?;
    let v = v as usize;
    if v >= line {
        return Err(HilbertError::Malformed(format!("line {line}: {key} must cite an earlier line")));
    }
    Ok(v)
}

pub fn hilbert_from_json(v: &Value) -> Result<HilbertProof, HilbertError> {
    let m = |s: &str| HilbertError::Malformed(s.to_string());
    let obj = v.as_object().ok_or_else(|| m("proof must be an object"))?;
    let system: SystemId = obj
        .get("system")
        .and_then(Value::as_str)
        .ok_or_else(|| m("missing system"))?
        .parse()
        .map_err(|e: String| HilbertError::Malformed(e))?;
    let raw = obj.get("lines").and_then(Value::as_array).ok_or_else(|| m("missing lines"))?;
    let mut lines: Vec<Line> = Vec::with_capacity(raw.len());
    for (i, l) in raw.iter().enumerate() {
        let o = l.as_object().ok_or_else(|| m("lines must be objects"))?;
        let given = match o.get("formula") {
            None => None,
            Some(Value::String(s)) => Some(parse_formula(s).map_err(|e| HilbertError::Malformed(format!("line {i}: {e}")))?),
            Some(_) => return Err(m("formula must be a string")),
        };
        let just = o.get("just").and_then(Value::as_str).ok_or_else(|| m("missing just"))?;
        let (formula, just) = match just {
            "axiom" => {
                let scheme: Scheme = o
                    .get("scheme")
                    .and_then(Value::as_str)
                    .ok_or_else(|| m("axiom lines need a scheme"))?
                    .parse()
                    .map_err(HilbertError::Malformed)?;
                let witness = if o.contains_key("gamma") || o.contains_key("delta") {
                    Some(Witness {
                        gamma: formula_list(o.get("gamma"), "gamma")?,
                        delta: formula_list(o.get("delta"), "delta")?,
                    })
                } else {
                    None
                };
                let sub = o.get("sub").map(hilbert_from_json).transpose()?.map(Box::new);
                let f = given.clone().ok_or_else(|| HilbertError::Malformed(format!("line {i}: axiom lines need a formula")))?;
                (f, Justification::Axiom { scheme, witness, sub })
            }
            "mp" => {
                let from = index(o, "from", i)?;
                let imp = index(o, "imp", i)?;
                let f = match (&lines[imp].formula, &given) {
                    (_, Some(g)) => g.clone(),
                    (Formula::Implies(a, b), None) if **a == lines[from].formula => (**b).clone(),
                    _ => return Err(HilbertError::Malformed(format!("line {i}: modus ponens does not apply"))),
                };
                (f, Justification::Mp { from, imp })
            }
            "nec" => {
                let from = index(o, "from", i)?;
                let f = given.clone().unwrap_or_else(|| Formula::boxed(lines[from].formula.clone()));
                (f, Justification::Nec { from })
            }
            other => return Err(HilbertError::Malformed(format!("line {i}: unknown justification {other:?}"))),
        };
        lines.push(Line { formula, just });
    }
    Ok(HilbertProof { system, lines })
}

pub fn hilbert_from_str(text: &str) -> Result<HilbertProof, HilbertError> {
    let v: Value = serde_json::from_str(text).map_err(|e| HilbertError::Malformed(e.to_string()))?;
    hilbert_from_json(&v)
}

pub fn hilbert_to_json(p: &HilbertProof) -> Value {
    let strs = |fs: &[Formula]| fs.iter().map(|f| Value::String(f.to_core_string())).collect::<Vec<_>>();
    let lines: Vec<Value> = p
        .lines
        .iter()
        .map(|l| {
            let formula = l.formula.to_core_string();
            match &l.just {
                Justification::Axiom { scheme, witness, sub } => {
                    let mut o = json!({"formula": formula, "just": "axiom", "scheme": scheme.name()});
                    if let Some(w) = witness {
                        o["gamma"] = Value::Array(strs(&w.gamma));
                        o["delta"] = Value::Array(strs(&w.delta));
                    }
                    if let Some(s) = sub {
                        o["sub"] = hilbert_to_json(s);
                    }
                    o
                }
                Justification::Mp { from, imp } => json!({"formula": formula, "just": "mp", "from": from, "imp": imp}),
                Justification::Nec { from } => json!({"formula": formula, "just": "nec", "from": from}),
            }
        })
        .collect();
    json!({"system": p.system.name(), "lines": lines})
}

pub fn hilbert_to_string(p: &HilbertProof) -> String {
    serde_json::to_string_pretty(&hilbert_to_json(p)).unwrap()
}

/// Sets as sorted lists for witnesses.
pub fn witness_of(gamma: &FormulaSet, delta: &FormulaSet) -> Witness {
    Witness {
        gamma: gamma.iter().cloned().collect(),
        delta: delta.iter().cloned().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculi::fixtures;
    use crate::formula::{f, seq};
    use proptest::prelude::*;

    fn ax(formula: &str, scheme: Scheme) -> Line {
        Line {
            formula: f(formula),
            just: Justification::Axiom {
                scheme,
                witness: None,
                sub: None,
            },
        }
    }

    fn strict() -> CheckOptions {
        CheckOptions { require_subproofs: true }
    }

    #[test]
    fn recognizers() {
        let dax = f("box(box p | box q) -> box p | box q");
        assert_eq!(recognize_axiom(&dax, SystemId::DH, None).unwrap(), Some(Scheme::D));
        assert_eq!(recognize_axiom(&f("box p -> p"), SystemId::SH, None).unwrap(), Some(Scheme::Refl));
        assert_eq!(recognize_axiom(&f("box p -> p"), SystemId::DH, None).unwrap(), None);
        let w = Witness {
            gamma: vec![f("box p")],
            delta: vec![f("p")],
        };
        assert_eq!(
            recognize_axiom(&f("box box p -> box p"), SystemId::DH2, Some(&w)).unwrap(),
            Some(Scheme::Dh2)
        );
        assert!(matches!(
            recognize_axiom(&f("box p -> box p"), SystemId::DH2, Some(&w)),
            Err(HilbertError::MalformedWitness(_))
        ));
        assert_eq!(recognize_axiom(&f("box(p -> q) -> box p -> box q"), SystemId::Glh, None).unwrap(), Some(Scheme::K));
        assert_eq!(recognize_axiom(&f("box(box p -> p) -> box p"), SystemId::Glh, None).unwrap(), Some(Scheme::Lob));
    }

    #[test]
    fn checker_examples() {
        let p = HilbertProof {
            system: SystemId::DH,
            lines: vec![
                ax("~box bot", Scheme::NonBot),
                ax("~box bot -> (p -> ~box bot)", Scheme::Taut),
                Line {
                    formula: f("p -> ~box bot"),
                    just: Justification::Mp { from: 0, imp: 1 },
                },
            ],
        };
        let r = check_hilbert_proof(&p, SystemId::DH, CheckOptions::default());
        assert!(r.valid, "{:?}", r.first_error);
        assert_eq!(r.conclusion, Some(f("p -> ~box bot")));

        for scheme in [Scheme::Thm, Scheme::NonBot, Scheme::D, Scheme::Taut] {
            let p = HilbertProof {
                system: SystemId::DH,
                lines: vec![ax("box ~box bot", scheme)],
            };
            assert!(!check_hilbert_proof(&p, SystemId::DH, CheckOptions::default()).valid);
        }
        let lob = HilbertProof {
            system: SystemId::Glh,
            lines: vec![ax("box(box p -> p) -> box p", Scheme::Lob)],
        };
        assert!(check_hilbert_proof(&lob, SystemId::Glh, strict()).valid);
        // thm needs a subproof in strict mode
        let t = HilbertProof {
            system: SystemId::DH,
            lines: vec![ax("box p -> box box p", Scheme::Thm)],
        };
        assert!(check_hilbert_proof(&t, SystemId::DH, CheckOptions::default()).valid);
        assert!(!check_hilbert_proof(&t, SystemId::DH, strict()).valid);
    }

    #[test]
    fn taut_matches_truth_tables() {
        for (s, want) in [
            ("p -> p", true),
            ("box p -> box p", true),
            ("box p -> p", false),
            ("((p -> q) -> p) -> p", true),
            ("p | ~p", true),
            ("p & q -> q & p", true),
            ("box(p & q) -> box(q & p)", false),
        ] {
            assert_eq!(is_tautology(&f(s)), want, "{s}");
        }
    }

    #[test]
    fn sequent_proofs_to_hilbert() {
        let h = seq_proof_to_hilbert(&fixtures::example_d2_axiom(), Calculus::DSeq2).unwrap();
        assert_eq!(h.system, SystemId::DH2);
        assert!(check_hilbert_proof(&h, SystemId::DH2, strict()).valid);
        let h = seq_proof_to_hilbert(&fixtures::example_d2_consistency(), Calculus::DSeq2).unwrap();
        assert_eq!(h.conclusion(), Some(&f("top -> ~box bot")));
        let init = prove_gl(&seq("p => p")).unwrap();
        let h = seq_proof_to_hilbert(&init, Calculus::GlSeq).unwrap();
        assert_eq!(h.system, SystemId::Glh);
        assert_eq!(h.conclusion(), Some(&f("p -> p")));
        let lob = seq_proof_to_hilbert(&fixtures::lob_gl(), Calculus::GlSeq).unwrap();
        assert!(lob.lines.iter().any(|l| matches!(l.just, Justification::Nec { .. })));
        let d3 = seq_proof_to_hilbert(&fixtures::example_d3_axiom(), Calculus::DSeq3).unwrap();
        assert!(check_hilbert_proof(&d3, SystemId::DH3, strict()).valid);
    }

    #[test]
    fn collapse_lemma() {
        assert_eq!(derive_collapse_lemma(&[]), Err(HilbertError::EmptyDelta));
        let one = derive_collapse_lemma(&[f("p")]).unwrap();
        assert_eq!(one.conclusion(), Some(&f("box box p -> box p")));
        let two = derive_collapse_lemma(&[f("p"), f("q")]).unwrap();
        assert!(two
            .lines
            .iter()
            .all(|l| matches!(l.just, Justification::Axiom { scheme: Scheme::D | Scheme::Taut, .. } | Justification::Mp { .. })));
        let three = derive_collapse_lemma(&[f("p"), f("q"), f("r")]).unwrap();
        assert_eq!(
            three.conclusion().unwrap().to_string(),
            "box(box p | (box q | box r)) -> box p | (box q | box r)"
        );
        let four = derive_collapse_lemma(&[f("p"), f("q"), f("r"), f("s")]).unwrap();
        assert!(check_hilbert_proof(&four, SystemId::DH, strict()).valid);
    }

    #[test]
    fn dh2_dh_translation() {
        let w = Witness {
            gamma: vec![f("box p")],
            delta: vec![f("p")],
        };
        let dh2 = HilbertProof {
            system: SystemId::DH2,
            lines: vec![Line {
                formula: w.formula(),
                just: Justification::Axiom {
                    scheme: Scheme::Dh2,
                    witness: Some(w),
                    sub: None,
                },
            }],
        };
        let dh = translate_hilbert_d2_d(&dh2, Direction::D2ToD).unwrap();
        assert_eq!(dh.conclusion(), Some(&f("box box p -> box p")));
        let back = translate_hilbert_d2_d(&dh, Direction::DToD2).unwrap();
        assert_eq!(back.conclusion(), dh.conclusion());

        let nb = HilbertProof {
            system: SystemId::DH,
            lines: vec![ax("~box bot", Scheme::NonBot)],
        };
        let d2 = translate_hilbert_d2_d(&nb, Direction::DToD2).unwrap();
        assert_eq!(d2.conclusion(), Some(&f("~box bot")));
        let again = translate_hilbert_d2_d(&d2, Direction::D2ToD).unwrap();
        assert_eq!(again.conclusion(), Some(&f("~box bot")));

        for dir in [Direction::D2ToD, Direction::DToD2] {
            let sys = if dir == Direction::D2ToD { SystemId::DH2 } else { SystemId::DH };
            let t = HilbertProof {
                system: sys,
                lines: vec![ax("p -> p", Scheme::Taut)],
            };
            assert_eq!(translate_hilbert_d2_d(&t, dir).unwrap().lines, t.lines);
        }
    }

    #[test]
    fn json_round_trip() {
        let h = seq_proof_to_hilbert(&fixtures::example_d2_consistency(), Calculus::DSeq2).unwrap();
        let back = hilbert_from_str(&hilbert_to_string(&h)).unwrap();
        assert_eq!(back, h);
        let text = r#"{"system":"dh","lines":[
            {"formula":"~box bot","just":"axiom","scheme":"nonbot"},
            {"formula":"~box bot -> (p -> ~box bot)","just":"axiom","scheme":"taut"},
            {"just":"mp","from":0,"imp":1}]}"#;
        let p = hilbert_from_str(text).unwrap();
        assert_eq!(p.conclusion(), Some(&f("p -> ~box bot")));
        assert!(hilbert_from_str(r#"{"system":"dh","lines":[{"just":"mp","from":0,"imp":0}]}"#).is_err());
    }

    #[test]
    fn gllin_systems() {
        let lin = f("box(box p -> q) | box(q & box q -> p)");
        let w = Witness {
            gamma: vec![],
            delta: vec![f("box p -> q"), f("q & box q -> p")],
        };
        assert_eq!(w.formula(), Formula::imp(Formula::top(), lin));
        let sys = SystemId::D2(Oracle::GlLin);
        assert_eq!(recognize_axiom(&w.formula(), sys, Some(&w)).unwrap(), Some(Scheme::Dh2));
        assert_eq!(recognize_axiom(&w.formula(), SystemId::DH2, Some(&w)).unwrap(), None);
        let w3 = Witness {
            gamma: vec![f("p")],
            delta: vec![f("p")],
        };
        assert_eq!(recognize_axiom(&w3.formula(), SystemId::D3(Oracle::GlLin), Some(&w3)).unwrap(), Some(Scheme::Dh3));
    }

    fn arb_formula() -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof![Just(Formula::Bottom), Just(Formula::var("p")), Just(Formula::var("q"))];
        leaf.prop_recursive(3, 10, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::imp(a, b)),
                inner.prop_map(Formula::boxed),
            ]
        })
    }

    /// Truth-table oracle over the maximal non-implication subformulas.
    fn truth_table(g: &Formula) -> bool {
        fn atoms(g: &Formula, out: &mut Vec<Formula>) {
            match g {
                Formula::Implies(a, b) => {
                    atoms(a, out);
                    atoms(b, out);
                }
                Formula::Bottom => {}
                _ => {
                    if !out.contains(g) {
                        out.push(g.clone())
                    }
                }
            }
        }
        fn ev(g: &Formula, atoms: &[Formula], mask: u32) -> bool {
            match g {
                Formula::Implies(a, b) => !ev(a, atoms, mask) || ev(b, atoms, mask),
                Formula::Bottom => false,
                _ => mask >> atoms.iter().position(|x| x == g).unwrap() & 1 == 1,
            }
        }
        let mut at = vec![];
        atoms(g, &mut at);
        (0..1u32 << at.len()).all(|m| ev(g, &at, m))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn taut_agrees_with_truth_tables(g in arb_formula()) {
            prop_assert_eq!(is_tautology(&g), truth_table(&g));
        }

        #[test]
        fn dh_proofs_exist_iff_dseq3(g in arb_formula()) {
            let s = Sequent::new(SeqKind::D, [], [g.clone()]);
            let d3 = prove(&s, Calculus::DSeq3, CutPolicy::NoneAllowed).unwrap();
            if let Verdict::Provable(t) = d3 {
                let h = seq_proof_to_hilbert(&t, Calculus::DSeq3).unwrap();
                prop_assert_eq!(h.conclusion(), Some(&s.to_formula()));
                let t2 = match prove(&s, Calculus::DSeq2, CutPolicy::SemiAnalytic).unwrap() {
                    Verdict::Provable(t2) => t2,
                    v => panic!("{v:?}"),
                };
                let h2 = seq_proof_to_hilbert(&t2, Calculus::DSeq2).unwrap();
                let dh = translate_hilbert_d2_d(&h2, Direction::D2ToD).unwrap();
                prop_assert_eq!(dh.conclusion(), Some(&s.to_formula()));
            }
        }
    }
}
