//! Backward proof search for the four calculi.
//!
//! Every level first saturates propositionally with the invertible `->L` and
//! `->R` steps, keeping principal formulas in the premises so that each
//! sequent on a branch extends the one below it. Saturated sequents are then
//! handled per level:
//!
//! * GL: try `glbox` on each boxed right formula.
//! * S: unbox left boxes (`boxl_s`), then `lift_s` to the GL level.
//! * D, Dseq2: `dbox_gl` to `Ψ*, □Ψ* => □Φ*`. With semi-analytic cuts every
//!   boxed subformula of the end-sequent is first placed on one side by an
//!   analytic cut.
//! * D, Dseq3: `dbox_s` to `□Ψ* =s> □Φ*`.
//!
//! Search stays inside the subformula closure and each `glbox` step strictly
//! grows the set of boxed left formulas, so there are no cycles and outcomes
//! (proofs and failures alike) can be memoized for the whole query.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::calculi::{weaken, Annotation, Calculus, CutPolicy, ProofTree, RuleName};
use crate::formula::{Formula, FormulaSet, SeqKind, Sequent};
use crate::kripke::{
    build_tail_limit, eval_index, eval_tail_limit_all, validate_model, KripkeModel,
    TailLimitModel, Valuation,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProverError {
    #[error("cut policy {policy:?} is not supported for {calculus}")]
    PolicyUnsupported { calculus: Calculus, policy: CutPolicy },
    #[error("{calculus} has no {kind} sequents")]
    KindMismatch { calculus: Calculus, kind: SeqKind },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertError {
    #[error("expected a {expected} certificate")]
    WrongCertificateKind { expected: &'static str },
}

/// An unprovable saturated GL-sequent and the failed `glbox` premises,
/// keyed by the boxed right formula they were generated from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlCertificate {
    pub sequent: Sequent,
    pub children: Vec<(Formula, Arc<GlCertificate>)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SCertificate {
    pub saturation: Sequent,
    pub gl: Arc<GlCertificate>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct D2Certificate {
    pub saturation: Sequent,
    pub psi_star: FormulaSet,
    pub phi_star: FormulaSet,
    pub gl: Arc<GlCertificate>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct D3Certificate {
    pub saturation: Sequent,
    pub psi_star: FormulaSet,
    pub phi_star: FormulaSet,
    pub s: Arc<SCertificate>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FailureCertificate {
    Gl(Arc<GlCertificate>),
    S(Arc<SCertificate>),
    D2(Arc<D2Certificate>),
    D3(Arc<D3Certificate>),
}

impl FailureCertificate {
    pub fn kind_name(&self) -> &'static str {
        match self {
            FailureCertificate::Gl(_) => "GL",
            FailureCertificate::S(_) => "S",
            FailureCertificate::D2(_) => "D2",
            FailureCertificate::D3(_) => "D3",
        }
    }

    /// Every sequent recorded in the certificate.
    pub fn sequents(&self) -> Vec<Sequent> {
        let mut out = Vec::new();
        let gl = match self {
            FailureCertificate::Gl(g) => g,
            FailureCertificate::S(s) => {
                out.push(s.saturation.clone());
                &s.gl
            }
            FailureCertificate::D2(d) => {
                out.push(d.saturation.clone());
                &d.gl
            }
            FailureCertificate::D3(d) => {
                out.push(d.saturation.clone());
                out.push(d.s.saturation.clone());
                &d.s.gl
            }
        };
        out.extend(gl_nodes(gl).into_iter().map(|g| g.sequent.clone()));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Provable(Arc<ProofTree>),
    Unprovable(Option<FailureCertificate>),
}

impl Verdict {
    pub fn is_provable(&self) -> bool {
        matches!(self, Verdict::Provable(_))
    }

    pub fn proof(&self) -> Option<&Arc<ProofTree>> {
        match self {
            Verdict::Provable(p) => Some(p),
            _ => None,
        }
    }

    pub fn certificate(&self) -> Option<&FailureCertificate> {
        match self {
            Verdict::Unprovable(c) => c.as_ref(),
            _ => None,
        }
    }
}

/// One propositional step on a sequent.
enum Step {
    Closed(Arc<ProofTree>),
    ImpR(Formula, Formula, Formula),
    BoxL(Formula, Formula),
    ImpL(Formula, Formula, Formula),
    Saturated,
}

fn ann(f: &Formula) -> Annotation {
    Annotation::formula(f.clone())
}

fn close(s: &Sequent) -> Option<Arc<ProofTree>> {
    if s.left.contains(&Formula::Bottom) {
        let leaf = ProofTree::leaf(
            RuleName::InitBot,
            Sequent::new(s.kind, [Formula::Bottom], []),
            Annotation::default(),
        );
        return Some(weaken(leaf, s));
    }
    let common = s.left.intersection(&s.right).min_by_key(|g| g.size())?;
    let leaf = ProofTree::leaf(
        RuleName::Init,
        Sequent::new(s.kind, [common.clone()], [common.clone()]),
        ann(common),
    );
    Some(weaken(leaf, s))
}

fn step(s: &Sequent, boxleft: bool) -> Step {
    if let Some(p) = close(s) {
        return Step::Closed(p);
    }
    for g in &s.right {
        if let Formula::Implies(a, b) = g {
            if !s.left.contains(a) || !s.right.contains(b) {
                return Step::ImpR(g.clone(), (**a).clone(), (**b).clone());
            }
        }
    }
    if boxleft {
        for g in &s.left {
            if let Formula::Box(a) = g {
                if !s.left.contains(a) {
                    return Step::BoxL(g.clone(), (**a).clone());
                }
            }
        }
    }
    for g in &s.left {
        if let Formula::Implies(a, b) = g {
            if !s.right.contains(a) && !s.left.contains(b) {
                return Step::ImpL(g.clone(), (**a).clone(), (**b).clone());
            }
        }
    }
    Step::Saturated
}

fn boxed_bodies(set: &FormulaSet) -> FormulaSet {
    set.iter().filter_map(|g| g.unbox().cloned()).collect()
}

fn boxes(set: &FormulaSet) -> FormulaSet {
    set.iter().map(|g| Formula::boxed(g.clone())).collect()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum DMode {
    CutFree2,
    Semi,
    CutFree3,
}

type GlOutcome = Result<Arc<ProofTree>, Arc<GlCertificate>>;
type SOutcome = Result<Arc<ProofTree>, Arc<SCertificate>>;
type DOutcome = Result<Arc<ProofTree>, Option<FailureCertificate>>;

/// Memo tables for one query.
#[derive(Default)]
pub struct Search {
    gl: HashMap<Sequent, GlOutcome>,
    s: HashMap<Sequent, SOutcome>,
    d: HashMap<Sequent, DOutcome>,
    universe: FormulaSet,
    explored: usize,
}

impl Search {
    pub fn new() -> Search {
        Search::default()
    }

    /// Number of distinct sequents expanded so far.
    pub fn explored(&self) -> usize {
        self.explored
    }

    pub fn gl(&mut self, s: &Sequent) -> GlOutcome {
        debug_assert_eq!(s.kind, SeqKind::Gl);
        if let Some(r) = self.gl.get(s) {
            return r.clone();
        }
        self.explored += 1;
        let r = match step(s, false) {
            Step::Closed(p) => Ok(p),
            Step::ImpR(g, a, b) => self
                .gl(&s.add_left(a).add_right(b))
                .map(|q| ProofTree::node(RuleName::ImpR, s.clone(), vec![q], ann(&g))),
            Step::ImpL(g, a, b) => self.gl(&s.add_right(a)).and_then(|q1| {
                self.gl(&s.add_left(b))
                    .map(|q2| ProofTree::node(RuleName::ImpL, s.clone(), vec![q1, q2], ann(&g)))
            }),
            Step::BoxL(..) => unreachable!("no box-left steps at the GL level"),
            Step::Saturated => self.gl_modal(s),
        };
        self.gl.insert(s.clone(), r.clone());
        r
    }

    fn gl_modal(&mut self, s: &Sequent) -> GlOutcome {
        let boxed_left: FormulaSet = s.left.iter().filter(|g| g.is_box()).cloned().collect();
        let gamma = boxed_bodies(&boxed_left);
        let mut children = Vec::new();
        for g in s.right.iter().filter(|g| g.is_box()) {
            let phi = g.unbox().unwrap().clone();
            let mut left: FormulaSet = gamma.union(&boxed_left).cloned().collect();
            left.insert(g.clone());
            let premise = Sequent::new(SeqKind::Gl, left, [phi]);
            match self.gl(&premise) {
                Ok(q) => {
                    let concl = Sequent::new(SeqKind::Gl, boxed_left.clone(), [g.clone()]);
                    let node = ProofTree::node(
                        RuleName::GlBox,
                        concl,
                        vec![q],
                        Annotation {
                            formula: Some(g.clone()),
                            gamma: Some(gamma.clone()),
                            delta: None,
                        },
                    );
                    return Ok(weaken(node, s));
                }
                Err(c) => children.push((g.clone(), c)),
            }
        }
        Err(Arc::new(GlCertificate {
            sequent: s.clone(),
            children,
        }))
    }

    pub fn s_level(&mut self, s: &Sequent) -> SOutcome {
        debug_assert_eq!(s.kind, SeqKind::S);
        if let Some(r) = self.s.get(s) {
            return r.clone();
        }
        self.explored += 1;
        let r = match step(s, true) {
            Step::Closed(p) => Ok(p),
            Step::ImpR(g, a, b) => self
                .s_level(&s.add_left(a).add_right(b))
                .map(|q| ProofTree::node(RuleName::ImpR, s.clone(), vec![q], ann(&g))),
            Step::BoxL(g, a) => self
                .s_level(&s.add_left(a))
                .map(|q| ProofTree::node(RuleName::BoxLS, s.clone(), vec![q], ann(&g))),
            Step::ImpL(g, a, b) => self.s_level(&s.add_right(a)).and_then(|q1| {
                self.s_level(&s.add_left(b))
                    .map(|q2| ProofTree::node(RuleName::ImpL, s.clone(), vec![q1, q2], ann(&g)))
            }),
            Step::Saturated => match self.gl(&s.with_kind(SeqKind::Gl)) {
                Ok(q) => Ok(ProofTree::node(RuleName::LiftS, s.clone(), vec![q], Annotation::default())),
                Err(c) => Err(Arc::new(SCertificate {
                    saturation: s.clone(),
                    gl: c,
                })),
            },
        };
        self.s.insert(s.clone(), r.clone());
        r
    }

    fn d_level(&mut self, s: &Sequent, mode: DMode) -> DOutcome {
        debug_assert_eq!(s.kind, SeqKind::D);
        if let Some(r) = self.d.get(s) {
            return r.clone();
        }
        self.explored += 1;
        let r = match step(s, false) {
            Step::Closed(p) => Ok(p),
            Step::ImpR(g, a, b) => self
                .d_level(&s.add_left(a).add_right(b), mode)
                .map(|q| ProofTree::node(RuleName::ImpR, s.clone(), vec![q], ann(&g))),
            Step::ImpL(g, a, b) => self.d_level(&s.add_right(a), mode).and_then(|q1| {
                self.d_level(&s.add_left(b), mode)
                    .map(|q2| ProofTree::node(RuleName::ImpL, s.clone(), vec![q1, q2], ann(&g)))
            }),
            Step::BoxL(..) => unreachable!("no box-left steps at the D level"),
            Step::Saturated => {
                let unplaced = if mode == DMode::Semi {
                    self.universe
                        .iter()
                        .find(|b| !s.left.contains(*b) && !s.right.contains(*b))
                        .cloned()
                } else {
                    None
                };
                match unplaced {
                    Some(b) => self.d_level(&s.add_right(b.clone()), mode).and_then(|q1| {
                        self.d_level(&s.add_left(b.clone()), mode)
                            .map(|q2| ProofTree::node(RuleName::Cut, s.clone(), vec![q1, q2], ann(&b)))
                    }),
                    None => self.d_modal(s, mode),
                }
            }
        };
        self.d.insert(s.clone(), r.clone());
        r
    }

    fn d_modal(&mut self, s: &Sequent, mode: DMode) -> DOutcome {
        let psi = boxed_bodies(&s.left);
        let phi = boxed_bodies(&s.right);
        let concl = Sequent::new(SeqKind::D, boxes(&psi), boxes(&phi));
        let modal_ann = Annotation {
            formula: None,
            gamma: Some(psi.clone()),
            delta: Some(phi.clone()),
        };
        match mode {
            DMode::CutFree2 | DMode::Semi => {
                let premise = Sequent::new(
                    SeqKind::Gl,
                    psi.union(&boxes(&psi)).cloned(),
                    boxes(&phi),
                );
                match self.gl(&premise) {
                    Ok(q) => Ok(weaken(
                        ProofTree::node(RuleName::DBoxGl, concl, vec![q], modal_ann),
                        s,
                    )),
                    Err(_) if mode == DMode::CutFree2 => Err(None),
                    Err(c) => Err(Some(FailureCertificate::D2(Arc::new(D2Certificate {
                        saturation: s.clone(),
                        psi_star: psi,
                        phi_star: phi,
                        gl: c,
                    })))),
                }
            }
            DMode::CutFree3 => {
                let premise = Sequent::new(SeqKind::S, boxes(&psi), boxes(&phi));
                match self.s_level(&premise) {
                    Ok(q) => Ok(weaken(
                        ProofTree::node(RuleName::DBoxS, concl, vec![q], modal_ann),
                        s,
                    )),
                    Err(c) => Err(Some(FailureCertificate::D3(Arc::new(D3Certificate {
                        saturation: s.clone(),
                        psi_star: psi,
                        phi_star: phi,
                        s: c,
                    })))),
                }
            }
        }
    }
}

/// Decides `s` in `calculus`. `Unrestricted` is never searched; semi-analytic
/// search exists only for Dseq2.
pub fn prove(s: &Sequent, calculus: Calculus, policy: CutPolicy) -> Result<Verdict, ProverError> {
    if !calculus.has_kind(s.kind) {
        return Err(ProverError::KindMismatch {
            calculus,
            kind: s.kind,
        });
    }
    match policy {
        CutPolicy::Unrestricted => return Err(ProverError::PolicyUnsupported { calculus, policy }),
        CutPolicy::SemiAnalytic if calculus != Calculus::DSeq2 => {
            return Err(ProverError::PolicyUnsupported { calculus, policy })
        }
        _ => {}
    }
    let mut search = Search::new();
    Ok(match s.kind {
        SeqKind::Gl => match search.gl(s) {
            Ok(p) => Verdict::Provable(p),
            Err(c) => Verdict::Unprovable(Some(FailureCertificate::Gl(c))),
        },
        SeqKind::S => match search.s_level(s) {
            Ok(p) => Verdict::Provable(p),
            Err(c) => Verdict::Unprovable(Some(FailureCertificate::S(c))),
        },
        SeqKind::D => {
            let mode = match (calculus, policy) {
                (Calculus::DSeq2, CutPolicy::SemiAnalytic) => DMode::Semi,
                (Calculus::DSeq2, _) => DMode::CutFree2,
                _ => DMode::CutFree3,
            };
            search.universe = s.closure().boxed;
            match search.d_level(s, mode) {
                Ok(p) => Verdict::Provable(p),
                Err(c) => Verdict::Unprovable(c),
            }
        }
    })
}

/// Cut-free GLseq search on a GL-sequent.
pub fn prove_gl(s: &Sequent) -> GlOutcome {
    Search::new().gl(&s.with_kind(SeqKind::Gl))
}

pub fn gl_provable(s: &Sequent) -> bool {
    prove_gl(s).is_ok()
}

/// Cut-free Sseq search on an S-sequent.
pub fn prove_s(s: &Sequent) -> SOutcome {
    Search::new().s_level(&s.with_kind(SeqKind::S))
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SaturationMode {
    Imp,
    ImpBoxLeft,
    ImpAnalyticBox,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Saturation {
    /// Every branch closed; the fragment proves the input.
    Proof(Arc<ProofTree>),
    /// The open saturated branches, in order.
    Open(Vec<Sequent>),
}

/// Propositional saturation of `s`, exploring every branch. Box-left steps
/// apply to S-sequents and analytic placement to D-sequents only, matching
/// where the corresponding rules exist.
pub fn saturate(s: &Sequent, mode: SaturationMode) -> Saturation {
    let universe = s.closure().boxed;
    let mut memo = HashMap::new();
    match sat(s, mode, &universe, &mut memo) {
        Ok(p) => Saturation::Proof(p),
        Err(open) => {
            let set: BTreeSet<Sequent> = open.into_iter().collect();
            Saturation::Open(set.into_iter().collect())
        }
    }
}

type SatMemo = HashMap<Sequent, Result<Arc<ProofTree>, Vec<Sequent>>>;

fn sat(
    s: &Sequent,
    mode: SaturationMode,
    universe: &FormulaSet,
    memo: &mut SatMemo,
) -> Result<Arc<ProofTree>, Vec<Sequent>> {
    if let Some(r) = memo.get(s) {
        return r.clone();
    }
    let boxleft = mode == SaturationMode::ImpBoxLeft && s.kind == SeqKind::S;
    let both = |r1: Result<Arc<ProofTree>, Vec<Sequent>>,
                r2: Result<Arc<ProofTree>, Vec<Sequent>>,
                rule: RuleName,
                g: &Formula| match (r1, r2) {
        (Ok(q1), Ok(q2)) => Ok(ProofTree::node(rule, s.clone(), vec![q1, q2], ann(g))),
        (r1, r2) => {
            let mut open = r1.err().unwrap_or_default();
            open.extend(r2.err().unwrap_or_default());
            Err(open)
        }
    };
    let r = match step(s, boxleft) {
        Step::Closed(p) => Ok(p),
        Step::ImpR(g, a, b) => sat(&s.add_left(a).add_right(b), mode, universe, memo)
            .map(|q| ProofTree::node(RuleName::ImpR, s.clone(), vec![q], ann(&g))),
        Step::BoxL(g, a) => sat(&s.add_left(a), mode, universe, memo)
            .map(|q| ProofTree::node(RuleName::BoxLS, s.clone(), vec![q], ann(&g))),
        Step::ImpL(g, a, b) => {
            let r1 = sat(&s.add_right(a), mode, universe, memo);
            let r2 = sat(&s.add_left(b), mode, universe, memo);
            both(r1, r2, RuleName::ImpL, &g)
        }
        Step::Saturated => {
            let unplaced = (mode == SaturationMode::ImpAnalyticBox && s.kind == SeqKind::D)
                .then(|| {
                    universe
                        .iter()
                        .find(|b| !s.left.contains(*b) && !s.right.contains(*b))
                        .cloned()
                })
                .flatten();
            match unplaced {
                Some(b) => {
                    let r1 = sat(&s.add_right(b.clone()), mode, universe, memo);
                    let r2 = sat(&s.add_left(b.clone()), mode, universe, memo);
                    both(r1, r2, RuleName::Cut, &b)
                }
                None => Err(vec![s.clone()]),
            }
        }
    };
    memo.insert(s.clone(), r.clone());
    r
}

// Countermodels.

/// A countermodel: a plain model with a designated world, or a tail-limit
/// model evaluated at its limit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Countermodel {
    Plain { model: KripkeModel, world: String },
    Tail(TailLimitModel),
}

fn gl_nodes(root: &Arc<GlCertificate>) -> Vec<Arc<GlCertificate>> {
    let mut seen: BTreeMap<Sequent, usize> = BTreeMap::new();
    let mut order = Vec::new();
    let mut queue = VecDeque::from([root.clone()]);
    while let Some(c) = queue.pop_front() {
        if seen.contains_key(&c.sequent) {
            continue;
        }
        seen.insert(c.sequent.clone(), order.len());
        for (_, child) in &c.children {
            queue.push_back(child.clone());
        }
        order.push(c);
    }
    order
}

fn vars_of<'a>(seqs: impl IntoIterator<Item = &'a Sequent>) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for s in seqs {
        for g in s.formulas() {
            out.extend(g.vars().iter().map(|v| v.to_string()));
        }
    }
    out
}

fn valuation(vars: &BTreeSet<String>, left: &FormulaSet) -> Valuation {
    vars.iter()
        .map(|p| (p.clone(), left.contains(&Formula::var(p))))
        .collect()
}

/// Worlds are the distinct certificate sequents in breadth-first order
/// (`w0` is the root); the relation is the transitive closure of
/// parent-to-child; `p` holds at `w` iff `p` is on the left of `w`.
fn gl_model(root: &Arc<GlCertificate>, extra: &BTreeSet<String>) -> (KripkeModel, String) {
    let nodes = gl_nodes(root);
    let index: BTreeMap<&Sequent, usize> = nodes.iter().enumerate().map(|(i, c)| (&c.sequent, i)).collect();
    let name = |i: usize| format!("w{i}");
    let mut vars = vars_of(nodes.iter().map(|c| &c.sequent));
    vars.extend(extra.iter().cloned());
    let worlds: Vec<String> = (0..nodes.len()).map(name).collect();
    let mut rel = Vec::new();
    let mut val = BTreeMap::new();
    for (i, c) in nodes.iter().enumerate() {
        for (_, child) in &c.children {
            rel.push((name(i), name(index[&child.sequent])));
        }
        val.insert(name(i), valuation(&vars, &c.sequent.left));
    }
    let m = validate_model(worlds, rel, val).expect("certificate trees are acyclic");
    (m, name(0))
}

pub fn build_gl_countermodel(cert: &FailureCertificate) -> Result<(KripkeModel, String), CertError> {
    match cert {
        FailureCertificate::Gl(c) => Ok(gl_model(c, &BTreeSet::new())),
        _ => Err(CertError::WrongCertificateKind { expected: "GL" }),
    }
}

fn limit_model(
    gl: &Arc<GlCertificate>,
    saturation: &Sequent,
    limit_from: Option<&FormulaSet>,
) -> TailLimitModel {
    let vars = vars_of([saturation]);
    let (base, root) = gl_model(gl, &vars);
    let mut all_vars = vars;
    all_vars.extend(base.valuation(0).keys().cloned());
    let t0 = base.valuation(0).clone();
    let limit = match limit_from {
        Some(left) => valuation(&all_vars, left),
        None => t0.clone(),
    };
    build_tail_limit(base, &root, vec![], t0.clone(), limit).expect("root world exists")
}

pub fn extract_countermodel(cert: &FailureCertificate) -> Countermodel {
    match cert {
        FailureCertificate::Gl(c) => {
            let (model, world) = gl_model(c, &BTreeSet::new());
            Countermodel::Plain { model, world }
        }
        FailureCertificate::S(c) => Countermodel::Tail(limit_model(&c.gl, &c.saturation, None)),
        FailureCertificate::D2(c) => {
            Countermodel::Tail(limit_model(&c.gl, &c.saturation, Some(&c.saturation.left)))
        }
        FailureCertificate::D3(c) => {
            Countermodel::Tail(limit_model(&c.s.gl, &c.saturation, Some(&c.saturation.left)))
        }
    }
}

/// Checks that `cm` makes every left formula of `s` true and every right
/// formula false at the designated world (the limit for tail models), and
/// that tail models have the shape the sequent kind calls for: strongly
/// constant for S, constant for D.
pub fn verify_countermodel(s: &Sequent, cm: &Countermodel) -> bool {
    match cm {
        Countermodel::Plain { model, world } => {
            let Some(w) = model.world_index(world) else { return false };
            s.left.iter().all(|g| eval_index(model, w, g))
                && s.right.iter().all(|g| !eval_index(model, w, g))
        }
        Countermodel::Tail(tm) => {
            let shape = match s.kind {
                SeqKind::S => tm.is_strongly_constant(),
                SeqKind::D => tm.is_constant(),
                SeqKind::Gl => true,
            };
            let ev = eval_tail_limit_all(tm, s.formulas());
            let at_limit = s.left.iter().all(|g| ev.at_limit(g) == Some(true))
                && s.right.iter().all(|g| ev.at_limit(g) == Some(false));
            shape && at_limit
        }
    }
}

/// Checks every world of a GL certificate model against its sequent.
pub fn verify_gl_certificate(cert: &Arc<GlCertificate>) -> bool {
    let (m, _) = gl_model(cert, &BTreeSet::new());
    gl_nodes(cert).iter().enumerate().all(|(w, c)| {
        c.sequent.left.iter().all(|g| eval_index(&m, w, g))
            && c.sequent.right.iter().all(|g| !eval_index(&m, w, g))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculi::check_proof;
    use crate::formula::{f, seq, subformula_closure};
    use proptest::prelude::*;

    fn verdict(s: &str, c: Calculus, p: CutPolicy) -> Verdict {
        prove(&seq(s), c, p).unwrap()
    }

    fn assert_sound(s: &Sequent, c: Calculus, p: CutPolicy, v: &Verdict) {
        match v {
            Verdict::Provable(pr) => {
                assert_eq!(pr.conclusion, *s);
                let r = check_proof(pr, c, p);
                assert!(r.valid, "{s} in {c}: {:?}", r.errors);
                assert!(r.subformula_ok || p != CutPolicy::NoneAllowed);
            }
            Verdict::Unprovable(Some(cert)) => {
                let cm = extract_countermodel(cert);
                assert!(verify_countermodel(s, &cm), "{s} in {c}: countermodel fails");
            }
            Verdict::Unprovable(None) => {}
        }
    }

    #[test]
    fn golden_gl() {
        for s in ["=> box(box p -> p) -> box p", "=> box(p -> q) -> (box p -> box q)"] {
            let v = verdict(s, Calculus::GlSeq, CutPolicy::NoneAllowed);
            assert!(v.is_provable(), "{s}");
            assert_sound(&seq(s), Calculus::GlSeq, CutPolicy::NoneAllowed, &v);
        }
    }

    #[test]
    fn failure_of_cut_elimination() {
        let s = "box box box p =d> box p";
        assert_eq!(
            verdict(s, Calculus::DSeq2, CutPolicy::NoneAllowed),
            Verdict::Unprovable(None)
        );
        let semi = verdict(s, Calculus::DSeq2, CutPolicy::SemiAnalytic);
        assert!(semi.is_provable());
        assert_sound(&seq(s), Calculus::DSeq2, CutPolicy::SemiAnalytic, &semi);
        let r = check_proof(semi.proof().unwrap(), Calculus::DSeq2, CutPolicy::SemiAnalytic);
        assert!(!r.cut_inventory.is_empty());
        assert!(r.cut_inventory.iter().all(|c| c.boxed && c.in_sf));
        let d3 = verdict(s, Calculus::DSeq3, CutPolicy::NoneAllowed);
        assert!(d3.is_provable());
        assert_sound(&seq(s), Calculus::DSeq3, CutPolicy::NoneAllowed, &d3);
    }

    #[test]
    fn reflection() {
        let v = verdict("=d> box p -> p", Calculus::DSeq3, CutPolicy::NoneAllowed);
        assert!(matches!(v, Verdict::Unprovable(Some(_))));
        assert_sound(&seq("=d> box p -> p"), Calculus::DSeq3, CutPolicy::NoneAllowed, &v);
        let v = verdict("=s> box p -> p", Calculus::SSeq, CutPolicy::NoneAllowed);
        assert!(v.is_provable());
        assert_sound(&seq("=s> box p -> p"), Calculus::SSeq, CutPolicy::NoneAllowed, &v);
    }

    #[test]
    fn consistency_and_d_axiom() {
        for s in ["=d> ~box bot", "=d> box(box p | box q) -> box p | box q"] {
            for (c, p) in [
                (Calculus::DSeq2, CutPolicy::NoneAllowed),
                (Calculus::DSeq2, CutPolicy::SemiAnalytic),
                (Calculus::DSeq3, CutPolicy::NoneAllowed),
            ] {
                let v = verdict(s, c, p);
                assert!(v.is_provable(), "{s} {c} {p:?}");
                assert_sound(&seq(s), c, p, &v);
            }
        }
        let v = verdict("=d> box ~box bot", Calculus::DSeq3, CutPolicy::NoneAllowed);
        assert!(!v.is_provable());
        assert_sound(&seq("=d> box ~box bot"), Calculus::DSeq3, CutPolicy::NoneAllowed, &v);
    }

    #[test]
    fn policy_errors() {
        assert!(matches!(
            prove(&seq("=d> p"), Calculus::DSeq3, CutPolicy::SemiAnalytic),
            Err(ProverError::PolicyUnsupported { .. })
        ));
        assert!(matches!(
            prove(&seq("=> p"), Calculus::GlSeq, CutPolicy::Unrestricted),
            Err(ProverError::PolicyUnsupported { .. })
        ));
        assert!(matches!(
            prove(&seq("=s> p"), Calculus::DSeq2, CutPolicy::NoneAllowed),
            Err(ProverError::KindMismatch { .. })
        ));
    }

    #[test]
    fn saturation_examples() {
        assert_eq!(
            saturate(&seq("=> p -> q"), SaturationMode::Imp),
            Saturation::Open(vec![seq("p => q, p -> q")])
        );
        match saturate(&seq("box p =s> q"), SaturationMode::ImpBoxLeft) {
            Saturation::Open(v) => assert!(v[0].left.contains(&f("p"))),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            saturate(&seq("=d> box p -> p"), SaturationMode::ImpAnalyticBox),
            Saturation::Open(vec![seq("box p =d> p, box p -> p")])
        );
        assert!(matches!(
            saturate(&seq("p, p -> q => q"), SaturationMode::Imp),
            Saturation::Proof(_)
        ));
    }

    #[test]
    fn gl_countermodels() {
        let cert = |s: &str| match prove(&seq(s), Calculus::GlSeq, CutPolicy::NoneAllowed).unwrap() {
            Verdict::Unprovable(Some(c)) => c,
            v => panic!("{v:?}"),
        };
        let (m, w) = build_gl_countermodel(&cert("=> box bot")).unwrap();
        assert_eq!(m.len(), 2);
        assert!(!eval_index(&m, m.world_index(&w).unwrap(), &f("box bot")));

        let (m, w) = build_gl_countermodel(&cert("box box p, box box box p => box p")).unwrap();
        let w = m.world_index(&w).unwrap();
        assert_eq!(m.len(), 2);
        assert!(!eval_index(&m, w, &f("box p")));
        assert!(eval_index(&m, w, &f("box box p")));

        let (m, w) = build_gl_countermodel(&cert("p => q")).unwrap();
        let w = m.world_index(&w).unwrap();
        assert_eq!(m.len(), 1);
        assert!(eval_index(&m, w, &f("p")) && !eval_index(&m, w, &f("q")));

        let s_cert = match verdict("=s> p", Calculus::SSeq, CutPolicy::NoneAllowed) {
            Verdict::Unprovable(Some(c)) => c,
            v => panic!("{v:?}"),
        };
        assert!(build_gl_countermodel(&s_cert).is_err());
    }

    #[test]
    fn limit_countermodels() {
        let v = verdict("=d> box p -> p", Calculus::DSeq2, CutPolicy::SemiAnalytic);
        let Countermodel::Tail(tm) = extract_countermodel(v.certificate().unwrap()) else {
            panic!("expected a tail model")
        };
        assert_eq!(tm.base.len(), 1);
        assert_eq!(tm.base.valuation(0).get("p"), Some(&true));
        assert_eq!(tm.tail_constant.get("p"), Some(&true));
        assert_eq!(tm.limit_val.get("p"), Some(&false));
        let ev = eval_tail_limit_all(&tm, [&f("box p -> p")]);
        assert_eq!(ev.at_limit(&f("box p")), Some(true));
        assert_eq!(ev.at_limit(&f("p")), Some(false));

        let v = verdict("=d> box ~box bot", Calculus::DSeq2, CutPolicy::SemiAnalytic);
        let cm = extract_countermodel(v.certificate().unwrap());
        assert!(verify_countermodel(&seq("=d> box ~box bot"), &cm));

        let v = verdict("=s> p", Calculus::SSeq, CutPolicy::NoneAllowed);
        let Countermodel::Tail(tm) = extract_countermodel(v.certificate().unwrap()) else {
            panic!("expected a tail model")
        };
        assert!(tm.is_strongly_constant());
        assert_eq!(tm.limit_val.get("p"), Some(&false));
        assert_eq!(tm.base.valuation(0).get("p"), Some(&false));
    }

    fn arb_formula() -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof![
            Just(Formula::Bottom),
            Just(Formula::var("p")),
            Just(Formula::var("q")),
        ];
        leaf.prop_recursive(4, 14, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::imp(a, b)),
                inner.prop_map(Formula::boxed),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]

        #[test]
        fn soundness_loop(g in arb_formula(), h in arb_formula()) {
            for kind in [SeqKind::Gl, SeqKind::S, SeqKind::D] {
                let s = Sequent::new(kind, [h.clone()], [g.clone()]);
                for c in Calculus::ALL {
                    if !c.has_kind(kind) { continue; }
                    let mut pols = vec![CutPolicy::NoneAllowed];
                    if c == Calculus::DSeq2 { pols.push(CutPolicy::SemiAnalytic); }
                    for p in pols {
                        let v = prove(&s, c, p).unwrap();
                        assert_sound(&s, c, p, &v);
                        if let Some(cert) = v.certificate() {
                            let sf = subformula_closure(s.formulas());
                            for t in cert.sequents() {
                                prop_assert!(t.formulas().all(|x| sf.contains(x)));
                            }
                        }
                    }
                }
            }
        }

        #[test]
        fn equivalences(g in arb_formula()) {
            let d = Sequent::new(SeqKind::D, [], [g.clone()]);
            let semi = prove(&d, Calculus::DSeq2, CutPolicy::SemiAnalytic).unwrap().is_provable();
            let d3 = prove(&d, Calculus::DSeq3, CutPolicy::NoneAllowed).unwrap().is_provable();
            prop_assert_eq!(semi, d3);
            let cut_free2 = prove(&d, Calculus::DSeq2, CutPolicy::NoneAllowed).unwrap().is_provable();
            prop_assert!(!cut_free2 || semi);

            let gl = Sequent::new(SeqKind::Gl, [], [g.clone()]);
            let gl_v = prove(&gl, Calculus::GlSeq, CutPolicy::NoneAllowed).unwrap().is_provable();
            for c in Calculus::ALL {
                prop_assert_eq!(prove(&gl, c, CutPolicy::NoneAllowed).unwrap().is_provable(), gl_v);
            }
            let s_v = prove(&gl.with_kind(SeqKind::S), Calculus::SSeq, CutPolicy::NoneAllowed).unwrap().is_provable();
            prop_assert!(!gl_v || d3);
            prop_assert!(!d3 || s_v);
        }

        #[test]
        fn certificates_verify_everywhere(g in arb_formula()) {
            if let Err(c) = prove_gl(&Sequent::new(SeqKind::Gl, [], [g])) {
                prop_assert!(verify_gl_certificate(&c));
            }
        }
    }
}
