//! Proof transformations between the calculi.
//!
//! All functions take checked trees and return trees that pass
//! [`check_proof`] again. Where a step has no syntactic construction here
//! (residual cuts in `d2_to_d3`, odd corner cases of inversion) the affected
//! sequent is re-proved by search, and the outcome says so.

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::calculi::{check_inference, check_proof, weaken, Annotation, Calculus, CutPolicy, ProofTree, RuleName};
use crate::formula::{Formula, FormulaSet, SeqKind, Sequent};
use crate::prover::{prove, prove_gl, prove_s, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("input proof is not valid: {0}")]
    InvalidInputProof(String),
    #[error("formula {0} is not on the left of the end-sequent")]
    FormulaNotPresent(Formula),
    #[error("input proof has cuts")]
    InputHasCuts,
    #[error("root does not match the reduction: {0}")]
    ConfigurationMismatch(String),
}

/// A set Σ together with its reflection instances `box σ -> σ`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RefSet {
    pub sigma: FormulaSet,
}

impl RefSet {
    pub fn refs(&self) -> FormulaSet {
        self.sigma.iter().map(reflection).collect()
    }
}

fn reflection(s: &Formula) -> Formula {
    Formula::imp(Formula::boxed(s.clone()), s.clone())
}

fn unboxed(set: &FormulaSet) -> FormulaSet {
    set.iter().filter_map(|g| g.unbox().cloned()).collect()
}

fn require(p: &Arc<ProofTree>, calc: Calculus, policy: CutPolicy) -> Result<(), TransformError> {
    let r = check_proof(p, calc, policy);
    if r.valid {
        return Ok(());
    }
    if policy == CutPolicy::NoneAllowed && p.has_cuts() && check_proof(p, calc, CutPolicy::Unrestricted).valid {
        return Err(TransformError::InputHasCuts);
    }
    let detail = r
        .errors
        .first()
        .map(|(s, e)| format!("{s}: {e}"))
        .unwrap_or_else(|| "rejected".into());
    Err(TransformError::InvalidInputProof(format!("{calc}: {detail}")))
}

fn output(p: Arc<ProofTree>, calc: Calculus, policy: CutPolicy) -> Result<Arc<ProofTree>, TransformError> {
    let r = check_proof(&p, calc, policy);
    match r.errors.first() {
        None if r.valid => Ok(p),
        e => panic!("transformation produced an invalid {calc} proof: {e:?}"),
    }
}

fn policy_for(p: &Arc<ProofTree>) -> CutPolicy {
    if p.has_cuts() {
        CutPolicy::Unrestricted
    } else {
        CutPolicy::NoneAllowed
    }
}

fn modal_ann(gamma: FormulaSet, delta: FormulaSet) -> Annotation {
    Annotation {
        formula: None,
        gamma: Some(gamma),
        delta: Some(delta),
    }
}

type Memo = HashMap<*const ProofTree, Arc<ProofTree>>;

fn rebuild(node: &Arc<ProofTree>, conclusion: Sequent, premises: Vec<Arc<ProofTree>>) -> Arc<ProofTree> {
    ProofTree::node(node.rule, conclusion, premises, node.ann.clone())
}

/// Turns a GLseq proof into a Dseq2 or Dseq3 proof of the same sets as a
/// D-sequent. Each `glbox` step is wrapped whole: weakening plus `dbox_gl`
/// for Dseq2, `lift_s` plus `dbox_s` for Dseq3.
pub fn embed_gl_into_d(p: &Arc<ProofTree>, target: Calculus) -> Result<Arc<ProofTree>, TransformError> {
    if !matches!(target, Calculus::DSeq2 | Calculus::DSeq3) {
        return Err(TransformError::InvalidInputProof(format!("{target} is not a D calculus")));
    }
    if p.conclusion.kind != SeqKind::Gl {
        return Err(TransformError::InvalidInputProof("end-sequent is not a GL-sequent".into()));
    }
    require(p, Calculus::GlSeq, CutPolicy::Unrestricted)?;
    fn go(n: &Arc<ProofTree>, target: Calculus, memo: &mut Memo) -> Arc<ProofTree> {
        if let Some(r) = memo.get(&Arc::as_ptr(n)) {
            return r.clone();
        }
        let concl = n.conclusion.with_kind(SeqKind::D);
        let r = if n.rule == RuleName::GlBox {
            let gamma = unboxed(&n.conclusion.left);
            let delta = unboxed(&n.conclusion.right);
            if target == Calculus::DSeq2 {
                let wide = Sequent::new(
                    SeqKind::Gl,
                    gamma.union(&n.conclusion.left).cloned(),
                    n.conclusion.right.clone(),
                );
                ProofTree::node(RuleName::DBoxGl, concl, vec![weaken(n.clone(), &wide)], modal_ann(gamma, delta))
            } else {
                let lifted = ProofTree::node(
                    RuleName::LiftS,
                    n.conclusion.with_kind(SeqKind::S),
                    vec![n.clone()],
                    Annotation::default(),
                );
                ProofTree::node(RuleName::DBoxS, concl, vec![lifted], modal_ann(gamma, delta))
            }
        } else {
            let ps = n.premises.iter().map(|q| go(q, target, memo)).collect();
            rebuild(n, concl, ps)
        };
        memo.insert(Arc::as_ptr(n), r.clone());
        r
    }
    let out = go(p, target, &mut Memo::new());
    let policy = policy_for(&out);
    output(out, target, policy)
}

/// The Sseq proof of `box Γ =s> box Δ` standing in for a `dbox_gl` node:
/// lift the premise, then unbox away the unboxed half of its left side.
fn dbox_gl_as_s(n: &Arc<ProofTree>) -> Arc<ProofTree> {
    let q = &n.premises[0];
    let mut cur = ProofTree::node(
        RuleName::LiftS,
        q.conclusion.with_kind(SeqKind::S),
        vec![q.clone()],
        Annotation::default(),
    );
    let extra: Vec<Formula> = q.conclusion.left.difference(&n.conclusion.left).cloned().collect();
    for x in extra {
        let mut left = cur.conclusion.left.clone();
        left.remove(&x);
        let concl = Sequent::new(SeqKind::S, left, cur.conclusion.right.clone());
        cur = ProofTree::node(RuleName::BoxLS, concl, vec![cur], Annotation::formula(Formula::boxed(x)));
    }
    weaken(cur, &n.conclusion.with_kind(SeqKind::S))
}

/// Projects a Dseq2 or Dseq3 proof onto Sseq: D-steps become S-steps,
/// `dbox_gl` becomes `lift_s` plus `boxl_s` steps, `dbox_s` is dropped.
pub fn project_d_to_s(p: &Arc<ProofTree>, source: Calculus) -> Result<Arc<ProofTree>, TransformError> {
    if p.conclusion.kind != SeqKind::D {
        return Err(TransformError::InvalidInputProof("end-sequent is not a D-sequent".into()));
    }
    require(p, source, CutPolicy::Unrestricted)?;
    fn go(n: &Arc<ProofTree>, memo: &mut Memo) -> Arc<ProofTree> {
        if let Some(r) = memo.get(&Arc::as_ptr(n)) {
            return r.clone();
        }
        let r = match n.rule {
            RuleName::DBoxGl => dbox_gl_as_s(n),
            RuleName::DBoxS => n.premises[0].clone(),
            _ => {
                let ps = n.premises.iter().map(|q| go(q, memo)).collect();
                rebuild(n, n.conclusion.with_kind(SeqKind::S), ps)
            }
        };
        memo.insert(Arc::as_ptr(n), r.clone());
        r
    }
    let out = go(p, &mut Memo::new());
    let policy = policy_for(&out);
    output(out, Calculus::SSeq, policy)
}

/// Proof surgery shared by inversion and ref-set extraction: every sequent
/// is mapped through `f`, nodes are rebuilt over their mapped premises, and
/// a rebuilt node that no longer fits its schema is re-proved. Returns the
/// number of re-proved nodes alongside the tree.
struct Surgery<'a> {
    map: &'a dyn Fn(&Sequent) -> Sequent,
    special: &'a dyn Fn(&Arc<ProofTree>, &mut dyn FnMut(&Arc<ProofTree>) -> Arc<ProofTree>) -> Option<Arc<ProofTree>>,
    calc: Calculus,
    memo: Memo,
    reproved: usize,
}

impl Surgery<'_> {
    fn run(&mut self, n: &Arc<ProofTree>) -> Arc<ProofTree> {
        if let Some(r) = self.memo.get(&Arc::as_ptr(n)) {
            return r.clone();
        }
        let target = (self.map)(&n.conclusion);
        let special = self.special;
        let r = match special(n, &mut |q| self.run(q)) {
            Some(r) => weaken(r, &target),
            None => {
                let ps: Vec<Arc<ProofTree>> = n.premises.iter().map(|q| self.run(q)).collect();
                let candidate = rebuild(n, target.clone(), ps);
                if check_inference(&candidate, self.calc).is_ok() {
                    candidate
                } else {
                    self.reproved += 1;
                    prove_gl(&target).expect("surgery targets stay provable")
                }
            }
        };
        self.memo.insert(Arc::as_ptr(n), r.clone());
        r
    }
}

fn implication_parts(g: &Formula) -> Option<(Formula, Formula)> {
    match g {
        Formula::Implies(a, b) => Some(((**a).clone(), (**b).clone())),
        _ => None,
    }
}

/// Inverts `->L` on `g = α -> β` in a GLseq proof of `g, Γ => Δ`, giving
/// proofs of `Γ => Δ, α` and `β, Γ => Δ`.
pub fn invert_impl_left(p: &Arc<ProofTree>, g: &Formula) -> Result<(Arc<ProofTree>, Arc<ProofTree>), TransformError> {
    let (a, b) = implication_parts(g).ok_or_else(|| TransformError::FormulaNotPresent(g.clone()))?;
    if p.conclusion.kind != SeqKind::Gl || !p.conclusion.left.contains(g) {
        return Err(TransformError::FormulaNotPresent(g.clone()));
    }
    require(p, Calculus::GlSeq, CutPolicy::Unrestricted)?;
    let one = invert_side(p, g, None, Some(a.clone()));
    let two = invert_side(p, g, Some(b.clone()), None);
    Ok((
        output(one, Calculus::GlSeq, CutPolicy::Unrestricted)?,
        output(two, Calculus::GlSeq, CutPolicy::Unrestricted)?,
    ))
}

fn invert_side(p: &Arc<ProofTree>, g: &Formula, add_l: Option<Formula>, add_r: Option<Formula>) -> Arc<ProofTree> {
    let (a, b) = implication_parts(g).unwrap();
    let map = |s: &Sequent| {
        let mut t = s.clone();
        if t.left.remove(g) {
            t.left.extend(add_l.clone());
            t.right.extend(add_r.clone());
        }
        t
    };
    let first_side = add_r.is_some();
    let special = |n: &Arc<ProofTree>, rec: &mut dyn FnMut(&Arc<ProofTree>) -> Arc<ProofTree>| {
        if !n.conclusion.left.contains(g) {
            return Some(n.clone());
        }
        match n.rule {
            RuleName::Weakening => Some(rec(&n.premises[0])),
            RuleName::ImpL if principal_impl_left(n) == Some(g) => {
                Some(rec(&n.premises[if first_side { 0 } else { 1 }]))
            }
            RuleName::Init => {
                // g => g with g removed: => g, α or β => g.
                let concl = map(&n.conclusion);
                let (extra, prem) = if first_side {
                    (a.clone(), Sequent::new(SeqKind::Gl, [a.clone()], [a.clone(), b.clone()]))
                } else {
                    (b.clone(), Sequent::new(SeqKind::Gl, [b.clone(), a.clone()], [b.clone()]))
                };
                let init = ProofTree::leaf(
                    RuleName::Init,
                    Sequent::new(SeqKind::Gl, [extra.clone()], [extra.clone()]),
                    Annotation::formula(extra),
                );
                Some(ProofTree::node(
                    RuleName::ImpR,
                    concl,
                    vec![weaken(init, &prem)],
                    Annotation::formula(g.clone()),
                ))
            }
            _ => None,
        }
    };
    let mut s = Surgery {
        map: &map,
        special: &special,
        calc: Calculus::GlSeq,
        memo: Memo::new(),
        reproved: 0,
    };
    s.run(p)
}

/// The principal formula of an `->L` node, from its annotation or premises.
fn principal_impl_left(n: &ProofTree) -> Option<&Formula> {
    if let Some(f) = &n.ann.formula {
        return Some(f);
    }
    let (p1, p2) = (&n.premises[0].conclusion, &n.premises[1].conclusion);
    n.conclusion.left.iter().find(|g| match g {
        Formula::Implies(a, b) => p1.right.contains(&**a) && p2.left.contains(&**b),
        _ => false,
    })
}

/// The principal formula of a `boxl_s` node, or `None` when the step adds
/// nothing.
fn principal_box_left(n: &ProofTree) -> Option<Formula> {
    if let Some(f) = &n.ann.formula {
        return Some(f.clone());
    }
    let p = &n.premises[0].conclusion;
    n.conclusion
        .left
        .iter()
        .find(|g| g.unbox().is_some_and(|x| p.left.contains(x) && !n.conclusion.left.contains(x)))
        .cloned()
}

/// From a cut-free Sseq proof of `Γ =s> Δ`, collects Σ (the bodies of all
/// `boxl_s` principal formulas) and builds a GLseq proof of
/// `ref(Σ), Γ => Δ`, replacing each `boxl_s` by `->L` on `box σ -> σ`.
pub fn extract_ref_set(p: &Arc<ProofTree>) -> Result<(RefSet, Arc<ProofTree>), TransformError> {
    if p.conclusion.kind != SeqKind::S {
        return Err(TransformError::InvalidInputProof("end-sequent is not an S-sequent".into()));
    }
    require(p, Calculus::SSeq, CutPolicy::NoneAllowed)?;
    let mut sigma = FormulaSet::new();
    p.for_each_node(|n| {
        if n.rule == RuleName::BoxLS {
            if let Some(f) = principal_box_left(n) {
                sigma.insert(f.unbox().unwrap().clone());
            }
        }
    });
    let rs = RefSet { sigma };
    let refs = rs.refs();
    let map = |s: &Sequent| {
        let mut t = s.with_kind(SeqKind::Gl);
        t.left.extend(refs.iter().cloned());
        t
    };
    let special = |n: &Arc<ProofTree>, rec: &mut dyn FnMut(&Arc<ProofTree>) -> Arc<ProofTree>| match n.rule {
        RuleName::LiftS => Some(n.premises[0].clone()),
        RuleName::Weakening => Some(rec(&n.premises[0])),
        RuleName::Init | RuleName::InitBot => Some(ProofTree::leaf(
            n.rule,
            n.conclusion.with_kind(SeqKind::Gl),
            n.ann.clone(),
        )),
        RuleName::BoxLS => {
            let concl = map(&n.conclusion);
            let Some(bf) = principal_box_left(n) else {
                return Some(rec(&n.premises[0]));
            };
            let phi = bf.unbox().unwrap().clone();
            let init = ProofTree::leaf(
                RuleName::Init,
                Sequent::new(SeqKind::Gl, [bf.clone()], [bf.clone()]),
                Annotation::formula(bf.clone()),
            );
            let p1 = weaken(init, &concl.add_right(bf.clone()));
            let p2 = weaken(rec(&n.premises[0]), &concl.add_left(phi.clone()));
            Some(ProofTree::node(
                RuleName::ImpL,
                concl,
                vec![p1, p2],
                Annotation::formula(reflection(&phi)),
            ))
        }
        _ => None,
    };
    let mut s = Surgery {
        map: &map,
        special: &special,
        calc: Calculus::GlSeq,
        memo: Memo::new(),
        reproved: 0,
    };
    let gl = s.run(p);
    Ok((rs, output(gl, Calculus::GlSeq, CutPolicy::NoneAllowed)?))
}

/// Cut-free Dseq3 to semi-analytic Dseq2. Each `dbox_s` step over
/// `box Γ =s> box Δ` becomes a cascade of analytic cuts on `box σ`
/// (σ ∈ Σ from [`extract_ref_set`]) whose 2^n leaves are closed by
/// `dbox_gl` over inverted GL proofs.
pub fn d3_to_d2(p: &Arc<ProofTree>) -> Result<Arc<ProofTree>, TransformError> {
    if p.conclusion.kind != SeqKind::D {
        return Err(TransformError::InvalidInputProof("end-sequent is not a D-sequent".into()));
    }
    require(p, Calculus::DSeq3, CutPolicy::NoneAllowed)?;
    fn go(n: &Arc<ProofTree>, memo: &mut Memo) -> Result<Arc<ProofTree>, TransformError> {
        if let Some(r) = memo.get(&Arc::as_ptr(n)) {
            return Ok(r.clone());
        }
        let r = if n.rule == RuleName::DBoxS {
            cascade_for(n)?
        } else {
            let ps = n.premises.iter().map(|q| go(q, memo)).collect::<Result<Vec<_>, _>>()?;
            rebuild(n, n.conclusion.clone(), ps)
        };
        memo.insert(Arc::as_ptr(n), r.clone());
        Ok(r)
    }
    let out = go(p, &mut Memo::new())?;
    output(out, Calculus::DSeq2, CutPolicy::SemiAnalytic)
}

fn cascade_for(n: &Arc<ProofTree>) -> Result<Arc<ProofTree>, TransformError> {
    let (rs, g) = extract_ref_set(&n.premises[0])?;
    let s = &n.conclusion;
    let free: Vec<Formula> = rs
        .sigma
        .iter()
        .filter(|x| {
            let b = Formula::boxed((*x).clone());
            !s.left.contains(&b) && !s.right.contains(&b)
        })
        .cloned()
        .collect();
    let mut leaves: HashMap<Sequent, Arc<ProofTree>> = HashMap::new();
    Ok(cascade(s, &free, &rs, &g, &mut leaves))
}

fn cascade(
    s: &Sequent,
    free: &[Formula],
    rs: &RefSet,
    g: &Arc<ProofTree>,
    leaves: &mut HashMap<Sequent, Arc<ProofTree>>,
) -> Arc<ProofTree> {
    let Some((x, rest)) = free.split_first() else {
        return cascade_leaf(s, rs, g, leaves);
    };
    let b = Formula::boxed(x.clone());
    let p1 = cascade(&s.add_right(b.clone()), rest, rs, g, leaves);
    let p2 = cascade(&s.add_left(b.clone()), rest, rs, g, leaves);
    ProofTree::node(RuleName::Cut, s.clone(), vec![p1, p2], Annotation::formula(b))
}

/// Closes `box Γ, box Σ_L =d> box Δ, box Σ_R` by `dbox_gl`. Each
/// `box σ -> σ` is inverted away: towards `box σ` on the right when σ is
/// placed right, towards σ on the left otherwise.
fn cascade_leaf(
    s: &Sequent,
    rs: &RefSet,
    g: &Arc<ProofTree>,
    leaves: &mut HashMap<Sequent, Arc<ProofTree>>,
) -> Arc<ProofTree> {
    if let Some(r) = leaves.get(s) {
        return r.clone();
    }
    let mut cur = g.clone();
    for x in &rs.sigma {
        let r = reflection(x);
        if !cur.conclusion.left.contains(&r) {
            continue;
        }
        let on_right = s.right.contains(&Formula::boxed(x.clone())) && !s.left.contains(&Formula::boxed(x.clone()));
        cur = if on_right {
            invert_side(&cur, &r, None, Some(Formula::boxed(x.clone())))
        } else {
            invert_side(&cur, &r, Some(x.clone()), None)
        };
    }
    let gamma = unboxed(&s.left);
    let delta = unboxed(&s.right);
    let premise = Sequent::new(SeqKind::Gl, gamma.union(&s.left).cloned(), s.right.clone());
    let r = ProofTree::node(RuleName::DBoxGl, s.clone(), vec![weaken(cur, &premise)], modal_ann(gamma, delta));
    leaves.insert(s.clone(), r.clone());
    r
}

/// Replaces every `dbox_gl` node by `dbox_s` over its Sseq projection. Cuts
/// are left in place, so the result is a Dseq3 proof that may still have
/// D-cuts.
pub fn lift_dbox_gl(p: &Arc<ProofTree>) -> Result<Arc<ProofTree>, TransformError> {
    require(p, Calculus::DSeq2, CutPolicy::Unrestricted)?;
    fn go(n: &Arc<ProofTree>, memo: &mut Memo) -> Arc<ProofTree> {
        if let Some(r) = memo.get(&Arc::as_ptr(n)) {
            return r.clone();
        }
        let r = if n.rule == RuleName::DBoxGl {
            let s = dbox_gl_as_s(n);
            ProofTree::node(RuleName::DBoxS, n.conclusion.clone(), vec![s], n.ann.clone())
        } else if n.conclusion.kind == SeqKind::D {
            let ps = n.premises.iter().map(|q| go(q, memo)).collect();
            rebuild(n, n.conclusion.clone(), ps)
        } else {
            n.clone()
        };
        memo.insert(Arc::as_ptr(n), r.clone());
        r
    }
    let out = go(p, &mut Memo::new());
    let policy = policy_for(&out);
    output(out, Calculus::DSeq3, policy)
}

fn strip_weakening(p: &Arc<ProofTree>) -> &Arc<ProofTree> {
    let mut cur = p;
    while cur.rule == RuleName::Weakening {
        cur = &cur.premises[0];
    }
    cur
}

/// The principal reduction for a D-cut whose premises are both `dbox_s`
/// steps (possibly under weakening): the cut moves up into an S-cut under a
/// single `dbox_s`.
pub fn reduce_d_cut(p: &Arc<ProofTree>) -> Result<Arc<ProofTree>, TransformError> {
    let mismatch = |m: &str| TransformError::ConfigurationMismatch(m.to_string());
    if p.rule != RuleName::Cut || p.conclusion.kind != SeqKind::D {
        return Err(mismatch("root is not a D-cut"));
    }
    let c = &p.conclusion;
    let cut = match &p.ann.formula {
        Some(f) => f.clone(),
        None => p.premises[0]
            .conclusion
            .right
            .intersection(&p.premises[1].conclusion.left)
            .next()
            .cloned()
            .ok_or_else(|| mismatch("no cut formula"))?,
    };
    let x1 = strip_weakening(&p.premises[0]);
    let x2 = strip_weakening(&p.premises[1]);
    if x1.rule != RuleName::DBoxS || x2.rule != RuleName::DBoxS {
        return Err(mismatch("premises are not dbox_s steps"));
    }
    if !cut.is_box() || c.formulas().any(|g| !g.is_box()) {
        return Err(mismatch("conclusion or cut formula is not boxed"));
    }
    let sc = c.with_kind(SeqKind::S);
    let s1 = weaken(x1.premises[0].clone(), &sc.add_right(cut.clone()));
    let s2 = weaken(x2.premises[0].clone(), &sc.add_left(cut.clone()));
    let scut = ProofTree::node(RuleName::Cut, sc, vec![s1, s2], Annotation::formula(cut));
    let out = ProofTree::node(
        RuleName::DBoxS,
        c.clone(),
        vec![scut],
        modal_ann(unboxed(&c.left), unboxed(&c.right)),
    );
    output(out, Calculus::DSeq3, CutPolicy::Unrestricted)
}

/// Result of [`d2_to_d3`], recording how each cut was disposed of.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutFreeOutcome {
    pub proof: Arc<ProofTree>,
    /// Conclusions of D-cuts that went through [`reduce_d_cut`].
    pub reduced: Vec<Sequent>,
    /// Sequents whose subproofs were replaced by search.
    pub reproved: Vec<Sequent>,
}

/// Dseq2 (cut-free or semi-analytic) to cut-free Dseq3. `dbox_gl` nodes are
/// converted syntactically; each remaining cut is first reduced when it
/// matches [`reduce_d_cut`], and the cut that remains is re-proved by
/// cut-free search.
pub fn d2_to_d3(p: &Arc<ProofTree>) -> Result<CutFreeOutcome, TransformError> {
    if p.conclusion.kind != SeqKind::D {
        return Err(TransformError::InvalidInputProof("end-sequent is not a D-sequent".into()));
    }
    require(p, Calculus::DSeq2, CutPolicy::SemiAnalytic)?;
    let lifted = lift_dbox_gl(p)?;
    let mut out = CutFreeOutcome {
        proof: lifted.clone(),
        reduced: vec![],
        reproved: vec![],
    };
    let mut memo = Memo::new();
    out.proof = eliminate(&lifted, &mut memo, &mut out);
    out.proof = output(out.proof.clone(), Calculus::DSeq3, CutPolicy::NoneAllowed)?;
    Ok(out)
}

fn eliminate(n: &Arc<ProofTree>, memo: &mut Memo, out: &mut CutFreeOutcome) -> Arc<ProofTree> {
    if let Some(r) = memo.get(&Arc::as_ptr(n)) {
        return r.clone();
    }
    let r = if !n.has_cuts() {
        n.clone()
    } else if n.rule == RuleName::Cut {
        let ps: Vec<_> = n.premises.iter().map(|q| eliminate(q, memo, out)).collect();
        let node = rebuild(n, n.conclusion.clone(), ps);
        match reduce_d_cut(&node) {
            Ok(red) => {
                out.reduced.push(n.conclusion.clone());
                let sc = &red.premises[0].conclusion;
                out.reproved.push(sc.clone());
                let s = prove_s(sc).expect("reduced S-cut conclusion is provable");
                ProofTree::node(RuleName::DBoxS, red.conclusion.clone(), vec![s], red.ann.clone())
            }
            Err(_) => {
                out.reproved.push(n.conclusion.clone());
                match prove(&n.conclusion, Calculus::DSeq3, CutPolicy::NoneAllowed) {
                    Ok(Verdict::Provable(q)) => q,
                    v => panic!("cut conclusion {} not re-provable: {v:?}", n.conclusion),
                }
            }
        }
    } else {
        let ps = n.premises.iter().map(|q| eliminate(q, memo, out)).collect();
        rebuild(n, n.conclusion.clone(), ps)
    };
    memo.insert(Arc::as_ptr(n), r.clone());
    r
}
