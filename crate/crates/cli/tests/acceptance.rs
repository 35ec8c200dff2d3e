//! Acceptance run: one pass/fail line per criterion, then a determinism
//! re-run comparing every artifact byte for byte.

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use provd::fuzz::{fuzz_round, random_formula, FuzzConfig};
use provd_core::calculi::{check_proof, fixtures, proof_to_string, Calculus, CutPolicy, ProofTree};
use provd_core::formula::{f, seq, Formula};
use provd_core::glin::{
    default_bound, gllin_valid, linearity, omega_models, omega_refute_search, GlLinVerdict, OmegaConfig,
    OmegaVerdict,
};
use provd_core::hilbert::{
    check_hilbert_proof, derive_collapse_lemma, hilbert_to_string, seq_proof_to_hilbert, translate_hilbert_d2_d,
    CheckOptions, Direction, HilbertProof, Justification, Line, Scheme, SystemId, Witness,
};
use provd_core::kripke::{build_tail_limit, eval_tail_limit, validate_model, AnyModel, Valuation};
use provd_core::prover::{extract_countermodel, prove, verify_countermodel, Verdict};
use provd_core::transforms::{d2_to_d3, d3_to_d2, extract_ref_set};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Outcome of one criterion: failures (empty means pass) and the artifacts
/// it produced, concatenated.
#[derive(Default)]
struct Run {
    failures: Vec<String>,
    artifact: String,
    note: String,
}

impl Run {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn emit(&mut self, text: &str) {
        self.artifact.push_str(text);
        self.artifact.push('\n');
    }
}

fn decide(s: &str, calc: Calculus, policy: CutPolicy) -> Verdict {
    prove(&seq(s), calc, policy).expect("supported configuration")
}

fn checked_proof(run: &mut Run, s: &str, calc: Calculus, policy: CutPolicy) -> Option<Arc<ProofTree>> {
    match decide(s, calc, policy) {
        Verdict::Provable(p) => {
            let r = check_proof(&p, calc, policy);
            run.check(r.valid && r.end_sequent == seq(s), format!("{s} in {calc}: proof rejected"));
            run.emit(&proof_to_string(&p, calc));
            Some(p)
        }
        Verdict::Unprovable(_) => {
            run.check(false, format!("{s} should be provable in {calc}/{}", policy.name()));
            None
        }
    }
}

fn refuted(run: &mut Run, s: &str, calc: Calculus, policy: CutPolicy) {
    match decide(s, calc, policy) {
        Verdict::Provable(_) => run.check(false, format!("{s} should be unprovable in {calc}")),
        Verdict::Unprovable(Some(c)) => {
            let cm = extract_countermodel(&c);
            run.check(verify_countermodel(&seq(s), &cm), format!("{s} in {calc}: countermodel not verified"));
            run.emit(&format!("{cm:?}"));
        }
        Verdict::Unprovable(None) => run.check(false, format!("{s} in {calc}: no certificate")),
    }
}

fn criterion1() -> Run {
    let mut run = Run::default();
    let none = CutPolicy::NoneAllowed;
    checked_proof(&mut run, "=> box(box p -> p) -> box p", Calculus::GlSeq, none);
    checked_proof(&mut run, "=> box(p -> q) -> box p -> box q", Calculus::GlSeq, none);
    for s in ["=d> ~box bot", "=d> box(box p | box q) -> box p | box q"] {
        checked_proof(&mut run, s, Calculus::DSeq2, none);
        checked_proof(&mut run, s, Calculus::DSeq3, none);
    }
    for s in ["=d> box p -> p", "=d> box ~box bot"] {
        refuted(&mut run, s, Calculus::DSeq3, none);
        refuted(&mut run, s, Calculus::DSeq2, CutPolicy::SemiAnalytic);
    }
    checked_proof(&mut run, "=s> box p -> p", Calculus::SSeq, none);
    run
}

fn criterion2() -> Run {
    let mut run = Run::default();
    let s = "box box box p =d> box p";
    run.check(
        matches!(decide(s, Calculus::DSeq2, CutPolicy::NoneAllowed), Verdict::Unprovable(None)),
        "cut-free dseq2 should fail",
    );
    if let Some(p) = checked_proof(&mut run, s, Calculus::DSeq2, CutPolicy::SemiAnalytic) {
        let r = check_proof(&p, Calculus::DSeq2, CutPolicy::SemiAnalytic);
        run.check(!r.cut_inventory.is_empty(), "semi-analytic proof should use a cut");
        run.check(
            r.cut_inventory.iter().all(|c| c.boxed && c.in_sf),
            "every cut formula must be boxed and in SF",
        );
        run.note = format!("{} cut(s)", r.cut_inventory.len());
    }
    if let Some(p) = checked_proof(&mut run, s, Calculus::DSeq3, CutPolicy::NoneAllowed) {
        run.check(!p.has_cuts(), "dseq3 proof should be cut-free");
    }
    run
}

fn corpus_200() -> Vec<Formula> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    while out.len() < 200 {
        let g = random_formula(&mut rng, 9, 2);
        if g.modal_depth() <= 3 && seen.insert(g.clone()) {
            out.push(g);
        }
    }
    out
}

fn valuations() -> Vec<Valuation> {
    (0..4u8)
        .map(|m| [("p".to_string(), m & 1 == 1), ("q".to_string(), m & 2 == 2)].into_iter().collect())
        .collect()
}

fn criterion3() -> Run {
    let mut run = Run::default();
    let cfg = FuzzConfig {
        seed: 2024,
        iterations: 500,
        size: 12,
        vars: 3,
    };
    let report = fuzz_round(&cfg);
    let s = report.summary();
    run.check(report.anomalies() == 0, format!("{} anomalies", report.anomalies()));
    run.note = format!(
        "{} proofs and {} countermodels checked",
        s["proofs_checked"], s["countermodels_checked"]
    );
    run.emit(&report.to_json());
    run
}

fn criterion4() -> Run {
    let mut run = Run::default();
    let corpus = corpus_200();
    let vals = valuations();
    // Bases up to isomorphism: one world, two unrelated worlds, a -> b.
    let shapes: [(&[&str], &[(&str, &str)]); 3] = [(&["a"], &[]), (&["a", "b"], &[]), (&["a", "b"], &[("a", "b")])];
    let mut models = 0usize;
    let mut cases = 0usize;
    for (worlds, rel) in shapes {
        let n = worlds.len();
        for bits in 0..vals.len().pow(n as u32) {
            let val: BTreeMap<String, Valuation> = (0..n)
                .map(|i| (worlds[i].to_string(), vals[bits / vals.len().pow(i as u32) % vals.len()].clone()))
                .collect();
            for attach in worlds {
                for c in &vals {
                    for prefix in [vec![], vec![c.clone()]] {
                        let base = validate_model(
                            worlds.iter().map(|w| w.to_string()).collect(),
                            rel.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
                            val.clone(),
                        )
                        .expect("valid base");
                        let tm = build_tail_limit(base, attach, prefix, c.clone(), c.clone()).expect("valid tail");
                        if !tm.is_strongly_constant() {
                            continue;
                        }
                        models += 1;
                        for g in &corpus {
                            cases += 1;
                            let v = eval_tail_limit(&tm, g);
                            if v.at_limit != v.eventually_always {
                                run.check(false, format!("{g}: limit and tail disagree"));
                            }
                        }
                    }
                }
            }
        }
    }
    run.check(models > 0, "no strongly constant models enumerated");
    run.note = format!("{models} models, {cases} evaluations");
    run.emit(&run.note.clone());
    run
}

fn criterion5() -> Run {
    let mut run = Run::default();
    let mut inputs = vec![fixtures::example_d3_axiom()];
    if let Verdict::Provable(p) = decide("box box box p =d> box p", Calculus::DSeq3, CutPolicy::NoneAllowed) {
        inputs.push(p);
    } else {
        run.check(false, "dseq3 proof of the cut-failure sequent missing");
    }
    for p in &inputs {
        let end = &p.conclusion;
        match d3_to_d2(p) {
            Ok(q) => {
                let r = check_proof(&q, Calculus::DSeq2, CutPolicy::SemiAnalytic);
                run.check(r.valid && &r.end_sequent == end, format!("d3_to_d2 on {end}"));
                run.emit(&proof_to_string(&q, Calculus::DSeq2));
                match d2_to_d3(&q) {
                    Ok(o) => {
                        let r = check_proof(&o.proof, Calculus::DSeq3, CutPolicy::NoneAllowed);
                        run.check(r.valid && &r.end_sequent == end, format!("d2_to_d3 on {end}"));
                        run.emit(&proof_to_string(&o.proof, Calculus::DSeq3));
                    }
                    Err(e) => run.check(false, format!("d2_to_d3 on {end}: {e}")),
                }
            }
            Err(e) => run.check(false, format!("d3_to_d2 on {end}: {e}")),
        }
    }
    match extract_ref_set(&fixtures::example_d3_axiom_subtree()) {
        Ok((rs, _)) => {
            run.check(rs.sigma == BTreeSet::from([f("box p | box q")]), "ref set should be {box p | box q}");
            run.emit(&format!("{:?}", rs.sigma));
        }
        Err(e) => run.check(false, format!("extract_ref_set: {e}")),
    }
    run
}

fn strict() -> CheckOptions {
    CheckOptions { require_subproofs: true }
}

fn dh2_axiom(gamma: &[&str], delta: &[&str]) -> HilbertProof {
    let w = Witness {
        gamma: gamma.iter().map(|s| f(s)).collect(),
        delta: delta.iter().map(|s| f(s)).collect(),
    };
    HilbertProof {
        system: SystemId::DH2,
        lines: vec![Line {
            formula: w.formula(),
            just: Justification::Axiom {
                scheme: Scheme::Dh2,
                witness: Some(w),
                sub: None,
            },
        }],
    }
}

fn criterion6() -> Run {
    let mut run = Run::default();
    for p in [fixtures::example_d2_axiom(), fixtures::example_d2_consistency()] {
        match seq_proof_to_hilbert(&p, Calculus::DSeq2) {
            Ok(h) => {
                let r = check_hilbert_proof(&h, SystemId::DH2, strict());
                run.check(r.valid && h.system == SystemId::DH2, format!("DH2 proof of {}", p.conclusion));
                run.emit(&hilbert_to_string(&h));
            }
            Err(e) => run.check(false, format!("{}: {e}", p.conclusion)),
        }
    }
    let letters = ["p", "q", "r", "s"];
    for n in 1..=4 {
        let delta: Vec<Formula> = letters[..n].iter().map(|s| f(s)).collect();
        match derive_collapse_lemma(&delta) {
            Ok(h) => {
                run.check(check_hilbert_proof(&h, SystemId::DH, strict()).valid, format!("collapse n={n}"));
                run.emit(&hilbert_to_string(&h));
            }
            Err(e) => run.check(false, format!("collapse n={n}: {e}")),
        }
    }
    for (goal, p) in [("box box p -> box p", dh2_axiom(&["box p"], &["p"])), ("~box bot", dh2_axiom(&["bot"], &[]))] {
        run.check(p.conclusion() == Some(&f(goal)), format!("{goal}: input shape"));
        let dh = match translate_hilbert_d2_d(&p, Direction::D2ToD) {
            Ok(h) => h,
            Err(e) => {
                run.check(false, format!("{goal} to DH: {e}"));
                continue;
            }
        };
        run.check(check_hilbert_proof(&dh, SystemId::DH, strict()).valid, format!("{goal}: DH output"));
        run.check(dh.conclusion() == Some(&f(goal)), format!("{goal}: DH conclusion"));
        match translate_hilbert_d2_d(&dh, Direction::DToD2) {
            Ok(back) => {
                run.check(check_hilbert_proof(&back, SystemId::DH2, strict()).valid, format!("{goal}: DH2 output"));
                run.check(back.conclusion() == Some(&f(goal)), format!("{goal}: DH2 conclusion"));
                run.emit(&hilbert_to_string(&back));
            }
            Err(e) => run.check(false, format!("{goal} back to DH2: {e}")),
        }
        run.emit(&hilbert_to_string(&dh));
    }
    run
}

fn criterion7() -> Run {
    let mut run = Run::default();
    let lin = linearity(&f("p"), &f("q"));
    run.check(gllin_valid(&lin, 6) == GlLinVerdict::ValidAtBound { bound: 6 }, "linearity at bound 6");
    match gllin_valid(&f("box p -> p"), default_bound(&f("box p -> p"))) {
        GlLinVerdict::Invalid { witness, world } => {
            run.check(witness.size() == 1, "witness should have one world");
            run.emit(&format!("{world} {}", AnyModel::Plain(witness.to_kripke()).to_json()));
        }
        v => run.check(false, format!("box p -> p: {}", v.label())),
    }
    // Valid-at-bound sample.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut sample = Vec::new();
    let mut seen = BTreeSet::new();
    let mut tries = 0;
    while sample.len() < 50 && tries < 100_000 {
        tries += 1;
        let g = random_formula(&mut rng, 7, 2);
        if g.connectives() > 0 && seen.insert(g.clone()) && gllin_valid(&g, default_bound(&g)).is_valid() {
            sample.push(g);
        }
    }
    run.check(sample.len() == 50, "could not draw 50 valid-at-bound formulas");
    let cfg = OmegaConfig::default();
    let mut models = 0;
    for g in &sample {
        for tm in omega_models(g, &cfg) {
            models += 1;
            if !eval_tail_limit(&tm, g).eventually_always {
                run.check(false, format!("{g}: not eventually always true"));
            }
        }
        run.emit(&g.to_string());
    }
    run.note = format!("{} formulas over {models} models", sample.len());
    match omega_refute_search(&f("box p -> p"), &cfg) {
        OmegaVerdict::Refuted(tm) => run.emit(&AnyModel::Tail(tm).to_json()),
        OmegaVerdict::NoCounterexampleFound => run.check(false, "box p -> p should be refuted"),
    }
    for g in ["~box bot", "box(box p | box q) -> box p | box q"] {
        run.check(
            omega_refute_search(&f(g), &cfg) == OmegaVerdict::NoCounterexampleFound,
            format!("{g} should have no counterexample"),
        );
    }
    run
}

type Criterion = fn() -> Run;

const CRITERIA: [(&str, Criterion); 7] = [
    ("golden verdict table", criterion1),
    ("cut-elimination failure", criterion2),
    ("prover, checker and semantics agree", criterion3),
    ("strongly constant coincidence", criterion4),
    ("transformations", criterion5),
    ("hilbert systems", criterion6),
    ("GL_lin", criterion7),
];

fn report(n: usize, name: &str, run: &Run, secs: f64) -> bool {
    let ok = run.failures.is_empty();
    let status = if ok { "PASS" } else { "FAIL" };
    let note = if run.note.is_empty() { String::new() } else { format!(", {}", run.note) };
    println!("criterion {n} [{status}] {name} ({secs:.2}s{note})");
    for e in run.failures.iter().take(10) {
        println!("    {e}");
    }
    ok
}

fn main() -> ExitCode {
    let mut all = true;
    let mut first = Vec::new();
    for (i, (name, c)) in CRITERIA.iter().enumerate() {
        let t = Instant::now();
        let run = c();
        all &= report(i + 1, name, &run, t.elapsed().as_secs_f64());
        first.push(run.artifact);
    }
    let t = Instant::now();
    let mut det = Run::default();
    for (i, (_, c)) in CRITERIA.iter().enumerate() {
        let again = c().artifact;
        det.check(again == first[i], format!("criterion {} artifacts differ on re-run", i + 1));
    }
    det.note = format!("{} bytes compared", first.iter().map(String::len).sum::<usize>());
    all &= report(8, "determinism", &det, t.elapsed().as_secs_f64());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
