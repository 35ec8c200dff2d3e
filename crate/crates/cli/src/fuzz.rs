//! Seeded cross-validation of prover, checker and semantics.
//!
//! Each case draws one formula and asks every applicable calculus and cut
//! policy about `=> f`, `=s> f` and `=d> f`. Proofs go through the checker,
//! countermodels through the evaluator, and the verdicts are compared.

use std::collections::BTreeMap;

use provd_core::calculi::{check_proof, Calculus, CutPolicy};
use provd_core::formula::{Formula, SeqKind, Sequent};
use provd_core::prover::{extract_countermodel, prove, verify_countermodel, Verdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FuzzConfig {
    pub seed: u64,
    pub iterations: usize,
    /// Maximum connective count.
    pub size: usize,
    pub vars: usize,
}

/// Variable names `p, q, r, s, ...`, then `v<k>`.
pub fn var_name(i: usize) -> String {
    const NAMES: [&str; 8] = ["p", "q", "r", "s", "t", "u", "v", "w"];
    NAMES.get(i).map(|s| s.to_string()).unwrap_or_else(|| format!("v{i}"))
}

/// A formula with exactly `n` connectives. Boxes are drawn with weight 1/3.
pub fn formula_with<R: Rng>(rng: &mut R, n: usize, vars: usize) -> Formula {
    if n == 0 {
        let k = rng.gen_range(0..=vars);
        return if k == vars { Formula::Bottom } else { Formula::var(&var_name(k)) };
    }
    if rng.gen_bool(1.0 / 3.0) {
        Formula::boxed(formula_with(rng, n - 1, vars))
    } else {
        let k = rng.gen_range(0..n);
        let a = formula_with(rng, k, vars);
        Formula::imp(a, formula_with(rng, n - 1 - k, vars))
    }
}

/// A formula with at most `size` connectives.
pub fn random_formula<R: Rng>(rng: &mut R, size: usize, vars: usize) -> Formula {
    let n = rng.gen_range(0..=size);
    formula_with(rng, n, vars)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseRecord {
    pub formula: Formula,
    /// `kind/calculus/policy` to verdict.
    pub verdicts: BTreeMap<String, bool>,
    pub proofs_checked: usize,
    pub proof_failures: usize,
    pub countermodels_checked: usize,
    pub countermodel_failures: usize,
    pub anomalies: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuzzReport {
    pub config: FuzzConfig,
    pub cases: Vec<CaseRecord>,
}

impl FuzzReport {
    pub fn anomalies(&self) -> usize {
        self.cases.iter().map(|c| c.anomalies.len()).sum()
    }

    pub fn summary(&self) -> BTreeMap<&'static str, usize> {
        let sum = |g: fn(&CaseRecord) -> usize| self.cases.iter().map(g).sum::<usize>();
        BTreeMap::from([
            ("cases", self.cases.len()),
            ("proofs_checked", sum(|c| c.proofs_checked)),
            ("proof_failures", sum(|c| c.proof_failures)),
            ("countermodels_checked", sum(|c| c.countermodels_checked)),
            ("countermodel_failures", sum(|c| c.countermodel_failures)),
            ("anomalies", self.anomalies()),
        ])
    }

    pub fn to_value(&self) -> Value {
        let cases: Vec<Value> = self
            .cases
            .iter()
            .map(|c| {
                json!({
                    "formula": c.formula.to_string(),
                    "verdicts": c.verdicts,
                    "proofs_checked": c.proofs_checked,
                    "proof_failures": c.proof_failures,
                    "countermodels_checked": c.countermodels_checked,
                    "countermodel_failures": c.countermodel_failures,
                    "anomalies": c.anomalies,
                })
            })
            .collect();
        json!({
            "seed": self.config.seed,
            "iterations": self.config.iterations,
            "size": self.config.size,
            "vars": self.config.vars,
            "cases": cases,
            "summary": self.summary(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).unwrap()
    }
}

const RUNS: [(SeqKind, Calculus, CutPolicy); 9] = [
    (SeqKind::Gl, Calculus::GlSeq, CutPolicy::NoneAllowed),
    (SeqKind::Gl, Calculus::SSeq, CutPolicy::NoneAllowed),
    (SeqKind::Gl, Calculus::DSeq2, CutPolicy::NoneAllowed),
    (SeqKind::Gl, Calculus::DSeq3, CutPolicy::NoneAllowed),
    (SeqKind::S, Calculus::SSeq, CutPolicy::NoneAllowed),
    (SeqKind::S, Calculus::DSeq3, CutPolicy::NoneAllowed),
    (SeqKind::D, Calculus::DSeq2, CutPolicy::NoneAllowed),
    (SeqKind::D, Calculus::DSeq2, CutPolicy::SemiAnalytic),
    (SeqKind::D, Calculus::DSeq3, CutPolicy::NoneAllowed),
];

fn key(kind: SeqKind, calc: Calculus, policy: CutPolicy) -> String {
    let k = match kind {
        SeqKind::Gl => "gl",
        SeqKind::S => "s",
        SeqKind::D => "d",
    };
    format!("{k}/{}/{}", calc.name(), policy.name())
}

/// Runs every configuration on one formula.
pub fn run_case(f: &Formula) -> CaseRecord {
    let mut rec = CaseRecord {
        formula: f.clone(),
        verdicts: BTreeMap::new(),
        proofs_checked: 0,
        proof_failures: 0,
        countermodels_checked: 0,
        countermodel_failures: 0,
        anomalies: Vec::new(),
    };
    for (kind, calc, policy) in RUNS {
        let s = Sequent::new(kind, [], [f.clone()]);
        let k = key(kind, calc, policy);
        let v = match prove(&s, calc, policy) {
            Ok(v) => v,
            Err(e) => {
                rec.anomalies.push(format!("{k}: {e}"));
                continue;
            }
        };
        rec.verdicts.insert(k.clone(), v.is_provable());
        match v {
            Verdict::Provable(p) => {
                rec.proofs_checked += 1;
                let r = check_proof(&p, calc, policy);
                let ok = r.valid && r.end_sequent == s && (policy != CutPolicy::NoneAllowed || r.subformula_ok);
                if !ok {
                    rec.proof_failures += 1;
                    rec.anomalies.push(format!("{k}: emitted proof rejected by the checker"));
                }
            }
            Verdict::Unprovable(Some(cert)) => {
                rec.countermodels_checked += 1;
                if !verify_countermodel(&s, &extract_countermodel(&cert)) {
                    rec.countermodel_failures += 1;
                    rec.anomalies.push(format!("{k}: countermodel does not falsify the sequent"));
                }
            }
            Verdict::Unprovable(None) => {
                if !(calc == Calculus::DSeq2 && policy == CutPolicy::NoneAllowed) {
                    rec.anomalies.push(format!("{k}: failure without a certificate"));
                }
            }
        }
    }
    let get = |kind, calc, policy| rec.verdicts.get(&key(kind, calc, policy)).copied();
    let gl: Vec<Option<bool>> = RUNS[..4].iter().map(|&(k, c, p)| get(k, c, p)).collect();
    if gl.iter().any(|v| *v != gl[0]) {
        rec.anomalies.push("gl sequent verdicts differ between calculi".into());
    }
    let semi = get(SeqKind::D, Calculus::DSeq2, CutPolicy::SemiAnalytic);
    let d3 = get(SeqKind::D, Calculus::DSeq3, CutPolicy::NoneAllowed);
    if semi != d3 {
        rec.anomalies.push("dseq2 with semi-analytic cuts disagrees with cut-free dseq3".into());
    }
    if get(SeqKind::D, Calculus::DSeq2, CutPolicy::NoneAllowed) == Some(true) && d3 != Some(true) {
        rec.anomalies.push("cut-free dseq2 proves what dseq3 does not".into());
    }
    let s = get(SeqKind::S, Calculus::SSeq, CutPolicy::NoneAllowed);
    if gl[0] == Some(true) && d3 != Some(true) {
        rec.anomalies.push("GL theorem not in D".into());
    }
    if d3 == Some(true) && s != Some(true) {
        rec.anomalies.push("D theorem not in S".into());
    }
    if get(SeqKind::S, Calculus::DSeq3, CutPolicy::NoneAllowed) != s {
        rec.anomalies.push("s sequent verdicts differ between sseq and dseq3".into());
    }
    rec
}

pub fn formulas(cfg: &FuzzConfig) -> Vec<Formula> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.iterations).map(|_| random_formula(&mut rng, cfg.size, cfg.vars)).collect()
}

pub fn fuzz_round(cfg: &FuzzConfig) -> FuzzReport {
    FuzzReport {
        config: *cfg,
        cases: formulas(cfg).iter().map(run_case).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_respects_size() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let f = random_formula(&mut rng, 6, 2);
            assert!(f.connectives() <= 6);
            assert!(f.vars().iter().all(|v| &**v == "p" || &**v == "q"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            assert_eq!(random_formula(&mut rng, 0, 3).connectives(), 0);
        }
    }

    #[test]
    fn small_round_is_clean_and_deterministic() {
        let cfg = FuzzConfig {
            seed: 1,
            iterations: 100,
            size: 10,
            vars: 3,
        };
        let a = fuzz_round(&cfg);
        assert_eq!(a.anomalies(), 0, "{}", a.to_json());
        let s = a.summary();
        assert_eq!(s["cases"], 100);
        assert_eq!(a.to_json(), fuzz_round(&cfg).to_json());
    }

    #[test]
    fn atoms_only() {
        let cfg = FuzzConfig {
            seed: 3,
            iterations: 10,
            size: 0,
            vars: 3,
        };
        let r = fuzz_round(&cfg);
        assert_eq!(r.anomalies(), 0);
        assert!(r.cases.iter().all(|c| c.formula.connectives() == 0));
    }
}
