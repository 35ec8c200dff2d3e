//! Command implementations behind the `provd` binary.
//!
//! Exit codes: 0 provable / valid / check passed, 1 unprovable / invalid /
//! check failed, 2 usage or input error.

pub mod fuzz;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use provd_core::calculi::{check_proof, proof_from_str, proof_to_string, Calculus, CutPolicy, ProofReport};
use provd_core::formula::{parse_formula, parse_sequent, print_formula, Formula};
use provd_core::glin::{default_bound, gllin_valid, omega_refute_search, GlLinVerdict, OmegaConfig, OmegaVerdict};
use provd_core::hilbert::{
    check_hilbert_proof, hilbert_from_str, hilbert_to_string, seq_proof_to_hilbert, translate_hilbert_d2_d,
    CheckOptions, Direction, SystemId,
};
use provd_core::kripke::{eval_at, eval_tail_limit, AnyModel, ModelFile};
use provd_core::prover::{extract_countermodel, prove, Countermodel, ProverError, Verdict};
use provd_core::transforms::{d2_to_d3, d3_to_d2, embed_gl_into_d, project_d_to_s};
use serde_json::json;

pub const OK: i32 = 0;
pub const NO: i32 = 1;
pub const USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "provd", version, about = "Decision procedures and proof checkers for GL, S and D")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CalcArg {
    Glseq,
    Sseq,
    Dseq2,
    Dseq3,
}

impl From<CalcArg> for Calculus {
    fn from(c: CalcArg) -> Calculus {
        match c {
            CalcArg::Glseq => Calculus::GlSeq,
            CalcArg::Sseq => Calculus::SSeq,
            CalcArg::Dseq2 => Calculus::DSeq2,
            CalcArg::Dseq3 => Calculus::DSeq3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CutsArg {
    None,
    Semi,
    Any,
}

impl From<CutsArg> for CutPolicy {
    fn from(c: CutsArg) -> CutPolicy {
        match c {
            CutsArg::None => CutPolicy::NoneAllowed,
            CutsArg::Semi => CutPolicy::SemiAnalytic,
            CutsArg::Any => CutPolicy::Unrestricted,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProveCuts {
    None,
    Semi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum HilbertArg {
    Glh,
    Sh,
    Dh,
    Dh2,
    Dh3,
    #[value(name = "d2-gllin")]
    D2Gllin,
    #[value(name = "d3-gllin")]
    D3Gllin,
}

impl From<HilbertArg> for SystemId {
    fn from(h: HilbertArg) -> SystemId {
        use provd_core::hilbert::Oracle::GlLin;
        match h {
            HilbertArg::Glh => SystemId::Glh,
            HilbertArg::Sh => SystemId::SH,
            HilbertArg::Dh => SystemId::DH,
            HilbertArg::Dh2 => SystemId::DH2,
            HilbertArg::Dh3 => SystemId::DH3,
            HilbertArg::D2Gllin => SystemId::D2(GlLin),
            HilbertArg::D3Gllin => SystemId::D3(GlLin),
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide a sequent; prints the proof (JSON) or a countermodel.
    Prove {
        #[arg(long, value_enum)]
        calculus: CalcArg,
        #[arg(long, value_enum, default_value = "none")]
        cuts: ProveCuts,
        #[arg(long)]
        emit_proof: Option<PathBuf>,
        #[arg(long)]
        emit_countermodel: Option<PathBuf>,
        sequent: String,
    },
    /// Check a sequent proof file.
    CheckProof {
        #[arg(long)]
        file: PathBuf,
        #[arg(long, value_enum, default_value = "any")]
        cuts: CutsArg,
    },
    /// Evaluate a formula in a model file.
    ModelCheck {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        world: String,
        #[arg(long)]
        formula: String,
        /// Ask whether the formula is eventually always true in the tail.
        #[arg(long)]
        eventually: bool,
    },
    /// Translate a proof between calculi or Hilbert systems.
    Translate {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a Hilbert proof file.
    HilbertCheck {
        #[arg(long, value_enum)]
        system: HilbertArg,
        #[arg(long)]
        file: PathBuf,
        /// Reject side conditions that are not backed by an explicit subproof.
        #[arg(long)]
        require_subproofs: bool,
    },
    /// Validity over finite strict linear orders.
    Gllin {
        #[command(subcommand)]
        cmd: GllinCmd,
    },
    /// Refutation search over omega-plus models.
    Omega {
        #[command(subcommand)]
        cmd: OmegaCmd,
    },
    /// Randomized cross-validation of prover, checker and semantics.
    Fuzz {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        iters: usize,
        #[arg(long)]
        size: usize,
        #[arg(long)]
        vars: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum GllinCmd {
    Valid {
        #[arg(long)]
        formula: String,
        /// Largest frame size checked; defaults to |SF| + 1.
        #[arg(long)]
        bound: Option<usize>,
    },
}

#[derive(Subcommand, Debug)]
pub enum OmegaCmd {
    Refute {
        #[arg(long)]
        formula: String,
        #[arg(long, default_value_t = OmegaConfig::default().prefix_len_max)]
        prefix_max: usize,
    },
}

/// Error carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: USAGE,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    let mut body = text.to_string();
    if !body.ends_with('\n') {
        body.push('\n');
    }
    fs::write(path, body).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn formula_arg(text: &str) -> Result<Formula, Failure> {
    parse_formula(text).map_err(|e| usage(format!("bad formula: {e}")))
}

/// Parses argv (including the program name) and runs the command.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { OK };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "provd: {}", f.message);
            f.code
        }
    }
}

pub fn execute(cmd: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    let io = |e: std::io::Error| usage(e.to_string());
    match cmd {
        Command::Prove {
            calculus,
            cuts,
            emit_proof,
            emit_countermodel,
            sequent,
        } => {
            let calc: Calculus = calculus.into();
            let policy = match cuts {
                ProveCuts::None => CutPolicy::NoneAllowed,
                ProveCuts::Semi => CutPolicy::SemiAnalytic,
            };
            let s = parse_sequent(&sequent).map_err(|e| usage(format!("bad sequent: {e}")))?;
            let verdict = prove(&s, calc, policy).map_err(|e: ProverError| usage(e.to_string()))?;
            match verdict {
                Verdict::Provable(p) => {
                    let text = proof_to_string(&p, calc);
                    writeln!(out, "{text}").map_err(io)?;
                    if let Some(path) = emit_proof {
                        write(&path, &text)?;
                    }
                    Ok(OK)
                }
                Verdict::Unprovable(cert) => {
                    writeln!(out, "unprovable").map_err(io)?;
                    match cert {
                        None => {
                            writeln!(
                                out,
                                "no countermodel: cut-free dseq2 is incomplete, so failure here is not a semantic refutation"
                            )
                            .map_err(io)?;
                        }
                        Some(c) => {
                            let (model, world) = match extract_countermodel(&c) {
                                Countermodel::Plain { model, world } => (AnyModel::Plain(model), world),
                                Countermodel::Tail(tm) => (AnyModel::Tail(tm), "limit".to_string()),
                            };
                            writeln!(out, "countermodel ({}) falsifies the sequent at world {world}", c.kind_name())
                                .map_err(io)?;
                            let text = model.to_json();
                            writeln!(out, "{text}").map_err(io)?;
                            if let Some(path) = emit_countermodel {
                                write(&path, &text)?;
                            }
                        }
                    }
                    Ok(NO)
                }
            }
        }
        Command::CheckProof { file, cuts } => {
            let (calc, p) = proof_from_str(&read(&file)?).map_err(|e| usage(e.to_string()))?;
            let report = check_proof(&p, calc, cuts.into());
            writeln!(out, "{}", report_json(&report, calc)).map_err(io)?;
            Ok(if report.valid { OK } else { NO })
        }
        Command::ModelCheck {
            model,
            world,
            formula,
            eventually,
        } => {
            let m = ModelFile::parse(&read(&model)?).map_err(|e| usage(e.to_string()))?;
            let f = formula_arg(&formula)?;
            let truth = match (&m, eventually) {
                (AnyModel::Plain(k), false) => eval_at(k, &world, &f).map_err(|e| usage(e.to_string()))?,
                (AnyModel::Plain(_), true) => return Err(usage("--eventually needs a model with a tail")),
                (AnyModel::Tail(tm), false) => {
                    let at = tm.resolve(&world).map_err(|e| usage(e.to_string()))?;
                    tm.eval_ref(&at, &f)
                }
                (AnyModel::Tail(tm), true) => {
                    tm.resolve(&world).map_err(|e| usage(e.to_string()))?;
                    eval_tail_limit(tm, &f).eventually_always
                }
            };
            writeln!(out, "{truth}").map_err(io)?;
            Ok(if truth { OK } else { NO })
        }
        Command::Translate { from, to, file, out: dest } => translate(&from, &to, &read(&file)?, &dest, out),
        Command::HilbertCheck {
            system,
            file,
            require_subproofs,
        } => {
            let p = hilbert_from_str(&read(&file)?).map_err(|e| usage(e.to_string()))?;
            let sys: SystemId = system.into();
            if p.system != sys {
                return Err(usage(format!("file holds a {} proof, not {sys}", p.system)));
            }
            let r = check_hilbert_proof(&p, sys, CheckOptions { require_subproofs });
            match (r.valid, r.first_error) {
                (true, _) => {
                    let c = r.conclusion.map(|f| print_formula(&f)).unwrap_or_default();
                    writeln!(out, "valid: {c}").map_err(io)?;
                    Ok(OK)
                }
                (false, e) => {
                    let (i, msg) = e.unwrap_or_default();
                    writeln!(out, "invalid at line {i}: {msg}").map_err(io)?;
                    Ok(NO)
                }
            }
        }
        Command::Gllin {
            cmd: GllinCmd::Valid { formula, bound },
        } => {
            let f = formula_arg(&formula)?;
            let bound = bound.unwrap_or_else(|| default_bound(&f));
            if bound == 0 {
                return Err(usage("--bound must be at least 1"));
            }
            match gllin_valid(&f, bound) {
                v @ GlLinVerdict::ValidAtBound { .. } => {
                    writeln!(out, "{} {bound}", v.label()).map_err(io)?;
                    Ok(OK)
                }
                GlLinVerdict::Invalid { witness, world } => {
                    writeln!(out, "invalid at world {world} of a {}-world frame", witness.size()).map_err(io)?;
                    writeln!(out, "{}", AnyModel::Plain(witness.to_kripke()).to_json()).map_err(io)?;
                    Ok(NO)
                }
            }
        }
        Command::Omega {
            cmd: OmegaCmd::Refute { formula, prefix_max },
        } => {
            let f = formula_arg(&formula)?;
            let cfg = OmegaConfig {
                prefix_len_max: prefix_max,
                ..OmegaConfig::default()
            };
            match omega_refute_search(&f, &cfg) {
                OmegaVerdict::Refuted(tm) => {
                    writeln!(out, "refuted at world limit").map_err(io)?;
                    writeln!(out, "{}", AnyModel::Tail(tm).to_json()).map_err(io)?;
                    Ok(NO)
                }
                OmegaVerdict::NoCounterexampleFound => {
                    writeln!(out, "no-counterexample-found").map_err(io)?;
                    Ok(OK)
                }
            }
        }
        Command::Fuzz { seed, iters, size, vars } => {
            if vars == 0 {
                return Err(usage("--vars must be at least 1"));
            }
            let report = fuzz::fuzz_round(&fuzz::FuzzConfig {
                seed,
                iterations: iters,
                size,
                vars,
            });
            writeln!(out, "{}", report.to_json()).map_err(io)?;
            Ok(if report.anomalies() == 0 { OK } else { NO })
        }
    }
}

pub fn report_json(r: &ProofReport, calc: Calculus) -> String {
    let cuts: Vec<_> = r
        .cut_inventory
        .iter()
        .map(|c| serde_json::to_value(c).expect("cut entry serializes"))
        .collect();
    let errors: Vec<_> = r
        .errors
        .iter()
        .map(|(s, e)| json!({"sequent": s.to_string(), "error": e}))
        .collect();
    let v = json!({
        "calculus": calc.name(),
        "valid": r.valid,
        "end_sequent": r.end_sequent.to_string(),
        "subformula_ok": r.subformula_ok,
        "cuts": cuts,
        "errors": errors,
    });
    serde_json::to_string_pretty(&v).unwrap()
}

fn calc_named(name: &str) -> Option<Calculus> {
    Calculus::ALL.into_iter().find(|c| c.name() == name)
}

fn translate(from: &str, to: &str, input: &str, dest: &Path, out: &mut dyn Write) -> Result<i32, Failure> {
    let io = |e: std::io::Error| usage(e.to_string());
    let failed = |e: String| Failure { code: NO, message: e };
    // Hilbert-to-Hilbert.
    if let (Ok(a), Ok(b)) = (from.parse::<SystemId>(), to.parse::<SystemId>()) {
        let dir = match (a, b) {
            (SystemId::DH2, SystemId::DH) => Direction::D2ToD,
            (SystemId::DH, SystemId::DH2) => Direction::DToD2,
            _ => return Err(usage(format!("no translation from {from} to {to}"))),
        };
        let p = hilbert_from_str(input).map_err(|e| usage(e.to_string()))?;
        let q = translate_hilbert_d2_d(&p, dir).map_err(|e| failed(e.to_string()))?;
        write(dest, &hilbert_to_string(&q))?;
        writeln!(out, "{} lines written", q.lines.len()).map_err(io)?;
        return Ok(OK);
    }
    let src = calc_named(from).ok_or_else(|| usage(format!("unknown source {from:?}")))?;
    let (calc, p) = proof_from_str(input).map_err(|e| usage(e.to_string()))?;
    if calc != src {
        return Err(usage(format!("file holds a {} proof, not {from}", calc.name())));
    }
    if let Ok(sys) = to.parse::<SystemId>() {
        let want = match src {
            Calculus::GlSeq => SystemId::Glh,
            Calculus::SSeq => SystemId::SH,
            Calculus::DSeq2 => SystemId::DH2,
            Calculus::DSeq3 => SystemId::DH3,
        };
        if sys != want {
            return Err(usage(format!("no translation from {from} to {to}")));
        }
        let h = seq_proof_to_hilbert(&p, src).map_err(|e| failed(e.to_string()))?;
        write(dest, &hilbert_to_string(&h))?;
        writeln!(out, "{} lines written", h.lines.len()).map_err(io)?;
        return Ok(OK);
    }
    let dst = calc_named(to).ok_or_else(|| usage(format!("unknown target {to:?}")))?;
    let err = |e: provd_core::transforms::TransformError| failed(e.to_string());
    let proof = match (src, dst) {
        (Calculus::GlSeq, Calculus::DSeq2 | Calculus::DSeq3) => embed_gl_into_d(&p, dst).map_err(err)?,
        (Calculus::DSeq2 | Calculus::DSeq3, Calculus::SSeq) => project_d_to_s(&p, src).map_err(err)?,
        (Calculus::DSeq3, Calculus::DSeq2) => d3_to_d2(&p).map_err(err)?,
        (Calculus::DSeq2, Calculus::DSeq3) => {
            let o = d2_to_d3(&p).map_err(err)?;
            for s in &o.reduced {
                writeln!(out, "reduced: {s}").map_err(io)?;
            }
            for s in &o.reproved {
                writeln!(out, "reproved: {s}").map_err(io)?;
            }
            o.proof
        }
        _ => return Err(usage(format!("no translation from {from} to {to}"))),
    };
    write(dest, &proof_to_string(&proof, dst))?;
    writeln!(out, "{} nodes written", proof.size()).map_err(io)?;
    Ok(OK)
}
