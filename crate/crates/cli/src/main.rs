//! Command-line front end: load states, channels, and stochastic maps from
//! JSON, run retrodiction computations, and emit machine-readable results.
//!
//! Exit codes: 0 on success, 2 when an input fails validation, 3 when a
//! mathematical precondition of the requested operation fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use retrodiction::algebra::State;
use retrodiction::channel::Channel;
use retrodiction::dilation::{
    absolutely_continuous, canonical_purification, derived_dilation, dilationally_equal,
    dilationally_equal_empirical, factor_dilation, Dilation,
};
use retrodiction::error::Error;
use retrodiction::finstoch::{bayes_inverse, jeffrey_update};
use retrodiction::json;
use retrodiction::retrodict::{
    check_axioms, check_classical_axioms, jeffrey_update_quantum, petz_extended, AxiomConfig,
    ClassicalAxiomConfig, StatePreservingMorphism,
};
use retrodiction::Tolerance;

#[derive(Parser)]
#[command(name = "retro", about = "Bayesian inversion and Petz recovery for states and channels", version)]
struct Cli {
    /// Frobenius-norm tolerance for equality checks and validation.
    #[arg(long, global = true)]
    abs_eps: Option<f64>,
    /// Relative eigenvalue cutoff for rank decisions.
    #[arg(long, global = true)]
    eig_cut: Option<f64>,
    /// Write the JSON result here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bayesian inverse of a stochastic map against a prior distribution.
    Bayes {
        /// Column-stochastic matrix, {"stoch": [[...]]}.
        #[arg(long)]
        stoch: PathBuf,
        /// Prior distribution, {"prob": [...]}.
        #[arg(long)]
        prior: PathBuf,
    },
    /// Extended Petz recovery of a channel against a prior state.
    Petz {
        /// Prior state document.
        #[arg(long)]
        state: PathBuf,
        /// Channel document.
        #[arg(long)]
        channel: PathBuf,
    },
    /// Jeffrey update: push soft evidence backwards through the recovery
    /// map. Classical with --stoch/--prior, quantum with --state/--channel.
    Jeffrey(JeffreyArgs),
    /// Decide dilational equality of two channels at a state.
    AeEqual {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        channel2: PathBuf,
        /// Cross-check by sampling dilations instead of the support
        /// criterion.
        #[arg(long)]
        empirical: bool,
        #[arg(long, default_value_t = 12)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Absolute continuity of one state with respect to another.
    AbsCont {
        /// The dominated state (the evidence).
        #[arg(long)]
        state: PathBuf,
        /// The dominating state (the prediction).
        #[arg(long)]
        state2: PathBuf,
    },
    /// Canonical purification of a state, optionally pushed through a
    /// channel on the environment.
    Dilate {
        #[arg(long)]
        state: PathBuf,
        /// Channel from the canonical environment; omitted means the
        /// purification itself.
        #[arg(long)]
        channel: Option<PathBuf>,
    },
    /// Factor a dilation through the canonical purification.
    Factor {
        /// Base state document.
        #[arg(long)]
        state: PathBuf,
        /// Environment algebra document.
        #[arg(long)]
        env: PathBuf,
        /// Joint state document on base ⊗ environment.
        #[arg(long)]
        joint: PathBuf,
    },
    /// Run the retrodiction-law suite on seeded random instances.
    CheckAxioms {
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Check Bayesian inversion on stochastic maps instead of the
        /// extended Petz recovery on channels.
        #[arg(long)]
        classical: bool,
        /// Run trials on a single thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Parse and validate a document, reporting its kind.
    Validate {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Args)]
struct JeffreyArgs {
    #[arg(long, requires = "prior", conflicts_with_all = ["state", "channel"])]
    stoch: Option<PathBuf>,
    #[arg(long)]
    prior: Option<PathBuf>,
    #[arg(long, requires = "channel")]
    state: Option<PathBuf>,
    #[arg(long)]
    channel: Option<PathBuf>,
    /// Soft evidence on the prediction side: {"prob": [...]} classically, a
    /// state document quantumly.
    #[arg(long)]
    evidence: PathBuf,
}

/// Failures while reading or validating inputs exit with code 2; violated
/// mathematical preconditions of an otherwise valid request exit with 3.
enum CliError {
    Validation(String),
    Precondition(String),
}

impl CliError {
    fn from_compute(e: Error) -> Self {
        if e.is_precondition() {
            CliError::Precondition(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

fn validation(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let tol = match Tolerance::new(
        cli.abs_eps.unwrap_or(Tolerance::default().abs_eps),
        cli.eig_cut.unwrap_or(Tolerance::default().eig_cut_rel),
    ) {
        Ok(tol) => tol,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    match run(&cli, tol) {
        Ok(output) => {
            if let Some(path) = &cli.out {
                if let Err(e) = std::fs::write(path, &output) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            } else {
                println!("{output}");
            }
            ExitCode::SUCCESS
        }
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Precondition(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| validation(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| validation(format!("cannot parse {}: {e}", path.display())))
}

fn load_state(path: &Path, tol: Tolerance) -> Result<State, CliError> {
    let doc: json::ElementDoc = read_json(path)?;
    json::state_from_doc(&doc, tol).map_err(validation)
}

fn load_channel(path: &Path, tol: Tolerance) -> Result<Channel, CliError> {
    let doc: json::ChannelDoc = read_json(path)?;
    json::channel_from_doc(&doc, tol).map_err(validation)
}

fn to_pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable output")
}

fn seed_or_env(seed: Option<u64>) -> u64 {
    seed.or_else(|| {
        std::env::var("RETRO_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(0)
}

fn element_residual(a: &retrodiction::Element, b: &retrodiction::Element) -> f64 {
    a.sub(b)
        .map(|d| d.norm() / 1.0_f64.max(a.norm()).max(b.norm()))
        .unwrap_or(f64::INFINITY)
}

#[derive(Serialize)]
struct PetzOutput {
    channel: json::ChannelBody,
    recovery_residual: f64,
}

#[derive(Serialize)]
struct EqualOutput {
    equal: bool,
    criterion: &'static str,
}

#[derive(Serialize)]
struct AbsContOutput {
    absolutely_continuous: bool,
}

#[derive(Serialize)]
struct DilateOutput {
    environment: json::AlgebraBody,
    joint: json::ElementDoc,
    marginal_residual: f64,
}

#[derive(Serialize)]
struct FactorOutput {
    channel: json::ChannelBody,
    reconstruction_residual: f64,
}

#[derive(Serialize)]
struct ValidateOutput {
    valid: bool,
    kind: String,
}

fn run(cli: &Cli, tol: Tolerance) -> Result<String, CliError> {
    match &cli.command {
        Command::Bayes { stoch, prior } => {
            let f = json::stoch_from_doc(&read_json(stoch)?).map_err(validation)?;
            let p = json::prob_from_doc(&read_json(prior)?).map_err(validation)?;
            let inverse = bayes_inverse(&f, &p).map_err(CliError::from_compute)?;
            Ok(to_pretty(&json::stoch_to_doc(&inverse)))
        }
        Command::Petz { state, channel } => {
            let prior = load_state(state, tol)?;
            let e = load_channel(channel, tol)?;
            let morphism = StatePreservingMorphism::new(prior.clone(), e, tol)
                .map_err(CliError::from_compute)?;
            let recovery = petz_extended(&morphism, tol).map_err(CliError::from_compute)?;
            let rep = recovery.representative();
            let recovered = rep
                .channel()
                .apply(morphism.prediction().element())
                .map_err(CliError::from_compute)?;
            Ok(to_pretty(&PetzOutput {
                channel: json::channel_to_doc(rep.channel()).channel,
                recovery_residual: element_residual(&recovered, prior.element()),
            }))
        }
        Command::Jeffrey(args) => run_jeffrey(args, tol),
        Command::AeEqual {
            state,
            channel,
            channel2,
            empirical,
            trials,
            seed,
        } => {
            let alpha = load_state(state, tol)?;
            let e = load_channel(channel, tol)?;
            let f = load_channel(channel2, tol)?;
            let (equal, criterion) = if *empirical {
                (
                    dilationally_equal_empirical(
                        e.as_map(),
                        f.as_map(),
                        &alpha,
                        *trials,
                        seed_or_env(*seed),
                        tol,
                    )
                    .map_err(CliError::from_compute)?,
                    "empirical",
                )
            } else {
                (
                    dilationally_equal(e.as_map(), f.as_map(), &alpha, tol)
                        .map_err(CliError::from_compute)?,
                    "support-projection",
                )
            };
            Ok(to_pretty(&EqualOutput { equal, criterion }))
        }
        Command::AbsCont { state, state2 } => {
            let eps = load_state(state, tol)?;
            let beta = load_state(state2, tol)?;
            let result =
                absolutely_continuous(&eps, &beta, tol).map_err(CliError::from_compute)?;
            Ok(to_pretty(&AbsContOutput {
                absolutely_continuous: result,
            }))
        }
        Command::Dilate { state, channel } => {
            let alpha = load_state(state, tol)?;
            let dilation = match channel {
                None => canonical_purification(&alpha, tol).map_err(CliError::from_compute)?,
                Some(path) => {
                    let g = load_channel(path, tol)?;
                    derived_dilation(&alpha, &g, tol).map_err(CliError::from_compute)?
                }
            };
            Ok(to_pretty(&DilateOutput {
                environment: json::algebra_to_body(dilation.environment()),
                joint: json::state_to_doc(dilation.joint()),
                marginal_residual: dilation.marginal_residual(),
            }))
        }
        Command::Factor { state, env, joint } => {
            let alpha = load_state(state, tol)?;
            let env_doc: json::AlgebraDoc = read_json(env)?;
            let environment = json::algebra_from_body(&env_doc.algebra).map_err(validation)?;
            let joint_state = load_state(joint, tol)?;
            let dilation = Dilation::new(alpha.clone(), environment, joint_state, tol)
                .map_err(CliError::from_compute)?;
            let g = factor_dilation(&dilation, tol).map_err(CliError::from_compute)?;
            let rebuilt = derived_dilation(&alpha, &g, tol).map_err(CliError::from_compute)?;
            Ok(to_pretty(&FactorOutput {
                channel: json::channel_to_doc(&g).channel,
                reconstruction_residual: element_residual(
                    rebuilt.joint().element(),
                    dilation.joint().element(),
                ),
            }))
        }
        Command::CheckAxioms {
            trials,
            seed,
            classical,
            sequential,
        } => {
            let seed = seed_or_env(*seed);
            let report = if *classical {
                let config = ClassicalAxiomConfig {
                    trials: *trials,
                    seed,
                    parallel: !*sequential,
                    ..ClassicalAxiomConfig::default()
                };
                check_classical_axioms(&config).map_err(CliError::from_compute)?
            } else {
                let config = AxiomConfig {
                    trials: *trials,
                    seed,
                    tolerance: tol,
                    parallel: !*sequential,
                    ..AxiomConfig::default()
                };
                check_axioms(&config).map_err(CliError::from_compute)?
            };
            Ok(to_pretty(&report))
        }
        Command::Validate { input } => {
            let value: serde_json::Value = read_json(input)?;
            let kind = validate_document(&value, tol)?;
            Ok(to_pretty(&ValidateOutput { valid: true, kind }))
        }
    }
}

fn run_jeffrey(args: &JeffreyArgs, tol: Tolerance) -> Result<String, CliError> {
    match (&args.stoch, &args.prior, &args.state, &args.channel) {
        (Some(stoch), Some(prior), None, None) => {
            let f = json::stoch_from_doc(&read_json(stoch)?).map_err(validation)?;
            let p = json::prob_from_doc(&read_json(prior)?).map_err(validation)?;
            let e = json::prob_from_doc(&read_json(&args.evidence)?).map_err(validation)?;
            let updated = jeffrey_update(&f, &p, &e).map_err(CliError::from_compute)?;
            Ok(to_pretty(&json::prob_to_doc(&updated)))
        }
        (None, None, Some(state), Some(channel)) => {
            let prior = load_state(state, tol)?;
            let e = load_channel(channel, tol)?;
            let evidence = load_state(&args.evidence, tol)?;
            let morphism =
                StatePreservingMorphism::new(prior, e, tol).map_err(CliError::from_compute)?;
            let updated = jeffrey_update_quantum(&morphism, &evidence, tol)
                .map_err(CliError::from_compute)?;
            Ok(to_pretty(&json::state_to_doc(&updated)))
        }
        _ => Err(validation(
            "jeffrey needs either --stoch with --prior (classical) or --state with --channel (quantum)",
        )),
    }
}

fn validate_document(value: &serde_json::Value, tol: Tolerance) -> Result<String, CliError> {
    let object = value
        .as_object()
        .ok_or_else(|| validation("document must be a JSON object"))?;
    if object.contains_key("prob") {
        let doc: json::ProbDoc = serde_json::from_value(value.clone()).map_err(validation)?;
        json::prob_from_doc(&doc).map_err(validation)?;
        Ok("prob".into())
    } else if object.contains_key("stoch") {
        let doc: json::StochDoc = serde_json::from_value(value.clone()).map_err(validation)?;
        json::stoch_from_doc(&doc).map_err(validation)?;
        Ok("stoch".into())
    } else if object.contains_key("channel") {
        let doc: json::ChannelDoc = serde_json::from_value(value.clone()).map_err(validation)?;
        json::channel_from_doc(&doc, tol).map_err(validation)?;
        Ok("channel".into())
    } else if object.contains_key("element") {
        let doc: json::ElementDoc = serde_json::from_value(value.clone()).map_err(validation)?;
        if doc.state == Some(true) {
            json::state_from_doc(&doc, tol).map_err(validation)?;
            Ok("state".into())
        } else {
            json::element_from_doc(&doc).map_err(validation)?;
            Ok("element".into())
        }
    } else if object.contains_key("algebra") {
        let doc: json::AlgebraDoc = serde_json::from_value(value.clone()).map_err(validation)?;
        json::algebra_from_body(&doc.algebra).map_err(validation)?;
        Ok("algebra".into())
    } else {
        Err(validation(
            "unrecognized document: expected one of prob, stoch, algebra, element, channel",
        ))
    }
}
