//! phasebound: analyze finite phase data, enumerate deformations, build
//! moduli, and run the invariant self-test.
//!
//! Exit codes: 0 success, 1 self-test failure, 2 validation error,
//! 3 size-cap violation, 4 internal invariant breach.

use clap::{Parser, Subcommand};
use phasebound_core::{
    apply_deformation, build_report_with, deformation_from_pattern, enumerate_deformations,
    moduli_groupoid, rigidity_island, run_selftest, Error, PhaseConfig, PhaseData,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "phasebound",
    version,
    about = "boundary calculus for finite phase data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full analysis pipeline on a config file.
    Analyze {
        path: PathBuf,
        /// Emit the report as JSON (default).
        #[arg(long, conflicts_with = "text")]
        json: bool,
        /// Emit the human-readable report.
        #[arg(long)]
        text: bool,
        /// Seed for randomized invariance checks.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Enumerate or apply boundary deformations.
    Deform {
        path: PathBuf,
        /// List all activation patterns with their lift counts.
        #[arg(long, conflicts_with = "apply")]
        enumerate: bool,
        /// Apply the deformation given by an activation bitstring.
        #[arg(long, value_name = "PATTERN")]
        apply: Option<String>,
        #[arg(long, conflicts_with = "text")]
        json: bool,
        #[arg(long)]
        text: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build the moduli groupoid of a family of configs.
    Moduli {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Run the bundled invariant suite.
    Selftest {
        /// Restrict to one module (ring, phase, operator, boundary, deform, report).
        #[arg(long)]
        filter: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidConfig { .. }
        | Error::MismatchedRings { .. }
        | Error::NotQuadratic { .. }
        | Error::NotBiadditive { .. }
        | Error::NotAnIsland
        | Error::LiftOutOfRange { .. } => 2,
        Error::SizeCap { .. } | Error::SignatureTooLarge { .. } => 3,
        Error::Internal(_) => 4,
    }
}

fn load(path: &PathBuf) -> Result<(PhaseConfig, PhaseData), Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidConfig {
        field: path.display().to_string(),
        message: e.to_string(),
    })?;
    let config = PhaseConfig::from_json(&text)?;
    let data = config.to_phase_data()?;
    Ok((config, data))
}

fn run() -> Result<(), Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Analyze {
            path,
            json: _,
            text,
            seed,
        } => {
            let (config, data) = load(&path)?;
            let mut options = config.analysis_options();
            if let Some(seed) = seed {
                options.seed = seed;
            }
            let report = build_report_with(&config, &data, &options)?;
            if text {
                print!("{}", report.to_text());
            } else {
                println!("{}", report.to_json()?);
            }
            Ok(())
        }
        Command::Deform {
            path,
            enumerate,
            apply,
            json: _,
            text,
            seed,
        } => {
            let (config, data) = load(&path)?;
            let mut options = config.analysis_options();
            if let Some(seed) = seed {
                options.seed = seed;
            }
            match apply {
                None => {
                    // --enumerate is the default action
                    let _ = enumerate;
                    let deformations = enumerate_deformations(&data);
                    let lifts_per_stratum = (data.space().p() - 1) as usize;
                    let listing: Vec<serde_json::Value> = deformations
                        .iter()
                        .map(|d| {
                            serde_json::json!({
                                "pattern": d.pattern_string(),
                                "kind": d.kind(),
                                "lifts": d.lifts,
                                "strata": d.strata,
                            })
                        })
                        .collect();
                    let doc = serde_json::json!({
                        "schema": "phasebound-deformations/1",
                        "count": deformations.len(),
                        "lifts_per_stratum": lifts_per_stratum,
                        "deformations": listing,
                    });
                    println!("{}", serde_json::to_string_pretty(&doc).unwrap());
                    Ok(())
                }
                Some(pattern) => {
                    let deformation = deformation_from_pattern(&data, &pattern)?;
                    let deformed = apply_deformation(&data, &deformation)?;
                    // island preservation is asserted, not assumed
                    let base_island = rigidity_island(&data)?;
                    let new_island = rigidity_island(&deformed)?;
                    if base_island != new_island {
                        return Err(Error::Internal(
                            "deformation failed to preserve the rigidity island".into(),
                        ));
                    }
                    let report = build_report_with(&config, &deformed, &options)?;
                    if text {
                        print!("{}", report.to_text());
                    } else {
                        println!("{}", report.to_json()?);
                    }
                    Ok(())
                }
            }
        }
        Command::Moduli { paths } => {
            let mut family = Vec::new();
            let mut sources = Vec::new();
            let mut signature_cap = usize::MAX;
            for path in &paths {
                let (config, data) = load(path)?;
                signature_cap = signature_cap.min(config.analysis_options().signature_cap);
                family.push(data);
                sources.push(path.display().to_string());
            }
            let groupoid = moduli_groupoid(&family, signature_cap)?;
            let doc = serde_json::json!({
                "schema": "phasebound-moduli/1",
                "sources": sources,
                "objects": groupoid.objects,
                "morphisms": groupoid.morphisms,
                "class_count": groupoid.class_count,
            });
            println!("{}", serde_json::to_string_pretty(&doc).unwrap());
            Ok(())
        }
        Command::Selftest { filter, seed } => {
            let outcomes = run_selftest(filter.as_deref(), seed);
            if outcomes.is_empty() {
                return Err(Error::InvalidConfig {
                    field: "--filter".into(),
                    message: format!("no checks match {filter:?}"),
                });
            }
            let mut failed = Vec::new();
            for o in &outcomes {
                let status = if o.passed { "pass" } else { "FAIL" };
                println!("{status}  {:<10} {}", o.module, o.name);
                if let Some(msg) = &o.message {
                    println!("      {msg}");
                }
                if !o.passed {
                    failed.push(o.name);
                }
            }
            if failed.is_empty() {
                println!("selftest: {} checks passed", outcomes.len());
                Ok(())
            } else {
                println!("selftest: violated invariants: {}", failed.join(", "));
                std::process::exit(1);
            }
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
