#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use enclosure::experiment::{self as exp, RunOptions};
use enclosure::output::OutputDir;
use enclosure::{CliError, ExperimentConfig, Result};

const AFTER_HELP: &str = "\
Output files (CSV files start with '#' comment lines holding the tool version,
the config SHA-256 and any warnings, followed by a header row):

  mesh         mesh.txt, mesh.json
  indicator    indicator.csv: direction_angle,tau,t,re,im,abs,log_abs,status
               indicator.svg, indicator.json (slope fit per direction and t)
  reconstruct  support.csv: direction_angle,replaces_angle,regular,h_hat,
               tau_min,tau_max,slope,intercept,r_squared,mu_hat,h_bisection,
               h_true,trusted,slope_status,bisection_status
               hull.csv: x,y    hull.svg, reconstruct.json
  verify       verify.json (weak-form residuals, representation check, gates)
  oracle       oracle.csv: mode,theta_q,fem_re,fem_im,oracle_re,oracle_im,
               rel_error,pass

Exit codes: 0 success, 2 configuration or mesh file error, 3 numerical
failure, 4 verification failure.";

#[derive(Parser, Debug)]
#[command(name = "enclosure", version, about = "Convex hull reconstruction of conductivity inclusions from boundary data")]
#[command(after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (JSON). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Seed for the randomized verification test function.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Debug: reverse the interface normals in the representation check.
    #[arg(long, global = true, hide = true)]
    flip_normals: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Generate and validate the mesh.
    Mesh,
    /// Indicator sweeps over tau for the configured directions and offsets.
    Indicator,
    /// Support function estimates, convex hull and Hausdorff error.
    Reconstruct,
    /// Weak-form and representation-formula checks of the dipole solution.
    Verify,
    /// FEM against the concentric-disk series solution.
    Oracle,
}

fn run(cli: &Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let experiment = config.validate()?;
    for w in experiment.warnings() {
        eprintln!("{w}");
    }
    let opts = RunOptions {
        jobs: cli.jobs,
        flip_normals: cli.flip_normals,
    };
    let mut out = OutputDir::create(&experiment.config.output_dir)?;
    let result = match cli.command {
        Command::Mesh => {
            let d = exp::cmd_mesh(&experiment, &mut out)?;
            println!(
                "mesh: {} nodes, {} triangles, min angle {:.2} deg",
                d.nodes, d.triangles, d.min_angle_deg
            );
            Ok(())
        }
        Command::Indicator => {
            let r = exp::run_indicator(&experiment, &opts)?;
            exp::write_indicator(&experiment, &r, &mut out)?;
            for (angle, t, e) in &r.estimates {
                match e {
                    Ok(e) => println!("direction {angle:.4} t {t:.4}: h_hat {:.6} slope {:.6}", e.h_hat, e.slope),
                    Err(err) => println!("direction {angle:.4} t {t:.4}: {err}"),
                }
            }
            if r.all_below_noise {
                println!("no inclusion detected");
            }
            Ok(())
        }
        Command::Reconstruct => {
            let r = exp::run_reconstruct(&experiment, &opts)?;
            exp::write_reconstruct(&experiment, &r, &mut out)?;
            if !r.detected {
                println!("no inclusion detected");
            } else {
                match &r.hull {
                    Some(Ok(h)) => println!("hull: {} vertices", h.len()),
                    Some(Err(e)) => println!("hull: {e}"),
                    None => {}
                }
                if let Some(d) = r.hausdorff {
                    println!(
                        "hausdorff distance {d:.6} (tolerance {})",
                        experiment.config.tolerances.hausdorff
                    );
                }
            }
            Ok(())
        }
        Command::Verify => {
            let r = exp::run_verify(&experiment, &opts)?;
            exp::write_verify(&experiment, &r, &opts, &mut out)?;
            for g in &r.gates {
                let status = if g.pass { "PASS" } else { "FAIL" };
                println!("{status} {}: {:.4e} (tolerance {:.4e})", g.name, g.value, g.tolerance);
            }
            if r.passed() {
                Ok(())
            } else {
                Err(CliError::Verification("verification gates failed".into()))
            }
        }
        Command::Oracle => {
            let rows = exp::run_oracle(&experiment)?;
            exp::write_oracle(&experiment, &rows, &mut out)?;
            let tol = experiment.config.tolerances.oracle_rel;
            for r in &rows {
                println!("mode {}: relative error {:.3e}", r.mode, r.rel_error);
            }
            match rows.iter().find(|r| !(r.rel_error <= tol)) {
                Some(r) => Err(CliError::Verification(format!(
                    "oracle mode {} relative error {:.3e} exceeds {tol:.1e}",
                    r.mode, r.rel_error
                ))),
                None => Ok(()),
            }
        }
    };
    for path in out.written() {
        println!("wrote {}", path.display());
    }
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
