//! Command-line front end: world generation, equalizer evaluation, accuracy
//! tables, simulations and target sweeps, all driven by a scenario JSON.
//!
//! Exit codes: 0 on success, 2 when the requested targets are infeasible,
//! 1 on any other error.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use semeq::allocator::AllocatorContext;
use semeq::config::ScenarioConfig;
use semeq::equalize::EqualizerMethod;
use semeq::error::{Error, Result};
use semeq::sim::{
    read_trace_csv, run_simulation, sweep, verify_slot_record, write_sweep_csv, write_trace_csv,
    SimulationAssets,
};
use semeq::world::{
    build_equalizer, evaluate_accuracy, generate_world, AnchorStrategy, CentroidDecoder, Side,
    WorldSpec,
};

#[derive(Parser)]
#[command(name = "semeq", version, about = "Frame-based semantic channel equalization and queue-driven uplink control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Scenario JSON; omit for the built-in three-user default.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArg {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut config = match &self.config {
            Some(path) => ScenarioConfig::load(path)?,
            None => ScenarioConfig::default_three_users(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic paired-embedding world and write it as EMB1.
    GenWorld {
        /// Output prefix; writes <prefix>_tx.emb1, <prefix>_rx.emb1,
        /// <prefix>_labels.csv.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 64)]
        dim_tx: usize,
        #[arg(long, default_value_t = 64)]
        dim_rx: usize,
        #[arg(long, default_value_t = 32)]
        classes: usize,
        #[arg(long, default_value_t = 4000)]
        samples: usize,
        #[arg(long, default_value_t = 0.25)]
        spread: f64,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Select anchors for one user's world and report the frame bounds of
    /// the resulting analysis operator.
    Anchors {
        #[command(flatten)]
        config: ConfigArg,
        /// User index within the scenario.
        #[arg(long, default_value_t = 0)]
        user: usize,
        /// Anchor count; defaults to the largest menu entry.
        #[arg(long)]
        n_anchors: Option<usize>,
    },
    /// Build one equalizer and report zero-shot accuracy on the validation
    /// split, quantized and unquantized.
    EqualizeEval {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = 0)]
        user: usize,
        /// Coefficient count; defaults to the largest menu entry.
        #[arg(long)]
        n_coeffs: Option<usize>,
        /// Quantizer bits for the quantized figure.
        #[arg(long, default_value_t = 8)]
        bits: u32,
        /// Equalizer family override (pfe, fe, upe).
        #[arg(long)]
        method: Option<EqualizerMethod>,
    },
    /// Evaluate the full (user, N, q) accuracy grid and write it as CSV.
    AccuracyTable {
        #[command(flatten)]
        config: ConfigArg,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Anchor strategy override (prototypical, uniform).
        #[arg(long)]
        strategy: Option<AnchorStrategy>,
    },
    /// Run the queue-driven simulation and write the slot trace as CSV.
    Simulate {
        #[command(flatten)]
        config: ConfigArg,
        /// Trace CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario slot count.
        #[arg(long)]
        slots: Option<usize>,
    },
    /// Rerun the scenario over a grid of latency and accuracy targets.
    Sweep {
        #[command(flatten)]
        config: ConfigArg,
        /// Latency targets in seconds, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        latency: Vec<f64>,
        /// Accuracy targets in [0, 1], comma separated, applied to all users.
        #[arg(long, value_delimiter = ',', required = true)]
        accuracy: Vec<f64>,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate and audit the per-slot drift inequality on every slot.
    VerifyBound {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        slots: Option<usize>,
    },
    /// Count how often each (N, q) pair was chosen in a trace CSV.
    Histogram {
        /// Trace CSV produced by `simulate`.
        #[arg(long)]
        trace: PathBuf,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // exit code 2 is reserved for infeasible constraints, so usage errors
    // must not fall through to clap's default exit(2)
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::FAILURE;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Infeasible(msg)) => {
            eprintln!("infeasible: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Writes through a file when a path is given, stdout otherwise.
fn with_output(out: Option<&PathBuf>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            f(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            f(&mut w)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenWorld {
            out,
            dim_tx,
            dim_rx,
            classes,
            samples,
            spread,
            noise,
            scale,
            seed,
        } => {
            let spec = WorldSpec {
                dim_tx,
                dim_rx,
                n_classes: classes,
                n_samples: samples,
                cluster_spread: spread,
                noise_sigma: noise,
                scale,
                seed,
            };
            let world = generate_world(&spec)?;
            world.export(&out)?;
            println!(
                "wrote {} samples ({} classes, {}x{} dims) under prefix {}",
                world.len(),
                world.n_classes(),
                world.dim_tx(),
                world.dim_rx(),
                out.display()
            );
            Ok(())
        }
        Command::Anchors { config, user, n_anchors } => {
            let config = config.load()?;
            let worlds = config.build_worlds()?;
            let world = worlds
                .get(user)
                .ok_or_else(|| Error::InvalidInput(format!("scenario has no user {user}")))?;
            let n = n_anchors.unwrap_or(*config.coeff_set.last().unwrap());
            let pair = build_equalizer(world, &config.table_plan(), user, n)?;
            let bounds = pair.pre_operator().frame_bounds();
            println!(
                "user {user}: {} anchors in {} dims, frame bounds A={:.6} B={:.6}, rank {}",
                pair.n_coeffs(),
                pair.dim_tx(),
                bounds.lower,
                bounds.upper,
                pair.pre_operator().rank()
            );
            Ok(())
        }
        Command::EqualizeEval { config, user, n_coeffs, bits, method } => {
            let mut config = config.load()?;
            if let Some(m) = method {
                config.method = m;
            }
            let worlds = config.build_worlds()?;
            let world = worlds
                .get(user)
                .ok_or_else(|| Error::InvalidInput(format!("scenario has no user {user}")))?;
            let decoder = CentroidDecoder::train(world, Side::Rx)?;
            let n = n_coeffs.unwrap_or(*config.coeff_set.last().unwrap());
            let pair = build_equalizer(world, &config.table_plan(), user, n)?;
            let clean = evaluate_accuracy(world, &decoder, &pair, n, 32)?;
            let quantized = evaluate_accuracy(world, &decoder, &pair, n, bits)?;
            println!(
                "user {user} method {} N {n}: accuracy {clean:.4} unquantized, {quantized:.4} at {bits} bits",
                config.method
            );
            Ok(())
        }
        Command::AccuracyTable { config, out, strategy } => {
            let mut config = config.load()?;
            if let Some(s) = strategy {
                config.anchor_strategy = s;
            }
            let assets = SimulationAssets::build(&config)?;
            with_output(out.as_ref(), |w| assets.table.write_csv(w))
        }
        Command::Simulate { config, out, slots } => {
            let mut config = config.load()?;
            if let Some(s) = slots {
                config.slots = s;
            }
            let outcome = run_simulation(&config)?;
            with_output(out.as_ref(), |w| write_trace_csv(&outcome.records, w))?;
            let s = &outcome.summary;
            eprintln!(
                "{} slots: mean latency {:.4} s (target {}), mean power {:.4} W, final Z {:.4}, fallback slots {}",
                s.slots, s.mean_latency_s, config.latency_target_s, s.mean_power_w,
                s.final_latency_queue, s.fallback_slots
            );
            for (u, g) in s.mean_accuracy.iter().enumerate() {
                eprintln!(
                    "  user {u}: mean accuracy {:.4} (target {})",
                    g, config.accuracy_targets[u]
                );
            }
            Ok(())
        }
        Command::Sweep { config, latency, accuracy, out } => {
            let config = config.load()?;
            let assets = SimulationAssets::build(&config)?;
            let cells = sweep(&config, &assets, &latency, &accuracy)?;
            with_output(out.as_ref(), |w| write_sweep_csv(&cells, w))?;
            if cells.iter().all(|c| c.summary.is_none()) {
                return Err(Error::Infeasible(
                    "every sweep cell exceeds the achievable accuracy".into(),
                ));
            }
            Ok(())
        }
        Command::VerifyBound { config, slots } => {
            let mut config = config.load()?;
            if let Some(s) = slots {
                config.slots = s;
            }
            let outcome = run_simulation(&config)?;
            let ctx = AllocatorContext {
                radio: &config.radio,
                devices: &config.devices,
                server: &config.server,
                table: &outcome.assets.table,
                n_set: &config.coeff_set,
                q_set: &config.quant_set,
                bandwidth_alpha: config.bandwidth_alpha,
                bandwidth_beta: config.bandwidth_beta,
                penalty_weight: config.penalty_weight,
            };
            let xi = {
                let ones = vec![1.0; config.n_users()];
                semeq::lyapunov::drift_bound_constant(
                    &config.queue_params(),
                    &config.queue_targets(),
                    ctx.worst_case_latency(),
                    &ones,
                )?
            };
            let params = config.queue_params();
            let targets = config.queue_targets();
            let mut violations = 0usize;
            for record in &outcome.records {
                if !verify_slot_record(&ctx, &params, &targets, xi, record)? {
                    violations += 1;
                    log::warn!("drift bound violated at slot {}", record.slot);
                }
            }
            println!(
                "{} slots audited, drift constant {:.6e}, violations {}",
                outcome.records.len(),
                xi,
                violations
            );
            if violations > 0 {
                return Err(Error::InvalidInput(format!(
                    "{violations} slots violate the drift bound"
                )));
            }
            Ok(())
        }
        Command::Histogram { trace, out } => {
            let (names, rows) = read_trace_csv(BufReader::new(File::open(&trace)?))?;
            let col = |name: &str| {
                names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| Error::InvalidInput(format!("trace has no column {name}")))
            };
            let mut users = 0usize;
            while names.iter().any(|n| *n == format!("n{users}")) {
                users += 1;
            }
            if users == 0 {
                return Err(Error::InvalidInput("trace has no per-user columns".into()));
            }
            let mut counts: Vec<std::collections::BTreeMap<(usize, u32), usize>> =
                vec![Default::default(); users];
            for row in &rows {
                for (u, user_counts) in counts.iter_mut().enumerate() {
                    let n = row[col(&format!("n{u}"))?] as usize;
                    let q = row[col(&format!("bits{u}"))?] as u32;
                    *user_counts.entry((n, q)).or_insert(0) += 1;
                }
            }
            with_output(out.as_ref(), |w| {
                writeln!(w, "user,N,q,count,share")?;
                for (u, user_counts) in counts.iter().enumerate() {
                    for (&(n, q), &c) in user_counts {
                        writeln!(w, "{u},{n},{q},{c},{}", c as f64 / rows.len() as f64)?;
                    }
                }
                Ok(())
            })
        }
    }
}
