use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dpd_core::engine::Engine;
use dpd_core::harness::{drive, initial_state, parse_config, prepare, RunOptions};
use dpd_core::verify::criteria::{run_criterion, NAMES};
use dpd_core::verify::sweep::{self, Kernel, SweepPoint};
use dpd_core::{DpdError, Result};

#[derive(Parser)]
#[command(name = "dpd", version, about = "Deterministic dissipative particle dynamics")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario file.
    Run {
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        /// Domain grid, e.g. 2x2x1.
        #[arg(long, value_parser = parse_domains)]
        domains: Option<[usize; 3]>,
        #[arg(long)]
        seed: Option<u32>,
        #[arg(long)]
        steps: Option<u64>,
        /// Output directory for thermo, trajectory, profiles and restart.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Continue from a restart file written by an earlier run.
        #[arg(long)]
        restart: Option<PathBuf>,
        #[arg(short, long)]
        verbose: bool,
    },
    /// Error sweep of a fast kernel against the extended-precision reference.
    UlpSweep {
        /// fastlog, fastcos2pi, fastpow, exp2_frac or log2_frac.
        kernel: String,
        /// Random samples (fastpow and the helpers) or extra random inputs
        /// (32-bit kernels).
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        /// Spacing of the regular grid over the 32-bit inputs.
        #[arg(long, default_value_t = 4096)]
        stride: u32,
        /// Base range for fastpow, e.g. 1e-10:2.
        #[arg(long, default_value = "1e-10:2")]
        base: String,
        /// Exponent range for fastpow.
        #[arg(long, default_value = "0.25:3")]
        exponent: String,
        #[arg(long, default_value_t = 1)]
        seed: u32,
        /// Write every point as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        histogram: bool,
    },
    /// Throughput of a scenario in million particle-steps per second.
    Bench {
        config: PathBuf,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_parser = parse_domains)]
        domains: Option<[usize; 3]>,
    },
    /// Acceptance checks: `all`, `quick`, or numbers such as `4,5,9`.
    Verify {
        #[arg(default_value = "quick")]
        suite: String,
    },
}

fn parse_domains(s: &str) -> std::result::Result<[usize; 3], String> {
    let v: Vec<usize> = s
        .split(['x', 'X', ','])
        .map(|p| p.trim().parse().map_err(|_| format!("bad domain count '{p}'")))
        .collect::<std::result::Result<_, _>>()?;
    v.try_into().map_err(|_| "expected three counts, e.g. 2x2x1".to_string())
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let bad = || DpdError::InvalidInput(format!("bad range '{s}', expected lo:hi"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = a.trim().parse().map_err(|_| bad())?;
    let hi: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(lo < hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn exit_code(e: &DpdError) -> u8 {
    match e.category() {
        "config" => 2,
        "io" => 3,
        "communication" => 5,
        _ => 4,
    }
}

fn cmd_run(
    config: PathBuf,
    opts: RunOptions,
    restart: Option<PathBuf>,
) -> Result<()> {
    let sc = opts.apply(&parse_config(&config)?)?;
    let mut e = match &restart {
        Some(p) => {
            let (_, top) = initial_state(&sc)?;
            Engine::read_restart(p, sc.bx, sc.params.clone(), sc.run.clone(), &top)?
        }
        None => prepare(&sc)?.0,
    };
    let r = drive(&mut e, &sc, &opts)?;
    println!(
        "{} particles, {} steps in {:.1} s ({:.3} MPS)",
        r.n_particles, r.steps, r.seconds, r.mps
    );
    if let Some(t) = r.thermo.last() {
        println!("final kBT {:.4}", t.kbt);
    }
    if let Some(v) = &r.viscosity {
        println!("viscosity {:.4} +- {:.4}", v.mu, v.stderr);
        if let Some(w) = &v.warning {
            println!("warning: {w}");
        }
    }
    if let Some((s, n)) = r.clusters.last() {
        println!(
            "largest cluster {n} chains at step {s}{}",
            if r.stopped_early { " (stopped)" } else { "" }
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    kernel: &str,
    samples: u64,
    stride: u32,
    base: &str,
    exponent: &str,
    seed: u32,
    csv: Option<PathBuf>,
    histogram: bool,
) -> Result<()> {
    let k = Kernel::parse(kernel).ok_or_else(|| DpdError::InvalidInput(format!("unknown kernel '{kernel}'")))?;
    let mut out = match &csv {
        Some(p) => {
            let f = std::fs::File::create(p).map_err(|e| DpdError::Io {
                path: p.clone(),
                source: e,
            })?;
            let mut w = std::io::BufWriter::new(f);
            writeln!(w, "{}", sweep::CSV_HEADER).ok();
            Some(w)
        }
        None => None,
    };
    let mut ulps = Vec::new();
    let mut sink = |p: &SweepPoint| {
        if let Some(w) = out.as_mut() {
            writeln!(w, "{}", sweep::csv_row(p)).ok();
        }
        if histogram {
            ulps.push(p.ulp_error);
        }
    };
    let st = match k {
        Kernel::Log | Kernel::Cos => {
            let inputs = sweep::u32_inputs(stride, samples, seed);
            if k == Kernel::Log {
                sweep::sweep_log(&inputs, &mut sink)
            } else {
                sweep::sweep_cos(&inputs, &mut sink)
            }
        }
        Kernel::Pow => sweep::sweep_pow(samples, parse_range(base)?, parse_range(exponent)?, seed, &mut sink),
        Kernel::Exp2Frac | Kernel::Log2Frac => sweep::sweep_helper(k, samples, seed, &mut sink),
    };
    if let Some(w) = out.as_mut() {
        w.flush().ok();
    }
    println!("{}: {} samples", k.name(), st.samples);
    println!("max ulp error {:.3}", st.max_ulp);
    match k {
        Kernel::Log => println!("max relative error {:.3e} (bound {:.2e})", st.max_error, sweep::LOG_BOUND),
        Kernel::Cos => println!(
            "max error {:.3e} (bound {:.2e}; absolute where |cos| <= {})",
            st.max_error,
            sweep::COS_BOUND,
            sweep::COS_ROOT_BAND
        ),
        _ => {}
    }
    if let Some(w) = st.worst {
        println!(
            "worst: input {} exponent {} output {:e} oracle {:e}",
            w.input, w.exponent, w.output, w.oracle
        );
    }
    if histogram {
        for (edge, n) in sweep::ulp_histogram(ulps) {
            println!(">= {edge:<7} {n}");
        }
    }
    Ok(())
}

fn cmd_bench(config: PathBuf, opts: RunOptions) -> Result<()> {
    let mut sc = opts.apply(&parse_config(&config)?)?;
    sc.run.thermo_every = 0;
    sc.run.dump_every = 0;
    sc.profile = None;
    sc.cluster = None;
    let (mut e, _) = prepare(&sc)?;
    let r = drive(&mut e, &sc, &RunOptions::default())?;
    println!(
        "{} particles, {} steps, {} workers, domains {:?}: {:.2} s, {:.3} MPS",
        r.n_particles, r.steps, sc.run.workers, sc.run.domains, r.seconds, r.mps
    );
    Ok(())
}

fn cmd_verify(suite: &str) -> Result<bool> {
    let ids: Vec<u8> = match suite {
        "all" => (1..=NAMES.len() as u8).collect(),
        "quick" => vec![4, 5, 6, 7, 8, 9],
        s => s
            .split(',')
            .map(|x| {
                let x = x.trim().trim_start_matches(['C', 'c']);
                x.parse::<u8>()
                    .ok()
                    .filter(|n| (1..=NAMES.len() as u8).contains(n))
                    .ok_or_else(|| DpdError::InvalidInput(format!("unknown criterion '{x}'")))
            })
            .collect::<Result<_>>()?,
    };
    let mut ok = true;
    for id in ids {
        let r = run_criterion(id);
        println!("{r}");
        ok &= r.pass;
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Run {
            config,
            workers,
            domains,
            seed,
            steps,
            out,
            restart,
            verbose,
        } => cmd_run(
            config,
            RunOptions {
                out_dir: out,
                workers,
                domains,
                seed,
                steps,
                verbose,
            },
            restart,
        )
        .map(|_| true),
        Cmd::UlpSweep {
            kernel,
            samples,
            stride,
            base,
            exponent,
            seed,
            csv,
            histogram,
        } => cmd_sweep(&kernel, samples, stride, &base, &exponent, seed, csv, histogram).map(|_| true),
        Cmd::Bench {
            config,
            steps,
            workers,
            domains,
        } => cmd_bench(
            config,
            RunOptions {
                workers,
                domains,
                steps,
                ..Default::default()
            },
        )
        .map(|_| true),
        Cmd::Verify { suite } => cmd_verify(&suite),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error ({}): {e}", e.category());
            ExitCode::from(exit_code(&e))
        }
    }
}
