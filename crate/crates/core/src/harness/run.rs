//! Scenario execution.

use std::path::PathBuf;
use std::time::Instant;

use crate::engine::Engine;
use crate::error::{DpdError, Result};
use crate::harness::config::Scenario;
use crate::harness::output::{thermo_line, write_profile, xyz_frame, TextSink, ThermoRow, THERMO_HEADER};
use crate::harness::stats::{chain_clusters, estimate_viscosity, ProfileAccumulator, ProfileObserver, ProfileSample, ViscosityFit};
use crate::system::{init_random, BondTopology};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub domains: Option<[usize; 3]>,
    pub seed: Option<u32>,
    pub steps: Option<u64>,
    /// Echo thermo lines to stderr.
    pub verbose: bool,
}

impl RunOptions {
    /// The scenario with command-line overrides applied.
    pub fn apply(&self, sc: &Scenario) -> Result<Scenario> {
        let mut sc = sc.clone();
        if let Some(w) = self.workers {
            sc.run.workers = w;
        }
        if let Some(d) = self.domains {
            sc.run.domains = d;
        }
        if let Some(s) = self.seed {
            sc.run.seed = s;
        }
        if let Some(n) = self.steps {
            sc.run.steps = n;
        }
        sc.run.validate()?;
        Ok(sc)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub n_particles: usize,
    pub steps: u64,
    pub thermo: Vec<ThermoRow>,
    pub profiles: Vec<ProfileSample>,
    pub viscosity: Option<ViscosityFit>,
    /// `(step, molecules in the largest cluster)`.
    pub clusters: Vec<(u64, usize)>,
    pub stopped_early: bool,
    pub seconds: f64,
    /// Million particle-steps per second of the stepping loop.
    pub mps: f64,
}

/// Random initial particles and bonds for a scenario.
pub fn initial_state(sc: &Scenario) -> Result<(crate::system::ParticleStore, BondTopology)> {
    init_random(
        &sc.bx,
        sc.density,
        &sc.fractions,
        sc.chain.as_ref(),
        sc.params.kbt,
        sc.run.seed,
    )
}

/// Set up an engine at step 0.
pub fn prepare(sc: &Scenario) -> Result<(Engine, BondTopology)> {
    let (store, top) = initial_state(sc)?;
    let e = Engine::new(sc.bx, sc.params.clone(), sc.run.clone(), store, &top)?;
    Ok((e, top))
}

/// A fresh engine continuing from `e`'s particles with another seed. The
/// step count restarts at zero.
pub fn reseed(e: &Engine, top: &BondTopology, seed: u32) -> Result<Engine> {
    let mut cfg = e.cfg.clone();
    cfg.seed = seed;
    Engine::new(e.bx, e.params.clone(), cfg, e.gather(), top)
}

fn to_step(t: f64, dt: f64) -> u64 {
    (t / dt).round().max(0.0) as u64
}

fn profile_windows(sc: &Scenario, start: u64, end: u64) -> Vec<ProfileAccumulator> {
    let Some(p) = &sc.profile else {
        return Vec::new();
    };
    let dt = sc.params.dt;
    let fold = sc.run.body_force.is_some_and(|b| b.partition_axis == p.axis && b.drive_axis == p.drive);
    let acc = |first: u64, last: u64| {
        ProfileAccumulator::new(&sc.bx, p.axis, p.drive, p.bins, fold).with_window(first, last, p.every, dt)
    };
    if p.times.is_empty() {
        vec![acc(start.max(to_step(p.from, dt)).max(1), end)]
    } else {
        p.times
            .iter()
            .map(|&t| acc(to_step(t - p.half_width, dt).max(1), to_step(t + p.half_width, dt)))
            .collect()
    }
}

/// Fit the viscosity of a folded steady profile of a double channel.
pub fn fit_double_channel(sc: &Scenario, p: &ProfileSample) -> Option<ViscosityFit> {
    let bf = sc.run.body_force?;
    let ax = bf.partition_axis;
    let mid = 0.5 * (sc.bx.lo[ax] + sc.bx.hi[ax]);
    let d = 0.5 * sc.bx.length(ax);
    // the folded bins hold the upper channel, driven by -g
    Some(estimate_viscosity(p, mid, -bf.g, sc.density, d))
}

/// Run `sc` from scratch.
pub fn run(sc: &Scenario, opts: &RunOptions) -> Result<RunReport> {
    let sc = opts.apply(sc)?;
    let (mut e, _) = prepare(&sc)?;
    drive(&mut e, &sc, opts)
}

/// Advance `e` by `sc.run.steps`, sampling and writing outputs as configured.
pub fn drive(e: &mut Engine, sc: &Scenario, opts: &RunOptions) -> Result<RunReport> {
    let start = e.step();
    let end = start + sc.run.steps;
    let dt = sc.params.dt;
    let mut report = RunReport {
        n_particles: e.n_particles(),
        ..Default::default()
    };
    if let Some(d) = &opts.out_dir {
        std::fs::create_dir_all(d).map_err(|x| DpdError::io(d, x))?;
    }
    let mut thermo_sink = match &opts.out_dir {
        Some(d) => {
            let mut s = TextSink::create(&d.join("thermo.csv"))?;
            s.line(THERMO_HEADER)?;
            Some(s)
        }
        None => None,
    };
    let mut traj = match (&opts.out_dir, sc.run.dump_every) {
        (Some(d), n) if n > 0 => Some(TextSink::create(&d.join("trajectory.xyz"))?),
        _ => None,
    };

    let mut emit = |e: &Engine, report: &mut RunReport| -> Result<()> {
        let row = ThermoRow::new(e.step(), dt, &e.kinetic())?;
        if let Some(s) = thermo_sink.as_mut() {
            s.line(&thermo_line(&row))?;
        }
        if opts.verbose {
            eprintln!("{}", thermo_line(&row));
        }
        report.thermo.push(row);
        Ok(())
    };
    emit(e, &mut report)?;
    if let Some(t) = traj.as_mut() {
        t.line(xyz_frame(&e.gather(), &sc.species, &format!("step {start}")).trim_end())?;
    }

    let mut obs: Vec<ProfileObserver> = (0..e.n_domains())
        .map(|_| ProfileObserver {
            accs: profile_windows(sc, start, end),
        })
        .collect();
    let every = |n: u64| if n == 0 { u64::MAX } else { n };
    let cadences = [
        every(sc.run.thermo_every),
        every(sc.run.dump_every),
        sc.cluster.as_ref().map_or(u64::MAX, |c| c.every),
    ];
    let t0 = Instant::now();
    while e.step() < end {
        let s = e.step();
        let next = cadences
            .iter()
            .map(|&c| if c == u64::MAX { u64::MAX } else { (s / c + 1) * c })
            .min()
            .unwrap()
            .min(end);
        e.run_with(next - s, &mut obs)?;
        let s = e.step();
        if s % cadences[0] == 0 || s == end {
            emit(e, &mut report)?;
        }
        if s % cadences[1] == 0 {
            if let Some(t) = traj.as_mut() {
                t.line(xyz_frame(&e.gather(), &sc.species, &format!("step {s}")).trim_end())?;
            }
        }
        if let Some(c) = &sc.cluster {
            if s % c.every == 0 {
                let largest = chain_clusters(&e.gather(), &sc.bx, c.species, c.contact)
                    .first()
                    .copied()
                    .unwrap_or(0);
                report.clusters.push((s, largest));
                if opts.verbose {
                    eprintln!("step {s}: largest cluster {largest} chains");
                }
                if c.stop_above.is_some_and(|m| largest > m) {
                    report.stopped_early = true;
                    break;
                }
            }
        }
    }
    report.seconds = t0.elapsed().as_secs_f64();
    report.steps = e.step() - start;
    report.mps = if report.seconds > 0.0 {
        report.n_particles as f64 * report.steps as f64 / report.seconds / 1e6
    } else {
        0.0
    };

    if let Some((first, rest)) = obs.split_first_mut() {
        for o in rest.iter() {
            for (a, b) in first.accs.iter_mut().zip(&o.accs) {
                a.merge(b);
            }
        }
        report.profiles = first.accs.iter().map(|a| a.sample()).collect();
    }
    if sc.profile.as_ref().is_some_and(|p| p.times.is_empty()) {
        if let Some(p) = report.profiles.first() {
            report.viscosity = fit_double_channel(sc, p);
        }
    }

    if let Some(d) = &opts.out_dir {
        if let Some(s) = thermo_sink.as_mut() {
            s.flush()?;
        }
        if let Some(t) = traj.as_mut() {
            t.flush()?;
        }
        for (i, p) in report.profiles.iter().enumerate() {
            write_profile(&d.join(format!("profile_{i}.csv")), p)?;
        }
        if e.step() % sc.run.rebuild_every == 0 {
            e.write_restart(&d.join("restart.bin"))?;
        }
    }
    Ok(report)
}
