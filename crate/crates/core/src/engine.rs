//! The stepping loop over one or more domains.
//!
//! Each domain owns the particles in its slab plus a ghost halo and keeps its
//! own padded cell grid, neighbour table and worker pool. Domains talk only
//! through a [`Transport`]; with several domains each runs on its own thread.
//!
//! Step `s`: half kick and drift, then either a rebuild (when
//! `(s - 1) % rebuild_every == 0`) or a ghost refresh, then forces, then the
//! second half kick.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::domain::{
    border_determination, decompose, exchange_full, exchange_update, migrate_strays, ChannelTransport, DomainGrid,
    GhostLayout, SendList, Transport,
};
use crate::error::{DpdError, Result};
use crate::forces::{bond_forces, compute_pair_forces_tag_ordered, resolve_bonds, BondIndex, BondList, TagOrder};
use crate::integrate::{apply_body_force, verlet_step, verlet_step_unwrapped, wrap_positions, StepPhase};
use crate::neighbor::{build_coarse_stencil, build_neighbor_table, expand_fine_stencil, CoarseStencil, NeighborTable};
use crate::rng::PairRandomState;
use crate::sort::{sort_keys, CellGrid};
use crate::system::{BondTopology, KineticSums, PairParams, Particle, ParticleStore, RunConfig, SimBox};

/// Per-step hook run inside every domain after the second half kick.
pub trait Observer: Send {
    /// `store[..nl]` are the domain's own particles.
    fn observe(&mut self, step: u64, store: &ParticleStore, nl: usize);
}

impl Observer for () {
    fn observe(&mut self, _: u64, _: &ParticleStore, _: usize) {}
}

/// Kinetic sums of the local particles at every step.
#[derive(Debug, Clone, Default)]
pub struct KineticTrace {
    pub every: u64,
    pub samples: Vec<(u64, KineticSums)>,
}

impl KineticTrace {
    pub fn new(every: u64) -> Self {
        Self {
            every: every.max(1),
            samples: Vec::new(),
        }
    }

    /// Element-wise combination of per-domain traces, in the given order.
    pub fn merge(parts: &[KineticTrace]) -> Vec<(u64, KineticSums)> {
        let mut out = parts.first().map(|p| p.samples.clone()).unwrap_or_default();
        for p in &parts[1.min(parts.len())..] {
            for (a, b) in out.iter_mut().zip(&p.samples) {
                a.1 = a.1.combine(&b.1);
            }
        }
        out
    }
}

impl Observer for KineticTrace {
    fn observe(&mut self, step: u64, store: &ParticleStore, nl: usize) {
        if step % self.every == 0 {
            self.samples.push((step, KineticSums::of_range(store, nl)));
        }
    }
}

/// Mutable state of one domain.
pub struct DomainState {
    pub rank: usize,
    pub store: ParticleStore,
    pub nl: usize,
    pub grid: CellGrid,
    coarse: CoarseStencil,
    pub table: Option<NeighborTable>,
    order: TagOrder,
    sends: Vec<SendList>,
    layout: GhostLayout,
    bonds: BondList,
    pool: Arc<rayon::ThreadPool>,
}

/// Read-only data shared by all domains.
struct Shared<'a> {
    dgrid: &'a DomainGrid,
    params: &'a PairParams,
    cfg: &'a RunConfig,
    bonds: &'a BondIndex,
    bx: &'a SimBox,
}

impl DomainState {
    fn locals(&self) -> &ParticleStore {
        &self.store
    }

    fn rebuild(&mut self, sh: &Shared, t: &dyn Transport, step: u64) -> Result<()> {
        let reach = sh.params.rc + sh.cfg.skin;
        self.store.truncate(self.nl);
        migrate_strays(&mut self.store, sh.dgrid, t, step)?;
        let keys = (0..self.store.len())
            .map(|i| self.grid.local_key(self.store.tag[i], self.store.pos(i)))
            .collect::<Result<Vec<_>>>()?;
        let bits = self.grid.key_bits();
        let ro = sort_keys(keys, bits);
        self.store = self.store.gather(&ro.order);
        self.nl = self.store.len();
        let mut keys = ro.keys;

        self.sends = border_determination(&self.store, self.nl, sh.dgrid, self.rank, reach);
        let (ghosts, mut layout) = exchange_full(&self.store, &self.sends, sh.dgrid, t, step)?;
        let gkeys: Vec<u32> = ghosts.iter().map(|(p, o)| self.grid.ghost_key(p.coord, *o)).collect();
        let gro = sort_keys(gkeys, bits);
        layout.perm = gro.new_of_old.iter().map(|&n| self.nl + n).collect();
        for &old in &gro.order {
            self.store.push(ghosts[old].0);
        }
        keys.extend_from_slice(&gro.keys);
        self.layout = layout;

        self.grid.build_cell_list(&keys)?;
        let fine = expand_fine_stencil(&self.coarse, &self.grid);
        self.table = Some(build_neighbor_table(
            &self.store,
            &self.grid,
            &fine,
            sh.params.rc,
            sh.cfg.skin,
            sh.cfg.max_neighbors,
        )?);
        self.order = TagOrder::new(self.table.as_ref().unwrap(), &self.store);
        self.bonds = resolve_bonds(&self.store, self.nl, sh.bonds, None)?;
        Ok(())
    }

    fn forces(&mut self, sh: &Shared, step: u64) -> Result<()> {
        self.store.update_signatures();
        assert!(self.table.is_some(), "forces before first rebuild");
        compute_pair_forces_tag_ordered(
            &mut self.store,
            &self.order,
            sh.params,
            None,
            &PairRandomState::new(sh.cfg.seed, step),
        )?;
        bond_forces(&mut self.store, &self.bonds, None);
        if let Some(bf) = &sh.cfg.body_force {
            apply_body_force(&mut self.store, self.nl, bf, sh.bx);
        }
        Ok(())
    }

    fn setup(&mut self, sh: &Shared, t: &dyn Transport, step: u64) -> Result<()> {
        self.rebuild(sh, t, step)?;
        self.forces(sh, step)
    }

    fn step(&mut self, sh: &Shared, t: &dyn Transport, s: u64) -> Result<()> {
        let dt = sh.params.dt;
        let r = sh.cfg.rebuild_every;
        // periodic wrapping waits for the rebuild; ghosts refer to the old side
        if (s - 1) % r == 0 {
            verlet_step(&mut self.store, self.nl, dt, StepPhase::Phase1, sh.bx, sh.cfg.wall_mode)?;
            self.rebuild(sh, t, s)?;
        } else {
            verlet_step_unwrapped(&mut self.store, self.nl, dt, StepPhase::Phase1, sh.bx, sh.cfg.wall_mode)?;
            exchange_update(&mut self.store, &self.sends, &self.layout, t, s)?;
        }
        self.forces(sh, s)?;
        verlet_step(&mut self.store, self.nl, dt, StepPhase::Phase2, sh.bx, sh.cfg.wall_mode)?;
        if s % r == 0 {
            // restart points hold wrapped coordinates
            wrap_positions(&mut self.store, self.nl, sh.bx);
        }
        Ok(())
    }
}

/// A decomposed simulation.
pub struct Engine {
    pub bx: SimBox,
    pub params: PairParams,
    pub cfg: RunConfig,
    pub dgrid: DomainGrid,
    pub domains: Vec<DomainState>,
    bonds: Arc<BondIndex>,
    step: u64,
    n_total: usize,
}

fn domain_states(bx: &SimBox, params: &PairParams, cfg: &RunConfig, dgrid: &DomainGrid, stores: Vec<ParticleStore>) -> Result<Vec<DomainState>> {
    let reach = params.rc + cfg.skin;
    stores
        .into_iter()
        .enumerate()
        .map(|(rank, store)| {
            let (lo, hi) = dgrid.slab(rank);
            let grid = CellGrid::padded(lo, hi, reach, cfg.sub_bits, bx.center())?;
            let coarse = build_coarse_stencil(&grid);
            let pool = Arc::new(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(cfg.workers.max(1))
                    .build()
                    .map_err(|e| DpdError::InvalidInput(e.to_string()))?,
            );
            Ok(DomainState {
                rank,
                nl: store.len(),
                store,
                grid,
                coarse,
                table: None,
                order: TagOrder::default(),
                sends: Vec::new(),
                layout: GhostLayout::default(),
                bonds: BondList::default(),
                pool,
            })
        })
        .collect()
}

fn n_tags(stores: &[ParticleStore]) -> usize {
    stores
        .iter()
        .flat_map(|s| s.tag.iter())
        .map(|&t| t as usize + 1)
        .max()
        .unwrap_or(0)
}

impl Engine {
    /// Distribute `store` over `cfg.domains`, then exchange ghosts, build the
    /// neighbour tables and compute the initial forces.
    pub fn new(bx: SimBox, params: PairParams, cfg: RunConfig, store: ParticleStore, topology: &BondTopology) -> Result<Self> {
        cfg.validate()?;
        let dgrid = decompose(&bx, cfg.domains, params.rc + cfg.skin)?;
        let mut stores: Vec<ParticleStore> = (0..dgrid.n_domains()).map(|_| ParticleStore::default()).collect();
        for i in 0..store.len() {
            let mut p = store.get(i);
            for k in 0..3 {
                if bx.periodic[k] {
                    p.coord[k] = crate::integrate::wrap_periodic(p.coord[k], bx.lo[k], bx.hi[k]);
                } else if !(p.coord[k] >= bx.lo[k] && p.coord[k] <= bx.hi[k]) {
                    return Err(DpdError::OutsideGrid { tag: p.tag, pos: p.coord });
                }
            }
            stores[dgrid.owner(p.coord)].push(p);
        }
        Self::assemble(bx, params, cfg, dgrid, stores, topology, 0, true)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        bx: SimBox,
        params: PairParams,
        cfg: RunConfig,
        dgrid: DomainGrid,
        stores: Vec<ParticleStore>,
        topology: &BondTopology,
        step: u64,
        setup: bool,
    ) -> Result<Self> {
        let n_total = stores.iter().map(|s| s.len()).sum();
        let bonds = Arc::new(BondIndex::new(topology, n_tags(&stores)));
        let domains = domain_states(&bx, &params, &cfg, &dgrid, stores)?;
        let mut e = Self {
            bx,
            params,
            cfg,
            dgrid,
            domains,
            bonds,
            step,
            n_total,
        };
        if setup {
            let mut obs: Vec<()> = vec![(); e.domains.len()];
            e.drive(&mut obs, |d, sh, t, _| d.setup(sh, t, step).map_err(|x| x.at_step(step)))?;
        }
        Ok(e)
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn n_particles(&self) -> usize {
        self.n_total
    }

    pub fn n_domains(&self) -> usize {
        self.domains.len()
    }

    /// Run `f` once per domain, concurrently when there are several.
    fn drive<O, F>(&mut self, obs: &mut [O], f: F) -> Result<()>
    where
        O: Observer,
        F: Fn(&mut DomainState, &Shared, &dyn Transport, &mut O) -> Result<()> + Sync,
    {
        assert_eq!(obs.len(), self.domains.len(), "one observer per domain");
        let sh = Shared {
            dgrid: &self.dgrid,
            params: &self.params,
            cfg: &self.cfg,
            bonds: &self.bonds,
            bx: &self.bx,
        };
        let mesh = ChannelTransport::mesh(self.domains.len());
        if self.domains.len() == 1 {
            let d = &mut self.domains[0];
            let t = &mesh[0];
            let o = &mut obs[0];
            let pool = d.pool.clone();
            return pool.install(|| f(d, &sh, t, o));
        }
        let results: Vec<Result<()>> = std::thread::scope(|s| {
            let handles: Vec<_> = self
                .domains
                .iter_mut()
                .zip(mesh)
                .zip(obs.iter_mut())
                .map(|((d, t), o)| {
                    let (sh, f) = (&sh, &f);
                    s.spawn(move || {
                        let pool = d.pool.clone();
                        let r = pool.install(|| f(d, sh, &t, o));
                        drop(t);
                        r
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("domain thread panicked")).collect()
        });
        let mut first: Option<DpdError> = None;
        for r in results {
            if let Err(e) = r {
                let secondary = matches!(&e, DpdError::Transport(_))
                    || matches!(&e, DpdError::AtStep { source, .. } if matches!(**source, DpdError::Transport(_)));
                if first.is_none() || (!secondary && first.as_ref().is_some_and(|f| f.category() == "communication")) {
                    first = Some(e);
                }
            }
        }
        first.map_or(Ok(()), Err)
    }

    /// Advance `n` steps, calling each domain's observer after every step.
    pub fn run_with<O: Observer>(&mut self, n: u64, obs: &mut [O]) -> Result<()> {
        let start = self.step;
        self.drive(obs, |d, sh, t, o| {
            for s in start + 1..=start + n {
                d.step(sh, t, s).map_err(|e| e.at_step(s))?;
                o.observe(s, &d.store, d.nl);
            }
            Ok(())
        })?;
        self.step += n;
        Ok(())
    }

    pub fn run(&mut self, n: u64) -> Result<()> {
        let mut obs = vec![(); self.domains.len()];
        self.run_with(n, &mut obs)
    }

    /// All owned particles, sorted by tag.
    pub fn particles(&self) -> Vec<Particle> {
        let mut v: Vec<Particle> = self
            .domains
            .iter()
            .flat_map(|d| (0..d.nl).map(move |i| d.store.get(i)))
            .collect();
        for p in v.iter_mut() {
            for k in 0..3 {
                if self.bx.periodic[k] {
                    p.coord[k] = crate::integrate::wrap_periodic(p.coord[k], self.bx.lo[k], self.bx.hi[k]);
                }
            }
        }
        v.sort_by_key(|p| p.tag);
        v
    }

    /// Owned particles of every domain as one store, domains in rank order.
    pub fn gather(&self) -> ParticleStore {
        let mut out = ParticleStore::with_capacity(self.n_total);
        for d in &self.domains {
            let mut s = d.locals().clone();
            s.truncate(d.nl);
            out.append(&s);
        }
        let n = out.len();
        wrap_positions(&mut out, n, &self.bx);
        out
    }

    pub fn kinetic(&self) -> KineticSums {
        self.domains
            .iter()
            .map(|d| KineticSums::of_range(&d.store, d.nl))
            .fold(KineticSums::default(), |a, b| a.combine(&b))
    }

    /// Per-domain neighbour tables from the last rebuild.
    pub fn tables(&self) -> Vec<Option<&NeighborTable>> {
        self.domains.iter().map(|d| d.table.as_ref()).collect()
    }

    /// Binary restart: owned particles of every domain in storage order.
    /// Only valid at multiples of the rebuild interval.
    pub fn write_restart(&self, path: &Path) -> Result<()> {
        if self.step % self.cfg.rebuild_every != 0 {
            return Err(DpdError::Config(format!(
                "restart at step {} is not a multiple of the rebuild interval {}",
                self.step, self.cfg.rebuild_every
            )));
        }
        let f = std::fs::File::create(path).map_err(|e| DpdError::io(path, e))?;
        let mut w = BufWriter::new(f);
        let mut buf = Vec::new();
        buf.extend_from_slice(RESTART_MAGIC);
        buf.extend_from_slice(&RESTART_VERSION.to_le_bytes());
        buf.extend_from_slice(&self.step.to_le_bytes());
        buf.extend_from_slice(&self.cfg.seed.to_le_bytes());
        for d in self.cfg.domains {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for d in &self.domains {
            buf.extend_from_slice(&(d.nl as u64).to_le_bytes());
            for i in 0..d.nl {
                let p = d.store.get(i);
                buf.extend_from_slice(&p.tag.to_le_bytes());
                buf.push(p.species);
                buf.extend_from_slice(&p.molecule.to_le_bytes());
                for v in [p.coord, p.veloc, p.force] {
                    for x in v {
                        buf.extend_from_slice(&x.to_le_bytes());
                    }
                }
            }
        }
        w.write_all(&buf).map_err(|e| DpdError::io(path, e))?;
        w.flush().map_err(|e| DpdError::io(path, e))
    }

    /// Resume from [`Engine::write_restart`]. The seed and domain grid must
    /// match. Forces come from the file, so the first step needs no setup.
    pub fn read_restart(path: &Path, bx: SimBox, params: PairParams, cfg: RunConfig, topology: &BondTopology) -> Result<Self> {
        cfg.validate()?;
        let f = std::fs::File::open(path).map_err(|e| DpdError::io(path, e))?;
        let mut bytes = Vec::new();
        BufReader::new(f).read_to_end(&mut bytes).map_err(|e| DpdError::io(path, e))?;
        let bad = |m: &str| DpdError::Config(format!("{}: {m}", path.display()));
        let mut r = Cursor { b: &bytes, at: 0 };
        if r.take(4).ok_or_else(|| bad("truncated"))? != RESTART_MAGIC {
            return Err(bad("not a restart file"));
        }
        let version = r.u32().ok_or_else(|| bad("truncated"))?;
        if version != RESTART_VERSION {
            return Err(bad(&format!("unsupported restart version {version}")));
        }
        let step = r.u64().ok_or_else(|| bad("truncated"))?;
        let seed = r.u32().ok_or_else(|| bad("truncated"))?;
        if seed != cfg.seed {
            return Err(bad(&format!("restart seed {seed} differs from configured seed {}", cfg.seed)));
        }
        let mut dims = [0usize; 3];
        for d in &mut dims {
            *d = r.u32().ok_or_else(|| bad("truncated"))? as usize;
        }
        if dims != cfg.domains {
            return Err(bad(&format!("restart domain grid {dims:?} differs from {:?}", cfg.domains)));
        }
        if step % cfg.rebuild_every != 0 {
            return Err(bad("restart step is not a multiple of the rebuild interval"));
        }
        let dgrid = decompose(&bx, cfg.domains, params.rc + cfg.skin)?;
        let mut stores = Vec::with_capacity(dgrid.n_domains());
        for _ in 0..dgrid.n_domains() {
            let n = r.u64().ok_or_else(|| bad("truncated"))? as usize;
            let mut s = ParticleStore::with_capacity(n);
            for _ in 0..n {
                let p = (|| {
                    let tag = r.u32()?;
                    let species = r.take(1)?[0];
                    let molecule = r.u32()?;
                    let mut v = [0.0; 9];
                    for x in &mut v {
                        *x = f64::from_le_bytes(r.take(8)?.try_into().ok()?);
                    }
                    Some(Particle {
                        tag,
                        species,
                        molecule,
                        coord: [v[0], v[1], v[2]],
                        veloc: [v[3], v[4], v[5]],
                        force: [v[6], v[7], v[8]],
                    })
                })()
                .ok_or_else(|| bad("truncated"))?;
                s.push(p);
            }
            stores.push(s);
        }
        if r.at != bytes.len() {
            return Err(bad("trailing bytes"));
        }
        Self::assemble(bx, params, cfg, dgrid, stores, topology, step, false)
    }
}

const RESTART_MAGIC: &[u8; 4] = b"DPDR";
const RESTART_VERSION: u32 = 1;

struct Cursor<'a> {
    b: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let s = self.b.get(self.at..self.at + n)?;
        self.at += n;
        Some(s)
    }
    fn u32(&mut self) -> Option<u32> {
        Some(u32::from_le_bytes(self.take(4)?.try_into().ok()?))
    }
    fn u64(&mut self) -> Option<u64> {
        Some(u64::from_le_bytes(self.take(8)?.try_into().ok()?))
    }
}
