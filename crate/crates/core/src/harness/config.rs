//! Scenario files.
//!
//! TOML syntax with a fixed set of sections and keys. Every unknown key and
//! every missing required key is reported, all at once.

use std::collections::BTreeSet;
use std::path::Path;

use toml::{Table, Value};

use crate::error::{DpdError, Result};
use crate::system::{BodyForce, ChainSpec, PairParams, RunConfig, SimBox, WallMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    PoiseuilleSteady,
    PoiseuilleTransient,
    Quiescent,
    SelfAssembly,
    Benchmark,
}

impl ScenarioKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "poiseuille_steady" => Self::PoiseuilleSteady,
            "poiseuille_transient" => Self::PoiseuilleTransient,
            "quiescent" => Self::Quiescent,
            "self_assembly" => Self::SelfAssembly,
            "benchmark" => Self::Benchmark,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::PoiseuilleSteady => "poiseuille_steady",
            Self::PoiseuilleTransient => "poiseuille_transient",
            Self::Quiescent => "quiescent",
            Self::SelfAssembly => "self_assembly",
            Self::Benchmark => "benchmark",
        }
    }
}

/// Velocity profile sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSpec {
    /// Axis the bins run along.
    pub axis: usize,
    /// Velocity component averaged.
    pub drive: usize,
    pub bins: usize,
    /// Window centres in time units. Empty means one window from `from` to the end.
    pub times: Vec<f64>,
    pub half_width: f64,
    /// Start of the averaging window when `times` is empty.
    pub from: f64,
    /// Steps between samples inside a window.
    pub every: u64,
}

/// Aggregation tracking for self-assembly runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSpec {
    /// Species index counted as solvophobic.
    pub species: u8,
    /// Contact distance.
    pub contact: f64,
    pub every: u64,
    /// Stop once the largest cluster holds more chains than this.
    pub stop_above: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub bx: SimBox,
    pub density: f64,
    /// One letter per species, used in trajectory files.
    pub species: Vec<char>,
    /// Species fractions of the free (non-chain) particles.
    pub fractions: Vec<f64>,
    pub params: PairParams,
    pub chain: Option<ChainSpec>,
    pub run: RunConfig,
    pub profile: Option<ProfileSpec>,
    pub cluster: Option<ClusterSpec>,
}

impl Scenario {
    pub fn n_particles(&self) -> usize {
        (self.density * self.bx.volume()).round() as usize
    }

    pub fn time(&self, step: u64) -> f64 {
        step as f64 * self.params.dt
    }
}

const KEYS: &[(&str, &[&str])] = &[
    ("", &["name"]),
    ("box", &["lengths", "boundary"]),
    ("fluid", &["density", "kbt", "dt", "rc", "s", "species", "fractions"]),
    ("pair", &["a", "sigma", "gamma"]),
    ("chain", &["sequence", "fraction", "k", "r0"]),
    (
        "run",
        &[
            "steps",
            "rebuild_every",
            "skin",
            "seed",
            "workers",
            "domains",
            "max_neighbors",
            "sub_bits",
            "thermo_every",
            "dump_every",
            "wall_mode",
        ],
    ),
    ("body_force", &["g", "drive_axis", "partition_axis"]),
    ("profile", &["axis", "drive", "bins", "times", "half_width", "from", "every"]),
    ("cluster", &["species", "contact", "every", "stop_above"]),
];

const REQUIRED: &[&str] = &[
    "name",
    "box.lengths",
    "fluid.density",
    "fluid.kbt",
    "fluid.dt",
    "pair.a",
    "run.steps",
];

/// Flattened `section.key` view of a table, with type-checked getters.
struct Doc {
    items: Vec<(String, Value)>,
}

fn cerr(msg: impl Into<String>) -> DpdError {
    DpdError::Config(msg.into())
}

impl Doc {
    fn new(t: Table) -> Result<Self> {
        let mut items = Vec::new();
        let mut unknown = Vec::new();
        let sections: BTreeSet<&str> = KEYS.iter().map(|(s, _)| *s).filter(|s| !s.is_empty()).collect();
        for (k, v) in t {
            match v {
                Value::Table(sub) if sections.contains(k.as_str()) => {
                    let allowed = KEYS.iter().find(|(s, _)| *s == k).unwrap().1;
                    for (kk, vv) in sub {
                        if allowed.contains(&kk.as_str()) {
                            items.push((format!("{k}.{kk}"), vv));
                        } else {
                            unknown.push(format!("{k}.{kk}"));
                        }
                    }
                }
                _ if k == "name" => items.push((k, v)),
                _ => unknown.push(k),
            }
        }
        let missing: Vec<&str> = REQUIRED
            .iter()
            .copied()
            .filter(|r| !items.iter().any(|(k, _)| k == r))
            .collect();
        let pair_strength = items.iter().any(|(k, _)| k == "pair.sigma" || k == "pair.gamma");
        let mut msgs = Vec::new();
        if !unknown.is_empty() {
            msgs.push(format!("unknown keys: {}", unknown.join(", ")));
        }
        if !missing.is_empty() || !pair_strength {
            let mut m: Vec<String> = missing.iter().map(|s| s.to_string()).collect();
            if !pair_strength {
                m.push("pair.sigma or pair.gamma".into());
            }
            msgs.push(format!("missing required keys: {}", m.join(", ")));
        }
        if !msgs.is_empty() {
            return Err(cerr(msgs.join("; ")));
        }
        Ok(Self { items })
    }

    fn get(&self, key: &str) -> Option<&Value> {
        self.items.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    fn has(&self, key: &str) -> bool {
        self.get(key).is_some()
    }

    fn f64_of(key: &str, v: &Value) -> Result<f64> {
        match v {
            Value::Float(x) => Ok(*x),
            Value::Integer(i) => Ok(*i as f64),
            _ => Err(cerr(format!("{key}: expected a number"))),
        }
    }

    fn f64(&self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.get(key) {
            Some(v) => Self::f64_of(key, v),
            None => default.ok_or_else(|| cerr(format!("missing required key {key}"))),
        }
    }

    fn u64(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            Some(Value::Integer(i)) if *i >= 0 => Ok(*i as u64),
            Some(_) => Err(cerr(format!("{key}: expected a non-negative integer"))),
            None => Ok(default),
        }
    }

    fn str(&self, key: &str) -> Result<Option<&str>> {
        match self.get(key) {
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(cerr(format!("{key}: expected a string"))),
            None => Ok(None),
        }
    }

    fn f64s(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get(key) {
            Some(Value::Array(a)) => a.iter().map(|v| Self::f64_of(key, v)).collect::<Result<Vec<_>>>().map(Some),
            Some(v) => Self::f64_of(key, v).map(|x| Some(vec![x])),
            None => Ok(None),
        }
    }

    /// A square matrix given as rows, or a single number for one species.
    fn matrix(&self, key: &str, n: usize) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.get(key) else {
            return Ok(None);
        };
        let out = match v {
            Value::Array(rows) if rows.iter().all(|r| r.is_array()) => {
                let mut out = Vec::new();
                for r in rows {
                    for x in r.as_array().unwrap() {
                        out.push(Self::f64_of(key, x)?);
                    }
                }
                if rows.len() != n || out.len() != n * n {
                    return Err(cerr(format!("{key}: expected a {n}x{n} matrix")));
                }
                out
            }
            v => {
                let x = Self::f64_of(key, v)?;
                vec![x; n * n]
            }
        };
        Ok(Some(out))
    }

    fn axis(&self, key: &str, default: usize) -> Result<usize> {
        match self.str(key)? {
            None => Ok(default),
            Some("x") => Ok(0),
            Some("y") => Ok(1),
            Some("z") => Ok(2),
            Some(s) => Err(cerr(format!("{key}: axis must be x, y or z, got {s:?}"))),
        }
    }
}

/// Parse a scenario file.
pub fn parse_config(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| DpdError::io(path, e))?;
    parse_config_str(&text).map_err(|e| match e {
        DpdError::Config(m) => DpdError::Config(format!("{}: {m}", path.display())),
        e => e,
    })
}

pub fn parse_config_str(text: &str) -> Result<Scenario> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| cerr(e.message().to_string()))?;
    let d = Doc::new(table)?;

    let name = d.str("name")?.unwrap_or_default();
    let kind = ScenarioKind::parse(name).ok_or_else(|| cerr(format!("name: unknown scenario {name:?}")))?;

    let lengths = d.f64s("box.lengths")?.unwrap_or_default();
    let lengths: [f64; 3] = lengths
        .try_into()
        .map_err(|_| cerr("box.lengths: expected three numbers"))?;
    let bx = match d.str("box.boundary")?.unwrap_or("periodic") {
        "periodic" => SimBox::periodic(lengths)?,
        "walled" => SimBox::walled(lengths)?,
        b => return Err(cerr(format!("box.boundary: expected periodic or walled, got {b:?}"))),
    };

    let species: Vec<char> = match d.str("fluid.species")? {
        Some(s) if !s.is_empty() && s.chars().all(|c| c.is_ascii_alphabetic()) => s.chars().collect(),
        Some(s) => return Err(cerr(format!("fluid.species: expected letters, got {s:?}"))),
        None => vec!['S'],
    };
    let n = species.len();
    if species.iter().collect::<BTreeSet<_>>().len() != n {
        return Err(cerr("fluid.species: letters must be distinct"));
    }
    let fractions = d.f64s("fluid.fractions")?.unwrap_or_else(|| {
        let mut f = vec![0.0; n];
        f[n - 1] = 1.0;
        f
    });
    if fractions.len() != n {
        return Err(cerr(format!("fluid.fractions: expected {n} values")));
    }

    let density = d.f64("fluid.density", None)?;
    let kbt = d.f64("fluid.kbt", None)?;
    let dt = d.f64("fluid.dt", None)?;
    let rc = d.f64("fluid.rc", Some(1.0))?;
    let s = d.f64("fluid.s", Some(1.0))?;
    if !(density > 0.0) {
        return Err(cerr("fluid.density must be > 0"));
    }
    let a = d.matrix("pair.a", n)?.unwrap();
    let params = match (d.matrix("pair.sigma", n)?, d.matrix("pair.gamma", n)?) {
        (Some(_), Some(_)) => return Err(cerr("pair.sigma and pair.gamma are mutually exclusive")),
        (Some(sig), None) => PairParams::from_sigma(n, a, sig, s, rc, kbt, dt)?,
        (None, Some(g)) => PairParams::new(n, a, g, s, rc, kbt, dt)?,
        (None, None) => unreachable!(),
    };

    let letter = |key: &str, c: char| -> Result<u8> {
        species
            .iter()
            .position(|&x| x == c)
            .map(|i| i as u8)
            .ok_or_else(|| cerr(format!("{key}: species {c:?} not declared in fluid.species")))
    };

    let chain = if d.has("chain.sequence") {
        let seq = d.str("chain.sequence")?.unwrap();
        let sequence = seq.chars().map(|c| letter("chain.sequence", c)).collect::<Result<Vec<_>>>()?;
        Some(ChainSpec {
            sequence,
            fraction: d.f64("chain.fraction", None)?,
            k: d.f64("chain.k", None)?,
            r0: d.f64("chain.r0", None)?,
        })
    } else {
        if d.items.iter().any(|(k, _)| k.starts_with("chain.")) {
            return Err(cerr("missing required key chain.sequence"));
        }
        None
    };

    let def = RunConfig::default();
    let domains = match d.get("run.domains") {
        None => def.domains,
        Some(Value::Array(a)) if a.len() == 3 && a.iter().all(|v| v.as_integer().is_some_and(|i| i >= 1)) => {
            [0, 1, 2].map(|k| a[k].as_integer().unwrap() as usize)
        }
        Some(_) => return Err(cerr("run.domains: expected three positive integers")),
    };
    let body_force = if d.has("body_force.g") {
        Some(BodyForce {
            g: d.f64("body_force.g", None)?,
            drive_axis: d.axis("body_force.drive_axis", 0)?,
            partition_axis: d.axis("body_force.partition_axis", 2)?,
        })
    } else {
        None
    };
    let run = RunConfig {
        steps: d.u64("run.steps", 0)?,
        rebuild_every: d.u64("run.rebuild_every", def.rebuild_every)?,
        skin: d.f64("run.skin", Some(def.skin))?,
        body_force,
        thermo_every: d.u64("run.thermo_every", def.thermo_every)?,
        dump_every: d.u64("run.dump_every", def.dump_every)?,
        seed: u32::try_from(d.u64("run.seed", def.seed as u64)?).map_err(|_| cerr("run.seed: must fit in 32 bits"))?,
        workers: d.u64("run.workers", def.workers as u64)? as usize,
        domains,
        max_neighbors: d.u64("run.max_neighbors", def.max_neighbors as u64)? as usize,
        sub_bits: d.u64("run.sub_bits", def.sub_bits as u64)? as u32,
        wall_mode: match d.str("run.wall_mode")? {
            None | Some("specular") => WallMode::Specular,
            Some("bounce_back") => WallMode::BounceBack,
            Some(m) => return Err(cerr(format!("run.wall_mode: expected specular or bounce_back, got {m:?}"))),
        },
    };
    run.validate()?;

    let profile = if d.items.iter().any(|(k, _)| k.starts_with("profile.")) {
        let bf = run.body_force;
        let p = ProfileSpec {
            axis: d.axis("profile.axis", bf.map_or(2, |b| b.partition_axis))?,
            drive: d.axis("profile.drive", bf.map_or(0, |b| b.drive_axis))?,
            bins: d.u64("profile.bins", 50)? as usize,
            times: d.f64s("profile.times")?.unwrap_or_default(),
            half_width: d.f64("profile.half_width", Some(0.5))?,
            from: d.f64("profile.from", Some(0.0))?,
            every: d.u64("profile.every", 1)?.max(1),
        };
        if p.bins == 0 {
            return Err(cerr("profile.bins must be >= 1"));
        }
        if p.axis == p.drive {
            return Err(cerr("profile.axis and profile.drive must differ"));
        }
        Some(p)
    } else {
        None
    };

    let cluster = if d.items.iter().any(|(k, _)| k.starts_with("cluster.")) {
        let sp = d.str("cluster.species")?.ok_or_else(|| cerr("missing required key cluster.species"))?;
        let mut cs = sp.chars();
        let (Some(c), None) = (cs.next(), cs.next()) else {
            return Err(cerr("cluster.species: expected one letter"));
        };
        Some(ClusterSpec {
            species: letter("cluster.species", c)?,
            contact: d.f64("cluster.contact", Some(rc))?,
            every: d.u64("cluster.every", 1000)?.max(1),
            stop_above: match d.get("cluster.stop_above") {
                None => None,
                Some(_) => Some(d.u64("cluster.stop_above", 0)? as usize),
            },
        })
    } else {
        None
    };

    Ok(Scenario {
        kind,
        bx,
        density,
        species,
        fractions,
        params,
        chain,
        run,
        profile,
        cluster,
    })
}
