//! Text outputs: XYZ trajectories, thermo and profile CSV.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{DpdError, Result};
use crate::harness::stats::ProfileSample;
use crate::system::{KineticSums, ParticleStore};

/// One thermo line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoRow {
    pub step: u64,
    pub time: f64,
    pub kbt: f64,
    pub momentum: [f64; 3],
    pub n: u64,
}

impl ThermoRow {
    pub fn new(step: u64, dt: f64, k: &KineticSums) -> Result<Self> {
        Ok(Self {
            step,
            time: step as f64 * dt,
            kbt: k.temperature()?,
            momentum: k.momentum,
            n: k.n,
        })
    }
}

pub const THERMO_HEADER: &str = "step,time,kbt,px,py,pz,n";

/// Appends to a file, reporting failures with its path.
pub struct TextSink {
    path: PathBuf,
    w: BufWriter<File>,
}

impl TextSink {
    pub fn create(path: &Path) -> Result<Self> {
        let f = File::create(path).map_err(|e| DpdError::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            w: BufWriter::new(f),
        })
    }

    pub fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.w, "{s}").map_err(|e| DpdError::io(&self.path, e))
    }

    pub fn flush(&mut self) -> Result<()> {
        self.w.flush().map_err(|e| DpdError::io(&self.path, e))
    }
}

/// Thermo rows use `{}` formatting, which round-trips `f64` exactly.
pub fn thermo_line(r: &ThermoRow) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        r.step, r.time, r.kbt, r.momentum[0], r.momentum[1], r.momentum[2], r.n
    )
}

pub fn parse_thermo_line(s: &str) -> Option<ThermoRow> {
    let f: Vec<&str> = s.trim().split(',').collect();
    if f.len() != 7 {
        return None;
    }
    Some(ThermoRow {
        step: f[0].parse().ok()?,
        time: f[1].parse().ok()?,
        kbt: f[2].parse().ok()?,
        momentum: [f[3].parse().ok()?, f[4].parse().ok()?, f[5].parse().ok()?],
        n: f[6].parse().ok()?,
    })
}

pub fn write_thermo(path: &Path, rows: &[ThermoRow]) -> Result<()> {
    let mut s = TextSink::create(path)?;
    s.line(THERMO_HEADER)?;
    for r in rows {
        s.line(&thermo_line(r))?;
    }
    s.flush()
}

/// One XYZ frame: count, comment, then `letter x y z` per particle.
pub fn xyz_frame(store: &ParticleStore, letters: &[char], comment: &str) -> String {
    let mut out = format!("{}\n{}\n", store.len(), comment.replace('\n', " "));
    for i in 0..store.len() {
        let c = letters.get(store.species[i] as usize).copied().unwrap_or('X');
        out.push_str(&format!(
            "{c} {} {} {}\n",
            store.coord[0][i], store.coord[1][i], store.coord[2][i]
        ));
    }
    out
}

pub fn write_profile(path: &Path, p: &ProfileSample) -> Result<()> {
    let mut s = TextSink::create(path)?;
    s.line("bin_center,mean_v,count")?;
    for ((c, v), n) in p.centers.iter().zip(&p.mean_v).zip(&p.counts) {
        s.line(&format!("{c},{v},{n}"))?;
    }
    s.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::Particle;

    #[test]
    fn single_particle_frame() {
        let mut s = ParticleStore::default();
        s.push(Particle {
            tag: 0,
            species: 1,
            molecule: 0,
            coord: [1.0, 2.5, -3.0],
            veloc: [0.0; 3],
            force: [0.0; 3],
        });
        let f = xyz_frame(&s, &['A', 'B'], "step 7");
        assert_eq!(f, "1\nstep 7\nB 1 2.5 -3\n");
        assert_eq!(f.lines().count(), 3);
    }

    #[test]
    fn thermo_roundtrip_exact() {
        let dir = tempfile::tempdir().unwrap();
        let rows: Vec<ThermoRow> = (0..20)
            .map(|i| ThermoRow {
                step: i * 10,
                time: i as f64 * 0.1,
                kbt: 1.0 / (i as f64 + 3.0),
                momentum: [1e-17 * i as f64, -0.1 / 3.0, std::f64::consts::PI],
                n: 4608,
            })
            .collect();
        let p = dir.path().join("thermo.csv");
        write_thermo(&p, &rows).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(THERMO_HEADER));
        let back: Vec<ThermoRow> = lines.map(|l| parse_thermo_line(l).unwrap()).collect();
        assert_eq!(back, rows);
        let sum_in: f64 = rows.iter().map(|r| r.kbt).sum();
        let sum_out: f64 = back.iter().map(|r| r.kbt).sum();
        assert_eq!(sum_in.to_bits(), sum_out.to_bits());
    }

    #[test]
    fn io_error_names_path() {
        let e = write_thermo(Path::new("/nonexistent-dir/x.csv"), &[]).unwrap_err();
        assert!(e.to_string().contains("/nonexistent-dir/x.csv"));
    }
}
