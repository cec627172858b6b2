//! CSV dump of a neighbour table: `i_tag,j_tag,distance,partition`.

use std::io::Write;
use std::path::Path;

use crate::error::{DpdError, Result};
use crate::neighbor::table::NeighborTable;
use crate::sort::{CellGrid, GridMode};
use crate::system::ParticleStore;

pub fn write_dump<W: Write>(mut out: W, table: &NeighborTable, store: &ParticleStore, grid: &CellGrid) -> std::io::Result<()> {
    writeln!(out, "i_tag,j_tag,distance,partition")?;
    let wrap = grid.mode == GridMode::Wrap;
    for i in 0..table.nrows {
        let core = table.core(i);
        let skin = table.skin(i);
        for (part, list) in [("core", core), ("skin", skin)] {
            for j in list {
                let j = j as usize;
                let mut d2 = 0.0;
                for k in 0..3 {
                    let mut d = store.coord[k][j] - store.coord[k][i];
                    if wrap && grid.wrap[k] {
                        let l = grid.box_len[k];
                        d -= l * (d / l + 0.5).floor();
                    }
                    d2 += d * d;
                }
                writeln!(out, "{},{},{:.9},{}", store.tag[i], store.tag[j], d2.sqrt(), part)?;
            }
        }
    }
    Ok(())
}

pub fn dump_to_file(path: &Path, table: &NeighborTable, store: &ParticleStore, grid: &CellGrid) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| DpdError::io(path, e))?;
    write_dump(std::io::BufWriter::new(f), table, store, grid).map_err(|e| DpdError::io(path, e))
}
