//! Binary ghost and stray packets.
//!
//! Little-endian. Header: magic, kind, step, count as four `u32`s.
//! Full record: tag u32, species u8, coord 3×f64, veloc 3×f64, molecule u32.
//! Update record: coord and veloc. Stray record: a full record then force.

use crate::error::{DpdError, Result};
use crate::system::{Particle, ParticleStore};

pub const MAGIC: u32 = 0x4450_4447;
pub const HEADER_BYTES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum PacketKind {
    Full = 1,
    Update = 2,
    Stray = 3,
}

impl PacketKind {
    pub fn record_bytes(self) -> usize {
        match self {
            PacketKind::Full => 57,
            PacketKind::Update => 48,
            PacketKind::Stray => 81,
        }
    }

    fn from_u32(v: u32) -> Result<Self> {
        match v {
            1 => Ok(PacketKind::Full),
            2 => Ok(PacketKind::Update),
            3 => Ok(PacketKind::Stray),
            _ => Err(DpdError::Packet(format!("unknown packet kind {v}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub kind: PacketKind,
    pub step: u32,
    pub count: u32,
}

/// Position and velocity of one ghost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateRecord {
    pub coord: [f64; 3],
    pub veloc: [f64; 3],
}

fn put_header(buf: &mut Vec<u8>, kind: PacketKind, step: u64, count: usize) {
    buf.reserve(HEADER_BYTES + count * kind.record_bytes());
    for w in [MAGIC, kind as u32, step as u32, count as u32] {
        buf.extend_from_slice(&w.to_le_bytes());
    }
}

fn put3(buf: &mut Vec<u8>, v: [f64; 3]) {
    for x in v {
        buf.extend_from_slice(&x.to_le_bytes());
    }
}

/// Encode particles `idx` of `store`, with `shift` added to coordinates.
pub fn encode_full(store: &ParticleStore, idx: &[u32], shift: [f64; 3], step: u64) -> Vec<u8> {
    let mut buf = Vec::new();
    put_header(&mut buf, PacketKind::Full, step, idx.len());
    for &i in idx {
        let i = i as usize;
        buf.extend_from_slice(&store.tag[i].to_le_bytes());
        buf.push(store.species[i]);
        put3(&mut buf, [0, 1, 2].map(|k| store.coord[k][i] + shift[k]));
        put3(&mut buf, store.vel(i));
        buf.extend_from_slice(&store.molecule[i].to_le_bytes());
    }
    buf
}

pub fn encode_update(store: &ParticleStore, idx: &[u32], shift: [f64; 3], step: u64) -> Vec<u8> {
    let mut buf = Vec::new();
    put_header(&mut buf, PacketKind::Update, step, idx.len());
    for &i in idx {
        let i = i as usize;
        put3(&mut buf, [0, 1, 2].map(|k| store.coord[k][i] + shift[k]));
        put3(&mut buf, store.vel(i));
    }
    buf
}

pub fn encode_stray(particles: &[Particle], step: u64) -> Vec<u8> {
    let mut buf = Vec::new();
    put_header(&mut buf, PacketKind::Stray, step, particles.len());
    for p in particles {
        buf.extend_from_slice(&p.tag.to_le_bytes());
        buf.push(p.species);
        put3(&mut buf, p.coord);
        put3(&mut buf, p.veloc);
        buf.extend_from_slice(&p.molecule.to_le_bytes());
        put3(&mut buf, p.force);
    }
    buf
}

struct Reader<'a> {
    b: &'a [u8],
    at: usize,
}

impl Reader<'_> {
    fn u32(&mut self) -> u32 {
        let v = u32::from_le_bytes(self.b[self.at..self.at + 4].try_into().unwrap());
        self.at += 4;
        v
    }
    fn u8(&mut self) -> u8 {
        let v = self.b[self.at];
        self.at += 1;
        v
    }
    fn f64(&mut self) -> f64 {
        let v = f64::from_le_bytes(self.b[self.at..self.at + 8].try_into().unwrap());
        self.at += 8;
        v
    }
    fn v3(&mut self) -> [f64; 3] {
        [self.f64(), self.f64(), self.f64()]
    }
}

/// Parse and validate the header, checking the payload length.
pub fn decode_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < HEADER_BYTES {
        return Err(DpdError::Packet(format!("packet of {} bytes is shorter than its header", bytes.len())));
    }
    let mut r = Reader { b: bytes, at: 0 };
    let magic = r.u32();
    if magic != MAGIC {
        return Err(DpdError::Packet(format!("bad magic {magic:#010x}")));
    }
    let kind = PacketKind::from_u32(r.u32())?;
    let step = r.u32();
    let count = r.u32();
    let want = HEADER_BYTES + count as usize * kind.record_bytes();
    if bytes.len() != want {
        return Err(DpdError::Packet(format!(
            "{kind:?} packet with {count} records has {} bytes, expected {want}",
            bytes.len()
        )));
    }
    Ok(Header { kind, step, count })
}

fn expect(bytes: &[u8], kind: PacketKind, step: u64) -> Result<Header> {
    let h = decode_header(bytes)?;
    if h.kind != kind {
        return Err(DpdError::Packet(format!("expected {kind:?} packet, got {:?}", h.kind)));
    }
    if h.step != step as u32 {
        return Err(DpdError::Packet(format!("packet for step {} received at step {}", h.step, step as u32)));
    }
    Ok(h)
}

/// Decode full records. Forces are zero.
pub fn decode_full(bytes: &[u8], step: u64) -> Result<Vec<Particle>> {
    let h = expect(bytes, PacketKind::Full, step)?;
    let mut r = Reader { b: bytes, at: HEADER_BYTES };
    Ok((0..h.count)
        .map(|_| Particle {
            tag: r.u32(),
            species: r.u8(),
            coord: r.v3(),
            veloc: r.v3(),
            molecule: r.u32(),
            force: [0.0; 3],
        })
        .collect())
}

pub fn decode_update(bytes: &[u8], step: u64) -> Result<Vec<UpdateRecord>> {
    let h = expect(bytes, PacketKind::Update, step)?;
    let mut r = Reader { b: bytes, at: HEADER_BYTES };
    Ok((0..h.count)
        .map(|_| UpdateRecord {
            coord: r.v3(),
            veloc: r.v3(),
        })
        .collect())
}

pub fn decode_stray(bytes: &[u8], step: u64) -> Result<Vec<Particle>> {
    let h = expect(bytes, PacketKind::Stray, step)?;
    let mut r = Reader { b: bytes, at: HEADER_BYTES };
    Ok((0..h.count)
        .map(|_| Particle {
            tag: r.u32(),
            species: r.u8(),
            coord: r.v3(),
            veloc: r.v3(),
            molecule: r.u32(),
            force: r.v3(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_particle() -> impl Strategy<Value = Particle> {
        (any::<u32>(), any::<u8>(), any::<u32>(), prop::array::uniform9(-1e6f64..1e6)).prop_map(|(tag, species, molecule, v)| {
            Particle {
                tag,
                species,
                molecule,
                coord: [v[0], v[1], v[2]],
                veloc: [v[3], v[4], v[5]],
                force: [v[6], v[7], v[8]],
            }
        })
    }

    proptest! {
        #[test]
        fn full_roundtrip(ps in prop::collection::vec(arb_particle(), 0..40), step in any::<u32>()) {
            let mut s = ParticleStore::default();
            for p in &ps {
                s.push(*p);
            }
            let idx: Vec<u32> = (0..ps.len() as u32).collect();
            let bytes = encode_full(&s, &idx, [0.0; 3], step as u64);
            prop_assert_eq!(bytes.len(), HEADER_BYTES + 57 * ps.len());
            let back = decode_full(&bytes, step as u64).unwrap();
            for (a, b) in ps.iter().zip(&back) {
                prop_assert_eq!(Particle { force: [0.0; 3], ..*a }, *b);
            }
            let upd = decode_update(&encode_update(&s, &idx, [0.0; 3], step as u64), step as u64).unwrap();
            for (a, b) in ps.iter().zip(&upd) {
                prop_assert_eq!(a.coord, b.coord);
                prop_assert_eq!(a.veloc, b.veloc);
            }
        }

        #[test]
        fn stray_roundtrip(ps in prop::collection::vec(arb_particle(), 0..40)) {
            let bytes = encode_stray(&ps, 9);
            prop_assert_eq!(bytes.len(), HEADER_BYTES + 81 * ps.len());
            prop_assert_eq!(decode_stray(&bytes, 9).unwrap(), ps);
        }
    }

    #[test]
    fn header_layout() {
        let b = encode_stray(&[], 0x0102_0304);
        assert_eq!(&b[..4], &[0x47, 0x44, 0x50, 0x44]);
        assert_eq!(&b[4..8], &[3, 0, 0, 0]);
        assert_eq!(&b[8..12], &[4, 3, 2, 1]);
        assert_eq!(&b[12..16], &[0; 4]);
    }

    #[test]
    fn shift_applied() {
        let mut s = ParticleStore::default();
        s.push(Particle {
            tag: 1,
            species: 0,
            molecule: 0,
            coord: [1.0, 2.0, 3.0],
            veloc: [0.0; 3],
            force: [0.0; 3],
        });
        let b = encode_update(&s, &[0], [10.0, 0.0, -10.0], 0);
        assert_eq!(decode_update(&b, 0).unwrap()[0].coord, [11.0, 2.0, -7.0]);
    }

    #[test]
    fn malformed_rejected() {
        let mut b = encode_stray(&[], 1);
        assert!(matches!(decode_stray(&b[..10], 1), Err(DpdError::Packet(_))));
        assert!(decode_stray(&b, 2).is_err());
        assert!(decode_full(&b, 1).is_err());
        b[0] = 0;
        assert!(decode_stray(&b, 1).is_err());
        let mut b = encode_stray(&[], 1);
        b[12] = 1;
        assert!(decode_stray(&b, 1).is_err());
    }
}
