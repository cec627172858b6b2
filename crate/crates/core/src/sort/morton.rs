//! Z-order codes. Bit `3k` holds bit `k` of x, `3k+1` of y, `3k+2` of z.

use crate::error::{DpdError, Result};

pub const MAX_BITS_PER_AXIS: u32 = 10;

#[inline(always)]
fn spread3(v: u32) -> u32 {
    let mut x = v & 0x3FF;
    x = (x | (x << 16)) & 0x0300_00FF;
    x = (x | (x << 8)) & 0x0300_F00F;
    x = (x | (x << 4)) & 0x030C_30C3;
    x = (x | (x << 2)) & 0x0924_9249;
    x
}

#[inline(always)]
fn compact3(v: u32) -> u32 {
    let mut x = v & 0x0924_9249;
    x = (x | (x >> 2)) & 0x030C_30C3;
    x = (x | (x >> 4)) & 0x0300_F00F;
    x = (x | (x >> 8)) & 0x0300_00FF;
    x = (x | (x >> 16)) & 0x3FF;
    x
}

/// Interleave without range checks. Coordinates must fit in 10 bits.
#[inline(always)]
pub fn morton_unchecked(ix: u32, iy: u32, iz: u32) -> u32 {
    spread3(ix) | (spread3(iy) << 1) | (spread3(iz) << 2)
}

pub fn morton_encode(ix: u32, iy: u32, iz: u32, bits_per_axis: u32) -> Result<u32> {
    if bits_per_axis > MAX_BITS_PER_AXIS {
        return Err(DpdError::MortonRange {
            coord: bits_per_axis,
            bits: MAX_BITS_PER_AXIS,
        });
    }
    for c in [ix, iy, iz] {
        if (c as u64) >= (1u64 << bits_per_axis) {
            return Err(DpdError::MortonRange {
                coord: c,
                bits: bits_per_axis,
            });
        }
    }
    Ok(morton_unchecked(ix, iy, iz))
}

pub fn morton_decode(code: u32) -> (u32, u32, u32) {
    (compact3(code), compact3(code >> 1), compact3(code >> 2))
}

/// Bits per axis needed for lattice coordinates below `n`.
pub fn bits_needed(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fixed_codes() {
        assert_eq!(morton_encode(0, 0, 0, 2).unwrap(), 0);
        assert_eq!(morton_encode(1, 1, 1, 1).unwrap(), 7);
        assert_eq!(morton_encode(3, 1, 2, 2).unwrap(), 43);
    }

    #[test]
    fn out_of_range() {
        assert!(morton_encode(4, 0, 0, 2).is_err());
        assert!(morton_encode(0, 0, 0, 11).is_err());
    }

    #[test]
    fn bits_needed_cases() {
        assert_eq!(bits_needed(1), 0);
        assert_eq!(bits_needed(2), 1);
        assert_eq!(bits_needed(8), 3);
        assert_eq!(bits_needed(9), 4);
    }

    proptest! {
        #[test]
        fn roundtrip(x in 0u32..1024, y in 0u32..1024, z in 0u32..1024) {
            let c = morton_encode(x, y, z, 10).unwrap();
            prop_assert_eq!(morton_decode(c), (x, y, z));
        }

        #[test]
        fn injective(a in (0u32..64, 0u32..64, 0u32..64), b in (0u32..64, 0u32..64, 0u32..64)) {
            let ca = morton_encode(a.0, a.1, a.2, 6).unwrap();
            let cb = morton_encode(b.0, b.1, b.2, 6).unwrap();
            prop_assert_eq!(ca == cb, a == b);
        }
    }
}
