//! Stable LSD radix sort on 32-bit keys, 4 bits per pass.

use rayon::prelude::*;

pub const RADIX_BITS: u32 = 4;
const BUCKETS: usize = 1 << RADIX_BITS;
const BLOCK: usize = 1 << 14;

#[derive(Clone, Copy)]
struct SendPtr<T>(*mut T);
unsafe impl<T> Send for SendPtr<T> {}
unsafe impl<T> Sync for SendPtr<T> {}

impl<T> SendPtr<T> {
    #[inline(always)]
    unsafe fn write(self, i: usize, v: T) {
        self.0.add(i).write(v)
    }
}

/// Sort `keys` ascending, carrying `values` along. Equal keys keep input order.
///
/// Only the low `bit_length` bits are examined; `bit_length` must be a
/// multiple of 4 and at most 32.
pub fn radix_sort(keys: &[u32], values: &[u32], bit_length: u32) -> (Vec<u32>, Vec<u32>) {
    let mut k = keys.to_vec();
    let mut v = values.to_vec();
    radix_sort_in_place(&mut k, &mut v, bit_length);
    (k, v)
}

pub fn radix_sort_in_place(keys: &mut Vec<u32>, values: &mut Vec<u32>, bit_length: u32) {
    assert_eq!(keys.len(), values.len(), "keys and values differ in length");
    assert!(
        bit_length <= 32 && bit_length % RADIX_BITS == 0,
        "bit_length must be a multiple of 4 and <= 32"
    );
    let n = keys.len();
    if n < 2 {
        return;
    }
    let mut kbuf = vec![0u32; n];
    let mut vbuf = vec![0u32; n];
    let nblocks = n.div_ceil(BLOCK);
    let mut shift = 0;
    while shift < bit_length {
        let digit = |k: u32| ((k >> shift) as usize) & (BUCKETS - 1);
        // Per-block histograms.
        let hist: Vec<[usize; BUCKETS]> = keys
            .par_chunks(BLOCK)
            .map(|c| {
                let mut h = [0usize; BUCKETS];
                for &k in c {
                    h[digit(k)] += 1;
                }
                h
            })
            .collect();
        // Exclusive scan in (digit, block) order keeps the pass stable.
        let mut offsets = vec![[0usize; BUCKETS]; nblocks];
        let mut acc = 0;
        for d in 0..BUCKETS {
            for b in 0..nblocks {
                offsets[b][d] = acc;
                acc += hist[b][d];
            }
        }
        let kp = SendPtr(kbuf.as_mut_ptr());
        let vp = SendPtr(vbuf.as_mut_ptr());
        keys.par_chunks(BLOCK)
            .zip(values.par_chunks(BLOCK))
            .zip(offsets.into_par_iter())
            .for_each(|((kc, vc), mut off)| {
                for (&k, &v) in kc.iter().zip(vc) {
                    let d = digit(k);
                    // SAFETY: the scan gives every element a distinct slot in [0, n).
                    unsafe {
                        kp.write(off[d], k);
                        vp.write(off[d], v);
                    }
                    off[d] += 1;
                }
            });
        std::mem::swap(keys, &mut kbuf);
        std::mem::swap(values, &mut vbuf);
        shift += RADIX_BITS;
    }
}

/// Smallest multiple of 4 bits that holds `max_key`.
pub fn bits_for(max_key: u32) -> u32 {
    let b = 32 - max_key.leading_zeros();
    b.div_ceil(RADIX_BITS) * RADIX_BITS
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_input() {
        let (k, v) = radix_sort(&[], &[], 32);
        assert!(k.is_empty() && v.is_empty());
    }

    #[test]
    fn stable_on_duplicates() {
        let (k, v) = radix_sort(&[3, 1, 2, 1], &[0, 1, 2, 3], 4);
        assert_eq!(k, vec![1, 1, 2, 3]);
        assert_eq!(v, vec![1, 3, 2, 0]);
    }

    #[test]
    fn bit_widths() {
        assert_eq!(bits_for(0), 0);
        assert_eq!(bits_for(15), 4);
        assert_eq!(bits_for(16), 8);
        assert_eq!(bits_for(u32::MAX), 32);
    }

    #[test]
    fn spans_several_blocks() {
        let n = 3 * BLOCK + 17;
        let keys: Vec<u32> = (0..n as u32).map(|i| i.wrapping_mul(2654435761) >> 12).collect();
        let vals: Vec<u32> = (0..n as u32).collect();
        let (k, v) = radix_sort(&keys, &vals, 20);
        let mut idx: Vec<u32> = vals.clone();
        idx.sort_by_key(|&i| keys[i as usize]);
        assert_eq!(v, idx);
        assert!(k.windows(2).all(|w| w[0] <= w[1]));
    }

    proptest! {
        #[test]
        fn matches_stable_reference(keys in proptest::collection::vec(any::<u32>(), 0..3000), mask_bits in 1u32..=8) {
            let bits = mask_bits * 4;
            let mask = if bits == 32 { u32::MAX } else { (1u32 << bits) - 1 };
            let keys: Vec<u32> = keys.into_iter().map(|k| k & mask).collect();
            let vals: Vec<u32> = (0..keys.len() as u32).collect();
            let (k, v) = radix_sort(&keys, &vals, bits);
            let mut reference: Vec<(u32, u32)> = keys.iter().cloned().zip(vals.iter().cloned()).collect();
            reference.sort_by_key(|p| p.0);
            prop_assert_eq!(k, reference.iter().map(|p| p.0).collect::<Vec<_>>());
            prop_assert_eq!(v, reference.iter().map(|p| p.1).collect::<Vec<_>>());
        }
    }
}
