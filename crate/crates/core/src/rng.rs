//! Counter-based randomness.
//!
//! Every random decision in this crate is a pure function of
//! `(seed, stream, slot)`: a 64-bit seed, a stream tag separating
//! logical sources of randomness, and a slot index (usually an edge
//! slot or a trial index). This makes coupled constructions exact --
//! two graphs of a correlated pair read the *same* slot values -- and
//! makes every artifact reproducible from its seed alone, regardless
//! of iteration order or thread count.

use rand::RngCore;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer. Bijective, passes BigCrush as a counter mixer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Logical randomness streams. Distinct tags guarantee that, e.g., the
/// resampling coin of a correlated pair never aliases the Bernoulli
/// variable of the base graph at the same slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    /// Base object: first graph of a pair, step-0 weights, G(n,q) itself.
    Base = 1,
    /// Independent terminal object: second endpoint graph or weights.
    Fresh = 2,
    /// Coupling variable: resample coin or interpolation uniform.
    Couple = 3,
    /// Dynamics: semigroup evolution at a slot.
    Evolve = 4,
    /// Draws from finite sets (path sampling, shuffles).
    Draw = 5,
}

#[inline]
fn stream_key(seed: u64, stream: Stream) -> u64 {
    mix64(seed ^ (stream as u64).wrapping_mul(0xA24B_AED4_963E_E407))
}

/// One 64-bit word for `(seed, stream, slot)`.
#[inline]
pub fn slot_u64(seed: u64, stream: Stream, slot: u64) -> u64 {
    mix64(stream_key(seed, stream) ^ slot.wrapping_mul(GOLDEN))
}

/// Uniform in `[0,1)` with 53 random bits.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform in `[0,1)` for `(seed, stream, slot)`.
#[inline]
pub fn slot_unit(seed: u64, stream: Stream, slot: u64) -> f64 {
    unit_f64(slot_u64(seed, stream, slot))
}

/// Per-trial seed derivation: a pure function of the master seed and the
/// trial index, so trial `i` is identical no matter which worker runs it.
#[inline]
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    mix64(mix64(master_seed ^ 0x6A09_E667_F3BC_C909) ^ index.wrapping_mul(GOLDEN))
}

/// A full RNG stream rooted at one slot, for decisions that need more
/// than one word (rejection samplers, variable-length draws). Successive
/// outputs are the splitmix64 sequence seeded at the slot hash.
pub struct SlotRng {
    state: u64,
}

impl SlotRng {
    pub fn new(seed: u64, stream: Stream, slot: u64) -> Self {
        SlotRng {
            state: slot_u64(seed, stream, slot),
        }
    }
}

impl RngCore for SlotRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let word = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&word[..chunk.len()]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix64_reference_values() {
        // splitmix64 test vectors from the reference implementation
        // seeded at 1234567: first three outputs of seed += GOLDEN; mix.
        let mut s = 1234567u64;
        let mut out = Vec::new();
        for _ in 0..3 {
            s = s.wrapping_add(GOLDEN);
            out.push(mix64(s));
        }
        assert_eq!(out, vec![6457827717110365317, 3203168211198807973, 9817491932198370423]);
    }

    #[test]
    fn streams_do_not_alias() {
        let slots = 0..1000u64;
        for slot in slots {
            assert_ne!(
                slot_u64(42, Stream::Base, slot),
                slot_u64(42, Stream::Couple, slot)
            );
        }
    }

    #[test]
    fn unit_range() {
        for slot in 0..10_000 {
            let u = slot_unit(7, Stream::Base, slot);
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn unit_is_roughly_uniform() {
        // crude frequency check: 10^5 slots, 10 bins, each within 5 sigma
        let n = 100_000;
        let mut bins = [0u32; 10];
        for slot in 0..n {
            let u = slot_unit(99, Stream::Fresh, slot);
            bins[(u * 10.0) as usize] += 1;
        }
        let expect = n as f64 / 10.0;
        let sigma = (expect * 0.9).sqrt();
        for b in bins {
            assert!((b as f64 - expect).abs() < 5.0 * sigma, "bin {b} vs {expect}");
        }
    }

    #[test]
    fn derive_seed_is_pure_and_spread() {
        assert_eq!(derive_seed(5, 17), derive_seed(5, 17));
        assert_ne!(derive_seed(5, 17), derive_seed(5, 18));
        assert_ne!(derive_seed(5, 17), derive_seed(6, 17));
    }

    #[test]
    fn slot_rng_matches_slot_hash_root() {
        let mut rng = SlotRng::new(11, Stream::Evolve, 33);
        let a = rng.next_u64();
        let b = rng.next_u64();
        assert_ne!(a, b);
        let mut rng2 = SlotRng::new(11, Stream::Evolve, 33);
        assert_eq!(rng2.next_u64(), a);
    }
}
