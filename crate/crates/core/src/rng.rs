//! Counter-based splittable random streams.
//!
//! A [`StreamKey`] names a stream; `child(i)` derives independent substreams
//! without consuming state, so results do not depend on evaluation order or
//! thread count. [`CounterRng`] turns a key into a `rand` generator whose k-th
//! output is a pure function of (key, k).

use rand::RngCore;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        StreamKey(mix(seed.wrapping_add(GOLDEN)))
    }

    /// Independent substream number `index`.
    pub fn child(self, index: u64) -> Self {
        StreamKey(mix(self.0 ^ mix(index.wrapping_mul(GOLDEN).wrapping_add(0x632B_E59B_D9B4_E019))))
    }

    pub fn rng(self) -> CounterRng {
        CounterRng { key: self.0, counter: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    /// Uniform draw from the open interval (0, 1).
    pub fn open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(mix(self.key ^ self.counter.wrapping_mul(GOLDEN)).wrapping_add(self.key))
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
