//! Seed derivation for reproducible, order-independent replicate streams.
//!
//! `derive_seed(master, scenario, stream, index)` chains SplitMix64 over the
//! four inputs, so replicate `r` of scenario `s` gets the same seed no matter
//! how many replicates are run or in which order.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Dataset = 1,
    Sampler = 2,
    FitRun = 3,
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, scenario: u64, stream: Stream, index: u64) -> u64 {
    let h = splitmix64(master);
    let h = splitmix64(h ^ scenario);
    let h = splitmix64(h ^ stream as u64);
    splitmix64(h ^ index)
}
