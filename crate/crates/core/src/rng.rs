//! Deterministic derivation of independent random streams.

/// Mixes a master seed with a stream identifier (SplitMix64 finalizer).
///
/// Distinct `stream` values give unrelated seeds, so parallel work items can
/// each own a generator without depending on scheduling order.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
