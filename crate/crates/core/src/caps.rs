//! Size caps for exhaustive computations.
//!
//! `ATOMPART_CAP_N`, when set to a positive integer, replaces every cap
//! below. It exists for tests that need to trip the resource-limit paths.

pub const ENV_CAP: &str = "ATOMPART_CAP_N";

/// Default cap on `n` for set-partition enumeration (Bell(12) = 4_213_597).
pub const DEFAULT_ENUMERATION_CAP: usize = 12;
/// Default cap on `n` for the exact induced-EPPF sums.
pub const DEFAULT_EXACT_CAP: usize = 10;
/// Default cap on `n` for the brute-force oracle.
pub const DEFAULT_ORACLE_CAP: usize = 7;
/// Largest `n` accepted by the generalized Stirling table.
pub const STIRLING_CAP: usize = 5000;
/// Largest checkpoint accepted by the path simulator.
pub const SIMULATION_CAP: usize = 1_000_000;
/// Largest `n` for simulations driven by a generic (non-Gibbs) EPPF.
pub const GENERIC_SIMULATION_CAP: usize = 1000;
/// Largest `n` per path for the two-level sampler.
pub const SAMPLE_CAP: usize = 100_000;

fn env_override() -> Option<usize> {
    std::env::var(ENV_CAP)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&v| v > 0)
}

pub fn enumeration_cap() -> usize {
    env_override().unwrap_or(DEFAULT_ENUMERATION_CAP)
}

pub fn exact_cap() -> usize {
    env_override().unwrap_or(DEFAULT_EXACT_CAP)
}

pub fn oracle_cap() -> usize {
    env_override().unwrap_or(DEFAULT_ORACLE_CAP)
}
