/// Size caps shared by the table and spectrum builders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Largest sieve length, in entries.
    pub max_sieve_len: u64,
    /// Largest dense spectrum, in complex entries.
    pub max_spectrum_len: u64,
}

/// Environment variable overriding the memory cap (bytes).
pub const MEM_CAP_ENV: &str = "MSPC_MEM_CAP";

pub const DEFAULT_MEM_CAP: u64 = 1 << 31;

impl Default for Limits {
    fn default() -> Self {
        Self::from_mem_cap(DEFAULT_MEM_CAP)
    }
}

impl Limits {
    /// One byte per sieve entry; a dense spectrum and its work buffer cost 32 bytes per entry.
    pub fn from_mem_cap(bytes: u64) -> Self {
        Limits {
            max_sieve_len: bytes,
            max_spectrum_len: bytes / 32,
        }
    }

    /// Default limits, overridden by `MSPC_MEM_CAP` when it parses as an integer.
    pub fn from_env() -> Self {
        std::env::var(MEM_CAP_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Self::from_mem_cap)
            .unwrap_or_default()
    }
}
