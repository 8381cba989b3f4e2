//! Privacy amplification for the QRNG: seeded Toeplitz hashing over GF(2),
//! output-length accounting and a small-instance security check.

pub mod bitfile;
pub mod error;
pub mod gf2;
pub mod security;
pub mod toeplitz;

use cvqrng_core::BitString;

pub use error::{ExtractError, Result};
pub use toeplitz::{
    toeplitz_fast, toeplitz_naive, Extractor, ExtractorRegistry, FastToeplitz, NaiveToeplitz,
    ToeplitzSpec,
};

/// Output length `⌊n·h − 2·log2(1/ε_hash)⌋`, capped at the input length.
pub fn output_length(n_samples: usize, bits_per_sample: u32, h_low: f64, epsilon_hash: f64) -> Result<usize> {
    if !(epsilon_hash > 0.0 && epsilon_hash <= 1.0) {
        return Err(ExtractError::InvalidParameter(format!(
            "epsilon_hash must be in (0,1], got {epsilon_hash}"
        )));
    }
    let raw = n_samples as f64 * h_low - 2.0 * (1.0 / epsilon_hash).log2();
    let m = raw.floor();
    if !(m >= 1.0) {
        return Err(ExtractError::NonPositiveYield(format!(
            "{n_samples} samples at {h_low:.4} bits leave {raw:.1} bits after the hashing discount"
        )));
    }
    Ok((m as usize).min(n_samples * bits_per_sample as usize))
}

/// Packs each bin index as its low `width` bits (two's complement), most
/// significant bit first.
pub fn pack_samples<I: IntoIterator<Item = i16>>(indices: I, width: u32) -> BitString {
    assert!((1..=16).contains(&width));
    let it = indices.into_iter();
    let mut out = BitString::with_capacity(it.size_hint().0 * width as usize);
    let mask = (1u64 << width) - 1;
    for k in it {
        out.push_msb_first(k as u16 as u64 & mask, width);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_length_examples() {
        let m = output_length(200_000, 10, 3.28, 5e-7).unwrap();
        assert!((m as f64 - 656_000.0).abs() < 0.05 * 656_000.0, "{m}");
        assert_eq!(output_length(1000, 10, 2.5, 1.0).unwrap(), 2500);
        assert!(matches!(
            output_length(10, 10, 3.0, 1e-6),
            Err(ExtractError::NonPositiveYield(_))
        ));
    }

    #[test]
    fn packing_is_msb_first_twos_complement() {
        assert_eq!(pack_samples([5, -1], 4).to_string01(), "01011111");
        assert_eq!(pack_samples([-1024, 1023], 10).to_string01(), "00000000001111111111");
    }
}
