//! Seeded Toeplitz hashing.
//!
//! With seed bits `s_0 … s_{n+m-2}` the `m×n` matrix has entry
//! `T[i][j] = s[i − j + n − 1]`. Reading the seed and the input as
//! polynomials `S(t)`, `X(t)` over GF(2), output bit `i` is the coefficient
//! of `t^(i + n − 1)` in `S·X`, which is what the fast path computes.

use std::collections::BTreeMap;

use cvqrng_core::BitString;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{ExtractError, Result};
use crate::gf2;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToeplitzSpec {
    n_in: usize,
    m_out: usize,
    seed: BitString,
}

impl ToeplitzSpec {
    pub fn new(n_in: usize, m_out: usize, seed: BitString) -> Result<Self> {
        if n_in == 0 || m_out == 0 || m_out > n_in {
            return Err(ExtractError::InvalidParameter(format!(
                "need 0 < m_out <= n_in, got n_in={n_in}, m_out={m_out}"
            )));
        }
        if seed.len() != n_in + m_out - 1 {
            return Err(ExtractError::LengthMismatch {
                what: "seed",
                expected: n_in + m_out - 1,
                got: seed.len(),
            });
        }
        Ok(Self { n_in, m_out, seed })
    }

    /// Spec with a seed drawn from ChaCha20 keyed by `rng_seed`.
    pub fn random(n_in: usize, m_out: usize, rng_seed: u64) -> Result<Self> {
        let mut rng = ChaCha20Rng::seed_from_u64(rng_seed);
        let len = (n_in + m_out).saturating_sub(1);
        Self::new(n_in, m_out, BitString::random(&mut rng, len))
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn m_out(&self) -> usize {
        self.m_out
    }

    pub fn seed(&self) -> &BitString {
        &self.seed
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> bool {
        self.seed.get(i + self.n_in - 1 - j)
    }

    fn check_input(&self, input: &BitString) -> Result<()> {
        if input.len() != self.n_in {
            return Err(ExtractError::LengthMismatch {
                what: "input",
                expected: self.n_in,
                got: input.len(),
            });
        }
        Ok(())
    }
}

/// Matrix-vector product straight from the definition.
pub fn toeplitz_naive(input: &BitString, spec: &ToeplitzSpec) -> Result<BitString> {
    spec.check_input(input)?;
    Ok((0..spec.m_out)
        .map(|i| {
            (0..spec.n_in).fold(false, |acc, j| acc ^ (spec.entry(i, j) & input.get(j)))
        })
        .collect())
}

/// Same map through one GF(2) polynomial product.
pub fn toeplitz_fast(input: &BitString, spec: &ToeplitzSpec) -> Result<BitString> {
    toeplitz_with_base(input, spec, gf2::best_base())
}

/// Fast path with an explicit schoolbook kernel.
pub fn toeplitz_with_base(input: &BitString, spec: &ToeplitzSpec, base: gf2::BaseMul) -> Result<BitString> {
    spec.check_input(input)?;
    let prod = gf2::poly_mul(spec.seed.words(), input.words(), base);
    let bits = prod.len() * 64;
    Ok(BitString::from_words(prod, bits).slice(spec.n_in - 1, spec.m_out))
}

/// A named implementation of the Toeplitz map.
pub trait Extractor: Send + Sync {
    fn name(&self) -> &'static str;
    fn extract(&self, input: &BitString, spec: &ToeplitzSpec) -> Result<BitString>;
}

pub struct NaiveToeplitz;

impl Extractor for NaiveToeplitz {
    fn name(&self) -> &'static str {
        "naive"
    }

    fn extract(&self, input: &BitString, spec: &ToeplitzSpec) -> Result<BitString> {
        toeplitz_naive(input, spec)
    }
}

pub struct FastToeplitz;

impl Extractor for FastToeplitz {
    fn name(&self) -> &'static str {
        "fast"
    }

    fn extract(&self, input: &BitString, spec: &ToeplitzSpec) -> Result<BitString> {
        toeplitz_fast(input, spec)
    }
}

/// Extractors selectable by name.
pub struct ExtractorRegistry {
    entries: BTreeMap<&'static str, Box<dyn Extractor>>,
}

impl ExtractorRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, e: Box<dyn Extractor>) {
        self.entries.insert(e.name(), e);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Extractor> {
        self.entries
            .get(name)
            .map(|e| e.as_ref())
            .ok_or_else(|| ExtractError::UnknownExtractor(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }
}

impl Default for ExtractorRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(NaiveToeplitz));
        r.register(Box::new(FastToeplitz));
        r
    }
}
