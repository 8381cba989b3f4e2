//! Exhaustive check of the leftover-hash guarantee on small instances.
//!
//! For a source `X` with min-entropy `k`, the Toeplitz family must leave
//! `(T_S(X), S)` within `½·√(2^(m−k))` of `(U_m, S)` in statistical
//! distance. Instances are small enough to enumerate every seed and input.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{ExtractError, Result};

pub const MAX_N_IN: u32 = 16;
pub const MAX_M_OUT: u32 = 4;
/// Upper limit on seeds × support points per distance evaluation.
pub const MAX_WORK: u64 = 1 << 30;

/// A distribution over `n`-bit inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct Source {
    pub label: String,
    pub points: Vec<(u32, f64)>,
}

impl Source {
    pub fn flat(label: impl Into<String>, points: Vec<u32>) -> Self {
        let p = 1.0 / points.len() as f64;
        Self {
            label: label.into(),
            points: points.into_iter().map(|x| (x, p)).collect(),
        }
    }

    pub fn point_mass(x: u32) -> Self {
        Self::flat("point", vec![x])
    }

    pub fn min_entropy(&self) -> f64 {
        -self.points.iter().map(|p| p.1).fold(0.0, f64::max).log2()
    }
}

pub fn leftover_hash_bound(m_out: u32, k: f64) -> f64 {
    0.5 * (m_out as f64 - k).exp2().sqrt()
}

fn reverse_low(x: u64, n: u32) -> u32 {
    (x.reverse_bits() >> (64 - n)) as u32
}

/// Statistical distance of `(T_S(X), S)` from `(U_m, S)`, seeds uniform.
pub fn statistical_distance(n_in: u32, m_out: u32, source: &Source) -> Result<f64> {
    if !(1..=MAX_N_IN).contains(&n_in) || !(1..=MAX_M_OUT).contains(&m_out) || m_out > n_in {
        return Err(ExtractError::TooLarge(format!(
            "n_in={n_in}, m_out={m_out} (limits n_in <= {MAX_N_IN}, m_out <= {MAX_M_OUT})"
        )));
    }
    let seed_bits = n_in + m_out - 1;
    let seeds = 1u64 << seed_bits;
    if seeds.saturating_mul(source.points.len() as u64) > MAX_WORK {
        return Err(ExtractError::TooLarge(format!(
            "{seeds} seeds x {} support points",
            source.points.len()
        )));
    }
    let outputs = 1usize << m_out;
    let uniform = 1.0 / outputs as f64;
    // Output bit i is the parity of seed bits i..i+n-1 against the reversed
    // input, so each support point becomes m masks on the seed.
    let masks: Vec<([u64; MAX_M_OUT as usize], f64)> = source
        .points
        .iter()
        .map(|&(x, p)| {
            let xr = u64::from(reverse_low(u64::from(x), n_in));
            let mut m = [0u64; MAX_M_OUT as usize];
            for (i, slot) in m.iter_mut().enumerate().take(m_out as usize) {
                *slot = xr << i;
            }
            (m, p)
        })
        .collect();
    let mut total = 0.0;
    let mut hist = vec![0.0f64; outputs];
    for s in 0..seeds {
        hist.iter_mut().for_each(|h| *h = 0.0);
        for (m, p) in &masks {
            let mut y = 0usize;
            for (i, mask) in m.iter().enumerate().take(m_out as usize) {
                y |= ((s & mask).count_ones() as usize & 1) << i;
            }
            hist[y] += p;
        }
        total += 0.5 * hist.iter().map(|h| (h - uniform).abs()).sum::<f64>();
    }
    Ok(total / seeds as f64)
}

/// Sources over `n_in` bits with min-entropy at least `k`: flat sources on
/// `2^⌈k⌉` points in several placements, plus one non-flat source.
pub fn test_sources(n_in: u32, k: f64) -> Vec<Source> {
    let kk = (k.max(0.0).ceil() as u32).min(n_in);
    let support = 1u32 << kk;
    let space = 1u32 << n_in;
    let mut out = vec![
        Source::flat("low-bits-free", (0..support).collect()),
        Source::flat("high-bits-free", (0..support).map(|i| i << (n_in - kk)).collect()),
        Source::flat(
            "offset",
            (0..support).map(|i| (i.wrapping_mul(2654435761) ^ 0x5a5a) & (space - 1)).collect(),
        ),
    ];
    // The offset map may collide; keep it only if injective.
    let mut seen = out[2].points.iter().map(|p| p.0).collect::<Vec<_>>();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != support as usize {
        out.pop();
    }
    let mut rng = ChaCha20Rng::seed_from_u64(u64::from(n_in) << 8 | u64::from(kk));
    for r in 0..3 {
        let pts = sample(&mut rng, space as usize, support as usize)
            .into_iter()
            .map(|x| x as u32)
            .collect();
        out.push(Source::flat(format!("random-{r}"), pts));
    }
    if support < space {
        // One heavy point at 2^-k, remaining mass spread thinner.
        let heavy = (-k).exp2();
        let rest = support as usize;
        let light = (1.0 - heavy) / rest as f64;
        if light <= heavy {
            let mut points = vec![(0u32, heavy)];
            points.extend((1..=rest as u32).map(|x| (x, light)));
            out.push(Source {
                label: "non-flat".into(),
                points,
            });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct SecurityCheck {
    /// Largest distance over the source test set.
    pub distance: f64,
    pub bound: f64,
    pub sources: usize,
}

impl SecurityCheck {
    pub fn holds(&self) -> bool {
        self.distance <= self.bound
    }
}

/// Enumerates every source of [`test_sources`] and returns the worst
/// distance next to the leftover-hash bound.
pub fn verify_epsilon_security(n_in: u32, m_out: u32, k: f64) -> Result<SecurityCheck> {
    let sources = test_sources(n_in, k);
    let mut distance: f64 = 0.0;
    for s in &sources {
        debug_assert!(s.min_entropy() >= k - 1e-12, "{}", s.label);
        distance = distance.max(statistical_distance(n_in, m_out, s)?);
    }
    Ok(SecurityCheck {
        distance,
        bound: leftover_hash_bound(m_out, k),
        sources: sources.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toeplitz::{toeplitz_naive, ToeplitzSpec};
    use cvqrng_core::BitString;

    #[test]
    fn row_masks_match_matrix_definition() {
        let (n, m) = (6u32, 3u32);
        for s in [0b1011_0110u64, 0b1_0000_0001, 0b11_1111_0000] {
            let seed: BitString = (0..n + m - 1).map(|b| (s >> b) & 1 == 1).collect();
            let spec = ToeplitzSpec::new(n as usize, m as usize, seed).unwrap();
            for x in 0..(1u32 << n) {
                let input: BitString = (0..n).map(|b| (x >> b) & 1 == 1).collect();
                let out = toeplitz_naive(&input, &spec).unwrap();
                for i in 0..m {
                    let row = reverse_low((s >> i) & ((1 << n) - 1), n);
                    assert_eq!(out.get(i as usize), (row & x).count_ones() & 1 == 1);
                }
            }
        }
    }

    #[test]
    fn uniform_source_is_nearly_uniform() {
        let src = Source::flat("uniform", (0..256).collect());
        let d = statistical_distance(8, 2, &src).unwrap();
        assert!(d <= leftover_hash_bound(2, 8.0));
        assert!(d < 0.01, "{d}");
    }

    #[test]
    fn point_mass_bound_is_trivial() {
        let d = statistical_distance(8, 1, &Source::point_mass(5)).unwrap();
        assert!(leftover_hash_bound(1, 0.0) >= 0.5);
        assert!(d <= leftover_hash_bound(1, 0.0));
    }

    #[test]
    fn sources_have_claimed_entropy() {
        for k in [0.0, 2.5, 4.0, 7.0] {
            for s in test_sources(10, k) {
                assert!(s.min_entropy() >= k - 1e-12, "{} {k}", s.label);
                assert!((s.points.iter().map(|p| p.1).sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_large_instances() {
        assert!(matches!(verify_epsilon_security(17, 2, 4.0), Err(ExtractError::TooLarge(_))));
        assert!(matches!(verify_epsilon_security(16, 4, 16.0), Err(ExtractError::TooLarge(_))));
    }
}
