//! Polynomial multiplication over GF(2) on packed `u64` words.
//!
//! Bit `k` of word `w` is the coefficient of `t^(64w + k)`. Products use
//! Karatsuba down to a schoolbook base case built on a 64×64 carry-less
//! multiply, hardware `pclmulqdq` when the CPU has it.

/// XOR-accumulates `a·b` into `out[..a.len() + b.len()]`.
pub type BaseMul = fn(&[u64], &[u64], &mut [u64]);

/// Operand length, in words, at which Karatsuba hands over to schoolbook.
pub const KARATSUBA_CUTOFF: usize = 32;

/// Products of `a` with every 4-bit nibble.
#[inline]
fn nibble_table(a: u64) -> [u128; 16] {
    let mut t = [0u128; 16];
    t[1] = a as u128;
    for i in 2..16 {
        t[i] = if i & 1 == 1 { t[i - 1] ^ t[1] } else { t[i >> 1] << 1 };
    }
    t
}

#[inline]
fn clmul_with_table(t: &[u128; 16], b: u64) -> u128 {
    let mut acc = 0u128;
    for k in (0..16).rev() {
        acc = (acc << 4) ^ t[((b >> (4 * k)) & 15) as usize];
    }
    acc
}

/// Portable 64×64 → 128 carry-less product.
pub fn clmul64_portable(a: u64, b: u64) -> u128 {
    clmul_with_table(&nibble_table(a), b)
}

/// Definitional bit-by-bit carry-less product, for testing.
pub fn clmul64_bitwise(a: u64, b: u64) -> u128 {
    (0..64)
        .filter(|i| (b >> i) & 1 == 1)
        .fold(0u128, |acc, i| acc ^ ((a as u128) << i))
}

pub fn schoolbook_portable(a: &[u64], b: &[u64], out: &mut [u64]) {
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        let t = nibble_table(ai);
        for (j, &bj) in b.iter().enumerate() {
            let p = clmul_with_table(&t, bj);
            out[i + j] ^= p as u64;
            out[i + j + 1] ^= (p >> 64) as u64;
        }
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "pclmulqdq,sse2")]
unsafe fn schoolbook_clmul_impl(a: &[u64], b: &[u64], out: &mut [u64]) {
    use std::arch::x86_64::*;
    for (i, &ai) in a.iter().enumerate() {
        let va = _mm_set_epi64x(0, ai as i64);
        for (j, &bj) in b.iter().enumerate() {
            let p = _mm_clmulepi64_si128(va, _mm_set_epi64x(0, bj as i64), 0x00);
            out[i + j] ^= _mm_cvtsi128_si64(p) as u64;
            out[i + j + 1] ^= _mm_cvtsi128_si64(_mm_unpackhi_epi64(p, p)) as u64;
        }
    }
}

#[cfg(target_arch = "x86_64")]
fn schoolbook_clmul(a: &[u64], b: &[u64], out: &mut [u64]) {
    assert!(out.len() >= a.len() + b.len());
    // SAFETY: only handed out by `best_base` after the feature check.
    unsafe { schoolbook_clmul_impl(a, b, out) }
}

/// Fastest schoolbook kernel the running CPU supports.
pub fn best_base() -> BaseMul {
    #[cfg(target_arch = "x86_64")]
    if std::is_x86_feature_detected!("pclmulqdq") {
        return schoolbook_clmul;
    }
    schoolbook_portable
}

pub fn has_hardware_clmul() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        std::is_x86_feature_detected!("pclmulqdq")
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        false
    }
}

fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

/// Equal-length Karatsuba, XOR-accumulating into `out[..2n]`.
fn karatsuba(a: &[u64], b: &[u64], out: &mut [u64], base: BaseMul) {
    let n = a.len();
    debug_assert_eq!(n, b.len());
    if n <= KARATSUBA_CUTOFF {
        base(a, b, out);
        return;
    }
    let h = n / 2;
    let hh = n - h;
    let (a0, a1) = a.split_at(h);
    let (b0, b1) = b.split_at(h);

    let mut z0 = vec![0u64; 2 * h];
    karatsuba(a0, b0, &mut z0, base);
    let mut z2 = vec![0u64; 2 * hh];
    karatsuba(a1, b1, &mut z2, base);

    let mut sa = a1.to_vec();
    xor_into(&mut sa, a0);
    let mut sb = b1.to_vec();
    xor_into(&mut sb, b0);
    let mut z1 = vec![0u64; 2 * hh];
    karatsuba(&sa, &sb, &mut z1, base);
    xor_into(&mut z1, &z0);
    xor_into(&mut z1, &z2);

    xor_into(&mut out[..2 * h], &z0);
    xor_into(&mut out[2 * h..2 * n], &z2);
    xor_into(&mut out[h..h + 2 * hh], &z1);
}

/// Full product `a·b`, `a.len() + b.len()` words long.
pub fn poly_mul(a: &[u64], b: &[u64], base: BaseMul) -> Vec<u64> {
    let mut out = vec![0u64; a.len() + b.len()];
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let s = short.len();
    if s == 0 {
        return out;
    }
    let mut start = 0;
    while start < long.len() {
        let chunk = &long[start..long.len().min(start + s)];
        if chunk.len() == s {
            karatsuba(chunk, short, &mut out[start..start + 2 * s], base);
        } else {
            let mut padded = chunk.to_vec();
            padded.resize(s, 0);
            let mut part = vec![0u64; 2 * s];
            karatsuba(&padded, short, &mut part, base);
            let end = out.len();
            xor_into(&mut out[start..end], &part[..end - start]);
        }
        start += s;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn poly_mul_bitwise(a: &[u64], b: &[u64]) -> Vec<u64> {
        let mut out = vec![0u64; a.len() + b.len()];
        for i in 0..a.len() * 64 {
            if (a[i / 64] >> (i % 64)) & 1 == 0 {
                continue;
            }
            for j in 0..b.len() * 64 {
                if (b[j / 64] >> (j % 64)) & 1 == 1 {
                    out[(i + j) / 64] ^= 1 << ((i + j) % 64);
                }
            }
        }
        out
    }

    #[test]
    fn small_products() {
        // (1 + t)^2 = 1 + t^2 over GF(2).
        assert_eq!(clmul64_portable(0b11, 0b11), 0b101);
        assert_eq!(clmul64_portable(u64::MAX, 1), u64::MAX as u128);
        assert_eq!(clmul64_portable(1 << 63, 1 << 63), 1u128 << 126);
    }

    proptest! {
        #[test]
        fn portable_matches_bitwise(a: u64, b: u64) {
            prop_assert_eq!(clmul64_portable(a, b), clmul64_bitwise(a, b));
        }

        #[test]
        fn hardware_matches_portable(a in proptest::collection::vec(any::<u64>(), 1..5), b in proptest::collection::vec(any::<u64>(), 1..5)) {
            let mut x = vec![0u64; a.len() + b.len()];
            let mut y = x.clone();
            schoolbook_portable(&a, &b, &mut x);
            best_base()(&a, &b, &mut y);
            prop_assert_eq!(x, y);
        }

    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn karatsuba_matches_bitwise(a in proptest::collection::vec(any::<u64>(), 0..80), b in proptest::collection::vec(any::<u64>(), 0..70)) {
            prop_assert_eq!(poly_mul(&a, &b, best_base()), poly_mul_bitwise(&a, &b));
            prop_assert_eq!(poly_mul(&a, &b, schoolbook_portable), poly_mul_bitwise(&a, &b));
        }
    }
}
