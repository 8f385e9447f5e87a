use std::ops::{Add, Mul};

use num_complex::Complex;

use crate::{JrcError, Result};

/// Sample types the correlators accept: integers, reals and complex values.
pub trait Conjugate: Copy + Add<Output = Self> + Mul<Output = Self> {
    fn conjugate(self) -> Self;
    fn zero() -> Self;
}

macro_rules! real_conjugate {
    ($($t:ty),*) => {$(
        impl Conjugate for $t {
            fn conjugate(self) -> Self {
                self
            }
            fn zero() -> Self {
                0 as $t
            }
        }
    )*};
}

real_conjugate!(i32, i64, f64);

impl Conjugate for Complex<f64> {
    fn conjugate(self) -> Self {
        self.conj()
    }
    fn zero() -> Self {
        Complex::new(0.0, 0.0)
    }
}

/// Aperiodic autocorrelation, `out[N-1+k] = sum_n x[n+k] conj(x[n])` for
/// lags `k = -(N-1)..=N-1`.
pub fn aperiodic_autocorr<T: Conjugate>(seq: &[T]) -> Result<Vec<T>> {
    let n = seq.len();
    if n == 0 {
        return Err(JrcError::invalid("autocorrelation of an empty sequence"));
    }
    let mut out = vec![T::zero(); 2 * n - 1];
    for k in 0..n {
        let acc = seq[k..]
            .iter()
            .zip(seq)
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b.conjugate());
        out[n - 1 + k] = acc;
        out[n - 1 - k] = acc.conjugate();
    }
    Ok(out)
}

// NTT-friendly prime 119 * 2^23 + 1 with primitive root 3.
const NTT_PRIME: u64 = 998_244_353;
const NTT_ROOT: u64 = 3;

fn pow_mod(mut base: u64, mut exp: u64) -> u64 {
    let mut acc = 1u64;
    base %= NTT_PRIME;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % NTT_PRIME;
        }
        base = base * base % NTT_PRIME;
        exp >>= 1;
    }
    acc
}

fn ntt(buf: &mut [u64], inverse: bool) {
    let n = buf.len();
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let mut w = pow_mod(NTT_ROOT, (NTT_PRIME - 1) / len as u64);
        if inverse {
            w = pow_mod(w, NTT_PRIME - 2);
        }
        for start in (0..n).step_by(len) {
            let mut wk = 1u64;
            for k in 0..len / 2 {
                let u = buf[start + k];
                let v = buf[start + k + len / 2] * wk % NTT_PRIME;
                buf[start + k] = (u + v) % NTT_PRIME;
                buf[start + k + len / 2] = (u + NTT_PRIME - v) % NTT_PRIME;
                wk = wk * w % NTT_PRIME;
            }
        }
        len <<= 1;
    }
    if inverse {
        let inv_n = pow_mod(n as u64, NTT_PRIME - 2);
        buf.iter_mut().for_each(|v| *v = *v * inv_n % NTT_PRIME);
    }
}

fn to_residue(v: i64) -> u64 {
    v.rem_euclid(NTT_PRIME as i64) as u64
}

fn from_residue(v: u64) -> i64 {
    if v > NTT_PRIME / 2 {
        v as i64 - NTT_PRIME as i64
    } else {
        v as i64
    }
}

/// Sum of the aperiodic autocorrelations of several integer sequences of equal
/// length, computed exactly with a number-theoretic transform.
///
/// Exact as long as the summed zero-lag energy stays below half the NTT prime
/// (about 5e8); larger inputs are rejected.
pub fn aperiodic_autocorr_exact(seqs: &[&[i64]]) -> Result<Vec<i64>> {
    let n = match seqs.first() {
        Some(s) if !s.is_empty() => s.len(),
        _ => return Err(JrcError::invalid("autocorrelation of an empty sequence")),
    };
    if seqs.iter().any(|s| s.len() != n) {
        return Err(JrcError::invalid("sequences must share one length"));
    }
    let energy: i128 = seqs
        .iter()
        .flat_map(|s| s.iter())
        .map(|&v| (v as i128) * (v as i128))
        .sum();
    if energy >= (NTT_PRIME / 2) as i128 {
        return Err(JrcError::invalid(format!(
            "sequence energy {energy} too large for exact transform"
        )));
    }
    let size = (2 * n - 1).next_power_of_two();
    let mut acc = vec![0u64; size];
    for s in seqs {
        let mut fwd = vec![0u64; size];
        let mut rev = vec![0u64; size];
        for (i, &v) in s.iter().enumerate() {
            fwd[i] = to_residue(v);
            rev[n - 1 - i] = to_residue(v);
        }
        ntt(&mut fwd, false);
        ntt(&mut rev, false);
        for ((a, f), r) in acc.iter_mut().zip(&fwd).zip(&rev) {
            *a = (*a + f * r % NTT_PRIME) % NTT_PRIME;
        }
    }
    ntt(&mut acc, true);
    // conv(x, reverse(x))[n-1+k] is the lag-k autocorrelation
    Ok(acc[..2 * n - 1].iter().map(|&v| from_residue(v)).collect())
}

/// Cyclic delay by `k` chips: `out[i] = seq[(i - k) mod L]`, the product of the
/// block permutation matrix `[[0, I_k], [I_{L-k}, 0]]` with `seq`.
pub fn cyclic_shift<T: Copy>(seq: &[T], k: usize) -> Result<Vec<T>> {
    let len = seq.len();
    if k >= len.max(1) {
        return Err(JrcError::invalid(format!(
            "shift {k} must be smaller than the sequence length {len}"
        )));
    }
    let mut out = seq.to_vec();
    out.rotate_right(k);
    Ok(out)
}
