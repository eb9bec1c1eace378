//! Rank modulo the Mersenne prime `2^61 − 1`. For an integer matrix the rank
//! mod `p` never exceeds the rank over ℚ, so full rank mod `p` settles full
//! rank exactly and only rank-deficient cases need big-integer elimination.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

pub const P: u64 = (1 << 61) - 1;

pub fn reduce(v: &BigInt) -> u64 {
    v.mod_floor(&BigInt::from(P)).to_u64().expect("residue fits in u64")
}

pub fn from_i64(v: i64) -> u64 {
    v.rem_euclid(P as i64) as u64
}

pub fn mul(a: u64, b: u64) -> u64 {
    let x = a as u128 * b as u128;
    let s = (x as u64 & P) + (x >> 61) as u64;
    if s >= P {
        s - P
    } else {
        s
    }
}

pub fn add(a: u64, b: u64) -> u64 {
    let s = a + b;
    if s >= P {
        s - P
    } else {
        s
    }
}

pub fn sub(a: u64, b: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + P - b
    }
}

/// Inverse of a nonzero residue by the extended Euclidean algorithm.
pub fn inv(a: u64) -> u64 {
    let (mut r0, mut r1) = (P as i128, a as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    t0.rem_euclid(P as i128) as u64
}

/// Rank of a row-major matrix over `GF(p)`; entries must be reduced.
pub fn rank(mut a: Vec<u64>, rows: usize, cols: usize) -> usize {
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| a[i * cols + c] != 0) else { continue };
        for j in 0..cols {
            a.swap(p * cols + j, r * cols + j);
        }
        let pinv = inv(a[r * cols + c]);
        for i in r + 1..rows {
            let f = mul(a[i * cols + c], pinv);
            if f != 0 {
                for j in c..cols {
                    a[i * cols + j] = sub(a[i * cols + j], mul(f, a[r * cols + j]));
                }
            }
        }
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_ranks() {
        assert_eq!(rank(vec![1, 2, 2, 4], 2, 2), 1);
        assert_eq!(rank(vec![1, 2, 3, 4], 2, 2), 2);
        assert_eq!(rank(vec![0, 0, 0, 0, 0, 5], 3, 2), 1);
        assert_eq!(reduce(&BigInt::from(-1)), P - 1);
        assert_eq!(mul(inv(12345), 12345), 1);
        assert_eq!(mul(P - 1, P - 1), 1);
        for a in [1, 2, P - 1, P / 3, 1 << 60] {
            assert_eq!(mul(inv(a), a), 1);
            assert_eq!(mul(a, P - 1), sub(0, a));
        }
    }
}
