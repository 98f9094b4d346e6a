//! Rational-integer helpers shared by the ideal and group code.

use crate::error::{Error, Result};

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn lcm(a: i64, b: i64) -> i64 {
    if a == 0 || b == 0 {
        return 0;
    }
    (a / gcd(a, b) * b).abs()
}

/// Returns `(g, u, v)` with `u*a + v*b = g = gcd(a, b) >= 0`.
pub fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i64, 0i64);
    let (mut old_t, mut t) = (0i64, 1i64);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

pub fn is_prime(n: i64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Primes up to and including `bound`.
pub fn primes_up_to(bound: i64) -> Vec<i64> {
    if bound < 2 {
        return Vec::new();
    }
    let n = bound as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            let mut j = i * i;
            while j <= n {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    sieve
        .iter()
        .enumerate()
        .filter(|(_, &p)| p)
        .map(|(i, _)| i as i64)
        .collect()
}

/// Factor `n > 0` by trial division with primes `<= bound`. A cofactor left
/// over is accepted as prime only when it is below `bound^2`.
pub fn factor(n: i64, bound: i64) -> Result<Vec<(i64, u32)>> {
    if n <= 0 {
        return Err(Error::Invalid(format!("cannot factor {n}")));
    }
    let mut out = Vec::new();
    let mut m = n;
    let mut p = 2i64;
    while p <= bound && p * p <= m {
        if m % p == 0 {
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        if (m as i128) > (bound as i128) * (bound as i128) && p * p <= m {
            return Err(Error::NormTooLarge { norm: n, bound });
        }
        out.push((m, 1));
    }
    Ok(out)
}

/// Kronecker symbol `(d | p)` for a prime `p`.
pub fn kronecker(d: i64, p: i64) -> i32 {
    if p == 2 {
        if d % 2 == 0 {
            return 0;
        }
        return match d.rem_euclid(8) {
            1 | 7 => 1,
            _ => -1,
        };
    }
    let a = d.rem_euclid(p);
    if a == 0 {
        return 0;
    }
    if pow_mod(a, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

pub fn pow_mod(mut b: i64, mut e: i64, m: i64) -> i64 {
    let mut r = 1i64 % m;
    b = b.rem_euclid(m);
    while e > 0 {
        if e & 1 == 1 {
            r = ((r as i128 * b as i128) % m as i128) as i64;
        }
        b = ((b as i128 * b as i128) % m as i128) as i64;
        e >>= 1;
    }
    r
}

pub fn isqrt(n: i64) -> i64 {
    if n <= 0 {
        return 0;
    }
    let mut r = (n as f64).sqrt() as i64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}
