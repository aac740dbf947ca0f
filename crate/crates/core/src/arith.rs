//! Exact integer primitives and the congruence filters on D.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Extended Euclid on `i128`: returns `(g, x, y)` with `g = gcd(a, b) >= 0`
/// and `a*x + b*y = g`. `gcd(0, 0) = 0` with zero coefficients.
pub fn ext_gcd_i128(a: i128, b: i128) -> (i128, i128, i128) {
    if a == 0 && b == 0 {
        return (0, 0, 0);
    }
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r / r;
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

/// Extended Euclid; see [`ext_gcd_i128`]. The Bézout coefficients are
/// bounded by the inputs, so they always fit back into `i64`.
pub fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (g, x, y) = ext_gcd_i128(a as i128, b as i128);
    (g as i64, x as i64, y as i64)
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a as i64
}

pub fn gcd3(a: i64, b: i64, c: i64) -> i64 {
    gcd(gcd(a, b), c)
}

/// Floor of the square root.
pub fn isqrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).map_or(true, |sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    r
}

/// Returns `Some(r)` when `n = r*r`.
pub fn exact_sqrt(n: u64) -> Option<u64> {
    let r = isqrt(n);
    (r * r == n).then_some(r)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization {
    pub n: u64,
    /// `(prime, exponent)` with primes strictly increasing.
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    /// Number of distinct prime divisors.
    pub fn distinct_primes(&self) -> usize {
        self.factors.len()
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }
}

const TRIAL_LIMIT: u64 = 1_000_000;

/// Trial division below 10^6, then Pollard rho (Brent) with a deterministic
/// Miller–Rabin test on the cofactor.
pub fn factorize(n: u64) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::ZeroInput);
    }
    let mut rest = n;
    let mut primes: Vec<u64> = Vec::new();

    for p in [2u64, 3, 5] {
        while rest % p == 0 {
            primes.push(p);
            rest /= p;
        }
    }
    // wheel mod 30
    const STEPS: [u64; 8] = [4, 2, 4, 2, 4, 6, 2, 6];
    let mut p = 7u64;
    let mut i = 0;
    while p < TRIAL_LIMIT && p.saturating_mul(p) <= rest {
        while rest % p == 0 {
            primes.push(p);
            rest /= p;
        }
        p += STEPS[i];
        i = (i + 1) % 8;
    }
    if rest > 1 {
        split_large(rest, &mut primes);
    }

    primes.sort_unstable();
    let mut factors: Vec<(u64, u32)> = Vec::new();
    for p in primes {
        match factors.last_mut() {
            Some((q, e)) if *q == p => *e += 1,
            _ => factors.push((p, 1)),
        }
    }
    Ok(Factorization { n, factors })
}

fn split_large(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    if let Some(r) = exact_sqrt(n) {
        split_large(r, out);
        split_large(r, out);
        return;
    }
    let mut c = 1u64;
    loop {
        if let Some(d) = pollard_brent(n, c) {
            split_large(d, out);
            split_large(n / d, out);
            return;
        }
        c += 1;
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin for all 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for p in BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn pollard_brent(n: u64, c: u64) -> Option<u64> {
    if n % 2 == 0 {
        return Some(2);
    }
    let f = |x: u64| (mul_mod(x, x, n) + c) % n;
    let (mut y, mut r, mut q) = (2u64, 1u64, 1u64);
    let mut g = 1u64;
    let mut x = y;
    let mut ys = y;
    const BLOCK: u64 = 128;
    while g == 1 {
        x = y;
        for _ in 0..r {
            y = f(y);
        }
        let mut k = 0;
        while k < r && g == 1 {
            ys = y;
            for _ in 0..BLOCK.min(r - k) {
                y = f(y);
                q = mul_mod(q, x.abs_diff(y), n);
            }
            g = gcd(q as i64, n as i64) as u64;
            k += BLOCK;
        }
        r *= 2;
        if r > 1 << 40 {
            return None;
        }
    }
    if g == n {
        loop {
            ys = f(ys);
            g = gcd(x.abs_diff(ys) as i64, n as i64) as u64;
            if g > 1 {
                break;
            }
        }
    }
    (g != n).then_some(g)
}

/// Jacobi symbol `(a | n)` for odd `n >= 1`.
pub fn jacobi(a: i64, n: i64) -> Result<i8> {
    if n < 1 || n % 2 == 0 {
        return Err(Error::EvenModulus(n));
    }
    let mut a = a.rem_euclid(n);
    let mut n = n;
    let mut sign = 1i8;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if matches!(n % 8, 3 | 5) {
                sign = -sign;
            }
        }
        (a, n) = (n, a);
        if a % 4 == 3 && n % 4 == 3 {
            sign = -sign;
        }
        a %= n;
    }
    Ok(if n == 1 { sign } else { 0 })
}

/// Congruence conditions on D: admissibility (D mod 8 not in {0, 4, 7}),
/// splitting at a set of odd primes (-D a nonzero square mod p) and
/// squarefreeness.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CongruenceFilter {
    pub require_admissible: bool,
    pub split_primes: Vec<u64>,
    pub require_squarefree: bool,
}

impl CongruenceFilter {
    pub fn new(require_admissible: bool, split_primes: Vec<u64>, require_squarefree: bool) -> Result<Self> {
        let mut seen = split_primes.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != split_primes.len() {
            return Err(Error::InvalidArgument("split primes must be distinct".into()));
        }
        if let Some(&p) = split_primes.iter().find(|&&p| p == 2 || !is_prime(p)) {
            return Err(Error::InvalidArgument(format!("split prime {p} is not an odd prime")));
        }
        Ok(CongruenceFilter { require_admissible, split_primes, require_squarefree })
    }

    pub fn admissible() -> Self {
        CongruenceFilter { require_admissible: true, ..Default::default() }
    }
}

/// D mod 8 not in {0, 4, 7}.
pub fn is_admissible(d: u64) -> bool {
    !matches!(d % 8, 0 | 4 | 7)
}

pub fn is_squarefree(d: u64) -> bool {
    d >= 1 && factorize(d).map(|f| f.is_squarefree()).unwrap_or(false)
}

pub fn passes_filter(d: u64, filter: &CongruenceFilter) -> bool {
    if filter.require_admissible && !is_admissible(d) {
        return false;
    }
    for &p in &filter.split_primes {
        if d % p == 0 {
            return false;
        }
        // p is an odd prime, validated at construction
        if jacobi(-((d % p) as i64), p as i64) != Ok(1) {
            return false;
        }
    }
    !(filter.require_squarefree && !is_squarefree(d))
}
