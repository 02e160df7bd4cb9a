//! Arithmetic in GF(p^r).
//!
//! Elements are dense indices in `[0, q)`: the index `Σ c_i p^i` stands for the
//! residue class of `Σ c_i x^i` modulo the field's modulus. Index 0 is zero and
//! index 1 is one. The modulus is the lexicographically least monic irreducible
//! of degree `r` (coefficients compared constant term first), so element
//! numbering is reproducible everywhere.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A field element, stored as its index in `[0, q)`.
pub type Elem = u32;

const MAX_Q: u64 = 1 << 20;
const LOG_TABLE_MAX_Q: u32 = 1 << 16;
const FULL_TABLE_MAX_Q: u32 = 256;

#[derive(Debug)]
struct Tables {
    /// `exp[i] = g^i` for `i` in `0..q-1`.
    exp: Vec<Elem>,
    /// `log[a]` for nonzero `a`; `log[0]` unused.
    log: Vec<u32>,
    /// Full addition table, row-major, when `q <= 256`.
    add: Option<Vec<Elem>>,
    neg: Vec<Elem>,
}

/// A constructed finite field GF(p^r).
#[derive(Clone)]
pub struct FieldSpec {
    p: u32,
    r: u32,
    q: u32,
    modulus: Vec<u32>,
    generator: Elem,
    tables: Option<Arc<Tables>>,
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSpec")
            .field("p", &self.p)
            .field("r", &self.r)
            .field("q", &self.q)
            .field("modulus", &self.modulus)
            .finish()
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.r == other.r && self.modulus == other.modulus
    }
}

impl Eq for FieldSpec {}

pub fn is_prime(n: u64) -> bool {
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

/// Splits `q` as `p^r` with `p` prime, or reports that `q` is not a prime power.
pub fn prime_power(q: u64) -> Result<(u32, u32)> {
    if q < 2 {
        return Err(Error::NotPrimePower(q));
    }
    let mut p = 2;
    while q % p != 0 {
        p += 1;
    }
    let mut rest = q;
    let mut r = 0;
    while rest % p == 0 {
        rest /= p;
        r += 1;
    }
    if rest != 1 {
        return Err(Error::NotPrimePower(q));
    }
    Ok((p as u32, r))
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

// Dense polynomials over GF(p), low degree first, used only while building the field.

fn trim(a: &mut Vec<u32>) {
    while a.last() == Some(&0) {
        a.pop();
    }
}

fn inv_mod(a: u32, p: u32) -> u32 {
    // p is prime and small; Fermat.
    let mut result = 1u64;
    let mut base = a as u64 % p as u64;
    let mut e = p as u64 - 2;
    while e > 0 {
        if e & 1 == 1 {
            result = result * base % p as u64;
        }
        base = base * base % p as u64;
        e >>= 1;
    }
    result as u32
}

fn prime_poly_rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut r = a.to_vec();
    trim(&mut r);
    let db = b.len() - 1;
    let lead_inv = inv_mod(b[db], p) as u64;
    while r.len() > db {
        let shift = r.len() - 1 - db;
        let factor = r[r.len() - 1] as u64 * lead_inv % p as u64;
        for (i, &bc) in b.iter().enumerate() {
            let sub = factor * bc as u64 % p as u64;
            let idx = i + shift;
            r[idx] = ((r[idx] as u64 + p as u64 - sub) % p as u64) as u32;
        }
        trim(&mut r);
    }
    r
}

fn digits(mut n: u64, p: u32, len: usize) -> Vec<u32> {
    let mut out = vec![0; len];
    for d in out.iter_mut() {
        *d = (n % p as u64) as u32;
        n /= p as u64;
    }
    out
}

/// Irreducibility over GF(p) by trial division by every monic polynomial of
/// degree at most `deg / 2`.
pub fn is_irreducible_over_prime(poly: &[u32], p: u32) -> bool {
    let mut f = poly.to_vec();
    trim(&mut f);
    if f.len() < 2 {
        return false;
    }
    let deg = f.len() - 1;
    for d in 1..=deg / 2 {
        let count = (p as u64).pow(d as u32);
        for low in 0..count {
            let mut div = digits(low, p, d);
            div.push(1);
            if prime_poly_rem(&f, &div, p).is_empty() {
                return false;
            }
        }
    }
    true
}

/// Lexicographically least monic irreducible polynomial of degree `r` over GF(p),
/// comparing coefficient vectors constant term first.
pub fn least_irreducible(p: u32, r: u32) -> Vec<u32> {
    let count = (p as u64).pow(r);
    for rank in 0..count {
        // The constant term is the most significant digit of the rank.
        let mut coeffs = digits(rank, p, r as usize);
        coeffs.reverse();
        coeffs.push(1);
        if is_irreducible_over_prime(&coeffs, p) {
            return coeffs;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

impl FieldSpec {
    /// Builds GF(p^r). Requires `p` prime, `1 <= r <= 8` and `p^r <= 2^20`.
    pub fn new(p: u32, r: u32) -> Result<Self> {
        if !is_prime(p as u64) {
            return Err(Error::NotPrime(p as u64));
        }
        if !(1..=8).contains(&r) {
            return Err(Error::FieldBounds(format!("exponent r = {r} outside 1..=8")));
        }
        let q = (p as u64)
            .checked_pow(r)
            .filter(|&q| q <= MAX_Q)
            .ok_or_else(|| Error::FieldBounds(format!("{p}^{r} exceeds 2^20")))?;
        let modulus = least_irreducible(p, r);
        let mut spec = FieldSpec {
            p,
            r,
            q: q as u32,
            modulus,
            generator: 0,
            tables: None,
        };
        spec.generator = spec.find_generator();
        if spec.q <= LOG_TABLE_MAX_Q {
            spec.tables = Some(Arc::new(spec.build_tables()));
        }
        Ok(spec)
    }

    /// Builds GF(q) for a prime power `q`.
    pub fn with_order(q: u64) -> Result<Self> {
        let (p, r) = prime_power(q)?;
        Self::new(p, r)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    /// Coefficients of the modulus, constant term first; the last entry is 1.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    /// A fixed primitive element (the least index generating the unit group).
    pub fn generator(&self) -> Elem {
        self.generator
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        0..self.q
    }

    /// Coordinate vector of `a` in the polynomial basis.
    pub fn coords(&self, a: Elem) -> Vec<u32> {
        digits(a as u64, self.p, self.r as usize)
    }

    pub fn from_coords(&self, coords: &[u32]) -> Elem {
        coords
            .iter()
            .rev()
            .fold(0u32, |acc, &c| acc * self.p + c % self.p)
    }

    /// Image of the integer `n` under `Z -> GF(q)`.
    pub fn from_int(&self, n: i64) -> Elem {
        n.rem_euclid(self.p as i64) as Elem
    }

    fn add_digits(&self, mut a: Elem, mut b: Elem) -> Elem {
        let p = self.p;
        let mut out = 0;
        let mut place = 1;
        while a > 0 || b > 0 {
            out += ((a % p + b % p) % p) * place;
            a /= p;
            b /= p;
            place *= p;
        }
        out
    }

    fn neg_digits(&self, mut a: Elem) -> Elem {
        let p = self.p;
        let mut out = 0;
        let mut place = 1;
        while a > 0 {
            out += ((p - a % p) % p) * place;
            a /= p;
            place *= p;
        }
        out
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        if self.p == 2 {
            return a ^ b;
        }
        if let Some(t) = &self.tables {
            if let Some(add) = &t.add {
                return add[(a * self.q + b) as usize];
            }
        }
        self.add_digits(a, b)
    }

    #[inline]
    pub fn neg(&self, a: Elem) -> Elem {
        if self.p == 2 {
            return a;
        }
        match &self.tables {
            Some(t) => t.neg[a as usize],
            None => self.neg_digits(a),
        }
    }

    #[inline]
    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        if a == 0 || b == 0 {
            return 0;
        }
        match &self.tables {
            Some(t) => {
                let s = t.log[a as usize] + t.log[b as usize];
                let n = self.q - 1;
                t.exp[(if s >= n { s - n } else { s }) as usize]
            }
            None => self.mul_slow(a, b),
        }
    }

    /// Multiplication by schoolbook polynomial product and reduction modulo the
    /// modulus. Table-free; the reference for the table path.
    pub fn mul_slow(&self, a: Elem, b: Elem) -> Elem {
        let p = self.p as u64;
        let r = self.r as usize;
        let ca = self.coords(a);
        let cb = self.coords(b);
        let mut prod = vec![0u64; 2 * r];
        for (i, &x) in ca.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in cb.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x as u64 * y as u64) % p;
            }
        }
        // Reduce using x^r = -(m_0 + ... + m_{r-1} x^{r-1}).
        for top in (r..2 * r).rev() {
            let c = prod[top];
            if c == 0 {
                continue;
            }
            prod[top] = 0;
            for (i, &m) in self.modulus[..r].iter().enumerate() {
                let idx = top - r + i;
                prod[idx] = (prod[idx] + (p - c) * m as u64) % p;
            }
        }
        let reduced: Vec<u32> = prod[..r].iter().map(|&c| c as u32).collect();
        self.from_coords(&reduced)
    }

    pub fn pow(&self, a: Elem, mut e: u64) -> Elem {
        let mut result = 1;
        let mut base = a;
        while e > 0 {
            if e & 1 == 1 {
                result = self.mul(result, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        result
    }

    fn pow_slow(&self, a: Elem, mut e: u64) -> Elem {
        let mut result = 1;
        let mut base = a;
        while e > 0 {
            if e & 1 == 1 {
                result = self.mul_slow(result, base);
            }
            base = self.mul_slow(base, base);
            e >>= 1;
        }
        result
    }

    pub fn inv(&self, a: Elem) -> Result<Elem> {
        if a == 0 {
            return Err(Error::DivisionByZero);
        }
        Ok(match &self.tables {
            Some(t) => {
                let n = self.q - 1;
                t.exp[((n - t.log[a as usize]) % n) as usize]
            }
            None => self.pow(a, self.q as u64 - 2),
        })
    }

    pub fn div(&self, a: Elem, b: Elem) -> Result<Elem> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// The Frobenius map `a -> a^p`, by repeated multiplication.
    pub fn frobenius(&self, a: Elem) -> Elem {
        let mut out = 1;
        for _ in 0..self.p {
            out = self.mul(out, a);
        }
        out
    }

    fn find_generator(&self) -> Elem {
        if self.q == 2 {
            return 1;
        }
        let order = self.q as u64 - 1;
        let factors = prime_factors(order);
        (2..self.q)
            .find(|&g| factors.iter().all(|&f| self.pow_slow(g, order / f) != 1))
            .expect("the unit group of a finite field is cyclic")
    }

    fn build_tables(&self) -> Tables {
        let n = (self.q - 1) as usize;
        let mut exp = Vec::with_capacity(n);
        let mut log = vec![0u32; self.q as usize];
        let mut x: Elem = 1;
        for i in 0..n {
            exp.push(x);
            log[x as usize] = i as u32;
            x = self.mul_slow(x, self.generator);
        }
        let neg = (0..self.q).map(|a| self.neg_digits(a)).collect();
        let add = (self.q <= FULL_TABLE_MAX_Q).then(|| {
            let mut t = Vec::with_capacity((self.q * self.q) as usize);
            for a in 0..self.q {
                for b in 0..self.q {
                    t.push(self.add_digits(a, b));
                }
            }
            t
        });
        Tables { exp, log, add, neg }
    }

    /// Fixed points of `a -> a^(p^(r/2))`: the unique subfield of order `sqrt(q)`,
    /// sorted by index.
    pub fn fixed_subfield(&self) -> Result<Vec<Elem>> {
        if self.r % 2 != 0 {
            return Err(Error::OddDegree(self.r));
        }
        let half = self.r / 2;
        Ok(self
            .elements()
            .filter(|&a| {
                let mut b = a;
                for _ in 0..half {
                    b = self.frobenius(b);
                }
                b == a
            })
            .collect())
    }

    /// Embeds GF(p^(r/2)) into this field. The returned map sends sub-field index
    /// `i` to `image[i]`; it is a ring homomorphism onto [`fixed_subfield`].
    ///
    /// [`fixed_subfield`]: FieldSpec::fixed_subfield
    pub fn subfield_embed(&self) -> Result<SubfieldEmbedding> {
        let fixed = self.fixed_subfield()?;
        let sub = FieldSpec::new(self.p, self.r / 2)?;
        // A root of the subfield's modulus inside the fixed set plays the role of x.
        let beta = fixed
            .iter()
            .copied()
            .find(|&b| {
                let mut acc = 0;
                for &c in sub.modulus().iter().rev() {
                    acc = self.add(self.mul(acc, b), self.from_int(c as i64));
                }
                acc == 0
            })
            .expect("the subfield modulus splits in the fixed field");
        let image = sub
            .elements()
            .map(|i| {
                let mut acc = 0;
                for &c in sub.coords(i).iter().rev() {
                    acc = self.add(self.mul(acc, beta), self.from_int(c as i64));
                }
                acc
            })
            .collect();
        Ok(SubfieldEmbedding { sub, image })
    }
}

/// The embedding of the subfield of order `sqrt(q)`.
#[derive(Debug, Clone)]
pub struct SubfieldEmbedding {
    pub sub: FieldSpec,
    pub image: Vec<Elem>,
}
