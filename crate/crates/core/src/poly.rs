//! Ternary forms, binary forms and univariate polynomials over GF(q).

use crate::field::{Elem, FieldSpec};
use crate::plane::Triple;

/// Exponents `(a, b, c)` of `x^a y^b z^c` with `a + b + c = d`, in ascending
/// lexicographic order.
pub fn monomials(d: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::with_capacity(num_monomials(d));
    for a in 0..=d {
        for b in 0..=d - a {
            out.push([a, b, d - a - b]);
        }
    }
    out
}

pub fn num_monomials(d: u32) -> usize {
    let d = d as usize;
    (d + 1) * (d + 2) / 2
}

/// Homogeneous polynomial of degree `d` in `x, y, z`; `coeffs[i]` belongs to
/// `monomials(d)[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HomPoly {
    pub d: u32,
    pub coeffs: Vec<Elem>,
}

impl HomPoly {
    pub fn zero(d: u32) -> Self {
        HomPoly {
            d,
            coeffs: vec![0; num_monomials(d)],
        }
    }

    /// Sum of `c * x^a y^b z^c` terms; repeated monomials accumulate.
    pub fn from_terms(f: &FieldSpec, d: u32, terms: &[(Elem, [u32; 3])]) -> Self {
        let monos = monomials(d);
        let mut p = HomPoly::zero(d);
        for &(c, e) in terms {
            assert_eq!(e.iter().sum::<u32>(), d, "term degree differs from {d}");
            let i = monos.iter().position(|m| *m == e).unwrap();
            p.coeffs[i] = f.add(p.coeffs[i], c);
        }
        p
    }

    /// The linear form `a x + b y + c z`.
    pub fn linear(l: Triple) -> Self {
        HomPoly {
            d: 1,
            coeffs: vec![l[2], l[1], l[0]],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (Elem, [u32; 3])> + '_ {
        self.coeffs
            .iter()
            .zip(monomials(self.d))
            .filter(|(c, _)| **c != 0)
            .map(|(&c, m)| (c, m))
    }

    pub fn mul(&self, f: &FieldSpec, other: &HomPoly) -> HomPoly {
        let d = self.d + other.d;
        let mut terms = Vec::new();
        for (c1, m1) in self.terms() {
            for (c2, m2) in other.terms() {
                terms.push((f.mul(c1, c2), [m1[0] + m2[0], m1[1] + m2[1], m1[2] + m2[2]]));
            }
        }
        HomPoly::from_terms(f, d, &terms)
    }

    pub fn eval(&self, f: &FieldSpec, v: Triple) -> Elem {
        self.terms().fold(0, |acc, (c, m)| f.add(acc, f.mul(c, monomial_value(f, m, v))))
    }

    /// Formal partial derivative in variable `var` (0 = x, 1 = y, 2 = z).
    pub fn partial(&self, f: &FieldSpec, var: usize) -> HomPoly {
        if self.d == 0 {
            return HomPoly::zero(0);
        }
        let mut terms = Vec::new();
        for (c, m) in self.terms() {
            if m[var] == 0 {
                continue;
            }
            let mut e = m;
            e[var] -= 1;
            terms.push((f.mul(c, f.from_int(m[var] as i64)), e));
        }
        HomPoly::from_terms(f, self.d - 1, &terms)
    }
}

pub fn monomial_value(f: &FieldSpec, m: [u32; 3], v: Triple) -> Elem {
    (0..3).fold(1, |acc, i| f.mul(acc, f.pow(v[i], m[i] as u64)))
}

/// Binary form of degree `d` in `s, t`; `coeffs[j]` is the coefficient of
/// `s^j t^(d-j)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryForm {
    pub coeffs: Vec<Elem>,
}

impl BinaryForm {
    pub fn zero(d: u32) -> Self {
        BinaryForm {
            coeffs: vec![0; d as usize + 1],
        }
    }

    pub fn degree(&self) -> u32 {
        self.coeffs.len() as u32 - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// `(a s + b t)`.
    pub fn linear(a: Elem, b: Elem) -> Self {
        BinaryForm { coeffs: vec![b, a] }
    }

    pub fn mul(&self, f: &FieldSpec, other: &BinaryForm) -> BinaryForm {
        let mut out = vec![0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] = f.add(out[i + j], f.mul(a, b));
            }
        }
        BinaryForm { coeffs: out }
    }

    pub fn pow(&self, f: &FieldSpec, e: u32) -> BinaryForm {
        (0..e).fold(BinaryForm { coeffs: vec![1] }, |acc, _| acc.mul(f, self))
    }

    pub fn eval(&self, f: &FieldSpec, s: Elem, t: Elem) -> Elem {
        let d = self.degree() as u64;
        self.coeffs.iter().enumerate().fold(0, |acc, (j, &c)| {
            f.add(acc, f.mul(c, f.mul(f.pow(s, j as u64), f.pow(t, d - j as u64))))
        })
    }

    /// Dense index `sum coeffs[j] q^j`, used to key lookup tables.
    pub fn index(&self, q: u32) -> usize {
        self.coeffs.iter().rev().fold(0, |acc, &c| acc * q as usize + c as usize)
    }

    pub fn from_index(q: u32, d: u32, mut idx: usize) -> Self {
        let coeffs = (0..=d)
            .map(|_| {
                let c = (idx % q as usize) as Elem;
                idx /= q as usize;
                c
            })
            .collect();
        BinaryForm { coeffs }
    }

    /// Removes every factor vanishing at `(s0 : t0)`.
    pub fn strip_root(&self, f: &FieldSpec, s0: Elem, t0: Elem) -> BinaryForm {
        // The factor vanishing at (s0:t0) is t0 s - s0 t.
        let lin = [f.neg(s0), t0];
        let mut g = self.coeffs.clone();
        if g.iter().all(|&c| c == 0) {
            return self.clone();
        }
        loop {
            match div_exact_linear(f, &g, lin) {
                Some(h) => g = h,
                None => return BinaryForm { coeffs: g },
            }
        }
    }
}

/// Divides the binary form `g` by `lin[1] s + lin[0] t` if it divides exactly.
fn div_exact_linear(f: &FieldSpec, g: &[Elem], lin: [Elem; 2]) -> Option<Vec<Elem>> {
    let (b, a) = (lin[0], lin[1]);
    let n = g.len() - 1;
    if n == 0 {
        return None;
    }
    // Work from the s^0 end when b != 0, otherwise the divisor is a*s.
    let mut h = vec![0; n];
    if b != 0 {
        let binv = f.inv(b).ok()?;
        let mut rem = g.to_vec();
        for j in 0..n {
            h[j] = f.mul(rem[j], binv);
            rem[j] = 0;
            rem[j + 1] = f.sub(rem[j + 1], f.mul(h[j], a));
        }
        (rem[n] == 0).then_some(h)
    } else {
        if g[0] != 0 {
            return None;
        }
        let ainv = f.inv(a).ok()?;
        Some(g[1..].iter().map(|&c| f.mul(c, ainv)).collect())
    }
}

/// Dense univariate polynomial, low coefficient first, no trailing zeros.
pub type UniPoly = Vec<Elem>;

pub fn trim(mut p: UniPoly) -> UniPoly {
    while p.last() == Some(&0) {
        p.pop();
    }
    p
}

pub fn derivative(f: &FieldSpec, p: &[Elem]) -> UniPoly {
    trim(
        p.iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| f.mul(c, f.from_int(i as i64)))
            .collect(),
    )
}

pub fn rem(f: &FieldSpec, a: &[Elem], b: &[Elem]) -> UniPoly {
    let b = trim(b.to_vec());
    assert!(!b.is_empty(), "division by the zero polynomial");
    let mut r = trim(a.to_vec());
    let lead_inv = f.inv(*b.last().unwrap()).expect("nonzero leading coefficient");
    while r.len() >= b.len() {
        let shift = r.len() - b.len();
        let c = f.mul(*r.last().unwrap(), lead_inv);
        for (i, &bc) in b.iter().enumerate() {
            r[shift + i] = f.sub(r[shift + i], f.mul(c, bc));
        }
        r = trim(r);
    }
    r
}

/// Monic gcd (empty for `gcd(0, 0)`).
pub fn gcd(f: &FieldSpec, a: &[Elem], b: &[Elem]) -> UniPoly {
    let (mut a, mut b) = (trim(a.to_vec()), trim(b.to_vec()));
    while !b.is_empty() {
        let r = rem(f, &a, &b);
        a = b;
        b = r;
    }
    if let Some(&l) = a.last() {
        let inv = f.inv(l).unwrap();
        a.iter_mut().for_each(|c| *c = f.mul(*c, inv));
    }
    a
}

/// True iff `g` is nonzero with no repeated factor over the algebraic closure.
pub fn is_squarefree_binary(f: &FieldSpec, g: &BinaryForm) -> bool {
    if g.is_zero() {
        return false;
    }
    let d = g.degree();
    // Dehomogenize at t = 1; the point (1:0) has multiplicity d - deg h.
    let h = trim(g.coeffs.clone());
    let deg_h = h.len() as u32 - 1;
    if d - deg_h > 1 {
        return false;
    }
    if deg_h == 0 {
        return true;
    }
    let dh = derivative(f, &h);
    if dh.is_empty() {
        // A p-th power of a polynomial in s.
        return false;
    }
    gcd(f, &h, &dh).len() == 1
}

/// Squarefree flags for every binary form of degree `d`, by dense index.
pub fn squarefree_table(f: &FieldSpec, d: u32) -> Vec<bool> {
    let size = (f.q() as usize).pow(d + 1);
    (0..size)
        .map(|i| is_squarefree_binary(f, &BinaryForm::from_index(f.q(), d, i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn gf(q: u64) -> FieldSpec {
        FieldSpec::with_order(q).unwrap()
    }

    #[test]
    fn monomial_order() {
        assert_eq!(monomials(1), vec![[0, 0, 1], [0, 1, 0], [1, 0, 0]]);
        assert_eq!(monomials(2)[..3], [[0, 0, 2], [0, 1, 1], [0, 2, 0]]);
        assert_eq!(monomials(5).len(), 21);
    }

    #[test]
    fn squarefree_examples() {
        let f = gf(2);
        // s^2 t + s t^2 = st(s+t)
        assert!(is_squarefree_binary(&f, &BinaryForm { coeffs: vec![0, 1, 1, 0] }));
        // (s+t)^2 = s^2 + t^2
        assert!(!is_squarefree_binary(&f, &BinaryForm { coeffs: vec![1, 0, 1] }));
        // s^2 + st + t^2
        assert!(is_squarefree_binary(&f, &BinaryForm { coeffs: vec![1, 1, 1] }));
        assert!(!is_squarefree_binary(&f, &BinaryForm::zero(3)));
        // t^2 and s^2 carry double roots at (1:0) and (0:1).
        assert!(!is_squarefree_binary(&f, &BinaryForm { coeffs: vec![1, 0, 0] }));
        assert!(!is_squarefree_binary(&f, &BinaryForm { coeffs: vec![0, 0, 1] }));
        // Nonzero constants and linear forms are squarefree.
        assert!(is_squarefree_binary(&f, &BinaryForm { coeffs: vec![1] }));
        assert!(is_squarefree_binary(&f, &BinaryForm { coeffs: vec![1, 0] }));
    }

    /// All products `u^2 w` with `deg u >= 1`, nonzero, of total degree `d`.
    fn non_squarefree_forms(f: &FieldSpec, d: u32) -> HashSet<Vec<Elem>> {
        let q = f.q();
        let mut out = HashSet::new();
        for du in 1..=d / 2 {
            let dw = d - 2 * du;
            for iu in 0..(q as usize).pow(du + 1) {
                let u = BinaryForm::from_index(q, du, iu);
                if u.is_zero() {
                    continue;
                }
                let u2 = u.mul(f, &u);
                for iw in 0..(q as usize).pow(dw + 1) {
                    let w = BinaryForm::from_index(q, dw, iw);
                    if !w.is_zero() {
                        out.insert(u2.mul(f, &w).coeffs);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn squarefree_matches_product_enumeration() {
        for q in [2, 3, 4] {
            let f = gf(q);
            let max_d = if q == 4 { 4 } else { 5 };
            for d in 0..=max_d {
                let bad = non_squarefree_forms(&f, d);
                for i in 0..(q as usize).pow(d + 1) {
                    let g = BinaryForm::from_index(q as u32, d, i);
                    let expected = !g.is_zero() && !bad.contains(&g.coeffs);
                    assert_eq!(is_squarefree_binary(&f, &g), expected, "q={q} {g:?}");
                }
            }
        }
    }

    #[test]
    fn index_round_trip() {
        for i in 0..81 {
            assert_eq!(BinaryForm::from_index(3, 3, i).index(3), i);
        }
    }

    #[test]
    fn partials_and_evaluation() {
        let f = gf(3);
        // f = x^2 y + 2 z^3
        let p = HomPoly::from_terms(&f, 3, &[(1, [2, 1, 0]), (2, [0, 0, 3])]);
        assert_eq!(p.partial(&f, 0), HomPoly::from_terms(&f, 2, &[(2, [1, 1, 0])]));
        // d/dz of 2 z^3 = 6 z^2 = 0 in characteristic 3.
        assert!(p.partial(&f, 2).is_zero());
        assert_eq!(p.eval(&f, [1, 1, 1]), 0);
        assert_eq!(p.eval(&f, [1, 2, 0]), 2);
        let xy = HomPoly::linear([1, 0, 0]).mul(&f, &HomPoly::linear([0, 1, 0]));
        assert_eq!(xy, HomPoly::from_terms(&f, 2, &[(1, [1, 1, 0])]));
    }

    #[test]
    fn strip_root_removes_linear_factor() {
        let f = gf(3);
        let l = BinaryForm::linear(1, 2); // s + 2t vanishes at (1:1)
        let m = BinaryForm::linear(0, 1); // t
        let g = l.pow(&f, 2).mul(&f, &m);
        assert_eq!(g.strip_root(&f, 1, 1), BinaryForm { coeffs: vec![1] }.mul(&f, &m));
        // The factor removed for (1:0) is -t, leaving a scalar 2 = -1 behind.
        assert_eq!(g.strip_root(&f, 1, 0), l.pow(&f, 2).mul(&f, &BinaryForm { coeffs: vec![2] }));
        assert_eq!(g.strip_root(&f, 0, 1), g);
    }

    #[test]
    fn gcd_basics() {
        let f = gf(5);
        // (s-1)(s-2) and (s-1)(s-3)
        let a = vec![2, 2, 1];
        let b = vec![3, 1, 1];
        assert_eq!(gcd(&f, &a, &b), vec![4, 1]);
        assert_eq!(gcd(&f, &a, &[]), a);
    }
}
