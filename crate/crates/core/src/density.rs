//! Exact densities of simple sets and the closed-form bounds built from them.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::blocking::bits;
use crate::error::{Error, Result};
use crate::plane::{PointId, Plane};
use crate::rat::{self, Rat, RatValue};

/// Density of `S_U^X` for `U ≅ P^m`: `prod_{k=0}^m (1 - q^(k - dimX - 1))`.
/// `dim_x = -1` stands for the empty scheme and gives density 1.
pub fn zeta_density_linear(m: i32, dim_x: i32, q: u64) -> Result<Rat> {
    check_dims(m, dim_x)?;
    if dim_x == -1 {
        return Ok(Rat::one());
    }
    Ok((0..=m).fold(Rat::one(), |acc, k| acc * (Rat::one() - rat::qpow(q, (k - dim_x - 1) as i64))))
}

/// Density of `S_U^X` for `U ≅ A^m`: `1 - q^(m - dimX - 1)`.
pub fn zeta_density_affine(m: i32, dim_x: i32, q: u64) -> Result<Rat> {
    check_dims(m, dim_x)?;
    if dim_x == -1 {
        return Ok(Rat::one());
    }
    Ok(Rat::one() - rat::qpow(q, (m - dim_x - 1) as i64))
}

fn check_dims(m: i32, dim_x: i32) -> Result<()> {
    if !(0..=2).contains(&m) || !(-1..=2).contains(&dim_x) || (dim_x >= 0 && m > dim_x) {
        return Err(Error::InvalidArgument(format!("support dimension {m} with dim X = {dim_x}")));
    }
    Ok(())
}

/// Shape of the support of an atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Support {
    Projective(i32),
    Affine(i32),
}

impl Support {
    pub fn point() -> Self {
        Support::Projective(0)
    }

    pub fn line() -> Self {
        Support::Projective(1)
    }

    pub fn plane() -> Self {
        Support::Projective(2)
    }

    /// Number of rational points.
    pub fn num_points(self, q: u64) -> u64 {
        match self {
            Support::Projective(m) => (0..=m).map(|k| q.pow(k as u32)).sum(),
            Support::Affine(m) => q.pow(m as u32),
        }
    }

    fn density(self, dim_x: i32, q: u64) -> Result<Rat> {
        match self {
            Support::Projective(m) => zeta_density_linear(m, dim_x, q),
            Support::Affine(m) => zeta_density_affine(m, dim_x, q),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AtomKind {
    /// `S_U^X`.
    Elementary { dim_x: i32 },
    /// `S_U^{X,Y} = S_U^X \ S_U^Y`, with `X ⊇ Y` or `X = ∅`.
    Complementary { dim_x: i32, dim_y: i32 },
}

/// A simple set, optionally repeated over `multiplicity` disjoint copies of
/// its support.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimpleAtom {
    pub support: Support,
    pub kind: AtomKind,
    pub multiplicity: u64,
    /// Rational points of the support, when it is a concrete subset of a plane.
    pub points: Option<Vec<PointId>>,
}

impl SimpleAtom {
    pub fn elementary(support: Support, dim_x: i32) -> Self {
        SimpleAtom { support, kind: AtomKind::Elementary { dim_x }, multiplicity: 1, points: None }
    }

    pub fn complementary(support: Support, dim_x: i32, dim_y: i32) -> Self {
        SimpleAtom { support, kind: AtomKind::Complementary { dim_x, dim_y }, multiplicity: 1, points: None }
    }

    pub fn times(mut self, multiplicity: u64) -> Self {
        self.multiplicity = multiplicity;
        self
    }

    pub fn at(mut self, points: Vec<PointId>) -> Self {
        self.points = Some(points);
        self
    }

    /// Density of a single copy.
    pub fn density(&self, q: u64) -> Result<Rat> {
        match self.kind {
            AtomKind::Elementary { dim_x } => self.support.density(dim_x, q),
            AtomKind::Complementary { dim_x, dim_y } => {
                if dim_y == -1 {
                    return Err(Error::MalformedExpr("complementary atom with Y = ∅".into()));
                }
                let d = self.support.density(dim_x, q)? - self.support.density(dim_y, q)?;
                if d.is_negative() {
                    return Err(Error::MalformedExpr(format!(
                        "negative density {} for X of dim {dim_x}, Y of dim {dim_y}",
                        rat::to_fraction_string(&d)
                    )));
                }
                Ok(d)
            }
        }
    }
}

/// A disjoint union of terms; each term is an intersection of atoms with
/// pairwise-disjoint supports.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SplitExpr {
    pub terms: Vec<Vec<SimpleAtom>>,
}

impl SplitExpr {
    pub fn term(atoms: Vec<SimpleAtom>) -> Self {
        SplitExpr { terms: vec![atoms] }
    }

    pub fn union(mut self, other: SplitExpr) -> Self {
        self.terms.extend(other.terms);
        self
    }

    /// Intersection of two expressions on disjoint supports, distributed
    /// over their terms.
    pub fn intersect(&self, other: &SplitExpr) -> SplitExpr {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(a.iter().chain(b).cloned().collect());
            }
        }
        SplitExpr { terms }
    }

    /// Checks concrete supports: correct point counts and pairwise
    /// disjointness within each term.
    pub fn validate(&self, plane: &Plane) -> Result<()> {
        let q = plane.q() as u64;
        for (i, term) in self.terms.iter().enumerate() {
            let mut seen = plane.empty_points();
            for atom in term {
                let Some(pts) = &atom.points else { continue };
                if atom.multiplicity != 1 {
                    return Err(Error::MalformedExpr(format!("term {i}: concrete support with multiplicity")));
                }
                if pts.len() as u64 != atom.support.num_points(q) {
                    return Err(Error::MalformedExpr(format!(
                        "term {i}: {:?} needs {} points, got {}",
                        atom.support,
                        atom.support.num_points(q),
                        pts.len()
                    )));
                }
                for &p in pts {
                    if p >= plane.num_points() || seen.contains(p) {
                        return Err(Error::MalformedExpr(format!("term {i}: supports overlap at point {p}")));
                    }
                    seen.insert(p);
                }
            }
        }
        Ok(())
    }
}

/// Sum over terms of the product of atom densities.
pub fn eval_split(expr: &SplitExpr, q: u64) -> Result<Rat> {
    let mut total = Rat::zero();
    for term in &expr.terms {
        let mut prod = Rat::one();
        for atom in term {
            prod *= rat::pow(&atom.density(q)?, atom.multiplicity);
        }
        total += prod;
    }
    Ok(total)
}

/// The local partition at a point: not on the curve, a unique tangent line
/// among the `q+1` through it, or singular.
pub fn point_partition(q: u64) -> SplitExpr {
    let p = Support::point();
    SplitExpr::term(vec![SimpleAtom::elementary(p, 0)])
        .union(SplitExpr::term(vec![SimpleAtom::complementary(p, 2, 1)]).times_terms(q + 1))
        .union(SplitExpr::term(vec![SimpleAtom::complementary(p, -1, 2)]))
}

impl SplitExpr {
    fn times_terms(self, n: u64) -> SplitExpr {
        SplitExpr { terms: (0..n).flat_map(|_| self.terms.clone()).collect() }
    }
}

fn singular_at_points(n: u64) -> SplitExpr {
    SplitExpr::term(vec![SimpleAtom::complementary(Support::point(), -1, 2).times(n)])
}

/// `μ(Θ_ℓ)`: singular at every rational point of one line.
pub fn theta_line(q: u64) -> Rat {
    eval_split(&singular_at_points(q + 1), q).expect("well-formed")
}

/// `μ(Θ_ℓ1 ∩ Θ_ℓ2)` for distinct lines.
pub fn theta_pair(q: u64) -> Rat {
    eval_split(&singular_at_points(2 * q + 1), q).expect("well-formed")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bounds {
    pub lower: RatValue,
    pub upper: RatValue,
}

impl Bounds {
    pub fn new(lower: Rat, upper: Rat) -> Self {
        debug_assert!(lower <= upper);
        Bounds { lower: lower.into(), upper: upper.into() }
    }

    pub fn contains(&self, x: &Rat) -> bool {
        &self.lower.exact <= x && x <= &self.upper.exact
    }
}

fn plane_size(q: u64) -> u64 {
    q * q + q + 1
}

fn line_term(q: u64) -> Rat {
    rat::int(plane_size(q) as i64) * theta_line(q)
}

/// Union bound and second-order inclusion–exclusion for `μ(Θ)`.
pub fn theta_interval(q: u64) -> Bounds {
    let upper = line_term(q);
    let lower = &upper * (Rat::one() - rat::qpow(q, 2 - 3 * q as i64));
    Bounds::new(lower, upper)
}

/// `μ(Θ)` by full inclusion–exclusion over nonempty sets of lines.
pub fn theta_exact_small_q(plane: &Plane) -> Result<Rat> {
    let q = plane.q() as u64;
    if q > 3 {
        return Err(Error::InvalidArgument(format!("exact theta needs q <= 3 (got {q})")));
    }
    let lm = plane.require_masks()?.1;
    let n = lm.len();
    // Signed count of line subsets by size of the union of their points.
    let mut by_union = vec![0i64; plane.num_points() + 1];
    for j in 1u32..(1 << n) {
        let union = bits(j as u128).fold(0u128, |acc, l| acc | lm[l]);
        let sign = if j.count_ones() % 2 == 1 { 1 } else { -1 };
        by_union[union.count_ones() as usize] += sign;
    }
    Ok(by_union
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0)
        .map(|(u, &c)| rat::int(c) * rat::qpow(q, -3 * u as i64))
        .sum())
}

/// `μ` of curves tangent to a line at some point other than a fixed one,
/// computed as the complementary set on the affine line.
pub fn resurrected_density(q: u64) -> Rat {
    let e = SplitExpr::term(vec![SimpleAtom::complementary(Support::Affine(1), -1, 1)]);
    eval_split(&e, q).expect("well-formed")
}

/// `2 q^-(q+1)`.
pub fn old_upper(q: u64) -> Rat {
    rat::int(2) * rat::qpow(q, -(q as i64 + 1))
}

/// Upper bound for smooth transverse-free curves.
pub fn smooth_tf_upper(q: u64) -> Rat {
    let smooth = zeta_density_linear(2, 2, q).expect("valid dims");
    let ratio = zeta_density_linear(0, 0, q).unwrap() / zeta_density_linear(0, 2, q).unwrap();
    smooth * rat::pow(&(Rat::one() - ratio), plane_size(q))
}

fn check_counts(s: u64, m: u64, q: u64) -> Result<()> {
    let n = plane_size(q);
    if s > n || m > n {
        return Err(Error::InvalidArgument(format!("|S| = {s}, |M_S| = {m} out of range for q = {q}")));
    }
    Ok(())
}

/// `μ(Sing_S)`: singular exactly on a given set of `s` points.
pub fn sing_density(s: u64, q: u64) -> Result<Rat> {
    check_counts(s, 0, q)?;
    let e = SplitExpr::term(vec![
        SimpleAtom::complementary(Support::point(), -1, 2).times(s),
        SimpleAtom::elementary(Support::point(), 2).times(plane_size(q) - s),
    ]);
    eval_split(&e, q)
}

/// Sharp and weakened forms of a bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuitBound {
    pub sharp: RatValue,
    pub weak: RatValue,
}

/// Bound on `μ(Ω ∩ Sing_S)` from `|S|` and the number of lines missing `S`.
pub fn diamond_bound(s: u64, m: u64, q: u64) -> Result<SuitBound> {
    check_counts(s, m, q)?;
    let line_smooth = zeta_density_linear(1, 1, q)?;
    let pt = zeta_density_linear(0, 2, q)?;
    let factor = Rat::one() - line_smooth / rat::pow(&pt, q + 1);
    let sharp = sing_density(s, q)? * rat::pow(&factor, m);
    let weak = rat::qpow(q, -((3 * s + m) as i64));
    debug_assert!(sharp <= weak);
    Ok(SuitBound { sharp: sharp.into(), weak: weak.into() })
}

/// Bound on `μ(Ω ∩ Sing'_{S,P})`, `P` a nonsingular point on every missing line.
pub fn club_bound(s: u64, m: u64, q: u64) -> Result<SuitBound> {
    check_counts(s, m, q)?;
    let line_smooth = zeta_density_linear(1, 1, q)?;
    let pt = zeta_density_linear(0, 2, q)?;
    let factor = Rat::one() - line_smooth / &pt;
    let sharp = rat::qpow(q, -3 * s as i64) * pt * rat::pow(&factor, m);
    let weak = rat::qpow(q, -3 * s as i64) * rat::pow(&rat::ratio(q as i64 + 1, (q * q) as i64), m);
    debug_assert!(sharp <= weak);
    Ok(SuitBound { sharp: sharp.into(), weak: weak.into() })
}

/// `Some(√q)` when `q` is a perfect square.
pub fn exact_sqrt(q: u64) -> Option<u64> {
    let r = (q as f64).sqrt().round() as u64;
    (r * r == q).then_some(r)
}

/// Largest `m` with `m^3 <= q^2`, i.e. `floor(q^(2/3))`.
pub fn floor_two_thirds(q: u64) -> u64 {
    let q2 = (q as u128) * (q as u128);
    let mut m = (q2 as f64).cbrt() as u128;
    while (m + 1).pow(3) <= q2 {
        m += 1;
    }
    while m.pow(3) > q2 {
        m -= 1;
    }
    m as u64
}

/// Number of Baer subplanes, `(q^3 + q^(3/2))(q+1)`, for square `q`.
pub fn baer_count(q: u64) -> Option<u64> {
    exact_sqrt(q).map(|r| (q * q * q + q * r) * (q + 1))
}

fn baer_term(q: u64) -> Option<Rat> {
    let r = exact_sqrt(q)?;
    Some(rat::int(baer_count(q)? as i64) * rat::qpow(q, -3 * (q + r + 1) as i64))
}

/// Upper bound on `μ(Ω)`. `e` takes its upper bracket and the exponent
/// `q^(2/3)` is floored; the base `e^2/4q` is below 1 for `q >= 2`, so both
/// choices enlarge the bound.
pub fn omega_upper(q: u64) -> Rat {
    let e = rat::e_upper();
    let base = &e * &e / rat::int(4 * q as i64);
    let penalty = Rat::one() + &e * rat::pow(&base, floor_two_thirds(q));
    let mut total = line_term(q) * penalty;
    if let Some(b) = baer_term(q) {
        total += b;
    }
    total + rat::pow(&e, q + 2) * rat::qpow(q, -(4 * q as i64 - 2))
}

/// Lower bound on `μ(Ω)`. The Baer term is only claimed for square `q >= 4`.
pub fn omega_lower(q: u64) -> Rat {
    let mut total = theta_interval(q).lower.exact;
    if let (Some(r), Some(b)) = (exact_sqrt(q), baer_term(q)) {
        if q >= 4 {
            total += b * (Rat::one() - rat::qpow(q, 3 * r as i64 + 4 - 3 * q as i64));
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tbs1Report {
    pub q: u64,
    pub line_term: RatValue,
    pub baer_term: Option<RatValue>,
    pub leading: RatValue,
    pub omega: Bounds,
    pub ratio_lower: RatValue,
    pub ratio_upper: RatValue,
    /// `q^(-3√q+2)`, the general relative error envelope.
    pub envelope_general: f64,
    /// `(q/2)^(-(q+1)/2)`, the envelope for `q = p` and `q = p^2`.
    pub envelope_special: f64,
    /// `(4 e^-2 q)^(-q^(2/3))`.
    pub envelope_asymptotic: f64,
    /// Set when the interval fails to contain the leading term.
    pub flagged: bool,
}

pub fn tbs1_report(q: u64) -> Tbs1Report {
    let line = line_term(q);
    let baer = baer_term(q);
    let leading = &line + baer.clone().unwrap_or_else(Rat::zero);
    let (lo, hi) = (omega_lower(q), omega_upper(q));
    let ratio_lower = &lo / &leading;
    let ratio_upper = &hi / &leading;
    let flagged = ratio_lower > Rat::one() || ratio_upper < Rat::one();
    let qf = q as f64;
    Tbs1Report {
        q,
        line_term: line.into(),
        baer_term: baer.map(Into::into),
        leading: leading.into(),
        omega: Bounds::new(lo, hi),
        ratio_lower: ratio_lower.into(),
        ratio_upper: ratio_upper.into(),
        envelope_general: qf.powf(-3.0 * qf.sqrt() + 2.0),
        envelope_special: (qf / 2.0).powf(-(qf + 1.0) / 2.0),
        envelope_asymptotic: (4.0 * (-2f64).exp() * qf).powf(-qf.powf(2.0 / 3.0)),
        flagged,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaReport {
    pub lower: RatValue,
    pub upper: RatValue,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<RatValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ratios {
    pub lower: RatValue,
    pub upper: RatValue,
}

/// Everything `bounds` prints for one `q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub q: u64,
    pub theta: ThetaReport,
    pub omega: Bounds,
    pub leading: RatValue,
    pub ratios: Ratios,
    pub smooth_tf_upper: RatValue,
    pub old_upper: RatValue,
    pub resurrected: RatValue,
    pub flagged: bool,
}

/// Bound report; the exact `μ(Θ)` is included when a plane with `q <= 3` is given.
pub fn bound_report(q: u64, plane: Option<&Plane>) -> Result<BoundReport> {
    if q < 2 {
        return Err(Error::InvalidArgument(format!("q = {q} < 2")));
    }
    let ti = theta_interval(q);
    let exact = match plane {
        Some(p) if p.q() as u64 == q && q <= 3 => Some(theta_exact_small_q(p)?.into()),
        _ => None,
    };
    let t = tbs1_report(q);
    Ok(BoundReport {
        q,
        theta: ThetaReport { lower: ti.lower, upper: ti.upper, exact },
        omega: t.omega,
        leading: t.leading,
        ratios: Ratios { lower: t.ratio_lower, upper: t.ratio_upper },
        smooth_tf_upper: smooth_tf_upper(q).into(),
        old_upper: old_upper(q).into(),
        resurrected: resurrected_density(q).into(),
        flagged: t.flagged,
    })
}

pub fn bound_csv(reports: &[BoundReport]) -> String {
    let mut s = String::from(
        "q,theta_lower,theta_upper,theta_exact,omega_lower,omega_upper,leading,ratio_lower,ratio_upper,smooth_tf_upper,old_upper\n",
    );
    for r in reports {
        let f = |v: &RatValue| rat::to_fraction_string(&v.exact);
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.q,
            f(&r.theta.lower),
            f(&r.theta.upper),
            r.theta.exact.as_ref().map(f).unwrap_or_default(),
            f(&r.omega.lower),
            f(&r.omega.upper),
            f(&r.leading),
            r.ratios.lower.decimal,
            r.ratios.upper.decimal,
            f(&r.smooth_tf_upper),
            f(&r.old_upper),
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::prime_power;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rat {
        rat::ratio(n, d)
    }

    #[test]
    fn zeta_values() {
        for q in [2u64, 3, 5] {
            let qi = q as i64;
            assert_eq!(zeta_density_linear(0, 0, q).unwrap(), Rat::one() - r(1, qi));
            assert_eq!(zeta_density_linear(0, 2, q).unwrap(), Rat::one() - r(1, qi.pow(3)));
            assert_eq!(
                zeta_density_linear(2, 2, q).unwrap(),
                (Rat::one() - r(1, qi)) * (Rat::one() - r(1, qi * qi)) * (Rat::one() - r(1, qi.pow(3)))
            );
            assert_eq!(zeta_density_linear(1, -1, q).unwrap(), Rat::one());
        }
        assert!(zeta_density_linear(2, 1, 2).is_err());
        assert!(zeta_density_linear(3, 2, 2).is_err());
        assert!(zeta_density_linear(0, 3, 2).is_err());
    }

    #[test]
    fn partition_sums_to_one() {
        for q in 2..=64 {
            assert_eq!(eval_split(&point_partition(q), q).unwrap(), Rat::one(), "q = {q}");
            let qi = q as i64;
            let items = Rat::one() - r(1, qi) + rat::int(qi + 1) * (r(1, qi * qi) - r(1, qi.pow(3))) + r(1, qi.pow(3));
            assert_eq!(items, Rat::one());
        }
    }

    #[test]
    fn negative_complement_rejected() {
        let e = SplitExpr::term(vec![SimpleAtom::complementary(Support::point(), 1, 2)]);
        assert!(matches!(eval_split(&e, 3), Err(Error::MalformedExpr(_))));
    }

    #[test]
    fn concrete_supports_validated() {
        let plane = Plane::with_order(2).unwrap();
        let l0 = plane.points_on(0).to_vec();
        let good = SplitExpr::term(vec![
            SimpleAtom::elementary(Support::line(), 1).at(l0.clone()),
            SimpleAtom::elementary(Support::point(), 2).at(vec![(0..7).find(|p| !l0.contains(p)).unwrap()]),
        ]);
        good.validate(&plane).unwrap();
        let overlap = SplitExpr::term(vec![
            SimpleAtom::elementary(Support::line(), 1).at(l0.clone()),
            SimpleAtom::elementary(Support::point(), 2).at(vec![l0[0]]),
        ]);
        assert!(overlap.validate(&plane).is_err());
        let short = SplitExpr::term(vec![SimpleAtom::elementary(Support::line(), 1).at(l0[..2].to_vec())]);
        assert!(short.validate(&plane).is_err());
    }

    #[test]
    fn theta_values() {
        for q in 2..=16u64 {
            assert_eq!(theta_line(q), rat::qpow(q, -3 * (q as i64 + 1)));
            assert_eq!(theta_pair(q), rat::qpow(q, -3 * (2 * q as i64 + 1)));
        }
        let t = theta_interval(2);
        assert_eq!(t.upper.exact, r(7, 512));
        assert_eq!(t.lower.exact, r(105, 8192));
        for q in 2..=256 {
            let t = theta_interval(q);
            assert!(t.lower.exact <= t.upper.exact);
        }
    }

    /// `μ(Θ)` summed over exact singular sets that contain a full line.
    fn theta_by_points(plane: &Plane) -> Rat {
        let q = plane.q() as u64;
        let n = plane.num_points();
        let lm = plane.line_masks().unwrap();
        let sing = rat::qpow(q, -3);
        let smooth = Rat::one() - &sing;
        let mut total = Rat::zero();
        for t in 0u128..(1 << n) {
            if lm.iter().any(|&l| t & l == l) {
                let k = t.count_ones() as u64;
                total += rat::pow(&sing, k) * rat::pow(&smooth, n as u64 - k);
            }
        }
        total
    }

    #[test]
    fn theta_exact_matches_point_oracle() {
        for q in [2u64, 3] {
            let plane = Plane::with_order(q).unwrap();
            let exact = theta_exact_small_q(&plane).unwrap();
            assert_eq!(exact, theta_by_points(&plane), "q = {q}");
            assert!(theta_interval(q).contains(&exact), "q = {q}");
        }
        assert!(theta_exact_small_q(&Plane::with_order(4).unwrap()).is_err());
    }

    #[test]
    fn resurrected_and_old_upper() {
        assert_eq!(resurrected_density(2), r(1, 2));
        assert_eq!(resurrected_density(3), r(1, 3));
        assert_eq!(resurrected_density(4), r(1, 4));
        // Same value as 1 - μ(S_ℓ^ℓ)/μ(S_P^ℓ).
        for q in 2..10 {
            let quotient = Rat::one()
                - zeta_density_linear(1, 1, q).unwrap() / zeta_density_linear(0, 1, q).unwrap();
            assert_eq!(quotient, resurrected_density(q));
        }
        assert_eq!(old_upper(2), r(1, 4));
        assert_eq!(old_upper(3), r(2, 81));
        for q in 2..64 {
            assert!(old_upper(q + 1) < old_upper(q));
        }
    }

    #[test]
    fn smooth_upper_values() {
        let base = r(3, 7);
        assert_eq!(smooth_tf_upper(2), r(1, 2) * r(3, 4) * r(7, 8) * rat::pow(&base, 7));
        // (2/3)(8/9)(26/27)(4/13)^13
        let q3 = r(2, 3) * r(8, 9) * r(26, 27) * rat::pow(&r(4, 13), 13);
        assert_eq!(smooth_tf_upper(3), q3);
        assert_eq!(rat::to_fraction_string(&smooth_tf_upper(3)), "2147483648/16984304054288649");
        for q in 2..=32 {
            let v = smooth_tf_upper(q);
            assert!(v > Rat::zero() && v < Rat::one());
        }
    }

    #[test]
    fn suit_bounds() {
        for q in [2u64, 3, 4] {
            let n = q * q + q + 1;
            assert_eq!(sing_density(0, q).unwrap(), rat::pow(&(Rat::one() - rat::qpow(q, -3)), n));
            assert_eq!(diamond_bound(0, 0, q).unwrap().weak.exact, Rat::one());
            for s in 0..=n.min(8) {
                for m in 0..=n.min(8) {
                    let d = diamond_bound(s, m, q).unwrap();
                    let c = club_bound(s, m, q).unwrap();
                    assert!(d.sharp.exact <= d.weak.exact && c.sharp.exact <= c.weak.exact);
                    assert!(d.sharp.exact >= Rat::zero() && c.sharp.exact >= Rat::zero());
                }
            }
        }
        assert_eq!(diamond_bound(3, 2, 2).unwrap().weak.exact, r(1, 2048));
        assert_eq!(club_bound(3, 1, 2).unwrap().weak.exact, r(1, 512) * r(3, 4));
        assert!(diamond_bound(8, 0, 2).is_err());
    }

    #[test]
    fn exponent_helpers() {
        assert_eq!(floor_two_thirds(2), 1);
        assert_eq!(floor_two_thirds(8), 4);
        assert_eq!(floor_two_thirds(27), 9);
        assert_eq!(floor_two_thirds(64), 16);
        assert_eq!(floor_two_thirds(63), 15);
        assert_eq!(exact_sqrt(49), Some(7));
        assert_eq!(exact_sqrt(8), None);
        assert_eq!(baer_count(4), Some(360));
        assert_eq!(baer_count(9), Some(7560));
    }

    #[test]
    fn omega_bounds() {
        assert_eq!(baer_term(4).unwrap(), rat::int(360) * rat::qpow(4, -21));
        assert_eq!(omega_lower(2), r(105, 8192));
        assert_eq!(omega_lower(3), theta_interval(3).lower.exact);
        let want4 = theta_interval(4).lower.exact
            + rat::int(360) * rat::qpow(4, -21) * (Rat::one() - rat::qpow(4, -2));
        assert_eq!(omega_lower(4), want4);
        assert_eq!(
            rat::to_fraction_string(&omega_upper(2)),
            "57670005678890921083181187147500903081/64000000000000000000000000000000000000"
        );
        assert_eq!(rat::to_fraction_string(&omega_lower(4)), "22106475/1125899906842624");
        for q in (2..=64).filter(|&q| prime_power(q).is_ok()) {
            let (lo, hi) = (omega_lower(q), omega_upper(q));
            assert!(lo <= hi, "q = {q}");
            assert!(theta_interval(q).upper.exact <= hi, "q = {q}");
            assert!(theta_interval(q).lower.exact <= lo, "q = {q}");
        }
    }

    #[test]
    fn tbs1_reports() {
        let t = tbs1_report(2);
        assert_eq!(t.leading.exact, rat::int(7) * rat::qpow(2, -9));
        assert!(t.baer_term.is_none());
        let t9 = tbs1_report(9);
        assert_eq!(t9.baer_term.unwrap().exact, rat::int(7560) * rat::qpow(9, -39));
        for q in (2..=64).filter(|&q| prime_power(q).is_ok()) {
            let t = tbs1_report(q);
            assert!(!t.flagged, "q = {q}");
            assert!(t.ratio_lower.exact <= Rat::one() && Rat::one() <= t.ratio_upper.exact);
        }
    }

    #[test]
    fn bound_report_shape() {
        let plane = Plane::with_order(2).unwrap();
        let b = bound_report(2, Some(&plane)).unwrap();
        let v = serde_json::to_value(&b).unwrap();
        assert_eq!(v["theta"]["lower"]["exact"], "105/8192");
        assert_eq!(v["theta"]["upper"]["exact"], "7/512");
        assert!(v["theta"]["exact"]["exact"].is_string());
        assert!(bound_report(4, None).unwrap().theta.exact.is_none());
        assert_eq!(bound_csv(&[b]).lines().count(), 2);
    }

    /// One of the point-partition pieces at a concrete point.
    fn piece(kind: u8, p: PointId) -> SimpleAtom {
        let s = Support::point();
        match kind {
            0 => SimpleAtom::elementary(s, 0),
            1 => SimpleAtom::complementary(s, 2, 1),
            _ => SimpleAtom::complementary(s, -1, 2),
        }
        .at(vec![p])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn conditional_independence(
            q in prop::sample::select(vec![2u64, 3, 4, 5, 7]),
            blocks in prop::collection::vec((prop::collection::btree_set(0u8..3, 1..=3), 0usize..3), 1..5),
        ) {
            let plane = Plane::with_order(q).unwrap();
            let mut joint_ab = SplitExpr::term(vec![]);
            let mut joint_b = SplitExpr::term(vec![]);
            let mut prod = Rat::one();
            for (i, (kinds, drop)) in blocks.iter().enumerate() {
                let p = i;
                let b = kinds.iter().fold(SplitExpr::default(), |e, &k| e.union(SplitExpr::term(vec![piece(k, p)])));
                let keep: Vec<u8> = kinds.iter().copied().enumerate().filter(|&(j, _)| j != *drop || kinds.len() == 1).map(|(_, k)| k).collect();
                let ab = keep.iter().fold(SplitExpr::default(), |e, &k| e.union(SplitExpr::term(vec![piece(k, p)])));
                prod *= eval_split(&ab, q).unwrap() / eval_split(&b, q).unwrap();
                joint_ab = joint_ab.intersect(&ab);
                joint_b = joint_b.intersect(&b);
            }
            joint_ab.validate(&plane).unwrap();
            joint_b.validate(&plane).unwrap();
            let lhs = eval_split(&joint_ab, q).unwrap() / eval_split(&joint_b, q).unwrap();
            prop_assert_eq!(lhs, prod);
        }
    }
}
