//! Plane curves over GF(q): transversality to lines, rational singular
//! points, and exact or sampled censuses of degree-`d` forms.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bitset::{LineSet, PointSet};
use crate::blocking::{bits, Masks, SuitClassifier};
use crate::error::{Error, Result};
use crate::field::{Elem, FieldSpec};
use crate::plane::{LineId, Plane, PointId, Triple};
use crate::poly::{self, BinaryForm, HomPoly};
use crate::rat::{self, Rat};
use crate::stats::Estimate;

/// `g(s, t) = f(sA + tB)` for explicit points `A`, `B`.
pub fn restrict_with_points(field: &FieldSpec, f: &HomPoly, a: Triple, b: Triple) -> BinaryForm {
    let lin: Vec<BinaryForm> = (0..3).map(|i| BinaryForm::linear(a[i], b[i])).collect();
    let mut g = BinaryForm::zero(f.d);
    for (c, m) in f.terms() {
        let term = (0..3).fold(BinaryForm { coeffs: vec![c] }, |acc, i| acc.mul(field, &lin[i].pow(field, m[i])));
        for (x, y) in g.coeffs.iter_mut().zip(&term.coeffs) {
            *x = field.add(*x, *y);
        }
    }
    g
}

/// Restriction of `f` to `l` through the line's standard parametrization.
pub fn restrict_to_line(plane: &Plane, f: &HomPoly, l: LineId) -> BinaryForm {
    let (a, b) = plane.parametrize_line(l);
    restrict_with_points(plane.field(), f, plane.point(a), plane.point(b))
}

/// The curve meets `l` transversely: the restriction is nonzero and squarefree.
pub fn is_transverse(plane: &Plane, f: &HomPoly, l: LineId) -> bool {
    poly::is_squarefree_binary(plane.field(), &restrict_to_line(plane, f, l))
}

/// Rational points where `f` and all three partials vanish.
pub fn singular_points(plane: &Plane, f: &HomPoly) -> PointSet {
    let fs = plane.field();
    let partials: Vec<HomPoly> = (0..3).map(|v| f.partial(fs, v)).collect();
    plane.point_set((0..plane.num_points()).filter(|&p| {
        let v = plane.point(p);
        f.eval(fs, v) == 0 && partials.iter().all(|g| g.eval(fs, v) == 0)
    }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CurveProfile {
    pub sing: PointSet,
    pub nontransverse: LineSet,
    pub is_transverse_free: bool,
    /// Some line has all its points singular.
    pub is_trivially_tf: bool,
    /// No rational point is singular.
    pub is_smooth_at_rational_points: bool,
}

impl CurveProfile {
    fn assemble(plane: &Plane, sing: PointSet, nontransverse: LineSet) -> Self {
        let is_trivially_tf = (0..plane.num_lines()).any(|l| plane.line_points(l).is_subset(&sing));
        CurveProfile {
            is_transverse_free: nontransverse.count() == plane.num_lines(),
            is_trivially_tf,
            is_smooth_at_rational_points: sing.is_empty(),
            sing,
            nontransverse,
        }
    }
}

/// Profile computed directly from the polynomial.
pub fn profile(plane: &Plane, f: &HomPoly) -> CurveProfile {
    let sing = singular_points(plane, f);
    let nontransverse = LineSet::from_ids(
        plane.num_lines(),
        (0..plane.num_lines()).filter(|&l| !is_transverse(plane, f, l)),
    );
    CurveProfile::assemble(plane, sing, nontransverse)
}

/// Values at a point: `f`, `f_x`, `f_y`, `f_z`.
const POINT_VALUES: usize = 4;

/// Degree-`d` forms on a fixed plane, with every quantity the census needs
/// expressed as a linear functional of the coefficient vector.
pub struct CurveSpace<'a> {
    plane: &'a Plane,
    d: u32,
    monos: Vec<[u32; 3]>,
    /// Per monomial: restriction coefficients of every line, then the point
    /// values of every point.
    cols: Vec<Vec<Elem>>,
    sqfree: Option<Vec<bool>>,
    masks: Masks<'a>,
}

/// Largest squarefree lookup table built eagerly.
const SQFREE_TABLE_LIMIT: usize = 1 << 24;

impl<'a> CurveSpace<'a> {
    pub fn new(plane: &'a Plane, d: u32) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("degree must be at least 1".into()));
        }
        let masks = Masks::new(plane)?;
        let field = plane.field();
        let monos = poly::monomials(d);
        let cols = monos
            .iter()
            .map(|&m| {
                let f = HomPoly::from_terms(field, d, &[(1, m)]);
                let mut col = Vec::new();
                for l in 0..plane.num_lines() {
                    col.extend(restrict_to_line(plane, &f, l).coeffs);
                }
                let partials: Vec<HomPoly> = (0..3).map(|v| f.partial(field, v)).collect();
                for p in 0..plane.num_points() {
                    let v = plane.point(p);
                    col.push(f.eval(field, v));
                    col.extend(partials.iter().map(|g| g.eval(field, v)));
                }
                col
            })
            .collect();
        let table_size = (field.q() as usize).checked_pow(d + 1);
        let sqfree = table_size
            .filter(|&s| s <= SQFREE_TABLE_LIMIT)
            .map(|_| poly::squarefree_table(field, d));
        Ok(CurveSpace {
            plane,
            d,
            monos,
            cols,
            sqfree,
            masks,
        })
    }

    pub fn plane(&self) -> &Plane {
        self.plane
    }

    pub fn degree(&self) -> u32 {
        self.d
    }

    pub fn num_monomials(&self) -> usize {
        self.monos.len()
    }

    /// `q^N`, if it fits in 64 bits.
    pub fn num_polys(&self) -> Option<u64> {
        (self.plane.q() as u64).checked_pow(self.monos.len() as u32)
    }

    fn width(&self) -> usize {
        self.cols[0].len()
    }

    fn point_offset(&self) -> usize {
        self.plane.num_lines() * (self.d as usize + 1)
    }

    pub fn functionals(&self, f: &HomPoly) -> Vec<Elem> {
        let field = self.plane.field();
        let mut state = vec![0; self.width()];
        for (j, &c) in f.coeffs.iter().enumerate() {
            if c != 0 {
                for (s, &x) in state.iter_mut().zip(&self.cols[j]) {
                    *s = field.add(*s, field.mul(c, x));
                }
            }
        }
        state
    }

    fn line_is_transverse(&self, g: &[Elem]) -> bool {
        let q = self.plane.q() as usize;
        match &self.sqfree {
            Some(t) => t[g.iter().rev().fold(0, |acc, &c| acc * q + c as usize)],
            None => poly::is_squarefree_binary(self.plane.field(), &BinaryForm { coeffs: g.to_vec() }),
        }
    }

    /// Singular points and non-transverse lines as bit masks.
    fn decode(&self, state: &[Elem]) -> (u128, u128) {
        let w = self.d as usize + 1;
        let mut nontransverse = 0u128;
        for (l, g) in state[..self.point_offset()].chunks_exact(w).enumerate() {
            if !self.line_is_transverse(g) {
                nontransverse |= 1 << l;
            }
        }
        let mut sing = 0u128;
        for (p, v) in state[self.point_offset()..].chunks_exact(POINT_VALUES).enumerate() {
            if v.iter().all(|&x| x == 0) {
                sing |= 1 << p;
            }
        }
        (sing, nontransverse)
    }

    /// Profile through the precomputed functionals.
    pub fn profile(&self, f: &HomPoly) -> CurveProfile {
        let (sing, nt) = self.decode(&self.functionals(f));
        let n = self.plane.num_points();
        CurveProfile::assemble(self.plane, PointSet::from_mask(n, sing), LineSet::from_mask(n, nt))
    }

    fn record(&self, state: &[Elem], tally: &mut Tally) {
        let (sing, nt) = self.decode(state);
        tally.total += 1;
        let bucket = tally
            .buckets
            .entry(sing)
            .or_insert_with(|| Bucket::new(self.plane.num_lines()));
        bucket.total += 1;
        if nt == self.masks.all {
            bucket.omega += 1;
        }
        for l in bits(nt) {
            bucket.nontransverse[l] += 1;
        }
        if sing != 0 && self.masks.lines_of(sing) & !nt != 0 {
            tally.inconsistent += 1;
        }
        // First-order behaviour at the base point (0:0:1).
        let v = &state[self.point_offset()..self.point_offset() + POINT_VALUES];
        if v[0] != 0 {
            tally.off_point += 1;
        } else if v[1..].iter().all(|&x| x == 0) {
            tally.singular_at_point += 1;
        } else {
            let l = self.plane.line_id([v[1], v[2], v[3]]).expect("nonzero gradient");
            tally.tangent_at_point[l] += 1;
        }
    }

    fn empty_tally(&self) -> Tally {
        Tally {
            total: 0,
            buckets: HashMap::new(),
            off_point: 0,
            singular_at_point: 0,
            tangent_at_point: vec![0; self.plane.num_lines()],
            inconsistent: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Bucket {
    total: u64,
    omega: u64,
    nontransverse: Vec<u64>,
}

impl Bucket {
    fn new(lines: usize) -> Self {
        Bucket {
            total: 0,
            omega: 0,
            nontransverse: vec![0; lines],
        }
    }

    fn merge(&mut self, other: &Bucket) {
        self.total += other.total;
        self.omega += other.omega;
        for (a, b) in self.nontransverse.iter_mut().zip(&other.nontransverse) {
            *a += b;
        }
    }
}

#[derive(Debug, Clone)]
struct Tally {
    total: u64,
    /// Keyed by the mask of singular points.
    buckets: HashMap<u128, Bucket>,
    off_point: u64,
    singular_at_point: u64,
    tangent_at_point: Vec<u64>,
    /// Polynomials with a transverse line through a singular point (must stay 0).
    inconsistent: u64,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.total += other.total;
        for (k, b) in other.buckets {
            self.buckets
                .entry(k)
                .and_modify(|x| x.merge(&b))
                .or_insert(b);
        }
        self.off_point += other.off_point;
        self.singular_at_point += other.singular_at_point;
        for (a, b) in self.tangent_at_point.iter_mut().zip(other.tangent_at_point) {
            *a += b;
        }
        self.inconsistent += other.inconsistent;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CensusMode {
    Exact,
    MonteCarlo,
}

/// Raw census tallies; see [`CurveCensus::report`] for the serialized view.
#[derive(Debug, Clone)]
pub struct CurveCensus {
    pub q: u32,
    pub d: u32,
    pub mode: CensusMode,
    pub seed: Option<u64>,
    tally: Tally,
}

/// Default cap on `q^N` for exact censuses.
pub const DEFAULT_EXACT_BUDGET: u64 = 1 << 28;

/// Base-`p` digits handled sequentially inside one block of an exact census.
fn block_digits(p: u64, total_digits: usize) -> usize {
    let mut k = 0;
    let mut size = 1u64;
    while k < total_digits && size < 1 << 14 {
        size *= p;
        k += 1;
    }
    k
}

/// Every coefficient vector of degree `d`, the zero form included.
pub fn exact_census(space: &CurveSpace, budget: u64) -> Result<CurveCensus> {
    let field = space.plane.field();
    let total = space.num_polys().filter(|&t| t <= budget).ok_or_else(|| {
        Error::BudgetExceeded(format!(
            "q^N = {}^{} polynomials exceed the limit of {budget}",
            field.q(),
            space.num_monomials()
        ))
    })?;
    let (p, r) = (field.p() as u64, field.r() as usize);
    // Digit (j, i) is the i-th base-p digit of coefficient j; position j*r+i.
    // Adding one to that digit adds p^i (as a field element) times column j.
    let scaled: Vec<Vec<Elem>> = (0..space.num_monomials() * r)
        .map(|pos| {
            let x = (p as Elem).pow((pos % r) as u32);
            space.cols[pos / r].iter().map(|&c| field.mul(x, c)).collect()
        })
        .collect();
    let digits = space.num_monomials() * r;
    let k = block_digits(p, digits);
    let block = p.pow(k as u32);
    let blocks = total / block;
    let add = |state: &mut [Elem], col: &[Elem], times: u64| {
        for _ in 0..times {
            for (s, &c) in state.iter_mut().zip(col) {
                *s = field.add(*s, c);
            }
        }
    };
    let tally = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut tally = space.empty_tally();
            let mut state = vec![0; space.width()];
            let mut rest = b;
            for col in &scaled[k..] {
                add(&mut state, col, rest % p);
                rest /= p;
            }
            let mut counter = vec![0u64; k];
            space.record(&state, &mut tally);
            for _ in 1..block {
                let mut pos = 0;
                loop {
                    add(&mut state, &scaled[pos], 1);
                    counter[pos] += 1;
                    if counter[pos] < p {
                        break;
                    }
                    counter[pos] = 0;
                    pos += 1;
                }
                space.record(&state, &mut tally);
            }
            tally
        })
        .reduce(|| space.empty_tally(), Tally::merge);
    Ok(CurveCensus {
        q: field.q(),
        d: space.d,
        mode: CensusMode::Exact,
        seed: None,
        tally,
    })
}

/// Samples per independently seeded stream.
const MC_CHUNK: u64 = 4096;

/// Uniform random coefficient vectors from ChaCha8 streams; stream `c`
/// produces samples `c*4096 ..`, so the result does not depend on the
/// number of worker threads.
pub fn mc_census(space: &CurveSpace, samples: u64, seed: u64) -> Result<CurveCensus> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let field = space.plane.field();
    let q = field.q();
    let chunks = samples.div_ceil(MC_CHUNK);
    let tally = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let mut tally = space.empty_tally();
            let n = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut f = HomPoly::zero(space.d);
            for _ in 0..n {
                for x in f.coeffs.iter_mut() {
                    *x = rng.random_range(0..q);
                }
                space.record(&space.functionals(&f), &mut tally);
            }
            tally
        })
        .reduce(|| space.empty_tally(), Tally::merge);
    Ok(CurveCensus {
        q,
        d: space.d,
        mode: CensusMode::MonteCarlo,
        seed: Some(seed),
        tally,
    })
}

/// Histogram row keyed by the singular set's size, suit memberships and
/// number of lines it misses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HistogramRow {
    pub sing_size: usize,
    pub suits: String,
    pub missed_lines: usize,
    pub count: u64,
    pub transverse_free: u64,
}

/// First-order behaviour at the point (0:0:1): off the curve, smooth on it
/// with a given tangent line, or singular (the zero form included).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PointPartition {
    pub off_curve: u64,
    pub tangent: Vec<u64>,
    pub singular: u64,
}

impl PointPartition {
    pub fn total(&self) -> u64 {
        self.off_curve + self.singular + self.tangent.iter().sum::<u64>()
    }
}

/// Comparison of the joint non-transversality frequency on `M_S` with the
/// product of per-line frequencies, conditioned on the singular set being
/// exactly `S`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubIndependenceRow {
    pub sing: Vec<PointId>,
    pub n: u64,
    pub joint: f64,
    pub product: f64,
    pub joint_wilson_radius: f64,
    pub within_two_radii: bool,
}

impl CurveCensus {
    pub fn total(&self) -> u64 {
        self.tally.total
    }

    /// Transverse-free forms.
    pub fn omega(&self) -> u64 {
        self.tally.buckets.values().map(|b| b.omega).sum()
    }

    /// Transverse-free forms with no rational singular point.
    pub fn upsilon(&self) -> u64 {
        self.tally.buckets.get(&0).map_or(0, |b| b.omega)
    }

    /// Forms whose singular set contains every point of some line.
    pub fn theta(&self, plane: &Plane) -> Result<u64> {
        let m = Masks::new(plane)?;
        Ok(self
            .tally
            .buckets
            .iter()
            .filter(|(&s, _)| m.lp.iter().any(|&l| l & !s == 0))
            .map(|(_, b)| b.total)
            .sum())
    }

    /// Forms singular at every point of `s` (and possibly more).
    pub fn sing_superset_count(&self, s: &PointSet) -> u64 {
        let sm = s.to_mask().expect("mask-sized plane");
        self.tally
            .buckets
            .iter()
            .filter(|(&k, _)| k & sm == sm)
            .map(|(_, b)| b.total)
            .sum()
    }

    /// Forms whose singular set is exactly `s`.
    pub fn sing_exact_count(&self, s: &PointSet) -> u64 {
        let sm = s.to_mask().expect("mask-sized plane");
        self.tally.buckets.get(&sm).map_or(0, |b| b.total)
    }

    /// Forms with a transverse line through a singular point; always 0.
    pub fn inconsistencies(&self) -> u64 {
        self.tally.inconsistent
    }

    pub fn point_partition(&self) -> PointPartition {
        PointPartition {
            off_curve: self.tally.off_point,
            tangent: self.tally.tangent_at_point.clone(),
            singular: self.tally.singular_at_point,
        }
    }

    /// Distinct singular sets seen, with counts, in mask order.
    pub fn singular_sets(&self) -> BTreeMap<u128, u64> {
        self.tally.buckets.iter().map(|(&k, b)| (k, b.total)).collect()
    }

    pub fn histogram(&self, plane: &Plane, classifier: Option<&SuitClassifier>) -> Vec<HistogramRow> {
        let n = plane.num_points();
        let mut rows: BTreeMap<(usize, String, usize), (u64, u64)> = BTreeMap::new();
        for (&s, b) in &self.tally.buckets {
            let set = PointSet::from_mask(n, s);
            let suits = match classifier {
                Some(c) => {
                    let m = c.classify(&set);
                    let names: Vec<&str> = m
                        .suits()
                        .iter()
                        .map(|s| match s {
                            crate::blocking::Suit::Spade => "spade",
                            crate::blocking::Suit::Club => "club",
                            crate::blocking::Suit::Diamond => "diamond",
                        })
                        .collect();
                    if names.is_empty() {
                        "none".to_string()
                    } else {
                        names.join("+")
                    }
                }
                None => "unclassified".to_string(),
            };
            let e = rows
                .entry((set.count(), suits, plane.missed_lines(&set).count()))
                .or_default();
            e.0 += b.total;
            e.1 += b.omega;
        }
        rows.into_iter()
            .map(|((sing_size, suits, missed_lines), (count, transverse_free))| HistogramRow {
                sing_size,
                suits,
                missed_lines,
                count,
                transverse_free,
            })
            .collect()
    }

    /// One row per observed singular set `S` with `M_S` nonempty and at
    /// least `min_n` forms.
    pub fn sub_independence(&self, plane: &Plane, min_n: u64) -> Vec<SubIndependenceRow> {
        let n = plane.num_points();
        let mut keys: Vec<&u128> = self.tally.buckets.keys().collect();
        keys.sort_unstable_by_key(|k| (k.count_ones(), k.reverse_bits()));
        keys.into_iter()
            .filter_map(|&s| {
                let b = &self.tally.buckets[&s];
                let set = PointSet::from_mask(n, s);
                let missed = plane.missed_lines(&set);
                if missed.is_empty() || b.total < min_n {
                    return None;
                }
                let est = Estimate::new(b.omega, b.total);
                let product: f64 = missed
                    .iter()
                    .map(|l| b.nontransverse[l] as f64 / b.total as f64)
                    .product();
                Some(SubIndependenceRow {
                    sing: set.iter().collect(),
                    n: b.total,
                    joint: est.freq,
                    product,
                    joint_wilson_radius: est.radius(),
                    within_two_radii: est.freq <= product + 2.0 * est.radius(),
                })
            })
            .collect()
    }
}

/// Row-reduces `rows` over GF(q) in place and returns the rank.
pub fn rank(field: &FieldSpec, rows: &mut [Vec<Elem>]) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(pivot) = (r..rows.len()).find(|&i| rows[i][c] != 0) else {
            continue;
        };
        rows.swap(r, pivot);
        let inv = field.inv(rows[r][c]).expect("nonzero pivot");
        for x in rows[r].iter_mut() {
            *x = field.mul(*x, inv);
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && row[c] != 0 {
                let factor = row[c];
                for (x, &y) in row.iter_mut().zip(&pivot_row) {
                    *x = field.sub(*x, field.mul(factor, y));
                }
            }
        }
        r += 1;
    }
    r
}

/// Number of degree-`d` forms singular at every point of `s`: `q^(N - rank)`
/// of the linear conditions `f = f_x = f_y = f_z = 0` at those points.
pub fn sing_constraint_count(space: &CurveSpace, s: &PointSet) -> BigUint {
    let field = space.plane.field();
    let off = space.point_offset();
    let mut rows: Vec<Vec<Elem>> = s
        .iter()
        .flat_map(|p| (0..POINT_VALUES).map(move |k| off + POINT_VALUES * p + k))
        .map(|idx| space.cols.iter().map(|col| col[idx]).collect())
        .collect();
    let rk = rank(field, &mut rows);
    BigUint::from(field.q()).pow((space.num_monomials() - rk) as u32)
}

/// Exact fraction of degree-`d` forms whose restriction to `l` vanishes or
/// has a repeated factor at a point other than `p`.
///
/// The restriction map is linear, so each binary form in its image has the
/// same number of preimages; the image is found by row reduction and then
/// enumerated.
pub fn resurrected_fraction(space: &CurveSpace, l: LineId, p: PointId) -> Result<Rat> {
    let plane = space.plane;
    let field = plane.field();
    if !plane.is_incident(p, l) {
        return Err(Error::InvalidArgument(format!("point {p} is not on line {l}")));
    }
    let (a, b) = plane.parametrize_line(l);
    let (s0, t0) = plane
        .projective_line_params()
        .into_iter()
        .find(|&(s, t)| plane.combine(a, b, s, t) == Some(p))
        .expect("every point of l has parameters");
    let w = space.d as usize + 1;
    let q = field.q() as usize;
    // Columns of the restriction map, one per monomial.
    let mut basis: Vec<Vec<Elem>> = space.cols.iter().map(|c| c[l * w..(l + 1) * w].to_vec()).collect();
    let r = rank(field, &mut basis);
    basis.truncate(r);
    let image_size = q.checked_pow(r as u32).filter(|&s| s <= 1 << 24).ok_or_else(|| {
        Error::BudgetExceeded(format!("image of size {q}^{r} is too large to enumerate"))
    })?;
    let pivots: Vec<usize> = basis.iter().map(|row| row.iter().position(|&x| x != 0).unwrap()).collect();
    let mut bad = 0u64;
    for idx in 0..image_size {
        // Image element with pivot coordinates given by the digits of idx.
        let mut g = vec![0; w];
        let mut rest = idx;
        for row in &basis {
            let c = (rest % q) as Elem;
            rest /= q;
            for (x, &y) in g.iter_mut().zip(row) {
                *x = field.add(*x, field.mul(c, y));
            }
        }
        debug_assert!(pivots.iter().all(|&pc| g[pc] < q as Elem));
        if resurrected(field, &BinaryForm { coeffs: g }, s0, t0) {
            bad += 1;
        }
    }
    Ok(Rat::new(bad.into(), (image_size as u64).into()))
}

fn resurrected(field: &FieldSpec, g: &BinaryForm, s0: Elem, t0: Elem) -> bool {
    g.is_zero() || !poly::is_squarefree_binary(field, &g.strip_root(field, s0, t0))
}

/// The same fraction by enumerating every form; a test oracle.
pub fn resurrected_fraction_brute(plane: &Plane, d: u32, l: LineId, p: PointId) -> Rat {
    let field = plane.field();
    let (a, b) = plane.parametrize_line(l);
    let (s0, t0) = plane
        .projective_line_params()
        .into_iter()
        .find(|&(s, t)| plane.combine(a, b, s, t) == Some(p))
        .unwrap();
    let n = poly::num_monomials(d);
    let q = field.q() as usize;
    let total = q.pow(n as u32);
    let mut bad = 0u64;
    for idx in 0..total {
        let mut rest = idx;
        let coeffs = (0..n)
            .map(|_| {
                let c = (rest % q) as Elem;
                rest /= q;
                c
            })
            .collect();
        let f = HomPoly { d, coeffs };
        if resurrected(field, &restrict_to_line(plane, &f, l), s0, t0) {
            bad += 1;
        }
    }
    Rat::new(bad.into(), (total as u64).into())
}

/// Serializable census summary.
#[derive(Debug, Clone, Serialize)]
pub struct CensusReport {
    pub q: u32,
    pub d: u32,
    pub mode: CensusMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub total: u64,
    pub transverse_free: Count,
    pub trivially_transverse_free: Count,
    pub transverse_free_no_rational_singularity: Count,
    pub point_partition: PointPartition,
    pub histogram: Vec<HistogramRow>,
    pub sub_independence: Vec<SubIndependenceRow>,
    pub inconsistencies: u64,
}

/// Exact counts carry the exact fraction; sampled counts carry a Wilson
/// interval.
#[derive(Debug, Clone, Serialize)]
pub struct Count {
    pub count: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fraction: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<Estimate>,
}

impl CurveCensus {
    fn count(&self, c: u64) -> Count {
        match self.mode {
            CensusMode::Exact => Count {
                count: c,
                fraction: Some(rat::to_fraction_string(&Rat::new(c.into(), self.total().into()))),
                estimate: None,
            },
            CensusMode::MonteCarlo => Count {
                count: c,
                fraction: None,
                estimate: Some(Estimate::new(c, self.total())),
            },
        }
    }

    pub fn report(&self, plane: &Plane, classifier: Option<&SuitClassifier>) -> Result<CensusReport> {
        Ok(CensusReport {
            q: self.q,
            d: self.d,
            mode: self.mode,
            seed: self.seed,
            total: self.total(),
            transverse_free: self.count(self.omega()),
            trivially_transverse_free: self.count(self.theta(plane)?),
            transverse_free_no_rational_singularity: self.count(self.upsilon()),
            point_partition: self.point_partition(),
            histogram: self.histogram(plane, classifier),
            sub_independence: self.sub_independence(plane, 30),
            inconsistencies: self.inconsistencies(),
        })
    }
}

/// The histogram as CSV.
pub fn histogram_csv(rows: &[HistogramRow]) -> String {
    let mut out = String::from("sing_size,suits,missed_lines,count,transverse_free\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.sing_size, r.suits, r.missed_lines, r.count, r.transverse_free
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane(q: u64) -> Plane {
        Plane::with_order(q).unwrap()
    }

    fn xyz(f: &FieldSpec) -> HomPoly {
        HomPoly::from_terms(f, 3, &[(1, [1, 1, 1])])
    }

    #[test]
    fn restriction_examples() {
        let p = plane(2);
        let f = p.field();
        let g = restrict_with_points(f, &xyz(f), [1, 1, 0], [1, 0, 1]);
        // (s+t) s t = s^2 t + s t^2
        assert_eq!(g.coeffs, vec![0, 1, 1, 0]);
        assert!(poly::is_squarefree_binary(f, &g));
        let z = HomPoly::from_terms(f, 1, &[(1, [0, 0, 1])]);
        let z_line = p.line_id([0, 0, 1]).unwrap();
        assert!(restrict_to_line(&p, &z, z_line).is_zero());
        let x3 = HomPoly::from_terms(f, 3, &[(1, [3, 0, 0])]);
        assert!(restrict_with_points(f, &x3, [0, 1, 0], [0, 0, 1]).is_zero());
    }

    #[test]
    fn transversality_examples() {
        let p = plane(2);
        let f = p.field();
        let l = p.line_id([1, 1, 1]).unwrap();
        assert!(is_transverse(&p, &xyz(f), l));
        let x2 = HomPoly::from_terms(f, 2, &[(1, [2, 0, 0])]);
        assert!((0..7).all(|l| !is_transverse(&p, &x2, l)));
        assert!((0..7).all(|l| !is_transverse(&p, &HomPoly::zero(3), l)));
    }

    #[test]
    fn singular_point_examples() {
        let p = plane(2);
        let f = p.field();
        let expect = p.point_set([p.point_id([1, 0, 0]).unwrap(), p.point_id([0, 1, 0]).unwrap(), 0]);
        assert_eq!(singular_points(&p, &xyz(f)), expect);
        let x2 = HomPoly::from_terms(f, 2, &[(1, [2, 0, 0])]);
        let x0 = p.line_id([1, 0, 0]).unwrap();
        assert_eq!(singular_points(&p, &x2), p.line_points(x0));
        let pr = profile(&p, &x2);
        assert!(pr.is_trivially_tf && pr.is_transverse_free);
        let pr = profile(&p, &xyz(f));
        assert!(!pr.is_transverse_free && pr.sing.count() == 3);
        // Smooth conic x^2 + yz in odd characteristic.
        let p3 = plane(3);
        let f3 = p3.field();
        let conic = HomPoly::from_terms(f3, 2, &[(1, [2, 0, 0]), (1, [0, 1, 1])]);
        assert!(singular_points(&p3, &conic).is_empty());
    }

    #[test]
    fn euler_identity_where_p_does_not_divide_d() {
        let p = plane(3);
        let fs = p.field();
        let mut seed = 7u64;
        for _ in 0..200 {
            let coeffs = (0..poly::num_monomials(4))
                .map(|_| {
                    seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    ((seed >> 33) % 3) as Elem
                })
                .collect();
            let f = HomPoly { d: 4, coeffs };
            for pt in 0..p.num_points() {
                let v = p.point(pt);
                let grad: Vec<Elem> = (0..3).map(|i| f.partial(fs, i).eval(fs, v)).collect();
                let euler = (0..3).fold(0, |acc, i| fs.add(acc, fs.mul(v[i], grad[i])));
                assert_eq!(euler, fs.mul(fs.from_int(4), f.eval(fs, v)));
            }
        }
    }

    #[test]
    fn fast_profile_matches_direct() {
        for (q, d) in [(2u64, 3u32), (3, 3), (4, 2), (2, 5)] {
            let p = plane(q);
            let space = CurveSpace::new(&p, d).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(q * 100 + d as u64);
            for _ in 0..150 {
                let coeffs = (0..space.num_monomials()).map(|_| rng.random_range(0..q as u32)).collect();
                let f = HomPoly { d, coeffs };
                let a = space.profile(&f);
                assert_eq!(a, profile(&p, &f));
                for x in a.sing.iter() {
                    for &l in p.lines_through(x) {
                        assert!(a.nontransverse.contains(l));
                    }
                }
            }
        }
    }

    #[test]
    fn small_exact_censuses() {
        let p = plane(2);
        let c1 = exact_census(&CurveSpace::new(&p, 1).unwrap(), DEFAULT_EXACT_BUDGET).unwrap();
        assert_eq!((c1.total(), c1.omega()), (8, 1));
        let c2 = exact_census(&CurveSpace::new(&p, 2).unwrap(), DEFAULT_EXACT_BUDGET).unwrap();
        assert_eq!((c2.total(), c2.omega()), (64, 8));
        assert_eq!(c2.inconsistencies(), 0);
    }

    /// Brute-force census from the direct profile.
    fn brute_counts(p: &Plane, d: u32) -> (u64, u64, u64, BTreeMap<u128, u64>) {
        let q = p.q() as usize;
        let n = poly::num_monomials(d);
        let (mut omega, mut theta, mut upsilon) = (0, 0, 0);
        let mut sets = BTreeMap::new();
        for idx in 0..q.pow(n as u32) {
            let mut rest = idx;
            let coeffs = (0..n)
                .map(|_| {
                    let c = (rest % q) as Elem;
                    rest /= q;
                    c
                })
                .collect();
            let pr = profile(p, &HomPoly { d, coeffs });
            omega += pr.is_transverse_free as u64;
            theta += pr.is_trivially_tf as u64;
            upsilon += (pr.is_transverse_free && pr.is_smooth_at_rational_points) as u64;
            *sets.entry(pr.sing.to_mask().unwrap()).or_insert(0) += 1;
        }
        (omega, theta, upsilon, sets)
    }

    #[test]
    fn exact_census_matches_brute_force() {
        for (q, d) in [(2u64, 3u32), (3, 2), (4, 1), (2, 4)] {
            let p = plane(q);
            let c = exact_census(&CurveSpace::new(&p, d).unwrap(), DEFAULT_EXACT_BUDGET).unwrap();
            let (omega, theta, upsilon, sets) = brute_counts(&p, d);
            assert_eq!(c.omega(), omega, "q={q} d={d}");
            assert_eq!(c.theta(&p).unwrap(), theta);
            assert_eq!(c.upsilon(), upsilon);
            assert_eq!(c.singular_sets(), sets);
        }
    }

    #[test]
    fn exact_census_thread_invariant() {
        let p = plane(3);
        let space = CurveSpace::new(&p, 3).unwrap();
        let run = |t| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .unwrap()
                .install(|| {
                    let c = exact_census(&space, DEFAULT_EXACT_BUDGET).unwrap();
                    serde_json::to_string(&c.report(&p, None).unwrap()).unwrap()
                })
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn mc_is_deterministic() {
        let p = plane(2);
        let space = CurveSpace::new(&p, 4).unwrap();
        let run = |t| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .unwrap()
                .install(|| serde_json::to_string(&mc_census(&space, 10_000, 42).unwrap().report(&p, None).unwrap()).unwrap())
        };
        assert_eq!(run(1), run(4));
        assert_ne!(run(2), serde_json::to_string(&mc_census(&space, 10_000, 43).unwrap().report(&p, None).unwrap()).unwrap());
        assert!(mc_census(&space, 0, 1).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let p = plane(2);
        let space = CurveSpace::new(&p, 7).unwrap();
        assert!(matches!(exact_census(&space, DEFAULT_EXACT_BUDGET), Err(Error::BudgetExceeded(_))));
        assert!(CurveSpace::new(&plane(11), 2).is_err());
    }

    #[test]
    fn constraint_counts_match_census() {
        let p = plane(2);
        let space = CurveSpace::new(&p, 3).unwrap();
        let c = exact_census(&space, DEFAULT_EXACT_BUDGET).unwrap();
        for mask in 0u128..128 {
            let s = PointSet::from_mask(7, mask);
            assert_eq!(sing_constraint_count(&space, &s), BigUint::from(c.sing_superset_count(&s)));
        }
        assert_eq!(sing_constraint_count(&space, &p.empty_points()), BigUint::from(1u32 << 10));
    }

    #[test]
    fn point_partition_sums_to_total() {
        let p = plane(3);
        let c = exact_census(&CurveSpace::new(&p, 2).unwrap(), DEFAULT_EXACT_BUDGET).unwrap();
        let part = c.point_partition();
        assert_eq!(part.total(), c.total());
        // Only lines through (0:0:1) can be tangent there.
        for (l, &n) in part.tangent.iter().enumerate() {
            if !p.is_incident(0, l) {
                assert_eq!(n, 0);
            }
        }
        // Conditions f = grad f = 0 at a point are 3 independent ones for d = 2.
        assert_eq!(part.singular * 27, c.total());
    }

    #[test]
    fn resurrected_matches_brute_force() {
        for (q, dmax) in [(2u64, 4u32), (3, 2)] {
            let p = plane(q);
            for d in 1..=dmax {
                let space = CurveSpace::new(&p, d).unwrap();
                for l in [0, 4] {
                    for &pt in p.points_on(l) {
                        assert_eq!(
                            resurrected_fraction(&space, l, pt).unwrap(),
                            resurrected_fraction_brute(&p, d, l, pt),
                            "q={q} d={d} l={l} p={pt}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn resurrected_degree_one() {
        // Linear restrictions never repeat a root; only the zero one counts.
        for q in [2u64, 3, 4] {
            let p = plane(q);
            let space = CurveSpace::new(&p, 1).unwrap();
            let l = 2;
            let pt = p.points_on(l)[0];
            assert_eq!(resurrected_fraction(&space, l, pt).unwrap(), rat::qpow(q, -2));
        }
        // (0:0:1) is not on z = 0.
        assert!(resurrected_fraction(&CurveSpace::new(&plane(2), 2).unwrap(), 0, 0).is_err());
    }
}
