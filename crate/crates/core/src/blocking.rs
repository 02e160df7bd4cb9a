//! Blocking sets: minimality, exhaustive censuses, nearest-blocking-set
//! classification and the counting bounds on minimal blocking sets.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::Serialize;

use crate::bitset::{LineSet, PointSet};
use crate::error::{Error, Result};
use crate::plane::{LineId, Plane, PointId};
use crate::rat::{self, Rat};

/// True iff `s` meets every line and each of its points lies on a line that
/// meets `s` in that point alone.
pub fn is_minimal_blocking(plane: &Plane, s: &PointSet) -> bool {
    plane.is_blocking(s) && s.iter().all(|p| has_tangent(plane, s, p))
}

fn has_tangent(plane: &Plane, s: &PointSet, p: PointId) -> bool {
    plane
        .lines_through(p)
        .iter()
        .any(|&l| plane.points_on(l).iter().all(|&x| x == p || !s.contains(x)))
}

/// Bit-mask view of a plane with at most 128 points.
#[derive(Clone, Copy)]
pub(crate) struct Masks<'a> {
    /// Lines through each point.
    pub pl: &'a [u128],
    /// Points on each line.
    pub lp: &'a [u128],
    pub q: u32,
    pub n: usize,
    pub all: u128,
}

impl<'a> Masks<'a> {
    pub fn new(plane: &'a Plane) -> Result<Self> {
        let (pl, lp) = plane.require_masks()?;
        let n = plane.num_points();
        Ok(Masks {
            pl,
            lp,
            q: plane.q(),
            n,
            all: full_mask(n),
        })
    }

    pub fn lines_of(&self, s: u128) -> u128 {
        bits(s).fold(0, |acc, p| acc | self.pl[p])
    }

    pub fn is_blocking(&self, s: u128) -> bool {
        self.lines_of(s) == self.all
    }

    /// Lines meeting `s` in exactly one point.
    pub fn tangent_lines(&self, s: u128) -> u128 {
        let (mut once, mut twice) = (0u128, 0u128);
        for p in bits(s) {
            let m = self.pl[p];
            twice |= once & m;
            once = (once | m) & !twice;
        }
        once
    }

    pub fn all_have_tangents(&self, s: u128) -> bool {
        let once = self.tangent_lines(s);
        bits(s).all(|p| self.pl[p] & once != 0)
    }

    pub fn is_minimal(&self, s: u128) -> bool {
        self.is_blocking(s) && self.all_have_tangents(s)
    }

    /// Smallest `t` with `forced ⊆ t ⊆ candidates ∪ forced` whose points
    /// meet every line of `targets`, if one of size at most `limit` exists.
    /// Among sets of the minimum size the first found in branching order is
    /// returned.
    pub fn min_cover(&self, candidates: u128, forced: u128, targets: u128, limit: usize) -> Option<u128> {
        let base = forced.count_ones() as usize;
        let uncovered = targets & !self.lines_of(forced);
        let avail = candidates & !forced;
        (base..=limit).find_map(|size| self.cover(forced, uncovered, avail, (size - base) as u32))
    }

    fn cover(&self, chosen: u128, uncovered: u128, mut avail: u128, left: u32) -> Option<u128> {
        if uncovered == 0 {
            return Some(chosen);
        }
        if left == 0 || uncovered.count_ones() > left * (self.q + 1) {
            return None;
        }
        // Branch on the uncovered line with the fewest usable points.
        let mut best = (u32::MAX, 0);
        for l in bits(uncovered) {
            let c = (self.lp[l] & avail).count_ones();
            if c == 0 {
                return None;
            }
            if c < best.0 {
                best = (c, l);
            }
        }
        let mut cand = self.lp[best.1] & avail;
        while cand != 0 {
            let p = cand.trailing_zeros() as usize;
            cand &= cand - 1;
            let bit = 1u128 << p;
            if let Some(t) = self.cover(chosen | bit, uncovered & !self.pl[p], avail & !bit, left - 1) {
                return Some(t);
            }
            avail &= !bit;
        }
        None
    }
}

pub(crate) fn full_mask(n: usize) -> u128 {
    if n >= 128 {
        u128::MAX
    } else {
        (1u128 << n) - 1
    }
}

pub(crate) fn bits(mut m: u128) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            return None;
        }
        let b = m.trailing_zeros() as usize;
        m &= m - 1;
        Some(b)
    })
}

fn mask_of(plane: &Plane, s: &PointSet) -> Result<u128> {
    if s.capacity() != plane.num_points() {
        return Err(Error::InvalidArgument(format!(
            "point set over {} ids, plane has {} points",
            s.capacity(),
            plane.num_points()
        )));
    }
    s.to_mask()
        .ok_or_else(|| Error::BudgetExceeded("plane too large for bit-mask search".into()))
}

/// How a census table was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CensusMethod {
    Exhaustive,
    Bounded,
    Sampled,
}

impl CensusMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            CensusMethod::Exhaustive => "exhaustive",
            CensusMethod::Bounded => "bounded",
            CensusMethod::Sampled => "sampled",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CensusRow {
    pub blocking: u64,
    pub minimal: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CensusTable {
    pub q: u32,
    pub k_max: usize,
    pub method: CensusMethod,
    pub rows: BTreeMap<usize, CensusRow>,
    /// Not part of the serialized table, so outputs stay byte-identical.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl CensusTable {
    pub fn minimal(&self, k: usize) -> Option<u64> {
        self.rows.get(&k).map(|r| r.minimal)
    }

    pub fn blocking(&self, k: usize) -> Option<u64> {
        self.rows.get(&k).map(|r| r.blocking)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("q,k,blocking_count,minimal_count,method\n");
        for (k, r) in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.q,
                k,
                r.blocking,
                r.minimal,
                self.method.as_str()
            ));
        }
        out
    }
}

/// Cap on the number of subsets an exhaustive census may consider, counted
/// before pruning as `sum_{k <= k_max} C(n, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_subsets: u128,
}

impl Default for Budget {
    fn default() -> Self {
        // Covers q = 4 up to k_max = 2q; q = 5 needs an explicit raise.
        Budget { max_subsets: 1 << 20 }
    }
}

impl Budget {
    pub fn check(&self, n: usize, k_max: usize) -> Result<()> {
        let total: BigUint = (0..=k_max as u64).map(|k| rat::binomial(n as u64, k)).sum();
        if total > BigUint::from(self.max_subsets) {
            return Err(Error::BudgetExceeded(format!(
                "{total} subsets of {n} points up to size {k_max} exceed the limit of {}",
                self.max_subsets
            )));
        }
        Ok(())
    }
}

/// Lexicographic subset walk with prefix pruning. Calls `visit(set, size,
/// last)` for every blocking set all of whose proper prefixes are
/// non-blocking; supersets extending past `last` are left to the visitor.
struct Walker<'a> {
    m: Masks<'a>,
    k_max: usize,
}

impl Walker<'_> {
    fn pruned(&self, covered: u128, size: usize) -> bool {
        let unblocked = (self.m.all & !covered).count_ones() as usize;
        unblocked > (self.k_max - size) * (self.m.q as usize + 1)
    }

    fn walk<F: FnMut(u128, usize, usize)>(&self, start: usize, set: u128, covered: u128, size: usize, visit: &mut F) {
        for p in start..self.m.n {
            let s = set | 1u128 << p;
            let cov = covered | self.m.pl[p];
            let sz = size + 1;
            if cov == self.m.all {
                visit(s, sz, p);
            } else if sz < self.k_max && !self.pruned(cov, sz) {
                self.walk(p + 1, s, cov, sz, visit);
            }
        }
    }

    /// Runs the walk split over two-point prefixes in parallel, folding each
    /// prefix's results with `init`/`visit` and combining with `merge`.
    fn run<T, I, V, M>(&self, init: I, visit: V, merge: M) -> T
    where
        T: Send,
        I: Fn() -> T + Sync,
        V: Fn(&mut T, u128, usize, usize) + Sync,
        M: Fn(T, T) -> T + Sync,
    {
        let n = self.m.n;
        let mut acc = init();
        // Sets of size one and the two-point prefixes under them.
        let mut prefixes = Vec::new();
        for p0 in 0..n {
            let s = 1u128 << p0;
            let cov = self.m.pl[p0];
            if self.k_max == 0 {
                break;
            }
            if cov == self.m.all {
                visit(&mut acc, s, 1, p0);
                continue;
            }
            if self.k_max < 2 || self.pruned(cov, 1) {
                continue;
            }
            for p1 in p0 + 1..n {
                prefixes.push((p0, p1));
            }
        }
        let parts = prefixes
            .into_par_iter()
            .map(|(p0, p1)| {
                let mut local = init();
                let s = 1u128 << p0 | 1u128 << p1;
                let cov = self.m.pl[p0] | self.m.pl[p1];
                if cov == self.m.all {
                    visit(&mut local, s, 2, p1);
                } else if 2 < self.k_max && !self.pruned(cov, 2) {
                    self.walk(p1 + 1, s, cov, 2, &mut |s, sz, last| visit(&mut local, s, sz, last));
                }
                local
            })
            .collect::<Vec<_>>();
        parts.into_iter().fold(acc, merge)
    }
}

/// Exact counts of blocking and minimal blocking sets of every size up to
/// `k_max`.
pub fn census_blocking(plane: &Plane, k_max: usize, budget: &Budget) -> Result<CensusTable> {
    let m = Masks::new(plane)?;
    let k_max = k_max.min(m.n);
    budget.check(m.n, k_max)?;
    let start = Instant::now();
    // Binomials for counting supersets of a blocking set in closed form.
    let choose: Vec<Vec<u64>> = (0..=m.n as u64)
        .map(|r| (0..=k_max as u64).map(|k| u64::try_from(rat::binomial(r, k)).unwrap_or(u64::MAX)).collect())
        .collect();
    let walker = Walker { m, k_max };
    let counts = walker.run(
        || vec![CensusRow::default(); k_max + 1],
        |acc, s, size, last| {
            acc[size].blocking += 1;
            if m.all_have_tangents(s) {
                acc[size].minimal += 1;
            }
            // Every superset whose extra points all follow `last` is
            // blocking and is reached by no other branch.
            let rest = m.n - 1 - last;
            for extra in 1..=k_max - size {
                acc[size + extra].blocking += choose[rest][extra];
            }
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                x.blocking += y.blocking;
                x.minimal += y.minimal;
            }
            a
        },
    );
    Ok(CensusTable {
        q: plane.q(),
        k_max,
        method: CensusMethod::Exhaustive,
        rows: counts.into_iter().enumerate().collect(),
        wall_time: start.elapsed(),
    })
}

/// Every minimal blocking set with at most `k_max` points, in lexicographic
/// order of their sorted point ids.
pub fn minimal_blocking_sets(plane: &Plane, k_max: usize, budget: &Budget) -> Result<Vec<PointSet>> {
    let m = Masks::new(plane)?;
    let k_max = k_max.min(m.n);
    budget.check(m.n, k_max)?;
    let walker = Walker { m, k_max };
    let mut found = walker.run(
        Vec::new,
        |acc: &mut Vec<u128>, s, _, _| {
            if m.all_have_tangents(s) {
                acc.push(s);
            }
        },
        |mut a, b| {
            a.extend(b);
            a
        },
    );
    found.sort_unstable_by_key(|s| std::cmp::Reverse(s.reverse_bits()));
    Ok(found.into_iter().map(|s| PointSet::from_mask(m.n, s)).collect())
}

/// Size of the smallest blocking subset of `s`, or `None` if `s` is not
/// blocking.
pub fn min_blocking_subset_size(plane: &Plane, s: &PointSet) -> Result<Option<usize>> {
    let m = Masks::new(plane)?;
    let sm = mask_of(plane, s)?;
    if !m.is_blocking(sm) {
        return Ok(None);
    }
    let t = m.min_cover(sm, 0, m.all, sm.count_ones() as usize);
    Ok(t.map(|t| t.count_ones() as usize))
}

/// All minimal blocking subsets of `s`, by exhausting its subsets.
pub fn minimal_blocking_subsets(plane: &Plane, s: &PointSet) -> Result<Vec<PointSet>> {
    let m = Masks::new(plane)?;
    let sm = mask_of(plane, s)?;
    if sm.count_ones() > 24 {
        return Err(Error::BudgetExceeded(format!(
            "{} points is too many to exhaust subsets",
            sm.count_ones()
        )));
    }
    let mut out = Vec::new();
    // Walk submasks of `sm` from the full set downward.
    let mut t = sm;
    loop {
        if m.is_minimal(t) {
            out.push(PointSet::from_mask(m.n, t));
        }
        if t == 0 {
            break;
        }
        t = (t - 1) & sm;
    }
    out.reverse();
    Ok(out)
}

/// The minimal blocking set inside a blocking set of at most `2q` points.
/// Finding two is a uniqueness violation and is returned as an error.
pub fn unique_minimal_witness(plane: &Plane, s: &PointSet) -> Result<PointSet> {
    let q = plane.q() as usize;
    if s.count() > 2 * q {
        return Err(Error::InvalidArgument(format!("|S| = {} exceeds 2q = {}", s.count(), 2 * q)));
    }
    if !plane.is_blocking(s) {
        return Err(Error::InvalidArgument("S is not a blocking set".into()));
    }
    let mut found = minimal_blocking_subsets(plane, s)?;
    match found.len() {
        1 => Ok(found.pop().unwrap()),
        _ => Err(Error::UniquenessViolation(format!(
            "{:?} contains {} minimal blocking sets: {:?}",
            s,
            found.len(),
            found
        ))),
    }
}

/// Membership of a point set in the three classes defined by distance to
/// small blocking sets. `Small` below means blocking with fewer than `2q`
/// points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuitMembership {
    /// `S` is itself small blocking.
    pub spade: bool,
    /// A small blocking `T` with `|T \ S| = 1`, when one exists.
    pub club: Option<PointSet>,
    /// No small blocking `T` has `|T \ S| <= 1`.
    pub diamond: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Suit {
    Spade,
    Club,
    Diamond,
}

impl SuitMembership {
    pub fn suits(&self) -> Vec<Suit> {
        let mut v = Vec::new();
        if self.spade {
            v.push(Suit::Spade);
        }
        if self.club.is_some() {
            v.push(Suit::Club);
        }
        if self.diamond {
            v.push(Suit::Diamond);
        }
        v
    }

    pub fn is_none(&self) -> bool {
        self.suits().is_empty()
    }

    pub fn is_club(&self) -> bool {
        self.club.is_some()
    }
}

/// Classifies `s` by direct search over the points outside it.
pub fn classify_suit(plane: &Plane, s: &PointSet) -> Result<SuitMembership> {
    let m = Masks::new(plane)?;
    let sm = mask_of(plane, s)?;
    let small = 2 * m.q as usize - 1;
    let spade = m.is_blocking(sm) && (sm.count_ones() as usize) <= small;
    let inside = spade || m.min_cover(sm, 0, m.all, small).is_some();
    let club = bits(m.all_points_mask() & !sm).find_map(|p| {
        let bit = 1u128 << p;
        m.min_cover(sm | bit, bit, m.all, small)
            .map(|t| PointSet::from_mask(m.n, t))
    });
    let diamond = !inside && club.is_none();
    Ok(SuitMembership { spade, club, diamond })
}

impl Masks<'_> {
    fn all_points_mask(&self) -> u128 {
        full_mask(self.n)
    }
}

/// Suit classification from the list of small minimal blocking sets; an
/// independent route used to cross-check [`classify_suit`].
pub struct SuitClassifier {
    n: usize,
    q: u32,
    small: Vec<u128>,
}

impl SuitClassifier {
    pub fn new(plane: &Plane) -> Result<Self> {
        let q = plane.q();
        let sets = minimal_blocking_sets(plane, 2 * q as usize - 1, &Budget { max_subsets: 1 << 32 })?;
        Ok(SuitClassifier {
            n: plane.num_points(),
            q,
            small: sets.iter().filter_map(PointSet::to_mask).collect(),
        })
    }

    /// The minimal blocking sets with fewer than `2q` points.
    pub fn small_sets(&self) -> impl Iterator<Item = PointSet> + '_ {
        self.small.iter().map(|&s| PointSet::from_mask(self.n, s))
    }

    pub fn classify(&self, s: &PointSet) -> SuitMembership {
        let sm = s.to_mask().expect("plane fits a mask");
        let small = 2 * self.q - 1;
        let size = sm.count_ones();
        // S is small blocking iff it has at most 2q-1 points and contains a
        // small minimal set.
        let inside = self.small.iter().any(|&t| t & !sm == 0);
        let spade = inside && size <= small;
        let outside = full_mask(self.n) & !sm;
        let club = self
            .small
            .iter()
            .find(|&&t| (t & !sm).count_ones() == 1)
            .copied()
            .or_else(|| {
                // A small set inside S leaves room for one outside point.
                let extra = outside.trailing_zeros();
                if outside == 0 {
                    return None;
                }
                self.small
                    .iter()
                    .find(|&&t| t & !sm == 0 && t.count_ones() < small)
                    .map(|&t| t | 1u128 << extra)
            })
            .map(|t| PointSet::from_mask(self.n, t));
        SuitMembership {
            spade,
            club,
            diamond: !inside && !self.small.iter().any(|&t| (t & !sm).count_ones() == 1),
        }
    }
}

/// Minimum number of affine points meeting every line other than
/// `infinity`.
pub fn jamison_min_affine(plane: &Plane, infinity: LineId) -> Result<usize> {
    let m = Masks::new(plane)?;
    let affine = m.all_points_mask() & !m.lp[infinity];
    let targets = m.all & !(1u128 << infinity);
    m.min_cover(affine, 0, targets, m.n)
        .map(|t| t.count_ones() as usize)
        .ok_or_else(|| Error::InvalidArgument("affine lines cannot be covered".into()))
}

/// One run of the greedy completion: add points covering the most missed
/// lines until the missed lines are concurrent, then one point on each
/// remaining line but the last.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GreedyTrace {
    /// Lines missed by the input set (`m`).
    pub initial_missed: usize,
    /// Greedy picks with the number of newly covered lines.
    pub greedy: Vec<(PointId, usize)>,
    /// Common point of the lines left after the greedy phase.
    pub center: PointId,
    /// Lines left after the greedy phase (`x`).
    pub remaining: usize,
    pub finishing: Vec<PointId>,
    /// The single line the completed set misses.
    pub uncovered_line: LineId,
}

impl GreedyTrace {
    /// Greedy steps taken (`k`).
    pub fn steps(&self) -> usize {
        self.greedy.len()
    }

    pub fn added(&self) -> Vec<PointId> {
        self.greedy.iter().map(|&(p, _)| p).chain(self.finishing.iter().copied()).collect()
    }

    /// `m >= max(2, x) k + x`.
    pub fn counting_bound_holds(&self) -> bool {
        self.initial_missed >= self.remaining.max(2) * self.steps() + self.remaining
    }
}

pub fn greedy_completion(plane: &Plane, s: &PointSet) -> Result<GreedyTrace> {
    let mut missed = plane.missed_lines(s);
    if missed.is_empty() {
        return Err(Error::InvalidArgument("S is already blocking".into()));
    }
    let initial_missed = missed.count();
    let mut greedy = Vec::new();
    let center = loop {
        if let Some(c) = common_point(plane, &missed) {
            break c;
        }
        let (p, gain) = (0..plane.num_points())
            .map(|p| (p, plane.incidence_row(p).intersection_count(&missed)))
            .fold((0, 0), |best, cur| if cur.1 > best.1 { cur } else { best });
        missed.difference_with(plane.incidence_row(p));
        greedy.push((p, gain));
    };
    let rest: Vec<LineId> = missed.iter().collect();
    let (&last, others) = rest.split_last().expect("missed lines remain");
    let finishing = others
        .iter()
        .map(|&l| *plane.points_on(l).iter().find(|&&p| p != center).expect("line has q+1 points"))
        .collect();
    Ok(GreedyTrace {
        initial_missed,
        greedy,
        center,
        remaining: rest.len(),
        finishing,
        uncovered_line: last,
    })
}

fn common_point(plane: &Plane, lines: &LineSet) -> Option<PointId> {
    let mut it = lines.iter();
    let first = it.next()?;
    let mut common = plane.line_points(first);
    for l in it {
        common.intersect_with(&plane.line_points(l));
    }
    let first_common = common.iter().next();
    first_common
}

/// Tangent lines through `p` for a blocking set that stops blocking without
/// `p`.
pub fn critical_tangent_count(plane: &Plane, s: &PointSet, p: PointId) -> Result<usize> {
    if !s.contains(p) {
        return Err(Error::InvalidArgument(format!("point {p} is not in S")));
    }
    if !plane.is_blocking(s) {
        return Err(Error::InvalidArgument("S is not a blocking set".into()));
    }
    let mut without = s.clone();
    without.remove(p);
    if plane.is_blocking(&without) {
        return Err(Error::InvalidArgument(format!("S without point {p} is still blocking")));
    }
    Ok(plane
        .lines_through(p)
        .iter()
        .filter(|&&l| plane.points_on(l).iter().all(|&x| x == p || !s.contains(x)))
        .count())
}

/// `C(q^2+q+1, 2k-2q) / C(k, 2k-2q)` for `q <= k <= 2q`.
pub fn bound_f(k: u64, q: u64) -> Result<Rat> {
    if k < q || k > 2 * q {
        return Err(Error::InvalidArgument(format!("k = {k} outside [q, 2q] for q = {q}")));
    }
    let j = 2 * k - 2 * q;
    let n = q * q + q + 1;
    Ok(rat::from_biguint(&rat::binomial(n, j)) / rat::from_biguint(&rat::binomial(k, j)))
}

/// `(e q / 2)^(2k-2q)` evaluated with the upper rational bracket of `e`.
pub fn bound_exp(k: u64, q: u64) -> Result<Rat> {
    exp_bound_with(k, q, rat::e_upper())
}

/// Same as [`bound_exp`] with the lower bracket of `e`; strictly below the
/// true value, so `B_k < bound_exp_lower` implies the real inequality.
pub fn bound_exp_lower(k: u64, q: u64) -> Result<Rat> {
    exp_bound_with(k, q, rat::e_lower())
}

fn exp_bound_with(k: u64, q: u64, e: Rat) -> Result<Rat> {
    if k < q + 1 || k > 2 * q {
        return Err(Error::InvalidArgument(format!("k = {k} outside [q+1, 2q] for q = {q}")));
    }
    let base = e * rat::int(q as i64) / rat::int(2);
    Ok(rat::pow(&base, 2 * k - 2 * q))
}
