//! The projective plane PG(2,q) with canonical point and line ids.
//!
//! A point is a homogeneous triple scaled so that its first nonzero coordinate
//! is 1. Points are numbered by lexicographic order of their canonical triples
//! (coordinates compared as field indices), which gives the closed form
//!
//! ```text
//! (0,0,1) -> 0      (0,1,z) -> 1 + z      (1,y,z) -> 1 + q + q*y + z
//! ```
//!
//! Lines use the same normalisation on dual coordinates `[a,b,c]`, and a point
//! lies on a line when `a*x + b*y + c*z = 0`.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::bitset::{LineSet, PointSet};
use crate::error::{Error, Result};
use crate::field::{Elem, FieldSpec};

pub type PointId = usize;
pub type LineId = usize;
pub type Triple = [Elem; 3];

/// Largest plane (q = 9, 91 points) whose point and line sets fit in a `u128`.
pub const MASK_LIMIT: usize = 128;

#[derive(Debug, Clone)]
pub struct Plane {
    field: FieldSpec,
    points: Vec<Triple>,
    lines: Vec<Triple>,
    /// Per point: the set of lines through it.
    incidence: Vec<LineSet>,
    lines_through: Vec<Vec<LineId>>,
    points_on: Vec<Vec<PointId>>,
    point_masks: Option<Vec<u128>>,
    line_masks: Option<Vec<u128>>,
}

pub fn plane_size(q: u64) -> u64 {
    q * q + q + 1
}

/// All canonical triples in id order.
fn canonical_triples(q: u32) -> Vec<Triple> {
    let mut out = Vec::with_capacity((q * q + q + 1) as usize);
    out.push([0, 0, 1]);
    for z in 0..q {
        out.push([0, 1, z]);
    }
    for y in 0..q {
        for z in 0..q {
            out.push([1, y, z]);
        }
    }
    out
}

impl Plane {
    /// Builds PG(2,q) over `field` by testing every point against every line.
    pub fn new(field: FieldSpec) -> Plane {
        let q = field.q();
        let points = canonical_triples(q);
        let lines = points.clone();
        let n = points.len();
        let incidence: Vec<LineSet> = points
            .par_iter()
            .map(|pt| {
                let mut s = LineSet::new(n);
                for (li, ln) in lines.iter().enumerate() {
                    if dot(&field, pt, ln) == 0 {
                        s.insert(li);
                    }
                }
                s
            })
            .collect();
        Self::from_parts(field, points, lines, incidence)
    }

    pub fn with_order(q: u64) -> Result<Plane> {
        Ok(Plane::new(FieldSpec::with_order(q)?))
    }

    pub(crate) fn from_parts(
        field: FieldSpec,
        points: Vec<Triple>,
        lines: Vec<Triple>,
        incidence: Vec<LineSet>,
    ) -> Plane {
        let n = points.len();
        let lines_through: Vec<Vec<LineId>> = incidence.iter().map(|s| s.iter().collect()).collect();
        let mut points_on = vec![Vec::new(); lines.len()];
        for (p, ls) in lines_through.iter().enumerate() {
            for &l in ls {
                points_on[l].push(p);
            }
        }
        let (point_masks, line_masks) = if n <= MASK_LIMIT {
            let pm = lines_through
                .iter()
                .map(|ls| ls.iter().fold(0u128, |m, &l| m | 1 << l))
                .collect();
            let lm = points_on
                .iter()
                .map(|ps| ps.iter().fold(0u128, |m, &p| m | 1 << p))
                .collect();
            (Some(pm), Some(lm))
        } else {
            (None, None)
        };
        Plane {
            field,
            points,
            lines,
            incidence,
            lines_through,
            points_on,
            point_masks,
            line_masks,
        }
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn q(&self) -> u32 {
        self.field.q()
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn num_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn point(&self, id: PointId) -> Triple {
        self.points[id]
    }

    pub fn line(&self, id: LineId) -> Triple {
        self.lines[id]
    }

    pub fn points(&self) -> &[Triple] {
        &self.points
    }

    pub fn lines(&self) -> &[Triple] {
        &self.lines
    }

    /// Set of lines through `p`.
    pub fn incidence_row(&self, p: PointId) -> &LineSet {
        &self.incidence[p]
    }

    pub fn lines_through(&self, p: PointId) -> &[LineId] {
        &self.lines_through[p]
    }

    pub fn points_on(&self, l: LineId) -> &[PointId] {
        &self.points_on[l]
    }

    pub fn is_incident(&self, p: PointId, l: LineId) -> bool {
        self.incidence[p].contains(l)
    }

    /// Per point, the lines through it as a 128-bit mask (planes with q <= 9).
    pub fn point_masks(&self) -> Option<&[u128]> {
        self.point_masks.as_deref()
    }

    /// Per line, the points on it as a 128-bit mask (planes with q <= 9).
    pub fn line_masks(&self) -> Option<&[u128]> {
        self.line_masks.as_deref()
    }

    pub(crate) fn require_masks(&self) -> Result<(&[u128], &[u128])> {
        match (&self.point_masks, &self.line_masks) {
            (Some(p), Some(l)) => Ok((p, l)),
            _ => Err(Error::BudgetExceeded(format!(
                "q = {} is too large for bit-mask search (needs q <= 9)",
                self.q()
            ))),
        }
    }

    /// Scales a nonzero vector so its first nonzero coordinate is 1.
    pub fn canonical(&self, v: Triple) -> Option<Triple> {
        let f = &self.field;
        let lead = v.iter().copied().find(|&c| c != 0)?;
        let inv = f.inv(lead).ok()?;
        Some([f.mul(v[0], inv), f.mul(v[1], inv), f.mul(v[2], inv)])
    }

    fn id_of_canonical(&self, c: Triple) -> usize {
        let q = self.q() as usize;
        match c {
            [0, 0, _] => 0,
            [0, _, z] => 1 + z as usize,
            [_, y, z] => 1 + q + q * y as usize + z as usize,
        }
    }

    /// Id of the point with homogeneous coordinates `v` (any nonzero scaling).
    pub fn point_id(&self, v: Triple) -> Option<PointId> {
        self.canonical(v).map(|c| self.id_of_canonical(c))
    }

    /// Id of the line with dual coordinates `v`.
    pub fn line_id(&self, v: Triple) -> Option<LineId> {
        self.point_id(v)
    }

    /// The unique line through two distinct points.
    pub fn line_through(&self, a: PointId, b: PointId) -> Result<LineId> {
        if a == b {
            return Err(Error::InvalidArgument("line_through needs two distinct points".into()));
        }
        let v = cross(&self.field, &self.points[a], &self.points[b]);
        Ok(self.line_id(v).expect("distinct points have a nonzero cross product"))
    }

    /// The unique common point of two distinct lines.
    pub fn meet(&self, l1: LineId, l2: LineId) -> Result<PointId> {
        if l1 == l2 {
            return Err(Error::InvalidArgument("meet needs two distinct lines".into()));
        }
        let v = cross(&self.field, &self.lines[l1], &self.lines[l2]);
        Ok(self.point_id(v).expect("distinct lines have a nonzero cross product"))
    }

    pub fn empty_points(&self) -> PointSet {
        PointSet::new(self.num_points())
    }

    pub fn point_set<I: IntoIterator<Item = PointId>>(&self, ids: I) -> PointSet {
        PointSet::from_ids(self.num_points(), ids)
    }

    /// Point set of a line.
    pub fn line_points(&self, l: LineId) -> PointSet {
        self.point_set(self.points_on[l].iter().copied())
    }

    /// Lines meeting no point of `s` (the set usually written `M_S`).
    pub fn missed_lines(&self, s: &PointSet) -> LineSet {
        let mut out = LineSet::full(self.num_lines());
        for p in s.iter() {
            out.difference_with(&self.incidence[p]);
        }
        out
    }

    pub fn is_blocking(&self, s: &PointSet) -> bool {
        self.missed_lines(s).is_empty()
    }

    /// The two least-id points `(A, B)` of `l`. The points of `l` are
    /// `s*A + t*B` for canonical `(s:t)`.
    pub fn parametrize_line(&self, l: LineId) -> (PointId, PointId) {
        let pts = &self.points_on[l];
        (pts[0], pts[1])
    }

    /// Point `s*A + t*B`.
    pub fn combine(&self, a: PointId, b: PointId, s: Elem, t: Elem) -> Option<PointId> {
        let f = &self.field;
        let (va, vb) = (self.points[a], self.points[b]);
        let v = [0, 1, 2].map(|i| f.add(f.mul(s, va[i]), f.mul(t, vb[i])));
        self.point_id(v)
    }

    /// Canonical parameters `(s:t)` in lexicographic order: `(0:1)`, then `(1:t)`.
    pub fn projective_line_params(&self) -> Vec<(Elem, Elem)> {
        std::iter::once((0, 1))
            .chain((0..self.q()).map(|t| (1, t)))
            .collect()
    }

    /// Points of `l` in parameter order, using [`Plane::parametrize_line`].
    pub fn parametrized_points(&self, l: LineId) -> Vec<PointId> {
        let (a, b) = self.parametrize_line(l);
        self.projective_line_params()
            .into_iter()
            .map(|(s, t)| self.combine(a, b, s, t).expect("A and B are independent"))
            .collect()
    }

    /// The affine plane left after removing `infinity`.
    pub fn affine_view(&self, infinity: LineId) -> AffinePlane {
        let points: Vec<PointId> = (0..self.num_points())
            .filter(|&p| !self.is_incident(p, infinity))
            .collect();
        let lines = (0..self.num_lines())
            .filter(|&l| l != infinity)
            .map(|l| {
                let pts = self.points_on[l]
                    .iter()
                    .copied()
                    .filter(|&p| !self.is_incident(p, infinity))
                    .collect();
                (l, pts)
            })
            .collect();
        AffinePlane {
            infinity,
            points,
            lines,
        }
    }

    /// Checks the incidence axioms exhaustively; returns a description of the
    /// first violation found.
    pub fn check_axioms(&self) -> std::result::Result<(), String> {
        let q = self.q() as usize;
        let n = q * q + q + 1;
        check_incidence_axioms(q, n, &self.lines_through, &self.points_on)?;
        for a in 0..n {
            for b in a + 1..n {
                let l = self.line_through(a, b).map_err(|e| e.to_string())?;
                if !self.is_incident(a, l) || !self.is_incident(b, l) {
                    return Err(format!("join of {a},{b} is not incident with both"));
                }
                let p = self.meet(a, b).map_err(|e| e.to_string())?;
                if !self.is_incident(p, a) || !self.is_incident(p, b) {
                    return Err(format!("meet of lines {a},{b} is not on both"));
                }
            }
        }
        Ok(())
    }

    /// Checks the same axioms on the transposed incidence structure (points and
    /// lines swapped).
    pub fn check_dual_axioms(&self) -> std::result::Result<(), String> {
        let q = self.q() as usize;
        check_incidence_axioms(q, q * q + q + 1, &self.points_on, &self.lines_through)
    }

    /// All Baer subplanes of PG(2,q) for square `q <= 9`, as point sets sorted by
    /// their least elements.
    ///
    /// Four points in general position span exactly one Baer subplane: writing
    /// the fourth as `w1 + w2 + w3` for suitable scalings of the first three, the
    /// subplane is every point `a*w1 + b*w2 + c*w3` with `a, b, c` in the subfield.
    /// Every quadrangle is visited and the resulting sets deduplicated.
    pub fn enumerate_baer_subplanes(&self) -> Result<Vec<PointSet>> {
        let q = self.q();
        if self.field.r() % 2 != 0 {
            return Err(Error::NotSquare(q));
        }
        let (_, line_masks) = self.require_masks()?;
        let sub = self.field.fixed_subfield()?;
        let root = sub.len();
        let n = self.num_points();
        let expected_size = q as usize + root + 1;

        let found: HashSet<u128> = (0..n)
            .into_par_iter()
            .flat_map_iter(|p1| {
                let mut local = HashSet::new();
                for p2 in p1 + 1..n {
                    let l12 = line_masks[self.line_through(p1, p2).unwrap()];
                    for p3 in p2 + 1..n {
                        if l12 >> p3 & 1 == 1 {
                            continue;
                        }
                        let l13 = line_masks[self.line_through(p1, p3).unwrap()];
                        let l23 = line_masks[self.line_through(p2, p3).unwrap()];
                        let forbidden = l12 | l13 | l23;
                        for p4 in p3 + 1..n {
                            if forbidden >> p4 & 1 == 1 {
                                continue;
                            }
                            local.insert(self.subplane_from_frame([p1, p2, p3, p4], &sub));
                        }
                    }
                }
                local
            })
            .collect();

        let mut out: Vec<u128> = found.into_iter().collect();
        // Lexicographic order of sorted id lists.
        out.sort_unstable_by_key(|s| std::cmp::Reverse(s.reverse_bits()));
        let sets: Vec<PointSet> = out.into_iter().map(|m| PointSet::from_mask(n, m)).collect();
        for s in &sets {
            if s.count() != expected_size {
                return Err(Error::InvalidArgument(format!(
                    "subplane of size {} (expected {expected_size})",
                    s.count()
                )));
            }
            if !self.is_subplane(s, root + 1) {
                return Err(Error::InvalidArgument("frame closure is not a subplane".into()));
            }
        }
        Ok(sets)
    }

    fn subplane_from_frame(&self, frame: [PointId; 4], sub: &[Elem]) -> u128 {
        let f = &self.field;
        let v = frame.map(|p| self.points[p]);
        let (a, b, c) = solve3(f, [v[0], v[1], v[2]], v[3]).expect("frame points are independent");
        let w = [
            v[0].map(|x| f.mul(a, x)),
            v[1].map(|x| f.mul(b, x)),
            v[2].map(|x| f.mul(c, x)),
        ];
        let mut mask = 0u128;
        for &x in sub {
            for &y in sub {
                for &z in sub {
                    let coords = [0, 1, 2].map(|i| {
                        f.add(f.add(f.mul(x, w[0][i]), f.mul(y, w[1][i])), f.mul(z, w[2][i]))
                    });
                    if let Some(id) = self.point_id(coords) {
                        mask |= 1 << id;
                    }
                }
            }
        }
        mask
    }

    /// True when every line meets `s` in 1 or `line_size` points, and every pair
    /// of points of `s` spans a line meeting `s` in `line_size` points.
    fn is_subplane(&self, s: &PointSet, line_size: usize) -> bool {
        (0..self.num_lines()).all(|l| {
            let k = self.points_on[l].iter().filter(|&&p| s.contains(p)).count();
            k == 1 || k == line_size
        })
    }
}

fn check_incidence_axioms(
    q: usize,
    n: usize,
    through: &[Vec<usize>],
    on: &[Vec<usize>],
) -> std::result::Result<(), String> {
    if through.len() != n || on.len() != n {
        return Err(format!("expected {n} points and lines, got {} and {}", through.len(), on.len()));
    }
    if let Some(p) = through.iter().position(|ls| ls.len() != q + 1) {
        return Err(format!("point {p} lies on {} lines", through[p].len()));
    }
    if let Some(l) = on.iter().position(|ps| ps.len() != q + 1) {
        return Err(format!("line {l} carries {} points", on[l].len()));
    }
    // Two distinct points share exactly one line.
    let mut seen = vec![0u32; n * n];
    for ps in on {
        for (i, &a) in ps.iter().enumerate() {
            for &b in &ps[i + 1..] {
                seen[a * n + b] += 1;
            }
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            if seen[a * n + b] != 1 {
                return Err(format!("points {a},{b} share {} lines", seen[a * n + b]));
            }
        }
    }
    // Two distinct lines share exactly one point.
    seen.iter_mut().for_each(|x| *x = 0);
    for ls in through {
        for (i, &a) in ls.iter().enumerate() {
            for &b in &ls[i + 1..] {
                seen[a * n + b] += 1;
            }
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            if seen[a * n + b] != 1 {
                return Err(format!("lines {a},{b} share {} points", seen[a * n + b]));
            }
        }
    }
    Ok(())
}

pub(crate) fn dot(f: &FieldSpec, a: &Triple, b: &Triple) -> Elem {
    f.add(f.add(f.mul(a[0], b[0]), f.mul(a[1], b[1])), f.mul(a[2], b[2]))
}

pub(crate) fn cross(f: &FieldSpec, u: &Triple, v: &Triple) -> Triple {
    [
        f.sub(f.mul(u[1], v[2]), f.mul(u[2], v[1])),
        f.sub(f.mul(u[2], v[0]), f.mul(u[0], v[2])),
        f.sub(f.mul(u[0], v[1]), f.mul(u[1], v[0])),
    ]
}

/// Solves `a*c0 + b*c1 + c*c2 = target` for column vectors `c_i` by Cramer's rule.
fn solve3(f: &FieldSpec, cols: [Triple; 3], target: Triple) -> Option<(Elem, Elem, Elem)> {
    let det = |m: [Triple; 3]| dot(f, &m[0], &cross(f, &m[1], &m[2]));
    let d = det(cols);
    let d_inv = f.inv(d).ok()?;
    let a = f.mul(det([target, cols[1], cols[2]]), d_inv);
    let b = f.mul(det([cols[0], target, cols[2]]), d_inv);
    let c = f.mul(det([cols[0], cols[1], target]), d_inv);
    Some((a, b, c))
}

/// AG(2,q) as seen inside PG(2,q): plane points off the line at infinity, and
/// every other line restricted to its `q` affine points.
#[derive(Debug, Clone)]
pub struct AffinePlane {
    pub infinity: LineId,
    pub points: Vec<PointId>,
    pub lines: Vec<(LineId, Vec<PointId>)>,
}
