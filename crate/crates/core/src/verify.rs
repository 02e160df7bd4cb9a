//! The self-check suite behind `tfree verify`.
//!
//! Every check returns a [`Check`]. A census value that disagrees with a
//! closed-form prediction is reported as a [`Status::Conflict`], distinct
//! from a hard failure.

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::One;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bitset::PointSet;
use crate::blocking::{self, bits, Budget, CensusTable, Masks, SuitClassifier};
use crate::curves::{self, CurveCensus, CurveSpace, DEFAULT_EXACT_BUDGET};
use crate::density;
use crate::error::Result;
use crate::field::prime_power;
use crate::plane::{plane_size, Plane};
use crate::poly::HomPoly;
use crate::rat::{self, Rat};
use crate::stats::Estimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Conflict,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn line(&self) -> String {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Conflict => "CONFLICT",
        };
        format!("{tag:<8} {} ({:.2} s): {}", self.name, self.elapsed.as_secs_f64(), self.detail)
    }
}

/// Runs `f` and turns its outcome into a [`Check`]; errors become failures.
fn timed(name: &str, f: impl FnOnce() -> Result<(Status, String)>) -> Check {
    let start = Instant::now();
    let (status, detail) = f().unwrap_or_else(|e| (Status::Fail, format!("error: {e}")));
    Check { name: name.to_string(), status, detail, elapsed: start.elapsed() }
}

/// Collects mismatches; passes when there are none.
#[derive(Default)]
struct Findings {
    bad: Vec<String>,
}

impl Findings {
    fn expect(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.bad.push(msg());
        }
    }

    fn finish(self, summary: String) -> (Status, String) {
        if self.bad.is_empty() {
            (Status::Pass, summary)
        } else {
            (Status::Fail, self.bad.join("; "))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Suite {
    pub level: Level,
    pub checks: Vec<Check>,
}

impl Suite {
    /// 0 when everything passes, 2 when the only problems are conflicts,
    /// 3 on any hard failure.
    pub fn exit_code(&self) -> i32 {
        if self.checks.iter().any(|c| c.status == Status::Fail) {
            3
        } else if self.checks.iter().any(|c| c.status == Status::Conflict) {
            2
        } else {
            0
        }
    }
}

/// Plane construction: counts, incidence axioms and their duals.
pub fn plane_axioms(qs: &[u64]) -> Check {
    timed("plane axioms", || {
        let mut f = Findings::default();
        for &q in qs {
            let p = Plane::with_order(q)?;
            let n = plane_size(q) as usize;
            f.expect(p.num_points() == n && p.num_lines() == n, || format!("q={q}: wrong counts"));
            if let Err(e) = p.check_axioms() {
                f.bad.push(format!("q={q}: {e}"));
            }
            if let Err(e) = p.check_dual_axioms() {
                f.bad.push(format!("q={q} dual: {e}"));
            }
        }
        Ok(f.finish(format!("q in {qs:?}")))
    })
}

/// Exhaustive blocking-set censuses up to `k_max = 2q`.
pub fn blocking_censuses(qs: &[u64]) -> Result<Vec<CensusTable>> {
    qs.iter()
        .map(|&q| blocking::census_blocking(&Plane::with_order(q)?, 2 * q as usize, &Budget::default()))
        .collect()
}

/// Minimal blocking set counts for small `q` with known values.
pub fn blocking_values(tables: &[CensusTable]) -> Check {
    const KNOWN: &[(u32, usize, u64)] =
        &[(2, 3, 7), (2, 4, 0), (3, 4, 13), (3, 5, 0), (4, 5, 21), (4, 6, 0), (4, 7, 360)];
    timed("blocking census values", || {
        let mut f = Findings::default();
        let mut seen = Vec::new();
        for &(q, k, want) in KNOWN {
            let Some(t) = tables.iter().find(|t| t.q == q) else { continue };
            let got = t.minimal(k);
            f.expect(got == Some(want), || format!("q={q}: B_{k} = {got:?}, want {want}"));
            seen.push(format!("q={q} B_{k}={want}"));
        }
        Ok(f.finish(seen.join(", ")))
    })
}

/// The closed form for `B_k` claimed to hold when `k < q + q^(2/3) + 1`:
/// `q^2+q+1` lines at `k = q+1`, the Baer subplanes at `k = q+√q+1`, and
/// zero otherwise. `None` outside that range.
pub fn small_k_prediction(q: u64, k: u64) -> Option<u64> {
    // k - q - 1 < q^(2/3)  <=>  (k - q - 1)^3 < q^2
    let in_range = k <= q || (k - q - 1).pow(3) < q * q;
    if !in_range {
        return None;
    }
    if k == q + 1 {
        return Some(plane_size(q));
    }
    match (density::exact_sqrt(q), density::baer_count(q)) {
        (Some(r), Some(b)) if k == q + r + 1 => Some(b),
        _ => Some(0),
    }
}

/// Compares every census row in the small-`k` range with the closed form.
/// Disagreements are conflicts, not failures.
pub fn small_k_conflicts(tables: &[CensusTable]) -> Check {
    timed("small-k closed form", || {
        let mut conflicts = Vec::new();
        let mut compared = 0;
        for t in tables {
            let q = t.q as u64;
            for (&k, row) in &t.rows {
                let Some(want) = small_k_prediction(q, k as u64) else { continue };
                compared += 1;
                if row.minimal != want {
                    conflicts.push(format!(
                        "q={q}, k={k}: census finds {} minimal blocking sets where the closed form for \
                         k < q+q^(2/3)+1 predicts {want}",
                        row.minimal
                    ));
                }
            }
        }
        Ok(if conflicts.is_empty() {
            (Status::Pass, format!("{compared} rows agree"))
        } else {
            (Status::Conflict, conflicts.join("; "))
        })
    })
}

/// `B_k <= f(k)` on `q <= k <= 2q`, `B_k < (eq/2)^(2k-2q)` on `q+1 <= k <= 2q`,
/// and equality `B_{q+1} = f(q+1)`.
pub fn count_bounds(tables: &[CensusTable]) -> Check {
    timed("minimal blocking count bounds", || {
        let mut f = Findings::default();
        let mut n = 0;
        for t in tables {
            let q = t.q as u64;
            for k in q..=2 * q {
                let Some(b) = t.minimal(k as usize) else {
                    f.bad.push(format!("q={q}: census lacks k={k}"));
                    continue;
                };
                let b = rat::int(b as i64);
                let fk = blocking::bound_f(k, q)?;
                f.expect(b <= fk, || format!("q={q} k={k}: B_k = {b} > f(k) = {fk}"));
                if k > q {
                    // The lower bracket of e keeps this strict test rigorous.
                    let e = blocking::bound_exp_lower(k, q)?;
                    f.expect(b < e, || format!("q={q} k={k}: B_k = {b} not below (eq/2)^(2k-2q)"));
                }
                if k == q + 1 {
                    f.expect(b == fk, || format!("q={q}: B_(q+1) = {b} differs from f(q+1) = {fk}"));
                }
                n += 1;
            }
        }
        Ok(f.finish(format!("{n} (q, k) pairs")))
    })
}

/// Smallest affine blocking set has `2q - 1` points.
pub fn affine_minimum(qs: &[u64]) -> Check {
    timed("affine blocking minimum", || {
        let mut f = Findings::default();
        for &q in qs {
            let p = Plane::with_order(q)?;
            let got = blocking::jamison_min_affine(&p, 0)?;
            f.expect(got == 2 * q as usize - 1, || format!("q={q}: minimum {got}, want {}", 2 * q - 1));
        }
        Ok(f.finish(format!("q in {qs:?}")))
    })
}

/// Every blocking set of at most `2q` points contains exactly one minimal
/// blocking set. Exhaustive.
pub fn unique_minimal_subsets(qs: &[u64]) -> Check {
    timed("unique minimal blocking subset", || {
        let mut f = Findings::default();
        let mut total = 0u64;
        for &q in qs {
            let p = Plane::with_order(q)?;
            let m = Masks::new(&p)?;
            let mut sets = Vec::new();
            all_blocking_up_to(&m, 2 * q as usize, 0, 0, 0, 0, &mut sets);
            for &s in &sets {
                let mut minimal = 0;
                let mut t = s;
                loop {
                    if m.is_minimal(t) {
                        minimal += 1;
                    }
                    if t == 0 {
                        break;
                    }
                    t = (t - 1) & s;
                }
                f.expect(minimal == 1, || format!("q={q}: {:?} has {minimal} minimal subsets", bits(s).collect::<Vec<_>>()));
            }
            total += sets.len() as u64;
        }
        Ok(f.finish(format!("{total} blocking sets checked for q in {qs:?}")))
    })
}

/// Every blocking set of at most `k_max` points, by plain subset recursion.
fn all_blocking_up_to(m: &Masks, k_max: usize, start: usize, set: u128, covered: u128, size: usize, out: &mut Vec<u128>) {
    if covered == m.all {
        out.push(set);
    }
    if size == k_max {
        return;
    }
    for p in start..m.n {
        all_blocking_up_to(m, k_max, p + 1, set | 1 << p, covered | m.pl[p], size + 1, out);
    }
}

/// Lower bounds on the number of lines missed by `S`, by suit class.
fn ms_violation(plane: &Plane, classifier: &SuitClassifier, s: &PointSet, f: &mut Findings, tally: &mut [u64; 3]) {
    let q = plane.q() as i64;
    let size = s.count() as i64;
    let missed = plane.missed_lines(s).count() as i64;
    let suit = classifier.classify(s);
    if suit.diamond {
        tally[2] += 1;
        f.expect(missed >= 2 * (2 * q - 1 - size), || format!("diamond {s:?}: |M_S| = {missed}"));
    }
    if suit.is_club() && !suit.spade {
        tally[1] += 1;
        f.expect(missed >= 2 * q - size, || format!("club {s:?}: |M_S| = {missed}"));
    }
    if suit.spade {
        tally[0] += 1;
    }
}

/// Missed-line bounds over every `S` with `|S| <= 2q-1` for the `exhaustive`
/// orders, and over `samples` random such `S` at `sampled` (if any).
pub fn missed_line_bounds(exhaustive: &[u64], sampled: Option<(u64, usize, u64)>) -> Check {
    timed("missed-line bounds by suit", || {
        let mut f = Findings::default();
        let mut parts = Vec::new();
        for &q in exhaustive {
            let p = Plane::with_order(q)?;
            let c = SuitClassifier::new(&p)?;
            let n = p.num_points();
            let mut tally = [0u64; 3];
            for s in (0u128..1 << n).filter(|s| s.count_ones() < 2 * q as u32) {
                ms_violation(&p, &c, &PointSet::from_mask(n, s), &mut f, &mut tally);
            }
            parts.push(format!("q={q} spade/club/diamond = {tally:?}"));
        }
        if let Some((q, samples, seed)) = sampled {
            let p = Plane::with_order(q)?;
            let c = SuitClassifier::new(&p)?;
            let n = p.num_points();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut tally = [0u64; 3];
            for _ in 0..samples {
                let size = rng.random_range(0..2 * q as usize);
                let s = PointSet::from_ids(n, index::sample(&mut rng, n, size));
                ms_violation(&p, &c, &s, &mut f, &mut tally);
            }
            parts.push(format!("q={q} sampled {samples} (seed {seed}) spade/club/diamond = {tally:?}"));
        }
        Ok(f.finish(parts.join("; ")))
    })
}

/// Local point partition, one-line and two-line singular densities.
pub fn density_identities(q_max: u64) -> Check {
    timed("density identities", || {
        let mut f = Findings::default();
        for q in 2..=q_max {
            let total = density::eval_split(&density::point_partition(q), q)?;
            f.expect(total == Rat::one(), || format!("q={q}: partition sums to {total}"));
            f.expect(density::theta_line(q) == rat::qpow(q, -3 * (q as i64 + 1)), || format!("q={q}: line value"));
            f.expect(density::theta_pair(q) == rat::qpow(q, -3 * (2 * q as i64 + 1)), || format!("q={q}: pair value"));
        }
        // The same values from concrete, validated supports.
        for q in [2u64, 3] {
            let p = Plane::with_order(q)?;
            let (a, b) = (p.line_points(0), p.line_points(1));
            let mut union = a.clone();
            union.union_with(&b);
            let expr = density::SplitExpr::term(
                union
                    .iter()
                    .map(|x| density::SimpleAtom::complementary(density::Support::point(), -1, 2).at(vec![x]))
                    .collect(),
            );
            expr.validate(&p)?;
            let v = density::eval_split(&expr, q)?;
            f.expect(v == density::theta_pair(q), || format!("q={q}: concrete pair value {v}"));
        }
        Ok(f.finish(format!("2 <= q <= {q_max}")))
    })
}

/// Full inclusion–exclusion value of the trivially transverse-free density.
pub fn theta_exact(qs: &[u64]) -> Check {
    timed("exact trivially transverse-free density", || {
        let mut f = Findings::default();
        let mut vals = Vec::new();
        for &q in qs {
            let p = Plane::with_order(q)?;
            let v = density::theta_exact_small_q(&p)?;
            let b = density::theta_interval(q);
            f.expect(b.contains(&v), || format!("q={q}: {v} outside [{}, {}]", b.lower.exact, b.upper.exact));
            vals.push(format!("q={q}: {} ≈ {}", rat::to_fraction_string(&v), rat::to_sci(&v, 6)));
        }
        Ok(f.finish(vals.join("; ")))
    })
}

fn prime_powers(q_max: u64) -> Vec<u64> {
    (2..=q_max).filter(|&q| prime_power(q).is_ok()).collect()
}

/// `omega_lower <= omega_upper` and `theta upper <= omega_upper`.
pub fn interval_consistency(q_max: u64) -> Check {
    timed("density interval consistency", || {
        let mut f = Findings::default();
        let qs = prime_powers(q_max);
        for &q in &qs {
            let (lo, hi) = (density::omega_lower(q), density::omega_upper(q));
            f.expect(lo <= hi, || format!("q={q}: lower above upper"));
            f.expect(density::theta_interval(q).upper.exact <= hi, || format!("q={q}: line term above upper"));
            f.expect(density::theta_interval(q).lower.exact <= lo, || format!("q={q}: line term above lower"));
        }
        Ok(f.finish(format!("{} prime powers up to {q_max}", qs.len())))
    })
}

/// `(|Ω|, |Θ|, |Υ|)` at `q = 2` for `d = 1..=5`.
pub const Q2_CURVE_GOLDENS: [(u32, u64, u64, u64); 5] =
    [(1, 1, 1, 0), (2, 8, 8, 0), (3, 50, 50, 0), (4, 2560, 848, 25), (5, 143014, 27490, 325)];

fn census_in_pool(plane: &Plane, d: u32, threads: usize) -> Result<CurveCensus> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;
    pool.install(|| curves::exact_census(&CurveSpace::new(plane, d)?, DEFAULT_EXACT_BUDGET))
}

/// Counts of `(Ω, Θ, Υ)` by profiling every form directly.
fn brute_counts(plane: &Plane, d: u32) -> (u64, u64, u64) {
    let n = crate::poly::num_monomials(d);
    let q = plane.q() as usize;
    let (mut o, mut t, mut u) = (0, 0, 0);
    for idx in 0..q.pow(n as u32) {
        let mut rest = idx;
        let coeffs = (0..n)
            .map(|_| {
                let c = (rest % q) as u32;
                rest /= q;
                c
            })
            .collect();
        let pr = curves::profile(plane, &HomPoly { d, coeffs });
        if pr.is_transverse_free {
            o += 1;
            if pr.is_trivially_tf {
                t += 1;
            }
            if pr.is_smooth_at_rational_points {
                u += 1;
            }
        }
    }
    (o, t, u)
}

/// Exact curve censuses at `q = 2` against pinned values, a direct profile
/// of every form for `d <= brute_d`, and identical reports across thread
/// counts.
pub fn curve_ground_truth(d_max: u32, brute_d: u32, threads: &[usize]) -> Check {
    timed("q=2 curve census", || {
        let p = Plane::with_order(2)?;
        let classifier = SuitClassifier::new(&p)?;
        let mut f = Findings::default();
        let mut parts = Vec::new();
        for &(d, omega, theta, upsilon) in Q2_CURVE_GOLDENS.iter().filter(|g| g.0 <= d_max) {
            let mut reports = Vec::new();
            let mut first = None;
            for &t in threads {
                let c = census_in_pool(&p, d, t)?;
                reports.push(serde_json::to_string(&c.report(&p, Some(&classifier))?).expect("serializable"));
                first.get_or_insert(c);
            }
            let c = first.expect("at least one thread count");
            let got = (c.omega(), c.theta(&p)?, c.upsilon());
            f.expect(got == (omega, theta, upsilon), || format!("d={d}: (Ω, Θ, Υ) = {got:?}"));
            f.expect(c.inconsistencies() == 0, || format!("d={d}: {} inconsistencies", c.inconsistencies()));
            f.expect(reports.windows(2).all(|w| w[0] == w[1]), || format!("d={d}: reports differ across {threads:?} threads"));
            if d <= brute_d {
                let b = brute_counts(&p, d);
                f.expect(b == got, || format!("d={d}: direct profile gives {b:?}, census {got:?}"));
            }
            parts.push(format!("d={d} |Ω|={omega}/{}", c.total()));
        }
        Ok(f.finish(parts.join(", ")))
    })
}

/// `sing_constraint_count` against the census for every `|S| <= s_max`.
pub fn sing_count_cross_check(q: u64, d: u32, s_max: u32) -> Check {
    timed("singular-constraint counts", || {
        let p = Plane::with_order(q)?;
        let space = CurveSpace::new(&p, d)?;
        let c = curves::exact_census(&space, DEFAULT_EXACT_BUDGET)?;
        let n = p.num_points();
        let mut f = Findings::default();
        let mut checked = 0;
        for s in (0u128..1 << n).filter(|s| s.count_ones() <= s_max) {
            let set = PointSet::from_mask(n, s);
            let want = curves::sing_constraint_count(&space, &set);
            let got = BigUint::from(c.sing_superset_count(&set));
            f.expect(got == want, || format!("{set:?}: census {got}, rank count {want}"));
            checked += 1;
        }
        Ok(f.finish(format!("{checked} sets at q={q}, d={d}")))
    })
}

/// Sampled frequencies of `(Ω, Θ, Υ)` within two Wilson radii of the exact
/// census fractions.
pub fn monte_carlo_agreement(cases: &[(u64, u32)], samples: u64, seed: u64) -> Check {
    timed("Monte Carlo vs exact", || {
        let mut f = Findings::default();
        let mut parts = Vec::new();
        for &(q, d) in cases {
            let p = Plane::with_order(q)?;
            let space = CurveSpace::new(&p, d)?;
            let exact = curves::exact_census(&space, DEFAULT_EXACT_BUDGET)?;
            let mc = curves::mc_census(&space, samples, seed)?;
            let n = exact.total() as f64;
            for (name, e, m) in [
                ("Ω", exact.omega(), mc.omega()),
                ("Θ", exact.theta(&p)?, mc.theta(&p)?),
                ("Υ", exact.upsilon(), mc.upsilon()),
            ] {
                let est = Estimate::new(m, samples);
                let target = e as f64 / n;
                f.expect(est.within(target, 2.0), || {
                    format!("q={q} d={d} {name}: sampled {:.3e} vs exact {target:.3e} (radius {:.1e})", est.freq, est.radius())
                });
                if name == "Ω" {
                    parts.push(format!("q={q} d={d} Ω: {:.4e} vs {target:.4e} ± {:.1e}", est.freq, est.radius()));
                }
            }
        }
        Ok(f.finish(parts.join("; ")))
    })
}

/// Leading-term ratios for every prime power up to `q_max`; a failure only
/// when the interval misses the leading term.
pub fn leading_term_ratios(q_max: u64) -> Check {
    timed("leading-term ratios", || {
        let mut f = Findings::default();
        let qs = prime_powers(q_max);
        let mut widest = (0, 0.0);
        for &q in &qs {
            let t = density::tbs1_report(q);
            f.expect(!t.flagged, || format!("q={q}: interval misses the leading term"));
            let w = rat::to_f64(&t.ratio_upper.exact) - rat::to_f64(&t.ratio_lower.exact);
            if q > 2 && w > widest.1 {
                widest = (q, w);
            }
        }
        let r2 = density::tbs1_report(2);
        Ok(f.finish(format!(
            "{} prime powers; q=2 ratios [{}, {}]; widest for q>2 at q={} ({:.3e})",
            qs.len(),
            r2.ratio_lower.decimal,
            r2.ratio_upper.decimal,
            widest.0,
            widest.1
        )))
    })
}

/// Report-only trends: the resurrected fraction against its limit and the
/// share of sub-independence rows inside two Wilson radii.
pub fn trends(q: u64, res_degrees: std::ops::RangeInclusive<u32>, sub_d: u32) -> Check {
    timed("finite-degree trends (report only)", || {
        let p = Plane::with_order(q)?;
        let pt = p.points_on(0)[0];
        let mut res = Vec::new();
        for d in res_degrees {
            let space = CurveSpace::new(&p, d)?;
            let v = curves::resurrected_fraction(&space, 0, pt)?;
            res.push(format!("d={d}:{}", rat::to_sci(&v, 4)));
        }
        let c = curves::exact_census(&CurveSpace::new(&p, sub_d)?, DEFAULT_EXACT_BUDGET)?;
        let rows = c.sub_independence(&p, 30);
        let inside = rows.iter().filter(|r| r.within_two_radii).count();
        Ok((
            Status::Pass,
            format!(
                "resurrected q={q} [{}] → {}; sub-independence d={sub_d}: {inside}/{} rows within two radii",
                res.join(" "),
                rat::to_fraction_string(&density::resurrected_density(q)),
                rows.len()
            ),
        ))
    })
}

/// Runs the suite, reporting each check as soon as it finishes.
pub fn run(level: Level, mut on_check: impl FnMut(&Check)) -> Result<Suite> {
    let full = level == Level::Full;
    let mut checks = Vec::new();
    let mut push = |c: Check| {
        on_check(&c);
        checks.push(c);
    };
    push(plane_axioms(&[2, 3, 4, 5, 7, 8, 9]));
    let tables = blocking_censuses(&[2, 3, 4])?;
    push(blocking_values(&tables));
    push(small_k_conflicts(&tables));
    push(count_bounds(&tables));
    push(affine_minimum(if full { &[2, 3, 4] } else { &[2, 3] }));
    push(unique_minimal_subsets(if full { &[2, 3, 4] } else { &[2, 3] }));
    push(missed_line_bounds(&[2, 3], full.then_some((4, 100_000, 7))));
    push(density_identities(64));
    push(theta_exact(&[2, 3]));
    push(interval_consistency(64));
    if full {
        push(curve_ground_truth(5, 4, &[1, 2, 4]));
        push(sing_count_cross_check(2, 4, 3));
        push(monte_carlo_agreement(&[(2, 5), (3, 4)], 500_000, 2024));
        push(leading_term_ratios(64));
        push(trends(2, 1..=8, 5));
    } else {
        push(curve_ground_truth(4, 3, &[1, 2]));
        push(sing_count_cross_check(2, 4, 3));
        push(monte_carlo_agreement(&[(2, 4)], 100_000, 2024));
        push(leading_term_ratios(64));
    }
    Ok(Suite { level, checks })
}
