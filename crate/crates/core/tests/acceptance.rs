//! Acceptance suite: one pass/fail line per criterion.
//!
//! Runs without the libtest harness so the lines always reach the console.

use std::process::Command;
use std::time::{Duration, Instant};

use tfree::verify::{self, Check, Status};

struct Outcome {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn within(c: &Check, limit: Duration) -> bool {
    c.elapsed < limit
}

fn all_pass(checks: &[&Check]) -> (bool, String) {
    let pass = checks.iter().all(|c| c.passed());
    let detail = checks.iter().map(|c| c.line()).collect::<Vec<_>>().join("\n        ");
    (pass, detail)
}

fn plane_axioms() -> Outcome {
    let c = verify::plane_axioms(&[2, 3, 4, 5, 7, 8, 9]);
    let (pass, detail) = all_pass(&[&c]);
    Outcome { id: 1, title: "plane axioms, q in {2,3,4,5,7,8,9}, < 5 s", pass: pass && within(&c, Duration::from_secs(5)), detail }
}

fn census_criteria() -> Vec<Outcome> {
    let mut times = Vec::new();
    let mut tables = Vec::new();
    for q in [2u64, 3, 4] {
        let start = Instant::now();
        match verify::blocking_censuses(&[q]) {
            Ok(mut t) => tables.append(&mut t),
            Err(e) => {
                return vec![Outcome { id: 2, title: "blocking census", pass: false, detail: e.to_string() }];
            }
        }
        times.push((q, start.elapsed()));
    }
    let values = verify::blocking_values(&tables);
    let small_k = verify::small_k_conflicts(&tables);
    let fast = times.iter().all(|(_, t)| *t < Duration::from_secs(120));
    // The small-k comparison is reported, never asserted: a conflict is a finding.
    let reported = matches!(small_k.status, Status::Pass | Status::Conflict);
    let (pass, mut detail) = all_pass(&[&values]);
    detail.push_str(&format!("\n        {}\n        census times {times:?}", small_k.line()));
    let bounds = verify::count_bounds(&tables);
    let (bpass, bdetail) = all_pass(&[&bounds]);
    vec![
        Outcome { id: 2, title: "minimal blocking counts for q = 2, 3, 4", pass: pass && reported && fast, detail },
        Outcome { id: 3, title: "B_k <= f(k), B_k < (eq/2)^(2k-2q), B_(q+1) = f(q+1)", pass: bpass, detail: bdetail },
    ]
}

fn affine_minimum() -> Outcome {
    let c = verify::affine_minimum(&[2, 3, 4]);
    let (pass, detail) = all_pass(&[&c]);
    Outcome { id: 4, title: "affine blocking minimum 2q-1, q = 2, 3, 4, < 1 min", pass: pass && within(&c, Duration::from_secs(60)), detail }
}

fn unique_minimal() -> Outcome {
    let c = verify::unique_minimal_subsets(&[2, 3, 4]);
    let (pass, detail) = all_pass(&[&c]);
    Outcome { id: 5, title: "unique minimal subset of blocking sets with |S| <= 2q, q <= 4", pass, detail }
}

fn missed_lines() -> Outcome {
    let c = verify::missed_line_bounds(&[2, 3], Some((4, 100_000, 7)));
    let (pass, detail) = all_pass(&[&c]);
    Outcome { id: 6, title: "missed-line bounds by suit (q = 2, 3 exhaustive; q = 4 sampled)", pass, detail }
}

fn densities() -> Outcome {
    let c = verify::density_identities(64);
    let (pass, detail) = all_pass(&[&c]);
    Outcome { id: 7, title: "point partition and line/pair singular densities, q <= 64", pass, detail }
}

fn theta_exact() -> Outcome {
    let c = verify::theta_exact(&[2, 3]);
    let (pass, detail) = all_pass(&[&c]);
    Outcome { id: 8, title: "exact trivially transverse-free density inside its interval, < 30 s", pass: pass && within(&c, Duration::from_secs(30)), detail }
}

fn intervals() -> Outcome {
    let c = verify::interval_consistency(64);
    let (pass, detail) = all_pass(&[&c]);
    Outcome { id: 9, title: "omega_lower <= omega_upper and line term <= omega_upper, q <= 64", pass, detail }
}

fn curve_census() -> Outcome {
    let truth = verify::curve_ground_truth(5, 4, &[1, 2, 4]);
    let cross = verify::sing_count_cross_check(2, 4, 3);
    let (pass, detail) = all_pass(&[&truth, &cross]);
    // Three full passes over d = 1..5 fit in the d = 5 limit of two minutes.
    Outcome { id: 10, title: "q = 2 curve census goldens, thread invariance, rank cross-check", pass: pass && within(&truth, Duration::from_secs(120)), detail }
}

fn sampled_and_trends() -> Outcome {
    let mc = verify::monte_carlo_agreement(&[(2, 5), (3, 4)], 500_000, 2024);
    let ratios = verify::leading_term_ratios(64);
    let trends = verify::trends(2, 1..=8, 5);
    let (pass, detail) = all_pass(&[&mc, &ratios, &trends]);
    Outcome { id: 11, title: "Monte Carlo within 2 Wilson radii; leading-term ratios and trends emitted", pass, detail }
}

fn full_verify() -> Outcome {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_tfree")).args(["verify", "full"]).output();
    let elapsed = start.elapsed();
    let out = match out {
        Ok(o) => o,
        Err(e) => return Outcome { id: 12, title: "verify full", pass: false, detail: e.to_string() },
    };
    let stdout = String::from_utf8_lossy(&out.stdout);
    let code = out.status.code();
    let failures = stdout.lines().filter(|l| l.starts_with("FAIL")).count();
    let conflicts: Vec<&str> = stdout.lines().filter(|l| l.starts_with("CONFLICT")).collect();
    // Exit 0, or exit 2 when the only findings are conflicts.
    let pass = failures == 0
        && elapsed < Duration::from_secs(15 * 60)
        && match code {
            Some(0) => conflicts.is_empty(),
            Some(2) => !conflicts.is_empty(),
            _ => false,
        };
    let detail = format!(
        "exit {code:?} in {:.1} s, {failures} failures, {} conflicts{}",
        elapsed.as_secs_f64(),
        conflicts.len(),
        conflicts.iter().map(|c| format!("\n        {c}")).collect::<String>()
    );
    Outcome { id: 12, title: "verify full exits 0, or 2 with only conflicts", pass, detail }
}

fn main() {
    // Let `cargo test -- <filter>` skip this suite unless it is asked for.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }
    let mut outcomes = vec![plane_axioms()];
    outcomes.extend(census_criteria());
    outcomes.extend([
        affine_minimum(),
        unique_minimal(),
        missed_lines(),
        densities(),
        theta_exact(),
        intervals(),
        curve_census(),
        sampled_and_trends(),
        full_verify(),
    ]);
    outcomes.sort_by_key(|o| o.id);
    println!();
    for o in &outcomes {
        println!("criterion {:>2}: {} - {}", o.id, if o.pass { "PASS" } else { "FAIL" }, o.title);
        println!("        {}", o.detail);
    }
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    println!("\nacceptance: {} of {} criteria pass", outcomes.len() - failed.len(), outcomes.len());
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
