//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::time::Instant;

use activerods::acceptance::*;

fn main() {
    // `cargo test -- <filter>` passes extra arguments; a numeric filter
    // selects criteria by id.
    let ids: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |id: u8| ids.is_empty() || ids.contains(&id);
    let start = Instant::now();
    let mut reports = Vec::new();
    let mut record = |r: CriterionReport| {
        println!("{} [{:.1}s]", r.line(), start.elapsed().as_secs_f64());
        reports.push(r);
    };

    let simple: [(u8, fn() -> CriterionReport); 5] =
        [(1, criterion_01), (2, criterion_02), (3, criterion_03), (4, criterion_04), (5, criterion_05)];
    for (id, f) in simple {
        if want(id) {
            record(f());
        }
    }
    if want(6) || want(7) {
        let rows = reference_sweep();
        if want(6) {
            record(criterion_06(&rows));
        }
        if want(7) {
            record(criterion_07(&rows));
        }
    }
    if want(8) || want(9) {
        let (c8, c9) = criterion_08_09();
        if want(8) {
            record(c8);
        }
        if want(9) {
            record(c9);
        }
    }
    let rest: [(u8, fn() -> CriterionReport); 5] = [
        (10, || criterion_10(&no_diffusion_sweep())),
        (11, criterion_11),
        (12, criterion_12),
        (13, criterion_13),
        (14, criterion_14),
    ];
    for (id, f) in rest {
        if want(id) {
            record(f());
        }
    }

    let failed: Vec<u8> = reports.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!("acceptance: {} passed, {} failed", reports.len() - failed.len(), failed.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
