//! Runs every acceptance criterion at full scale and prints one line each.
//! Exits nonzero if any criterion fails or runs past its time budget.

use mahlerlab::verify::{self, Check, Config, Scale, Status};
use std::process::ExitCode;

type Criterion = fn(Config) -> Check;

/// Criteria with their wall-clock budgets in seconds.
const CRITERIA: &[(Criterion, Option<f64>)] = &[
    (verify::criterion_01, Some(1.0)),
    (verify::criterion_02, Some(10.0)),
    (verify::criterion_03, Some(300.0)),
    (verify::criterion_04, Some(30.0)),
    (verify::criterion_05, None),
    (verify::criterion_06, None),
    (verify::criterion_07, None),
    (verify::criterion_08, None),
    (verify::criterion_09, None),
    (verify::criterion_10, Some(900.0)),
    (verify::criterion_11, None),
    (verify::criterion_12, Some(120.0)),
    (verify::criterion_13, None),
    (verify::criterion_14, None),
];

const FINDINGS: &[Criterion] = &[
    verify::finding_01,
    verify::finding_02,
    verify::finding_03,
    verify::finding_04,
];

fn details(c: &Check) {
    for p in &c.parts {
        let mark = if p.tolerance.is_nan() {
            "  "
        } else if p.pass {
            "ok"
        } else {
            "!!"
        };
        println!(
            "      {mark} {:<48} {:>12.4e}  tol {:>9.2e}",
            p.name, p.residual, p.tolerance
        );
    }
    if !c.detail.is_empty() {
        println!("      {}", c.detail);
    }
}

fn main() -> ExitCode {
    let cfg = Config {
        seed: 0,
        scale: Scale::Full,
        tol_override: None,
    };
    let mut failed = Vec::new();
    println!("acceptance criteria (seed 0, full scale)");
    for (f, limit) in CRITERIA {
        let c = f(cfg);
        let slow = limit.is_some_and(|l| c.runtime > l);
        let ok = c.status == Status::Pass && !slow;
        let budget = limit.map_or("-".to_string(), |l| format!("{l:.0}s"));
        println!(
            "{} {} {:<40} residual {:>10.3e}  tol {:>9.2e}  time {:>7.2}s / {budget}",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.anchor,
            c.residual,
            c.tolerance,
            c.runtime,
        );
        if !ok {
            details(&c);
            if slow {
                println!("      over time budget");
            }
            failed.push(c.id.clone());
        }
    }
    println!("\nfindings");
    for f in FINDINGS {
        let c = f(cfg);
        println!("{} {} {} ({:.2}s)", c.status, c.id, c.anchor, c.runtime);
        details(&c);
    }
    if failed.is_empty() {
        println!("\nall 14 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("\nfailed: {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
