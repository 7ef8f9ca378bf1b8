//! One PASS/FAIL line per acceptance criterion, aggregated from the suites.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use g2kit_cli::{run, RunConfig, Settings, Suite};

const CRITERIA: [(u8, &str); 10] = [
    (1, "G2 algebra suite"),
    (2, "quadratic remainder"),
    (3, "nearly Kahler solve"),
    (4, "cone structure"),
    (5, "excluded ranges"),
    (6, "order -3 / -4 kernels"),
    (7, "eigenvalue identity"),
    (8, "glue exponent fits"),
    (9, "feasibility"),
    (10, "Joyce gate"),
];

fn main() -> ExitCode {
    let start = Instant::now();
    let settings = Settings::from_config(&RunConfig::default());
    let report = match run(&Suite::ALL, &settings) {
        Ok(r) => r,
        Err(e) => {
            println!("acceptance: input error: {e:#}");
            return ExitCode::FAILURE;
        }
    };
    let mut by: BTreeMap<u8, Vec<_>> = BTreeMap::new();
    for c in &report.checks {
        by.entry(c.criterion).or_default().push(c);
    }
    let mut ok = true;
    for (n, title) in CRITERIA {
        let checks = by.remove(&n).unwrap_or_default();
        let failed: Vec<_> = checks.iter().filter(|c| !c.pass).collect();
        let pass = !checks.is_empty() && failed.is_empty();
        ok &= pass;
        println!("criterion {n:>2} {title}: {} ({} checks)", if pass { "PASS" } else { "FAIL" }, checks.len());
        for c in failed {
            println!("    FAIL {}: value {:e}, tolerance {:e}", c.name, c.value, c.tolerance);
        }
    }
    println!("acceptance finished in {:.1}s", start.elapsed().as_secs_f64());
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
