//! The full acceptance suite. Prints one line per criterion, then fails if
//! any criterion failed or overran its wall-clock budget.

use std::process::Command;
use std::time::Instant;

use penfbm::acceptance::{run_criterion, runtime_budget, Profile, CRITERIA};
use penfbm::Seed;

const SEED: u64 = 20240611;

/// Runs `accept --profile quick` twice, on one and two threads, and compares
/// the report bytes.
fn reproducibility() -> (bool, String) {
    let dir = tempfile::tempdir().expect("temp dir");
    let run = |threads: &str, sub: &str| -> Vec<u8> {
        let out = dir.path().join(sub);
        let status = Command::new(env!("CARGO_BIN_EXE_penfbm"))
            .args(["--threads", threads, "accept", "--profile", "quick", "--seed"])
            .arg(SEED.to_string())
            .arg("--out")
            .arg(&out)
            .output()
            .expect("run penfbm accept");
        assert!(
            matches!(status.status.code(), Some(0) | Some(1)),
            "accept exited with {:?}: {}",
            status.status.code(),
            String::from_utf8_lossy(&status.stderr)
        );
        std::fs::read(out.join("report.json")).expect("report.json")
    };
    let a = run("1", "one");
    let b = run("2", "two");
    let same = a == b && !a.is_empty();
    (same, format!("{} and {} bytes", a.len(), b.len()))
}

#[test]
fn acceptance_criteria() {
    let seed = Seed::new(SEED);
    let mut failures = Vec::new();
    for id in CRITERIA {
        let start = Instant::now();
        let result = run_criterion(id, Profile::Full, seed).expect("criterion runs");
        let elapsed = start.elapsed();
        let over_budget = runtime_budget(id).is_some_and(|b| elapsed > b);
        let mut line = result.summary_line();
        line.push_str(&format!(" [{:.1}s", elapsed.as_secs_f64()));
        if let Some(b) = runtime_budget(id) {
            line.push_str(&format!(" of {}s budget", b.as_secs()));
        }
        line.push(']');
        if over_budget {
            line.push_str(" OVER BUDGET");
        }
        println!("{line}");
        for (k, v) in &result.metrics {
            println!("    {k} = {v}");
        }
        if !result.pass || over_budget {
            failures.push(id);
        }
    }

    let start = Instant::now();
    let (same, detail) = reproducibility();
    println!(
        "criterion 11 [reproducibility] {} (reports {detail}) [{:.1}s]",
        if same { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    if !same {
        failures.push(11);
    }

    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
