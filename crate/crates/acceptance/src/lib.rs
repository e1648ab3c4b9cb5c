//! Runs named checks, reporting one line each, and keeps going past
//! failures.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

pub struct Outcome {
    pub id: u32,
    pub ok: bool,
    pub line: String,
}

/// Runs `check`, turning a panic or an `Err` into a failed line.
pub fn run(id: u32, title: &str, check: impl FnOnce() -> Result<String, String>) -> Outcome {
    let t = Instant::now();
    let r = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
        let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    });
    let secs = t.elapsed().as_secs_f64();
    let (ok, detail) = match r {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    let line = format!("criterion {id}: {} {title} [{secs:.2} s] {detail}", if ok { "PASS" } else { "FAIL" });
    println!("{line}");
    Outcome { id, ok, line }
}

/// Prints a summary and returns the process exit status.
pub fn summary(outcomes: &[Outcome]) -> i32 {
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.ok).map(|o| o.id).collect();
    if failed.is_empty() {
        println!("acceptance: {} of {} criteria passed", outcomes.len(), outcomes.len());
        0
    } else {
        println!("acceptance: failed criteria {failed:?}");
        1
    }
}
