//! Reporting harness for the acceptance suite: one line per criterion with
//! its verdict, measurements and wall time.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

/// Measurements gathered while a criterion runs.
#[derive(Debug, Default)]
pub struct Evidence {
    failures: Vec<String>,
    facts: Vec<String>,
    notes: Vec<String>,
}

impl Evidence {
    /// Records a requirement; a false `ok` fails the criterion.
    pub fn require(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if !ok {
            self.failures.push(what.clone());
        }
        self.facts.push(what);
    }

    /// Requires `elapsed` to stay under `budget`.
    pub fn within(&mut self, elapsed: Duration, budget: Duration, what: &str) {
        self.require(
            elapsed <= budget,
            format!("{what} {:.2} s (budget {:.0} s)", elapsed.as_secs_f64(), budget.as_secs_f64()),
        );
    }

    /// Adds a diagnostic line that does not affect the verdict.
    pub fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }
}

#[derive(Debug)]
pub struct Verdict {
    pub id: usize,
    pub title: &'static str,
    pub passed: bool,
    pub elapsed: Duration,
}

#[derive(Debug, Default)]
pub struct Suite {
    verdicts: Vec<Verdict>,
}

impl Suite {
    pub fn new() -> Self {
        Self::default()
    }

    /// Runs one criterion and prints its verdict immediately. A panic counts
    /// as a failure.
    pub fn criterion(&mut self, id: usize, title: &'static str, body: impl FnOnce(&mut Evidence)) {
        let start = Instant::now();
        let mut ev = Evidence::default();
        let outcome = catch_unwind(AssertUnwindSafe(|| body(&mut ev)));
        let elapsed = start.elapsed();
        if let Err(payload) = outcome {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            ev.failures.push(format!("aborted: {msg}"));
        }
        let passed = ev.failures.is_empty();
        println!(
            "criterion {id:>2} {} {title} ({:.2} s)",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
        for f in &ev.facts {
            let mark = if ev.failures.contains(f) { "x" } else { "-" };
            println!("    {mark} {f}");
        }
        for f in ev.failures.iter().filter(|f| !ev.facts.contains(f)) {
            println!("    x {f}");
        }
        for n in &ev.notes {
            println!("    info: {n}");
        }
        self.verdicts.push(Verdict { id, title, passed, elapsed });
    }

    pub fn verdicts(&self) -> &[Verdict] {
        &self.verdicts
    }

    /// Prints the tally and returns the process exit status.
    pub fn finish(&self) -> i32 {
        let passed = self.verdicts.iter().filter(|v| v.passed).count();
        println!("acceptance: {passed}/{} criteria passed", self.verdicts.len());
        for v in self.verdicts.iter().filter(|v| !v.passed) {
            println!("    failed: criterion {} {}", v.id, v.title);
        }
        i32::from(passed != self.verdicts.len())
    }
}
