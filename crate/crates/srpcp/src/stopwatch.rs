use std::time::{Duration, Instant};

use srpcp_core::solver::{IterationReport, Monitor};

/// Wall-clock monitor; optionally prints one line per iteration to stderr.
#[derive(Debug, Clone)]
pub struct Stopwatch {
    start: Instant,
    verbose: bool,
}

impl Stopwatch {
    pub fn start(verbose: bool) -> Self {
        Stopwatch {
            start: Instant::now(),
            verbose,
        }
    }
}

impl Monitor for Stopwatch {
    fn elapsed(&self) -> Option<Duration> {
        Some(self.start.elapsed())
    }

    fn on_iteration(&mut self, report: &IterationReport<'_>) {
        if self.verbose {
            let eta = report.residual.map_or(String::from("-"), |r| format!("{:.3e}", r.eta));
            eprintln!(
                "iter {:>5}  obj {:.10e}  rank {:>5}  eta {eta}  [{:.1?}]",
                report.iteration,
                report.objective_after_l,
                report.rank,
                self.start.elapsed()
            );
        }
    }
}
