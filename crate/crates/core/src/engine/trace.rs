use serde::{Deserialize, Serialize};

/// One committed iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Index of the iterate produced by this step (the first step yields `k = 1`).
    pub k: usize,
    pub objective: f64,
    /// Wall-clock seconds since solve entry.
    pub seconds: f64,
    pub mu: f64,
    pub sigma: f64,
    pub inner_iterations: usize,
    /// `||X^k - X^{k-1}||_F`.
    pub dx: f64,
    /// `||Y^k - Y^{k-1}||_F`.
    pub dy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// Relative objective change stayed below tolerance for the required run.
    ObjectiveStalled,
    /// Relative successive change fell below tolerance.
    SmallChange,
    MaxIterations,
    MaxSeconds,
}

/// Runtime checks of the convergence theory, accumulated over a solve.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Accepted steps whose objective decrease missed the sufficient-descent
    /// bound by more than the slack.
    pub descent_violations: usize,
    /// Largest observed `lhs - rhs` of the sufficient-descent inequality.
    pub worst_descent_gap: f64,
    /// Line searches that exceeded the inner-iteration cap.
    pub cap_violations: usize,
    pub forced_accepts: usize,
    /// Times the windowed maximum objective went up.
    pub window_increases: usize,
    pub max_inner_iterations: usize,
    pub total_inner_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub initial_objective: f64,
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    pub diagnostics: Diagnostics,
}

impl Trace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn final_objective(&self) -> f64 {
        self.records
            .last()
            .map_or(self.initial_objective, |r| r.objective)
    }

    pub fn elapsed(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.seconds)
    }

    /// `(T(k), F^k)` pairs starting with `(0, F^0)`.
    pub fn time_objective(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        std::iter::once((0.0, self.initial_objective))
            .chain(self.records.iter().map(|r| (r.seconds, r.objective)))
    }

    /// Plot-ready CSV with a `k = 0` row for the starting point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,objective,seconds,mu,sigma,inner_iters,dx,dy\n");
        out.push_str(&format!("0,{:e},0,0,0,0,0,0\n", self.initial_objective));
        for r in &self.records {
            out.push_str(&format!(
                "{},{:e},{:.6},{:e},{:e},{},{:e},{:e}\n",
                r.k, r.objective, r.seconds, r.mu, r.sigma, r.inner_iterations, r.dx, r.dy
            ));
        }
        out
    }
}
