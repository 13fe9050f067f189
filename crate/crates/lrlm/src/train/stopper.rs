/// Whether training should go on after an evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Stop,
}

/// Tracks the best validation metric and stops after `patience` consecutive
/// evaluations without improvement. The first evaluation always improves on
/// the initial negative infinity, so trainers feed the untrained model's
/// metric first to establish the baseline.
#[derive(Debug, Clone)]
pub struct EarlyStopper {
    best: f64,
    since_improvement: usize,
    patience: usize,
    improved_last: bool,
}

impl EarlyStopper {
    pub fn new(patience: usize) -> EarlyStopper {
        assert!(patience > 0, "patience must be positive");
        EarlyStopper {
            best: f64::NEG_INFINITY,
            since_improvement: 0,
            patience,
            improved_last: false,
        }
    }

    /// Records one evaluation. Strict improvement resets the counter;
    /// otherwise it increments, and the decision flips to Stop exactly when
    /// the counter reaches the patience.
    pub fn check(&mut self, metric: f64) -> StopDecision {
        if metric > self.best {
            self.best = metric;
            self.since_improvement = 0;
            self.improved_last = true;
            return StopDecision::Continue;
        }
        self.improved_last = false;
        self.since_improvement += 1;
        if self.since_improvement >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }

    /// Whether the most recent `check` improved on the best metric.
    pub fn improved(&self) -> bool {
        self.improved_last
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn since_improvement(&self) -> usize {
        self.since_improvement
    }
}
