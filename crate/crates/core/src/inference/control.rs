use std::time::{Duration, Instant};

/// Why a solver stopped without a labelling.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("time budget exhausted")]
    Timeout,
    #[error("incompatible model: {0}")]
    Incompatible(String),
    #[error("{0}")]
    Refused(String),
}

/// Cooperative deadline plus a deterministic work counter.
///
/// Solvers call [`Control::tick`] with the number of table entries they
/// touched and [`Control::check`] once per sweep or iteration.
#[derive(Debug, Clone)]
pub struct Control {
    deadline: Option<Instant>,
    work: u64,
}

impl Control {
    pub fn unlimited() -> Self {
        Control { deadline: None, work: 0 }
    }

    pub fn with_budget(seconds: f64) -> Self {
        let deadline = Duration::try_from_secs_f64(seconds).ok().and_then(|d| Instant::now().checked_add(d));
        Control { deadline: deadline.or_else(|| Some(Instant::now())), work: 0 }
    }

    #[inline]
    pub fn tick(&mut self, n: usize) {
        self.work = self.work.saturating_add(n as u64);
    }

    pub fn work(&self) -> u64 {
        self.work
    }

    pub fn check(&self) -> Result<(), SolveError> {
        match self.deadline {
            Some(d) if Instant::now() >= d => Err(SolveError::Timeout),
            _ => Ok(()),
        }
    }
}

impl Default for Control {
    fn default() -> Self {
        Self::unlimited()
    }
}
