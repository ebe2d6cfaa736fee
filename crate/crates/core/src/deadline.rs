use std::time::{Duration, Instant};

use crate::error::Timeout;

/// Optional wall-clock limit shared by the rewriter and the linear solver.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Deadline(Option<Instant>);

impl Deadline {
    pub fn none() -> Self {
        Deadline(None)
    }

    pub fn after(d: Duration) -> Self {
        Deadline(Some(Instant::now() + d))
    }

    pub fn at(t: Instant) -> Self {
        Deadline(Some(t))
    }

    pub fn from_millis(ms: Option<u64>) -> Self {
        match ms {
            Some(ms) => Deadline::after(Duration::from_millis(ms)),
            None => Deadline::none(),
        }
    }

    pub fn check(&self) -> Result<(), Timeout> {
        match self.0 {
            Some(t) if Instant::now() >= t => Err(Timeout),
            _ => Ok(()),
        }
    }
}
