//! QBF solving: a search solver with clause and cube learning, an
//! expansion-based solver, and the reduction and resolution rules they share.

mod expansion;
mod rules;
mod search;
pub mod trace;

use std::fmt;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use expansion::solve_expansion;
pub use rules::{existential_reduce, qresolve, term_resolve, universal_reduce, ResolveError};
pub use search::{solve_search, Propagation, SearchConfig, SearchSolver, SearchStats};
pub use trace::{Proof, ProofKind, StepKind, TraceStep};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "SAT")]
    Sat,
    #[serde(rename = "UNSAT")]
    Unsat,
    #[serde(rename = "UNKNOWN")]
    Unknown,
}

impl Status {
    /// SAT-solver exit code convention.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Sat => 10,
            Status::Unsat => 20,
            Status::Unknown => 0,
        }
    }

    pub fn from_exit_code(code: i32) -> Status {
        match code {
            10 => Status::Sat,
            20 => Status::Unsat,
            _ => Status::Unknown,
        }
    }

    pub fn is_solved(self) -> bool {
        self != Status::Unknown
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Sat => "SAT",
            Status::Unsat => "UNSAT",
            Status::Unknown => "UNKNOWN",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnknownReason {
    Timeout,
    Memout,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub status: Status,
    pub wall_time: f64,
    pub reason_for_unknown: UnknownReason,
}

impl SolveOutcome {
    pub fn solved(status: Status, started: Instant) -> SolveOutcome {
        debug_assert!(status.is_solved());
        SolveOutcome { status, wall_time: started.elapsed().as_secs_f64(), reason_for_unknown: UnknownReason::None }
    }

    pub fn unknown(reason: UnknownReason, started: Instant) -> SolveOutcome {
        debug_assert!(reason != UnknownReason::None);
        SolveOutcome { status: Status::Unknown, wall_time: started.elapsed().as_secs_f64(), reason_for_unknown: reason }
    }
}

/// Resource budget for one solver call. `None` means unlimited.
#[derive(Clone, Copy, Debug, Default)]
pub struct Limits {
    pub time: Option<Duration>,
    /// Approximate bytes held by learned constraints, expansion copies or trace steps.
    pub memory: Option<usize>,
}

impl Limits {
    pub fn time(secs: f64) -> Limits {
        Limits { time: Some(Duration::from_secs_f64(secs)), memory: None }
    }

    pub(crate) fn deadline(&self, started: Instant) -> Option<Instant> {
        self.time.map(|t| started + t)
    }
}
