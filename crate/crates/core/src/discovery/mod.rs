//! Process-model discovery: an inductive miner producing process trees, their
//! translation into workflow nets, and PNML/DOT interchange.

mod inductive;
mod petri;
mod pnml;
mod tree;

pub use inductive::discover;
pub use petri::{
    language, language_capped, to_petri_net, Marking, PetriNet, Place, Transition, DEFAULT_STATE_CAP,
};
pub use pnml::{parse_pnml, read_pnml, to_dot, to_pnml, write_pnml};
pub use tree::ProcessTree;

use crate::error::Result;
use crate::event_log::EventLog;

pub const DEFAULT_THRESHOLD: f64 = 0.2;

/// Anything that turns a log into a workflow net.
pub trait Discoverer: Send + Sync {
    fn name(&self) -> &str;
    fn discover(&self, log: &EventLog) -> Result<PetriNet>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InductiveMiner {
    pub threshold: f64,
}

impl Default for InductiveMiner {
    fn default() -> Self {
        InductiveMiner {
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl Discoverer for InductiveMiner {
    fn name(&self) -> &str {
        "imf"
    }

    fn discover(&self, log: &EventLog) -> Result<PetriNet> {
        to_petri_net(&discover(log, self.threshold)?)
    }
}

/// A fixed, externally produced net (e.g. loaded from PNML), returned for
/// every log.
#[derive(Debug, Clone)]
pub struct ImportedNet {
    pub name: String,
    pub net: PetriNet,
}

impl Discoverer for ImportedNet {
    fn name(&self) -> &str {
        &self.name
    }

    fn discover(&self, _log: &EventLog) -> Result<PetriNet> {
        Ok(self.net.clone())
    }
}
