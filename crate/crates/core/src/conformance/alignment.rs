use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::discovery::{Marking, PetriNet, DEFAULT_STATE_CAP};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Move {
    Sync { activity: String, transition: usize },
    Log { activity: String },
    Model { activity: String, transition: usize },
    Silent { transition: usize },
}

impl Move {
    pub fn cost(&self) -> u32 {
        match self {
            Move::Sync { .. } | Move::Silent { .. } => 0,
            Move::Log { .. } | Move::Model { .. } => 1,
        }
    }

    pub fn transition(&self) -> Option<usize> {
        match self {
            Move::Sync { transition, .. } | Move::Model { transition, .. } | Move::Silent { transition } => {
                Some(*transition)
            }
            Move::Log { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    pub moves: Vec<Move>,
    pub cost: u32,
}

impl Alignment {
    /// Log-side projection (log and synchronous moves).
    pub fn log_projection(&self) -> Vec<&str> {
        self.moves
            .iter()
            .filter_map(|m| match m {
                Move::Sync { activity, .. } | Move::Log { activity } => Some(activity.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Visible model-side projection (model and synchronous moves).
    pub fn model_projection(&self) -> Vec<&str> {
        self.moves
            .iter()
            .filter_map(|m| match m {
                Move::Sync { activity, .. } | Move::Model { activity, .. } => Some(activity.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Transitions fired on the model side, in order.
    pub fn firing_sequence(&self) -> Vec<usize> {
        self.moves.iter().filter_map(Move::transition).collect()
    }
}

struct Node {
    marking: Marking,
    pos: usize,
    parent: usize,
    mv: Option<Move>,
}

/// Optimal alignment with unit costs for log and visible model moves.
pub fn align<S: AsRef<str>>(trace: &[S], net: &PetriNet) -> Result<Alignment> {
    align_capped(trace, net, DEFAULT_STATE_CAP)
}

/// Dijkstra over (marking, trace position). Successors are generated in the
/// fixed order sync, log, model, silent (transitions by index), and equal-cost
/// states are expanded in insertion order, so results are deterministic.
pub fn align_capped<S: AsRef<str>>(trace: &[S], net: &PetriNet, cap: usize) -> Result<Alignment> {
    let trace: Vec<&str> = trace.iter().map(AsRef::as_ref).collect();
    let mut nodes: Vec<Node> = vec![Node {
        marking: net.initial.clone(),
        pos: 0,
        parent: usize::MAX,
        mv: None,
    }];
    let mut best: HashMap<(Marking, usize), u32> = HashMap::new();
    best.insert((net.initial.clone(), 0), 0);
    let mut heap = BinaryHeap::from([Reverse((0u32, 0usize))]);
    let mut closed: std::collections::HashSet<(Marking, usize)> = Default::default();

    while let Some(Reverse((cost, id))) = heap.pop() {
        let (marking, pos) = (nodes[id].marking.clone(), nodes[id].pos);
        if !closed.insert((marking.clone(), pos)) {
            continue;
        }
        if pos == trace.len() && marking == net.final_marking {
            let mut moves = Vec::new();
            let mut cur = id;
            while cur != 0 {
                moves.push(nodes[cur].mv.clone().expect("non-root node has a move"));
                cur = nodes[cur].parent;
            }
            moves.reverse();
            return Ok(Alignment { moves, cost });
        }
        let mut succ: Vec<(Marking, usize, Move)> = Vec::new();
        let enabled: Vec<usize> = net.enabled(&marking).collect();
        if pos < trace.len() {
            for &t in &enabled {
                if net.transitions[t].label.as_deref() == Some(trace[pos]) {
                    succ.push((
                        net.fire(t, &marking)?,
                        pos + 1,
                        Move::Sync {
                            activity: trace[pos].to_string(),
                            transition: t,
                        },
                    ));
                }
            }
            succ.push((
                marking.clone(),
                pos + 1,
                Move::Log {
                    activity: trace[pos].to_string(),
                },
            ));
        }
        for &t in &enabled {
            if let Some(l) = &net.transitions[t].label {
                succ.push((
                    net.fire(t, &marking)?,
                    pos,
                    Move::Model {
                        activity: l.clone(),
                        transition: t,
                    },
                ));
            }
        }
        for &t in &enabled {
            if net.transitions[t].is_silent() {
                succ.push((net.fire(t, &marking)?, pos, Move::Silent { transition: t }));
            }
        }
        for (m, p, mv) in succ {
            let c = cost + mv.cost();
            let key = (m, p);
            if closed.contains(&key) || best.get(&key).is_some_and(|&b| b <= c) {
                continue;
            }
            best.insert(key.clone(), c);
            if best.len() > cap {
                return Err(Error::StateSpace { cap });
            }
            nodes.push(Node {
                marking: key.0,
                pos: key.1,
                parent: id,
                mv: Some(mv),
            });
            heap.push(Reverse((c, nodes.len() - 1)));
        }
    }
    Err(Error::InvalidInput("final marking is unreachable; no alignment exists".into()))
}
