use std::fmt;

use serde::{Deserialize, Serialize};

/// Block-structured process model.
///
/// For `Loop`, the first child is the do-part and every further child is an
/// alternative redo-part.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessTree {
    Silent,
    Activity(String),
    Sequence(Vec<ProcessTree>),
    Xor(Vec<ProcessTree>),
    Parallel(Vec<ProcessTree>),
    Loop(Vec<ProcessTree>),
}

impl ProcessTree {
    pub fn activity(a: impl Into<String>) -> Self {
        ProcessTree::Activity(a.into())
    }

    pub fn sequence(children: Vec<ProcessTree>) -> Self {
        Self::flattened(children, ProcessTree::Sequence, |t| match t {
            ProcessTree::Sequence(c) => Ok(c),
            other => Err(other),
        })
    }

    pub fn xor(children: Vec<ProcessTree>) -> Self {
        Self::flattened(children, ProcessTree::Xor, |t| match t {
            ProcessTree::Xor(c) => Ok(c),
            other => Err(other),
        })
    }

    pub fn parallel(children: Vec<ProcessTree>) -> Self {
        Self::flattened(children, ProcessTree::Parallel, |t| match t {
            ProcessTree::Parallel(c) => Ok(c),
            other => Err(other),
        })
    }

    /// `loop(body, redo...)`; with no redo part a silent one is added.
    pub fn looping(body: ProcessTree, redo: Vec<ProcessTree>) -> Self {
        let mut children = vec![body];
        if redo.is_empty() {
            children.push(ProcessTree::Silent);
        } else {
            children.extend(redo);
        }
        ProcessTree::Loop(children)
    }

    fn flattened(
        children: Vec<ProcessTree>,
        make: fn(Vec<ProcessTree>) -> ProcessTree,
        split: fn(ProcessTree) -> std::result::Result<Vec<ProcessTree>, ProcessTree>,
    ) -> Self {
        let mut out = Vec::with_capacity(children.len());
        for c in children {
            match split(c) {
                Ok(inner) => out.extend(inner),
                Err(c) => out.push(c),
            }
        }
        if out.len() == 1 {
            out.pop().unwrap()
        } else {
            make(out)
        }
    }

    pub fn children(&self) -> &[ProcessTree] {
        match self {
            ProcessTree::Silent | ProcessTree::Activity(_) => &[],
            ProcessTree::Sequence(c) | ProcessTree::Xor(c) | ProcessTree::Parallel(c) | ProcessTree::Loop(c) => c,
        }
    }

    /// Whether operator arities hold throughout the tree.
    pub fn is_valid(&self) -> bool {
        match self {
            ProcessTree::Silent | ProcessTree::Activity(_) => true,
            _ => self.children().len() >= 2 && self.children().iter().all(ProcessTree::is_valid),
        }
    }

    /// Visible activities, sorted and deduplicated.
    pub fn activities(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect(&self, out: &mut Vec<String>) {
        match self {
            ProcessTree::Activity(a) => out.push(a.clone()),
            _ => self.children().iter().for_each(|c| c.collect(out)),
        }
    }
}

impl fmt::Display for ProcessTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self {
            ProcessTree::Silent => return f.write_str("tau"),
            ProcessTree::Activity(a) => return f.write_str(a),
            ProcessTree::Sequence(_) => "seq",
            ProcessTree::Xor(_) => "xor",
            ProcessTree::Parallel(_) => "and",
            ProcessTree::Loop(_) => "loop",
        };
        write!(f, "{op}(")?;
        for (i, c) in self.children().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}
