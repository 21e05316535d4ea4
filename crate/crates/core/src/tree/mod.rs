//! The search tree rebuilt from engine messages, its layouts and exports.
//!
//! Undone nodes stay in the tree as `Retracted`; only `<clear>` removes
//! nodes. Node 0 is a synthetic root that every top-level call hangs off.

mod export;
mod layout;

use std::collections::HashMap;

use thiserror::Error;

use crate::protocol::{EngineMessage, WireId};
use crate::session::EventSink;

pub use export::{export, export_with, ExportError, ExportOptions, Format, LayoutKind};
pub use layout::{
    layout_alt3d, layout_alt3d_with, layout_fixed_width, layout_fixed_width_with,
    layout_leaf_spacing, treemap_project, Alt3d, FixedWidth, LayoutPoint, LayoutRect, LeafSpacing,
    NotRightmost, Split,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Call,
    Success,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeStatus {
    Active,
    Retracted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub id: WireId,
    pub parent: WireId,
    pub kind: NodeKind,
    pub label: String,
    pub status: NodeStatus,
    pub solution: bool,
    pub depth: usize,
    children: Vec<usize>,
}

/// The event stream does not describe a tree.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("node {id} names unknown parent {parent}")]
    UnknownParent { id: WireId, parent: WireId },
    #[error("node id {id} does not increase past {last}")]
    NonIncreasingId { id: WireId, last: WireId },
    #[error("undo of unknown node {0}")]
    UnknownNode(WireId),
    #[error("node {0} is already retracted")]
    AlreadyRetracted(WireId),
    #[error("undo of {id} whose kind does not match the frame")]
    KindMismatch { id: WireId },
    #[error("success with no active success node at the tip")]
    NoSuccessTip,
}

#[derive(Debug, Clone)]
pub struct SearchTree {
    /// Index 0 is the synthetic root; indices follow creation order.
    nodes: Vec<TreeNode>,
    index: HashMap<WireId, usize>,
    /// Active nodes from the root down to the tip.
    path: Vec<usize>,
    last_id: WireId,
}

impl Default for SearchTree {
    fn default() -> Self {
        SearchTree::new()
    }
}

fn root() -> TreeNode {
    TreeNode {
        id: 0,
        parent: 0,
        kind: NodeKind::Call,
        label: String::new(),
        status: NodeStatus::Active,
        solution: false,
        depth: 0,
        children: Vec::new(),
    }
}

impl SearchTree {
    pub fn new() -> Self {
        SearchTree {
            nodes: vec![root()],
            index: HashMap::from([(0, 0)]),
            path: Vec::new(),
            last_id: 0,
        }
    }

    /// Builds a tree from a whole stream.
    pub fn from_events<'a>(
        events: impl IntoIterator<Item = &'a EngineMessage>,
    ) -> Result<Self, TreeError> {
        let mut t = SearchTree::new();
        for e in events {
            t.apply_event(e)?;
        }
        Ok(t)
    }

    /// Number of nodes, not counting the synthetic root.
    pub fn len(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Nodes in creation order, without the synthetic root.
    pub fn nodes(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes[1..].iter()
    }

    pub fn node(&self, id: WireId) -> Option<&TreeNode> {
        self.index.get(&id).map(|&i| &self.nodes[i])
    }

    /// Children of `id` in creation order; id 0 is the synthetic root.
    pub fn children(&self, id: WireId) -> impl Iterator<Item = &TreeNode> {
        let kids = self
            .index
            .get(&id)
            .map_or(&[][..], |&i| &self.nodes[i].children[..]);
        kids.iter().map(|&c| &self.nodes[c])
    }

    pub fn solutions(&self) -> usize {
        self.nodes().filter(|n| n.solution).count()
    }

    /// The deepest active node, if any.
    pub fn tip(&self) -> Option<&TreeNode> {
        self.path.last().map(|&i| &self.nodes[i])
    }

    pub(crate) fn raw(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub(crate) fn child_indices(&self, idx: usize) -> &[usize] {
        &self.nodes[idx].children
    }

    /// Leaves below each node, by index; a childless node counts as one.
    pub(crate) fn leaf_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.nodes.len()];
        for i in (0..self.nodes.len()).rev() {
            let n = &self.nodes[i];
            if n.children.is_empty() {
                counts[i] = 1;
            }
            if i > 0 {
                let p = self.index[&n.parent];
                counts[p] += counts[i];
            }
        }
        counts
    }

    pub fn apply_event(&mut self, event: &EngineMessage) -> Result<(), TreeError> {
        match event {
            EngineMessage::Node { id, parent, goal } => {
                self.add(*id, *parent, NodeKind::Call, goal)
            }
            EngineMessage::Child { id, parent, label } => {
                self.add(*id, *parent, NodeKind::Success, label)
            }
            EngineMessage::UndoNode { id } => self.retract(*id, NodeKind::Call),
            EngineMessage::UndoChild { id } => self.retract(*id, NodeKind::Success),
            EngineMessage::Success => {
                let tip = self.path.last().copied().ok_or(TreeError::NoSuccessTip)?;
                let n = &mut self.nodes[tip];
                if n.kind != NodeKind::Success {
                    return Err(TreeError::NoSuccessTip);
                }
                n.solution = true;
                Ok(())
            }
            EngineMessage::Clear => {
                let last = self.last_id;
                *self = SearchTree::new();
                self.last_id = last;
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn add(
        &mut self,
        id: WireId,
        parent: WireId,
        kind: NodeKind,
        label: &str,
    ) -> Result<(), TreeError> {
        if id <= self.last_id {
            return Err(TreeError::NonIncreasingId {
                id,
                last: self.last_id,
            });
        }
        let &p = self
            .index
            .get(&parent)
            .ok_or(TreeError::UnknownParent { id, parent })?;
        let idx = self.nodes.len();
        self.nodes.push(TreeNode {
            id,
            parent,
            kind,
            label: label.to_string(),
            status: NodeStatus::Active,
            solution: false,
            depth: self.nodes[p].depth + 1,
            children: Vec::new(),
        });
        self.nodes[p].children.push(idx);
        self.index.insert(id, idx);
        self.last_id = id;
        // the new node extends the path from its parent
        while let Some(&top) = self.path.last() {
            if top == p {
                break;
            }
            self.path.pop();
        }
        self.path.push(idx);
        Ok(())
    }

    fn retract(&mut self, id: WireId, kind: NodeKind) -> Result<(), TreeError> {
        let &idx = self
            .index
            .get(&id)
            .filter(|&&i| i > 0)
            .ok_or(TreeError::UnknownNode(id))?;
        let n = &mut self.nodes[idx];
        if n.kind != kind {
            return Err(TreeError::KindMismatch { id });
        }
        if n.status == NodeStatus::Retracted {
            return Err(TreeError::AlreadyRetracted(id));
        }
        n.status = NodeStatus::Retracted;
        if let Some(pos) = self.path.iter().position(|&i| i == idx) {
            self.path.truncate(pos);
        }
        Ok(())
    }
}

/// A sink that builds a tree and keeps the first stream error.
#[derive(Debug, Default)]
pub struct TreeRecorder {
    pub tree: SearchTree,
    pub error: Option<TreeError>,
}

impl EventSink for TreeRecorder {
    fn emit(&mut self, msg: EngineMessage) {
        if self.error.is_none() {
            if let Err(e) = self.tree.apply_event(&msg) {
                self.error = Some(e);
            }
        }
    }
}
