use std::collections::{HashMap, HashSet};

use thiserror::Error;

use super::message::{EngineMessage, WireId};

/// A stream-discipline violation at the 1-based frame number `frame`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("frame {frame}: {message}")]
pub struct ValidationError {
    pub frame: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SnapshotKind {
    Sizes,
    Intervals,
    Values,
}

/// Checks an engine-to-GUI stream incrementally.
///
/// Tree frames follow a stack discipline: a new `node` or `child` hangs
/// off the top of the current derivation path, undo frames pop exactly
/// the top, and `success` is only legal on a success node. Ids strictly
/// increase, snapshot times count up from 0, and undo frames name live
/// buttons and snapshots of the matching kind.
#[derive(Debug, Default)]
pub struct StreamValidator {
    frames: usize,
    path: Vec<(WireId, bool)>,
    last_id: WireId,
    retracted_calls: HashSet<WireId>,
    buttons: HashSet<WireId>,
    snapshots: HashMap<u64, SnapshotKind>,
    next_time: u64,
}

impl StreamValidator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Frames accepted so far.
    pub fn frames(&self) -> usize {
        self.frames
    }

    /// Current derivation path, outermost first.
    pub fn path(&self) -> impl Iterator<Item = WireId> + '_ {
        self.path.iter().map(|(id, _)| *id)
    }

    pub fn feed(&mut self, msg: &EngineMessage) -> Result<(), ValidationError> {
        self.frames += 1;
        let frame = self.frames;
        let fail = |message: String| Err(ValidationError { frame, message });
        match msg {
            EngineMessage::Node { id, parent, .. } | EngineMessage::Child { id, parent, .. } => {
                let is_call = matches!(msg, EngineMessage::Node { .. });
                if *id <= self.last_id {
                    return fail(format!("id {id} does not increase past {}", self.last_id));
                }
                let top = self.path.last().map_or(0, |(t, _)| *t);
                if *parent != top {
                    return fail(format!("parent {parent} is not the current tip {top}"));
                }
                self.last_id = *id;
                self.path.push((*id, is_call));
            }
            EngineMessage::UndoNode { id } | EngineMessage::UndoChild { id } => {
                let is_call = matches!(msg, EngineMessage::UndoNode { .. });
                match self.path.last() {
                    Some(&(top, kind)) if top == *id && kind == is_call => {
                        self.path.pop();
                        if is_call {
                            self.retracted_calls.insert(*id);
                        }
                    }
                    Some(&(top, _)) => {
                        return fail(format!("{} {id} but the tip is {top}", msg.tag()))
                    }
                    None => return fail(format!("{} {id} on an empty path", msg.tag())),
                }
            }
            EngineMessage::UndoGoal { id, .. } => {
                if !self.retracted_calls.contains(id) {
                    return fail(format!("undo-goal {id} names no retracted call node"));
                }
            }
            EngineMessage::Success => match self.path.last() {
                Some((_, false)) => {}
                _ => return fail("success without a success node at the tip".into()),
            },
            EngineMessage::Clear => {
                self.path.clear();
                self.retracted_calls.clear();
            }
            EngineMessage::Button { id, .. } => {
                if !self.buttons.insert(*id) {
                    return fail(format!("button {id} already exists"));
                }
            }
            EngineMessage::UndoButton { id } => {
                if !self.buttons.remove(id) {
                    return fail(format!("undo-button {id} names no button"));
                }
            }
            EngineMessage::DomainSizes { time, .. }
            | EngineMessage::DomainIntervals { time, .. }
            | EngineMessage::DomainValues { time, .. } => {
                if *time != self.next_time {
                    return fail(format!("snapshot time {time}, expected {}", self.next_time));
                }
                let kind = match msg {
                    EngineMessage::DomainSizes { .. } => SnapshotKind::Sizes,
                    EngineMessage::DomainIntervals { .. } => SnapshotKind::Intervals,
                    _ => SnapshotKind::Values,
                };
                self.snapshots.insert(*time, kind);
                self.next_time += 1;
            }
            EngineMessage::UndoDomainSizes { time }
            | EngineMessage::UndoDomainIntervals { time }
            | EngineMessage::UndoDomainValues { time } => {
                let kind = match msg {
                    EngineMessage::UndoDomainSizes { .. } => SnapshotKind::Sizes,
                    EngineMessage::UndoDomainIntervals { .. } => SnapshotKind::Intervals,
                    _ => SnapshotKind::Values,
                };
                match self.snapshots.remove(time) {
                    Some(k) if k == kind => {}
                    Some(_) => {
                        return fail(format!(
                            "{} {time} does not match the snapshot kind",
                            msg.tag()
                        ))
                    }
                    None => return fail(format!("{} {time} names no live snapshot", msg.tag())),
                }
            }
            EngineMessage::Variables(_) | EngineMessage::Error { .. } => {}
        }
        Ok(())
    }

    /// Validates a whole stream, stopping at the first violation.
    pub fn check_all<'a>(
        msgs: impl IntoIterator<Item = &'a EngineMessage>,
    ) -> Result<usize, ValidationError> {
        let mut v = Self::new();
        for m in msgs {
            v.feed(m)?;
        }
        Ok(v.frames())
    }
}
