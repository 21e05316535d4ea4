/// Node and button identifiers on the wire.
pub type WireId = u64;

/// Messages from the engine to the GUI.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EngineMessage {
    /// External names of the FD variables, in registration order.
    Variables(Vec<String>),
    Button {
        id: WireId,
        goal: String,
    },
    UndoButton {
        id: WireId,
    },
    /// A call to a traced goal.
    Node {
        id: WireId,
        parent: WireId,
        goal: String,
    },
    UndoNode {
        id: WireId,
    },
    /// A success of a traced goal, labeled with variable bindings.
    Child {
        id: WireId,
        parent: WireId,
        label: String,
    },
    UndoChild {
        id: WireId,
    },
    /// The interaction whose call node is `id` was backtracked over.
    UndoGoal {
        id: WireId,
        goal: String,
    },
    DomainSizes {
        time: u64,
        sizes: Vec<(String, u64)>,
    },
    DomainIntervals {
        time: u64,
        intervals: Vec<(String, i64, i64)>,
    },
    DomainValues {
        time: u64,
        values: Vec<(String, Vec<i64>)>,
    },
    UndoDomainValues {
        time: u64,
    },
    UndoDomainIntervals {
        time: u64,
    },
    UndoDomainSizes {
        time: u64,
    },
    /// The current derivation is a success.
    Success,
    /// Return to top level.
    Clear,
    /// A command was refused or a frame could not be read.
    Error {
        message: String,
    },
}

/// Messages from the GUI to the engine.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ControlMessage {
    ShowSize,
    ShowInterval,
    ShowValues,
    Execute(String),
    Backtrack,
    BacktrackInteraction,
    Clear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    EngineToGui,
    GuiToEngine,
}

/// Either direction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Message {
    Engine(EngineMessage),
    Control(ControlMessage),
}

impl Message {
    pub fn direction(&self) -> Direction {
        match self {
            Message::Engine(_) => Direction::EngineToGui,
            Message::Control(_) => Direction::GuiToEngine,
        }
    }
}

impl From<EngineMessage> for Message {
    fn from(m: EngineMessage) -> Self {
        Message::Engine(m)
    }
}

impl From<ControlMessage> for Message {
    fn from(m: ControlMessage) -> Self {
        Message::Control(m)
    }
}

impl EngineMessage {
    pub fn tag(&self) -> &'static str {
        match self {
            EngineMessage::Variables(_) => "variables",
            EngineMessage::Button { .. } => "button",
            EngineMessage::UndoButton { .. } => "undo-button",
            EngineMessage::Node { .. } => "node",
            EngineMessage::UndoNode { .. } => "undo-node",
            EngineMessage::Child { .. } => "child",
            EngineMessage::UndoChild { .. } => "undo-child",
            EngineMessage::UndoGoal { .. } => "undo-goal",
            EngineMessage::DomainSizes { .. } => "domainSizes",
            EngineMessage::DomainIntervals { .. } => "domainIntervals",
            EngineMessage::DomainValues { .. } => "domainValues",
            EngineMessage::UndoDomainValues { .. } => "undo-domainValues",
            EngineMessage::UndoDomainIntervals { .. } => "undo-domainIntervals",
            EngineMessage::UndoDomainSizes { .. } => "undo-domainSizes",
            EngineMessage::Success => "success",
            EngineMessage::Clear => "clear",
            EngineMessage::Error { .. } => "error",
        }
    }
}

impl ControlMessage {
    pub fn tag(&self) -> &'static str {
        match self {
            ControlMessage::ShowSize => "showSize",
            ControlMessage::ShowInterval => "showInterval",
            ControlMessage::ShowValues => "showValues",
            ControlMessage::Execute(_) => "execute",
            ControlMessage::Backtrack => "backtrack",
            ControlMessage::BacktrackInteraction => "backtrackInteraction",
            ControlMessage::Clear => "clear",
        }
    }
}
