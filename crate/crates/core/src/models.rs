//! Models shipped with the crate.

use crate::lang::{parse_model, Model};

/// Source of the SEND+MORE=MONEY model.
pub const SENDMORE: &str = include_str!("../models/sendmore.model");

pub fn sendmore() -> Model {
    parse_model(SENDMORE).expect("bundled model parses")
}

/// Source of the `n`-queens model: variables `Q1..Qn` over `1..n`, a
/// `safe` button, one `fd_labeling` button per queen and a
/// `trace_labeling` button.
pub fn queens_source(n: usize) -> String {
    let names: Vec<String> = (1..=n).map(|i| format!("Q{i}")).collect();
    let list = names.join(",");
    format!(
        "# {n} queens\nmodel queens\nvars {} in 1..{n}\nbutton \"safe([{list}])\"\nbutton each \"fd_labeling(%)\" in {}\nbutton \"trace_labeling([{list}])\"\n",
        names.join(" "),
        names.join(" "),
    )
}

pub fn queens(n: usize) -> Model {
    parse_model(&queens_source(n)).expect("generated model parses")
}

/// A bundled model by name (`sendmore`, `queens`); `n` sizes queens
/// (default 8).
pub fn bundled(name: &str, n: Option<usize>) -> Option<Model> {
    match name {
        "sendmore" => Some(sendmore()),
        "queens" => Some(queens(n.unwrap_or(8))),
        _ => None,
    }
}
