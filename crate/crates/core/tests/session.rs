use std::collections::VecDeque;

use fdsteer::fd::Domain;
use fdsteer::lang::parse_model;
use fdsteer::models;
use fdsteer::protocol::{ControlMessage, EngineMessage, StreamValidator};
use fdsteer::session::{
    Outcome, Session, SessionError, SessionOptions, SessionState, SnapshotMode,
};

fn session(src: &str) -> Session<Vec<EngineMessage>> {
    Session::new(
        &parse_model(src).unwrap(),
        Vec::new(),
        SessionOptions::default(),
    )
    .unwrap()
}

fn sendmore() -> Session<Vec<EngineMessage>> {
    Session::new(&models::sendmore(), Vec::new(), SessionOptions::default()).unwrap()
}

fn button(s: &mut Session<Vec<EngineMessage>>, i: usize) -> Result<Outcome, SessionError> {
    let g = s.buttons()[i].clone();
    s.execute(&g)
}

fn valid(s: &Session<Vec<EngineMessage>>) {
    if let Err(e) = StreamValidator::check_all(s.sink()) {
        panic!("{e}: {:?}", s.sink().get(e.frame - 1));
    }
}

/// Value bound to `name` in a bindings label such as `X=1,Y=2..3`.
fn binding(label: &str, name: &str) -> Option<i64> {
    label
        .split(',')
        .find_map(|b| b.strip_prefix(name)?.strip_prefix('=')?.parse().ok())
}

/// The label of the tip each time `<success>` is emitted.
fn success_labels(msgs: &[EngineMessage]) -> Vec<String> {
    let mut path: Vec<String> = Vec::new();
    let mut out = Vec::new();
    for m in msgs {
        match m {
            EngineMessage::Node { goal: l, .. } | EngineMessage::Child { label: l, .. } => {
                path.push(l.clone())
            }
            EngineMessage::UndoNode { .. } | EngineMessage::UndoChild { .. } => {
                path.pop();
            }
            EngineMessage::Success => out.push(path.last().cloned().unwrap_or_default()),
            EngineMessage::Clear => path.clear(),
            _ => {}
        }
    }
    out
}

fn tail(s: &mut Session<Vec<EngineMessage>>) -> Vec<EngineMessage> {
    std::mem::take(s.sink_mut())
}

#[test]
fn start_announces_variables_buttons_and_snapshot() {
    let s = sendmore();
    let msgs = s.sink();
    assert_eq!(
        msgs[0],
        EngineMessage::Variables("SENDMORY".chars().map(String::from).collect())
    );
    let buttons = msgs
        .iter()
        .filter(|m| matches!(m, EngineMessage::Button { .. }))
        .count();
    assert_eq!(buttons, 5);
    assert!(matches!(
        msgs.last(),
        Some(EngineMessage::DomainSizes { time: 0, .. })
    ));
}

#[test]
fn sendmore_constraint_buttons() {
    let mut s = sendmore();
    for i in 0..3 {
        assert_eq!(button(&mut s, i), Ok(Outcome::Success));
        assert_eq!(s.state(), SessionState::AtSuccess);
    }
    assert_eq!(s.domain_of("S"), Some(&Domain::singleton(9)));
    assert_eq!(s.domain_of("M"), Some(&Domain::singleton(1)));
    assert_eq!(s.domain_of("O"), Some(&Domain::singleton(0)));
    let sizes = s
        .sink()
        .iter()
        .rev()
        .find_map(|m| match m {
            EngineMessage::DomainSizes { sizes, .. } => {
                Some(sizes.iter().map(|(_, n)| *n).collect::<Vec<_>>())
            }
            _ => None,
        })
        .unwrap();
    assert_eq!(sizes, vec![1, 4, 4, 7, 1, 1, 7, 7]);
    // constraint posts are not search successes
    assert!(!s.sink().contains(&EngineMessage::Success));
    valid(&s);
}

#[test]
fn sendmore_labeling_and_exhaustion() {
    let mut s = sendmore();
    for i in 0..3 {
        button(&mut s, i).unwrap();
    }
    tail(&mut s);
    assert_eq!(button(&mut s, 3), Ok(Outcome::Success));
    let msgs = tail(&mut s);
    let first = msgs
        .iter()
        .position(|m| *m == EngineMessage::Success)
        .unwrap();
    assert!(!msgs[..first]
        .iter()
        .any(|m| matches!(m, EngineMessage::UndoNode { .. })));
    assert_eq!(
        success_labels(&msgs),
        vec!["S=9,E=5,N=6,D=7,M=1,O=0,R=8,Y=2".to_string()]
    );
    assert_eq!(s.backtrack(), Ok(Outcome::Failure));
    assert_eq!(s.state(), SessionState::AtSuccess);
    assert_eq!(s.frame_count(), 3);
    let msgs = tail(&mut s);
    assert!(msgs.iter().any(|m| matches!(m,
        EngineMessage::UndoGoal { goal, .. } if goal == "trace_labeling([S,E,N,D,M,O,R,Y])")));
    assert!(!msgs.contains(&EngineMessage::Success));
}

#[test]
fn labeling_two_values() {
    let mut s = session("vars X in 1..2\n");
    tail(&mut s);
    assert_eq!(s.execute_text("trace_labeling([X])"), Ok(Outcome::Success));
    let tree: Vec<_> = tail(&mut s)
        .into_iter()
        .filter(|m| !matches!(m, EngineMessage::DomainSizes { .. }))
        .collect();
    assert_eq!(
        tree,
        vec![
            EngineMessage::Node {
                id: 1,
                parent: 0,
                goal: "trace_labeling([X])".into()
            },
            EngineMessage::Node {
                id: 2,
                parent: 1,
                goal: "fd_labeling(X)".into()
            },
            EngineMessage::Child {
                id: 3,
                parent: 2,
                label: "X=1".into()
            },
            EngineMessage::Child {
                id: 4,
                parent: 3,
                label: "X=1".into()
            },
            EngineMessage::Success,
        ]
    );
    assert_eq!(s.backtrack(), Ok(Outcome::Success));
    assert_eq!(s.domain_of("X"), Some(&Domain::singleton(2)));
    let tree: Vec<_> = tail(&mut s)
        .into_iter()
        .filter(|m| {
            !matches!(
                m,
                EngineMessage::DomainSizes { .. } | EngineMessage::UndoDomainSizes { .. }
            )
        })
        .collect();
    assert_eq!(
        tree,
        vec![
            EngineMessage::UndoChild { id: 4 },
            EngineMessage::UndoChild { id: 3 },
            EngineMessage::Child {
                id: 5,
                parent: 2,
                label: "X=2".into()
            },
            EngineMessage::Child {
                id: 6,
                parent: 5,
                label: "X=2".into()
            },
            EngineMessage::Success,
        ]
    );
    assert_eq!(s.backtrack(), Ok(Outcome::Failure));
    assert_eq!(s.state(), SessionState::Idle);
    let msgs = tail(&mut s);
    assert!(msgs.starts_with(&[
        EngineMessage::UndoDomainSizes { time: 2 },
        EngineMessage::UndoChild { id: 6 },
        EngineMessage::UndoChild { id: 5 },
        EngineMessage::UndoNode { id: 2 },
        EngineMessage::UndoNode { id: 1 },
    ]));
    valid(&s);
}

#[test]
fn unknown_variable_leaves_state_alone() {
    let mut s = session("vars Y in 0..3\n");
    let before = s.sink().len();
    assert_eq!(
        s.execute_text("X #= 5"),
        Err(SessionError::UnknownVariable("X".into()))
    );
    assert_eq!(s.state(), SessionState::Idle);
    assert_eq!(s.sink().len(), before);
}

#[test]
fn rejected_commands() {
    let mut s = session("vars X in 0..3\n");
    assert!(matches!(s.backtrack(), Err(SessionError::Rejected { .. })));
    assert!(matches!(
        s.backtrack_interaction(),
        Err(SessionError::Rejected { .. })
    ));
    assert_eq!(s.state(), SessionState::Idle);
    assert!(s.handle(ControlMessage::Backtrack).is_err());
    assert!(matches!(s.sink().last(), Some(EngineMessage::Error { .. })));
}

#[test]
fn backtrack_interaction_restores_domains() {
    let mut s = session("vars X Y in 0..9\n");
    s.execute_text("X #< Y").unwrap();
    let after_a = s.domains();
    s.execute_text("Y #=< 4, X #> 1").unwrap();
    assert_ne!(s.domains(), after_a);
    assert_eq!(s.backtrack_interaction(), Ok(Outcome::Undone));
    assert_eq!(s.domains(), after_a);
    assert_eq!(s.state(), SessionState::AtSuccess);
    s.backtrack_interaction().unwrap();
    assert_eq!(s.state(), SessionState::Idle);
    assert_eq!(s.domains(), vec![Domain::interval(0, 9).unwrap(); 2]);
    valid(&s);
}

#[test]
fn backtrack_interaction_drops_labeling_subtree() {
    let mut s = session("vars X Y in 0..2\n");
    s.execute_text("X #< Y").unwrap();
    s.execute_text("trace_labeling([X,Y])").unwrap();
    tail(&mut s);
    s.backtrack_interaction().unwrap();
    let undone = tail(&mut s)
        .iter()
        .filter(|m| {
            matches!(
                m,
                EngineMessage::UndoNode { .. } | EngineMessage::UndoChild { .. }
            )
        })
        .count();
    // trace_labeling node, two fd_labeling nodes, two value children, frame success
    assert_eq!(undone, 6);
    valid(&s);
}

#[test]
fn failing_goal_pops_its_frame() {
    let mut s = session("vars X in 0..3\n");
    s.execute_text("X #> 1").unwrap();
    assert_eq!(s.execute_text("X #< 1"), Ok(Outcome::Failure));
    assert_eq!(s.frame_count(), 1);
    assert_eq!(s.state(), SessionState::AtSuccess);
    assert_eq!(s.domain_of("X"), Some(&Domain::interval(2, 3).unwrap()));
    valid(&s);
}

#[test]
fn minimize_costs_strictly_decrease() {
    let mut s = session("vars X Y in 0..3\n");
    s.execute_text("X + Y #= 3").unwrap();
    assert_eq!(
        s.execute_text("minimize(trace_labeling([Y,X]), X)"),
        Ok(Outcome::Success)
    );
    let costs: Vec<_> = success_labels(s.sink())
        .iter()
        .map(|l| binding(l, "X").unwrap())
        .collect();
    assert_eq!(costs, vec![3, 2, 1, 0]);
    assert_eq!(s.domain_of("X"), Some(&Domain::singleton(0)));
    assert_eq!(s.domain_of("Y"), Some(&Domain::singleton(3)));
    assert_eq!(s.backtrack(), Ok(Outcome::Failure));
    assert_eq!(s.frame_count(), 1);
    valid(&s);
}

#[test]
fn minimize_with_fixed_cost() {
    let mut s = session("vars C in 5..5\nvars X in 0..3\n");
    s.execute_text("minimize(trace_labeling([X]), C)").unwrap();
    assert_eq!(success_labels(s.sink()).len(), 1);
    assert_eq!(s.domain_of("X"), Some(&Domain::singleton(0)));
}

#[test]
fn minimize_errors() {
    let mut s = session("vars X Y in 0..3\n");
    assert!(matches!(
        s.execute_text("minimize(X #> 1, X)"),
        Err(SessionError::UnboundedSearch(_))
    ));
    assert!(matches!(
        s.execute_text("minimize(trace_labeling([X]), Y), X #> 1"),
        Err(SessionError::MinimizePlacement(_))
    ));
    assert!(matches!(
        s.execute_text("minimize(trace_labeling([X]), Y)"),
        Err(SessionError::UnboundedSearch(_))
    ));
    assert_eq!(s.state(), SessionState::Idle);
    assert_eq!(s.frame_count(), 0);
    valid(&s);
}

#[test]
fn clear_restores_pristine_state() {
    let mut s = session("vars X in 0..3\n");
    s.execute_text("X #> 1").unwrap();
    s.execute_text("fd_labeling(X)").unwrap();
    assert_eq!(s.clear(), Outcome::Cleared);
    assert_eq!(s.state(), SessionState::Idle);
    assert_eq!(s.domains(), vec![Domain::interval(0, 3).unwrap()]);
    assert_eq!(s.clear(), Outcome::Cleared);
    let clears = s
        .sink()
        .iter()
        .filter(|m| **m == EngineMessage::Clear)
        .count();
    assert_eq!(clears, 2);
    s.execute_text("X #= 2").unwrap();
    valid(&s);
}

#[test]
fn clear_interrupts_a_long_search() {
    let mut s = Session::new(&models::queens(12), Vec::new(), SessionOptions::default()).unwrap();
    s.execute_text("safe([Q1,Q2,Q3,Q4,Q5,Q6,Q7,Q8,Q9,Q10,Q11,Q12])")
        .unwrap();
    let mut control = VecDeque::new();
    control.push_back(ControlMessage::ShowValues);
    control.push_back(ControlMessage::Backtrack);
    control.push_back(ControlMessage::Clear);
    s.set_control(Box::new(control));
    tail(&mut s);
    assert_eq!(
        s.execute_text("trace_labeling([Q1,Q2,Q3,Q4,Q5,Q6,Q7,Q8,Q9,Q10,Q11,Q12])"),
        Ok(Outcome::Cleared)
    );
    assert_eq!(s.state(), SessionState::Idle);
    assert_eq!(s.snapshot_mode(), SnapshotMode::FullValues);
    assert_eq!(s.take_pending(), vec![ControlMessage::Backtrack]);
    // the interaction node and the first labeling call only
    let nodes = s
        .sink()
        .iter()
        .filter(|m| matches!(m, EngineMessage::Node { .. }))
        .count();
    assert_eq!(nodes, 2);
    assert!(s.domains().iter().all(|d| d.size() == 12));
}

#[test]
fn snapshot_modes() {
    let mut s = session("vars X in 1..5\n");
    s.execute_text("X #\\= 2, X #\\= 4").unwrap();
    s.handle(ControlMessage::ShowValues).unwrap();
    s.execute_text("X #> 0").unwrap();
    assert_eq!(
        s.sink().last(),
        Some(&EngineMessage::DomainValues {
            time: 2,
            values: vec![("X".into(), vec![1, 3, 5])]
        })
    );
    s.handle(ControlMessage::ShowInterval).unwrap();
    s.backtrack_interaction().unwrap();
    assert!(s
        .sink()
        .contains(&EngineMessage::UndoDomainValues { time: 2 }));
    assert_eq!(
        s.sink().last(),
        Some(&EngineMessage::DomainIntervals {
            time: 3,
            intervals: vec![("X".into(), 1, 5)]
        })
    );
    valid(&s);
}

#[test]
fn empty_model_snapshot() {
    let s = session("");
    assert_eq!(
        s.sink().as_slice(),
        &[
            EngineMessage::Variables(vec![]),
            EngineMessage::DomainSizes {
                time: 0,
                sizes: vec![]
            }
        ]
    );
}

#[test]
fn trace_failures_adds_retracted_leaves() {
    let src = "vars X Y in 1..3\n";
    let fail_labels = |s: &Session<Vec<EngineMessage>>| -> Vec<String> {
        s.sink()
            .iter()
            .filter_map(|m| match m {
                EngineMessage::Child { label, .. } if label.starts_with("fail(") => {
                    Some(label.clone())
                }
                _ => None,
            })
            .collect()
    };
    let mut runs = Vec::new();
    for trace_failures in [false, true] {
        let options = SessionOptions {
            trace_failures,
            ..SessionOptions::default()
        };
        let mut s = Session::new(&parse_model(src).unwrap(), Vec::new(), options).unwrap();
        s.execute_text("X + Y #= 4, Y #\\= 2").unwrap();
        s.execute_text("trace_labeling([X])").unwrap();
        while s.backtrack() == Ok(Outcome::Success) {}
        valid(&s);
        runs.push(s);
    }
    assert!(fail_labels(&runs[0]).is_empty());
    assert_eq!(fail_labels(&runs[1]), vec!["fail(X=2)".to_string()]);
    let undone_after = runs[1]
        .sink()
        .windows(2)
        .any(|w| matches!((&w[0], &w[1]), (EngineMessage::Child { id, label, .. }, EngineMessage::UndoChild { id: u })
            if label.starts_with("fail(") && id == u));
    assert!(undone_after);
}
