mod common;

use common::*;
use morai_core::agent::{Outcome, Partner, Placement, Reuse};
use morai_core::explain::explain;
use morai_core::{Author, EditKind, Level, LevelError};
use morai_session::log::{parse_jsonl, replay};
use morai_session::{EditRequest, Event, LogicalClock, Session, SessionConfig, SessionError, Status};

fn feedback_events(s: &Session) -> Vec<(Placement, Outcome, Option<f64>, Option<f64>)> {
    s.records()
        .iter()
        .filter_map(|r| match r.event {
            Event::Feedback { x, y, tile, outcome, before, target, .. } => {
                Some((Placement::new(x, y, tile), outcome, before, target))
            }
            _ => None,
        })
        .collect()
}

#[test]
fn fresh_session_state() {
    let s = markov_session(1);
    assert_eq!(s.level(), &Level::new(200).unwrap());
    assert!(s.ledger().is_empty());
    assert_eq!(s.turn_counter(), 0);
    assert_eq!(s.status(), Status::Active);
    let log = parse_jsonl(&s.export_log()).unwrap();
    assert_eq!(log.len(), 1);
    assert_eq!(log[0].event_type(), "session_created");
}

#[test]
fn narrow_levels_are_rejected() {
    let config = SessionConfig { width: 30, ..markov_config(0) };
    let partner = Partner::markov(markov_model().clone(), 6, 0).unwrap();
    let err = Session::create("x", config, partner, Box::<LogicalClock>::default(), manifest()).unwrap_err();
    assert!(matches!(err, SessionError::BadConfig(_)));
}

#[test]
fn human_edits_are_logged_without_feedback() {
    let mut s = markov_session(2);
    s.submit_human_edits(&[EditRequest::add(5, 14, t(0)), EditRequest::add(6, 14, t(0))]).unwrap();
    s.submit_human_edits(&[EditRequest::delete(5, 14, t(0))]).unwrap();
    assert_eq!(s.ledger().len(), 3);
    assert!(s.ledger().iter().all(|e| e.author == Author::Human));
    assert!(feedback_events(&s).is_empty());
    assert_eq!(s.level().get(6, 14), Some(t(0)));
    assert_eq!(s.level().get(5, 14), None);
}

#[test]
fn edit_batches_are_atomic() {
    let mut s = markov_session(3);
    let before_log = s.export_log();
    let err = s.submit_human_edits(&[EditRequest::add(1, 14, t(0)), EditRequest::add(200, 14, t(0))]).unwrap_err();
    assert!(matches!(err, SessionError::Level(LevelError::OutOfBounds { .. })));
    assert!(s.ledger().is_empty());
    assert_eq!(s.level().get(1, 14), None);
    assert_eq!(s.export_log(), before_log);
}

#[test]
fn end_turn_applies_and_logs_additions() {
    let mut s = markov_session(4);
    let turn = s.end_turn(100).unwrap();
    assert_eq!(turn.turn_id, 0);
    assert!(!turn.additions.is_empty());
    assert!(turn.additions.len() <= 6);
    assert!(turn.explanations.is_empty());
    assert_eq!(s.turn_counter(), 1);
    assert_eq!(s.ledger().len(), turn.additions.len());
    assert_eq!(s.last_ai_turn(), &turn.additions[..]);
    for e in &turn.additions {
        assert_eq!((e.kind, e.author, e.turn_id), (EditKind::Addition, Author::Ai, 0));
        assert_eq!(s.level().get(e.x, e.y), Some(e.tile));
        assert!((80..120).contains(&e.x));
    }
    assert_eq!(s.episode().len(), turn.additions.len());
}

#[test]
fn empty_turns_still_advance_the_counter() {
    let mut s = cnn_session(11, 0.99, false);
    let turn = s.end_turn(20).unwrap();
    assert!(turn.additions.is_empty());
    assert_eq!(s.turn_counter(), 1);
    assert!(matches!(s.remove_last_ai_turn(), Err(SessionError::NothingToRemove)));
}

#[test]
fn remove_button_undoes_the_last_turn() {
    let mut s = markov_session(5);
    s.submit_human_edits(&[EditRequest::add(0, 14, t(0))]).unwrap();
    let before = s.level().clone();
    let turn = s.end_turn(20).unwrap();
    let n = turn.additions.len();
    assert!(n > 0);
    let removed = s.remove_last_ai_turn().unwrap();
    assert_eq!(removed.len(), n);
    assert_eq!(s.level(), &before);
    assert_eq!(s.agent().blacklist().len(), n);
    let fb = feedback_events(&s);
    assert_eq!(fb.len(), n);
    assert!(fb.iter().all(|f| f.1 == Outcome::Deleted));
    assert!(removed.iter().all(|e| e.author == Author::Human && e.kind == EditKind::Deletion));
    assert!(matches!(s.remove_last_ai_turn(), Err(SessionError::NothingToRemove)));
}

#[test]
fn remove_skips_members_already_deleted() {
    let mut s = markov_session(6);
    let turn = s.end_turn(60).unwrap();
    assert!(turn.additions.len() >= 2);
    let first = turn.additions[0];
    s.submit_human_edits(&[EditRequest::delete(first.x, first.y, first.tile)]).unwrap();
    let removed = s.remove_last_ai_turn().unwrap();
    assert_eq!(removed.len(), turn.additions.len() - 1);
    assert_eq!(feedback_events(&s).len(), turn.additions.len());
}

#[test]
fn deleting_an_ai_tile_lowers_its_activation_and_blacklists_it() {
    let mut s = cnn_session(12, 0.01, false);
    let turn = s.end_turn(60).unwrap();
    let a = turn.additions[0];
    let entry = s.episode()[0].clone();
    let cnn = s.agent().as_cnn().unwrap();
    let x_rel = a.x - entry.window.origin_x;
    let before = cnn.activation(&entry.window, x_rel, a.y, a.tile).unwrap();

    s.submit_human_edits(&[EditRequest::delete(a.x, a.y, a.tile)]).unwrap();
    let cnn = s.agent().as_cnn().unwrap();
    let after = cnn.activation(&entry.window, x_rel, a.y, a.tile).unwrap();
    assert!(after < before, "{after} !< {before}");
    assert!(s.agent().blacklist().contains(&Placement::new(a.x, a.y, a.tile)));
    assert!(!s.episode()[0].kept);
    let fb = feedback_events(&s);
    assert_eq!(fb.len(), 1);
    assert_eq!(fb[0].1, Outcome::Deleted);
    assert_eq!(fb[0].2, Some(f64::from(before)));
}

#[test]
fn surviving_additions_are_confirmed_kept_once() {
    let mut s = cnn_session(13, 0.01, false);
    let turn = s.end_turn(60).unwrap();
    let n = turn.additions.len();
    assert!(n > 0);
    let entry = s.episode()[0].clone();
    let a = turn.additions[0];
    let x_rel = a.x - entry.window.origin_x;
    let before = s.agent().as_cnn().unwrap().activation(&entry.window, x_rel, a.y, a.tile).unwrap();

    s.end_turn(150).unwrap();
    let kept: Vec<_> = feedback_events(&s).into_iter().filter(|f| f.1 == Outcome::Kept).collect();
    assert_eq!(kept.len(), n);
    assert_eq!(kept.iter().filter(|f| f.0 == Placement::new(a.x, a.y, a.tile)).count(), 1);
    let after_first = s.agent().as_cnn().unwrap().activation(&entry.window, x_rel, a.y, a.tile).unwrap();
    assert!(after_first > before, "{after_first} !> {before}");

    s.end_turn(150).unwrap();
    let kept_again = feedback_events(&s)
        .into_iter()
        .filter(|f| f.1 == Outcome::Kept && f.0 == Placement::new(a.x, a.y, a.tile))
        .count();
    assert_eq!(kept_again, 1);
}

#[test]
fn explanations_align_with_additions() {
    let mut s = cnn_session(14, 0.01, true);
    s.submit_human_edits(&[EditRequest::add(50, 14, t(0)), EditRequest::add(51, 14, t(0))]).unwrap();
    let turn = s.end_turn(60).unwrap();
    assert_eq!(turn.explanations.len(), turn.additions.len());
    let window = &s.episode()[0].window;
    let net = s.agent().as_cnn().unwrap().network();
    for (a, e) in turn.additions.iter().zip(&turn.explanations) {
        assert_eq!((e.x, e.y, e.tile), (a.x, a.y, a.tile));
        let oracle = explain(net, window, a.x - window.origin_x, a.y, a.tile, &manifest()).unwrap();
        assert_eq!(&oracle, e);
    }
    let logged = s.records().iter().filter(|r| r.event_type() == "explanation").count();
    assert_eq!(logged, turn.additions.len());
}

#[test]
fn closing_with_a_positive_ranking_trains_the_agent() {
    let mut s = cnn_session(15, 0.01, false);
    s.end_turn(60).unwrap();
    let window = s.episode()[0].window.clone();
    let before = s.agent().as_cnn().unwrap().action_matrix(&window).unwrap();
    s.close(Some(Reuse::Positive), None).unwrap();
    let after = s.agent().as_cnn().unwrap().action_matrix(&window).unwrap();
    assert_ne!(before, after);
    assert_eq!(s.status(), Status::Closed);
    assert!(s.agent().blacklist().is_empty());
}

#[test]
fn closing_without_a_ranking_leaves_the_agent_alone() {
    let mut s = cnn_session(16, 0.01, false);
    s.end_turn(60).unwrap();
    let window = s.episode()[0].window.clone();
    let before = s.agent().as_cnn().unwrap().action_matrix(&window).unwrap();
    s.close(None, None).unwrap();
    assert_eq!(s.agent().as_cnn().unwrap().action_matrix(&window).unwrap(), before);
    assert!(matches!(s.close(None, None), Err(SessionError::SessionClosed)));
    assert!(matches!(s.end_turn(0), Err(SessionError::SessionClosed)));
    assert!(matches!(s.submit_human_edits(&[]), Err(SessionError::SessionClosed)));
}

#[test]
fn close_writes_the_log() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = markov_session(7);
    s.end_turn(10).unwrap();
    let path = s.close(Some(Reuse::Negative), Some(dir.path())).unwrap().unwrap();
    assert_eq!(path, dir.path().join("m7.jsonl"));
    assert_eq!(std::fs::read_to_string(path).unwrap(), s.export_log());
    let last = s.records().last().unwrap();
    assert_eq!(last.event_type(), "session_closed");
}

#[test]
fn reset_level_keeps_the_agent_and_confirms_survivors() {
    let mut s = markov_session(8);
    let turn = s.end_turn(30).unwrap();
    s.remove_last_ai_turn().unwrap();
    s.end_turn(90).unwrap();
    s.reset_level().unwrap();
    assert_eq!(s.level(), &Level::new(200).unwrap());
    assert_eq!(s.agent().blacklist().len(), turn.additions.len());
    assert_eq!(replay(s.records()).unwrap(), *s.level());
    s.end_turn(30).unwrap();
    assert_eq!(replay(s.records()).unwrap(), *s.level());
}

#[test]
fn logs_are_reproducible() {
    let run = || {
        let mut s = markov_session(9);
        s.submit_human_edits(&[EditRequest::add(3, 14, t(0))]).unwrap();
        s.end_turn(3).unwrap();
        s.end_turn(50).unwrap();
        s.close(Some(Reuse::Positive), None).unwrap();
        s.export_log()
    };
    assert_eq!(run(), run());
}
