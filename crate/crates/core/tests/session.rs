use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use persona_core::analyzer::{LexiconBackend, ReplayBackend, ScoreResult};
use persona_core::axis::{discretized_normal, ProbVector};
use persona_core::orchestrator::{
    run_scripted_session, trajectory_csv, trajectory_rows, Backends, EchoGenerator,
    GenerationRequest, OutsideSource, ReplyGenerator, Scenario, Session, TurnError, TurnTrace,
};

const ROOT: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../..");

fn scenario() -> Arc<Scenario> {
    Arc::new(Scenario::load(format!("{ROOT}/scenarios/herr_schneider.json")).unwrap())
}

fn script(name: &str) -> Vec<String> {
    std::fs::read_to_string(format!("{ROOT}/fixtures/scripts/{name}.txt"))
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

fn csv(s: &Scenario, turns: &[TurnTrace]) -> String {
    trajectory_csv(&trajectory_rows(s, turns).unwrap())
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
}

/// Fails while `failing` is set.
#[derive(Default)]
struct Flaky {
    failing: AtomicBool,
}

impl ReplyGenerator for Flaky {
    fn name(&self) -> String {
        "flaky".into()
    }

    fn generate(&self, request: &GenerationRequest<'_>) -> Result<String, String> {
        if self.failing.load(Ordering::SeqCst) {
            Err("connection reset".into())
        } else {
            EchoGenerator.generate(request)
        }
    }
}

#[test]
fn neutral_messages_keep_user_at_default() {
    let s = scenario();
    let turns = run_scripted_session(s.clone(), &script("neutral"), 1, &Backends::hermetic()).unwrap();
    assert_eq!(turns.len(), 10);
    for turn in &turns {
        for axis in ["agency", "communion"] {
            assert_eq!(turn.score(axis), Some(&ScoreResult::Ok { score: 5, clamped: false }));
            assert_eq!(turn.update("user", axis).unwrap().trace.new_state, 2);
        }
    }
}

#[test]
fn communal_message_pulls_user_communion_up() {
    let s = scenario();
    let mut session = Session::new(s.clone(), 7).unwrap();
    let text = &script("communal")[0];
    let trace = session.process_user_message(&Backends::hermetic(), text).unwrap();
    assert_eq!(trace.score("communion"), Some(&ScoreResult::Ok { score: 10, clamped: false }));

    let update = trace.update("user", "communion").unwrap();
    assert_eq!(update.outside, Some(ProbVector::one_hot(5, 4).unwrap()));
    // Carried mix (0.1 g + 0.2 g + 0.2 e4) / 0.5 with g the default Gaussian.
    let g = discretized_normal(2, 0.6, 5).unwrap();
    let expected: Vec<f64> = (0..5)
        .map(|i| 0.6 * g.as_slice()[i] + if i == 4 { 0.4 } else { 0.0 })
        .collect();
    let carried = update.trace.new_carried_probs.as_slice();
    assert!(close(carried, &expected), "{carried:?}");
    assert!(carried[4] > update.prior.carried_probs.as_slice()[4]);
    // The current-state pull still wins for a deterministic user axis.
    assert_eq!(update.trace.new_state, 2);

    let communion = trace.update("assistant", "communion").unwrap();
    assert_eq!(communion.outside.as_ref(), Some(&update.trace.new_carried_probs));
    assert!(matches!(communion.source, OutsideSource::Link { .. }));
}

#[test]
fn negative_link_mirrors_user_agency() {
    let s = scenario();
    let mut session = Session::new(s, 11).unwrap();
    for text in script("agentic").iter().take(4) {
        let trace = session.process_user_message(&Backends::hermetic(), text).unwrap();
        let user = &trace.update("user", "agency").unwrap().trace.new_carried_probs;
        let outside = trace.update("assistant", "agency").unwrap().outside.clone().unwrap();
        assert_eq!(outside, user.mirrored());
        let reversed: Vec<f64> = user.as_slice().iter().rev().copied().collect();
        assert_eq!(outside.as_slice(), reversed.as_slice());
    }
}

#[test]
fn unparseable_score_only_affects_its_axis() {
    let mut replay = ReplayBackend::default();
    replay.insert("Hm.", "agency", Some("no idea"));
    replay.insert("Hm.", "communion", Some("8"));
    let backends = Backends {
        analyzer: Arc::new(replay),
        generator: Arc::new(EchoGenerator),
    };
    let s = scenario();
    let mut session = Session::new(s.clone(), 0).unwrap();
    let trace = session.process_user_message(&backends, "Hm.").unwrap();

    let agency = trace.update("user", "agency").unwrap();
    assert!(matches!(trace.score("agency"), Some(ScoreResult::ParseError { .. })));
    assert!(matches!(agency.source, OutsideSource::Absent { .. }));
    assert_eq!(agency.outside, None);
    let w = s.user().axis("agency").unwrap().config.weights.without_outside().unwrap();
    assert_eq!(agency.trace.weights, w);
    assert!(agency.trace.components.outside.is_none());

    let communion = trace.update("user", "communion").unwrap();
    assert_eq!(communion.outside, Some(ProbVector::one_hot(5, 3).unwrap()));
    assert_eq!(communion.trace.weights, s.user().axis("communion").unwrap().config.weights);
    assert!(trace
        .assistant_updates
        .iter()
        .all(|u| matches!(u.source, OutsideSource::Link { .. })));
}

#[test]
fn failed_generation_rolls_back_the_turn() {
    let s = scenario();
    let flaky = Arc::new(Flaky::default());
    let backends = Backends {
        analyzer: Arc::new(LexiconBackend::builtin()),
        generator: flaky.clone(),
    };
    let messages = script("communal");
    let mut session = Session::new(s.clone(), 5).unwrap();
    let mut reference = Session::new(s.clone(), 5).unwrap();
    for (i, text) in messages.iter().enumerate() {
        if i % 3 == 1 {
            let before = session.snapshot();
            flaky.failing.store(true, Ordering::SeqCst);
            let err = session.process_user_message(&backends, text).unwrap_err();
            assert!(matches!(err, TurnError::Generation(_)));
            flaky.failing.store(false, Ordering::SeqCst);
            assert_eq!(session.snapshot(), before);
            assert_eq!(session.turns().len(), i);
            assert_eq!(session.history().len(), 2 * i);
        }
        session.process_user_message(&backends, text).unwrap();
        reference.process_user_message(&backends, text).unwrap();
    }
    // A failed turn consumes no randomness: both sessions agree.
    assert_eq!(session.snapshot(), reference.snapshot());
    assert_eq!(csv(&s, session.turns()), csv(&s, reference.turns()));
}

#[test]
fn empty_message_is_rejected() {
    let mut session = Session::new(scenario(), 0).unwrap();
    assert!(matches!(
        session.process_user_message(&Backends::hermetic(), "  \n"),
        Err(TurnError::EmptyMessage)
    ));
    assert!(session.turns().is_empty());
}

#[test]
fn user_axes_update_before_assistant_axes() {
    let turns = run_scripted_session(scenario(), &script("agentic"), 2, &Backends::hermetic()).unwrap();
    for turn in &turns {
        let seq: Vec<u32> = turn.updates().map(|u| u.sequence).collect();
        assert_eq!(seq, [0, 1, 2, 3]);
        let models: Vec<&str> = turn.updates().map(|u| u.model.as_str()).collect();
        assert_eq!(models, ["user", "user", "assistant", "assistant"]);
        let times: Vec<_> = turn.updates().map(|u| u.applied_at).collect();
        assert!(times.windows(2).all(|w| w[0] <= w[1]));
        assert!(turn.started_at <= times[0] && times[3] <= turn.finished_at);
    }
}

#[test]
fn echo_reply_reflects_new_assistant_states() {
    let turns = run_scripted_session(scenario(), &script("communal")[..3], 9, &Backends::hermetic()).unwrap();
    for turn in &turns {
        let a = turn.update("assistant", "agency").unwrap().trace.new_state;
        let c = turn.update("assistant", "communion").unwrap().trace.new_state;
        assert!(turn.assistant_reply.contains(&format!("agency:{a} communion:{c}")));
    }
}

#[test]
fn empty_script_has_no_turns() {
    assert!(run_scripted_session(scenario(), &[], 0, &Backends::hermetic()).unwrap().is_empty());
}

#[test]
fn runs_are_replayable() {
    let s = scenario();
    for name in ["communal", "agentic", "neutral"] {
        let a = run_scripted_session(s.clone(), &script(name), 42, &Backends::hermetic()).unwrap();
        let b = run_scripted_session(s.clone(), &script(name), 42, &Backends::hermetic()).unwrap();
        assert_eq!(csv(&s, &a), csv(&s, &b));
        let replies = |t: &[TurnTrace]| t.iter().map(|t| t.assistant_reply.clone()).collect::<Vec<_>>();
        assert_eq!(replies(&a), replies(&b));
    }
}

#[test]
fn restored_session_continues_identically() {
    let s = scenario();
    let messages = script("communal");
    let backends = Backends::hermetic();
    let mut live = Session::new(s.clone(), 13).unwrap();
    for text in &messages[..6] {
        live.process_user_message(&backends, text).unwrap();
    }
    let stored: Vec<String> = live.turns().iter().map(|t| serde_json::to_string(t).unwrap()).collect();
    let turns: Vec<TurnTrace> = stored.iter().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(turns, live.turns());
    let mut restored = Session::restore(s.clone(), 13, turns).unwrap();
    assert_eq!(restored.snapshot(), live.snapshot());
    assert_eq!(restored.history(), live.history());
    for text in &messages[6..] {
        let a = live.process_user_message(&backends, text).unwrap();
        let b = restored.process_user_message(&backends, text).unwrap();
        assert_eq!(a.assistant_reply, b.assistant_reply);
        assert_eq!(a.user_updates.iter().map(|u| &u.trace).collect::<Vec<_>>(), b.user_updates.iter().map(|u| &u.trace).collect::<Vec<_>>());
        assert_eq!(a.assistant_updates.iter().map(|u| &u.trace).collect::<Vec<_>>(), b.assistant_updates.iter().map(|u| &u.trace).collect::<Vec<_>>());
    }
    assert_eq!(csv(&s, live.turns()), csv(&s, restored.turns()));
}

#[test]
fn restore_rejects_gaps() {
    let s = scenario();
    let mut turns = run_scripted_session(s.clone(), &script("neutral")[..3], 0, &Backends::hermetic()).unwrap();
    turns.remove(1);
    assert!(Session::restore(s, 0, turns).is_err());
}

#[test]
fn trajectory_export_shape() {
    let s = scenario();
    let fresh = csv(&s, &[]);
    let lines: Vec<&str> = fresh.lines().collect();
    assert_eq!(lines[0], "turn,model,axis,state,prob_0,prob_1,prob_2,prob_3,prob_4");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("0,user,agency,2,"));
    assert!(lines[3].starts_with("0,assistant,agency,4,"));
    assert!(lines[4].starts_with("0,assistant,communion,0,"));

    let turns = run_scripted_session(s.clone(), &script("neutral")[..3], 0, &Backends::hermetic()).unwrap();
    let rows = trajectory_rows(&s, &turns).unwrap();
    assert_eq!(rows.len(), 4 * 4);
    assert!(rows.iter().all(|r| (r.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9));
}

#[test]
fn pinned_communal_trajectory() {
    let s = scenario();
    let turns = run_scripted_session(s.clone(), &script("communal"), 7, &Backends::hermetic()).unwrap();
    let golden = std::fs::read_to_string(format!("{ROOT}/fixtures/golden/communal_seed7.csv")).unwrap();
    assert_eq!(csv(&s, &turns), golden);
    let last = turns.last().unwrap();
    assert_eq!(last.update("assistant", "communion").unwrap().trace.new_state, 0);
}

#[test]
fn unlinked_assistant_axis_uses_analyzer() {
    let mut v: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(format!("{ROOT}/scenarios/herr_schneider_en.json")).unwrap(),
    )
    .unwrap();
    v["links"].as_array_mut().unwrap().truncate(1);
    let s = Arc::new(Scenario::from_json(&v.to_string()).unwrap());
    let mut session = Session::new(s, 0).unwrap();
    let trace = session
        .process_user_message(&Backends::hermetic(), "Thank you, that is kind of you.")
        .unwrap();
    let communion = trace.update("assistant", "communion").unwrap();
    assert_eq!(communion.source, OutsideSource::Analyzer { score: 9 });
    assert_eq!(communion.outside, Some(ProbVector::one_hot(5, 4).unwrap()));
}
