use persona_core::axis::{SelectionMode, Weights};
use persona_core::orchestrator::{
    AnalyzerKind, AxisRef, Correlation, GenerationKind, Scenario, ScenarioError, Session,
};
use persona_core::analyzer::PromptVariant;
use std::sync::Arc;

const ROOT: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../..");

fn load(name: &str) -> Scenario {
    Scenario::load(format!("{ROOT}/scenarios/{name}.json")).unwrap()
}

fn raw(name: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(format!("{ROOT}/scenarios/{name}.json")).unwrap()).unwrap()
}

fn rejects(mutate: impl FnOnce(&mut serde_json::Value)) -> String {
    let mut v = raw("herr_schneider");
    mutate(&mut v);
    match Scenario::from_json(&v.to_string()) {
        Err(e) => e.to_string(),
        Ok(_) => panic!("scenario was accepted"),
    }
}

#[test]
fn study_parameters() {
    let s = load("herr_schneider");
    let assistant = Weights::new(0.1, 0.5, 0.3, 0.1);
    let user = Weights::new(0.1, 0.5, 0.2, 0.2);
    for axis in &s.assistant().axes {
        assert_eq!(axis.config.weights, assistant);
        assert_eq!(axis.config.sigma, 0.1);
        assert_eq!(axis.config.mode, SelectionMode::Probabilistic);
        assert_eq!(axis.config.states, 5);
        assert_eq!(axis.state_prompts.len(), 5);
    }
    for axis in &s.user().axes {
        assert_eq!(axis.config.weights, user);
        assert_eq!(axis.config.sigma, 0.6);
        assert_eq!(axis.config.mode, SelectionMode::Deterministic);
        assert_eq!(axis.config.default_state, 2);
    }
    assert_eq!(s.assistant().axis("agency").unwrap().config.default_state, 4);
    assert_eq!(s.assistant().axis("communion").unwrap().config.default_state, 0);

    let link = |axis: &str| {
        s.link_into(&AxisRef {
            model: "assistant".into(),
            axis: axis.into(),
        })
        .unwrap()
    };
    assert_eq!(link("agency").correlation, Correlation::Negative);
    assert_eq!(link("agency").source.axis, "agency");
    assert_eq!(link("communion").correlation, Correlation::Positive);
    assert_eq!(s.analyzer.backend, AnalyzerKind::Remote);
    assert_eq!(s.analyzer.prompt_variant, PromptVariant::Long);
    assert_eq!(s.analyzer.llm.model.as_deref(), Some("gpt-4.1-mini"));
    assert_eq!(s.generation.backend, GenerationKind::Remote);
    assert_eq!(s.generation.llm.model.as_deref(), Some("gpt-4.1"));
}

#[test]
fn initial_session_states() {
    let session = Session::new(Arc::new(load("herr_schneider")), 0).unwrap();
    let snap = session.snapshot();
    assert_eq!(snap.state("assistant", "agency"), Some(4));
    assert_eq!(snap.state("assistant", "communion"), Some(0));
    assert_eq!(snap.state("user", "agency"), Some(2));
    assert_eq!(snap.state("user", "communion"), Some(2));
    assert_eq!(snap.turn, 0);
    assert!(snap.models.iter().flat_map(|m| &m.axes).all(|a| a.transition_probs.is_none()));
}

#[test]
fn study_prompts() {
    let de = load("herr_schneider");
    let en = load("herr_schneider_en");
    assert!(de.role_description.starts_with("Rolle\n- Du bist ein Patient namens Herr Schneider"));
    assert!(en.role_description.starts_with("Role\n- You are a patient named Herr Schneider"));
    for axis in &de.assistant().axes {
        assert!(axis.state_prompts.iter().all(|p| p.starts_with("In deiner nächsten Nachricht:")));
    }
    for axis in &en.assistant().axes {
        assert!(axis.state_prompts.iter().all(|p| p.starts_with("In your next message:")));
    }
    assert!(de.assistant().axis("agency").unwrap().state_prompts[4].contains("Ich mache das nur, wenn"));
    assert_eq!(de.models, en.models.iter().map(|m| {
        let mut m = m.clone();
        for (a, b) in m.axes.iter_mut().zip(&de.model(&m.name).unwrap().axes) {
            a.state_prompts = b.state_prompts.clone();
        }
        m
    }).collect::<Vec<_>>());
}

#[test]
fn loads_directory() {
    let all = Scenario::load_dir(format!("{ROOT}/scenarios")).unwrap();
    let ids: Vec<_> = all.iter().map(|s| s.scenario_id.as_str()).collect();
    assert_eq!(ids, ["herr_schneider", "herr_schneider_en"]);
}

#[test]
fn invalid_scenarios() {
    assert!(rejects(|v| v["links"][0]["target"]["axis"] = "openness".into()).contains("does not exist"));
    assert!(rejects(|v| v["links"][0]["target"] = v["links"][0]["source"].clone()).contains("linked to itself"));
    assert!(rejects(|v| v["links"][1]["target"]["axis"] = "agency".into()).contains("more than one incoming link"));
    assert!(rejects(|v| v["models"][1]["axes"][0]["weights"]["outside"] = 0.5.into()).contains("sum"));
    assert!(rejects(|v| v["models"][1]["axes"][0]["state_prompts"].as_array_mut().unwrap().pop().map(|_| ())
        .unwrap()).contains("4 state prompts for 5 states"));
    assert!(rejects(|v| v["models"][1]["axes"][1]["state_prompts"] = serde_json::json!([])).contains("needs one prompt per state"));
    assert!(rejects(|v| v["models"][0]["axes"][1]["name"] = "agency".into()).contains("duplicate axis"));
    assert!(rejects(|v| {
        v["models"][0]["axes"][0]["name"] = "openness".into();
        v["links"] = serde_json::json!([]);
    })
    .contains("no long analyzer prompt for axis `openness`"));
    assert!(rejects(|v| v["models"][1]["axes"][0]["default_state"] = 5.into()).contains("assistant.agency"));
    assert!(rejects(|v| v["assistant_model"] = "user".into()).contains("must differ"));
    assert!(rejects(|v| v["analyzer"]["backend"] = "replay".into()).contains("prediction file"));
    assert!(matches!(
        Scenario::from_json("{\"scenario_id\": 1}"),
        Err(ScenarioError::Json(_))
    ));
}
