//! Linked user and assistant personality models driven turn by turn:
//! analyze the user message, update the user axes, update the assistant
//! axes from their links, assemble the system prompt and generate a reply.

mod backends;
mod generation;
mod model;
mod scenario;
mod session;
mod trajectory;

pub use backends::{
    parse_analyzer_kind, parse_generation_kind, BackendError, Backends, ENV_ANALYZER_BACKEND,
    ENV_GENERATION_BACKEND,
};
pub use generation::{
    build_messages, generate_reply, validate_history, EchoGenerator, GenerationRequest,
    RemoteGenerator, ReplyGenerator,
};
pub use model::{assemble_system_prompt, PersonaAxis, PersonaModel};
pub use scenario::{
    AnalyzerKind, AnalyzerSettings, AxisDefinition, AxisLink, AxisRef, Correlation,
    GenerationKind, GenerationSettings, ModelDefinition, Scenario, ScenarioError,
};
pub use session::{
    run_scripted_session, AxisScore, AxisSnapshot, AxisUpdate, ModelSnapshot, OutsideSource,
    PendingTurn, RestoreError, Session, StateSnapshot, TurnError, TurnTrace,
};
pub use trajectory::{trajectory_csv, trajectory_rows, write_trajectory_csv, TrajectoryRow};
