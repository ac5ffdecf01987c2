pub mod analyzer;
pub mod axis;
pub mod eval;
pub mod llm;
pub mod orchestrator;
