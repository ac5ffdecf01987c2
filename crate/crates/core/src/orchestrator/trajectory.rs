use std::io::Write;

use serde::{Deserialize, Serialize};

use super::scenario::{ModelDefinition, Scenario};
use super::session::TurnTrace;
use crate::axis::AxisError;

/// State of one axis after a turn; turn 0 is the session start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub turn: u32,
    pub model: String,
    pub axis: String,
    pub state: usize,
    /// Carried state probabilities.
    pub probs: Vec<f64>,
}

/// One row per axis for the initial state and for every turn, user model
/// first, axes in declared order.
pub fn trajectory_rows(scenario: &Scenario, turns: &[TurnTrace]) -> Result<Vec<TrajectoryRow>, AxisError> {
    let models: [&ModelDefinition; 2] = [scenario.user(), scenario.assistant()];
    let mut rows = Vec::new();
    for model in models {
        for axis in &model.axes {
            let initial = axis.config.initial_state()?;
            rows.push(TrajectoryRow {
                turn: 0,
                model: model.name.clone(),
                axis: axis.name.clone(),
                state: initial.current,
                probs: initial.carried_probs.into_inner(),
            });
        }
    }
    for turn in turns {
        for model in models {
            for axis in &model.axes {
                if let Some(update) = turn.update(&model.name, &axis.name) {
                    rows.push(TrajectoryRow {
                        turn: turn.turn,
                        model: model.name.clone(),
                        axis: axis.name.clone(),
                        state: update.trace.new_state,
                        probs: update.trace.new_carried_probs.as_slice().to_vec(),
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Writes `turn,model,axis,state,prob_0..prob_{k-1}` CSV. Rows of axes with
/// fewer states than the widest axis leave the extra columns empty.
pub fn write_trajectory_csv<W: Write>(rows: &[TrajectoryRow], out: W) -> csv::Result<()> {
    let width = rows.iter().map(|r| r.probs.len()).max().unwrap_or(0);
    let mut writer = csv::Writer::from_writer(out);
    let mut header = vec!["turn".to_string(), "model".into(), "axis".into(), "state".into()];
    header.extend((0..width).map(|i| format!("prob_{i}")));
    writer.write_record(&header)?;
    for row in rows {
        let mut record = vec![
            row.turn.to_string(),
            row.model.clone(),
            row.axis.clone(),
            row.state.to_string(),
        ];
        record.extend((0..width).map(|i| row.probs.get(i).map(f64::to_string).unwrap_or_default()));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut buf = Vec::new();
    write_trajectory_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV of UTF-8 fields")
}
