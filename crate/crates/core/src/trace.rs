//! Step-by-step simulation traces and their CSV / JSON serialization.
//!
//! The CSV layout is one row per agent per step (distance to the proposal and
//! individual acceptance probability) followed by one group row per step
//! (`agent_id = -1`) carrying the group probability and the accepted flag, so
//! a trace with `S` steps over `n` agents yields `S * n + S` data rows. All
//! floats are printed with 17 significant digits so traces are diff-able.

use std::fs::File;
use std::io::{BufWriter, Write as IoWrite};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One synchronous step of the evolutionary scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord<P> {
    /// 1-based step counter.
    pub step: usize,
    pub positions: Vec<P>,
    pub proposal: P,
    /// Per-agent distance to the proposal.
    pub dists: Vec<f64>,
    /// Per-agent acceptance probabilities q_i.
    pub qs: Vec<f64>,
    /// Group acceptance probability (product of the q_i).
    pub group_probability: f64,
    pub accepted: bool,
}

/// Terminal state of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome<P> {
    Consensus { point: P, step: usize },
    MaxSteps { last_proposal: P },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace<P> {
    pub steps: Vec<StepRecord<P>>,
    pub outcome: Outcome<P>,
}

/// 17-significant-digit float formatting shared by every emitted artifact.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl<P> SimulationTrace<P> {
    pub fn accepted(&self) -> bool {
        matches!(self.outcome, Outcome::Consensus { .. })
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    /// Mean per-agent distance to the proposal at the given step (1-based).
    pub fn mean_dist_at(&self, step: usize) -> Option<f64> {
        let rec = self.steps.get(step.checked_sub(1)?)?;
        Some(rec.dists.iter().sum::<f64>() / rec.dists.len() as f64)
    }

    /// Mean per-agent acceptance probability at the given step (1-based).
    pub fn mean_q_at(&self, step: usize) -> Option<f64> {
        let rec = self.steps.get(step.checked_sub(1)?)?;
        Some(rec.qs.iter().sum::<f64>() / rec.qs.len() as f64)
    }

    /// Writes the CSV representation to an arbitrary sink.
    pub fn write_csv(&self, mut out: impl IoWrite) -> std::io::Result<()> {
        writeln!(out, "step,agent_id,dist_to_proposal,q_accept,P,accepted")?;
        for rec in &self.steps {
            for (i, (d, q)) in rec.dists.iter().zip(&rec.qs).enumerate() {
                writeln!(
                    out,
                    "{},{},{},{},,",
                    rec.step,
                    i,
                    format_float(*d),
                    format_float(*q)
                )?;
            }
            writeln!(
                out,
                "{},-1,,,{},{}",
                rec.step,
                format_float(rec.group_probability),
                rec.accepted
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("csv is ascii")
    }

    /// Writes the trace CSV to `dir/<stem>.csv` and a JSON summary (outcome,
    /// step count, final group probability, final point) to
    /// `dir/<stem>_summary.json`.
    pub fn emit(&self, dir: &Path, stem: &str) -> Result<()>
    where
        P: Serialize,
    {
        let io_err = |path: &Path| {
            let path = path.display().to_string();
            move |source: std::io::Error| Error::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;

        let csv_path = dir.join(format!("{stem}.csv"));
        let file = File::create(&csv_path).map_err(io_err(&csv_path))?;
        self.write_csv(BufWriter::new(file))
            .map_err(io_err(&csv_path))?;

        let summary = self.summary();
        let json_path = dir.join(format!("{stem}_summary.json"));
        let text = serde_json::to_string_pretty(&summary)
            .map_err(|e| Error::Config(format!("summary serialization: {e}")))?;
        std::fs::write(&json_path, text + "\n").map_err(io_err(&json_path))?;
        Ok(())
    }

    pub fn summary(&self) -> TraceSummary<&P> {
        let (outcome, point, consensus_step) = match &self.outcome {
            Outcome::Consensus { point, step } => ("consensus", point, Some(*step)),
            Outcome::MaxSteps { last_proposal } => ("max_steps", last_proposal, None),
        };
        TraceSummary {
            outcome,
            steps: self.steps.len(),
            consensus_step,
            final_group_probability: self.steps.last().map(|r| r.group_probability),
            point,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TraceSummary<P> {
    pub outcome: &'static str,
    pub steps: usize,
    pub consensus_step: Option<usize>,
    pub final_group_probability: Option<f64>,
    pub point: P,
}
