//! Output records and their CSV projections.
//!
//! CSV bodies are deterministic: fixed column order, floats at 17
//! significant digits (round-trip exact for f64), LF line endings. JSON
//! output mirrors the CSV fields by serializing the same row structs and
//! adds a metadata object (tool version, noise-generator id).

use serde::{Serialize, Serializer};

use crate::attitude::EulerAngles;
use crate::geometry::Pose;
use crate::simulation::{Scenario, SweepResult, TrialStatistics, GENERATOR_ID};

/// Format a float with 17 significant digits so that parsing the text
/// recovers the exact f64.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn ser_maybe_inf<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    // JSON has no inf literal; keep noiseless markers readable.
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("inf")
    }
}

/// Run provenance attached to JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub generator: &'static str,
}

impl RunMetadata {
    pub fn current() -> Self {
        RunMetadata {
            tool: "planarpose",
            version: env!("CARGO_PKG_VERSION"),
            generator: GENERATOR_ID,
        }
    }
}

/// A solved pose: rotation entries, translation, attitude angles, and the
/// objective before/after refinement (equal when refinement was not run).
#[derive(Debug, Clone, Serialize)]
pub struct ResultRecord {
    pub method: String,
    pub r11: f64,
    pub r12: f64,
    pub r13: f64,
    pub r21: f64,
    pub r22: f64,
    pub r23: f64,
    pub r31: f64,
    pub r32: f64,
    pub r33: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub heading: f64,
    pub pitch: f64,
    pub roll: f64,
    pub objective_p4p: f64,
    pub objective_final: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub const SOLVE_HEADER: &str = "method,r11,r12,r13,r21,r22,r23,r31,r32,r33,t1,t2,t3,heading,pitch,roll,objective_p4p,objective_final,iterations,converged";

impl ResultRecord {
    pub fn new(
        method: &str,
        pose: &Pose,
        euler: &EulerAngles,
        objective_p4p: f64,
        objective_final: f64,
        iterations: usize,
        converged: bool,
    ) -> Self {
        let m = pose.rotation.matrix();
        ResultRecord {
            method: method.to_string(),
            r11: m.at(0, 0),
            r12: m.at(0, 1),
            r13: m.at(0, 2),
            r21: m.at(1, 0),
            r22: m.at(1, 1),
            r23: m.at(1, 2),
            r31: m.at(2, 0),
            r32: m.at(2, 1),
            r33: m.at(2, 2),
            t1: pose.translation.x,
            t2: pose.translation.y,
            t3: pose.translation.z,
            heading: euler.heading,
            pitch: euler.pitch,
            roll: euler.roll,
            objective_p4p,
            objective_final,
            iterations,
            converged,
        }
    }

    pub fn csv_row(&self) -> String {
        let floats = [
            self.r11, self.r12, self.r13, self.r21, self.r22, self.r23, self.r31, self.r32,
            self.r33, self.t1, self.t2, self.t3, self.heading, self.pitch, self.roll,
            self.objective_p4p, self.objective_final,
        ];
        let mut row = self.method.clone();
        for v in floats {
            row.push(',');
            row.push_str(&fmt_float(v));
        }
        row.push_str(&format!(",{},{}", self.iterations, self.converged));
        row
    }
}

/// One `simulate` output row (one per method).
#[derive(Debug, Clone, Serialize)]
pub struct SimulationRow {
    pub method: String,
    pub trials: usize,
    pub failures: usize,
    pub mean_t1: f64,
    pub mean_t2: f64,
    pub mean_t3: f64,
    pub var_t1: f64,
    pub var_t2: f64,
    pub var_t3: f64,
    #[serde(serialize_with = "ser_maybe_inf")]
    pub snr_db: f64,
    pub seed: u64,
}

pub const SIMULATE_HEADER: &str =
    "method,trials,failures,mean_t1,mean_t2,mean_t3,var_t1,var_t2,var_t3,snr_db,seed";

impl SimulationRow {
    pub fn new(method: &str, stats: &TrialStatistics, scenario: &Scenario) -> Self {
        SimulationRow {
            method: method.to_string(),
            trials: scenario.trials,
            failures: stats.failures,
            mean_t1: stats.mean_t.x,
            mean_t2: stats.mean_t.y,
            mean_t3: stats.mean_t.z,
            var_t1: stats.var_t.x,
            var_t2: stats.var_t.y,
            var_t3: stats.var_t.z,
            snr_db: scenario.snr_db,
            seed: scenario.seed,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.method,
            self.trials,
            self.failures,
            fmt_float(self.mean_t1),
            fmt_float(self.mean_t2),
            fmt_float(self.mean_t3),
            fmt_float(self.var_t1),
            fmt_float(self.var_t2),
            fmt_float(self.var_t3),
            fmt_float(self.snr_db),
            self.seed
        )
    }
}

/// One `sweep` output row (one per SNR level per method).
#[derive(Debug, Clone, Serialize)]
pub struct SweepCsvRow {
    pub snr_db: f64,
    pub method: String,
    pub trials: usize,
    pub failures: usize,
    pub mean_t1: f64,
    pub mean_t2: f64,
    pub mean_t3: f64,
    pub var_t1: f64,
    pub var_t2: f64,
    pub var_t3: f64,
    pub seed: u64,
}

pub const SWEEP_HEADER: &str =
    "snr_db,method,trials,failures,mean_t1,mean_t2,mean_t3,var_t1,var_t2,var_t3,seed";

impl SweepCsvRow {
    fn from_stats(snr_db: f64, method: &str, stats: &TrialStatistics, trials: usize, seed: u64) -> Self {
        SweepCsvRow {
            snr_db,
            method: method.to_string(),
            trials,
            failures: stats.failures,
            mean_t1: stats.mean_t.x,
            mean_t2: stats.mean_t.y,
            mean_t3: stats.mean_t.z,
            var_t1: stats.var_t.x,
            var_t2: stats.var_t.y,
            var_t3: stats.var_t.z,
            seed,
        }
    }

    /// Flatten a sweep into rows ordered by SNR, analytic before refined.
    pub fn from_sweep(result: &SweepResult, trials: usize, seed: u64) -> Vec<SweepCsvRow> {
        let mut rows = Vec::with_capacity(result.rows.len() * 2);
        for row in &result.rows {
            rows.push(SweepCsvRow::from_stats(row.snr_db, "p4p", &row.p4p, trials, seed));
            rows.push(SweepCsvRow::from_stats(row.snr_db, "refined", &row.refined, trials, seed));
        }
        rows
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt_float(self.snr_db),
            self.method,
            self.trials,
            self.failures,
            fmt_float(self.mean_t1),
            fmt_float(self.mean_t2),
            fmt_float(self.mean_t3),
            fmt_float(self.var_t1),
            fmt_float(self.var_t2),
            fmt_float(self.var_t3),
            self.seed
        )
    }
}

/// Assemble a CSV document: header, rows, LF endings, trailing newline.
pub fn csv_document<I: IntoIterator<Item = String>>(header: &str, rows: I) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out
}
