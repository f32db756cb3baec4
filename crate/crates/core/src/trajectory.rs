//! Time series of grid-function snapshots and their on-disk format.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::grid::{Grid1D, GridError, GridFunction};

/// Snapshot times, always strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SnapshotSchedule {
    /// `t_j = t0·r^j` for `count` points from `t0` to `t_end` inclusive.
    Geometric { t0: f64, count: usize },
    /// Evenly spaced every `interval`.
    Uniform { interval: f64 },
    Explicit { times: Vec<f64> },
}

impl SnapshotSchedule {
    /// Step indices `j ≥ 1` at which to record, for step `dt` and final time
    /// `t_end`. The final step is always included.
    pub fn steps(&self, dt: f64, t_end: f64) -> Vec<usize> {
        let total = (t_end / dt).round() as usize;
        let times: Vec<f64> = match self {
            SnapshotSchedule::Geometric { t0, count } => {
                let count = (*count).max(2);
                let t0 = t0.min(t_end).max(dt);
                let ratio = (t_end / t0).powf(1.0 / (count - 1) as f64);
                (0..count).map(|j| t0 * ratio.powi(j as i32)).collect()
            }
            SnapshotSchedule::Uniform { interval } => {
                let m = (t_end / interval).floor() as usize;
                (1..=m).map(|j| j as f64 * interval).collect()
            }
            SnapshotSchedule::Explicit { times } => times.clone(),
        };
        let mut steps: Vec<usize> = times
            .iter()
            .filter(|&&t| t > 0.0 && t <= t_end + 0.5 * dt)
            .map(|&t| ((t / dt).round() as usize).clamp(1, total.max(1)))
            .collect();
        steps.push(total.max(1));
        steps.sort_unstable();
        steps.dedup();
        steps
    }
}

impl Default for SnapshotSchedule {
    fn default() -> Self {
        SnapshotSchedule::Geometric { t0: 1.0, count: 40 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<GridFunction>,
    /// Scheme, step, grid, flux and problem identifiers.
    pub meta: serde_json::Value,
    /// `dx·Σ w` at each snapshot (periodic rectangle rule).
    pub conserved_mass: Vec<f64>,
}

impl Trajectory {
    pub fn new(meta: serde_json::Value) -> Self {
        Self { times: Vec::new(), snapshots: Vec::new(), meta, conserved_mass: Vec::new() }
    }

    pub fn push(&mut self, t: f64, snapshot: GridFunction) {
        debug_assert!(self.times.last().is_none_or(|&last| t > last));
        let mass = snapshot.values().iter().sum::<f64>() * snapshot.grid().dx();
        self.times.push(t);
        self.snapshots.push(snapshot);
        self.conserved_mass.push(mass);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &GridFunction)> {
        self.times.last().copied().zip(self.snapshots.last())
    }

    /// Largest `|mass(t) − mass(t₀)|`.
    pub fn mass_drift(&self) -> f64 {
        let Some(&m0) = self.conserved_mass.first() else {
            return 0.0;
        };
        self.conserved_mass.iter().map(|m| (m - m0).abs()).fold(0.0, f64::max)
    }

    pub fn grid(&self) -> Option<&Grid1D> {
        self.snapshots.first().map(|s| s.grid())
    }

    /// Write `meta.json` and `snap_NNNN.csv` files into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), GridError> {
        fs::create_dir_all(dir).map_err(io)?;
        let meta = serde_json::json!({
            "meta": self.meta,
            "times": self.times,
            "conserved_mass": self.conserved_mass,
            "snapshots": (0..self.len()).map(snap_name).collect::<Vec<_>>(),
        });
        let text = serde_json::to_string_pretty(&meta).map_err(|e| GridError::InvalidInput(e.to_string()))?;
        fs::write(dir.join("meta.json"), text + "\n").map_err(io)?;
        for (i, s) in self.snapshots.iter().enumerate() {
            let f = fs::File::create(dir.join(snap_name(i))).map_err(io)?;
            s.write_csv(std::io::BufWriter::new(f))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, GridError> {
        let text = fs::read_to_string(dir.join("meta.json")).map_err(io)?;
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| GridError::InvalidInput(e.to_string()))?;
        let times: Vec<f64> = serde_json::from_value(v["times"].clone()).map_err(|e| GridError::InvalidInput(e.to_string()))?;
        let mut out = Trajectory::new(v["meta"].clone());
        for (i, &t) in times.iter().enumerate() {
            let f = fs::File::open(dir.join(snap_name(i))).map_err(io)?;
            out.push(t, GridFunction::read_csv(std::io::BufReader::new(f))?);
        }
        Ok(out)
    }
}

fn snap_name(i: usize) -> String {
    format!("snap_{i:04}.csv")
}

fn io(e: std::io::Error) -> GridError {
    GridError::InvalidInput(format!("i/o: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_steps_are_increasing_and_end_at_t() {
        let s = SnapshotSchedule::Geometric { t0: 1.0, count: 40 };
        let steps = s.steps(0.02, 80.0);
        assert_eq!(*steps.first().unwrap(), 50);
        assert_eq!(*steps.last().unwrap(), 4000);
        assert!(steps.windows(2).all(|w| w[0] < w[1]));
        let u = SnapshotSchedule::Uniform { interval: 0.5 }.steps(0.1, 2.0);
        assert_eq!(u, vec![5, 10, 15, 20]);
    }

    #[test]
    fn save_load_round_trip() {
        let grid = Grid1D::symmetric(5.0, 11).unwrap();
        let mut tr = Trajectory::new(serde_json::json!({"scheme": "test"}));
        for j in 1..=3 {
            tr.push(j as f64, GridFunction::from_fn(grid, |x| (j as f64 * x).sin() * 1e-3).unwrap());
        }
        let dir = tempfile::tempdir().unwrap();
        tr.save(dir.path()).unwrap();
        assert!(dir.path().join("snap_0002.csv").exists());
        let back = Trajectory::load(dir.path()).unwrap();
        assert_eq!(back.times, tr.times);
        assert_eq!(back.snapshots, tr.snapshots);
        assert_eq!(back.meta["scheme"], "test");
    }
}
