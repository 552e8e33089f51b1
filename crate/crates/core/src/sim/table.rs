//! Capability export: one record per time step in a tab-delimited text
//! table with a header row naming the columns. Used by plotting and by
//! the clustering stage.

use super::{Capability, FeasibilityReport, SimError};
use crate::textio::{fmt_f64, parse_f64};

impl Capability {
    /// Column names: `t`, per-joint positions `q0..`, per-joint
    /// velocities `qd0..`, end effector `ee_x ee_y ee_z`, then
    /// `base_x base_y base_theta` when a base exists.
    pub fn table_header(&self) -> Vec<String> {
        let mut cols = vec!["t".to_string()];
        for i in 0..self.n_joints {
            cols.push(format!("q{}", i));
        }
        for i in 0..self.n_joints {
            cols.push(format!("qd{}", i));
        }
        cols.extend(["ee_x", "ee_y", "ee_z"].map(String::from));
        if self.base_poses.is_some() {
            cols.extend(["base_x", "base_y", "base_theta"].map(String::from));
        }
        cols
    }

    /// Serialize to the delimited table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.table_header().join("\t"));
        out.push('\n');
        for k in 0..self.len() {
            let mut row: Vec<String> = Vec::with_capacity(2 * self.n_joints + 7);
            row.push(fmt_f64(self.times[k]));
            for v in self.positions_at(k) {
                row.push(fmt_f64(*v));
            }
            for v in self.velocities_at(k) {
                row.push(fmt_f64(*v));
            }
            for v in self.end_effector[k] {
                row.push(fmt_f64(v));
            }
            if let Some(bases) = &self.base_poses {
                for v in bases[k] {
                    row.push(fmt_f64(v));
                }
            }
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        out
    }

    /// Parse a table produced by [`Self::to_table`].
    pub fn from_table(text: &str) -> Result<Capability, SimError> {
        let mut lines = text.lines();
        let header: Vec<&str> =
            lines.next().ok_or_else(|| SimError::InvalidSpec("empty capability table".into()))?.split('\t').collect();
        let n_joints = header.iter().filter(|c| c.starts_with('q') && !c.starts_with("qd")).count();
        let has_base = header.contains(&"base_x");
        let expected = 1 + 2 * n_joints + 3 + if has_base { 3 } else { 0 };
        if header.len() != expected {
            return Err(SimError::InvalidSpec(format!(
                "capability table header has {} columns, expected {}",
                header.len(),
                expected
            )));
        }
        let mut cap = Capability {
            n_joints,
            dt: 0.0,
            times: Vec::new(),
            joint_positions: Vec::new(),
            joint_velocities: Vec::new(),
            end_effector: Vec::new(),
            base_poses: if has_base { Some(Vec::new()) } else { None },
            source: None,
            report: FeasibilityReport::default(),
        };
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let cells: Vec<f64> = line
                .split('\t')
                .map(|c| parse_f64(c).map_err(SimError::InvalidSpec))
                .collect::<Result<_, _>>()?;
            if cells.len() != expected {
                return Err(SimError::InvalidSpec(format!(
                    "capability table row has {} cells, expected {}",
                    cells.len(),
                    expected
                )));
            }
            cap.times.push(cells[0]);
            cap.joint_positions.extend_from_slice(&cells[1..1 + n_joints]);
            cap.joint_velocities.extend_from_slice(&cells[1 + n_joints..1 + 2 * n_joints]);
            let e = 1 + 2 * n_joints;
            cap.end_effector.push([cells[e], cells[e + 1], cells[e + 2]]);
            if let Some(bases) = cap.base_poses.as_mut() {
                bases.push([cells[e + 3], cells[e + 4], cells[e + 5]]);
            }
        }
        if cap.times.len() >= 2 {
            cap.dt = cap.times[1] - cap.times[0];
        }
        Ok(cap)
    }
}
