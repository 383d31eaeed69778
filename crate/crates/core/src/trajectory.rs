//! Activity motion trajectories in workspace coordinates.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::format_sig;
use crate::geometry::WorkspaceVector;

pub const TRAJECTORY_HEADER: [&str; 4] = ["cycle_pct", "delta_a_mm", "theta_a_deg", "theta_sep_deg"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub cycle_pct: f64,
    pub workspace: WorkspaceVector,
    /// mm.
    pub delta_z: Option<f64>,
    /// N.
    pub fz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub label: String,
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn new(label: impl Into<String>, samples: Vec<TrajectorySample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("trajectory has no samples".into()));
        }
        for (k, s) in samples.iter().enumerate() {
            if !(0.0..=100.0).contains(&s.cycle_pct) {
                return Err(Error::InvalidInput(format!(
                    "sample {k}: cycle_pct {} outside [0, 100]",
                    s.cycle_pct
                )));
            }
            if k > 0 && s.cycle_pct <= samples[k - 1].cycle_pct {
                return Err(Error::InvalidInput(format!(
                    "sample {k}: cycle_pct must increase strictly"
                )));
            }
        }
        Ok(Self {
            label: label.into(),
            samples,
        })
    }

    /// Evenly spaced cycle percentages over [0, 100] with workspace vectors
    /// from `f(cycle_pct)`.
    pub fn sampled(
        label: impl Into<String>,
        steps: usize,
        mut f: impl FnMut(f64) -> Result<WorkspaceVector>,
    ) -> Result<Self> {
        if steps < 2 {
            return Err(Error::InvalidInput(
                "a sampled trajectory needs at least 2 steps".into(),
            ));
        }
        let samples = (0..steps)
            .map(|i| {
                let pct = 100.0 * i as f64 / (steps - 1) as f64;
                Ok(TrajectorySample {
                    cycle_pct: pct,
                    workspace: f(pct)?,
                    delta_z: None,
                    fz: None,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(label, samples)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Reads `cycle_pct,delta_a_mm,theta_a_deg,theta_sep_deg[,delta_z_mm][,fz_n]`.
    pub fn read_csv<R: Read>(label: impl Into<String>, input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header.len() < 4 || header[..4] != TRAJECTORY_HEADER {
            return Err(Error::Format {
                line: Some(1),
                message: format!("expected header starting {}", TRAJECTORY_HEADER.join(",")),
            });
        }
        let col_dz = header.iter().position(|h| h == "delta_z_mm");
        let col_fz = header.iter().position(|h| h == "fz_n");
        if let Some(h) = header[4..].iter().find(|h| *h != "delta_z_mm" && *h != "fz_n") {
            return Err(Error::Format {
                line: Some(1),
                message: format!("unknown column {h:?}"),
            });
        }
        let mut samples = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line());
            let num = |k: usize| -> Result<f64> {
                let raw = rec.get(k).unwrap_or("");
                raw.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::Format {
                        line,
                        message: format!("column {} is not a finite number: {raw:?}", header[k]),
                    })
            };
            let workspace = WorkspaceVector::from_degrees(num(1)?, num(2)?, num(3)?).map_err(|e| Error::Format {
                line,
                message: e.to_string(),
            })?;
            samples.push(TrajectorySample {
                cycle_pct: num(0)?,
                workspace,
                delta_z: col_dz.map(num).transpose()?,
                fz: col_fz.map(num).transpose()?,
            });
        }
        Self::new(label, samples).map_err(|e| Error::Format {
            line: None,
            message: e.to_string(),
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let has_dz = self.samples.iter().any(|s| s.delta_z.is_some());
        let has_fz = self.samples.iter().any(|s| s.fz.is_some());
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = TRAJECTORY_HEADER.to_vec();
        if has_dz {
            header.push("delta_z_mm");
        }
        if has_fz {
            header.push("fz_n");
        }
        w.write_record(&header)?;
        for s in &self.samples {
            let mut row = vec![
                format_sig(s.cycle_pct),
                format_sig(s.workspace.delta_a),
                format_sig(s.workspace.theta_a.to_degrees()),
                format_sig(s.workspace.theta_sep.to_degrees()),
            ];
            if has_dz {
                row.push(format_sig(s.delta_z.unwrap_or(0.0)));
            }
            if has_fz {
                row.push(format_sig(s.fz.unwrap_or(0.0)));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_with_optional_columns() {
        let text =
            "cycle_pct,delta_a_mm,theta_a_deg,theta_sep_deg,fz_n\n0,0.1,0.5,20,100\n50,0.2,1,20,150\n100,0,0,0,90\n";
        let t = Trajectory::read_csv("walk", text.as_bytes()).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.samples[1].fz, Some(150.0));
        assert_eq!(t.samples[1].delta_z, None);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = Trajectory::read_csv("walk", buf.as_slice()).unwrap();
        for (a, b) in t.samples.iter().zip(&back.samples) {
            assert!((a.workspace.theta_a - b.workspace.theta_a).abs() < 1e-12);
            assert_eq!(a.fz, b.fz);
        }
    }

    #[test]
    fn rejects_non_increasing_cycle() {
        let text = "cycle_pct,delta_a_mm,theta_a_deg,theta_sep_deg\n0,0,0,0\n0,0,0,0\n";
        assert!(matches!(
            Trajectory::read_csv("x", text.as_bytes()),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn bad_number_names_line() {
        let text = "cycle_pct,delta_a_mm,theta_a_deg,theta_sep_deg\n0,0,0,0\n10,abc,0,0\n";
        match Trajectory::read_csv("x", text.as_bytes()) {
            Err(Error::Format { line, .. }) => assert_eq!(line, Some(3)),
            other => panic!("{other:?}"),
        }
    }
}
