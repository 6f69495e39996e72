use std::path::Path;

use nalgebra::Quaternion;
use serde::{Deserialize, Serialize};

use super::write_atomic;
use crate::error::{Error, Result};
use crate::geometry::{Pose, Trajectory};

const COLUMNS: [&str; 8] = ["t_s", "tx_m", "ty_m", "tz_m", "qw", "qx", "qy", "qz"];
const QUATERNION_SLACK: f64 = 1e-3;

#[derive(Serialize, Deserialize)]
struct Row {
    t_s: f64,
    tx_m: f64,
    ty_m: f64,
    tz_m: f64,
    qw: f64,
    qx: f64,
    qy: f64,
    qz: f64,
}

/// Parses camera-to-world poses. Quaternions within `1e-3` of unit norm
/// are renormalized; anything further off is rejected, as are
/// non-increasing times. The reference pose is the middle one.
pub fn parse_trajectory(text: &str, origin: &Path) -> Result<Trajectory> {
    let bad = |reason: String| Error::format(origin, reason);
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != COLUMNS {
        return Err(bad(format!("expected header {}", COLUMNS.join(","))));
    }
    let mut poses: Vec<Pose> = Vec::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| bad(format!("line {line}: {e}")))?;
        let norm = Quaternion::new(row.qw, row.qx, row.qy, row.qz).norm();
        if !((norm - 1.0).abs() <= QUATERNION_SLACK) {
            return Err(bad(format!("line {line}: quaternion norm {norm} is not close to 1")));
        }
        let q = [row.qw, row.qx, row.qy, row.qz].map(|v| v / norm);
        let pose =
            Pose::new(row.t_s, [row.tx_m, row.ty_m, row.tz_m], q).map_err(|e| bad(format!("line {line}: {e}")))?;
        if let Some(prev) = poses.last() {
            if !(pose.time > prev.time) {
                return Err(bad(format!("line {line}: time {} does not increase", pose.time)));
            }
        }
        poses.push(pose);
    }
    if poses.is_empty() {
        return Err(bad("no poses".into()));
    }
    Trajectory::with_mid_reference(poses)
}

pub fn load_trajectory(path: &Path) -> Result<Trajectory> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trajectory(&text, path)
}

pub fn write_trajectory(trajectory: &Trajectory, out: &mut dyn std::io::Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in trajectory.poses() {
        let q = p.rotation.into_inner();
        w.serialize(Row {
            t_s: p.time,
            tx_m: p.translation.x,
            ty_m: p.translation.y,
            tz_m: p.translation.z,
            qw: q.w,
            qx: q.i,
            qy: q.j,
            qz: q.k,
        })?;
    }
    w.flush()
}

pub fn save_trajectory(trajectory: &Trajectory, path: &Path) -> Result<()> {
    write_atomic(path, |w| write_trajectory(trajectory, w))
}
