use std::path::Path;

use crate::error::Result;
use crate::game::{relative_state_error, Trajectory};
use crate::linalg::Vector;
use crate::nash::{fbne_trajectory_lq, solve_olne_lq};
use crate::zoo::{build_lq_pursuit, PursuitVariant};

/// FBNE and OLNE state trajectories of one pursuit variant.
#[derive(Debug, Clone)]
pub struct InfoPatternComparison {
    pub variant: PursuitVariant,
    pub fbne: Trajectory,
    pub olne: Trajectory,
    /// `||fbne - olne|| / ||fbne||` over stacked states.
    pub relative_gap: f64,
}

pub fn compare_info_patterns(variant: PursuitVariant, horizon: usize, x1: &Vector) -> Result<InfoPatternComparison> {
    let game = build_lq_pursuit(variant, horizon)?;
    let fbne = fbne_trajectory_lq(&game, x1)?;
    let olne = solve_olne_lq(&game, x1)?.trajectory;
    let relative_gap = relative_state_error(&olne, &fbne);
    Ok(InfoPatternComparison { variant, fbne, olne, relative_gap })
}

/// `model, t, coordinate_index, fbne, olne, gap` with `gap = |fbne - olne|`.
pub fn write_comparison_csv(path: &Path, comparisons: &[InfoPatternComparison]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["model", "t", "coordinate_index", "fbne", "olne", "gap"])?;
    for c in comparisons {
        for (t, (a, b)) in c.fbne.states.iter().zip(&c.olne.states).enumerate() {
            for k in 0..a.len() {
                w.write_record([
                    c.variant.model_name().to_string(),
                    t.to_string(),
                    k.to_string(),
                    format!("{}", a[k]),
                    format!("{}", b[k]),
                    format!("{}", (a[k] - b[k]).abs()),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
