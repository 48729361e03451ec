use rand::Rng;

use crate::error::{GameError, Result};
use crate::experiment::config::{ExperimentConfig, ResolvedExperiment};
use crate::experiment::rng::{arm_stream, generalization_stream};
use crate::game::{apply_observation_with, ObservationSet, Trajectory};
use crate::ilq::ilqgames_solve;
use crate::linalg::Vector;

/// Index of one Monte Carlo arm in the noise grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArmKey {
    pub sigma_index: usize,
    pub seed_index: usize,
}

/// Noise-free expert trajectory and one noisy observation set.
#[derive(Debug, Clone)]
pub struct Expert {
    pub trajectory: Trajectory,
    pub observations: ObservationSet,
}

/// FBNE trajectory under the true parameters. Fails if the forward solver
/// does not converge.
pub fn expert_trajectory(config: &ExperimentConfig, resolved: &ResolvedExperiment) -> Result<Trajectory> {
    let model = &resolved.model;
    let result = ilqgames_solve(
        model.dynamics.as_ref(),
        &model.cost,
        &resolved.theta_true,
        &resolved.x1_true,
        None,
        &config.solver.forward_options(),
    )?;
    if !result.converged {
        let last = result.residuals.last().copied().unwrap_or(f64::NAN);
        return Err(GameError::NotConverged(format!(
            "expert forward solve stopped after {} iterations with step {last:.3e}",
            result.iterations
        )));
    }
    Ok(result.trajectory)
}

/// Noisy observations of `trajectory` for `arm`, drawn from the arm's stream.
pub fn observe_arm(
    config: &ExperimentConfig,
    resolved: &ResolvedExperiment,
    trajectory: &Trajectory,
    arm: ArmKey,
) -> Result<ObservationSet> {
    let sigma = *config
        .observation
        .sigmas
        .get(arm.sigma_index)
        .ok_or_else(|| GameError::Config(format!("noise level index {} out of range", arm.sigma_index)))?;
    if arm.seed_index >= config.observation.seeds_per_level {
        return Err(GameError::Config(format!("seed index {} out of range", arm.seed_index)));
    }
    let mut rng = arm_stream(config.seed, arm.sigma_index, arm.seed_index);
    apply_observation_with(trajectory, &resolved.observation_at(sigma), &mut rng)
}

/// Forward-solve the true game, mask to the observed stages and add the
/// arm's seeded noise.
pub fn generate_expert(config: &ExperimentConfig, arm: ArmKey) -> Result<Expert> {
    let resolved = config.resolve()?;
    let trajectory = expert_trajectory(config, &resolved)?;
    let observations = observe_arm(config, &resolved, &trajectory, arm)?;
    Ok(Expert { trajectory, observations })
}

/// Unseen initial states: `x1*` with each position coordinate shifted by a
/// uniform draw in `[-half_width, half_width]`.
pub fn generalization_starts(config: &ExperimentConfig, resolved: &ResolvedExperiment) -> Vec<Vector> {
    let mut rng = generalization_stream(config.seed);
    let h = config.generalization.half_width;
    (0..config.generalization.count)
        .map(|_| {
            let mut x = resolved.x1_true.clone();
            for &k in &resolved.model.position_indices {
                if h > 0.0 {
                    x[k] += rng.random_range(-h..=h);
                }
            }
            x
        })
        .collect()
}
