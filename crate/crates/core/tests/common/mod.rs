#![allow(dead_code)]

use nashgame::game::{AffineLQGame, GameShape, QuadraticCost, StageDynamics, Trajectory};
use nashgame::linalg::{Matrix, Vector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn randn(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn randv(rng: &mut ChaCha20Rng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Random PSD matrix `L L' / k` of rank up to `n`.
pub fn psd(rng: &mut ChaCha20Rng, n: usize) -> Matrix {
    let l = randn(rng, n, n);
    &l * l.transpose() / n as f64
}

/// Random affine LQ game with convex costs: PSD `Q`, PSD joint `R` with a
/// positive definite own block, random linear terms and no cross term `S`.
pub fn random_game(rng: &mut ChaCha20Rng, horizon: usize, n: usize, controls: &[usize], affine: bool) -> AffineLQGame {
    let mut state_dims = vec![0; controls.len()];
    state_dims[0] = n;
    let shape = GameShape::new(horizon, state_dims, controls.to_vec()).unwrap();
    let m = shape.m();
    let dynamics = (0..horizon - 1)
        .map(|_| {
            let a = Matrix::identity(n, n) + randn(rng, n, n) * 0.3;
            let b = randn(rng, n, m) * 0.5;
            let mut stage = StageDynamics::linear(a, b);
            if affine {
                stage.c = randv(rng, n) * 0.1;
            }
            stage
        })
        .collect();
    let costs = (0..horizon)
        .map(|_| {
            (0..controls.len())
                .map(|i| {
                    let mut r = psd(rng, m) * 0.5;
                    for k in shape.control_range(i) {
                        r[(k, k)] += 1.0;
                    }
                    let mut c = QuadraticCost::pure(psd(rng, n) + Matrix::identity(n, n) * 0.1, r);
                    if affine {
                        c.q_lin = randv(rng, n) * 0.2;
                        c.r_lin = randv(rng, m) * 0.2;
                    }
                    c
                })
                .collect()
        })
        .collect();
    AffineLQGame::new(shape, dynamics, costs).unwrap()
}

/// Roll fixed controls through the game's dynamics.
pub fn simulate(game: &AffineLQGame, x1: &Vector, controls: &[Vector]) -> Trajectory {
    let mut states = vec![x1.clone()];
    for (t, u) in controls.iter().enumerate() {
        let next = game.dynamics()[t].apply(&states[t], u);
        states.push(next);
    }
    Trajectory::new(states, controls.to_vec()).unwrap()
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).amax()
}
