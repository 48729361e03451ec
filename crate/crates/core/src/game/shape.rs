use std::ops::Range;

use crate::error::{GameError, Result};

/// Player count, horizon and per-player state/control sizes.
///
/// The horizon counts states: a trajectory holds `horizon` states and
/// `horizon - 1` controls. Player slices are laid out contiguously in player
/// order, so the offsets partition `[0, n)` and `[0, m)`. A player may own no
/// state coordinates, which is how a shared state is expressed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameShape {
    horizon: usize,
    state_dims: Vec<usize>,
    control_dims: Vec<usize>,
    state_offsets: Vec<usize>,
    control_offsets: Vec<usize>,
}

impl GameShape {
    pub fn new(horizon: usize, state_dims: Vec<usize>, control_dims: Vec<usize>) -> Result<Self> {
        if state_dims.is_empty() {
            return Err(GameError::Shape("a game needs at least one player".into()));
        }
        if state_dims.len() != control_dims.len() {
            return Err(GameError::Shape(format!(
                "{} state blocks but {} control blocks",
                state_dims.len(),
                control_dims.len()
            )));
        }
        if horizon < 2 {
            return Err(GameError::Shape(format!("horizon must be at least 2, got {horizon}")));
        }
        if control_dims.contains(&0) {
            return Err(GameError::Shape("all control dimensions must be positive".into()));
        }
        if state_dims.iter().sum::<usize>() == 0 {
            return Err(GameError::Shape("the joint state must be non-empty".into()));
        }
        let offsets = |dims: &[usize]| {
            let mut acc = 0;
            let mut out = Vec::with_capacity(dims.len() + 1);
            out.push(0);
            for d in dims {
                acc += d;
                out.push(acc);
            }
            out
        };
        Ok(Self {
            horizon,
            state_offsets: offsets(&state_dims),
            control_offsets: offsets(&control_dims),
            state_dims,
            control_dims,
        })
    }

    /// Shape where every player has the same block sizes.
    pub fn uniform(num_players: usize, horizon: usize, state_dim: usize, control_dim: usize) -> Result<Self> {
        Self::new(horizon, vec![state_dim; num_players], vec![control_dim; num_players])
    }

    pub fn num_players(&self) -> usize {
        self.state_dims.len()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Joint state dimension.
    pub fn n(&self) -> usize {
        *self.state_offsets.last().unwrap()
    }

    /// Joint control dimension.
    pub fn m(&self) -> usize {
        *self.control_offsets.last().unwrap()
    }

    pub fn state_dim(&self, player: usize) -> usize {
        self.state_dims[player]
    }

    pub fn control_dim(&self, player: usize) -> usize {
        self.control_dims[player]
    }

    pub fn state_range(&self, player: usize) -> Range<usize> {
        self.state_offsets[player]..self.state_offsets[player + 1]
    }

    pub fn control_range(&self, player: usize) -> Range<usize> {
        self.control_offsets[player]..self.control_offsets[player + 1]
    }

    pub fn state_dims(&self) -> &[usize] {
        &self.state_dims
    }

    pub fn control_dims(&self) -> &[usize] {
        &self.control_dims
    }

    /// Same block sizes over a different horizon.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        Self::new(horizon, self.state_dims.clone(), self.control_dims.clone())
    }

    pub fn check_player(&self, player: usize) -> Result<()> {
        if player >= self.num_players() {
            return Err(GameError::Shape(format!(
                "player {player} out of range for a {}-player game",
                self.num_players()
            )));
        }
        Ok(())
    }
}
