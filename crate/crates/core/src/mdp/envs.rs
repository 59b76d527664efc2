//! Small hand-built environments used by the counterexample constructors.

use super::TabularMdp;
use crate::error::{Error, Result};

fn deterministic(n_states: usize, next: &[[usize; 2]], mu0: usize, gamma: f64) -> Result<TabularMdp> {
    let mut transition = vec![0.0; n_states * 2 * n_states];
    for (s, targets) in next.iter().enumerate() {
        for (a, &t) in targets.iter().enumerate() {
            transition[(s * 2 + a) * n_states + t] = 1.0;
        }
    }
    let mut init = vec![0.0; n_states];
    init[mu0] = 1.0;
    TabularMdp::new(n_states, 2, transition, init, gamma)
}

/// Three states, two actions. From `s0`, action 0 detours through `s1` and
/// action 1 goes straight to the absorbing `s2`. Both actions in `s1` lead to
/// `s2`. Starts in `s0`.
pub fn three_state_chain(gamma: f64) -> Result<TabularMdp> {
    deterministic(3, &[[1, 2], [2, 2], [2, 2]], 0, gamma)
}

/// Two three-state environments that differ only at `(s0, a0)`: the first
/// moves to `s0`/`s1` with probability 1/2 each, the second to `s1`/`s2`.
pub fn differing_row_pair(gamma: f64) -> Result<(TabularMdp, TabularMdp)> {
    let build = |row: [f64; 3]| {
        let mut transition = vec![0.0; 3 * 2 * 3];
        transition[..3].copy_from_slice(&row);
        // remaining (s, a) -> next
        for (s, a, t) in [(0, 1, 2), (1, 0, 2), (1, 1, 0), (2, 0, 2), (2, 1, 0)] {
            transition[(s * 2 + a) * 3 + t] = 1.0;
        }
        TabularMdp::new(3, 2, transition, vec![1.0, 0.0, 0.0], gamma)
    };
    Ok((build([0.5, 0.5, 0.0])?, build([0.0, 0.5, 0.5])?))
}

/// Moves of the gridworld, in action-index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridAction {
    Up,
    Down,
    Left,
    Right,
}

impl GridAction {
    pub const ALL: [GridAction; 4] = [GridAction::Up, GridAction::Down, GridAction::Left, GridAction::Right];

    pub fn delta(self) -> (i64, i64) {
        match self {
            GridAction::Up => (0, 1),
            GridAction::Down => (0, -1),
            GridAction::Left => (-1, 0),
            GridAction::Right => (1, 0),
        }
    }

    /// The intended move and its two diagonal neighbours.
    pub fn slips(self) -> [(i64, i64); 3] {
        let (dx, dy) = self.delta();
        if dx == 0 {
            [(0, dy), (-1, dy), (1, dy)]
        } else {
            [(dx, 0), (dx, 1), (dx, -1)]
        }
    }
}

/// Cell coordinates `(x, y)` of a gridworld state.
pub fn grid_cell(n: usize, state: usize) -> (usize, usize) {
    (state % n, state / n)
}

pub fn grid_state(n: usize, x: i64, y: i64) -> usize {
    let n_i = n as i64;
    (y.rem_euclid(n_i) * n_i + x.rem_euclid(n_i)) as usize
}

/// Signed horizontal step from `from` to `to` on the torus, in `{-1, 0, 1}`.
pub fn grid_dx(n: usize, from: usize, to: usize) -> f64 {
    let (x0, _) = grid_cell(n, from);
    let (x1, _) = grid_cell(n, to);
    let d = (x1 + n - x0) % n;
    if d == 1 {
        1.0
    } else if d == n - 1 && d != 0 {
        -1.0
    } else {
        0.0
    }
}

/// `N×N` torus with four actions and uniform initial distribution. Returns the
/// deterministic dynamics and the slippery dynamics in which every action
/// lands on the intended cell or either diagonal neighbour with probability
/// 1/3 each.
pub fn gridworld(n: usize, gamma: f64) -> Result<(TabularMdp, TabularMdp)> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("gridworld side must be at least 2, got {n}")));
    }
    let n_states = n * n;
    let mut det = vec![0.0; n_states * 4 * n_states];
    let mut slip = vec![0.0; n_states * 4 * n_states];
    for s in 0..n_states {
        let (x, y) = grid_cell(n, s);
        let (x, y) = (x as i64, y as i64);
        for (a, action) in GridAction::ALL.iter().enumerate() {
            let base = (s * 4 + a) * n_states;
            let (dx, dy) = action.delta();
            det[base + grid_state(n, x + dx, y + dy)] = 1.0;
            for (dx, dy) in action.slips() {
                slip[base + grid_state(n, x + dx, y + dy)] += 1.0 / 3.0;
            }
        }
    }
    let mu0 = vec![1.0 / n_states as f64; n_states];
    Ok((
        TabularMdp::new(n_states, 4, det, mu0.clone(), gamma)?,
        TabularMdp::new(n_states, 4, slip, mu0, gamma)?,
    ))
}
