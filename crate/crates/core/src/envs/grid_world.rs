use super::{EnvKind, EnvSpec};
use crate::cost::CostPreset;
use crate::distribution::Distribution;
use crate::mdp::{Outcome, TabularMdp};

const CELLS: usize = 7;
const DONE: usize = CELLS;
const START: usize = 3;
pub(crate) const LEFT: usize = 0;
pub(crate) const RIGHT: usize = 1;
pub(crate) const PICKUP: usize = 2;

fn pickup_reward(cell: usize) -> f64 {
    match cell {
        0 => 5.0,
        6 => 10.0,
        _ => -3.0,
    }
}

/// Seven cells in a row: blue goal at cell 0, red goal at cell 6, start in the middle.
/// Moving costs 1, picking up ends the episode. State 7 is the absorbing end state.
pub fn grid_world() -> EnvSpec {
    let n_states = CELLS + 1;
    let mut outcomes = Vec::with_capacity(n_states * 3);
    for s in 0..n_states {
        for a in 0..3 {
            let o = if s == DONE {
                Outcome::new(DONE, 1.0, 0.0)
            } else {
                match a {
                    LEFT => Outcome::new(s.saturating_sub(1), 1.0, -1.0),
                    RIGHT => Outcome::new((s + 1).min(CELLS - 1), 1.0, -1.0),
                    PICKUP => Outcome::new(DONE, 1.0, pickup_reward(s)),
                    _ => unreachable!(),
                }
            };
            outcomes.push(vec![o]);
        }
    }
    let mut terminal = vec![false; n_states];
    terminal[DONE] = true;
    let mdp = TabularMdp::new(
        n_states,
        3,
        outcomes,
        0.9,
        Distribution::one_hot(n_states, START),
        Some(10),
        terminal,
    )
    .expect("grid world is well formed");
    EnvSpec {
        name: "grid-world".into(),
        kind: EnvKind::GridWorld,
        mdp,
        default_cost: CostPreset::GridWorld,
        action_names: vec!["left".into(), "right".into(), "pickup".into()],
    }
}
