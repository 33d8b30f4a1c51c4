use super::{EnvKind, EnvSpec};
use crate::cost::CostPreset;
use crate::distribution::Distribution;
use crate::mdp::{Outcome, TabularMdp};

const ROWS: usize = 4;
const COLS: usize = 12;
const START: usize = 36;
const GOAL: usize = 47;

fn is_cliff(s: usize) -> bool {
    (37..=46).contains(&s)
}

/// 4×12 grid. Start bottom-left, goal bottom-right, cliff in between.
/// Actions: up, right, down, left. Each step costs 1; stepping into the cliff costs 100
/// and sends the agent back to the start.
pub fn cliff_walking() -> EnvSpec {
    let n = ROWS * COLS;
    let mut outcomes = Vec::with_capacity(n * 4);
    for s in 0..n {
        let (r, c) = (s / COLS, s % COLS);
        for a in 0..4 {
            if s == GOAL {
                outcomes.push(vec![Outcome::new(GOAL, 1.0, 0.0)]);
                continue;
            }
            let (nr, nc) = match a {
                0 => (r.saturating_sub(1), c),
                1 => (r, (c + 1).min(COLS - 1)),
                2 => ((r + 1).min(ROWS - 1), c),
                _ => (r, c.saturating_sub(1)),
            };
            let next = nr * COLS + nc;
            outcomes.push(vec![if is_cliff(next) {
                Outcome::new(START, 1.0, -100.0)
            } else {
                Outcome::new(next, 1.0, -1.0)
            }]);
        }
    }
    let mut terminal = vec![false; n];
    terminal[GOAL] = true;
    let mdp = TabularMdp::new(
        n,
        4,
        outcomes,
        0.9,
        Distribution::one_hot(n, START),
        Some(1000),
        terminal,
    )
    .expect("cliff walking is well formed");
    EnvSpec {
        name: "cliff-walking".into(),
        kind: EnvKind::CliffWalking,
        mdp,
        default_cost: CostPreset::ZeroOne,
        action_names: vec!["up".into(), "right".into(), "down".into(), "left".into()],
    }
}
