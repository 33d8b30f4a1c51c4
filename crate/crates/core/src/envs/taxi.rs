use super::{EnvKind, EnvSpec};
use crate::cost::CostPreset;
use crate::distribution::Distribution;
use crate::mdp::{Outcome, TabularMdp};

const MAP: [&str; 7] = [
    "+---------+",
    "|R: | : :G|",
    "| : | : : |",
    "| : : : : |",
    "| | : | : |",
    "|Y| : |B: |",
    "+---------+",
];
const LANDMARKS: [(usize, usize); 4] = [(0, 0), (0, 4), (4, 0), (4, 3)];
/// Passenger location index meaning "in the taxi".
pub const IN_TAXI: usize = 4;
pub const SUCCESS_REWARD: f64 = 20.0;
pub const ILLEGAL_REWARD: f64 = -10.0;

/// Decoded Taxi state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaxiState {
    pub row: usize,
    pub col: usize,
    pub passenger: usize,
    pub destination: usize,
}

impl TaxiState {
    pub fn encode(self) -> usize {
        ((self.row * 5 + self.col) * 5 + self.passenger) * 4 + self.destination
    }

    pub fn decode(s: usize) -> Self {
        Self {
            destination: s % 4,
            passenger: (s / 4) % 5,
            col: (s / 20) % 5,
            row: s / 100,
        }
    }

    fn is_done(self) -> bool {
        self.passenger == self.destination
    }
}

fn open(row: usize, ch: usize) -> bool {
    MAP[row + 1].as_bytes()[ch] == b':'
}

fn transition(st: TaxiState, action: usize) -> (TaxiState, f64) {
    let mut next = st;
    let mut reward = -1.0;
    let here = (st.row, st.col);
    match action {
        0 => next.row = (st.row + 1).min(4),
        1 => next.row = st.row.saturating_sub(1),
        2 if open(st.row, 2 * st.col + 2) => next.col = (st.col + 1).min(4),
        3 if open(st.row, 2 * st.col) => next.col = st.col.saturating_sub(1),
        2 | 3 => {}
        4 => {
            if st.passenger < IN_TAXI && here == LANDMARKS[st.passenger] {
                next.passenger = IN_TAXI;
            } else {
                reward = ILLEGAL_REWARD;
            }
        }
        _ => {
            if st.passenger == IN_TAXI && here == LANDMARKS[st.destination] {
                next.passenger = st.destination;
                reward = SUCCESS_REWARD;
            } else if let Some(l) = LANDMARKS.iter().position(|&l| l == here).filter(|_| st.passenger == IN_TAXI) {
                next.passenger = l;
            } else {
                reward = ILLEGAL_REWARD;
            }
        }
    }
    (next, reward)
}

/// Taxi-v3: 500 states, actions south, north, east, west, pickup, dropoff.
/// States whose passenger sits at the destination are absorbing.
pub fn taxi() -> EnvSpec {
    let n = 500;
    let mut outcomes = Vec::with_capacity(n * 6);
    let mut terminal = vec![false; n];
    let mut initial = vec![0.0; n];
    for s in 0..n {
        let st = TaxiState::decode(s);
        terminal[s] = st.is_done();
        if st.passenger < IN_TAXI && !st.is_done() {
            initial[s] = 1.0;
        }
        for a in 0..6 {
            outcomes.push(vec![if st.is_done() {
                Outcome::new(s, 1.0, 0.0)
            } else {
                let (next, r) = transition(st, a);
                Outcome::new(next.encode(), 1.0, r)
            }]);
        }
    }
    let mdp = TabularMdp::new(
        n,
        6,
        outcomes,
        0.9,
        Distribution::new(initial).expect("300 start states"),
        Some(200),
        terminal,
    )
    .expect("taxi is well formed");
    EnvSpec {
        name: "taxi".into(),
        kind: EnvKind::Taxi,
        mdp,
        default_cost: CostPreset::ZeroOne,
        action_names: ["south", "north", "east", "west", "pickup", "dropoff"]
            .map(String::from)
            .to_vec(),
    }
}
