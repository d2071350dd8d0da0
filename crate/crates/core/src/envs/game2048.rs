//! 2048 on a 4x4 board.
//!
//! Actions: up (0), right (1), down (2), left (3). A move is legal iff it changes
//! the board. After each move one tile spawns on a uniformly chosen empty cell,
//! valued 2 with probability 0.9 and 4 otherwise. The episode terminates when the
//! post-spawn board has no legal move.
//!
//! Flat encoding (20 values): the 16 cells row-major as `log2(tile) / 16` (0 for
//! empty), then the 4-entry action mask.

use crate::env::{check_discrete, Environment, Transition};
use crate::error::Result;
use crate::rng::RngKey;
use crate::spec::{ArrayValue, DType, Spec, Value};

pub const BOARD_SIDE: usize = 4;
const CELLS: usize = BOARD_SIDE * BOARD_SIDE;
const FOUR_PROBABILITY: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Game2048State {
    /// Row-major tile values; 0 is empty.
    pub board: [u32; CELLS],
    pub step_count: u32,
    pub score: u64,
    pub key: RngKey,
    pub done: bool,
}

/// Compacts a line toward index 0, merging equal neighbours once, left to right.
/// Returns the new line and the sum of merged tiles.
pub fn shift_and_merge_line(line: [u32; 4]) -> ([u32; 4], u32) {
    let mut out = [0u32; 4];
    let mut reward = 0;
    let mut write = 0;
    let mut pending: Option<u32> = None;
    for v in line.into_iter().filter(|&v| v != 0) {
        match pending {
            Some(p) if p == v => {
                out[write] = 2 * v;
                reward += 2 * v;
                write += 1;
                pending = None;
            }
            Some(p) => {
                out[write] = p;
                write += 1;
                pending = Some(v);
            }
            None => pending = Some(v),
        }
    }
    if let Some(p) = pending {
        out[write] = p;
    }
    (out, reward)
}

fn line_indices(action: usize, i: usize) -> [usize; 4] {
    match action {
        0 => [i, 4 + i, 8 + i, 12 + i],
        1 => [i * 4 + 3, i * 4 + 2, i * 4 + 1, i * 4],
        2 => [12 + i, 8 + i, 4 + i, i],
        3 => [i * 4, i * 4 + 1, i * 4 + 2, i * 4 + 3],
        _ => unreachable!("direction out of range"),
    }
}

/// Applies a move without spawning. Returns the new board and merge reward.
pub fn slide_board(board: &[u32; CELLS], action: usize) -> ([u32; CELLS], u32) {
    let mut out = *board;
    let mut reward = 0;
    for i in 0..BOARD_SIDE {
        let idx = line_indices(action, i);
        let (line, r) = shift_and_merge_line(idx.map(|k| board[k]));
        for (k, v) in idx.into_iter().zip(line) {
            out[k] = v;
        }
        reward += r;
    }
    (out, reward)
}

pub fn legal_moves(board: &[u32; CELLS]) -> [bool; 4] {
    std::array::from_fn(|a| slide_board(board, a).0 != *board)
}

fn spawn(board: &mut [u32; CELLS], key: RngKey) {
    let empty: Vec<usize> = (0..CELLS).filter(|&i| board[i] == 0).collect();
    if empty.is_empty() {
        return;
    }
    let mut s = key.stream();
    let cell = empty[s.index(empty.len())];
    board[cell] = if s.bernoulli(FOUR_PROBABILITY) { 4 } else { 2 };
}

#[derive(Clone, Debug, Default)]
pub struct Game2048;

impl Game2048 {
    pub fn new() -> Self {
        Self
    }

    /// Builds a state from an explicit board, e.g. for tests.
    pub fn state_from_board(&self, board: [u32; CELLS], key: RngKey) -> Game2048State {
        Game2048State { board, step_count: 0, score: 0, key, done: false }
    }
}

impl Environment for Game2048 {
    type State = Game2048State;

    fn name(&self) -> &str {
        "Game2048"
    }

    fn init(&self, key: RngKey) -> Game2048State {
        let (gen, own) = key.split2();
        let mut board = [0; CELLS];
        spawn(&mut board, gen);
        self.state_from_board(board, own)
    }

    fn check_action(&self, state: &Game2048State, action: &[i64]) -> Result<()> {
        check_discrete(action, 4, |a| slide_board(&state.board, a).0 != state.board).map(|_| ())
    }

    fn apply(&self, state: &mut Game2048State, action: &[i64]) -> Transition {
        let (board, reward) = slide_board(&state.board, action[0] as usize);
        let (next_key, spawn_key) = state.key.split2();
        state.board = board;
        spawn(&mut state.board, spawn_key);
        state.key = next_key;
        state.step_count += 1;
        state.score += reward as u64;
        let terminated = !legal_moves(&state.board).iter().any(|&m| m);
        state.done = terminated;
        if terminated {
            Transition::termination(reward as f64)
        } else {
            Transition::mid(reward as f64)
        }
    }

    fn is_done(&self, state: &Game2048State) -> bool {
        state.done
    }

    fn state_key(&self, state: &Game2048State) -> RngKey {
        state.key
    }

    fn action_dims(&self) -> Vec<usize> {
        vec![4]
    }

    fn action_mask(&self, state: &Game2048State, mask: &mut [bool]) {
        mask.copy_from_slice(&legal_moves(&state.board));
    }

    fn observation_spec(&self) -> Spec {
        Spec::composite([
            ("board", Spec::array(vec![BOARD_SIDE, BOARD_SIDE], DType::Int)),
            ("action_mask", Spec::array(vec![4], DType::Bool)),
            ("step_count", Spec::array(vec![], DType::Int)),
        ])
        .expect("static spec")
    }

    fn observe(&self, state: &Game2048State) -> Value {
        Value::composite([
            (
                "board",
                ArrayValue::ints(vec![BOARD_SIDE, BOARD_SIDE], state.board.iter().map(|&v| v as i64).collect()).into(),
            ),
            ("action_mask", ArrayValue::bools(vec![4], legal_moves(&state.board).to_vec()).into()),
            ("step_count", Value::from(state.step_count as i64)),
        ])
    }

    fn obs_dim(&self) -> usize {
        CELLS + 4
    }

    fn encode(&self, state: &Game2048State, out: &mut [f64]) {
        for (o, &v) in out.iter_mut().zip(&state.board) {
            *o = if v == 0 { 0.0 } else { v.trailing_zeros() as f64 / 16.0 };
        }
        for (o, m) in out[CELLS..].iter_mut().zip(legal_moves(&state.board)) {
            *o = m as u8 as f64;
        }
    }
}
