//! Snake on a `g x g` grid.
//!
//! Actions: up (0), right (1), down (2), left (3). Reversing into the neck is
//! masked once the body has two or more cells. Eating the fruit pays 1 and grows
//! the body; leaving the grid or running into the body terminates with reward 0.
//! The tail cell is vacated before the collision test when the snake does not
//! eat, so following the tail is legal. Filling the whole grid terminates.
//!
//! Observation grid channels, in order: head, body (every occupied cell
//! including head and tail), tail, fruit, `step_count / time_limit` broadcast over
//! the plane. Flat encoding: that `g x g x 5` grid row-major with channels
//! innermost, then the 4-entry action mask.

use std::collections::VecDeque;

use crate::env::{check_discrete, Environment, Transition};
use crate::error::{Error, Result};
use crate::rng::RngKey;
use crate::spec::{ArrayValue, DType, Spec, Value};

pub const NUM_CHANNELS: usize = 5;
const DELTAS: [(i32, i32); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnakeState {
    /// Cell indices `row * g + col`, head first.
    pub body: VecDeque<u16>,
    pub fruit: u16,
    pub step_count: u32,
    pub fruits_eaten: u32,
    pub key: RngKey,
    pub done: bool,
}

impl SnakeState {
    pub fn head(&self) -> u16 {
        self.body[0]
    }
}

#[derive(Clone, Debug)]
pub struct Snake {
    grid_size: usize,
    time_limit: u32,
}

impl Snake {
    pub fn new(grid_size: usize, time_limit: u32) -> Result<Self> {
        if !(2..=255).contains(&grid_size) {
            return Err(Error::invalid_arg("grid_size must lie in 2..=255"));
        }
        if time_limit == 0 {
            return Err(Error::invalid_arg("time_limit must be >= 1"));
        }
        Ok(Self { grid_size, time_limit })
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    fn target_cell(&self, cell: u16, dir: usize) -> Option<u16> {
        let g = self.grid_size as i32;
        let (r, c) = (cell as i32 / g, cell as i32 % g);
        let (dr, dc) = DELTAS[dir];
        let (nr, nc) = (r + dr, c + dc);
        (nr >= 0 && nr < g && nc >= 0 && nc < g).then_some((nr * g + nc) as u16)
    }

    fn legal(&self, s: &SnakeState) -> [bool; 4] {
        std::array::from_fn(|d| s.body.len() < 2 || self.target_cell(s.head(), d) != Some(s.body[1]))
    }

    fn place_fruit(&self, body: &VecDeque<u16>, key: RngKey) -> Option<u16> {
        let n = self.grid_size * self.grid_size;
        let free = n - body.len();
        if free == 0 {
            return None;
        }
        let mut occupied = vec![false; n];
        for &b in body {
            occupied[b as usize] = true;
        }
        let k = key.stream().index(free);
        (0..n).filter(|&i| !occupied[i]).nth(k).map(|i| i as u16)
    }

    /// Builds a state from explicit body cells (head first) and fruit cell.
    pub fn state_from_cells(&self, body: &[(usize, usize)], fruit: (usize, usize), key: RngKey) -> Result<SnakeState> {
        let g = self.grid_size;
        let idx = |(r, c): (usize, usize)| (r * g + c) as u16;
        if body.is_empty() || body.iter().chain([&fruit]).any(|&(r, c)| r >= g || c >= g) {
            return Err(Error::invalid_arg("body must be non-empty and inside the grid"));
        }
        let cells: VecDeque<u16> = body.iter().map(|&p| idx(p)).collect();
        let mut sorted: Vec<u16> = cells.iter().copied().collect();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != cells.len() || cells.contains(&idx(fruit)) {
            return Err(Error::invalid_arg("body cells must be distinct and avoid the fruit"));
        }
        Ok(SnakeState { body: cells, fruit: idx(fruit), step_count: 0, fruits_eaten: 0, key, done: false })
    }

    fn fill_grid(&self, state: &SnakeState, out: &mut [f64]) {
        out.fill(0.0);
        let tail = *state.body.back().unwrap() as usize;
        for &b in &state.body {
            out[b as usize * NUM_CHANNELS + 1] = 1.0;
        }
        out[state.head() as usize * NUM_CHANNELS] = 1.0;
        out[tail * NUM_CHANNELS + 2] = 1.0;
        if !state.done || state.body.len() < self.grid_size * self.grid_size {
            out[state.fruit as usize * NUM_CHANNELS + 3] = 1.0;
        }
        let frac = state.step_count as f64 / self.time_limit as f64;
        for cell in 0..self.grid_size * self.grid_size {
            out[cell * NUM_CHANNELS + 4] = frac;
        }
    }
}

impl Environment for Snake {
    type State = SnakeState;

    fn name(&self) -> &str {
        "Snake"
    }

    fn init(&self, key: RngKey) -> SnakeState {
        let (gen, own) = key.split2();
        let (head_key, fruit_key) = gen.split2();
        let n = self.grid_size * self.grid_size;
        let head = head_key.stream().index(n) as u16;
        let body = VecDeque::from([head]);
        let fruit = self.place_fruit(&body, fruit_key).expect("grid has at least two cells");
        SnakeState { body, fruit, step_count: 0, fruits_eaten: 0, key: own, done: false }
    }

    fn check_action(&self, state: &SnakeState, action: &[i64]) -> Result<()> {
        let legal = self.legal(state);
        check_discrete(action, 4, |a| legal[a]).map(|_| ())
    }

    fn apply(&self, state: &mut SnakeState, action: &[i64]) -> Transition {
        state.step_count += 1;
        let Some(next) = self.target_cell(state.head(), action[0] as usize) else {
            state.done = true;
            return Transition::termination(0.0);
        };
        let eats = next == state.fruit;
        if !eats {
            state.body.pop_back();
        }
        if state.body.contains(&next) {
            state.done = true;
            return Transition::termination(0.0);
        }
        state.body.push_front(next);
        let mut reward = 0.0;
        let mut won = false;
        if eats {
            reward = 1.0;
            state.fruits_eaten += 1;
            let (next_key, fruit_key) = state.key.split2();
            state.key = next_key;
            match self.place_fruit(&state.body, fruit_key) {
                Some(f) => state.fruit = f,
                None => won = true,
            }
        }
        let t = Transition::resolve(reward, won, state.step_count, self.time_limit);
        state.done = t.is_last();
        t
    }

    fn is_done(&self, state: &SnakeState) -> bool {
        state.done
    }

    fn state_key(&self, state: &SnakeState) -> RngKey {
        state.key
    }

    fn action_dims(&self) -> Vec<usize> {
        vec![4]
    }

    fn action_mask(&self, state: &SnakeState, mask: &mut [bool]) {
        mask.copy_from_slice(&self.legal(state));
    }

    fn observation_spec(&self) -> Spec {
        let g = self.grid_size;
        Spec::composite([
            ("grid", Spec::bounded(vec![g, g, NUM_CHANNELS], DType::Float, vec![0.0], vec![1.0]).expect("static")),
            ("step_count", Spec::bounded_scalar(DType::Int, 0.0, self.time_limit as f64).expect("static")),
            ("action_mask", Spec::array(vec![4], DType::Bool)),
        ])
        .expect("static spec")
    }

    fn observe(&self, state: &SnakeState) -> Value {
        let g = self.grid_size;
        let mut grid = vec![0.0; g * g * NUM_CHANNELS];
        self.fill_grid(state, &mut grid);
        Value::composite([
            ("grid", ArrayValue::floats(vec![g, g, NUM_CHANNELS], grid).into()),
            ("step_count", Value::from(state.step_count as i64)),
            ("action_mask", ArrayValue::bools(vec![4], self.legal(state).to_vec()).into()),
        ])
    }

    fn obs_dim(&self) -> usize {
        self.grid_size * self.grid_size * NUM_CHANNELS + 4
    }

    fn encode(&self, state: &SnakeState, out: &mut [f64]) {
        let n = self.grid_size * self.grid_size * NUM_CHANNELS;
        self.fill_grid(state, &mut out[..n]);
        for (o, m) in out[n..].iter_mut().zip(self.legal(state)) {
            *o = m as u8 as f64;
        }
    }
}

/// Successor of `cell` on a Hamiltonian cycle of an even-sided grid: across row 0,
/// boustrophedon through columns `1..g` of the remaining rows, back up column 0.
pub fn hamiltonian_successor(g: usize, cell: usize) -> usize {
    let (r, c) = (cell / g, cell % g);
    if c == 0 {
        return if r == 0 { 1 } else { (r - 1) * g };
    }
    if r % 2 == 0 {
        if c + 1 < g {
            cell + 1
        } else {
            cell + g
        }
    } else if c > 1 {
        cell - 1
    } else if r + 1 < g {
        cell + g
    } else {
        r * g
    }
}

/// Direction that moves the head from `from` to the adjacent `to`.
pub fn direction_between(g: usize, from: usize, to: usize) -> usize {
    let (fr, fc) = ((from / g) as i32, (from % g) as i32);
    let (tr, tc) = ((to / g) as i32, (to % g) as i32);
    DELTAS.iter().position(|&d| d == (tr - fr, tc - fc)).expect("cells are adjacent")
}
