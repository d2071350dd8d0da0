//! Grid maze navigation.
//!
//! Mazes are carved by randomized depth-first search over the lattice of
//! even-indexed cells; the passage between two lattice cells is opened when the
//! search crosses it. When a dimension is even, the trailing row (column) has
//! open cells at even columns (rows), each a dead end attached to the lattice cell
//! next to it. Every open cell is reachable from every other and the open cells
//! form a tree.
//!
//! Actions: up (0), right (1), down (2), left (3). Reaching the target pays 1 and
//! terminates; the episode is truncated after `rows * cols` steps.
//!
//! Flat encoding, egocentric: a `(2 * rows - 1) x (2 * cols - 1)` window
//! centred on the agent holding walls (outside the grid counts as wall), then a
//! window of the same shape holding the target one-hot, the target offset
//! `(dr, dc) / size`, the 4-entry action mask, and `step_count / time_limit`.

use crate::env::{check_discrete, Environment, Transition};
use crate::error::{Error, Result};
use crate::rng::RngKey;
use crate::spec::{ArrayValue, DType, Spec, Value};

const DELTAS: [(i32, i32); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MazeState {
    /// Row-major, `true` is a wall.
    pub walls: Vec<bool>,
    pub agent: (usize, usize),
    pub target: (usize, usize),
    pub step_count: u32,
    pub key: RngKey,
    pub done: bool,
}

#[derive(Clone, Debug)]
pub struct Maze {
    rows: usize,
    cols: usize,
    time_limit: u32,
}

impl Maze {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        Self::with_time_limit(rows, cols, (rows * cols) as u32)
    }

    pub fn with_time_limit(rows: usize, cols: usize, time_limit: u32) -> Result<Self> {
        if rows < 3 || cols < 3 {
            return Err(Error::invalid_arg("maze dimensions must be >= 3"));
        }
        if time_limit == 0 {
            return Err(Error::invalid_arg("time_limit must be >= 1"));
        }
        Ok(Self { rows, cols, time_limit })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn time_limit(&self) -> u32 {
        self.time_limit
    }

    fn neighbour(&self, (r, c): (usize, usize), dir: usize) -> Option<(usize, usize)> {
        let (dr, dc) = DELTAS[dir];
        let (nr, nc) = (r as i32 + dr, c as i32 + dc);
        (nr >= 0 && nr < self.rows as i32 && nc >= 0 && nc < self.cols as i32).then_some((nr as usize, nc as usize))
    }

    fn open_move(&self, walls: &[bool], pos: (usize, usize), dir: usize) -> Option<(usize, usize)> {
        self.neighbour(pos, dir).filter(|&(r, c)| !walls[r * self.cols + c])
    }

    fn legal(&self, s: &MazeState) -> [bool; 4] {
        std::array::from_fn(|d| self.open_move(&s.walls, s.agent, d).is_some())
    }

    /// Carves a maze and returns its wall grid.
    pub fn carve(&self, key: RngKey) -> Vec<bool> {
        let (rows, cols) = (self.rows, self.cols);
        let lattice_rows = rows.div_ceil(2);
        let lattice_cols = cols.div_ceil(2);
        let mut walls = vec![true; rows * cols];
        let mut visited = vec![false; lattice_rows * lattice_cols];
        let mut s = key.stream();
        let start = s.index(lattice_rows * lattice_cols);
        let mut stack = vec![start];
        visited[start] = true;
        walls[(start / lattice_cols) * 2 * cols + (start % lattice_cols) * 2] = false;
        while let Some(&cur) = stack.last() {
            let (lr, lc) = (cur / lattice_cols, cur % lattice_cols);
            let mut options = [0usize; 4];
            let mut count = 0;
            for (dr, dc) in DELTAS {
                let (nr, nc) = (lr as i32 + dr, lc as i32 + dc);
                if nr >= 0 && nr < lattice_rows as i32 && nc >= 0 && nc < lattice_cols as i32 {
                    let idx = nr as usize * lattice_cols + nc as usize;
                    if !visited[idx] {
                        options[count] = idx;
                        count += 1;
                    }
                }
            }
            if count == 0 {
                stack.pop();
                continue;
            }
            let next = options[s.index(count)];
            let (nr, nc) = (next / lattice_cols, next % lattice_cols);
            walls[(lr + nr) * cols + (lc + nc)] = false;
            walls[nr * 2 * cols + nc * 2] = false;
            visited[next] = true;
            stack.push(next);
        }
        if rows % 2 == 0 {
            for c in (0..cols).step_by(2) {
                walls[(rows - 1) * cols + c] = false;
            }
        }
        if cols % 2 == 0 {
            for r in (0..rows).step_by(2) {
                walls[r * cols + cols - 1] = false;
            }
        }
        walls
    }

    /// Builds a state from an explicit layout.
    pub fn state_from_layout(
        &self,
        walls: Vec<bool>,
        agent: (usize, usize),
        target: (usize, usize),
        key: RngKey,
    ) -> Result<MazeState> {
        if walls.len() != self.rows * self.cols {
            return Err(Error::invalid_arg("wall grid has the wrong size"));
        }
        for (name, (r, c)) in [("agent", agent), ("target", target)] {
            if r >= self.rows || c >= self.cols || walls[r * self.cols + c] {
                return Err(Error::invalid_arg(format!("{name} must sit on an open cell")));
            }
        }
        if agent == target {
            return Err(Error::invalid_arg("agent and target must differ"));
        }
        Ok(MazeState { walls, agent, target, step_count: 0, key, done: false })
    }
}

impl Environment for Maze {
    type State = MazeState;

    fn name(&self) -> &str {
        "Maze"
    }

    fn init(&self, key: RngKey) -> MazeState {
        let (gen, own) = key.split2();
        let (carve_key, place_key) = gen.split2();
        let walls = self.carve(carve_key);
        let open: Vec<usize> = (0..walls.len()).filter(|&i| !walls[i]).collect();
        let mut s = place_key.stream();
        let a = s.index(open.len());
        let mut t = s.index(open.len() - 1);
        if t >= a {
            t += 1;
        }
        let cell = |i: usize| (open[i] / self.cols, open[i] % self.cols);
        MazeState { walls, agent: cell(a), target: cell(t), step_count: 0, key: own, done: false }
    }

    fn check_action(&self, state: &MazeState, action: &[i64]) -> Result<()> {
        check_discrete(action, 4, |a| self.open_move(&state.walls, state.agent, a).is_some()).map(|_| ())
    }

    fn apply(&self, state: &mut MazeState, action: &[i64]) -> Transition {
        state.agent = self.open_move(&state.walls, state.agent, action[0] as usize).expect("checked action");
        state.step_count += 1;
        let reached = state.agent == state.target;
        let t = Transition::resolve(reached as u8 as f64, reached, state.step_count, self.time_limit);
        state.done = t.is_last();
        t
    }

    fn is_done(&self, state: &MazeState) -> bool {
        state.done
    }

    fn state_key(&self, state: &MazeState) -> RngKey {
        state.key
    }

    fn action_dims(&self) -> Vec<usize> {
        vec![4]
    }

    fn action_mask(&self, state: &MazeState, mask: &mut [bool]) {
        mask.copy_from_slice(&self.legal(state));
    }

    fn observation_spec(&self) -> Spec {
        let pos_max = vec![(self.rows - 1) as f64, (self.cols - 1) as f64];
        Spec::composite([
            ("walls", Spec::array(vec![self.rows, self.cols], DType::Bool)),
            ("agent_position", Spec::bounded(vec![2], DType::Int, vec![0.0], pos_max.clone()).expect("static")),
            ("target_position", Spec::bounded(vec![2], DType::Int, vec![0.0], pos_max).expect("static")),
            ("action_mask", Spec::array(vec![4], DType::Bool)),
            ("step_count", Spec::bounded_scalar(DType::Int, 0.0, self.time_limit as f64).expect("static")),
        ])
        .expect("static spec")
    }

    fn observe(&self, state: &MazeState) -> Value {
        Value::composite([
            ("walls", ArrayValue::bools(vec![self.rows, self.cols], state.walls.clone()).into()),
            ("agent_position", Value::from(vec![state.agent.0 as i64, state.agent.1 as i64])),
            ("target_position", Value::from(vec![state.target.0 as i64, state.target.1 as i64])),
            ("action_mask", ArrayValue::bools(vec![4], self.legal(state).to_vec()).into()),
            ("step_count", Value::from(state.step_count as i64)),
        ])
    }

    fn obs_dim(&self) -> usize {
        2 * (2 * self.rows - 1) * (2 * self.cols - 1) + 2 + 4 + 1
    }

    fn encode(&self, state: &MazeState, out: &mut [f64]) {
        let (rows, cols) = (self.rows as i64, self.cols as i64);
        let (ar, ac) = (state.agent.0 as i64, state.agent.1 as i64);
        let view = ((2 * rows - 1) * (2 * cols - 1)) as usize;
        let (walls, target) = out[..2 * view].split_at_mut(view);
        let mut i = 0;
        for dr in -(rows - 1)..rows {
            for dc in -(cols - 1)..cols {
                let (r, c) = (ar + dr, ac + dc);
                let inside = (0..rows).contains(&r) && (0..cols).contains(&c);
                let cell = (r * cols + c) as usize;
                walls[i] = if inside { state.walls[cell] as u8 as f64 } else { 1.0 };
                target[i] = (inside && (r as usize, c as usize) == state.target) as u8 as f64;
                i += 1;
            }
        }
        let i = 2 * view;
        out[i] = (state.target.0 as f64 - state.agent.0 as f64) / self.rows as f64;
        out[i + 1] = (state.target.1 as f64 - state.agent.1 as f64) / self.cols as f64;
        for (o, m) in out[i + 2..i + 6].iter_mut().zip(self.legal(state)) {
            *o = m as u8 as f64;
        }
        out[i + 6] = state.step_count as f64 / self.time_limit as f64;
    }
}
