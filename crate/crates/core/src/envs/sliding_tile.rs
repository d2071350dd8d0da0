//! Sliding tile puzzle on a `g x g` grid.
//!
//! The solved arrangement reads `1, 2, ..., g*g - 1` row-major with the blank (0)
//! in the last cell. Actions move the blank up (0), right (1), down (2) or
//! left (3), which slides the neighbouring tile into the hole. The reward is +1
//! when the moved tile lands on its solved cell, -1 when it leaves it, 0 otherwise.
//!
//! Flat encoding: one-hot tile value per cell (`g^4` values), then
//! `step_count / time_limit`.

use crate::env::{check_discrete, Environment, Extras, Transition};
use crate::error::{Error, Result};
use crate::rng::RngKey;
use crate::spec::{ArrayValue, DType, Spec, Value};

const DELTAS: [(i32, i32); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PuzzleState {
    /// Row-major tile numbers, 0 is the blank.
    pub tiles: Vec<u8>,
    pub blank: (usize, usize),
    pub step_count: u32,
    pub key: RngKey,
    pub done: bool,
}

#[derive(Clone, Debug)]
pub struct SlidingTilePuzzle {
    grid_size: usize,
    num_shuffle_moves: usize,
    time_limit: u32,
}

pub fn solved_tiles(g: usize) -> Vec<u8> {
    let n = g * g;
    (0..n).map(|i| if i + 1 == n { 0 } else { (i + 1) as u8 }).collect()
}

impl SlidingTilePuzzle {
    pub fn new(grid_size: usize, num_shuffle_moves: usize, time_limit: u32) -> Result<Self> {
        if !(2..=15).contains(&grid_size) {
            return Err(Error::invalid_arg("grid_size must lie in 2..=15"));
        }
        if time_limit == 0 {
            return Err(Error::invalid_arg("time_limit must be >= 1"));
        }
        Ok(Self { grid_size, num_shuffle_moves, time_limit })
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    fn target(&self, cell: usize) -> u8 {
        let n = self.grid_size * self.grid_size;
        if cell + 1 == n {
            0
        } else {
            (cell + 1) as u8
        }
    }

    fn neighbour(&self, (r, c): (usize, usize), dir: usize) -> Option<(usize, usize)> {
        let (dr, dc) = DELTAS[dir];
        let (nr, nc) = (r as i32 + dr, c as i32 + dc);
        let g = self.grid_size as i32;
        (nr >= 0 && nr < g && nc >= 0 && nc < g).then_some((nr as usize, nc as usize))
    }

    fn legal(&self, blank: (usize, usize)) -> [bool; 4] {
        std::array::from_fn(|d| self.neighbour(blank, d).is_some())
    }

    /// Applies `num_shuffle_moves` uniformly chosen legal blank moves to the solved grid.
    pub fn generate(&self, key: RngKey) -> (Vec<u8>, (usize, usize)) {
        let g = self.grid_size;
        let mut tiles = solved_tiles(g);
        let mut blank = (g - 1, g - 1);
        let mut s = key.stream();
        for _ in 0..self.num_shuffle_moves {
            let legal = self.legal(blank);
            let options: Vec<usize> = (0..4).filter(|&d| legal[d]).collect();
            let dir = options[s.index(options.len())];
            let next = self.neighbour(blank, dir).expect("legal move");
            tiles.swap(blank.0 * g + blank.1, next.0 * g + next.1);
            blank = next;
        }
        (tiles, blank)
    }

    pub fn state_from_tiles(&self, tiles: Vec<u8>, key: RngKey) -> Result<PuzzleState> {
        let g = self.grid_size;
        let mut seen = vec![false; g * g];
        for &t in &tiles {
            if t as usize >= g * g || std::mem::replace(&mut seen[t as usize], true) {
                return Err(Error::invalid_arg("tiles must be a permutation of 0..g*g"));
            }
        }
        if tiles.len() != g * g {
            return Err(Error::invalid_arg("tiles must have g*g entries"));
        }
        let b = tiles.iter().position(|&t| t == 0).expect("permutation has a blank");
        Ok(PuzzleState { tiles, blank: (b / g, b % g), step_count: 0, key, done: false })
    }

    pub fn correct_count(&self, tiles: &[u8]) -> usize {
        tiles.iter().enumerate().filter(|&(i, &t)| t == self.target(i)).count()
    }

    /// Correct non-blank tiles.
    pub fn correct_tiles(&self, tiles: &[u8]) -> usize {
        tiles.iter().enumerate().filter(|&(i, &t)| t != 0 && t == self.target(i)).count()
    }

    pub fn prop_correctly_placed(&self, tiles: &[u8]) -> f64 {
        self.correct_count(tiles) as f64 / tiles.len() as f64
    }
}

impl Environment for SlidingTilePuzzle {
    type State = PuzzleState;

    fn name(&self) -> &str {
        "SlidingTilePuzzle"
    }

    fn init(&self, key: RngKey) -> PuzzleState {
        let (gen, own) = key.split2();
        let (tiles, blank) = self.generate(gen);
        PuzzleState { tiles, blank, step_count: 0, key: own, done: false }
    }

    fn check_action(&self, state: &PuzzleState, action: &[i64]) -> Result<()> {
        check_discrete(action, 4, |a| self.neighbour(state.blank, a).is_some()).map(|_| ())
    }

    fn apply(&self, state: &mut PuzzleState, action: &[i64]) -> Transition {
        let g = self.grid_size;
        let from = self.neighbour(state.blank, action[0] as usize).expect("checked action");
        let (src, dst) = (from.0 * g + from.1, state.blank.0 * g + state.blank.1);
        let tile = state.tiles[src];
        let reward = (tile == self.target(dst)) as i32 - (tile == self.target(src)) as i32;
        state.tiles.swap(src, dst);
        state.blank = from;
        state.step_count += 1;
        let correct = self.correct_count(&state.tiles);
        let solved = correct == g * g;
        let t = Transition::resolve(reward as f64, solved, state.step_count, self.time_limit);
        state.done = t.is_last();
        t.with_extras(Extras::new().with("prop_correctly_placed", correct as f64 / (g * g) as f64))
    }

    fn is_done(&self, state: &PuzzleState) -> bool {
        state.done
    }

    fn state_key(&self, state: &PuzzleState) -> RngKey {
        state.key
    }

    fn action_dims(&self) -> Vec<usize> {
        vec![4]
    }

    fn action_mask(&self, state: &PuzzleState, mask: &mut [bool]) {
        mask.copy_from_slice(&self.legal(state.blank));
    }

    fn observation_spec(&self) -> Spec {
        let g = self.grid_size;
        Spec::composite([
            ("puzzle", Spec::bounded(vec![g, g], DType::Int, vec![0.0], vec![(g * g - 1) as f64]).expect("static")),
            (
                "empty_tile_position",
                Spec::bounded(vec![2], DType::Int, vec![0.0], vec![(g - 1) as f64]).expect("static"),
            ),
            ("action_mask", Spec::array(vec![4], DType::Bool)),
            ("step_count", Spec::bounded_scalar(DType::Int, 0.0, self.time_limit as f64).expect("static")),
        ])
        .expect("static spec")
    }

    fn observe(&self, state: &PuzzleState) -> Value {
        let g = self.grid_size;
        Value::composite([
            ("puzzle", ArrayValue::ints(vec![g, g], state.tiles.iter().map(|&t| t as i64).collect()).into()),
            (
                "empty_tile_position",
                Value::from(vec![state.blank.0 as i64, state.blank.1 as i64]),
            ),
            ("action_mask", ArrayValue::bools(vec![4], self.legal(state.blank).to_vec()).into()),
            ("step_count", Value::from(state.step_count as i64)),
        ])
    }

    fn obs_dim(&self) -> usize {
        let n = self.grid_size * self.grid_size;
        n * n + 1
    }

    fn encode(&self, state: &PuzzleState, out: &mut [f64]) {
        let n = self.grid_size * self.grid_size;
        out.fill(0.0);
        for (i, &t) in state.tiles.iter().enumerate() {
            out[i * n + t as usize] = 1.0;
        }
        out[n * n] = state.step_count as f64 / self.time_limit as f64;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{HashSet, VecDeque};

    /// Breadth-first search over blank moves; true if the solved grid is reachable.
    fn bfs_solvable(start: &[u8], g: usize) -> bool {
        let goal = solved_tiles(g);
        let mut seen = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(start.to_vec());
        queue.push_back(start.to_vec());
        while let Some(t) = queue.pop_front() {
            if t == goal {
                return true;
            }
            let b = t.iter().position(|&x| x == 0).unwrap();
            let (r, c) = (b / g, b % g);
            let mut next = Vec::new();
            if r > 0 {
                next.push(b - g);
            }
            if r + 1 < g {
                next.push(b + g);
            }
            if c > 0 {
                next.push(b - 1);
            }
            if c + 1 < g {
                next.push(b + 1);
            }
            for nb in next {
                let mut u = t.clone();
                u.swap(b, nb);
                if seen.insert(u.clone()) {
                    queue.push_back(u);
                }
            }
        }
        false
    }

    #[test]
    fn zero_shuffles_is_solved() {
        let env = SlidingTilePuzzle::new(5, 0, 500).unwrap();
        let (s, _) = env.reset(RngKey::from_seed(0));
        assert_eq!(s.tiles, solved_tiles(5));
        assert_eq!(s.blank, (4, 4));
    }

    #[test]
    fn generated_three_by_three_instances_are_solvable() {
        let env = SlidingTilePuzzle::new(3, 40, 100).unwrap();
        for seed in 0..20 {
            let (s, _) = env.reset(RngKey::from_seed(seed));
            assert!(bfs_solvable(&s.tiles, 3), "seed {seed}");
        }
        // A single transposition of two tiles is unsolvable: the oracle can tell.
        let mut bad = solved_tiles(3);
        bad.swap(0, 1);
        assert!(!bfs_solvable(&bad, 3));
    }

    #[test]
    fn move_out_and_back() {
        let env = SlidingTilePuzzle::new(5, 0, 500).unwrap();
        let (s, _) = env.reset(RngKey::from_seed(0));
        // Blank at the bottom-right corner: up/left legal, right/down masked.
        assert_eq!(env.mask_vec(&s), vec![true, false, false, true]);
        assert!(env.step(&s, &[1]).is_err());
        let (s, ts) = env.step(&s, &[0]).unwrap();
        assert_eq!(ts.reward, -1.0);
        assert!(ts.mid());
        let (_, ts) = env.step(&s, &[2]).unwrap();
        assert_eq!(ts.reward, 1.0);
        assert!(ts.last());
        assert_eq!(ts.discount, 0.0);
        assert_eq!(ts.extras["prop_correctly_placed"], 1.0);
    }

    #[test]
    fn tile_between_two_wrong_slots_scores_zero() {
        let env = SlidingTilePuzzle::new(3, 0, 100).unwrap();
        // Tile 5 at cell 0 (wants cell 4), blank at cell 1 (wants tile 2).
        let s = env.state_from_tiles(vec![5, 0, 3, 4, 1, 6, 7, 8, 2], RngKey::from_seed(0)).unwrap();
        let (_, ts) = env.step(&s, &[3]).unwrap();
        assert_eq!(ts.reward, 0.0);
    }

    #[test]
    fn rewards_sum_to_correct_tile_delta() {
        let env = SlidingTilePuzzle::new(4, 30, 500).unwrap();
        let (mut s, _) = env.reset(RngKey::from_seed(8));
        let start = env.correct_tiles(&s.tiles) as f64;
        let mut total = 0.0;
        let mut st = RngKey::from_seed(99).stream();
        for _ in 0..200 {
            if s.done {
                break;
            }
            let mask = env.mask_vec(&s);
            let legal: Vec<usize> = (0..4).filter(|&a| mask[a]).collect();
            let (n, ts) = env.step(&s, &[legal[st.index(legal.len())] as i64]).unwrap();
            total += ts.reward;
            s = n;
        }
        assert_eq!(total, env.correct_tiles(&s.tiles) as f64 - start);
    }

    #[test]
    fn same_key_same_instance() {
        let env = SlidingTilePuzzle::new(5, 200, 500).unwrap();
        let k = RngKey::from_seed(5);
        assert_eq!(env.reset(k), env.reset(k));
    }
}
