//! Rubik's cube of arbitrary size on a sticker representation.
//!
//! Faces are indexed up (0), front (1), right (2), back (3), left (4), down (5);
//! the solved cube has every sticker of face `f` coloured `f`. Each face is an
//! `n x n` grid read as seen from outside the cube:
//!
//! * up: row 0 borders back, column 0 borders left
//! * front, right, back, left: row 0 borders up, columns run left to right as seen
//!   when facing that side
//! * down: row 0 borders front, column 0 borders left
//!
//! An action is `(face, depth, direction)` with direction clockwise (0),
//! counter-clockwise (1) or half turn (2), as seen looking at `face`. Depth 0 is
//! the outer layer. Turns are precomputed sticker permutations derived from the
//! 3D geometry of the cube.
//!
//! Flat encoding: one-hot colour of every sticker (`6 * n * n * 6` values), then
//! `step_count / time_limit`.

use std::collections::HashMap;

use crate::env::{Environment, Extras, Transition};
use crate::error::{Error, Result};
use crate::rng::RngKey;
use crate::spec::{ArrayValue, DType, Spec, Value};

pub const NUM_FACES: usize = 6;
pub const NUM_DIRECTIONS: usize = 3;

const NORMALS: [[i32; 3]; NUM_FACES] = [[0, 1, 0], [0, 0, 1], [1, 0, 0], [0, 0, -1], [-1, 0, 0], [0, -1, 0]];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CubeMove {
    pub face: u8,
    pub depth: u8,
    pub direction: u8,
}

impl CubeMove {
    pub fn new(face: usize, depth: usize, direction: usize) -> Self {
        Self { face: face as u8, depth: depth as u8, direction: direction as u8 }
    }

    pub fn inverse(self) -> Self {
        let direction = match self.direction {
            0 => 1,
            1 => 0,
            d => d,
        };
        Self { direction, ..self }
    }
}

/// Sticker coordinates in doubled units: the face axis is at `+-n`, the other
/// two axes take odd offsets in `-(n-1)..=(n-1)`.
fn sticker_position(n: usize, face: usize, row: usize, col: usize) -> [i32; 3] {
    let n_ = n as i32;
    let a = -(n_ - 1) + 2 * col as i32;
    let b = -(n_ - 1) + 2 * row as i32;
    match face {
        0 => [a, n_, b],
        1 => [a, -b, n_],
        2 => [n_, -b, -a],
        3 => [-a, -b, -n_],
        4 => [-n_, -b, a],
        5 => [a, -n_, -b],
        _ => unreachable!(),
    }
}

fn dot(u: [i32; 3], v: [i32; 3]) -> i32 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

fn cross(u: [i32; 3], v: [i32; 3]) -> [i32; 3] {
    [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]]
}

/// Quarter turns about `axis`: clockwise seen from the tip of `axis` is a
/// negative right-hand rotation.
fn rotate(v: [i32; 3], axis: [i32; 3], direction: usize) -> [i32; 3] {
    let c = cross(axis, v);
    let p = dot(axis, v);
    match direction {
        0 => std::array::from_fn(|i| -c[i] + axis[i] * p),
        1 => std::array::from_fn(|i| c[i] + axis[i] * p),
        2 => std::array::from_fn(|i| -v[i] + 2 * axis[i] * p),
        _ => unreachable!(),
    }
}

/// Gather tables for every move: `new[dst] = old[table[dst]]`.
#[derive(Clone, Debug)]
pub struct MoveTables {
    size: usize,
    depths: usize,
    tables: Vec<Vec<u16>>,
}

impl MoveTables {
    pub fn new(size: usize) -> Self {
        let depths = (size / 2).max(1);
        let count = NUM_FACES * size * size;
        let mut positions = Vec::with_capacity(count);
        let mut lookup = HashMap::with_capacity(count);
        for f in 0..NUM_FACES {
            for r in 0..size {
                for c in 0..size {
                    let p = sticker_position(size, f, r, c);
                    lookup.insert(p, positions.len());
                    positions.push((p, NORMALS[f]));
                }
            }
        }
        let mut tables = Vec::with_capacity(NUM_FACES * depths * NUM_DIRECTIONS);
        for face in 0..NUM_FACES {
            let axis = NORMALS[face];
            for depth in 0..depths {
                let layer = size as i32 - 1 - 2 * depth as i32;
                for dir in 0..NUM_DIRECTIONS {
                    let mut table: Vec<u16> = (0..count as u16).collect();
                    for (src, &(p, normal)) in positions.iter().enumerate() {
                        let centre: [i32; 3] = std::array::from_fn(|i| p[i] - normal[i]);
                        if dot(centre, axis) != layer {
                            continue;
                        }
                        let dst = lookup[&rotate(p, axis, dir)];
                        table[dst] = src as u16;
                    }
                    tables.push(table);
                }
            }
        }
        Self { size, depths, tables }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn depths(&self) -> usize {
        self.depths
    }

    pub fn num_moves(&self) -> usize {
        self.tables.len()
    }

    fn index(&self, m: CubeMove) -> usize {
        (m.face as usize * self.depths + m.depth as usize) * NUM_DIRECTIONS + m.direction as usize
    }

    pub fn check(&self, m: CubeMove) -> Result<()> {
        if m.face as usize >= NUM_FACES || m.depth as usize >= self.depths || m.direction as usize >= NUM_DIRECTIONS {
            return Err(Error::invalid_action(format!(
                "move {m:?} outside faces 0..6, depths 0..{}, directions 0..3",
                self.depths
            )));
        }
        Ok(())
    }

    /// Applies `m` to `stickers`.
    pub fn apply(&self, stickers: &[u8], m: CubeMove) -> Vec<u8> {
        self.tables[self.index(m)].iter().map(|&src| stickers[src as usize]).collect()
    }

    pub fn apply_in_place(&self, stickers: &mut [u8], m: CubeMove, scratch: &mut Vec<u8>) {
        scratch.clear();
        scratch.extend_from_slice(stickers);
        for (dst, &src) in stickers.iter_mut().zip(&self.tables[self.index(m)]) {
            *dst = scratch[src as usize];
        }
    }

    pub fn moves(&self) -> impl Iterator<Item = CubeMove> + '_ {
        (0..NUM_FACES).flat_map(move |f| {
            (0..self.depths).flat_map(move |d| (0..NUM_DIRECTIONS).map(move |r| CubeMove::new(f, d, r)))
        })
    }
}

/// Applies one turn; fails on out-of-range indices.
pub fn cube_move(tables: &MoveTables, stickers: &[u8], face: usize, depth: usize, direction: usize) -> Result<Vec<u8>> {
    if face >= NUM_FACES || depth >= tables.depths || direction >= NUM_DIRECTIONS {
        return Err(Error::invalid_action(format!("move ({face}, {depth}, {direction}) out of range")));
    }
    Ok(tables.apply(stickers, CubeMove::new(face, depth, direction)))
}

pub fn solved_stickers(size: usize) -> Vec<u8> {
    (0..NUM_FACES).flat_map(|f| std::iter::repeat_n(f as u8, size * size)).collect()
}

pub fn is_solved(stickers: &[u8], size: usize) -> bool {
    stickers.chunks_exact(size * size).all(|face| face.iter().all(|&c| c == face[0]))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CubeState {
    /// `6 * n * n` colour indices, face-major then row-major.
    pub stickers: Vec<u8>,
    pub step_count: u32,
    pub key: RngKey,
    pub done: bool,
}

#[derive(Clone, Debug)]
pub struct RubiksCube {
    tables: MoveTables,
    num_scrambles: usize,
    time_limit: u32,
}

impl RubiksCube {
    pub fn new(cube_size: usize, num_scrambles: usize, time_limit: u32) -> Result<Self> {
        if cube_size < 2 {
            return Err(Error::invalid_arg("cube_size must be >= 2"));
        }
        if time_limit == 0 {
            return Err(Error::invalid_arg("time_limit must be >= 1"));
        }
        Ok(Self { tables: MoveTables::new(cube_size), num_scrambles, time_limit })
    }

    pub fn cube_size(&self) -> usize {
        self.tables.size
    }

    pub fn tables(&self) -> &MoveTables {
        &self.tables
    }

    /// The random turns applied to a solved cube by `init(key)`.
    pub fn scramble_moves(&self, key: RngKey) -> Vec<CubeMove> {
        let (gen, _) = key.split2();
        let mut s = gen.stream();
        (0..self.num_scrambles)
            .map(|_| {
                CubeMove::new(s.index(NUM_FACES), s.index(self.tables.depths), s.index(NUM_DIRECTIONS))
            })
            .collect()
    }

    pub fn state_from_moves(&self, moves: &[CubeMove], key: RngKey) -> CubeState {
        let mut stickers = solved_stickers(self.cube_size());
        let mut scratch = Vec::new();
        for &m in moves {
            self.tables.apply_in_place(&mut stickers, m, &mut scratch);
        }
        CubeState { stickers, step_count: 0, key, done: false }
    }

    fn decode(&self, action: &[i64]) -> Result<CubeMove> {
        if action.len() != 3 {
            return Err(Error::invalid_action(format!("expected (face, depth, direction), got {action:?}")));
        }
        if action.iter().any(|&a| a < 0 || a > u8::MAX as i64) {
            return Err(Error::invalid_action(format!("move {action:?} out of range")));
        }
        let m = CubeMove::new(action[0] as usize, action[1] as usize, action[2] as usize);
        self.tables.check(m)?;
        Ok(m)
    }
}

impl Environment for RubiksCube {
    type State = CubeState;

    fn name(&self) -> &str {
        "RubiksCube"
    }

    fn init(&self, key: RngKey) -> CubeState {
        let moves = self.scramble_moves(key);
        let (_, own) = key.split2();
        self.state_from_moves(&moves, own)
    }

    fn check_action(&self, _state: &CubeState, action: &[i64]) -> Result<()> {
        self.decode(action).map(|_| ())
    }

    fn apply(&self, state: &mut CubeState, action: &[i64]) -> Transition {
        let m = self.decode(action).expect("checked action");
        let mut scratch = Vec::with_capacity(state.stickers.len());
        self.tables.apply_in_place(&mut state.stickers, m, &mut scratch);
        state.step_count += 1;
        let solved = is_solved(&state.stickers, self.cube_size());
        let t = Transition::resolve(if solved { 1.0 } else { 0.0 }, solved, state.step_count, self.time_limit);
        state.done = t.is_last();
        t.with_extras(Extras::new().with("solved", solved as u8 as f64))
    }

    fn is_done(&self, state: &CubeState) -> bool {
        state.done
    }

    fn state_key(&self, state: &CubeState) -> RngKey {
        state.key
    }

    fn action_dims(&self) -> Vec<usize> {
        vec![NUM_FACES, self.tables.depths, NUM_DIRECTIONS]
    }

    fn action_mask(&self, _state: &CubeState, mask: &mut [bool]) {
        mask.fill(true);
    }

    fn observation_spec(&self) -> Spec {
        let n = self.cube_size();
        Spec::composite([
            (
                "cube",
                Spec::bounded(vec![NUM_FACES, n, n], DType::Int, vec![0.0], vec![(NUM_FACES - 1) as f64]).expect("static"),
            ),
            ("step_count", Spec::bounded_scalar(DType::Int, 0.0, self.time_limit as f64).expect("static")),
        ])
        .expect("static spec")
    }

    fn observe(&self, state: &CubeState) -> Value {
        let n = self.cube_size();
        Value::composite([
            (
                "cube",
                ArrayValue::ints(vec![NUM_FACES, n, n], state.stickers.iter().map(|&c| c as i64).collect()).into(),
            ),
            ("step_count", Value::from(state.step_count as i64)),
        ])
    }

    fn obs_dim(&self) -> usize {
        NUM_FACES * self.cube_size() * self.cube_size() * NUM_FACES + 1
    }

    fn encode(&self, state: &CubeState, out: &mut [f64]) {
        out.fill(0.0);
        for (i, &c) in state.stickers.iter().enumerate() {
            out[i * NUM_FACES + c as usize] = 1.0;
        }
        *out.last_mut().unwrap() = state.step_count as f64 / self.time_limit as f64;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(stickers: &[u8]) -> [usize; 6] {
        let mut c = [0; 6];
        for &s in stickers {
            c[s as usize] += 1;
        }
        c
    }

    #[test]
    fn eighteen_moves_at_size_three() {
        let t = MoveTables::new(3);
        assert_eq!(t.num_moves(), 18);
        let solved = solved_stickers(3);
        for m in t.moves() {
            let once = t.apply(&solved, m);
            assert_ne!(once, solved, "{m:?} should change the cube");
            assert_eq!(t.apply(&once, m.inverse()), solved, "{m:?}");
            if m.direction == 2 {
                assert_eq!(t.apply(&once, m), solved);
            }
            // Four quarter turns are the identity.
            if m.direction == 0 {
                let mut s = solved.clone();
                for _ in 0..4 {
                    s = t.apply(&s, m);
                }
                assert_eq!(s, solved);
            }
        }
    }

    #[test]
    fn up_turn_brings_right_row_to_front() {
        let t = MoveTables::new(3);
        let s = t.apply(&solved_stickers(3), CubeMove::new(0, 0, 0));
        // Front face top row now shows the right face colour.
        assert_eq!(&s[9..12], &[2, 2, 2]);
        // Left face top row shows the front colour.
        assert_eq!(&s[36..39], &[1, 1, 1]);
        // Up face itself is untouched in colour.
        assert!(s[0..9].iter().all(|&c| c == 0));
        // Front face rows 1 and 2 unchanged.
        assert!(s[12..18].iter().all(|&c| c == 1));
    }

    #[test]
    fn front_turn_cycles_up_bottom_row_to_right() {
        let t = MoveTables::new(3);
        let s = t.apply(&solved_stickers(3), CubeMove::new(1, 0, 0));
        // The up face's bottom row (adjacent to front) now carries left colour.
        assert_eq!(&s[6..9], &[4, 4, 4]);
        // The right face's left column carries up colour.
        assert_eq!([s[18], s[21], s[24]], [0, 0, 0]);
    }

    #[test]
    fn inner_layers_on_larger_cubes() {
        let t = MoveTables::new(4);
        assert_eq!(t.depths(), 2);
        let solved = solved_stickers(4);
        for m in t.moves() {
            let once = t.apply(&solved, m);
            assert_eq!(t.apply(&once, m.inverse()), solved);
        }
        // An inner slice does not touch the turned face itself.
        let s = t.apply(&solved, CubeMove::new(0, 1, 0));
        assert!(s[0..16].iter().all(|&c| c == 0));
        assert_ne!(s, solved);
    }

    #[test]
    fn random_products_conserve_colours() {
        let t = MoveTables::new(3);
        let mut s = solved_stickers(3);
        let mut st = RngKey::from_seed(3).stream();
        let moves: Vec<_> = t.moves().collect();
        for _ in 0..100 {
            s = t.apply(&s, moves[st.index(moves.len())]);
            assert_eq!(counts(&s), [9; 6]);
        }
    }

    #[test]
    fn out_of_range_move_errors() {
        let t = MoveTables::new(3);
        let s = solved_stickers(3);
        assert!(cube_move(&t, &s, 6, 0, 0).is_err());
        assert!(cube_move(&t, &s, 0, 1, 0).is_err());
        assert!(cube_move(&t, &s, 0, 0, 3).is_err());
        let env = RubiksCube::new(3, 3, 20).unwrap();
        let (st, _) = env.reset(RngKey::from_seed(0));
        assert!(env.step(&st, &[0, 0, 5]).is_err());
        assert!(env.step(&st, &[0, 0]).is_err());
    }

    #[test]
    fn inverting_the_scramble_solves() {
        let env = RubiksCube::new(3, 1, 20).unwrap();
        let key = RngKey::from_seed(12);
        let moves = env.scramble_moves(key);
        let (s, _) = env.reset(key);
        let inv = moves[0].inverse();
        let (s2, ts) = env.step(&s, &[inv.face as i64, inv.depth as i64, inv.direction as i64]).unwrap();
        assert!(ts.last());
        assert_eq!(ts.reward, 1.0);
        assert_eq!(ts.discount, 0.0);
        assert_eq!(ts.extras["solved"], 1.0);
        assert!(is_solved(&s2.stickers, 3));
    }

    #[test]
    fn zero_scrambles_is_solved() {
        let env = RubiksCube::new(3, 0, 20).unwrap();
        let (s, _) = env.reset(RngKey::from_seed(1));
        assert!(is_solved(&s.stickers, 3));
    }

    #[test]
    fn time_limit_truncates() {
        let env = RubiksCube::new(3, 5, 2).unwrap();
        let (s, _) = env.reset(RngKey::from_seed(2));
        let (s, ts) = env.step(&s, &[0, 0, 0]).unwrap();
        if !ts.last() {
            let (_, ts) = env.step(&s, &[0, 0, 0]).unwrap();
            assert!(ts.last());
            if ts.reward == 0.0 {
                assert_eq!(ts.discount, 1.0);
            }
        }
    }
}
