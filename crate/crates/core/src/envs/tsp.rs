//! Travelling salesman.
//!
//! Each action visits one unvisited city; the first action picks the start.
//! Once every city is visited the tour closes back to the start and the episode
//! terminates. By default the whole reward, `-tour_length`, arrives on that last
//! step; with `dense` each step pays minus the edge it adds (the last step also
//! pays the closing edge), which sums to the same return.
//!
//! Flat encoding, per city: `x, y, visited, is_current, is_start,
//! dist_to_current, dist_to_start` (distances 0 before the first step).

use crate::env::{check_discrete, Environment, Transition};
use crate::error::{Error, Result};
use crate::generators::{CoordinateGenerator, Point};
use crate::rng::RngKey;
use crate::spec::{ArrayValue, DType, Spec, Value};

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Closed tour length along `order`, which must be a permutation of all cities.
pub fn tour_length(coordinates: &[Point], order: &[usize]) -> Result<f64> {
    let n = coordinates.len();
    if order.len() != n {
        return Err(Error::invalid_arg(format!("order has {} entries for {n} cities", order.len())));
    }
    let mut seen = vec![false; n];
    for &c in order {
        if c >= n || std::mem::replace(&mut seen[c], true) {
            return Err(Error::invalid_arg("order is not a permutation of the cities"));
        }
    }
    Ok(closed_length(coordinates, order))
}

pub(crate) fn closed_length(coordinates: &[Point], order: &[usize]) -> f64 {
    if order.is_empty() {
        return 0.0;
    }
    let open: f64 = order.windows(2).map(|w| dist(coordinates[w[0]], coordinates[w[1]])).sum();
    open + dist(coordinates[order[order.len() - 1]], coordinates[order[0]])
}

#[derive(Clone, Debug, PartialEq)]
pub struct TspState {
    pub coordinates: Vec<Point>,
    pub visited: Vec<bool>,
    pub trajectory: Vec<usize>,
    pub position: Option<usize>,
    pub step_count: u32,
    pub key: RngKey,
    pub done: bool,
}

#[derive(Clone, Debug)]
pub struct Tsp {
    num_cities: usize,
    generator: CoordinateGenerator,
    dense: bool,
}

impl Tsp {
    pub fn new(num_cities: usize) -> Result<Self> {
        Self::with_generator(num_cities, CoordinateGenerator::Uniform)
    }

    pub fn with_generator(num_cities: usize, generator: CoordinateGenerator) -> Result<Self> {
        generator.validate(num_cities)?;
        Ok(Self { num_cities, generator, dense: false })
    }

    /// Per-edge rewards instead of one terminal reward.
    pub fn dense(mut self, dense: bool) -> Self {
        self.dense = dense;
        self
    }

    pub fn num_cities(&self) -> usize {
        self.num_cities
    }

    pub fn generator(&self) -> &CoordinateGenerator {
        &self.generator
    }

    pub fn state_from_coordinates(&self, coordinates: Vec<Point>, key: RngKey) -> Result<TspState> {
        if coordinates.len() != self.num_cities {
            return Err(Error::invalid_arg(format!(
                "expected {} cities, got {}",
                self.num_cities,
                coordinates.len()
            )));
        }
        if coordinates.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid_arg("coordinates must lie in the unit square"));
        }
        Ok(TspState {
            visited: vec![false; coordinates.len()],
            coordinates,
            trajectory: Vec::new(),
            position: None,
            step_count: 0,
            key,
            done: false,
        })
    }
}

impl Environment for Tsp {
    type State = TspState;

    fn name(&self) -> &str {
        "TSP"
    }

    fn init(&self, key: RngKey) -> TspState {
        let (gen, own) = key.split2();
        let coordinates = self.generator.generate(gen, self.num_cities);
        self.state_from_coordinates(coordinates, own).expect("generator output fits the instance")
    }

    fn check_action(&self, state: &TspState, action: &[i64]) -> Result<()> {
        check_discrete(action, self.num_cities, |a| !state.visited[a]).map(|_| ())
    }

    fn apply(&self, state: &mut TspState, action: &[i64]) -> Transition {
        let city = action[0] as usize;
        let mut reward = match (self.dense, state.position) {
            (true, Some(prev)) => -dist(state.coordinates[prev], state.coordinates[city]),
            _ => 0.0,
        };
        state.visited[city] = true;
        state.trajectory.push(city);
        state.position = Some(city);
        state.step_count += 1;
        let complete = state.trajectory.len() == self.num_cities;
        if complete {
            reward = if self.dense {
                reward - dist(state.coordinates[city], state.coordinates[state.trajectory[0]])
            } else {
                -closed_length(&state.coordinates, &state.trajectory)
            };
        }
        state.done = complete;
        if complete {
            Transition::termination(reward)
        } else {
            Transition::mid(reward)
        }
    }

    fn is_done(&self, state: &TspState) -> bool {
        state.done
    }

    fn state_key(&self, state: &TspState) -> RngKey {
        state.key
    }

    fn action_dims(&self) -> Vec<usize> {
        vec![self.num_cities]
    }

    fn action_mask(&self, state: &TspState, mask: &mut [bool]) {
        for (m, v) in mask.iter_mut().zip(&state.visited) {
            *m = !v;
        }
    }

    fn observation_spec(&self) -> Spec {
        let n = self.num_cities;
        let last = (n - 1) as f64;
        Spec::composite([
            ("coordinates", Spec::bounded(vec![n, 2], DType::Float, vec![0.0], vec![1.0]).expect("static")),
            ("position", Spec::bounded_scalar(DType::Int, -1.0, last).expect("static")),
            ("trajectory", Spec::bounded(vec![n], DType::Int, vec![-1.0], vec![last]).expect("static")),
            ("action_mask", Spec::array(vec![n], DType::Bool)),
        ])
        .expect("static spec")
    }

    fn observe(&self, state: &TspState) -> Value {
        let n = self.num_cities;
        let mut trajectory: Vec<i64> = state.trajectory.iter().map(|&c| c as i64).collect();
        trajectory.resize(n, -1);
        Value::composite([
            ("coordinates", ArrayValue::floats(vec![n, 2], state.coordinates.iter().flatten().copied().collect()).into()),
            ("position", Value::from(state.position.map_or(-1, |p| p as i64))),
            ("trajectory", Value::from(trajectory)),
            ("action_mask", ArrayValue::bools(vec![n], self.mask_vec(state)).into()),
        ])
    }

    fn obs_dim(&self) -> usize {
        7 * self.num_cities
    }

    fn encode(&self, state: &TspState, out: &mut [f64]) {
        let first = state.trajectory.first().copied();
        let c = &state.coordinates;
        for (i, chunk) in out.chunks_exact_mut(7).enumerate() {
            chunk[0] = c[i][0];
            chunk[1] = c[i][1];
            chunk[2] = state.visited[i] as u8 as f64;
            chunk[3] = (state.position == Some(i)) as u8 as f64;
            chunk[4] = (first == Some(i)) as u8 as f64;
            chunk[5] = state.position.map_or(0.0, |p| dist(c[p], c[i]));
            chunk[6] = first.map_or(0.0, |f| dist(c[f], c[i]));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(env: &Tsp, s: &TspState, order: &[usize]) -> (f64, Vec<f64>) {
        let mut s = s.clone();
        let mut rewards = Vec::new();
        for &c in order {
            let (next, ts) = env.step(&s, &[c as i64]).unwrap();
            rewards.push(ts.reward);
            s = next;
        }
        (rewards.iter().sum(), rewards)
    }

    #[test]
    fn square_perimeter() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert_eq!(tour_length(&sq, &[0, 1, 2, 3]).unwrap(), 4.0);
        assert!(tour_length(&sq, &[0, 1, 1, 3]).is_err());
        assert!(tour_length(&sq, &[0, 1, 2]).is_err());
        assert!(tour_length(&sq, &[0, 1, 2, 4]).is_err());
    }

    #[test]
    fn two_cities_pay_twice_the_distance() {
        let env = Tsp::new(2).unwrap();
        let s = env.state_from_coordinates(vec![[0.1, 0.2], [0.4, 0.6]], RngKey::from_seed(0)).unwrap();
        let (ret, rewards) = run(&env, &s, &[1, 0]);
        assert_eq!(rewards[0], 0.0);
        assert!((ret + 1.0).abs() < 1e-12);
    }

    #[test]
    fn dense_and_terminal_returns_agree() {
        let env = Tsp::new(9).unwrap();
        let dense = env.clone().dense(true);
        let (s, _) = env.reset(RngKey::from_seed(4));
        let order: Vec<usize> = RngKey::from_seed(5).permutation(9);
        let (a, ra) = run(&env, &s, &order);
        let (b, rb) = run(&dense, &s, &order);
        assert!(ra[..8].iter().all(|&r| r == 0.0));
        assert!(rb[1..].iter().all(|&r| r < 0.0));
        assert!((a - b).abs() < 1e-12);
        assert!((a + tour_length(&s.coordinates, &order).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn revisit_is_rejected_and_finish_is_terminal() {
        let env = Tsp::new(3).unwrap();
        let (s, ts) = env.reset(RngKey::from_seed(1));
        assert_eq!(env.observe(&s).get("position").unwrap().to_ints().unwrap(), vec![-1]);
        assert!(env.observation_spec().validate(&ts.observation).is_ok());
        let (s, _) = env.step(&s, &[2]).unwrap();
        assert!(matches!(env.step(&s, &[2]), Err(Error::InvalidAction(_))));
        let (s, _) = env.step(&s, &[0]).unwrap();
        let (s, ts) = env.step(&s, &[1]).unwrap();
        assert!(ts.last());
        assert_eq!(ts.discount, 0.0);
        assert!(env.observation_spec().validate(&ts.observation).is_ok());
        assert!(matches!(env.step(&s, &[1]), Err(Error::ContractViolation(_))));
    }
}
