//! Capacitated vehicle routing with a single vehicle.
//!
//! Node 0 is the depot, nodes `1..=N` are customers. The vehicle starts at the
//! depot with full capacity; visiting a customer serves its whole demand and
//! visiting the depot refills. The episode terminates when every customer is
//! served and the vehicle is back at the depot, with reward `-route_length`
//! (or per-edge rewards with `dense`).
//!
//! Flat encoding, per node: `x, y, demand / capacity, visited, is_current`,
//! followed by `remaining / capacity`.

use crate::env::{check_discrete, Environment, Transition};
use crate::envs::tsp::dist;
use crate::error::{Error, Result};
use crate::generators::{CoordinateGenerator, Point};
use crate::rng::RngKey;
use crate::spec::{ArrayValue, DType, Spec, Value};

pub const MIN_DEMAND: u32 = 1;
pub const MAX_DEMAND: u32 = 9;

/// Vehicle capacity used when none is given.
pub fn default_capacity(num_customers: usize) -> u32 {
    match num_customers {
        0..=20 => 30,
        21..=50 => 40,
        _ => 50,
    }
}

/// Length of a route given as node indices, including the legs it lists only.
pub fn route_length(coordinates: &[Point], route: &[usize]) -> f64 {
    route.windows(2).map(|w| dist(coordinates[w[0]], coordinates[w[1]])).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvrpState {
    /// Depot first.
    pub coordinates: Vec<Point>,
    /// Depot first, with demand 0.
    pub demands: Vec<u32>,
    pub capacity: u32,
    pub remaining_capacity: u32,
    /// Depot first; the depot entry stays `false`.
    pub visited: Vec<bool>,
    pub position: usize,
    pub route: Vec<usize>,
    pub step_count: u32,
    pub key: RngKey,
    pub done: bool,
}

#[derive(Clone, Debug)]
pub struct Cvrp {
    num_customers: usize,
    capacity: u32,
    generator: CoordinateGenerator,
    dense: bool,
}

impl Cvrp {
    pub fn new(num_customers: usize) -> Result<Self> {
        Self::with_capacity(num_customers, default_capacity(num_customers))
    }

    pub fn with_capacity(num_customers: usize, capacity: u32) -> Result<Self> {
        Self::with_generator(num_customers, capacity, CoordinateGenerator::Uniform)
    }

    pub fn with_generator(num_customers: usize, capacity: u32, generator: CoordinateGenerator) -> Result<Self> {
        if num_customers == 0 {
            return Err(Error::invalid_arg("CVRP needs at least one customer"));
        }
        if capacity < MAX_DEMAND {
            return Err(Error::invalid_arg(format!("capacity must be >= {MAX_DEMAND}, the largest demand")));
        }
        generator.validate(num_customers + 1)?;
        Ok(Self { num_customers, capacity, generator, dense: false })
    }

    pub fn dense(mut self, dense: bool) -> Self {
        self.dense = dense;
        self
    }

    pub fn num_customers(&self) -> usize {
        self.num_customers
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn num_nodes(&self) -> usize {
        self.num_customers + 1
    }

    /// Builds a state from a depot-first coordinate list and customer demands.
    pub fn state_from_instance(&self, coordinates: Vec<Point>, customer_demands: &[u32], key: RngKey) -> Result<CvrpState> {
        if coordinates.len() != self.num_nodes() || customer_demands.len() != self.num_customers {
            return Err(Error::invalid_arg("instance size does not match the environment"));
        }
        if customer_demands.iter().any(|&d| d == 0 || d > self.capacity) {
            return Err(Error::invalid_arg("each demand must be in 1..=capacity"));
        }
        let mut demands = vec![0];
        demands.extend_from_slice(customer_demands);
        Ok(CvrpState {
            coordinates,
            demands,
            capacity: self.capacity,
            remaining_capacity: self.capacity,
            visited: vec![false; self.num_nodes()],
            position: 0,
            route: vec![0],
            step_count: 0,
            key,
            done: false,
        })
    }

    fn legal(&self, s: &CvrpState, node: usize) -> bool {
        if node == 0 {
            s.position != 0
        } else {
            !s.visited[node] && s.demands[node] <= s.remaining_capacity
        }
    }
}

impl Environment for Cvrp {
    type State = CvrpState;

    fn name(&self) -> &str {
        "CVRP"
    }

    fn init(&self, key: RngKey) -> CvrpState {
        let (gen, own) = key.split2();
        let (coord_key, demand_key) = gen.split2();
        let coordinates = self.generator.generate(coord_key, self.num_nodes());
        let mut s = demand_key.stream();
        let demands: Vec<u32> =
            (0..self.num_customers).map(|_| s.int_in(MIN_DEMAND as i64, MAX_DEMAND as i64 + 1) as u32).collect();
        self.state_from_instance(coordinates, &demands, own).expect("generated instance is valid")
    }

    fn check_action(&self, state: &CvrpState, action: &[i64]) -> Result<()> {
        check_discrete(action, self.num_nodes(), |a| self.legal(state, a)).map(|_| ())
    }

    fn apply(&self, state: &mut CvrpState, action: &[i64]) -> Transition {
        let node = action[0] as usize;
        let edge = dist(state.coordinates[state.position], state.coordinates[node]);
        if node == 0 {
            state.remaining_capacity = state.capacity;
        } else {
            state.visited[node] = true;
            state.remaining_capacity -= state.demands[node];
        }
        state.position = node;
        state.route.push(node);
        state.step_count += 1;
        let complete = node == 0 && state.visited[1..].iter().all(|&v| v);
        state.done = complete;
        match (complete, self.dense) {
            (true, false) => Transition::termination(-route_length(&state.coordinates, &state.route)),
            (true, true) => Transition::termination(-edge),
            (false, true) => Transition::mid(-edge),
            (false, false) => Transition::mid(0.0),
        }
    }

    fn is_done(&self, state: &CvrpState) -> bool {
        state.done
    }

    fn state_key(&self, state: &CvrpState) -> RngKey {
        state.key
    }

    fn action_dims(&self) -> Vec<usize> {
        vec![self.num_nodes()]
    }

    fn action_mask(&self, state: &CvrpState, mask: &mut [bool]) {
        for (i, m) in mask.iter_mut().enumerate() {
            *m = self.legal(state, i);
        }
    }

    fn observation_spec(&self) -> Spec {
        let n = self.num_nodes();
        let cap = self.capacity as f64;
        Spec::composite([
            ("coordinates", Spec::bounded(vec![n, 2], DType::Float, vec![0.0], vec![1.0]).expect("static")),
            ("demands", Spec::bounded(vec![n], DType::Int, vec![0.0], vec![cap]).expect("static")),
            ("position", Spec::bounded_scalar(DType::Int, 0.0, (n - 1) as f64).expect("static")),
            ("capacity", Spec::bounded_scalar(DType::Int, 0.0, cap).expect("static")),
            ("visited", Spec::array(vec![n], DType::Bool)),
            ("action_mask", Spec::array(vec![n], DType::Bool)),
        ])
        .expect("static spec")
    }

    fn observe(&self, state: &CvrpState) -> Value {
        let n = self.num_nodes();
        Value::composite([
            ("coordinates", ArrayValue::floats(vec![n, 2], state.coordinates.iter().flatten().copied().collect()).into()),
            ("demands", Value::from(state.demands.iter().map(|&d| d as i64).collect::<Vec<_>>())),
            ("position", Value::from(state.position as i64)),
            ("capacity", Value::from(state.remaining_capacity as i64)),
            ("visited", ArrayValue::bools(vec![n], state.visited.clone()).into()),
            ("action_mask", ArrayValue::bools(vec![n], self.mask_vec(state)).into()),
        ])
    }

    fn obs_dim(&self) -> usize {
        5 * self.num_nodes() + 1
    }

    fn encode(&self, state: &CvrpState, out: &mut [f64]) {
        let cap = state.capacity as f64;
        let n = self.num_nodes();
        for (i, chunk) in out[..5 * n].chunks_exact_mut(5).enumerate() {
            chunk[0] = state.coordinates[i][0];
            chunk[1] = state.coordinates[i][1];
            chunk[2] = state.demands[i] as f64 / cap;
            chunk[3] = state.visited[i] as u8 as f64;
            chunk[4] = (state.position == i) as u8 as f64;
        }
        out[5 * n] = state.remaining_capacity as f64 / cap;
    }
}
