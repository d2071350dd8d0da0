//! 0/1 knapsack.
//!
//! Each action packs one unpacked item that still fits; the reward is that
//! item's value. The episode terminates as soon as no remaining item fits.
//!
//! Flat encoding, per item: `weight, value, packed, fits`, then
//! `remaining_budget / capacity`.

use crate::env::{check_discrete, Environment, Transition};
use crate::error::{Error, Result};
use crate::rng::RngKey;
use crate::spec::{ArrayValue, DType, Spec, Value};

#[derive(Clone, Debug, PartialEq)]
pub struct KnapsackState {
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
    pub packed: Vec<bool>,
    pub remaining_budget: f64,
    pub step_count: u32,
    pub key: RngKey,
    pub done: bool,
}

impl KnapsackState {
    pub fn packed_value(&self) -> f64 {
        self.values.iter().zip(&self.packed).filter(|(_, &p)| p).map(|(v, _)| v).sum()
    }

    pub fn packed_weight(&self) -> f64 {
        self.weights.iter().zip(&self.packed).filter(|(_, &p)| p).map(|(w, _)| w).sum()
    }
}

#[derive(Clone, Debug)]
pub struct Knapsack {
    num_items: usize,
    capacity: f64,
}

impl Knapsack {
    /// `capacity` must be at least 1 so that, with weights below 1, the first
    /// step always has a legal item.
    pub fn new(num_items: usize, capacity: f64) -> Result<Self> {
        if num_items == 0 {
            return Err(Error::invalid_arg("knapsack needs at least one item"));
        }
        if !(capacity >= 1.0 && capacity.is_finite()) {
            return Err(Error::invalid_arg("capacity must be finite and >= 1"));
        }
        Ok(Self { num_items, capacity })
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn state_from_items(&self, weights: Vec<f64>, values: Vec<f64>, key: RngKey) -> Result<KnapsackState> {
        if weights.len() != self.num_items || values.len() != self.num_items {
            return Err(Error::invalid_arg("item count does not match the environment"));
        }
        if weights.iter().chain(&values).any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::invalid_arg("weights and values must be positive"));
        }
        let s = KnapsackState {
            packed: vec![false; self.num_items],
            weights,
            values,
            remaining_budget: self.capacity,
            step_count: 0,
            key,
            done: false,
        };
        if !self.any_fits(&s) {
            return Err(Error::invalid_arg("no item fits the empty knapsack"));
        }
        Ok(s)
    }

    fn fits(&self, s: &KnapsackState, i: usize) -> bool {
        !s.packed[i] && s.weights[i] <= s.remaining_budget
    }

    fn any_fits(&self, s: &KnapsackState) -> bool {
        (0..self.num_items).any(|i| self.fits(s, i))
    }
}

impl Environment for Knapsack {
    type State = KnapsackState;

    fn name(&self) -> &str {
        "Knapsack"
    }

    fn init(&self, key: RngKey) -> KnapsackState {
        let (gen, own) = key.split2();
        let mut s = gen.stream();
        // Open interval: reject the (2^-53 likely) exact zero.
        let mut draw = || loop {
            let u = s.unit();
            if u > 0.0 {
                return u;
            }
        };
        let weights: Vec<f64> = (0..self.num_items).map(|_| draw()).collect();
        let values: Vec<f64> = (0..self.num_items).map(|_| draw()).collect();
        self.state_from_items(weights, values, own).expect("capacity >= 1 admits every item")
    }

    fn check_action(&self, state: &KnapsackState, action: &[i64]) -> Result<()> {
        check_discrete(action, self.num_items, |a| self.fits(state, a)).map(|_| ())
    }

    fn apply(&self, state: &mut KnapsackState, action: &[i64]) -> Transition {
        let i = action[0] as usize;
        state.packed[i] = true;
        state.remaining_budget -= state.weights[i];
        state.step_count += 1;
        state.done = !self.any_fits(state);
        if state.done {
            Transition::termination(state.values[i])
        } else {
            Transition::mid(state.values[i])
        }
    }

    fn is_done(&self, state: &KnapsackState) -> bool {
        state.done
    }

    fn state_key(&self, state: &KnapsackState) -> RngKey {
        state.key
    }

    fn action_dims(&self) -> Vec<usize> {
        vec![self.num_items]
    }

    fn action_mask(&self, state: &KnapsackState, mask: &mut [bool]) {
        for (i, m) in mask.iter_mut().enumerate() {
            *m = self.fits(state, i);
        }
    }

    fn observation_spec(&self) -> Spec {
        let n = self.num_items;
        Spec::composite([
            ("weights", Spec::bounded(vec![n], DType::Float, vec![0.0], vec![1.0]).expect("static")),
            ("values", Spec::bounded(vec![n], DType::Float, vec![0.0], vec![1.0]).expect("static")),
            ("packed_items", Spec::array(vec![n], DType::Bool)),
            ("remaining_budget", Spec::bounded_scalar(DType::Float, 0.0, self.capacity).expect("static")),
            ("action_mask", Spec::array(vec![n], DType::Bool)),
        ])
        .expect("static spec")
    }

    fn observe(&self, state: &KnapsackState) -> Value {
        let n = self.num_items;
        Value::composite([
            ("weights", ArrayValue::floats(vec![n], state.weights.clone()).into()),
            ("values", ArrayValue::floats(vec![n], state.values.clone()).into()),
            ("packed_items", ArrayValue::bools(vec![n], state.packed.clone()).into()),
            ("remaining_budget", Value::from(state.remaining_budget.max(0.0))),
            ("action_mask", ArrayValue::bools(vec![n], self.mask_vec(state)).into()),
        ])
    }

    fn obs_dim(&self) -> usize {
        4 * self.num_items + 1
    }

    fn encode(&self, state: &KnapsackState, out: &mut [f64]) {
        let n = self.num_items;
        for (i, chunk) in out[..4 * n].chunks_exact_mut(4).enumerate() {
            chunk[0] = state.weights[i];
            chunk[1] = state.values[i];
            chunk[2] = state.packed[i] as u8 as f64;
            chunk[3] = self.fits(state, i) as u8 as f64;
        }
        out[4 * n] = state.remaining_budget / self.capacity;
    }
}
