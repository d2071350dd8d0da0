//! Reference solvers and search helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet, VecDeque};

use purenv::envs::jobshop::{Instance, JobShopState};
use purenv::generators::Point;
use purenv::Environment;

/// Every legal joint action: the product of per-dimension legal choices,
/// filtered by the environment's own validation.
pub fn legal_actions<E: Environment>(env: &E, s: &E::State) -> Vec<Vec<i64>> {
    let dims = env.action_dims();
    let mut mask = vec![false; env.mask_len()];
    env.action_mask(s, &mut mask);
    let mut acts: Vec<Vec<i64>> = vec![Vec::new()];
    let mut off = 0;
    for &n in &dims {
        let choices: Vec<i64> = (0..n).filter(|&j| mask[off + j]).map(|j| j as i64).collect();
        acts = acts
            .into_iter()
            .flat_map(|prefix| {
                choices.iter().map(move |&c| {
                    let mut a = prefix.clone();
                    a.push(c);
                    a
                })
            })
            .collect();
        off += n;
    }
    acts.retain(|a| env.validate_step(s, a).is_ok());
    acts
}

/// Best total reward over every legal action sequence from `s`.
///
/// With `key`, the best future return is memoized by the key, which must
/// determine it.
pub fn best_return<E: Environment>(
    env: &E,
    s: &E::State,
    key: Option<&dyn Fn(&E::State) -> Vec<u64>>,
    memo: &mut HashMap<Vec<u64>, f64>,
) -> f64 {
    let k = key.map(|f| f(s));
    if let Some(v) = k.as_ref().and_then(|k| memo.get(k)) {
        return *v;
    }
    let mut best = f64::NEG_INFINITY;
    for a in legal_actions(env, s) {
        let mut next = s.clone();
        let t = env.apply(&mut next, &a);
        let v = if t.is_last() { t.reward } else { t.reward + best_return(env, &next, key, memo) };
        best = best.max(v);
    }
    if let Some(k) = k {
        memo.insert(k, best);
    }
    best
}

pub fn euclid(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

/// Shortest closed tour by enumerating every order with city 0 first.
pub fn tsp_brute_force(c: &[Point]) -> f64 {
    let rest: Vec<usize> = (1..c.len()).collect();
    permutations(&rest)
        .into_iter()
        .map(|p| {
            let mut tour = vec![0];
            tour.extend(p);
            (0..tour.len()).map(|i| euclid(c[tour[i]], c[tour[(i + 1) % tour.len()]])).sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Shortest set of depot-based routes: every customer order, every split of
/// it into consecutive capacity-feasible routes. `coords[0]` is the depot and
/// `demands` cover customers `1..`.
pub fn cvrp_brute_force(coords: &[Point], demands: &[u32], capacity: u32) -> f64 {
    let n = demands.len();
    let customers: Vec<usize> = (1..=n).collect();
    let mut best = f64::INFINITY;
    for order in permutations(&customers) {
        for cuts in 0u32..(1 << (n - 1)) {
            let mut routes: Vec<Vec<usize>> = vec![vec![order[0]]];
            for i in 1..n {
                if cuts & (1 << (i - 1)) != 0 {
                    routes.push(Vec::new());
                }
                routes.last_mut().unwrap().push(order[i]);
            }
            if routes.iter().any(|r| r.iter().map(|&c| demands[c - 1]).sum::<u32>() > capacity) {
                continue;
            }
            let len: f64 = routes
                .iter()
                .map(|r| {
                    let mut path = vec![0];
                    path.extend(r);
                    path.push(0);
                    path.windows(2).map(|w| euclid(coords[w[0]], coords[w[1]])).sum::<f64>()
                })
                .sum();
            best = best.min(len);
        }
    }
    best
}

/// Best total value over all `2^n` subsets within capacity.
pub fn knapsack_brute_force(weights: &[f64], values: &[f64], capacity: f64) -> f64 {
    let n = weights.len();
    (0u32..(1 << n))
        .filter_map(|set| {
            let (w, v) = (0..n).filter(|i| set & (1 << i) != 0).fold((0.0, 0.0), |(w, v), i| (w + weights[i], v + values[i]));
            (w <= capacity).then_some(v)
        })
        .fold(0.0, f64::max)
}

/// Optimal makespan: every per-machine processing order, each scheduled as
/// early as job precedence and machine order allow.
pub fn jobshop_brute_force(instance: &Instance, machines: usize) -> u32 {
    let mut on_machine: Vec<Vec<(usize, usize)>> = vec![Vec::new(); machines];
    for (j, ops) in instance.iter().enumerate() {
        for (k, &(m, _)) in ops.iter().enumerate() {
            on_machine[m].push((j, k));
        }
    }
    let orders: Vec<Vec<Vec<usize>>> = on_machine.iter().map(|ops| permutations(&(0..ops.len()).collect::<Vec<_>>())).collect();
    let mut best = u32::MAX;
    let mut choice = vec![0usize; machines];
    loop {
        let seqs: Vec<Vec<(usize, usize)>> =
            (0..machines).map(|m| orders[m][choice[m]].iter().map(|&i| on_machine[m][i]).collect()).collect();
        if let Some(ms) = schedule(instance, &seqs) {
            best = best.min(ms);
        }
        let mut m = 0;
        while m < machines {
            choice[m] += 1;
            if choice[m] < orders[m].len() {
                break;
            }
            choice[m] = 0;
            m += 1;
        }
        if m == machines {
            return best;
        }
    }
}

fn schedule(instance: &Instance, seqs: &[Vec<(usize, usize)>]) -> Option<u32> {
    let mut end: HashMap<(usize, usize), u32> = HashMap::new();
    let mut pos = vec![0usize; seqs.len()];
    let total: usize = seqs.iter().map(Vec::len).sum();
    while end.len() < total {
        let mut progressed = false;
        for (m, seq) in seqs.iter().enumerate() {
            let Some(&(j, k)) = seq.get(pos[m]) else { continue };
            let job_ready = if k == 0 { Some(0) } else { end.get(&(j, k - 1)).copied() };
            let Some(job_ready) = job_ready else { continue };
            let machine_ready = if pos[m] == 0 { 0 } else { end[&seq[pos[m] - 1]] };
            end.insert((j, k), job_ready.max(machine_ready) + instance[j][k].1);
            pos[m] += 1;
            progressed = true;
        }
        if !progressed {
            return None;
        }
    }
    end.values().copied().max()
}

/// Memo key for JobShop search: everything the remaining return depends on.
pub fn jobshop_key(s: &JobShopState) -> Vec<u64> {
    let mut k: Vec<u64> = s.op_index.iter().map(|&v| v as u64).collect();
    k.extend(s.machine_busy_until.iter().map(|&v| v as u64));
    k.extend(s.machine_job.iter().map(|j| j.map_or(u64::MAX, |j| j as u64)));
    k.push(s.step_count as u64);
    k
}

/// Independent 2048 line rule: compact left, merge equal neighbours once from
/// the left, compact again.
pub fn reference_line(line: [u32; 4]) -> ([u32; 4], u32) {
    let tiles: Vec<u32> = line.iter().copied().filter(|&v| v != 0).collect();
    let mut out = Vec::new();
    let mut reward = 0;
    let mut i = 0;
    while i < tiles.len() {
        if i + 1 < tiles.len() && tiles[i] == tiles[i + 1] {
            out.push(2 * tiles[i]);
            reward += 2 * tiles[i];
            i += 2;
        } else {
            out.push(tiles[i]);
            i += 1;
        }
    }
    out.resize(4, 0);
    ([out[0], out[1], out[2], out[3]], reward)
}

/// Every 3x3 arrangement reachable from the solved puzzle by blank moves.
pub fn reachable_3x3() -> HashSet<Vec<u8>> {
    let start: Vec<u8> = vec![1, 2, 3, 4, 5, 6, 7, 8, 0];
    let mut seen = HashSet::from([start.clone()]);
    let mut q = VecDeque::from([start]);
    while let Some(t) = q.pop_front() {
        let b = t.iter().position(|&v| v == 0).unwrap();
        let (r, c) = (b / 3, b % 3);
        let mut nbrs = Vec::new();
        if r > 0 {
            nbrs.push(b - 3);
        }
        if r < 2 {
            nbrs.push(b + 3);
        }
        if c > 0 {
            nbrs.push(b - 1);
        }
        if c < 2 {
            nbrs.push(b + 1);
        }
        for n in nbrs {
            let mut next = t.clone();
            next.swap(b, n);
            if seen.insert(next.clone()) {
                q.push_back(next);
            }
        }
    }
    seen
}
