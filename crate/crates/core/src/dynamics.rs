//! Energy and asynchronous sign-update dynamics of a single network.
//!
//! One "iteration" is one single-node update. Nodes are visited in sweeps:
//! each sweep is a fresh seeded permutation of `0..n`, so any `n`
//! consecutive updates starting at a sweep boundary touch every node once.
//! A node whose local field is exactly zero keeps its state.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed::{self, Rng};
use crate::types::{BipolarState, WeightMatrix};

/// Default update budget for a run to convergence.
pub const DEFAULT_MAX_UPDATES: usize = 30_000;

/// Counters and energies for one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunStats {
    pub node_updates_performed: u64,
    pub flips: u64,
    pub initial_energy: f64,
    pub final_energy: f64,
    /// A complete sweep produced no flips, so the final state is a fixed point.
    pub converged: bool,
    /// Multiply-adds spent computing local fields.
    pub multiply_adds: u64,
}

fn check_dims(w: &WeightMatrix, len: usize) -> Result<()> {
    if w.n() != len {
        return Err(Error::Dimension(format!(
            "state has {len} entries, network has {} nodes",
            w.n()
        )));
    }
    Ok(())
}

fn field(row: &[f64], s: &[f64]) -> f64 {
    row.iter().zip(s).map(|(a, b)| a * b).sum()
}

fn energy_of(w: &WeightMatrix, s: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, &si) in s.iter().enumerate() {
        total += si * field(w.row(i), s);
    }
    -0.5 * total
}

fn as_f64(s: &BipolarState) -> Vec<f64> {
    s.values().iter().map(|&v| f64::from(v)).collect()
}

/// `E = -1/2 sum_ij W_ij s_i s_j`.
pub fn energy(w: &WeightMatrix, s: &BipolarState) -> Result<f64> {
    check_dims(w, s.len())?;
    Ok(energy_of(w, &as_f64(s)))
}

/// Local field `h_i = sum_j W_ij s_j`.
pub fn local_field(w: &WeightMatrix, s: &BipolarState, i: usize) -> Result<f64> {
    check_dims(w, s.len())?;
    if i >= w.n() {
        return Err(Error::Dimension(format!(
            "node {i} out of range 0..{}",
            w.n()
        )));
    }
    Ok(field(w.row(i), &as_f64(s)))
}

/// Set node `i` to the sign of its local field. Returns the new state and
/// whether node `i` changed.
pub fn update_node(w: &WeightMatrix, s: &BipolarState, i: usize) -> Result<(BipolarState, bool)> {
    let h = local_field(w, s, i)?;
    let mut values = s.values().to_vec();
    let old = values[i];
    if h > 0.0 {
        values[i] = 1;
    } else if h < 0.0 {
        values[i] = -1;
    }
    let flipped = values[i] != old;
    Ok((BipolarState::from_vec_unchecked(values), flipped))
}

/// An in-progress asynchronous trajectory.
struct Trajectory<'a> {
    w: &'a WeightMatrix,
    state: Vec<f64>,
    rng: Rng,
    order: Vec<usize>,
    pos: usize,
    sweep_flips: u64,
    sweep_start_energy: f64,
    energy: f64,
    stats: RunStats,
}

impl<'a> Trajectory<'a> {
    fn new(w: &'a WeightMatrix, s0: &BipolarState, seed: u64) -> Result<Self> {
        check_dims(w, s0.len())?;
        let state = as_f64(s0);
        let energy = energy_of(w, &state);
        Ok(Trajectory {
            w,
            state,
            rng: seed::rng(seed),
            order: (0..w.n()).collect(),
            pos: 0,
            sweep_flips: 0,
            sweep_start_energy: energy,
            energy,
            stats: RunStats {
                node_updates_performed: 0,
                flips: 0,
                initial_energy: energy,
                final_energy: energy,
                converged: false,
                multiply_adds: 0,
            },
        })
    }

    /// One node update. Returns `Some(flips)` when it completed a sweep.
    fn step(&mut self) -> Option<u64> {
        let n = self.order.len();
        if n == 0 {
            return None;
        }
        if self.pos == 0 {
            self.order.shuffle(&mut self.rng);
            self.sweep_flips = 0;
            self.sweep_start_energy = self.energy;
        }
        let i = self.order[self.pos];
        let h = field(self.w.row(i), &self.state);
        self.stats.multiply_adds += n as u64;
        self.stats.node_updates_performed += 1;

        let old = self.state[i];
        let new = if h > 0.0 {
            1.0
        } else if h < 0.0 {
            -1.0
        } else {
            old
        };
        if new != old {
            self.state[i] = new;
            self.sweep_flips += 1;
            self.stats.flips += 1;
            // Zero diagonal: flipping node i changes E by -(new - old) h_i = -2|h_i|.
            let delta = -(new - old) * h;
            debug_assert!(delta <= 0.0);
            self.energy += delta;
        }

        self.pos += 1;
        if self.pos < n {
            return None;
        }
        self.pos = 0;
        // Resynchronize the running energy once per sweep and check descent.
        let exact = energy_of(self.w, &self.state);
        let slack = 1e-9 * self.sweep_start_energy.abs().max(1.0);
        assert!(
            exact <= self.sweep_start_energy + slack,
            "energy rose over a sweep: {} -> {exact}",
            self.sweep_start_energy
        );
        self.energy = exact;
        if self.sweep_flips == 0 {
            self.stats.converged = true;
        }
        Some(self.sweep_flips)
    }

    fn finish(mut self) -> (BipolarState, RunStats) {
        self.stats.final_energy = energy_of(self.w, &self.state);
        let values = self.state.iter().map(|&v| v as i8).collect();
        (BipolarState::from_vec_unchecked(values), self.stats)
    }
}

/// Perform exactly `t` asynchronous node updates starting from `s0`.
pub fn run_iterations(
    w: &WeightMatrix,
    s0: &BipolarState,
    t: usize,
    seed: u64,
) -> Result<(BipolarState, RunStats)> {
    let mut traj = Trajectory::new(w, s0, seed)?;
    for _ in 0..t {
        traj.step();
    }
    Ok(traj.finish())
}

/// Run until a complete sweep produces no flips, or `max_updates` node
/// updates have been spent (`converged` is false in that case).
pub fn run_to_convergence(
    w: &WeightMatrix,
    s0: &BipolarState,
    max_updates: usize,
    seed: u64,
) -> Result<(BipolarState, RunStats)> {
    if max_updates < w.n() {
        return Err(Error::Parameter(format!(
            "max_updates ({max_updates}) must cover at least one sweep of {} nodes",
            w.n()
        )));
    }
    let mut traj = Trajectory::new(w, s0, seed)?;
    if w.n() == 0 {
        traj.stats.converged = true;
        return Ok(traj.finish());
    }
    for _ in 0..max_updates {
        if traj.step() == Some(0) {
            break;
        }
    }
    Ok(traj.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::training::{hebbian_weights, TrainingSet};
    use proptest::prelude::*;
    use rand::Rng as _;

    fn state(v: &[i8]) -> BipolarState {
        BipolarState::new(v.to_vec()).unwrap()
    }

    fn pair(weight: f64) -> WeightMatrix {
        WeightMatrix::from_row_major(2, vec![0.0, weight, weight, 0.0]).unwrap()
    }

    fn random_symmetric(n: usize, rng: &mut seed::Rng, integer: bool) -> WeightMatrix {
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let x = if integer {
                    f64::from(rng.random_range(-4i32..=4))
                } else {
                    rng.random_range(-1.0..1.0)
                };
                w[i * n + j] = x;
                w[j * n + i] = x;
            }
        }
        WeightMatrix::from_row_major(n, w).unwrap()
    }

    fn random_state(n: usize, rng: &mut seed::Rng) -> BipolarState {
        state(
            &(0..n)
                .map(|_| if rng.random() { 1 } else { -1 })
                .collect::<Vec<_>>(),
        )
    }

    fn flipped(s: &BipolarState, idx: &[usize]) -> BipolarState {
        let mut v = s.values().to_vec();
        for &i in idx {
            v[i] = -v[i];
        }
        state(&v)
    }

    #[test]
    fn energy_examples() {
        assert_eq!(
            energy(&WeightMatrix::zeros(3), &state(&[1, -1, 1])).unwrap(),
            0.0
        );
        assert_eq!(energy(&pair(1.0), &state(&[1, 1])).unwrap(), -1.0);
        assert_eq!(energy(&pair(1.0), &state(&[1, -1])).unwrap(), 1.0);
        assert!(matches!(
            energy(&pair(1.0), &state(&[1])),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn update_node_examples() {
        let (s, flipped) = update_node(&pair(1.0), &state(&[1, -1]), 0).unwrap();
        assert_eq!(s.values(), &[-1, -1]);
        assert!(flipped);

        let (s, flipped) = update_node(&pair(1.0), &state(&[1, 1]), 0).unwrap();
        assert_eq!(s.values(), &[1, 1]);
        assert!(!flipped);

        let zero = WeightMatrix::zeros(3);
        for i in 0..3 {
            let (s, flipped) = update_node(&zero, &state(&[1, -1, 1]), i).unwrap();
            assert_eq!(s.values(), &[1, -1, 1]);
            assert!(!flipped);
        }
        assert!(update_node(&pair(1.0), &state(&[1, 1]), 2).is_err());
    }

    #[test]
    fn zero_updates_is_identity() {
        let w = pair(1.0);
        let s0 = state(&[1, -1]);
        let (s, stats) = run_iterations(&w, &s0, 0, 3).unwrap();
        assert_eq!(s, s0);
        assert_eq!(stats.flips, 0);
        assert_eq!(stats.node_updates_performed, 0);
    }

    #[test]
    fn performs_exactly_t_updates() {
        let mut rng = seed::rng(1);
        let w = random_symmetric(10, &mut rng, false);
        let s0 = random_state(10, &mut rng);
        let (_, stats) = run_iterations(&w, &s0, 37, 5).unwrap();
        assert_eq!(stats.node_updates_performed, 37);
        assert_eq!(stats.multiply_adds, 370);
    }

    #[test]
    fn recovers_single_stored_pattern() {
        let mut rng = seed::rng(2);
        let xi = random_state(25, &mut rng);
        let w = hebbian_weights(&TrainingSet::from_patterns(vec![xi.clone()]).unwrap()).unwrap();
        let noisy = flipped(&xi, &[1, 7, 19]);
        let (s, stats) = run_iterations(&w, &noisy, 100, 9).unwrap();
        assert_eq!(s, xi);
        assert!(stats.final_energy <= stats.initial_energy);
    }

    #[test]
    fn fixed_point_converges_in_one_sweep() {
        let w = pair(1.0);
        let s0 = state(&[1, 1]);
        let (s, stats) = run_to_convergence(&w, &s0, 30_000, 0).unwrap();
        assert_eq!(s, s0);
        assert!(stats.converged);
        assert_eq!(stats.node_updates_performed, 2);
        assert_eq!(stats.flips, 0);
    }

    #[test]
    fn converges_to_nearest_of_two_patterns() {
        let mut rng = seed::rng(4);
        let a = random_state(25, &mut rng);
        let b = random_state(25, &mut rng);
        let w = hebbian_weights(&TrainingSet::from_patterns(vec![a.clone(), b.clone()]).unwrap())
            .unwrap();
        let noisy = flipped(&a, &[0, 12, 24]);
        let (s, stats) = run_to_convergence(&w, &noisy, 30_000, 6).unwrap();
        assert!(stats.converged);
        assert_eq!(s, a);
        let e_star = energy(&w, &s).unwrap();
        for t in 0..=stats.node_updates_performed as usize {
            let (st, _) = run_iterations(&w, &noisy, t, 6).unwrap();
            assert!(e_star <= energy(&w, &st).unwrap() + 1e-9);
        }
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let w = pair(-1.0);
        let (_, stats) = run_to_convergence(&w, &state(&[1, 1]), 2, 0).unwrap();
        assert!(stats.flips > 0);
        assert!(!stats.converged);
        assert!(matches!(
            run_to_convergence(&w, &state(&[1, 1]), 1, 0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn monotone_descent_on_random_networks() {
        let mut rng = seed::rng(77);
        for trial in 0..100 {
            let n = rng.random_range(2..30);
            let w = random_symmetric(n, &mut rng, false);
            let mut s = random_state(n, &mut rng);
            let mut e = energy(&w, &s).unwrap();
            for step in 0..5 * n {
                let i = rng.random_range(0..n);
                s = update_node(&w, &s, i).unwrap().0;
                let next = energy(&w, &s).unwrap();
                assert!(next <= e + 1e-9, "trial {trial} step {step}: {e} -> {next}");
                e = next;
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn deterministic_and_scale_invariant(seed in any::<u64>(), n in 2usize..24, t in 0usize..200) {
            let mut rng = seed::rng(seed);
            let w = random_symmetric(n, &mut rng, true);
            let s0 = random_state(n, &mut rng);
            let (a, sa) = run_iterations(&w, &s0, t, seed).unwrap();
            let (b, sb) = run_iterations(&w, &s0, t, seed).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(sa, sb);
            for c in [0.25, 3.0, 1024.0] {
                let (scaled, _) = run_iterations(&w.scaled(c).unwrap(), &s0, t, seed).unwrap();
                prop_assert_eq!(&scaled, &a);
            }
            prop_assert!(sa.final_energy <= sa.initial_energy + 1e-9);
        }

        #[test]
        fn converged_state_is_a_fixed_point(seed in any::<u64>(), n in 2usize..24) {
            let mut rng = seed::rng(seed);
            let w = random_symmetric(n, &mut rng, false);
            let s0 = random_state(n, &mut rng);
            let (s, stats) = run_to_convergence(&w, &s0, 100 * n, seed).unwrap();
            prop_assume!(stats.converged);
            for i in 0..n {
                let (after, flipped) = update_node(&w, &s, i).unwrap();
                prop_assert!(!flipped);
                prop_assert_eq!(&after, &s);
            }
        }
    }
}
