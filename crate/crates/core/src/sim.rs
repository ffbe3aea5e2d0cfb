//! Seeded Monte Carlo runs of the N-player dynamics and concentration
//! experiments.
//!
//! Randomness comes from ChaCha8 keyed by the master seed, with the stream
//! number packing `(replication, step, kind)`:
//! `stream = rep << 24 | step << 8 | kind`. Players draw from that stream in
//! index order, one uniform per draw, sampled by inverse CDF. Results do not
//! depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::game::GameSpec;
use crate::lift::{error_budget, lift_flow, profile_theta};
use crate::meanfield::Evaluator;
use crate::nplayer::PolicyProfile;
use crate::spaces::{bl_distance, concentration_bound, Dist, FiniteMetricSpace, JointDist, DEFAULT_J_MAX};

const KIND_INITIAL: u64 = 0;
const KIND_ACTION: u64 = 1;
const KIND_MOVE: u64 = 2;
const KIND_SAMPLE: u64 = 3;

pub fn keyed_rng(seed: u64, rep: usize, step: usize, kind: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((rep as u64) << 24) | ((step as u64) << 8) | kind);
    rng
}

/// Inverse-CDF draw; falls back to the last atom with mass on round-off.
pub fn sample_index<R: Rng>(rng: &mut R, w: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in w.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    /// `flows[rep][step]`: empirical state-action measure
    pub flows: Vec<Vec<JointDist>>,
    /// `distances[rep][step]`: BL distance to the reference joint
    pub distances: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn one_run(game: &GameSpec, profile: &PolicyProfile, seed: u64, rep: usize) -> Vec<JointDist> {
    let (m, k, n) = (game.n_states(), game.n_actions(), profile.len());
    let mut rng = keyed_rng(seed, rep, 0, KIND_INITIAL);
    let mut xs: Vec<usize> = (0..n).map(|_| sample_index(&mut rng, game.initial.weights())).collect();
    let mut out = Vec::with_capacity(game.horizon - 1);
    let mut lam = vec![0.0; k];
    let mut row = vec![0.0; m];
    for step in 0..game.horizon - 1 {
        let mut emp = vec![0.0; m];
        for &x in &xs {
            emp[x] += 1.0 / n as f64;
        }
        let mut act_rng = keyed_rng(seed, rep, step + 1, KIND_ACTION);
        let acts: Vec<usize> = xs
            .iter()
            .zip(&profile.policies)
            .map(|(&x, p)| {
                p.policy_into(step, x, &emp, &mut lam);
                sample_index(&mut act_rng, &lam)
            })
            .collect();
        let mut counts = vec![0usize; m * k];
        for (&x, &a) in xs.iter().zip(&acts) {
            counts[x * k + a] += 1;
        }
        out.push(JointDist::from_raw(m, k, counts.iter().map(|&c| c as f64 / n as f64).collect()));
        let mut mv_rng = keyed_rng(seed, rep, step + 1, KIND_MOVE);
        for (x, &a) in xs.iter_mut().zip(&acts) {
            game.transition_into(step, *x, &emp, a, &mut row);
            *x = sample_index(&mut mv_rng, &row);
        }
    }
    out
}

/// `reps` independent runs of the profile; distances are to the lifted flow.
pub fn simulate(game: &GameSpec, profile: &PolicyProfile, reps: usize, seed: u64) -> Result<SimResult> {
    if reps == 0 || profile.is_empty() {
        return invalid("need at least one replication and one player");
    }
    let reference = lift_flow(game, profile)?;
    let space = game.states.product(&game.actions);
    let ref_dists: Vec<Dist> = reference.joints.iter().map(|j| j.as_dist()).collect();
    let runs: Vec<(Vec<JointDist>, Vec<f64>)> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let flow = one_run(game, profile, seed, rep);
            let d = flow
                .iter()
                .zip(&ref_dists)
                .map(|(e, r)| bl_distance(&space, &e.as_dist(), r))
                .collect::<Result<Vec<_>>>()?;
            Ok((flow, d))
        })
        .collect::<Result<_>>()?;
    let (flows, distances): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    let steps = game.horizon - 1;
    let (mut mean, mut se) = (Vec::with_capacity(steps), Vec::with_capacity(steps));
    for s in 0..steps {
        let col: Vec<f64> = distances.iter().map(|d: &Vec<f64>| d[s]).collect();
        let (a, b) = mean_se(&col);
        mean.push(a);
        se.push(b);
    }
    Ok(SimResult { n: profile.len(), reps, seed, flows, distances, mean, se })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub n: usize,
    pub reps: usize,
    pub estimate: f64,
    pub se: f64,
    pub bound: f64,
    pub j: usize,
    pub n_j: u64,
}

/// Monte Carlo estimate of `E || mean of deltas(Y_n) - mean of mu_n ||_BL`
/// with independent `Y_n ~ mu_n`, next to the covering bound.
pub fn concentration(space: &FiniteMetricSpace, mus: &[Dist], reps: usize, seed: u64) -> Result<ConcentrationReport> {
    if reps < 100 {
        return invalid(format!("concentration needs at least 100 replications, got {reps}"));
    }
    if mus.is_empty() || mus.iter().any(|d| d.len() != space.len()) {
        return invalid("need one distribution per sample, each on the space");
    }
    let n = mus.len();
    let m = space.len();
    let mut avg = vec![0.0; m];
    for d in mus {
        for (s, w) in avg.iter_mut().zip(d.weights()) {
            *s += w / n as f64;
        }
    }
    let target = Dist::renormalized(avg)?;
    let vals: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = keyed_rng(seed, rep, 0, KIND_SAMPLE);
            let mut counts = vec![0.0; m];
            for d in mus {
                counts[sample_index(&mut rng, d.weights())] += 1.0 / n as f64;
            }
            bl_distance(space, &Dist::renormalized(counts)?, &target)
        })
        .collect::<Result<_>>()?;
    let (estimate, se) = mean_se(&vals);
    let b = concentration_bound(space, n, DEFAULT_J_MAX)?;
    Ok(ConcentrationReport { n, reps, estimate, se, bound: b.value, j: b.j, n_j: b.n_j })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    /// one-based time
    pub t: usize,
    pub estimate: f64,
    pub se: f64,
    /// infinite when the profile has no finite continuity modulus
    pub bound: f64,
}

/// Mean BL distance between the empirical state-action measure and the
/// lifted joint, per step, with the theoretical bound.
pub fn empirical_gap(game: &GameSpec, profile: &PolicyProfile, reps: usize, seed: u64) -> Result<Vec<GapRow>> {
    let sim = simulate(game, profile, reps, seed)?;
    let theta = profile_theta(profile);
    let budget = error_budget(game, &Evaluator::for_game(game), profile.len(), Some(&theta))?;
    Ok((0..game.horizon - 1)
        .map(|s| GapRow { t: s + 1, estimate: sim.mean[s], se: sim.se[s], bound: budget.gap_bound[s] })
        .collect())
}
