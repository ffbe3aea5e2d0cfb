//! Random small games, policies and flows for property tests and demos.

use rand::Rng;

use super::config::*;
use super::{GameSpec, PolicySpec};
use crate::meanfield::{marginal_flow_of, MeanFieldFlow};
use crate::spaces::{Dist, FiniteMetricSpace, JointDist};

#[derive(Debug, Clone, Copy)]
pub struct RandomGameOpts {
    pub max_states: usize,
    pub max_actions: usize,
    pub max_horizon: usize,
    pub xi_dependent: bool,
    pub evaluator: EvaluatorKind,
}

impl Default for RandomGameOpts {
    fn default() -> Self {
        Self { max_states: 3, max_actions: 3, max_horizon: 4, xi_dependent: true, evaluator: EvaluatorKind::ExpectedSum }
    }
}

pub fn random_weights<R: Rng>(rng: &mut R, n: usize, sparse: bool) -> Vec<f64> {
    loop {
        let mut w: Vec<f64> = (0..n)
            .map(|_| {
                if sparse && rng.gen_bool(0.3) {
                    0.0
                } else {
                    -rng.gen::<f64>().max(1e-300).ln()
                }
            })
            .collect();
        let s: f64 = w.iter().sum();
        if s > 0.0 {
            w.iter_mut().for_each(|v| *v /= s);
            let total: f64 = w.iter().sum();
            // absorb rounding into the largest entry
            let i = (0..n).max_by(|&a, &b| w[a].partial_cmp(&w[b]).unwrap()).unwrap();
            w[i] += 1.0 - total;
            return w;
        }
    }
}

pub fn random_dist<R: Rng>(rng: &mut R, n: usize, sparse: bool) -> Dist {
    Dist::renormalized(random_weights(rng, n, sparse)).expect("normalised weights")
}

/// Random metric from random points on a line, with distances in `[0.2, 3]`.
pub fn random_metric<R: Rng>(rng: &mut R, n: usize) -> Vec<Vec<f64>> {
    let mut pos: Vec<f64> = Vec::with_capacity(n);
    let mut cur = 0.0;
    for _ in 0..n {
        cur += rng.gen_range(0.2..1.5);
        pos.push(cur);
    }
    (0..n).map(|i| (0..n).map(|j| (pos[i] - pos[j]).abs()).collect()).collect()
}

pub fn random_space<R: Rng>(rng: &mut R, n: usize) -> FiniteMetricSpace {
    let labels = (0..n).map(|i| i.to_string()).collect();
    FiniteMetricSpace::new(labels, random_metric(rng, n)).expect("line metric")
}

pub fn random_game_config<R: Rng>(rng: &mut R, opts: RandomGameOpts) -> GameConfig {
    let m = rng.gen_range(1..=opts.max_states.max(1));
    let k = rng.gen_range(1..=opts.max_actions.max(1));
    let h = rng.gen_range(2..=opts.max_horizon.max(2));
    let kernel = |rng: &mut R| -> KernelTable {
        (0..h - 1)
            .map(|_| (0..m).map(|_| (0..k).map(|_| random_weights(rng, m, true)).collect()).collect())
            .collect()
    };
    let transition = if opts.xi_dependent && m > 1 {
        let coef: Vec<f64> = (0..m).map(|_| rng.gen_range(-0.5..0.5)).collect();
        TransitionConfig::TableAffine {
            p0: kernel(rng),
            p1: kernel(rng),
            weight: AffineWeight { c0: rng.gen_range(0.2..0.8), coef },
        }
    } else {
        TransitionConfig::XiIndependent { table: kernel(rng) }
    };
    let base: Vec<Vec<Vec<f64>>> = (0..h - 1)
        .map(|_| (0..m).map(|_| (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect())
        .collect();
    let mean_field = opts.xi_dependent.then(|| {
        (0..h - 1)
            .map(|_| {
                (0..m)
                    .map(|_| (0..k).map(|_| (0..m).map(|_| rng.gen_range(-0.5..0.5)).collect()).collect())
                    .collect()
            })
            .collect()
    });
    let terminal = TerminalConfig::Affine {
        base: (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        mean_field: opts
            .xi_dependent
            .then(|| (0..m).map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()),
    };
    GameConfig {
        name: Some("random".into()),
        horizon: h,
        states: SpaceConfig { labels: (0..m).map(|i| format!("s{i}")).collect(), metric: Some(random_metric(rng, m)) },
        actions: SpaceConfig { labels: (0..k).map(|i| format!("a{i}")).collect(), metric: Some(random_metric(rng, k)) },
        initial: random_weights(rng, m, false),
        transition,
        cost: CostConfig::Affine { base, mean_field },
        terminal,
        evaluator: opts.evaluator,
        moduli: ModuliConfig::default(),
        policy: None,
    }
}

pub fn random_game<R: Rng>(rng: &mut R, opts: RandomGameOpts) -> GameSpec {
    GameSpec::from_config(&random_game_config(rng, opts)).expect("random game is valid")
}

pub fn random_oblivious<R: Rng>(rng: &mut R, game: &GameSpec, sparse: bool) -> PolicySpec {
    let (m, k) = (game.n_states(), game.n_actions());
    let table = (0..game.horizon - 1)
        .map(|_| (0..m).map(|_| random_dist(rng, k, sparse)).collect())
        .collect();
    PolicySpec::oblivious(table, game.horizon, m, k).expect("valid table")
}

pub fn random_logit<R: Rng>(rng: &mut R, game: &GameSpec) -> PolicySpec {
    let (m, k) = (game.n_states(), game.n_actions());
    let features = (0..m).map(|_| (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let interaction = (0..k).map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    PolicySpec::logit(rng.gen_range(0.0..2.0), features, rng.gen_range(-2.0..2.0), interaction, &game.states, game.horizon, k)
        .expect("valid logit")
}

/// Flow of a random oblivious policy; sparse rows leave some states and
/// actions without mass.
pub fn random_flow<R: Rng>(rng: &mut R, game: &GameSpec, sparse: bool) -> MeanFieldFlow {
    let p = random_oblivious(rng, game, sparse);
    marginal_flow_of(game, &p)
}

pub fn random_joint<R: Rng>(rng: &mut R, m: usize, k: usize) -> JointDist {
    JointDist::new(m, k, random_weights(rng, m * k, true)).expect("normalised")
}
