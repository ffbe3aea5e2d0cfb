//! Finite-space mean field games: N-player and mean-field regrets under
//! expected-sum and AVaR score operators, lifting of policy profiles to
//! mean field flows with error budgets, equilibrium search and seeded
//! Monte Carlo experiments.
//!
//! Distances, the simplex and the risk kernels are generic over the float
//! type; everything above them works in `f64`.

pub mod error;
pub mod game;
pub mod lift;
pub mod lp;
pub mod meanfield;
pub mod mfe;
pub mod modulus;
pub mod nplayer;
pub mod regret;
pub mod risk;
pub mod scalar;
pub mod sim;
pub mod spaces;

pub use error::{Error, Result};
pub use game::builtin::{builtin, BUILTIN_NAMES};
pub use game::{load_game, EvaluatorKind, GameSpec, PolicySpec};
pub use lift::{error_budget, lift_flow, ErrorBudget};
pub use meanfield::{Evaluator, FlowResiduals, MeanFieldFlow, ValueVector};
pub use mfe::{solve_mfe, SolveOpts, SolveReport};
pub use modulus::Modulus;
pub use nplayer::{PolicyProfile, RegretMode, RegretSet};
pub use regret::mf_regret;
pub use scalar::Scalar;
pub use sim::{concentration, empirical_gap, simulate, SimResult};
pub use spaces::{bl_distance, tv_distance, Dist, FiniteMetricSpace, JointDist};

pub type Dist64 = Dist<f64>;
pub type Dist32 = Dist<f32>;
pub type JointDist64 = JointDist<f64>;
pub type JointDist32 = JointDist<f32>;
pub type MetricSpace64 = FiniteMetricSpace<f64>;
pub type MetricSpace32 = FiniteMetricSpace<f32>;
