//! Policy-gradient training with reward profiling.
//!
//! The core is generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`); the `*64` aliases below fix it to `f64`.

// `!(x >= 0)` is how NaN is rejected throughout; index loops mirror the
// matrix notation they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod estimation;
pub mod linalg;
pub mod mdp;
pub mod oracle;
pub mod pg;
pub mod policy;
pub mod profiling;
pub mod scalar;
pub mod seed;

pub use error::{Error, Result};
pub use estimation::{estimate_return, required_rollouts, EvalBudget, Evaluation, ReturnEstimate};
pub use mdp::{
    discounted_return, return_bound, rollout, Action, ActionSpace, CartPole, EnvInstance, EnvKind, Environment, MdpSpec,
    PointMassReacher, TabularEnv, Trajectory,
};
pub use oracle::TabularModel;
pub use pg::{AlgoConfig, AlgoKind, DdpgConfig, Trainer};
pub use policy::{FeatureMap, LogStd, PolicyFamily, PolicyKind, PolicyParams};
pub use profiling::{profiled_train, LambdaMode, ProfilingConfig, RollbackScope, RoundRecord, Tag, Variant};
pub use scalar::Real;
pub use seed::Seed;

pub type PolicyParams64 = PolicyParams<f64>;
pub type PolicyFamily64 = PolicyFamily<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type ReturnEstimate64 = ReturnEstimate<f64>;
pub type EnvInstance64 = EnvInstance<f64>;
pub type TabularModel64 = TabularModel<f64>;
pub type AlgoConfig64 = AlgoConfig<f64>;
pub type ProfilingConfig64 = ProfilingConfig<f64>;
pub type RoundRecord64 = RoundRecord<f64>;
pub type Trainer64 = Trainer<f64>;
