//! Edge-weight interventions on social networks whose opinions follow
//! Friedkin-Johnsen dynamics.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: sparse network storage, decision-variable layouts, edge-list
//!   ingestion and synthetic generators.
//! - [`equilibrium`]: assembly of `A(w) = I + diag(W 1) - W` and the solve
//!   `A(w) y = s` for the unique equilibrium opinions.
//! - [`hypergradient`]: total derivative of `phi(w, y*(w))` through one
//!   transposed solve and a closed-form vector-Jacobian product.
//! - [`objectives`]: polarization, disagreement and regularizers with
//!   hand-derived partial gradients.
//! - [`feasible`]: convex weight constraints and Euclidean projection onto
//!   their intersection.
//! - [`optimizer`]: projected gradient descent with momentum over the
//!   decision weights.
//! - [`nad`]: the alternating "network administrator" baseline.

pub mod equilibrium;
pub mod error;
pub mod feasible;
pub mod graph;
pub mod hypergradient;
pub mod linalg;
pub mod nad;
pub mod objectives;
pub mod optimizer;
pub mod report;

pub use equilibrium::{
    build_system, equilibrium_residual, recover_internal, solve_equilibrium, EquilibriumSystem,
    LinearSolveConfig, SolveMethod, SolveOutcome,
};
pub use error::{Error, Result};
pub use feasible::{FeasibleSet, MembershipReport, Primitive, ProjectionOptions};
pub use graph::{
    assemble_weights, load_edge_list, load_opinions, write_edge_list, DecisionLayout,
    DecisionVector, OpinionState, SlotOwner, Topology,
};
pub use hypergradient::{hypergradient, j1f_vjp, solve_adjoint, HypergradientResult};
pub use nad::{nad_feasible_set, nad_inner_step, nad_run, NadConfig};
pub use objectives::{EvalContext, Objective, ObjectiveRegistry};
pub use optimizer::{
    auto_step_size, optimize, zeta, OptimizerConfig, StepBasis, StepSize, ZetaMode,
};
pub use report::{PhaseTimings, SolveReport, Termination};
