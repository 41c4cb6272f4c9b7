//! Random conductance models with speed measure and killing: environment
//! builders, intrinsic metrics, Green and heat kernels, killed walks.

mod decay;
mod env;
mod green;
mod heat;
mod metric;
mod walk;

pub use decay::{fit_decay_rate, fit_green_decay, fit_green_power, green_pairs, line_massive_rate, DecayFit, DecayReport, MIN_FIT_DISTANCE};
pub use env::{build_gff_rcm, ConductanceEnvironment, MomentReport, EXP_CLAMP};
pub use green::{solve_green, Boundary, GreenColumn};
pub use heat::{gauss_legendre, heat_kernel, heat_kernel_series, ExactHeatKernel, HeatKernelSlice, HeatMethod, EXACT_MAX_VERTICES};
pub use metric::{chemical_distance, intrinsic_edge_weights, kappa_metric, theta_metric};
pub use walk::{green_monte_carlo, simulate_killed_walk, MonteCarloGreen, Trajectory, WalkEnd};
