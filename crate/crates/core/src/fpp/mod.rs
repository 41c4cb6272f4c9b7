//! First passage percolation: exact distances, replica estimators for the
//! time constant and limit shape, and the renormalization scale schedule.

mod distance;
mod estimate;
mod schedule;
mod shape;

pub use distance::{ball_from_distances, dijkstra, fpp_distances, fpp_point_distance, shape_ball, DistanceMap, MetricTag};
pub use estimate::{
    default_padding, estimate_time_constant, growth_exponent, level_distances, mean_interval, padded_segment_box,
    subadditivity_check, tail_from_estimate, tail_probability_curve, zero_cluster_criterion, GrowthFit, LevelStats,
    SubadditivityCheck, TailPoint, TimeConstantEstimate, WeightModel,
};
pub use schedule::{build_scale_schedule, hurwitz_zeta, ScaleSchedule, ScheduleFlags};
pub use shape::{convexity_defect, normalized_hausdorff, shape_convergence, shape_gaps, ShapeReport};
