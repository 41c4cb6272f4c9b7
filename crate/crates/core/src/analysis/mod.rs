//! Statistics, decoupling checks, crossing curves and heat-kernel fits.

pub mod crossing;
pub mod decoupling;
pub mod heat_fit;
pub mod stats;

pub use crossing::{crossing_at, crossing_bottleneck, crossing_box, crossing_curve, curve_from_bottlenecks, CrossingCurve, CRITICAL_THRESHOLD};
pub use decoupling::{decoupling_check, BoxFunctional, CorrelationReport, DecouplingGeometry, FieldModel, Pairing};
pub use heat_fit::{heat_kernel_shape_fit, GaussianFit, HeatShapeFit};
pub use stats::{bernoulli_interval, confidence_interval, linear_fit, wilson_interval, Interval, LineFit};
