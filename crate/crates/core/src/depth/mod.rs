//! Outlyingness, depth, central regions and functional boxplots.

mod band;
mod grid;
mod medcouple;
mod outlyingness;
mod region;
mod report;

pub use band::{functional_boxplot, modified_band_depth, FunctionalBoxplot};
pub use grid::{EvaluationGrid, DEFAULT_GRID_SIZE};
pub use medcouple::medcouple;
pub use outlyingness::{
    adjusted_outlyingness_1d, adjusted_outlyingness_point, directional_outlyingness,
    functional_adjusted_outlyingness, outlyingness_scores, pointwise_outlyingness,
    AdjustedBoxplot, DirectionSet, DirectionalOutlyingness, PointwiseOutlyingness,
    ProjectionConfig, FENCE_FACTOR,
};
pub use region::{central_region, central_size, depth_from_outlyingness, flag_outliers, OutlierFlags};
pub use report::{outlyingness_report, DeviceOutlyingness, OutlyingnessReport};
