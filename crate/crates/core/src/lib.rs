pub mod codinggain;
pub mod composition;
pub mod distributions;
pub mod error;
pub mod experiments;
pub mod goodness;
pub mod independence;
pub mod pca;
pub mod rng;
pub mod special;
pub mod transforms;
