pub mod audio;
pub mod dsp;
pub mod bandwidth;
pub mod corpus_filter;
pub mod distortion;
pub mod manifest;
pub mod metrics;
