//! LDS codebooks, device geometry, Rayleigh channels and synthetic received
//! vectors for the stacked block-sparse model `y = Φx + v`.

mod codebook;
mod dataset;
mod geometry;
mod sensing;
mod synth;

pub use codebook::{generate_codebook, generate_disjoint_codebook, generate_hopping_codebook, Codeword, LdsCodebook};
pub use dataset::{
    collect_dataset, generate_dataset, generate_record, read_dataset, write_dataset, DatasetGenerator,
    DatasetHeader, Sample, DATASET_MAGIC, DATASET_VERSION,
};
pub use geometry::{
    complex_gaussian, expected_power_gain_uniform, generate_channel, generate_geometry, pathloss_db,
    DeviceGeometry, GeometryPolicy,
};
pub use sensing::{build_sensing_matrix, mutual_coherence, SensingMatrix};
pub use synth::{
    real_split, recombine, synthesize_received, AudInstance, AudScenario, Constellation, Environment,
    SnrPolicy,
};
