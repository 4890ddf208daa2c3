//! Scenario data: states drawn uniformly from the state box and, for each,
//! a batch of one-step successors through the black box.

mod dataset;
mod file;

pub use dataset::{
    build_dataset, collect_mean_features, collect_successors, draw_state, draw_states, mean_features,
    ScenarioDataset, Successors,
};
pub use file::{
    read_dataset, read_header, write_dataset, DatasetHeader, DatasetSpec, HEADER_LEN, MAGIC,
};

/// Default number of samples per produced/consumed chunk.
pub const DEFAULT_CHUNK_SIZE: usize = 1 << 16;
