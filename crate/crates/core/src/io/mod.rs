//! Persistence: random streams, the array container and dataset layout.

pub mod container;
pub mod dataset;
pub mod rng;

pub use container::{read_array, write_array, ArrayData};
pub use dataset::{
    read_example, split_dataset, write_example, DatasetExample, ExampleMeta, Manifest,
    ManifestRecord, Split,
};
pub use rng::{derive_rng, Purpose, Xoshiro256PlusPlus};
