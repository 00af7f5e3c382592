//! File formats, scenario configuration parsing, and run manifests.

mod formats;
mod manifest;
mod scenario;

pub use formats::{
    read_annotations, read_csv_recording, read_recording, write_annotations, write_csv_recording,
    write_recording, Annotations, FormatErrorKind, EGMR_MAGIC, EGMR_VERSION,
};
pub use manifest::{fnv64_hex, Manifest};
pub use scenario::{parse_scenario, RunParams, Scenario};
