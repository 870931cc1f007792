//! Configuration ingestion and result persistence.

pub mod config;
pub mod manifest;
pub mod tables;

pub use config::{apply_override, load_config, load_config_with, Config, DEFAULT_CONFIG};
pub use manifest::{read_manifest, write_outputs, OutputKind, OutputRecord};
pub use tables::{
    fmt_num, parse_ridges_csv, parse_spectrum_csv, read_branches_csv, read_ridges_csv,
    read_spectrum_csv, read_spectrum_json, write_branches_csv, write_ridges_csv,
    write_spectrum_csv, write_spectrum_json,
};
