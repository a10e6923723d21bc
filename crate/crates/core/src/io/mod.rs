//! Study tables, simulation configs and CSV exports.

mod config;
mod export;
mod studies;

pub use config::{parse_config, parse_config_str, SimConfig, CONFIG_KEYS};
pub use export::{
    tolerance_column, write_histogram_csv, write_records_csv, write_summary_csv, HISTOGRAM_COLUMNS,
    RECORD_COLUMNS, SUMMARY_COLUMNS,
};
pub use studies::{parse_studies, read_studies, write_studies};
