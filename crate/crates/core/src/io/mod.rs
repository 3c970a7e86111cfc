//! Configuration, load-profile and trajectory files, and SVG plots.

pub mod config;
pub mod load_csv;
pub mod plot;
pub mod synthetic;
pub mod trajectory;

pub use config::{load_config, parse_config, serialize_config, Config, Overrides};
pub use load_csv::{ingest_load_profile, write_load_profile};
pub use plot::{emit_plot_svg, Plot};
pub use trajectory::{emit_trajectory_csv, read_trajectory_csv};
