//! Runs a TOML configuration the way the command line does.
//!
//! `cargo run --example config_run -- examples/configs/continuation.toml`

use std::path::PathBuf;

use facetflow::config::load_config;
use facetflow::run::run;

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/stationary.toml")));
    let mut config = match load_config(&path, None) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(3);
        }
    };
    config.out = std::env::temp_dir().join("facetflow-config-run");
    let summary = run(&config);
    println!("{}", summary.to_json_without_timings());
    std::process::exit(summary.exit_code);
}
