//! Drives the runner from an in-memory config, as the binary does from a file.

use fpplab::runner::{run, ExperimentConfig, RunOptions};

fn main() {
    let config = ExperimentConfig::from_json(
        r#"{
            "seed": 1,
            "experiment": {"kind": "schedule-diagnostics", "delta": 2, "rho": 1, "k_switch": 0, "l0": 10, "k_max": 20}
        }"#,
    )
    .expect("config parses");
    let out = std::env::temp_dir().join("fpplab-example-run");
    let options = RunOptions { out: Some(out.clone()), ..Default::default() };
    match run(config, &options) {
        Ok(manifest) => {
            println!("wrote {:?} to {}", manifest.tables, out.display());
            println!("{}", std::fs::read_to_string(out.join("summary.json")).unwrap());
        }
        Err(e) => {
            eprintln!("{}", e.report());
            std::process::exit(e.exit_code());
        }
    }
}
