//! Load an experiment from TOML, run it and write every output file.
//!
//! ```text
//! cargo run --release --example full_experiment [out_dir]
//! ```

use std::path::PathBuf;

use dual_al::harness::{export_results, run_experiment, ExperimentConfig, Workspace};

const CONFIG: &str = r#"
strategy = "dual"
repeats = 2
eval_every = 1

[dual]
budget = 40
per_iteration = 10
random_ratio = 0.5
top_k = 10
tau = 0.8
mc_passes = 10
seed = 11

[synthetic]
cluster_a = 150
cluster_b = 80
outliers = 20
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("dual-al-example"));

    let config = ExperimentConfig::from_toml(CONFIG)?;
    let workspace = Workspace::from_config(&config)?;
    let result = run_experiment(&config, &workspace)?;
    export_results(&result, &out)?;

    for repeat in &result.repeats {
        println!(
            "repeat {} (seed {}): {:?}",
            repeat.repeat, repeat.seed, repeat.status
        );
        for r in &repeat.records {
            let rouge = r
                .scores
                .map_or(String::from("-"), |s| format!("{:.4}", s.rouge1));
            println!(
                "  iter {:>2}  L {:>3}  U {:>3}  E {:>3}  rouge1 {rouge}  shortfall {}",
                r.iteration, r.labeled, r.unlabeled, r.excluded, r.targeted_shortfall
            );
        }
    }
    println!("\nwrote results to {}", out.display());
    std::process::exit(result.exit_code());
}
