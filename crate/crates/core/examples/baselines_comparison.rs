//! Run every strategy on the same synthetic corpus and compare final test
//! ROUGE, diversity and outlier scores.
//!
//! ```text
//! cargo run --release --example baselines_comparison
//! ```

use dual_al::harness::{run_experiment, ExperimentConfig, StrategyKind, Workspace};
use dual_al::strategies::DualConfig;
use dual_al::synthetic::SyntheticSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = ExperimentConfig {
        repeats: 3,
        synthetic: Some(SyntheticSpec::default()),
        dual: DualConfig {
            budget: 30,
            tau: 0.8,
            ..Default::default()
        },
        ..Default::default()
    };
    let workspace = Workspace::from_config(&base)?;

    println!(
        "{:<8} {:>8} {:>8} {:>8} {:>10} {:>9}",
        "strategy", "rouge1", "rouge2", "rougeL", "diversity", "outlier"
    );
    for strategy in StrategyKind::ALL {
        let config = ExperimentConfig {
            strategy,
            ..base.clone()
        };
        let result = run_experiment(&config, &workspace)?;
        let last: Vec<_> = result
            .repeats
            .iter()
            .filter_map(|r| r.records.last())
            .collect();
        let n = last.len() as f64;
        let mean = |f: &dyn Fn(&dual_al::harness::IterationRecord) -> f64| {
            last.iter().map(|r| f(r)).sum::<f64>() / n
        };
        println!(
            "{:<8} {:>8.4} {:>8.4} {:>8.4} {:>10.3} {:>9.3}",
            strategy.as_str(),
            mean(&|r| r.scores.map_or(f64::NAN, |s| s.rouge1)),
            mean(&|r| r.scores.map_or(f64::NAN, |s| s.rouge2)),
            mean(&|r| r.scores.map_or(f64::NAN, |s| s.rouge_l)),
            mean(&|r| r.diversity.unwrap_or(f64::NAN)),
            mean(&|r| r.outlier.unwrap_or(f64::NAN)),
        );
    }
    Ok(())
}
