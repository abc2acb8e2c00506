//! Diversity, KNN density and outlier scores of a labeled set, plus a
//! two-dimensional PCA view of the pool.
//!
//! ```text
//! cargo run --example embedding_analysis
//! ```

use dual_al::embedspace::{diversity_score, knn_density, outlier_score, pca_project};
use dual_al::synthetic::{generate, Cluster, SyntheticSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let synth = generate(&SyntheticSpec::default())?;
    let ids = synth.corpus.train_ids();
    let pool = synth.embeddings.subset(&ids)?;

    let of = |c: Cluster| -> Vec<_> {
        ids.iter()
            .filter(|id| synth.cluster_of(id) == Some(c))
            .take(10)
            .cloned()
            .collect()
    };
    let mixed: Vec<_> = ids.iter().step_by(20).cloned().collect();

    println!("{:<10} {:>10} {:>9}", "set", "diversity", "outlier");
    for (name, labeled) in [
        ("cluster A", of(Cluster::A)),
        ("cluster B", of(Cluster::B)),
        ("outliers", of(Cluster::Outlier)),
        ("mixed", mixed),
    ] {
        let rest: Vec<_> = ids
            .iter()
            .filter(|id| !labeled.contains(id))
            .cloned()
            .collect();
        println!(
            "{name:<10} {:>10.3} {:>9.3}",
            diversity_score(&pool.subset(&labeled)?)?,
            outlier_score(&labeled, &pool, &rest, 10)?
        );
    }

    let first = &ids[0];
    let density = knn_density(pool.require(first)?, &pool, 10, Some(first))?;
    println!("\nknn density of {first}: {density:.3}");

    let proj = pca_project(&pool, 2)?;
    let total: f64 = proj.variance.iter().sum();
    println!(
        "pca variance: {:.2} {:.2} (sum {total:.2})",
        proj.variance[0], proj.variance[1]
    );
    for (id, xy) in proj.ids.iter().zip(&proj.coords).step_by(40) {
        println!("  {id}  ({:+.2}, {:+.2})", xy[0], xy[1]);
    }
    Ok(())
}
