//! Rank an unlabeled pool by IDDS, then keep the scores current while
//! documents are labeled one at a time.
//!
//! ```text
//! cargo run --example idds_scoring
//! ```

use dual_al::embedspace::{idds_scores, select_top_k, IddsParams, IddsSession};
use dual_al::synthetic::{generate, SyntheticSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let synth = generate(&SyntheticSpec::default())?;
    let ids = synth.corpus.train_ids();
    let (labeled, unlabeled) = ids.split_at(5);
    let params = IddsParams::new(0.67)?;

    let scores = idds_scores(
        &synth.embeddings.subset(unlabeled)?,
        &synth.embeddings.subset(labeled)?,
        params,
    )?;
    println!(
        "top 5 of {} with {} labeled:",
        unlabeled.len(),
        labeled.len()
    );
    for id in select_top_k(&scores, 5) {
        let s = scores.iter().find(|(d, _)| *d == id).unwrap().1;
        println!("  {id}  {s:+.4}  {:?}", synth.cluster_of(&id).unwrap());
    }

    // greedy labeling with incremental updates
    let mut session = IddsSession::new(&synth.embeddings, unlabeled, labeled, params)?;
    println!("\ngreedy picks:");
    for step in 1..=8 {
        let best = select_top_k(&session.scores(), 1).remove(0);
        session.move_to_penalty(&best)?;
        println!("  {step}: {best} ({:?})", synth.cluster_of(&best).unwrap());
    }
    println!(
        "\n{} unlabeled, {} penalized",
        session.unlabeled_len(),
        session.penalty_len()
    );
    Ok(())
}
