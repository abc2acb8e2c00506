//! Walk through individual targeted picks and show the candidate set,
//! the BLEUVar filter and what moves to the excluded set.
//!
//! ```text
//! cargo run --example dual_selection [tau]
//! ```

use dual_al::backend::MockBackend;
use dual_al::embedspace::IddsSession;
use dual_al::strategies::{dual_targeted_pick, DualConfig, PickOutcome, PoolState, StepContext};
use dual_al::synthetic::{generate, SyntheticSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tau: f64 = match std::env::args().nth(1) {
        Some(s) => s.parse()?,
        None => 0.8,
    };
    let synth = generate(&SyntheticSpec::default())?;
    let backend = MockBackend::default()
        .with_noise_levels(synth.noise.clone())
        .with_documents(synth.corpus.train_pool());
    let cfg = DualConfig {
        tau,
        top_k: 6,
        ..Default::default()
    };
    let ctx = StepContext::new(&synth.corpus, &synth.embeddings, &cfg);
    let mut pool = PoolState::new(synth.corpus.train_ids(), 20)?;
    let mut session =
        IddsSession::new(&synth.embeddings, pool.unlabeled(), &[], cfg.idds_params()?)?;

    for pick in 1..=4 {
        println!("pick {pick}");
        match dual_targeted_pick(&mut pool, &mut session, &ctx, &backend)? {
            PickOutcome::Picked {
                selection,
                candidates,
                ..
            } => {
                for c in &candidates {
                    let mark = if c.doc_id == selection.doc_id {
                        "labeled"
                    } else if c.bleuvar > tau {
                        "above tau, excluded"
                    } else {
                        "excluded"
                    };
                    println!(
                        "  {}  idds {:+.3}  bleuvar {:.3}  {mark}",
                        c.doc_id, c.idds_score, c.bleuvar
                    );
                }
            }
            PickOutcome::Exhausted { candidates } => {
                println!(
                    "  all {} candidates above tau, pool unchanged",
                    candidates.len()
                );
            }
        }
        println!(
            "  |L| {}  |U| {}  |E| {}",
            pool.labeled().len(),
            pool.unlabeled().len(),
            pool.excluded().len()
        );
    }
    Ok(())
}
