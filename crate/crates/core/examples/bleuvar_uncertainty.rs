//! Sample summaries from the mock backend at increasing noise levels and
//! report their BLEU variance.
//!
//! ```text
//! cargo run --example bleuvar_uncertainty
//! ```

use dual_al::backend::{MockBackend, SummarizationBackend};
use dual_al::corpus::{DocId, Document};
use dual_al::textmetrics::{bleu, bleuvar, tokenize};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let doc = Document::new(
        "flood",
        "heavy rain flooded the lower town and forty homes were evacuated",
        "the river flooded the lower part of the town after two days of heavy rain \
         and officials evacuated forty homes near the old bridge",
    );

    println!("{:>6}  {:>8}  first sample", "noise", "bleuvar");
    for noise in [0.0, 0.1, 0.25, 0.5, 0.75, 1.0] {
        let backend = MockBackend::default().with_noise_levels([(DocId::new("flood"), noise)]);
        let batch = backend.generate_stochastic(&doc, 10, 7)?;
        let tokens: Vec<_> = batch.summaries.iter().map(|s| tokenize(s)).collect();
        let score = bleuvar(&tokens)?;
        println!("{noise:>6.2}  {:>8.4}  {}", score.value, batch.summaries[0]);
    }

    let a = tokenize("the river flooded the town");
    let b = tokenize("the river flooded the lower town");
    println!(
        "\nBLEU(a, b) = {:.4}, BLEU(b, a) = {:.4}",
        bleu(&a, &b),
        bleu(&b, &a)
    );
    Ok(())
}
