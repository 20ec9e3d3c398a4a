//! Aligning two latent spaces without training on the receiver.
//!
//! Two encoders that agree up to a rotation can interoperate through shared
//! anchor data alone. This example plants such a world, builds the three
//! equalizer families from the same anchors and compares their downstream
//! accuracy against the receiver's own decoder.

use semeq::equalize::EqualizerMethod;
use semeq::world::{
    build_equalizer, evaluate_accuracy, generate_world, AnchorStrategy, CentroidDecoder, Side,
    TablePlan, WorldSpec,
};

fn main() -> semeq::Result<()> {
    let spec = WorldSpec {
        dim_tx: 24,
        dim_rx: 24,
        n_classes: 12,
        n_samples: 2400,
        cluster_spread: 0.3,
        noise_sigma: 0.04,
        scale: 1.0,
        seed: 20,
    };
    let world = generate_world(&spec)?;
    let decoder = CentroidDecoder::train(&world, Side::Rx)?;

    // ceiling: the receiver decoding its own embeddings directly
    let mut correct = 0usize;
    for &i in world.validation_indices() {
        if decoder.predict(&world.rx().row(i).transpose())? == world.labels()[i] {
            correct += 1;
        }
    }
    let ceiling = correct as f64 / world.validation_indices().len() as f64;
    println!("receiver decoding its own embeddings: {ceiling:.4}");

    println!("\nzero-shot accuracy through N anchors at 8-bit coefficients:");
    println!("{:>4} {:>10} {:>10} {:>10}", "N", "pfe", "fe", "upe");
    for n in [12usize, 16, 24, 32, 48] {
        let mut row = format!("{n:>4}");
        for method in [EqualizerMethod::Pfe, EqualizerMethod::Fe, EqualizerMethod::Upe] {
            let plan = TablePlan {
                method,
                strategy: AnchorStrategy::Prototypical,
                samples_per_cluster: 8,
                seed: 20,
            };
            let pair = build_equalizer(&world, &plan, 0, n)?;
            let accuracy = evaluate_accuracy(&world, &decoder, &pair, n, 8)?;
            row.push_str(&format!(" {accuracy:>10.4}"));
        }
        println!("{row}");
    }
    println!(
        "\nwith N >= d = {} the whitened frame equalizer reaches the receiver's own \
         accuracy without a single labeled pair beyond the shared anchors",
        spec.dim_tx
    );
    Ok(())
}
