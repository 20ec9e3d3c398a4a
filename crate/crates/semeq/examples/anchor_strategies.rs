//! How anchor selection shapes the equalizer.
//!
//! Compares prototypical anchors (k-means cluster means) against uniformly
//! sampled ones at several anchor counts, then round-trips the world through
//! the embedding container files, the same path `semeq gen-world` uses.

use semeq::anchors::{prototypical_anchors, uniform_anchors, AnchorSpec};
use semeq::equalize::EqualizerMethod;
use semeq::frame::AnalysisOperator;
use semeq::world::{
    build_equalizer, evaluate_accuracy, generate_world, ingest_embeddings, AnchorStrategy,
    CentroidDecoder, Side, TablePlan, WorldSpec,
};

fn main() -> semeq::Result<()> {
    let spec = WorldSpec {
        dim_tx: 16,
        dim_rx: 16,
        n_classes: 8,
        n_samples: 1600,
        cluster_spread: 0.35,
        noise_sigma: 0.05,
        scale: 1.0,
        seed: 31,
    };
    let world = generate_world(&spec)?;
    let decoder = CentroidDecoder::train(&world, Side::Rx)?;
    let train = world.gather(Side::Tx, world.train_indices())?;

    println!("anchor geometry on the training embeddings:");
    for n in [8usize, 16, 32] {
        let spec = AnchorSpec { n_anchors: n, samples_per_cluster: 8, seed: 77 };
        let (_, prototypes) = prototypical_anchors(&train, &spec)?;
        let (_, sampled) = uniform_anchors(&train, n, 77)?;
        let cond = |m| AnalysisOperator::new(m).and_then(|op| op.condition_number());
        println!(
            "  N = {n:>2}: prototype frame condition {:>8.2}, uniform sample condition {:>8.2}",
            cond(prototypes)?,
            cond(sampled)?
        );
    }

    println!("\ndownstream accuracy (whitened equalizer, 8-bit coefficients):");
    println!("{:>4} {:>14} {:>10}", "N", "prototypical", "uniform");
    for n in [8usize, 16, 32] {
        let mut row = format!("{n:>4}");
        for strategy in [AnchorStrategy::Prototypical, AnchorStrategy::Uniform] {
            let plan = TablePlan {
                method: EqualizerMethod::Pfe,
                strategy,
                samples_per_cluster: 8,
                seed: 31,
            };
            let pair = build_equalizer(&world, &plan, 0, n)?;
            let accuracy = evaluate_accuracy(&world, &decoder, &pair, n, 8)?;
            row.push_str(&format!(" {accuracy:>13.4}"));
        }
        println!("{row}");
    }

    // worlds survive the container format: export, re-ingest, same data
    let dir = std::env::temp_dir().join("semeq_anchor_example");
    std::fs::create_dir_all(&dir)?;
    let prefix = dir.join("world");
    world.export(&prefix)?;
    let restored = ingest_embeddings(
        dir.join("world_tx.emb1"),
        dir.join("world_rx.emb1"),
        dir.join("world_labels.csv"),
    )?;
    println!(
        "\nexported and re-ingested the world through {}: {} samples, labels intact: {}",
        dir.display(),
        restored.len(),
        restored.labels() == world.labels()
    );
    Ok(())
}
