//! What a bit budget buys.
//!
//! Coefficients live in [-1, 1] after whitening a normalized frame, so a
//! uniform q-bit grid over that interval costs N*q bits on air. This sweeps
//! the bit depth at a fixed anchor count and reports accuracy next to the
//! compression factor relative to shipping the raw 32-bit embedding.

use semeq::equalize::EqualizerMethod;
use semeq::quant::{compression_factor, quantize, step_size};
use semeq::world::{
    build_equalizer, evaluate_accuracy, generate_world, AnchorStrategy, CentroidDecoder, Side,
    TablePlan, WorldSpec,
};

fn main() -> semeq::Result<()> {
    let spec = WorldSpec {
        dim_tx: 32,
        dim_rx: 32,
        n_classes: 10,
        n_samples: 2000,
        cluster_spread: 0.3,
        noise_sigma: 0.05,
        scale: 1.0,
        seed: 8,
    };
    let world = generate_world(&spec)?;
    let decoder = CentroidDecoder::train(&world, Side::Rx)?;
    let n = 32usize;
    let plan = TablePlan {
        method: EqualizerMethod::Pfe,
        strategy: AnchorStrategy::Prototypical,
        samples_per_cluster: 8,
        seed: 8,
    };
    let pair = build_equalizer(&world, &plan, 0, n)?;

    println!("N = {n} anchors, d = {} dims, {} validation samples", spec.dim_tx, world.validation_indices().len());
    println!("{:>4} {:>10} {:>10} {:>12}", "q", "step", "accuracy", "compression");
    for bits in [1u32, 2, 4, 6, 8, 12, 16, 32] {
        let accuracy = evaluate_accuracy(&world, &decoder, &pair, n, bits)?;
        println!(
            "{bits:>4} {:>10.4} {accuracy:>10.4} {:>11.1}x",
            step_size(bits)?,
            1.0 / compression_factor(n, bits, spec.dim_tx)?
        );
    }

    // the quantizer itself: mid-tread levels with ties resolved downward
    let code = pair.encode(&world.tx().row(0).transpose(), 0)?;
    let q4 = quantize(&code, 4)?;
    println!("\nfirst five coefficients at q = 4 (step {:.4}):", step_size(4)?);
    for (raw, quantized) in code.coeffs.iter().zip(&q4.coeffs).take(5) {
        println!("  {raw:>9.5} -> {quantized:>9.5}");
    }
    Ok(())
}
