//! Frames, whitening and what the analysis operator guarantees.
//!
//! Builds the classic three-vector tight frame in the plane, a random
//! overcomplete frame, and a rank-deficient frame, and shows how whitening
//! turns each into a Parseval (or partial-isometry) operator.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use semeq::frame::AnalysisOperator;

fn report(name: &str, op: &AnalysisOperator) -> semeq::Result<()> {
    let bounds = op.frame_bounds();
    println!(
        "{name}: {} vectors in R^{}, rank {}, frame bounds [{:.4}, {:.4}], condition {:.4}",
        op.len(),
        op.dim(),
        op.rank(),
        bounds.lower,
        bounds.upper,
        op.condition_number()?
    );
    Ok(())
}

fn main() -> semeq::Result<()> {
    // the "Mercedes-Benz" frame: three unit vectors at 120 degrees; already
    // tight with A = B = 3/2, so whitening only rescales it
    let angles = [0.0, 2.0 * std::f64::consts::FRAC_PI_3, 4.0 * std::f64::consts::FRAC_PI_3];
    let mb = AnalysisOperator::from_rows(
        3,
        2,
        &angles.iter().flat_map(|a| [a.cos(), a.sin()]).collect::<Vec<_>>(),
    )?;
    report("mercedes-benz", &mb)?;
    report("mercedes-benz whitened", &mb.whiten()?)?;

    // a random Gaussian frame is overcomplete but not tight; whitening makes
    // the analysis map an exact isometry
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let random = AnalysisOperator::new(DMatrix::from_fn(12, 5, |_, _| {
        rng.sample::<f64, _>(StandardNormal)
    }))?;
    report("random 12x5", &random)?;
    let white = random.whiten()?;
    report("random whitened", &white)?;

    let x = DVector::from_fn(5, |i, _| (i as f64 + 1.0) / 5.0);
    let coeffs = white.analyze(&x)?;
    let back = white.synthesize(&coeffs)?;
    println!(
        "round trip through {} whitened coefficients: |x - back| = {:.3e}, energy ratio {:.6}",
        coeffs.len(),
        (&x - &back).norm(),
        coeffs.norm_squared() / x.norm_squared()
    );

    // fewer anchors than dimensions: whitening yields a partial isometry and
    // analysis-synthesis projects onto the span of the frame rows
    let wide = AnalysisOperator::new(DMatrix::from_fn(3, 5, |_, _| {
        rng.sample::<f64, _>(StandardNormal)
    }))?
    .whiten()?;
    report("wide 3x5 whitened", &wide)?;
    let projected = wide.synthesize(&wide.analyze(&x)?)?;
    let twice = wide.synthesize(&wide.analyze(&projected)?)?;
    println!(
        "projection onto a 3-dimensional span: |P x - P P x| = {:.3e}",
        (&projected - &twice).norm()
    );
    Ok(())
}
