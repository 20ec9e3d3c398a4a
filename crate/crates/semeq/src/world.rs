//! Paired-latent worlds: the data two agents would see of the same content.
//!
//! A [`LatentWorld`] holds row-aligned transmit- and receive-side embeddings
//! with class labels and a stratified train/validation split. Synthetic
//! worlds place class centroids uniformly on the unit sphere, scatter
//! unit-normalized samples around them, and produce the receive side through
//! a planted semi-orthogonal map plus isotropic noise, so the ground truth
//! relating the two spaces is known exactly. External worlds are ingested
//! from EMB1 files and carry no ground-truth map.
//!
//! On top of a world: a nearest-centroid decoder for the receive side, the
//! downstream accuracy of an equalizer-plus-quantizer chain, and the
//! accuracy table over a grid of (coefficient count, bit depth) choices that
//! the slot-level controller consumes.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::anchors::{anchors_from_support, prototypical_anchors, uniform_anchors, AnchorSpec};
use crate::emb1;
use crate::equalize::{build_fe, build_pfe, build_upe, EqualizerMethod, EqualizerPair};
use crate::error::{Error, Result};
use crate::quant::quantize;
use crate::seeds::{component_rng, Component};

/// How the receive side of a world came to be.
#[derive(Debug, Clone)]
pub enum Provenance {
    /// Planted map: `rx = normalize(scale * Q tx + noise)`.
    Synthetic { map: DMatrix<f64>, scale: f64, noise_sigma: f64 },
    /// Ingested from files; no ground truth available.
    External,
}

/// Parameters for synthetic world generation.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct WorldSpec {
    pub dim_tx: usize,
    pub dim_rx: usize,
    pub n_classes: usize,
    pub n_samples: usize,
    /// Standard deviation of the per-sample scatter around a class centroid.
    pub cluster_spread: f64,
    /// Standard deviation of the receive-side additive noise.
    pub noise_sigma: f64,
    /// Gain applied to the mapped transmit vector before noise.
    pub scale: f64,
    pub seed: u64,
}

/// Row-aligned paired embeddings with labels and a train/validation split.
#[derive(Debug, Clone)]
pub struct LatentWorld {
    tx: DMatrix<f64>,
    rx: DMatrix<f64>,
    labels: Vec<usize>,
    n_classes: usize,
    provenance: Provenance,
    train: Vec<usize>,
    validation: Vec<usize>,
}

impl LatentWorld {
    pub fn dim_tx(&self) -> usize {
        self.tx.ncols()
    }

    pub fn dim_rx(&self) -> usize {
        self.rx.ncols()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn tx(&self) -> &DMatrix<f64> {
        &self.tx
    }

    pub fn rx(&self) -> &DMatrix<f64> {
        &self.rx
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// The planted transmit-to-receive map, if this world is synthetic.
    pub fn ground_truth_map(&self) -> Option<&DMatrix<f64>> {
        match &self.provenance {
            Provenance::Synthetic { map, .. } => Some(map),
            Provenance::External => None,
        }
    }

    pub fn train_indices(&self) -> &[usize] {
        &self.train
    }

    pub fn validation_indices(&self) -> &[usize] {
        &self.validation
    }

    /// Copies the selected rows of one side into a dense matrix.
    pub fn gather(&self, side: Side, indices: &[usize]) -> Result<DMatrix<f64>> {
        let source = match side {
            Side::Tx => &self.tx,
            Side::Rx => &self.rx,
        };
        let mut out = DMatrix::zeros(indices.len(), source.ncols());
        for (row, &i) in indices.iter().enumerate() {
            if i >= source.nrows() {
                return Err(Error::InvalidInput(format!("row {i} out of range")));
            }
            out.set_row(row, &source.row(i));
        }
        Ok(out)
    }

    /// Writes the world as a `{prefix}_tx.emb1` / `{prefix}_rx.emb1` /
    /// `{prefix}_labels.csv` triple.
    pub fn export(&self, prefix: impl AsRef<Path>) -> Result<()> {
        let prefix = prefix.as_ref();
        let with = |suffix: &str| {
            let mut name = prefix.as_os_str().to_os_string();
            name.push(suffix);
            std::path::PathBuf::from(name)
        };
        emb1::write_embeddings(with("_tx.emb1"), &self.tx)?;
        emb1::write_embeddings(with("_rx.emb1"), &self.rx)?;
        emb1::write_labels(with("_labels.csv"), &self.labels)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Tx,
    Rx,
}

/// Stratified split: within each class, samples alternate train/validation
/// in index order, so both splits cover every class.
fn stratified_split(labels: &[usize], n_classes: usize) -> (Vec<usize>, Vec<usize>) {
    let mut seen = vec![0usize; n_classes];
    let mut train = Vec::with_capacity(labels.len() / 2 + 1);
    let mut validation = Vec::with_capacity(labels.len() / 2 + 1);
    for (i, &l) in labels.iter().enumerate() {
        if seen[l] % 2 == 0 {
            train.push(i);
        } else {
            validation.push(i);
        }
        seen[l] += 1;
    }
    (train, validation)
}

fn standard_normal_vector(rng: &mut impl Rng, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random semi-orthogonal `rows x cols` map (isometry on the smaller side),
/// from the QR factorization of a Gaussian matrix.
fn random_semi_orthogonal(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let tall = rows.max(cols);
    let thin = rows.min(cols);
    let g = DMatrix::from_fn(tall, thin, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = g.qr().q();
    if rows >= cols {
        q
    } else {
        q.transpose()
    }
}

/// Generates a synthetic paired world per [`WorldSpec`]. Deterministic for a
/// fixed spec.
pub fn generate_world(spec: &WorldSpec) -> Result<LatentWorld> {
    if spec.dim_tx < 2 || spec.dim_rx < 2 {
        return Err(Error::InvalidInput("world dimensions must be at least 2".into()));
    }
    if spec.n_classes < 2 {
        return Err(Error::InvalidInput("need at least 2 classes".into()));
    }
    if spec.n_samples < 10 * spec.n_classes {
        return Err(Error::InvalidInput(format!(
            "need at least 10 samples per class: {} < 10 * {}",
            spec.n_samples, spec.n_classes
        )));
    }
    if !(spec.scale > 0.0) || spec.cluster_spread < 0.0 || spec.noise_sigma < 0.0 {
        return Err(Error::InvalidInput(
            "scale must be positive, spreads non-negative".into(),
        ));
    }

    let mut rng = component_rng(spec.seed, Component::World, 0);
    let (d, p) = (spec.dim_tx, spec.dim_rx);

    let mut centroids = DMatrix::zeros(spec.n_classes, d);
    for t in 0..spec.n_classes {
        let c = standard_normal_vector(&mut rng, d);
        let n = c.norm();
        centroids.set_row(t, &(c / n).transpose());
    }

    let map = random_semi_orthogonal(&mut rng, p, d);

    let mut tx = DMatrix::zeros(spec.n_samples, d);
    let mut rx = DMatrix::zeros(spec.n_samples, p);
    let mut labels = Vec::with_capacity(spec.n_samples);
    for i in 0..spec.n_samples {
        let label = i % spec.n_classes;
        labels.push(label);
        let mut x = centroids.row(label).transpose()
            + standard_normal_vector(&mut rng, d) * spec.cluster_spread;
        let xn = x.norm();
        if xn == 0.0 {
            return Err(Error::InvalidInput("degenerate zero sample".into()));
        }
        x /= xn;

        let mut y = (&map * &x) * spec.scale;
        if spec.noise_sigma > 0.0 {
            y += standard_normal_vector(&mut rng, p) * spec.noise_sigma;
        }
        let yn = y.norm();
        if yn == 0.0 {
            return Err(Error::InvalidInput("receive-side sample collapsed to zero".into()));
        }
        y /= yn;

        tx.set_row(i, &x.transpose());
        rx.set_row(i, &y.transpose());
    }

    let (train, validation) = stratified_split(&labels, spec.n_classes);
    Ok(LatentWorld {
        tx,
        rx,
        labels,
        n_classes: spec.n_classes,
        provenance: Provenance::Synthetic {
            map,
            scale: spec.scale,
            noise_sigma: spec.noise_sigma,
        },
        train,
        validation,
    })
}

/// Loads a paired world from two EMB1 files and a label CSV. Rows must be
/// aligned across all three files.
pub fn ingest_embeddings(
    tx_path: impl AsRef<Path>,
    rx_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<LatentWorld> {
    let tx = emb1::read_embeddings(&tx_path)?;
    let rx = emb1::read_embeddings(&rx_path)?;
    let labels = emb1::read_labels(&labels_path)?;
    if tx.nrows() != rx.nrows() || tx.nrows() != labels.len() {
        return Err(Error::dim(
            "ingest_embeddings",
            format!("{} aligned rows", tx.nrows()),
            format!("rx {}, labels {}", rx.nrows(), labels.len()),
        ));
    }
    let n_classes = labels.iter().max().map(|m| m + 1).unwrap_or(0);
    if n_classes < 2 {
        return Err(Error::InvalidInput("ingested world has fewer than 2 classes".into()));
    }
    let (train, validation) = stratified_split(&labels, n_classes);
    Ok(LatentWorld {
        tx,
        rx,
        labels,
        n_classes,
        provenance: Provenance::External,
        train,
        validation,
    })
}

/// Nearest-centroid classifier over unit-normalized class means.
#[derive(Debug, Clone)]
pub struct CentroidDecoder {
    /// One unit row per class.
    centroids: DMatrix<f64>,
}

impl CentroidDecoder {
    /// Fits per-class centroids on the training split of the chosen side.
    pub fn train(world: &LatentWorld, side: Side) -> Result<Self> {
        let dim = match side {
            Side::Tx => world.dim_tx(),
            Side::Rx => world.dim_rx(),
        };
        let mut sums = DMatrix::<f64>::zeros(world.n_classes(), dim);
        let mut counts = vec![0usize; world.n_classes()];
        let source = match side {
            Side::Tx => world.tx(),
            Side::Rx => world.rx(),
        };
        for &i in world.train_indices() {
            let label = world.labels()[i];
            counts[label] += 1;
            for j in 0..dim {
                sums[(label, j)] += source[(i, j)];
            }
        }
        for (t, &c) in counts.iter().enumerate() {
            if c == 0 {
                return Err(Error::InvalidInput(format!(
                    "class {t} has no training samples; cannot fit a centroid"
                )));
            }
            let norm = sums.row(t).norm();
            if norm == 0.0 {
                return Err(Error::InvalidInput(format!("class {t} centroid is zero")));
            }
            let scaled = sums.row(t) / norm;
            sums.set_row(t, &scaled);
        }
        Ok(CentroidDecoder { centroids: sums })
    }

    pub fn n_classes(&self) -> usize {
        self.centroids.nrows()
    }

    pub fn dim(&self) -> usize {
        self.centroids.ncols()
    }

    /// Highest-dot-product class; ties resolve to the lowest class index.
    /// Scale-invariant in `x`.
    pub fn predict(&self, x: &DVector<f64>) -> Result<usize> {
        if x.len() != self.dim() {
            return Err(Error::dim("predict", self.dim(), x.len()));
        }
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for t in 0..self.centroids.nrows() {
            let score = self.centroids.row(t).transpose().dot(x);
            if score > best_score {
                best_score = score;
                best = t;
            }
        }
        Ok(best)
    }
}

/// Fraction of validation samples classified correctly after the full chain:
/// encode on the transmit side, quantize to `bits`, decode, classify.
pub fn evaluate_accuracy(
    world: &LatentWorld,
    decoder: &CentroidDecoder,
    pair: &EqualizerPair,
    n_coeffs: usize,
    bits: u32,
) -> Result<f64> {
    // a rotation estimate carries at most min(d, p) coefficients however
    // many anchors backed it, frame methods ship one per anchor
    let expected = match pair.method() {
        EqualizerMethod::Upe => n_coeffs.min(pair.dim_tx()).min(pair.dim_rx()),
        _ => n_coeffs,
    };
    if pair.n_coeffs() != expected {
        return Err(Error::dim("evaluate_accuracy", expected, pair.n_coeffs()));
    }
    if pair.dim_tx() != world.dim_tx() {
        return Err(Error::dim("evaluate_accuracy", world.dim_tx(), pair.dim_tx()));
    }
    if pair.dim_rx() != decoder.dim() {
        return Err(Error::dim("evaluate_accuracy", decoder.dim(), pair.dim_rx()));
    }
    if world.validation_indices().is_empty() {
        return Err(Error::InvalidInput("world has no validation samples".into()));
    }
    let mut correct = 0usize;
    for &i in world.validation_indices() {
        let x = world.tx().row(i).transpose();
        let code = pair.encode(&x, 0)?;
        let code = quantize(&code, bits)?;
        let y = pair.decode(&code)?;
        if decoder.predict(&y)? == world.labels()[i] {
            correct += 1;
        }
    }
    Ok(correct as f64 / world.validation_indices().len() as f64)
}

/// Anchor selection strategy for table construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnchorStrategy {
    Prototypical,
    Uniform,
}

impl std::str::FromStr for AnchorStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prototypical" => Ok(AnchorStrategy::Prototypical),
            "uniform" => Ok(AnchorStrategy::Uniform),
            other => Err(Error::InvalidInput(format!(
                "unknown anchor strategy {other:?}, expected prototypical or uniform"
            ))),
        }
    }
}

/// Downstream accuracy on a `(user, coefficient count, bit depth)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyTable {
    n_set: Vec<usize>,
    q_set: Vec<u32>,
    /// `values[user][n_idx][q_idx]`
    values: Vec<Vec<Vec<f64>>>,
}

impl AccuracyTable {
    pub fn n_set(&self) -> &[usize] {
        &self.n_set
    }

    pub fn q_set(&self) -> &[u32] {
        &self.q_set
    }

    pub fn n_users(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, user: usize, n_coeffs: usize, bits: u32) -> Option<f64> {
        let ni = self.n_set.iter().position(|&n| n == n_coeffs)?;
        let qi = self.q_set.iter().position(|&q| q == bits)?;
        self.values.get(user).map(|u| u[ni][qi])
    }

    /// Best accuracy any grid point achieves for a user.
    pub fn max_accuracy(&self, user: usize) -> Option<f64> {
        self.values
            .get(user)
            .map(|u| u.iter().flatten().fold(f64::NEG_INFINITY, |a, &v| a.max(v)))
    }

    /// Worst accuracy over the grid for a user.
    pub fn min_accuracy(&self, user: usize) -> Option<f64> {
        self.values
            .get(user)
            .map(|u| u.iter().flatten().fold(f64::INFINITY, |a, &v| a.min(v)))
    }

    /// Writes `user,N,q,accuracy` rows.
    pub fn write_csv(&self, mut out: impl std::io::Write) -> Result<()> {
        writeln!(out, "user,N,q,accuracy")?;
        for (user, grid) in self.values.iter().enumerate() {
            for (ni, row) in grid.iter().enumerate() {
                for (qi, v) in row.iter().enumerate() {
                    writeln!(out, "{user},{},{},{v}", self.n_set[ni], self.q_set[qi])?;
                }
            }
        }
        Ok(())
    }

    /// Assembles a table from precomputed values; shape-checked.
    pub fn from_values(n_set: Vec<usize>, q_set: Vec<u32>, values: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if n_set.is_empty() || q_set.is_empty() || values.is_empty() {
            return Err(Error::InvalidInput("accuracy table cannot be empty".into()));
        }
        if n_set.windows(2).any(|w| w[0] >= w[1]) || q_set.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("grid axes must be strictly ascending".into()));
        }
        for grid in &values {
            if grid.len() != n_set.len() || grid.iter().any(|r| r.len() != q_set.len()) {
                return Err(Error::dim(
                    "accuracy_table",
                    format!("{} x {}", n_set.len(), q_set.len()),
                    "ragged grid",
                ));
            }
        }
        Ok(AccuracyTable { n_set, q_set, values })
    }
}

/// How equalizers are constructed while building a table.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct TablePlan {
    pub method: EqualizerMethod,
    pub strategy: AnchorStrategy,
    /// Support samples averaged per anchor (prototypical strategy only).
    pub samples_per_cluster: usize,
    pub seed: u64,
}

/// Builds one equalizer for `(world, n_coeffs)` following a plan. Anchors are
/// selected on the transmit side of the training split; the receive-side
/// anchors reuse the same support rows, keeping the pair index-aligned.
pub fn build_equalizer(
    world: &LatentWorld,
    plan: &TablePlan,
    user: usize,
    n_coeffs: usize,
) -> Result<EqualizerPair> {
    let train_tx = world.gather(Side::Tx, world.train_indices())?;
    let seed = crate::seeds::derive_seed(
        plan.seed,
        Component::Anchors,
        ((user as u64) << 32) | n_coeffs as u64,
    );
    let support: Vec<Vec<usize>> = match plan.strategy {
        AnchorStrategy::Prototypical => {
            let spec = AnchorSpec {
                n_anchors: n_coeffs,
                samples_per_cluster: plan.samples_per_cluster,
                seed,
            };
            prototypical_anchors(&train_tx, &spec)?.0
        }
        AnchorStrategy::Uniform => {
            let (indices, _) = uniform_anchors(&train_tx, n_coeffs, seed)?;
            indices.into_iter().map(|i| vec![i]).collect()
        }
    };
    // map train-local support rows back to world rows
    let global: Vec<Vec<usize>> = support
        .iter()
        .map(|set| set.iter().map(|&i| world.train_indices()[i]).collect())
        .collect();
    let anchors_tx = anchors_from_support(world.tx(), &global)?;
    let anchors_rx = anchors_from_support(world.rx(), &global)?;
    match plan.method {
        EqualizerMethod::Pfe => build_pfe(&anchors_tx, &anchors_rx),
        EqualizerMethod::Fe => build_fe(&anchors_tx, &anchors_rx),
        EqualizerMethod::Upe => {
            // the rotation estimate cannot have more directions than the
            // smaller latent space, extra anchors only stabilize it
            let n_keep = n_coeffs.min(world.dim_tx()).min(world.dim_rx());
            build_upe(&anchors_tx, &anchors_rx, n_keep)
        }
    }
}

/// Evaluates the full `(user, N, q)` accuracy grid. One equalizer is built
/// per `(user, N)`; bit depths reuse it.
pub fn build_accuracy_table(
    worlds: &[LatentWorld],
    decoders: &[CentroidDecoder],
    plan: &TablePlan,
    n_set: &[usize],
    q_set: &[u32],
) -> Result<AccuracyTable> {
    if worlds.is_empty() || worlds.len() != decoders.len() {
        return Err(Error::dim("build_accuracy_table", worlds.len(), decoders.len()));
    }
    if n_set.is_empty() || q_set.is_empty() {
        return Err(Error::InvalidInput("grid axes cannot be empty".into()));
    }
    let mut values = Vec::with_capacity(worlds.len());
    for (user, (world, decoder)) in worlds.iter().zip(decoders).enumerate() {
        let mut grid = Vec::with_capacity(n_set.len());
        for &n in n_set {
            let pair = build_equalizer(world, plan, user, n)?;
            let mut row = Vec::with_capacity(q_set.len());
            for &q in q_set {
                row.push(evaluate_accuracy(world, decoder, &pair, n, q)?);
            }
            grid.push(row);
        }
        values.push(grid);
    }
    AccuracyTable::from_values(n_set.to_vec(), q_set.to_vec(), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(seed: u64) -> WorldSpec {
        WorldSpec {
            dim_tx: 16,
            dim_rx: 16,
            n_classes: 5,
            n_samples: 200,
            cluster_spread: 0.25,
            noise_sigma: 0.0,
            scale: 1.0,
            seed,
        }
    }

    #[test]
    fn generation_is_deterministic_and_normalized() {
        let a = generate_world(&small_spec(3)).unwrap();
        let b = generate_world(&small_spec(3)).unwrap();
        assert_eq!(a.tx(), b.tx());
        assert_eq!(a.rx(), b.rx());
        assert_eq!(a.labels(), b.labels());
        for i in 0..a.len() {
            assert!((a.tx().row(i).norm() - 1.0).abs() < 1e-12);
            assert!((a.rx().row(i).norm() - 1.0).abs() < 1e-12);
        }
        let c = generate_world(&small_spec(4)).unwrap();
        assert_ne!(a.tx(), c.tx());
    }

    #[test]
    fn noiseless_identity_world_has_equal_sides() {
        let mut spec = small_spec(9);
        spec.dim_rx = spec.dim_tx;
        let w = generate_world(&spec).unwrap();
        let q = w.ground_truth_map().unwrap();
        // noiseless: rx must be exactly Q tx (norms preserved)
        for i in 0..w.len() {
            let x = w.tx().row(i).transpose();
            let y = w.rx().row(i).transpose();
            assert!(((q * x) - y).norm() < 1e-12);
        }
        // pairwise inner products preserved by the orthogonal map
        for (i, j) in [(0, 1), (2, 7), (11, 40)] {
            let ti = w.tx().row(i).transpose();
            let tj = w.tx().row(j).transpose();
            let ri = w.rx().row(i).transpose();
            let rj = w.rx().row(j).transpose();
            assert!((ti.dot(&tj) - ri.dot(&rj)).abs() < 1e-9);
        }
    }

    #[test]
    fn split_is_stratified() {
        let w = generate_world(&small_spec(5)).unwrap();
        assert_eq!(w.train_indices().len() + w.validation_indices().len(), w.len());
        let mut train_counts = vec![0usize; w.n_classes()];
        let mut val_counts = vec![0usize; w.n_classes()];
        for &i in w.train_indices() {
            train_counts[w.labels()[i]] += 1;
        }
        for &i in w.validation_indices() {
            val_counts[w.labels()[i]] += 1;
        }
        for t in 0..w.n_classes() {
            assert!(train_counts[t] >= 10);
            assert!(val_counts[t] >= 10);
        }
    }

    #[test]
    fn export_ingest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let w = generate_world(&small_spec(11)).unwrap();
        let prefix = dir.path().join("world");
        w.export(&prefix).unwrap();
        let back = ingest_embeddings(
            dir.path().join("world_tx.emb1"),
            dir.path().join("world_rx.emb1"),
            dir.path().join("world_labels.csv"),
        )
        .unwrap();
        assert_eq!(back.len(), w.len());
        assert_eq!(back.labels(), w.labels());
        assert!(back.ground_truth_map().is_none());
        // f32 interchange: equal to within f32 rounding
        for i in 0..w.len() {
            for j in 0..w.dim_tx() {
                assert!((back.tx()[(i, j)] - w.tx()[(i, j)]).abs() <= 1e-7);
            }
        }
        assert_eq!(back.train_indices(), w.train_indices());
    }

    #[test]
    fn ingest_rejects_misaligned_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let w = generate_world(&small_spec(2)).unwrap();
        w.export(dir.path().join("w")).unwrap();
        emb1::write_labels(dir.path().join("short.csv"), &[0, 1, 2]).unwrap();
        assert!(ingest_embeddings(
            dir.path().join("w_tx.emb1"),
            dir.path().join("w_rx.emb1"),
            dir.path().join("short.csv"),
        )
        .is_err());
    }

    #[test]
    fn decoder_is_scale_invariant_and_breaks_ties_low() {
        let w = generate_world(&small_spec(7)).unwrap();
        let dec = CentroidDecoder::train(&w, Side::Rx).unwrap();
        for &i in w.validation_indices().iter().take(50) {
            let y = w.rx().row(i).transpose();
            let p1 = dec.predict(&y).unwrap();
            let p2 = dec.predict(&(&y * 173.5)).unwrap();
            assert_eq!(p1, p2);
        }
        // an exact tie: query equidistant from two centroids resolves low
        let c0 = dec.centroids.row(0).transpose();
        let c1 = dec.centroids.row(1).transpose();
        let mid = (&c0 + &c1) * 0.5;
        let p = dec.predict(&mid).unwrap();
        let s0 = c0.dot(&mid);
        let s1 = c1.dot(&mid);
        if (s0 - s1).abs() < 1e-15 {
            assert_eq!(p, 0);
        }
    }

    #[test]
    fn clean_direct_decoding_is_accurate() {
        let w = generate_world(&small_spec(13)).unwrap();
        let dec = CentroidDecoder::train(&w, Side::Rx).unwrap();
        let mut correct = 0;
        for &i in w.validation_indices() {
            if dec.predict(&w.rx().row(i).transpose()).unwrap() == w.labels()[i] {
                correct += 1;
            }
        }
        let acc = correct as f64 / w.validation_indices().len() as f64;
        assert!(acc > 0.9, "well-separated world should decode easily, got {acc}");
    }

    #[test]
    fn accuracy_table_shape_and_sanity() {
        let w = generate_world(&small_spec(17)).unwrap();
        let dec = CentroidDecoder::train(&w, Side::Rx).unwrap();
        let plan = TablePlan {
            method: EqualizerMethod::Pfe,
            strategy: AnchorStrategy::Prototypical,
            samples_per_cluster: 4,
            seed: 17,
        };
        let n_set = [6, 10, 16];
        let q_set = [4, 8, 32];
        let table = build_accuracy_table(&[w], &[dec], &plan, &n_set, &q_set).unwrap();
        assert_eq!(table.n_users(), 1);
        for &n in &n_set {
            for &q in &q_set {
                let v = table.get(0, n, q).unwrap();
                assert!((0.0..=1.0).contains(&v));
            }
        }
        assert!(table.get(0, 7, 4).is_none());
        // plenty of coefficients, fine quantization >= coarsest corner - slack
        let rich = table.get(0, 16, 32).unwrap();
        let poor = table.get(0, 6, 4).unwrap();
        assert!(rich >= poor - 0.02, "rich {rich} vs poor {poor}");

        let mut csv = Vec::new();
        table.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("user,N,q,accuracy\n"));
        assert_eq!(text.lines().count(), 1 + 9);
    }

    #[test]
    fn rejects_degenerate_specs() {
        let mut spec = small_spec(1);
        spec.n_samples = 30; // under 10 per class
        assert!(generate_world(&spec).is_err());
        let mut spec = small_spec(1);
        spec.n_classes = 1;
        assert!(generate_world(&spec).is_err());
        let mut spec = small_spec(1);
        spec.scale = 0.0;
        assert!(generate_world(&spec).is_err());
    }
}
