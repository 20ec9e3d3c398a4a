//! Anchor selection: the shared reference points from which equalizers are
//! built.
//!
//! Two strategies are provided. Uniform selection draws anchor rows directly
//! from the embedding set without replacement. Prototypical selection first
//! clusters the embeddings with k-means, then averages a small support set
//! drawn from each cluster, which denoises individual samples and spreads the
//! anchors over the occupied region of latent space. Selection returns the
//! support indices so that a paired embedding set (the other end of the link)
//! can be reduced to anchors with identical row alignment.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Parameters for prototypical anchor selection.
#[derive(Debug, Clone, Copy)]
pub struct AnchorSpec {
    /// Number of anchors (k-means cluster count).
    pub n_anchors: usize,
    /// Samples averaged per cluster.
    pub samples_per_cluster: usize,
    pub seed: u64,
}

/// Result of a k-means run: per-sample cluster ids and the cluster means.
#[derive(Debug, Clone)]
pub struct Clustering {
    pub assignments: Vec<usize>,
    pub centroids: DMatrix<f64>,
}

const KMEANS_MAX_ITERS: usize = 100;
const KMEANS_TOL: f64 = 1e-6;

fn squared_distance(data: &DMatrix<f64>, row: usize, centroids: &DMatrix<f64>, c: usize) -> f64 {
    let mut acc = 0.0;
    for j in 0..data.ncols() {
        let diff = data[(row, j)] - centroids[(c, j)];
        acc += diff * diff;
    }
    acc
}

/// Lloyd's k-means with k-means++ seeding. Deterministic for a fixed seed;
/// an emptied cluster is reseeded from the point farthest from its centroid.
pub fn kmeans(data: &DMatrix<f64>, k: usize, seed: u64) -> Result<Clustering> {
    let n = data.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("k-means needs 1 <= k <= {n}, got {k}")));
    }
    let d = data.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding: each next center drawn with probability proportional
    // to the squared distance from the nearest existing center
    let mut centroids = DMatrix::<f64>::zeros(k, d);
    let first = sample_index(&mut rng, n);
    centroids.set_row(0, &data.row(first));
    let mut nearest_sq: Vec<f64> = (0..n)
        .map(|i| squared_distance(data, i, &centroids, 0))
        .collect();
    for c in 1..k {
        let total: f64 = nearest_sq.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rand::Rng::random::<f64>(&mut rng) * total;
            let mut chosen = n - 1;
            for (i, &w) in nearest_sq.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            sample_index(&mut rng, n)
        };
        centroids.set_row(c, &data.row(pick));
        for i in 0..n {
            nearest_sq[i] = nearest_sq[i].min(squared_distance(data, i, &centroids, c));
        }
    }

    let mut assignments = vec![0usize; n];
    for _ in 0..KMEANS_MAX_ITERS {
        for i in 0..n {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let dist = squared_distance(data, i, &centroids, c);
                if dist < best_d {
                    best_d = dist;
                    best = c;
                }
            }
            assignments[i] = best;
        }

        let mut sums = DMatrix::<f64>::zeros(k, d);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[assignments[i]] += 1;
            for j in 0..d {
                sums[(assignments[i], j)] += data[(i, j)];
            }
        }
        let mut moved = 0.0_f64;
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = squared_distance(data, a, &centroids, assignments[a]);
                        let db = squared_distance(data, b, &centroids, assignments[b]);
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                centroids.set_row(c, &data.row(far));
                moved = f64::INFINITY;
                continue;
            }
            let mut shift = 0.0;
            for j in 0..d {
                let new = sums[(c, j)] / counts[c] as f64;
                let diff = new - centroids[(c, j)];
                shift += diff * diff;
                centroids[(c, j)] = new;
            }
            moved = moved.max(shift.sqrt());
        }
        if moved < KMEANS_TOL {
            break;
        }
    }
    // final assignment against the converged centroids
    for i in 0..n {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for c in 0..k {
            let dist = squared_distance(data, i, &centroids, c);
            if dist < best_d {
                best_d = dist;
                best = c;
            }
        }
        assignments[i] = best;
    }
    Ok(Clustering { assignments, centroids })
}

fn sample_index(rng: &mut ChaCha8Rng, n: usize) -> usize {
    (rand::Rng::random::<f64>(rng) * n as f64) as usize % n
}

/// Draws `amount` distinct indices from `0..n` (partial Fisher-Yates).
fn sample_without_replacement(rng: &mut ChaCha8Rng, n: usize, amount: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..amount {
        let j = i + sample_index(rng, n - i);
        pool.swap(i, j);
    }
    pool.truncate(amount);
    pool
}

/// Averages each support set of rows into one anchor row.
pub fn anchors_from_support(
    embeddings: &DMatrix<f64>,
    support: &[Vec<usize>],
) -> Result<DMatrix<f64>> {
    if support.is_empty() {
        return Err(Error::InvalidInput("support must contain at least one set".into()));
    }
    let (n, d) = (embeddings.nrows(), embeddings.ncols());
    let mut anchors = DMatrix::zeros(support.len(), d);
    for (a, set) in support.iter().enumerate() {
        if set.is_empty() {
            return Err(Error::InvalidInput(format!("support set {a} is empty")));
        }
        for &i in set {
            if i >= n {
                return Err(Error::InvalidInput(format!(
                    "support set {a} references row {i}, but only {n} rows exist"
                )));
            }
            for j in 0..d {
                anchors[(a, j)] += embeddings[(i, j)];
            }
        }
        for j in 0..d {
            anchors[(a, j)] /= set.len() as f64;
        }
    }
    Ok(anchors)
}

/// Prototypical anchors: cluster, draw a support set per cluster, average.
///
/// Returns the support index sets alongside the anchor matrix; applying
/// [`anchors_from_support`] with the same sets to a paired embedding matrix
/// yields the row-aligned anchors for the other side of the link. A cluster
/// smaller than the requested support size contributes all of its members.
pub fn prototypical_anchors(
    embeddings: &DMatrix<f64>,
    spec: &AnchorSpec,
) -> Result<(Vec<Vec<usize>>, DMatrix<f64>)> {
    if spec.samples_per_cluster == 0 {
        return Err(Error::InvalidInput("samples_per_cluster must be at least 1".into()));
    }
    let clustering = kmeans(embeddings, spec.n_anchors, spec.seed)?;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); spec.n_anchors];
    for (i, &c) in clustering.assignments.iter().enumerate() {
        members[c].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x616e_6368);
    let mut support = Vec::with_capacity(spec.n_anchors);
    for (c, group) in members.iter().enumerate() {
        let take = spec.samples_per_cluster.min(group.len());
        if take < spec.samples_per_cluster {
            log::debug!(
                "cluster {c} has {} members, shrinking support from {} to {take}",
                group.len(),
                spec.samples_per_cluster
            );
        }
        let mut picked: Vec<usize> = sample_without_replacement(&mut rng, group.len(), take)
            .into_iter()
            .map(|i| group[i])
            .collect();
        picked.sort_unstable();
        support.push(picked);
    }
    let anchors = anchors_from_support(embeddings, &support)?;
    Ok((support, anchors))
}

/// Uniform anchors: `n` embedding rows drawn without replacement. Returns the
/// selected row indices (a permutation of the full set when `n` equals the
/// number of rows) together with the corresponding anchor matrix.
pub fn uniform_anchors(
    embeddings: &DMatrix<f64>,
    n: usize,
    seed: u64,
) -> Result<(Vec<usize>, DMatrix<f64>)> {
    let rows = embeddings.nrows();
    if n == 0 || n > rows {
        return Err(Error::InvalidInput(format!(
            "uniform selection needs 1 <= n <= {rows}, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices = sample_without_replacement(&mut rng, rows, n);
    let mut anchors = DMatrix::zeros(n, embeddings.ncols());
    for (row, &i) in indices.iter().enumerate() {
        anchors.set_row(row, &embeddings.row(i));
    }
    Ok((indices, anchors))
}
