//! Seeded Lloyd k-means and L/M/H engagement labelling.
//!
//! Initialization is greedy k-means++ driven by ChaCha8 seeded from the
//! caller's seed: each new centre is the best (lowest resulting inertia)
//! of a few D²-weighted draws. Empty clusters are repaired by moving the
//! point farthest from its centroid into them.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engagement::{EngagementMetrics, Level, COUNT_METRICS};
use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: Vec<Vec<f64>>,
    row_ids: Vec<String>,
    dims: usize,
    /// Per-dimension `(min, max)` recorded by [`normalize`].
    scaling: Option<Vec<(f64, f64)>>,
}

impl FeatureMatrix {
    pub fn new(row_ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if row_ids.len() != rows.len() {
            return Err(Error::BadMatrix("row id count differs from row count"));
        }
        let dims = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dims) {
            return Err(Error::BadMatrix("ragged rows"));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::BadMatrix("non-finite entry"));
        }
        Ok(FeatureMatrix {
            rows,
            row_ids,
            dims,
            scaling: None,
        })
    }

    /// Nine-column matrix of raw metrics. Absent durations are imputed
    /// with the mean of the present values in that column (0 if none).
    pub fn from_metrics(metrics: &BTreeMap<String, EngagementMetrics>) -> Result<Self> {
        let raw: Vec<[Option<f64>; 9]> = metrics.values().map(EngagementMetrics::values).collect();
        let mut means = [0.0; 9];
        for (d, mean) in means.iter_mut().enumerate() {
            let present: Vec<f64> = raw.iter().filter_map(|r| r[d]).collect();
            if !present.is_empty() {
                *mean = present.iter().sum::<f64>() / present.len() as f64;
            }
        }
        let rows = raw
            .iter()
            .map(|r| r.iter().zip(&means).map(|(v, m)| v.unwrap_or(*m)).collect())
            .collect();
        FeatureMatrix::new(metrics.keys().cloned().collect(), rows)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn scaling(&self) -> Option<&[(f64, f64)]> {
        self.scaling.as_deref()
    }
}

/// Min-max scales every column to `[0, 1]`; constant columns become 0.
pub fn normalize(m: &FeatureMatrix) -> FeatureMatrix {
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); m.dims];
    for row in &m.rows {
        for (r, &v) in ranges.iter_mut().zip(row) {
            r.0 = r.0.min(v);
            r.1 = r.1.max(v);
        }
    }
    let rows = m
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .zip(&ranges)
                .map(|(&v, &(lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
                .collect()
        })
        .collect();
    FeatureMatrix {
        rows,
        row_ids: m.row_ids.clone(),
        dims: m.dims,
        scaling: Some(ranges),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this.
    pub tol: f64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        KMeansParams {
            k: 3,
            seed: 0,
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances of points to their centroid.
    pub inertia: f64,
    /// Inertia after each Lloyd iteration.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(row: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, dist2(row, &centroids[0]));
    for (j, c) in centroids.iter().enumerate().skip(1) {
        let d = dist2(row, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn init_centroids(rows: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = rows.len();
    let trials = 2 + (usize::BITS - k.leading_zeros()) as usize * 7 / 10;
    let mut centroids = vec![rows[rng.random_range(0..n)].clone()];
    let mut closest: Vec<f64> = rows.iter().map(|r| dist2(r, &centroids[0])).collect();
    while centroids.len() < k {
        let potential: f64 = closest.iter().sum();
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..trials {
            let pick = if potential > 0.0 {
                let target = rng.random::<f64>() * potential;
                let mut acc = 0.0;
                let mut pick = n - 1;
                for (i, d) in closest.iter().enumerate() {
                    acc += d;
                    if acc > target {
                        pick = i;
                        break;
                    }
                }
                pick
            } else {
                rng.random_range(0..n)
            };
            let updated: Vec<f64> = rows
                .iter()
                .zip(&closest)
                .map(|(r, &d)| d.min(dist2(r, &rows[pick])))
                .collect();
            let pot: f64 = updated.iter().sum();
            if best.as_ref().is_none_or(|b| pot < b.0) {
                best = Some((pot, pick, updated));
            }
        }
        let (_, pick, updated) = best.expect("at least one trial");
        centroids.push(rows[pick].clone());
        closest = updated;
    }
    centroids
}

/// Seeded Lloyd iteration. Deterministic for a given seed and input.
pub fn kmeans(m: &FeatureMatrix, params: KMeansParams) -> Result<KMeansResult> {
    let KMeansParams {
        k,
        seed,
        max_iter,
        tol,
    } = params;
    if k == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if m.len() < k {
        return Err(Error::InsufficientData {
            needed: k,
            got: m.len(),
        });
    }
    let rows = &m.rows;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = init_centroids(rows, k, &mut rng);
    let mut assignments = vec![0usize; rows.len()];
    let mut history = Vec::new();
    let tol2 = tol * tol;

    for _ in 0..max_iter.max(1) {
        // assignment
        let nearest_of = par::map(rows, |r| nearest(r, &centroids));
        let mut dists: Vec<f64> = Vec::with_capacity(rows.len());
        for (i, (j, d)) in nearest_of.into_iter().enumerate() {
            assignments[i] = j;
            dists.push(d);
        }
        repair_empty(&mut assignments, &mut dists, k);

        // update
        let mut sums = vec![vec![0.0; m.dims]; k];
        let mut sizes = vec![0usize; k];
        for (row, &j) in rows.iter().zip(&assignments) {
            sizes[j] += 1;
            for (s, v) in sums[j].iter_mut().zip(row) {
                *s += v;
            }
        }
        let next: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&sizes)
            .map(|(s, &n)| s.into_iter().map(|v| v / n as f64).collect())
            .collect();
        let shift = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| dist2(a, b))
            .fold(0.0, f64::max);
        centroids = next;
        let inertia: f64 = rows
            .iter()
            .zip(&assignments)
            .map(|(r, &j)| dist2(r, &centroids[j]))
            .sum();
        history.push(inertia);
        if shift < tol2 {
            break;
        }
    }

    Ok(KMeansResult {
        assignments,
        centroids,
        inertia: *history.last().expect("at least one iteration"),
        iterations: history.len(),
        inertia_history: history,
    })
}

/// Moves the point farthest from its centroid (taken from a cluster with
/// more than one member) into each empty cluster.
fn repair_empty(assignments: &mut [usize], dists: &mut [f64], k: usize) {
    let mut sizes = vec![0usize; k];
    for &j in assignments.iter() {
        sizes[j] += 1;
    }
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let mut far: Option<usize> = None;
        for i in 0..assignments.len() {
            if sizes[assignments[i]] > 1 && far.is_none_or(|f| dists[i] > dists[f]) {
                far = Some(i);
            }
        }
        let Some(i) = far else { return };
        sizes[assignments[i]] -= 1;
        sizes[empty] += 1;
        assignments[i] = empty;
        dists[i] = 0.0;
    }
}

/// Which centroid coordinates rank clusters into levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelScoring {
    /// Dimensions averaged into the ordering score.
    pub score_dims: Vec<usize>,
    /// Dimension compared when scores tie.
    pub tie_dim: usize,
}

impl LevelScoring {
    /// The engagement layout: the five frequency counts score, logins
    /// break ties; duration dimensions are ignored.
    pub fn engagement() -> Self {
        LevelScoring {
            score_dims: COUNT_METRICS.to_vec(),
            tie_dim: 0,
        }
    }
}

/// Ranks the three clusters by the mean of the scoring dimensions of their
/// centroids (ties by `tie_dim`) and labels them L, M, H in ascending
/// order. Returns one level per assignment.
pub fn label_levels(
    centroids: &[Vec<f64>],
    assignments: &[usize],
    scoring: &LevelScoring,
) -> Result<Vec<Level>> {
    if centroids.len() != 3 {
        return Err(Error::LevelMapping(centroids.len()));
    }
    let score = |c: &Vec<f64>| {
        scoring.score_dims.iter().map(|&d| c[d]).sum::<f64>()
            / scoring.score_dims.len().max(1) as f64
    };
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (&centroids[a], &centroids[b]);
        score(ca)
            .total_cmp(&score(cb))
            .then(ca[scoring.tie_dim].total_cmp(&cb[scoring.tie_dim]))
    });
    let mut level_of = [Level::L; 3];
    for (rank, &cluster) in order.iter().enumerate() {
        level_of[cluster] = Level::ALL[rank];
    }
    assignments
        .iter()
        .map(|&a| level_of.get(a).copied().ok_or(Error::LevelMapping(a + 1)))
        .collect()
}
