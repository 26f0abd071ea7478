//! Grouping papers by the shape of their citation accumulation.
//!
//! Each paper is reduced to a normalized trajectory Pi(t) = c(t) / c(T) for
//! t = 1..T, which strips out total volume and leaves only timing: a vector
//! close to 1 early means the paper got most of its attention immediately.
//! These vectors are clustered with k-means (k-means++ seeding, Lloyd
//! iterations, many restarts) under plain Euclidean distance.
//!
//! Cluster indices coming out of k-means are arbitrary, so classes are
//! relabeled 1..k by descending Pi(2): class 1 collects the most
//! front-loaded papers and class k the slowest burners.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::citation_data::CitationHistory;
use crate::error::{Error, Result};
use crate::seed;

pub const DEFAULT_K: usize = 4;
pub const DEFAULT_RESTARTS: usize = 100;
pub const MAX_LLOYD_ITERS: usize = 300;

/// Normalized cumulative trajectory of one paper: `pi[i]` holds
/// c(i + 1) / c(T), so the last entry is exactly 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeShape {
    pub paper_id: String,
    pub pi: Vec<f64>,
}

impl CumulativeShape {
    /// Fraction of the horizon total collected within the first two years.
    pub fn early_fraction(&self) -> f64 {
        self.pi[1.min(self.pi.len() - 1)]
    }
}

/// Normalizes histories into shape vectors. Every history must have a
/// positive count at the horizon; run the sample filter first.
pub fn make_shapes(histories: &[CitationHistory]) -> Result<Vec<CumulativeShape>> {
    histories
        .iter()
        .map(|h| {
            let total = h.total();
            if total == 0 {
                return Err(Error::Domain(format!(
                    "cannot normalize '{}': zero citations at the horizon",
                    h.paper_id
                )));
            }
            let total = total as f64;
            Ok(CumulativeShape {
                paper_id: h.paper_id.clone(),
                pi: h.counts[1..].iter().map(|&c| c as f64 / total).collect(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassLabel {
    pub paper_id: String,
    /// 1-based; class 1 is the most front-loaded.
    pub class_index: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassAssignment {
    pub labels: Vec<ClassLabel>,
    /// `centroids[c]` belongs to class c + 1.
    pub centroids: Vec<Vec<f64>>,
    pub wcss: f64,
}

impl ClassAssignment {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn class_size(&self, class_index: usize) -> usize {
        self.labels.iter().filter(|l| l.class_index == class_index).count()
    }
}

#[inline]
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kmeans_pp_seed(data: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = data.len();
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    let first = rng.gen_range(0..n);
    centroids.push(data[first].to_vec());

    let mut d2: Vec<f64> = data.iter().map(|x| dist2(x, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                u -= w;
                if u <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        centroids.push(data[pick].to_vec());
        let latest = centroids.last().unwrap();
        for (i, x) in data.iter().enumerate() {
            let d = dist2(x, latest);
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centroids
}

/// Per-point assignment, final centroids, and the within-cluster sum of
/// squares recorded after each assignment pass (non-increasing except
/// possibly at an empty-cluster repair).
pub type KmeansRun = (Vec<usize>, Vec<Vec<f64>>, Vec<f64>);

/// One Lloyd run from given starting centroids.
fn lloyd(data: &[&[f64]], k: usize, mut centroids: Vec<Vec<f64>>, max_iters: usize) -> KmeansRun {
    let n = data.len();
    let dim = data[0].len();
    let mut assign = vec![usize::MAX; n];
    let mut trace = Vec::new();

    for _ in 0..max_iters {
        let mut changed = false;
        let mut wcss = 0.0;
        for (i, x) in data.iter().enumerate() {
            let mut best = (0usize, f64::INFINITY);
            for (c, cent) in centroids.iter().enumerate() {
                let d = dist2(x, cent);
                if d < best.1 {
                    best = (c, d);
                }
            }
            if assign[i] != best.0 {
                assign[i] = best.0;
                changed = true;
            }
            wcss += best.1;
        }
        trace.push(wcss);

        let mut sizes = vec![0usize; k];
        for &a in &assign {
            sizes[a] += 1;
        }
        // An empty cluster adopts the point farthest from its current
        // centroid, taken from a cluster that can spare one.
        for c in 0..k {
            if sizes[c] > 0 {
                continue;
            }
            let donor = (0..n)
                .filter(|&i| sizes[assign[i]] > 1)
                .max_by(|&a, &b| {
                    dist2(data[a], &centroids[assign[a]])
                        .total_cmp(&dist2(data[b], &centroids[assign[b]]))
                });
            if let Some(i) = donor {
                sizes[assign[i]] -= 1;
                assign[i] = c;
                sizes[c] = 1;
                changed = true;
            }
        }

        if !changed {
            break;
        }

        for cent in centroids.iter_mut() {
            cent.iter_mut().for_each(|v| *v = 0.0);
        }
        for (i, x) in data.iter().enumerate() {
            for j in 0..dim {
                centroids[assign[i]][j] += x[j];
            }
        }
        for (c, cent) in centroids.iter_mut().enumerate() {
            if sizes[c] > 0 {
                let inv = 1.0 / sizes[c] as f64;
                cent.iter_mut().for_each(|v| *v *= inv);
            }
        }
    }

    (assign, centroids, trace)
}

/// One seeded run (k-means++ then Lloyd), exposing the WCSS recorded after
/// every assignment pass so convergence behavior can be observed directly.
/// [`kmeans_cluster`] is the multi-restart production entry point; this
/// mirrors its restart 0 for the same seed.
pub fn kmeans_single_run(shapes: &[CumulativeShape], k: usize, seed_value: u64) -> Result<KmeansRun> {
    if k == 0 || shapes.len() < k {
        return Err(Error::InvalidInput(format!(
            "cannot form {k} classes from {} shapes",
            shapes.len()
        )));
    }
    let data: Vec<&[f64]> = shapes.iter().map(|s| s.pi.as_slice()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed::mix(&[seed_value, 0]));
    let start = kmeans_pp_seed(&data, k, &mut rng);
    Ok(lloyd(&data, k, start, MAX_LLOYD_ITERS))
}

/// Clusters shapes into k classes. Runs `restarts` independent seedings in
/// parallel and keeps the run with the lowest within-cluster sum of squares
/// (ties broken by restart index, so results are reproducible for a given
/// seed regardless of thread scheduling).
pub fn kmeans_cluster(
    shapes: &[CumulativeShape],
    k: usize,
    restarts: usize,
    seed_value: u64,
) -> Result<ClassAssignment> {
    if k == 0 || restarts == 0 {
        return Err(Error::InvalidInput("k and restarts must be positive".into()));
    }
    if shapes.len() < k {
        return Err(Error::InvalidInput(format!(
            "cannot form {k} classes from {} shapes",
            shapes.len()
        )));
    }
    let dim = shapes[0].pi.len();
    for s in shapes {
        if s.pi.len() != dim {
            return Err(Error::InvalidInput(format!(
                "shape '{}' has {} entries, expected {dim}",
                s.paper_id,
                s.pi.len()
            )));
        }
        if s.pi.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("shape '{}' has non-finite entries", s.paper_id)));
        }
    }

    let data: Vec<&[f64]> = shapes.iter().map(|s| s.pi.as_slice()).collect();

    let runs: Vec<_> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::mix(&[seed_value, r as u64]));
            let start = kmeans_pp_seed(&data, k, &mut rng);
            let (assign, centroids, trace) = lloyd(&data, k, start, MAX_LLOYD_ITERS);
            (*trace.last().unwrap(), r, assign, centroids)
        })
        .collect();

    let (wcss, _, raw_assign, raw_centroids) = runs
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .unwrap();

    // Relabel so class 1 has the highest centroid Pi(2).
    let early_idx = 1.min(dim - 1);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| raw_centroids[b][early_idx].total_cmp(&raw_centroids[a][early_idx]));
    let mut raw_to_class = vec![0usize; k];
    for (rank, &raw) in order.iter().enumerate() {
        raw_to_class[raw] = rank + 1;
    }

    let labels = shapes
        .iter()
        .zip(&raw_assign)
        .map(|(s, &a)| ClassLabel { paper_id: s.paper_id.clone(), class_index: raw_to_class[a] })
        .collect();
    let centroids = order.iter().map(|&raw| raw_centroids[raw].clone()).collect();

    Ok(ClassAssignment { labels, centroids, wcss })
}

/// Five-number summary of raw counts at time t for one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub t: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub class_index: usize,
    pub size: usize,
    /// Mean over members of c(2) / c(T).
    pub mean_early_fraction: f64,
    pub boxes: Vec<BoxStats>,
}

/// Linear-interpolation quantile (type 7); `sorted` must be ascending.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.len() == 1 {
        return sorted[0];
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-class distribution summaries of raw counts at the requested years.
/// `histories` must be the same papers in the same order the assignment was
/// built from.
pub fn class_statistics(
    assignment: &ClassAssignment,
    histories: &[CitationHistory],
    t_values: &[usize],
) -> Result<Vec<ClassSummary>> {
    if assignment.labels.len() != histories.len() {
        return Err(Error::InvalidInput(format!(
            "{} labels vs {} histories",
            assignment.labels.len(),
            histories.len()
        )));
    }
    for (l, h) in assignment.labels.iter().zip(histories) {
        if l.paper_id != h.paper_id {
            return Err(Error::InvalidInput(format!(
                "assignment/history order mismatch at '{}' vs '{}'",
                l.paper_id, h.paper_id
            )));
        }
    }
    let horizon = histories.first().map(|h| h.horizon()).unwrap_or(0);
    for &t in t_values {
        if t > horizon {
            return Err(Error::InvalidInput(format!("t = {t} beyond horizon {horizon}")));
        }
    }

    let k = assignment.k();
    let mut out = Vec::with_capacity(k);
    for class in 1..=k {
        let members: Vec<&CitationHistory> = assignment
            .labels
            .iter()
            .zip(histories)
            .filter(|(l, _)| l.class_index == class)
            .map(|(_, h)| h)
            .collect();
        let size = members.len();
        let mean_early = if size == 0 {
            0.0
        } else {
            members
                .iter()
                .map(|h| h.counts[2.min(horizon)] as f64 / h.total().max(1) as f64)
                .sum::<f64>()
                / size as f64
        };
        let mut boxes = Vec::with_capacity(t_values.len());
        for &t in t_values {
            let mut vals: Vec<f64> = members.iter().map(|h| h.counts[t] as f64).collect();
            vals.sort_by(f64::total_cmp);
            if vals.is_empty() {
                boxes.push(BoxStats { t, min: 0.0, q1: 0.0, median: 0.0, q3: 0.0, max: 0.0 });
            } else {
                boxes.push(BoxStats {
                    t,
                    min: vals[0],
                    q1: quantile(&vals, 0.25),
                    median: quantile(&vals, 0.5),
                    q3: quantile(&vals, 0.75),
                    max: *vals.last().unwrap(),
                });
            }
        }
        out.push(ClassSummary { class_index: class, size, mean_early_fraction: mean_early, boxes });
    }
    Ok(out)
}

/// For each class, the fraction of its members that land in the top decile
/// of horizon totals. The decile cutoff is the value at rank ceil(N/10) from
/// the top; papers tied with the cutoff count as in.
pub fn top_decile_odds(
    assignment: &ClassAssignment,
    histories: &[CitationHistory],
) -> Result<Vec<f64>> {
    if assignment.labels.len() != histories.len() || histories.is_empty() {
        return Err(Error::InvalidInput(
            "assignment and histories must be the same non-empty sample".into(),
        ));
    }
    let n = histories.len();
    let mut totals: Vec<u64> = histories.iter().map(|h| h.total()).collect();
    totals.sort_unstable_by(|a, b| b.cmp(a));
    let rank = ((n as f64) * 0.1).ceil().max(1.0) as usize;
    let cutoff = totals[rank - 1];

    let k = assignment.k();
    let mut in_top = vec![0usize; k + 1];
    let mut sizes = vec![0usize; k + 1];
    for (l, h) in assignment.labels.iter().zip(histories) {
        sizes[l.class_index] += 1;
        if h.total() >= cutoff {
            in_top[l.class_index] += 1;
        }
    }
    Ok((1..=k)
        .map(|c| if sizes[c] == 0 { 0.0 } else { in_top[c] as f64 / sizes[c] as f64 })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(id: &str, pi: Vec<f64>) -> CumulativeShape {
        CumulativeShape { paper_id: id.into(), pi }
    }

    #[test]
    fn shapes_are_scale_invariant() {
        let small = CitationHistory { paper_id: "a".into(), counts: vec![0, 2, 5, 8, 10] };
        let big = CitationHistory { paper_id: "b".into(), counts: vec![0, 20, 50, 80, 100] };
        let shapes = make_shapes(&[small, big]).unwrap();
        assert_eq!(shapes[0].pi, shapes[1].pi);
        assert_eq!(*shapes[0].pi.last().unwrap(), 1.0);
    }

    #[test]
    fn uncited_history_is_rejected() {
        let h = CitationHistory { paper_id: "z".into(), counts: vec![0, 0, 0] };
        assert!(make_shapes(&[h]).is_err());
    }

    #[test]
    fn two_planted_blobs_are_recovered() {
        let mut shapes = Vec::new();
        for i in 0..20 {
            let eps = (i as f64) * 1e-3;
            shapes.push(shape(&format!("fast{i}"), vec![0.8 + eps, 0.9, 1.0]));
            shapes.push(shape(&format!("slow{i}"), vec![0.1 + eps, 0.3, 1.0]));
        }
        let a = kmeans_cluster(&shapes, 2, 10, 99).unwrap();
        for l in &a.labels {
            let want = if l.paper_id.starts_with("fast") { 1 } else { 2 };
            assert_eq!(l.class_index, want, "paper {}", l.paper_id);
        }
        // Class 1 centroid is the front-loaded one.
        assert!(a.centroids[0][1] > a.centroids[1][1]);
    }

    #[test]
    fn wcss_trace_is_nonincreasing() {
        let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
        let shapes: Vec<CumulativeShape> = (0..200)
            .map(|i| {
                let base = if i % 2 == 0 { 0.2 } else { 0.7 };
                let pi: Vec<f64> = (0..10)
                    .map(|j| (base + 0.02 * j as f64 + 0.05 * rng.gen::<f64>()).min(1.0))
                    .collect();
                shape(&format!("s{i}"), pi)
            })
            .collect();
        let data: Vec<&[f64]> = shapes.iter().map(|s| s.pi.as_slice()).collect();
        let mut seed_rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(11);
        let start = kmeans_pp_seed(&data, 3, &mut seed_rng);
        let (_, _, trace) = lloyd(&data, 3, start, MAX_LLOYD_ITERS);
        assert!(trace.len() >= 2);
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "wcss rose: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn restarts_never_hurt() {
        let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(17);
        let shapes: Vec<CumulativeShape> = (0..60)
            .map(|i| {
                let pi: Vec<f64> = (0..8).map(|_| rng.gen::<f64>()).collect();
                shape(&format!("r{i}"), pi)
            })
            .collect();
        let single = kmeans_cluster(&shapes, 4, 1, 123).unwrap();
        let multi = kmeans_cluster(&shapes, 4, 40, 123).unwrap();
        assert!(multi.wcss <= single.wcss + 1e-12);
    }

    #[test]
    fn same_seed_same_answer() {
        let shapes: Vec<CumulativeShape> = (0..30)
            .map(|i| shape(&format!("d{i}"), vec![(i % 7) as f64 / 7.0, 0.5, 1.0]))
            .collect();
        let a = kmeans_cluster(&shapes, 3, 12, 4242).unwrap();
        let b = kmeans_cluster(&shapes, 3, 12, 4242).unwrap();
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.centroids, b.centroids);
        assert_eq!(a.wcss, b.wcss);
    }

    #[test]
    fn duplicate_heavy_data_does_not_panic() {
        let mut shapes = vec![shape("lone", vec![0.9, 1.0]); 1];
        for i in 0..10 {
            shapes.push(shape(&format!("a{i}"), vec![0.1, 1.0]));
            shapes.push(shape(&format!("b{i}"), vec![0.5, 1.0]));
        }
        let a = kmeans_cluster(&shapes, 3, 5, 1).unwrap();
        for c in 1..=3 {
            assert!(a.class_size(c) >= 1, "class {c} is empty");
        }
    }

    #[test]
    fn quantiles_use_linear_interpolation() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.75), 3.25);
        assert_eq!(quantile(&[7.0], 0.5), 7.0);
    }

    #[test]
    fn class_statistics_summarize_counts() {
        let histories = vec![
            CitationHistory { paper_id: "a".into(), counts: vec![0, 5, 8, 10] },
            CitationHistory { paper_id: "b".into(), counts: vec![0, 1, 2, 10] },
            CitationHistory { paper_id: "c".into(), counts: vec![0, 6, 9, 12] },
        ];
        let assignment = ClassAssignment {
            labels: vec![
                ClassLabel { paper_id: "a".into(), class_index: 1 },
                ClassLabel { paper_id: "b".into(), class_index: 2 },
                ClassLabel { paper_id: "c".into(), class_index: 1 },
            ],
            centroids: vec![vec![0.8, 1.0], vec![0.2, 1.0]],
            wcss: 0.0,
        };
        let stats = class_statistics(&assignment, &histories, &[1, 3]).unwrap();
        assert_eq!(stats[0].size, 2);
        assert_eq!(stats[0].boxes[0].min, 5.0);
        assert_eq!(stats[0].boxes[0].max, 6.0);
        assert_eq!(stats[0].boxes[0].median, 5.5);
        assert!((stats[0].mean_early_fraction - (8.0 / 10.0 + 9.0 / 12.0) / 2.0).abs() < 1e-12);
        assert_eq!(stats[1].size, 1);
        assert_eq!(stats[1].boxes[1].median, 10.0);
    }

    #[test]
    fn top_decile_cutoff_includes_ties() {
        let histories: Vec<CitationHistory> = (1..=20)
            .map(|i| CitationHistory { paper_id: format!("p{i}"), counts: vec![0, i as u64] })
            .collect();
        // rank = ceil(2) = 2, cutoff = 19: papers 19 and 20 are in.
        let labels: Vec<ClassLabel> = histories
            .iter()
            .enumerate()
            .map(|(i, h)| ClassLabel {
                paper_id: h.paper_id.clone(),
                class_index: if i >= 16 { 1 } else { 2 }, // p17..p20 in class 1
            })
            .collect();
        let assignment = ClassAssignment {
            labels,
            centroids: vec![vec![0.9], vec![0.1]],
            wcss: 0.0,
        };
        let odds = top_decile_odds(&assignment, &histories).unwrap();
        assert!((odds[0] - 0.5).abs() < 1e-12, "class 1 odds {}", odds[0]);
        assert_eq!(odds[1], 0.0);
    }
}
