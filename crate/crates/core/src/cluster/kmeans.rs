//! Lloyd's k-means with k-means++ seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ClusterError;
use crate::seeding;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub max_iter: usize,
    /// Convergence threshold on the summed squared centroid shift, relative
    /// to the mean per-dimension variance of the data.
    pub tol: f64,
    /// Independent k-means++ restarts; the lowest inertia wins.
    pub restarts: usize,
}

impl Default for KMeansParams {
    fn default() -> Self {
        KMeansParams {
            max_iter: 100,
            tol: 1e-4,
            restarts: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// Cluster index per input point.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    pub iterations_run: usize,
    /// Inertia after the initial assignment and after every Lloyd iteration.
    pub inertia_trace: Vec<f64>,
}

impl KMeansResult {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centroids.len()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid; ties go to the lowest index.
pub fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

pub fn kmeans(
    points: &[&[f64]],
    k: usize,
    seed: u64,
    params: &KMeansParams,
) -> Result<KMeansResult, ClusterError> {
    if k == 0 {
        return Err(ClusterError::InvalidParameter(
            "k must be at least 1".into(),
        ));
    }
    if points.len() < k {
        return Err(ClusterError::InsufficientPoints {
            points: points.len(),
            k,
        });
    }
    let mut best: Option<KMeansResult> = None;
    for restart in 0..params.restarts.max(1) {
        let run = lloyd(points, k, seeding::combine(seed, restart as u64), params);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn plus_plus_init(points: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..points.len())].to_vec());
    let mut dist: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = points.len() - 1;
            for (i, d) in dist.iter().enumerate() {
                acc += d;
                if u < acc {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[next].to_vec();
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn assign(points: &[&[f64]], centroids: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>, f64) {
    let mut assignments = Vec::with_capacity(points.len());
    let mut costs = Vec::with_capacity(points.len());
    let mut inertia = 0.0;
    for p in points {
        let (j, d) = nearest(p, centroids);
        assignments.push(j);
        costs.push(d);
        inertia += d;
    }
    (assignments, costs, inertia)
}

fn mean_variance(points: &[&[f64]]) -> f64 {
    let dims = points[0].len();
    if dims == 0 {
        return 0.0;
    }
    let n = points.len() as f64;
    let mut total = 0.0;
    for d in 0..dims {
        let mean = points.iter().map(|p| p[d]).sum::<f64>() / n;
        total += points.iter().map(|p| (p[d] - mean).powi(2)).sum::<f64>() / n;
    }
    total / dims as f64
}

fn lloyd(points: &[&[f64]], k: usize, seed: u64, params: &KMeansParams) -> KMeansResult {
    let dims = points[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let threshold = params.tol * mean_variance(points);

    let (mut assignments, mut costs, mut inertia) = assign(points, &centroids);
    let mut trace = vec![inertia];
    let mut iterations_run = 0;

    for _ in 0..params.max_iter {
        iterations_run += 1;
        let mut sums = vec![vec![0.0; dims]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p.iter()) {
                *s += x;
            }
        }
        let mut updated: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .zip(&centroids)
            .map(|((s, &c), old)| {
                if c == 0 {
                    old.clone()
                } else {
                    s.into_iter().map(|x| x / c as f64).collect()
                }
            })
            .collect();

        // Empty clusters take the point currently farthest from its centroid.
        let mut taken = vec![false; points.len()];
        for j in (0..k).filter(|&j| counts[j] == 0) {
            let far = costs.iter().enumerate().filter(|&(i, _)| !taken[i]).fold(
                None::<(usize, f64)>,
                |best, (i, &d)| match best {
                    Some((_, bd)) if bd >= d => best,
                    _ => Some((i, d)),
                },
            );
            if let Some((i, _)) = far {
                taken[i] = true;
                costs[i] = 0.0;
                updated[j] = points[i].to_vec();
            }
        }

        let shift: f64 = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| squared_distance(a, b))
            .sum();
        centroids = updated;

        let (next, next_costs, next_inertia) = assign(points, &centroids);
        let changed = next != assignments;
        assignments = next;
        costs = next_costs;
        inertia = next_inertia;
        trace.push(inertia);
        if !changed || shift <= threshold {
            break;
        }
    }

    KMeansResult {
        assignments,
        centroids,
        inertia,
        iterations_run,
        inertia_trace: trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rows(data: &[Vec<f64>]) -> Vec<&[f64]> {
        data.iter().map(Vec::as_slice).collect()
    }

    #[test]
    fn k1_is_the_mean() {
        let data = vec![vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, -1.0]];
        let r = kmeans(&rows(&data), 1, 7, &KMeansParams::default()).unwrap();
        assert_eq!(r.centroids[0], vec![2.0, 1.0]);
        // n × total variance
        let expected = (4.0 + 0.0 + 4.0) + (0.0 + 4.0 + 4.0);
        assert!((r.inertia - expected).abs() < 1e-12);
    }

    #[test]
    fn two_groups_on_a_line() {
        let data: Vec<Vec<f64>> = [0.0, 1.0, 2.0, 10.0, 11.0, 12.0]
            .iter()
            .map(|&x| vec![x])
            .collect();
        let r = kmeans(&rows(&data), 2, 1, &KMeansParams::default()).unwrap();
        let a = r.assignments[0];
        assert!(r.assignments[..3].iter().all(|&x| x == a));
        assert!(r.assignments[3..].iter().all(|&x| x != a));
        let mut cs: Vec<f64> = r.centroids.iter().map(|c| c[0]).collect();
        cs.sort_by(f64::total_cmp);
        assert_eq!(cs, vec![1.0, 11.0]);
        assert!((r.inertia - 4.0).abs() < 1e-12);
    }

    #[test]
    fn k_equals_n_has_zero_inertia() {
        let data = vec![
            vec![0.0, 0.0],
            vec![1.0, 5.0],
            vec![-3.0, 2.0],
            vec![7.0, 7.0],
        ];
        let r = kmeans(&rows(&data), 4, 3, &KMeansParams::default()).unwrap();
        assert_eq!(r.inertia, 0.0);
    }

    #[test]
    fn insufficient_points() {
        let data = vec![vec![0.0]];
        let err = kmeans(&rows(&data), 2, 0, &KMeansParams::default()).unwrap_err();
        assert!(err.to_string().contains("insufficient points"));
    }

    #[test]
    fn identical_points_collapse() {
        let data = vec![vec![0.5, 0.5]; 10];
        let r = kmeans(&rows(&data), 3, 0, &KMeansParams::default()).unwrap();
        assert_eq!(r.inertia, 0.0);
        assert_eq!(r.assignments.len(), 10);
        let sizes = r.cluster_sizes();
        assert_eq!(sizes.iter().sum::<usize>(), 10);
    }

    proptest! {
        #[test]
        fn lloyd_invariants(
            data in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 4..40),
            k in 1usize..4,
            seed in any::<u64>(),
        ) {
            let r = kmeans(&rows(&data), k, seed, &KMeansParams { restarts: 1, ..KMeansParams::default() }).unwrap();
            for w in r.inertia_trace.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0));
            }
            let mut total = 0.0;
            for (p, &a) in data.iter().zip(&r.assignments) {
                let (j, d) = nearest(p, &r.centroids);
                prop_assert!(squared_distance(p, &r.centroids[a]) <= d);
                prop_assert_eq!(j, a);
                total += d;
            }
            prop_assert!((total - r.inertia).abs() <= 1e-9 * total.max(1.0));
        }
    }
}
