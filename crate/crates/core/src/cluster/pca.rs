//! Two-component PCA layout for a small set of sibling centroids.

use nalgebra::{DMatrix, SymmetricEigen};

#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    /// One (x, y) per input row.
    pub coords: Vec<[f64; 2]>,
    /// Up to two orthonormal principal axes in feature space.
    pub components: Vec<Vec<f64>>,
    /// Variance captured by each axis (population convention), descending.
    pub explained_variance: [f64; 2],
}

/// Projects mean-centered rows onto their top two principal components.
///
/// Each component is oriented so that its largest-magnitude loading is
/// positive (first such index on exact ties). Directions without variance
/// produce zero coordinates; a single row maps to the origin.
///
/// The eigenproblem is solved on the k × k Gram matrix of the centered rows,
/// which is much smaller than the feature covariance when k ≪ N.
pub fn pca_project(rows: &[Vec<f64>]) -> PcaProjection {
    let k = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    if k == 0 {
        return PcaProjection {
            coords: Vec::new(),
            components: Vec::new(),
            explained_variance: [0.0; 2],
        };
    }

    let mut mean = vec![0.0; n];
    for r in rows {
        for (m, x) in mean.iter_mut().zip(r) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= k as f64);
    let centered = DMatrix::from_fn(k, n, |i, j| rows[i][j] - mean[j]);

    let gram = &centered * centered.transpose();
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });

    let trace: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
    let negligible = 1e-12 * trace.max(f64::MIN_POSITIVE);

    let mut components: Vec<Vec<f64>> = Vec::new();
    let mut explained = [0.0; 2];
    for (slot, &idx) in order.iter().take(2).enumerate() {
        let lambda = eig.eigenvalues[idx];
        if lambda <= negligible || trace == 0.0 {
            break;
        }
        let u = eig.eigenvectors.column(idx);
        let mut c: Vec<f64> = (0..n)
            .map(|j| (0..k).map(|i| centered[(i, j)] * u[i]).sum::<f64>())
            .collect();
        // Re-orthogonalize against the first axis to keep round-off out.
        for prev in &components {
            let dot: f64 = c.iter().zip(prev).map(|(a, b)| a * b).sum();
            c.iter_mut().zip(prev).for_each(|(a, b)| *a -= dot * b);
        }
        normalize(&mut c);
        orient(&mut c);
        components.push(c);
        explained[slot] = lambda / k as f64;
    }
    let informative = components.len();

    // Complete the basis so callers always get orthonormal axes when n allows.
    while components.len() < 2.min(n) {
        let c = complement(&components, n);
        components.push(c);
    }

    let coords = (0..k)
        .map(|i| {
            let mut xy = [0.0; 2];
            for (slot, c) in components.iter().take(informative).enumerate() {
                xy[slot] = (0..n).map(|j| centered[(i, j)] * c[j]).sum();
            }
            xy
        })
        .collect();

    PcaProjection {
        coords,
        components,
        explained_variance: explained,
    }
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Flips `v` so that its largest-magnitude entry is positive.
fn orient(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// A unit vector orthogonal to `basis`, built from the standard basis vector
/// with the largest residual.
fn complement(basis: &[Vec<f64>], n: usize) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        for b in basis {
            let dot = b[j];
            e.iter_mut().zip(b).for_each(|(a, x)| *a -= dot * x);
        }
        let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
        if best.as_ref().is_none_or(|(bn, _)| norm > *bn + 1e-12) {
            best = Some((norm, e));
        }
    }
    let mut v = best.map(|(_, v)| v).unwrap_or_default();
    normalize(&mut v);
    orient(&mut v);
    v
}
