use serde::{Deserialize, Serialize};

use super::SummarizeError;

pub const DEFAULT_BINS: usize = 8;

/// Uniform histogram over [-1, 1]. Bins are left-closed; the last bin is
/// also right-closed so that 1.0 is counted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u32>,
    pub total: u32,
}

impl Histogram {
    pub fn new(bins: usize) -> Self {
        let bins = bins.max(1);
        Histogram {
            bin_edges: (0..=bins)
                .map(|i| -1.0 + 2.0 * i as f64 / bins as f64)
                .collect(),
            counts: vec![0; bins],
            total: 0,
        }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_of(&self, score: f64) -> usize {
        let bins = self.bins();
        let pos = ((score.clamp(-1.0, 1.0) + 1.0) / 2.0 * bins as f64).floor();
        (pos as usize).min(bins - 1)
    }

    pub fn add(&mut self, score: f64) {
        let b = self.bin_of(score);
        self.counts[b] += 1;
        self.total += 1;
    }

    pub fn from_scores(bins: usize, scores: impl IntoIterator<Item = f64>) -> Self {
        let mut h = Histogram::new(bins);
        scores.into_iter().for_each(|s| h.add(s));
        h
    }
}

/// L1 distance between the normalized count vectors, in [0, 2].
///
/// Two empty histograms are at distance 0; an empty and a non-empty one at 2.
pub fn histogram_distance(a: &Histogram, b: &Histogram) -> Result<f64, SummarizeError> {
    if a.bin_edges != b.bin_edges {
        return Err(SummarizeError::BinningMismatch {
            left: a.bins(),
            right: b.bins(),
        });
    }
    match (a.total, b.total) {
        (0, 0) => return Ok(0.0),
        (0, _) | (_, 0) => return Ok(2.0),
        _ => {}
    }
    // Σ|x/ta − y/tb| = Σ|x·tb − y·ta| / (ta·tb); the numerator is exact in
    // integers, so identical distributions give 0 and disjoint ones give 2.
    let (ta, tb) = (u128::from(a.total), u128::from(b.total));
    let numerator: u128 = a
        .counts
        .iter()
        .zip(&b.counts)
        .map(|(&x, &y)| (u128::from(x) * tb).abs_diff(u128::from(y) * ta))
        .sum();
    Ok(numerator as f64 / (ta * tb) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binning() {
        let h = Histogram::from_scores(8, [-1.0, -1.0, 1.0]);
        assert_eq!(h.counts, vec![2, 0, 0, 0, 0, 0, 0, 1]);
        assert_eq!(h.total, 3);
        assert_eq!(Histogram::new(8).bin_of(0.0), 4);
        assert_eq!(Histogram::new(8).bin_of(-0.75), 1);
        assert_eq!(Histogram::new(8).bin_of(0.999), 7);
        assert_eq!(Histogram::new(8).bin_edges.len(), 9);
        assert_eq!(Histogram::new(8).bin_edges[4], 0.0);
    }

    #[test]
    fn empty_histogram() {
        let h = Histogram::from_scores(8, []);
        assert_eq!(h.counts, vec![0; 8]);
        assert_eq!(h.total, 0);
    }

    #[test]
    fn distances() {
        let a = Histogram::from_scores(8, [-1.0, 0.2]);
        assert_eq!(histogram_distance(&a, &a).unwrap(), 0.0);

        let low = Histogram::from_scores(8, [-1.0; 3]);
        let high = Histogram::from_scores(8, [1.0; 5]);
        assert_eq!(histogram_distance(&low, &high).unwrap(), 2.0);

        // [2, 2] vs [1, 3]
        let a = Histogram::from_scores(2, [-0.5, -0.5, 0.5, 0.5]);
        let b = Histogram::from_scores(2, [-0.5, 0.5, 0.5, 0.5]);
        assert!((histogram_distance(&a, &b).unwrap() - 0.5).abs() < 1e-15);

        let empty = Histogram::new(8);
        assert_eq!(histogram_distance(&empty, &empty).unwrap(), 0.0);
        assert_eq!(histogram_distance(&empty, &high).unwrap(), 2.0);

        assert!(histogram_distance(&Histogram::new(4), &Histogram::new(8)).is_err());
    }
}
