//! Cluster labels: the attribute contributing most to a cluster's sentiment in
//! the direction of its valence, disambiguated among siblings.

use std::collections::HashSet;

use crate::featurize::FeatureMatrix;

/// Label used when no attribute is present in any member review.
pub const FALLBACK_LABEL: &str = "general";

/// What labels are drawn from.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelScheme {
    /// Extraction mode: schema attribute names, ranked by sentiment contribution.
    Attributes(Vec<String>),
    /// Topic mode: one representative term per topic, ranked by centroid weight.
    Topics(Vec<String>),
}

/// +1 for non-negative average sentiment, -1 otherwise.
pub fn valence(avg_sentiment: f64) -> i8 {
    if avg_sentiment < 0.0 {
        -1
    } else {
        1
    }
}

/// Per-attribute sum of present scores and number of members where present.
pub fn attribute_contributions(
    members: &[u32],
    features: &FeatureMatrix,
) -> (Vec<f64>, Vec<usize>) {
    let mut sums = vec![0.0; features.dims];
    let mut counts = vec![0; features.dims];
    for &m in members {
        let m = m as usize;
        for (a, (&v, &p)) in features
            .row(m)
            .iter()
            .zip(features.present_row(m))
            .enumerate()
        {
            if p {
                sums[a] += v;
                counts[a] += 1;
            }
        }
    }
    (sums, counts)
}

/// Candidate attributes ordered by `valence · contribution`, descending; exact
/// ties keep schema order. Attributes absent from every member are excluded.
pub fn rank_contributions(
    contributions: &[f64],
    present: &[usize],
    valence: i8,
) -> Vec<(usize, f64)> {
    let v = f64::from(valence);
    let mut ranked: Vec<(usize, f64)> = contributions
        .iter()
        .zip(present)
        .enumerate()
        .filter(|(_, (_, &n))| n > 0)
        .map(|(a, (&c, _))| (a, v * c))
        .collect();
    ranked.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    ranked
}

/// Ranked candidates for one cluster among its siblings.
#[derive(Debug, Clone, PartialEq)]
pub struct SiblingCandidates {
    pub valence: i8,
    pub ranked: Vec<(usize, f64)>,
}

/// Chooses one candidate per sibling.
///
/// Siblings are visited in descending order of their top score. A sibling
/// whose best candidate was already taken by a same-valence sibling moves
/// down its own ranking; if it runs out it keeps its best candidate. `None`
/// means the sibling had no candidates at all.
pub fn assign_sibling_labels(siblings: &[SiblingCandidates]) -> Vec<Option<usize>> {
    let mut order: Vec<usize> = (0..siblings.len())
        .filter(|&i| !siblings[i].ranked.is_empty())
        .collect();
    order.sort_by(|&a, &b| {
        siblings[b].ranked[0]
            .1
            .total_cmp(&siblings[a].ranked[0].1)
            .then(a.cmp(&b))
    });

    let mut claimed: HashSet<(i8, usize)> = HashSet::new();
    let mut out = vec![None; siblings.len()];
    for i in order {
        let s = &siblings[i];
        let pick = s
            .ranked
            .iter()
            .map(|&(a, _)| a)
            .find(|&a| !claimed.contains(&(s.valence, a)))
            .unwrap_or(s.ranked[0].0);
        claimed.insert((s.valence, pick));
        out[i] = Some(pick);
    }
    out
}

/// Label of a single cluster considered on its own.
pub fn label_cluster(
    contributions: &[f64],
    present: &[usize],
    avg_sentiment: f64,
    names: &[String],
) -> String {
    rank_contributions(contributions, present, valence(avg_sentiment))
        .first()
        .map_or_else(|| FALLBACK_LABEL.to_string(), |&(a, _)| names[a].clone())
}

/// Topic candidates: topics ordered by centroid weight, descending.
pub fn rank_topics(centroid: &[f64]) -> Vec<(usize, f64)> {
    let mut ranked: Vec<(usize, f64)> = centroid.iter().copied().enumerate().collect();
    ranked.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn argmax_in_valence_direction() {
        let n = names(&["location", "staff", "room"]);
        assert_eq!(
            label_cluster(&[8.2, 3.1, -2.0], &[10, 5, 3], 0.4, &n),
            "location"
        );
        assert_eq!(
            label_cluster(&[8.2, 3.1, -2.0], &[10, 5, 3], -0.1, &n),
            "room"
        );
        // zero sentiment counts as positive valence
        assert_eq!(
            label_cluster(&[1.0, 3.1, -2.0], &[1, 5, 3], 0.0, &n),
            "staff"
        );
    }

    #[test]
    fn fallback_when_nothing_present() {
        let n = names(&["a", "b"]);
        assert_eq!(label_cluster(&[0.0, 0.0], &[0, 0], 0.0, &n), FALLBACK_LABEL);
    }

    #[test]
    fn schema_order_breaks_ties() {
        let n = names(&["a", "b", "c"]);
        assert_eq!(label_cluster(&[1.0, 2.0, 2.0], &[1, 1, 1], 0.5, &n), "b");
    }

    #[test]
    fn same_valence_duplicates_are_split() {
        // attributes: 0 = hotel, 1 = location, 2 = staff
        let first = SiblingCandidates {
            valence: 1,
            ranked: rank_contributions(&[7.5, 4.0, 1.0], &[9, 9, 9], 1),
        };
        let second = SiblingCandidates {
            valence: 1,
            ranked: rank_contributions(&[9.0, 1.0, 2.0], &[9, 9, 9], 1),
        };
        let picks = assign_sibling_labels(&[first, second]);
        // The larger hotel contribution keeps "hotel"; the other takes its runner-up.
        assert_eq!(picks, vec![Some(1), Some(0)]);
    }

    #[test]
    fn different_valence_keeps_duplicates() {
        let pos = SiblingCandidates {
            valence: 1,
            ranked: vec![(0, 9.0), (1, 1.0)],
        };
        let neg = SiblingCandidates {
            valence: -1,
            ranked: vec![(0, 5.0), (1, 2.0)],
        };
        assert_eq!(assign_sibling_labels(&[pos, neg]), vec![Some(0), Some(0)]);
    }

    #[test]
    fn cascade_and_exhaustion() {
        let a = SiblingCandidates {
            valence: 1,
            ranked: vec![(0, 9.0), (1, 5.0)],
        };
        let b = SiblingCandidates {
            valence: 1,
            ranked: vec![(0, 8.0), (1, 4.0)],
        };
        let c = SiblingCandidates {
            valence: 1,
            ranked: vec![(0, 7.0), (1, 3.0)],
        };
        let empty = SiblingCandidates {
            valence: 1,
            ranked: vec![],
        };
        assert_eq!(
            assign_sibling_labels(&[c, a, b, empty]),
            vec![Some(0), Some(0), Some(1), None]
        );
    }
}
