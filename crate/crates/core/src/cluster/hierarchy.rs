//! Recursive k-means partitioning into a cluster tree.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans, KMeansParams};
use super::label::{
    assign_sibling_labels, attribute_contributions, label_cluster, rank_contributions, rank_topics,
    valence, LabelScheme, SiblingCandidates, FALLBACK_LABEL,
};
use super::pca::pca_project;
use crate::featurize::FeatureMatrix;
use crate::seeding;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyParams {
    /// Fan-out at the root.
    pub k1: usize,
    /// Fan-out below the root.
    pub k2: usize,
    /// Maximum node depth; the root is depth 0.
    pub depth: usize,
    /// Nodes smaller than this are not split further. `None` means max(2·k2, 20).
    pub min_cluster_size: Option<usize>,
    pub kmeans: KMeansParams,
    pub seed: u64,
}

impl Default for HierarchyParams {
    fn default() -> Self {
        HierarchyParams {
            k1: 5,
            k2: 3,
            depth: 5,
            min_cluster_size: None,
            kmeans: KMeansParams::default(),
            seed: 0,
        }
    }
}

impl HierarchyParams {
    pub fn min_cluster_size(&self) -> usize {
        self.min_cluster_size.unwrap_or((2 * self.k2).max(20))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterNode {
    /// Child indices from the root; the root's path is empty.
    pub path: Vec<usize>,
    /// Review indices (corpus order, ascending).
    pub members: Vec<u32>,
    pub centroid: Vec<f64>,
    pub children: Vec<ClusterNode>,
    /// Position among siblings; the root sits at the origin.
    pub coord2d: [f64; 2],
    pub avg_sentiment: f64,
    pub label: String,
    pub size: usize,
}

impl ClusterNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.path.len()
    }

    /// Dot-separated path, `""` for the root.
    pub fn path_string(&self) -> String {
        format_path(&self.path)
    }

    fn visit<'a>(&'a self, out: &mut Vec<&'a ClusterNode>) {
        out.push(self);
        for c in &self.children {
            c.visit(out);
        }
    }

    fn visit_mut(&mut self, f: &mut impl FnMut(&mut ClusterNode)) {
        f(self);
        for c in &mut self.children {
            c.visit_mut(f);
        }
    }
}

pub fn format_path(path: &[usize]) -> String {
    path.iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(".")
}

/// Parses a dot path; `""` is the root.
pub fn parse_path(s: &str) -> Option<Vec<usize>> {
    let s = s.trim();
    if s.is_empty() {
        return Some(Vec::new());
    }
    s.split('.').map(|p| p.trim().parse().ok()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterTree {
    pub root: ClusterNode,
    pub params: HierarchyParams,
}

impl ClusterTree {
    pub fn node(&self, path: &[usize]) -> Option<&ClusterNode> {
        path.iter()
            .try_fold(&self.root, |node, &i| node.children.get(i))
    }

    /// Pre-order traversal.
    pub fn nodes(&self) -> Vec<&ClusterNode> {
        let mut out = Vec::new();
        self.root.visit(&mut out);
        out
    }

    pub fn max_depth(&self) -> usize {
        self.nodes().iter().map(|n| n.depth()).max().unwrap_or(0)
    }

    pub fn for_each_mut(&mut self, mut f: impl FnMut(&mut ClusterNode)) {
        self.root.visit_mut(&mut f);
    }

    /// Checks fan-out, depth and partition invariants. Returns a description
    /// of the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        for node in self.nodes() {
            if node.size != node.members.len() {
                return Err(format!("node {:?}: size != member count", node.path));
            }
            if node.depth() > self.params.depth {
                return Err(format!(
                    "node {:?}: deeper than {}",
                    node.path, self.params.depth
                ));
            }
            let limit = if node.path.is_empty() {
                self.params.k1
            } else {
                self.params.k2
            };
            if node.children.len() > limit {
                return Err(format!(
                    "node {:?}: {} children exceed {}",
                    node.path,
                    node.children.len(),
                    limit
                ));
            }
            if node.children.is_empty() {
                continue;
            }
            let mut union: Vec<u32> = node
                .children
                .iter()
                .flat_map(|c| c.members.iter().copied())
                .collect();
            union.sort_unstable();
            if union != node.members {
                return Err(format!(
                    "node {:?}: children do not partition members",
                    node.path
                ));
            }
            for (i, c) in node.children.iter().enumerate() {
                let mut expected = node.path.clone();
                expected.push(i);
                if c.path != expected {
                    return Err(format!("node {:?}: bad child path {:?}", node.path, c.path));
                }
            }
        }
        Ok(())
    }
}

/// Builds the cluster tree over `members` (review indices into `features`).
///
/// `sentiments` holds one score per corpus review. Labels are left empty;
/// see [`apply_labels`].
pub fn build_hierarchy(
    features: &FeatureMatrix,
    sentiments: &[f64],
    members: &[u32],
    params: &HierarchyParams,
) -> ClusterTree {
    let mut members = members.to_vec();
    members.sort_unstable();
    let root = build_node(features, sentiments, Vec::new(), members, params);
    ClusterTree {
        root,
        params: params.clone(),
    }
}

fn mean_of(features: &FeatureMatrix, members: &[u32]) -> Vec<f64> {
    let mut c = vec![0.0; features.dims];
    if members.is_empty() {
        return c;
    }
    for &m in members {
        for (s, x) in c.iter_mut().zip(features.row(m as usize)) {
            *s += x;
        }
    }
    c.iter_mut().for_each(|x| *x /= members.len() as f64);
    c
}

pub fn mean_sentiment(sentiments: &[f64], members: &[u32]) -> f64 {
    if members.is_empty() {
        return 0.0;
    }
    members.iter().map(|&m| sentiments[m as usize]).sum::<f64>() / members.len() as f64
}

fn build_node(
    features: &FeatureMatrix,
    sentiments: &[f64],
    path: Vec<usize>,
    members: Vec<u32>,
    params: &HierarchyParams,
) -> ClusterNode {
    let depth = path.len();
    let is_root = depth == 0;
    let k = if is_root { params.k1 } else { params.k2 }.min(members.len());
    let splittable = depth < params.depth
        && k >= 1
        && (is_root || (members.len() >= params.min_cluster_size() && k >= 2));

    let mut groups: Vec<Vec<u32>> = Vec::new();
    if splittable {
        let points: Vec<&[f64]> = members.iter().map(|&m| features.row(m as usize)).collect();
        let seed = seeding::path_seed(params.seed, &path);
        let result = kmeans(&points, k, seed, &params.kmeans).expect("k <= number of points");
        groups = vec![Vec::new(); k];
        for (&m, &a) in members.iter().zip(&result.assignments) {
            groups[a].push(m);
        }
        groups.retain(|g| !g.is_empty());
        // Largest first; equal sizes by their first member.
        groups.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        if !is_root && groups.len() < 2 {
            groups.clear();
        }
    }

    let children: Vec<ClusterNode> = groups
        .into_par_iter()
        .enumerate()
        .map(|(i, g)| {
            let mut child_path = path.clone();
            child_path.push(i);
            build_node(features, sentiments, child_path, g, params)
        })
        .collect();

    let mut node = ClusterNode {
        centroid: mean_of(features, &members),
        avg_sentiment: mean_sentiment(sentiments, &members),
        size: members.len(),
        path,
        members,
        children,
        coord2d: [0.0, 0.0],
        label: String::new(),
    };
    layout_children(&mut node);
    node
}

fn layout_children(node: &mut ClusterNode) {
    if node.children.is_empty() {
        return;
    }
    let centroids: Vec<Vec<f64>> = node.children.iter().map(|c| c.centroid.clone()).collect();
    let projection = pca_project(&centroids);
    for (c, xy) in node.children.iter_mut().zip(projection.coords) {
        c.coord2d = xy;
    }
}

/// Fills in every node's label.
///
/// The root is labeled on its own. Each sibling group is labeled jointly so
/// that two same-valence siblings do not share a label when a runner-up is
/// available.
pub fn apply_labels(tree: &mut ClusterTree, features: &FeatureMatrix, scheme: &LabelScheme) {
    let root_label = single_label(&tree.root, features, scheme);
    tree.root.label = root_label;
    label_children(&mut tree.root, features, scheme);
}

fn candidates(
    node: &ClusterNode,
    features: &FeatureMatrix,
    scheme: &LabelScheme,
) -> SiblingCandidates {
    let v = valence(node.avg_sentiment);
    let ranked = match scheme {
        LabelScheme::Attributes(_) => {
            let (sums, counts) = attribute_contributions(&node.members, features);
            rank_contributions(&sums, &counts, v)
        }
        LabelScheme::Topics(_) => rank_topics(&node.centroid),
    };
    SiblingCandidates { valence: v, ranked }
}

fn name_of(scheme: &LabelScheme, key: Option<usize>) -> String {
    let names = match scheme {
        LabelScheme::Attributes(n) | LabelScheme::Topics(n) => n,
    };
    key.and_then(|k| names.get(k))
        .cloned()
        .unwrap_or_else(|| FALLBACK_LABEL.to_string())
}

fn single_label(node: &ClusterNode, features: &FeatureMatrix, scheme: &LabelScheme) -> String {
    match scheme {
        LabelScheme::Attributes(names) => {
            let (sums, counts) = attribute_contributions(&node.members, features);
            label_cluster(&sums, &counts, node.avg_sentiment, names)
        }
        LabelScheme::Topics(_) => {
            name_of(scheme, rank_topics(&node.centroid).first().map(|&(t, _)| t))
        }
    }
}

fn label_children(node: &mut ClusterNode, features: &FeatureMatrix, scheme: &LabelScheme) {
    if node.children.is_empty() {
        return;
    }
    let cands: Vec<SiblingCandidates> = node
        .children
        .iter()
        .map(|c| candidates(c, features, scheme))
        .collect();
    let picks = assign_sibling_labels(&cands);
    for (child, pick) in node.children.iter_mut().zip(picks) {
        child.label = name_of(scheme, pick);
    }
    node.children
        .par_iter_mut()
        .for_each(|c| label_children(c, features, scheme));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurize::VectorMode;

    fn matrix(rows: &[Vec<f64>]) -> FeatureMatrix {
        let dims = rows[0].len();
        FeatureMatrix {
            mode: VectorMode::Extraction,
            dims,
            values: rows.iter().flatten().copied().collect(),
            present: vec![true; rows.len() * dims],
        }
    }

    #[test]
    fn paths_round_trip() {
        assert_eq!(parse_path(""), Some(vec![]));
        assert_eq!(parse_path("2.0.1"), Some(vec![2, 0, 1]));
        assert_eq!(parse_path("a"), None);
        assert_eq!(format_path(&[2, 0, 1]), "2.0.1");
    }

    #[test]
    fn small_corpus_does_not_recurse() {
        let rows = vec![vec![0.0], vec![1.0], vec![5.0], vec![6.0]];
        let f = matrix(&rows);
        let params = HierarchyParams {
            min_cluster_size: Some(20),
            ..HierarchyParams::default()
        };
        let tree = build_hierarchy(&f, &[0.0; 4], &[0, 1, 2, 3], &params);
        assert!(tree.root.children.len() <= 5);
        assert!(!tree.root.children.is_empty());
        assert!(tree.root.children.iter().all(ClusterNode::is_leaf));
        tree.check_invariants().unwrap();
    }

    #[test]
    fn identical_vectors() {
        let rows = vec![vec![0.3, 0.3]; 50];
        let f = matrix(&rows);
        let members: Vec<u32> = (0..50).collect();
        let tree = build_hierarchy(&f, &[0.1; 50], &members, &HierarchyParams::default());
        tree.check_invariants().unwrap();
        assert_eq!(tree.root.children.len(), 1);
        assert_eq!(tree.root.children[0].size, 50);
        assert!(tree.root.children[0].is_leaf());
    }

    #[test]
    fn node_lookup() {
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|i| vec![(i % 3) as f64 * 10.0 + (i as f64) * 0.01])
            .collect();
        let f = matrix(&rows);
        let members: Vec<u32> = (0..60).collect();
        let params = HierarchyParams {
            k1: 3,
            k2: 2,
            depth: 2,
            ..HierarchyParams::default()
        };
        let tree = build_hierarchy(&f, &vec![0.0; 60], &members, &params);
        tree.check_invariants().unwrap();
        assert_eq!(tree.root.children.len(), 3);
        assert!(tree.node(&[0]).is_some());
        assert!(tree.node(&[9, 9, 9]).is_none());
        assert!(tree.max_depth() <= 2);
    }
}
