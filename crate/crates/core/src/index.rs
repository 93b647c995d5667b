//! On-disk index: a versioned directory of preprocessed artifacts.
//!
//! Layout of one version directory:
//!
//! ```text
//! manifest.json          format and index version, file checksums
//! config.json            the pipeline configuration that produced it
//! reviews.jsonl          corpus copy (ingestion order)
//! entities.jsonl         only when the corpus had entity information
//! schema.txt  lexicon.tsv
//! vectors.bin  present.bin  sentiment.bin
//! lda/                   topic model (topic featurizer only)
//! trees/<dir>/           tree.json, members.bin, centroids.bin, summaries.json
//! ```
//!
//! Numeric arrays use a small little-endian container: the magic `RLNA`, a
//! dtype byte, a rank byte, two reserved bytes, `rank` u64 dimensions, then
//! the row-major payload.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cluster::{format_path, parse_path, ClusterNode, ClusterTree, HierarchyParams};
use crate::config::{Featurizer, PipelineConfig};
use crate::corpus::{self, Corpus, CorpusError, ReviewFormat, Schema};
use crate::featurize::{FeatureMatrix, FeaturizeError, LdaModel, SentimentLexicon, VectorMode};
use crate::querylang::{AttrKey, ReviewStore};
use crate::summarize::ClusterSummary;

/// Layout version written by this build and the only one it reads.
pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
/// Key of the tree over the whole corpus.
pub const ALL_TREE: &str = "all";

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no manifest in {0}; run preprocess first")]
    NoManifest(PathBuf),
    #[error(
        "index format version {found} does not match reader version {expected}; re-run preprocess"
    )]
    VersionMismatch { found: u32, expected: u32 },
    #[error("{path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Featurize(#[from] FeaturizeError),
}

type Result<T> = std::result::Result<T, IndexError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IndexError + '_ {
    move |source| IndexError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn corrupt(path: &Path, message: impl Into<String>) -> IndexError {
    IndexError::Corrupt {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEntry {
    pub key: String,
    pub dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub index_version: u32,
    pub featurizer: Featurizer,
    pub n_reviews: usize,
    pub dims: usize,
    pub schema_version: String,
    pub has_entity_info: bool,
    pub trees: Vec<TreeEntry>,
    /// Relative path → sha256 of every other file in the directory.
    pub files: BTreeMap<String, String>,
}

impl Manifest {
    /// Version string served to clients, e.g. `v3-1a2b3c4d5e6f`.
    pub fn version_string(&self) -> String {
        format!("v{}-{}", self.index_version, self.schema_version)
    }
}

/// A cluster tree with its per-node summaries keyed by dot path.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeArtifact {
    pub tree: ClusterTree,
    pub summaries: IndexMap<String, ClusterSummary>,
}

/// Everything the pipeline produces and the server reads.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexArtifacts {
    pub config: PipelineConfig,
    pub corpus: Corpus,
    /// Attribute names of the feature dimensions (`topic-k` for topic vectors).
    pub schema: Schema,
    pub lexicon: SentimentLexicon,
    pub features: FeatureMatrix,
    /// Per-review sentiment, corpus order.
    pub sentiments: Vec<f64>,
    pub lda: Option<LdaModel>,
    /// Keyed by [`ALL_TREE`] or [`entity_tree_key`].
    pub trees: BTreeMap<String, TreeArtifact>,
}

pub fn entity_tree_key(entity_id: &str) -> String {
    format!("entity:{entity_id}")
}

impl IndexArtifacts {
    pub fn tree(&self, key: &str) -> Option<&TreeArtifact> {
        self.trees.get(key)
    }
}

impl ReviewStore for IndexArtifacts {
    fn text(&self, review: usize) -> &str {
        &self.corpus.review(review).text
    }

    fn value(&self, review: usize, key: AttrKey) -> Option<f64> {
        match key {
            AttrKey::Schema(a) => self.features.get(review, a),
            AttrKey::Sentiment => Some(self.sentiments[review]),
            AttrKey::Length => Some(self.corpus.review(review).text.chars().count() as f64),
        }
    }
}

/// An opened index version.
#[derive(Debug, Clone)]
pub struct Index {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub artifacts: IndexArtifacts,
}

// ---------------------------------------------------------------------------
// Binary arrays

const MAGIC: &[u8; 4] = b"RLNA";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
enum DType {
    F64 = 1,
    U32 = 2,
    U8 = 3,
}

fn encode_header(dtype: DType, shape: &[usize], out: &mut Vec<u8>) {
    out.extend_from_slice(MAGIC);
    out.push(dtype as u8);
    out.push(shape.len() as u8);
    out.extend_from_slice(&[0, 0]);
    for &d in shape {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
}

fn encode_f64(shape: &[usize], data: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 8 * shape.len() + 8 * data.len());
    encode_header(DType::F64, shape, &mut out);
    data.iter()
        .for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
    out
}

fn encode_u32(shape: &[usize], data: &[u32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 8 * shape.len() + 4 * data.len());
    encode_header(DType::U32, shape, &mut out);
    data.iter()
        .for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
    out
}

fn encode_u8(shape: &[usize], data: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 8 * shape.len() + data.len());
    encode_header(DType::U8, shape, &mut out);
    out.extend_from_slice(data);
    out
}

/// Splits a file into (shape, payload) after checking magic and dtype.
fn decode_header<'a>(path: &Path, bytes: &'a [u8], dtype: DType) -> Result<(Vec<usize>, &'a [u8])> {
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(corrupt(path, "not an array file"));
    }
    if bytes[4] != dtype as u8 {
        return Err(corrupt(
            path,
            format!("dtype {} where {} was expected", bytes[4], dtype as u8),
        ));
    }
    let ndim = bytes[5] as usize;
    let body = 8 + 8 * ndim;
    if bytes.len() < body {
        return Err(corrupt(path, "truncated header"));
    }
    let shape: Vec<usize> = bytes[8..body]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()) as usize)
        .collect();
    let width = match dtype {
        DType::F64 => 8,
        DType::U32 => 4,
        DType::U8 => 1,
    };
    let n: usize = shape.iter().product();
    let payload = &bytes[body..];
    if payload.len() != n * width {
        return Err(corrupt(
            path,
            format!("payload of {} bytes for shape {shape:?}", payload.len()),
        ));
    }
    Ok((shape, payload))
}

fn decode_f64(path: &Path, bytes: &[u8]) -> Result<(Vec<usize>, Vec<f64>)> {
    let (shape, p) = decode_header(path, bytes, DType::F64)?;
    let data = p
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((shape, data))
}

fn decode_u32(path: &Path, bytes: &[u8]) -> Result<(Vec<usize>, Vec<u32>)> {
    let (shape, p) = decode_header(path, bytes, DType::U32)?;
    let data = p
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((shape, data))
}

fn decode_u8(path: &Path, bytes: &[u8]) -> Result<(Vec<usize>, Vec<u8>)> {
    let (shape, p) = decode_header(path, bytes, DType::U8)?;
    Ok((shape, p.to_vec()))
}

fn expect_shape(path: &Path, shape: &[usize], expected: &[usize]) -> Result<()> {
    if shape != expected {
        return Err(corrupt(
            path,
            format!("shape {shape:?}, expected {expected:?}"),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Trees

#[derive(Serialize, Deserialize)]
struct TreeFile {
    key: String,
    params: HierarchyParams,
    dims: usize,
    /// Pre-order.
    nodes: Vec<NodeRecord>,
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    path: String,
    size: usize,
    n_children: usize,
    label: String,
    coord: [f64; 2],
    avg_sentiment: f64,
}

struct TreeFiles {
    tree_json: Vec<u8>,
    members: Vec<u8>,
    centroids: Vec<u8>,
    summaries: Vec<u8>,
}

fn encode_tree(key: &str, t: &TreeArtifact, dims: usize) -> TreeFiles {
    let nodes = t.tree.nodes();
    let records = nodes
        .iter()
        .map(|n| NodeRecord {
            path: n.path_string(),
            size: n.size,
            n_children: n.children.len(),
            label: n.label.clone(),
            coord: n.coord2d,
            avg_sentiment: n.avg_sentiment,
        })
        .collect();
    let file = TreeFile {
        key: key.to_string(),
        params: t.tree.params.clone(),
        dims,
        nodes: records,
    };
    let members: Vec<u32> = nodes
        .iter()
        .flat_map(|n| n.members.iter().copied())
        .collect();
    let centroids: Vec<f64> = nodes
        .iter()
        .flat_map(|n| n.centroid.iter().copied())
        .collect();
    TreeFiles {
        tree_json: to_json(&file),
        members: encode_u32(&[members.len()], &members),
        centroids: encode_f64(&[nodes.len(), dims], &centroids),
        summaries: to_json(&t.summaries),
    }
}

fn decode_tree(dir: &Path) -> Result<(String, TreeArtifact)> {
    let tree_path = dir.join("tree.json");
    let file: TreeFile = read_json(&tree_path)?;
    let members_path = dir.join("members.bin");
    let (mshape, members) = decode_u32(&members_path, &read_bytes(&members_path)?)?;
    let total: usize = file.nodes.iter().map(|n| n.size).sum();
    expect_shape(&members_path, &mshape, &[total])?;
    let centroids_path = dir.join("centroids.bin");
    let (cshape, centroids) = decode_f64(&centroids_path, &read_bytes(&centroids_path)?)?;
    expect_shape(&centroids_path, &cshape, &[file.nodes.len(), file.dims])?;

    let mut cursor = TreeCursor {
        records: &file.nodes,
        members: &members,
        centroids: &centroids,
        dims: file.dims,
        node: 0,
        offset: 0,
    };
    let root = cursor
        .next_node(&tree_path)?
        .ok_or_else(|| corrupt(&tree_path, "tree has no nodes"))?;
    if cursor.node != file.nodes.len() {
        return Err(corrupt(&tree_path, "trailing nodes after the root subtree"));
    }
    let summaries = read_json(&dir.join("summaries.json"))?;
    Ok((
        file.key,
        TreeArtifact {
            tree: ClusterTree {
                root,
                params: file.params,
            },
            summaries,
        },
    ))
}

struct TreeCursor<'a> {
    records: &'a [NodeRecord],
    members: &'a [u32],
    centroids: &'a [f64],
    dims: usize,
    node: usize,
    offset: usize,
}

impl TreeCursor<'_> {
    fn next_node(&mut self, path: &Path) -> Result<Option<ClusterNode>> {
        let Some(r) = self.records.get(self.node) else {
            return Ok(None);
        };
        let i = self.node;
        self.node += 1;
        let node_path =
            parse_path(&r.path).ok_or_else(|| corrupt(path, format!("bad path '{}'", r.path)))?;
        let members = self.members[self.offset..self.offset + r.size].to_vec();
        self.offset += r.size;
        let centroid = self.centroids[i * self.dims..(i + 1) * self.dims].to_vec();
        let mut children = Vec::with_capacity(r.n_children);
        for _ in 0..r.n_children {
            let c = self
                .next_node(path)?
                .ok_or_else(|| corrupt(path, "missing child node"))?;
            children.push(c);
        }
        Ok(Some(ClusterNode {
            path: node_path,
            members,
            centroid,
            children,
            coord2d: r.coord,
            avg_sentiment: r.avg_sentiment,
            label: r.label.clone(),
            size: r.size,
        }))
    }
}

/// Directory name for a tree key: `all`, or `e-` plus a hash of the entity
/// id so arbitrary ids map to safe names.
fn tree_dir_name(key: &str) -> String {
    if key == ALL_TREE {
        return ALL_TREE.to_string();
    }
    let digest = Sha256::digest(key.as_bytes());
    let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    format!("e-{hex}")
}

// ---------------------------------------------------------------------------
// Save / open

fn to_json<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("artifacts serialize");
    v.push(b'\n');
    v
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(io_err(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| corrupt(path, e.to_string()))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

struct Writer {
    dir: PathBuf,
    files: BTreeMap<String, String>,
}

impl Writer {
    fn put(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        let mut f = fs::File::create(&path).map_err(io_err(&path))?;
        f.write_all(bytes).map_err(io_err(&path))?;
        self.files.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }
}

fn jsonl<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).expect("records serialize");
        out.push(b'\n');
    }
    out
}

/// Writes `artifacts` into `dir` (created if needed) as index version
/// `index_version`. Output bytes depend only on the artifacts.
pub fn save_index(dir: &Path, artifacts: &IndexArtifacts, index_version: u32) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut w = Writer {
        dir: dir.to_path_buf(),
        files: BTreeMap::new(),
    };
    let a = artifacts;
    let n = a.corpus.len();
    let dims = a.features.dims;

    w.put("config.json", &to_json(&a.config))?;
    w.put("reviews.jsonl", &jsonl(a.corpus.reviews()))?;
    if a.corpus.has_entity_info() {
        w.put("entities.jsonl", &jsonl(a.corpus.entities()))?;
    }
    w.put("schema.txt", a.schema.to_file_contents().as_bytes())?;
    w.put("lexicon.tsv", a.lexicon.to_tsv().as_bytes())?;
    w.put("vectors.bin", &encode_f64(&[n, dims], &a.features.values))?;
    let present: Vec<u8> = a.features.present.iter().map(|&p| u8::from(p)).collect();
    w.put("present.bin", &encode_u8(&[n, dims], &present))?;
    w.put("sentiment.bin", &encode_f64(&[n], &a.sentiments))?;

    if let Some(m) = &a.lda {
        let k = m.n_topics;
        let v = m.vocab_size();
        w.put(
            "lda/model.json",
            &to_json(&LdaHeader {
                n_topics: k,
                alpha: m.alpha,
                beta: m.beta,
                seed: m.seed,
            }),
        )?;
        let phi: Vec<f64> = m.topic_word.iter().flatten().copied().collect();
        w.put("lda/topic_word.bin", &encode_f64(&[k, v], &phi))?;
        let counts: Vec<u32> = m.topic_word_counts.iter().flatten().copied().collect();
        w.put("lda/topic_counts.bin", &encode_u32(&[k, v], &counts))?;
        let mut vocab = m.vocabulary.join("\n");
        vocab.push('\n');
        w.put("lda/vocabulary.txt", vocab.as_bytes())?;
    }

    let mut trees = Vec::new();
    for (key, t) in &a.trees {
        let dir_name = tree_dir_name(key);
        let files = encode_tree(key, t, dims);
        let base = format!("trees/{dir_name}");
        w.put(&format!("{base}/tree.json"), &files.tree_json)?;
        w.put(&format!("{base}/members.bin"), &files.members)?;
        w.put(&format!("{base}/centroids.bin"), &files.centroids)?;
        w.put(&format!("{base}/summaries.json"), &files.summaries)?;
        trees.push(TreeEntry {
            key: key.clone(),
            dir: dir_name,
        });
    }

    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        index_version,
        featurizer: a.config.featurizer,
        n_reviews: n,
        dims,
        schema_version: a.schema.version.clone(),
        has_entity_info: a.corpus.has_entity_info(),
        trees,
        files: w.files.clone(),
    };
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, to_json(&manifest)).map_err(io_err(&path))?;
    Ok(manifest)
}

#[derive(Serialize, Deserialize)]
struct LdaHeader {
    n_topics: usize,
    alpha: f64,
    beta: f64,
    seed: u64,
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    if !path.is_file() {
        return Err(IndexError::NoManifest(dir.to_path_buf()));
    }
    // Check the format version before the full structure so older layouts
    // get a version message rather than a parse error.
    let raw: serde_json::Value = read_json(&path)?;
    let found = raw
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| corrupt(&path, "format_version missing"))? as u32;
    if found != FORMAT_VERSION {
        return Err(IndexError::VersionMismatch {
            found,
            expected: FORMAT_VERSION,
        });
    }
    serde_json::from_value(raw).map_err(|e| corrupt(&path, e.to_string()))
}

/// Opens one index version directory.
pub fn open_index(dir: &Path) -> Result<Index> {
    let manifest = read_manifest(dir)?;
    let config: PipelineConfig = read_json(&dir.join("config.json"))?;
    let entities = manifest.has_entity_info.then(|| dir.join("entities.jsonl"));
    let corpus = corpus::load_corpus(
        &dir.join("reviews.jsonl"),
        ReviewFormat::Jsonl,
        entities.as_deref(),
    )?;
    let schema = corpus::load_schema(&dir.join("schema.txt"))?;
    let lexicon = SentimentLexicon::load(&dir.join("lexicon.tsv"))?;

    let n = manifest.n_reviews;
    let dims = manifest.dims;
    if corpus.len() != n || schema.len() != dims {
        return Err(corrupt(dir, "corpus or schema does not match the manifest"));
    }
    let vp = dir.join("vectors.bin");
    let (shape, values) = decode_f64(&vp, &read_bytes(&vp)?)?;
    expect_shape(&vp, &shape, &[n, dims])?;
    let pp = dir.join("present.bin");
    let (shape, present) = decode_u8(&pp, &read_bytes(&pp)?)?;
    expect_shape(&pp, &shape, &[n, dims])?;
    let sp = dir.join("sentiment.bin");
    let (shape, sentiments) = decode_f64(&sp, &read_bytes(&sp)?)?;
    expect_shape(&sp, &shape, &[n])?;
    let mode = match manifest.featurizer {
        Featurizer::Lda => VectorMode::Topic,
        Featurizer::Extractions => VectorMode::Extraction,
    };
    let features = FeatureMatrix {
        mode,
        dims,
        values,
        present: present.into_iter().map(|b| b != 0).collect(),
    };

    let lda = if dir.join("lda/model.json").is_file() {
        Some(read_lda(&dir.join("lda"))?)
    } else {
        None
    };

    let mut trees = BTreeMap::new();
    for entry in &manifest.trees {
        let (key, t) = decode_tree(&dir.join("trees").join(&entry.dir))?;
        if key != entry.key {
            return Err(corrupt(
                dir,
                format!("tree directory {} holds key {key}", entry.dir),
            ));
        }
        trees.insert(key, t);
    }

    Ok(Index {
        dir: dir.to_path_buf(),
        manifest,
        artifacts: IndexArtifacts {
            config,
            corpus,
            schema,
            lexicon,
            features,
            sentiments,
            lda,
            trees,
        },
    })
}

fn read_lda(dir: &Path) -> Result<LdaModel> {
    let header: LdaHeader = read_json(&dir.join("model.json"))?;
    let vocab_path = dir.join("vocabulary.txt");
    let vocabulary: Vec<String> = fs::read_to_string(&vocab_path)
        .map_err(io_err(&vocab_path))?
        .lines()
        .map(str::to_string)
        .collect();
    let (k, v) = (header.n_topics, vocabulary.len());
    let tp = dir.join("topic_word.bin");
    let (shape, phi) = decode_f64(&tp, &read_bytes(&tp)?)?;
    expect_shape(&tp, &shape, &[k, v])?;
    let cp = dir.join("topic_counts.bin");
    let (shape, counts) = decode_u32(&cp, &read_bytes(&cp)?)?;
    expect_shape(&cp, &shape, &[k, v])?;
    let rows = |i: usize| i * v..(i + 1) * v;
    Ok(LdaModel {
        n_topics: k,
        alpha: header.alpha,
        beta: header.beta,
        topic_word: (0..k).map(|i| phi[rows(i)].to_vec()).collect(),
        topic_word_counts: (0..k).map(|i| counts[rows(i)].to_vec()).collect(),
        vocabulary,
        seed: header.seed,
    })
}

// ---------------------------------------------------------------------------
// Versioned roots

/// `(n, path)` for every `v<n>` directory under `root`, ascending.
pub fn version_dirs(root: &Path) -> Vec<(u32, PathBuf)> {
    let Ok(entries) = fs::read_dir(root) else {
        return Vec::new();
    };
    let mut out: Vec<(u32, PathBuf)> = entries
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            let n: u32 = name.strip_prefix('v')?.parse().ok()?;
            Some((n, e.path()))
        })
        .collect();
    out.sort();
    out
}

/// The directory to open for `root`: `root` itself when it holds a
/// manifest, otherwise its highest `v<n>` subdirectory.
pub fn resolve_index_dir(root: &Path) -> Result<PathBuf> {
    if root.join(MANIFEST_FILE).is_file() {
        return Ok(root.to_path_buf());
    }
    version_dirs(root)
        .pop()
        .map(|(_, p)| p)
        .ok_or_else(|| IndexError::NoManifest(root.to_path_buf()))
}

pub fn open_latest(root: &Path) -> Result<Index> {
    open_index(&resolve_index_dir(root)?)
}

/// Saves `artifacts` as the next version under `root`. Earlier versions are
/// left untouched; the new one appears under its final name only when
/// complete.
pub fn save_new_version(root: &Path, artifacts: &IndexArtifacts) -> Result<(PathBuf, Manifest)> {
    fs::create_dir_all(root).map_err(io_err(root))?;
    let next = version_dirs(root).last().map_or(1, |(n, _)| n + 1);
    let staging = root.join(format!(".v{next}.partial"));
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(io_err(&staging))?;
    }
    let manifest = save_index(&staging, artifacts, next)?;
    let dest = root.join(format!("v{next}"));
    fs::rename(&staging, &dest).map_err(io_err(&dest))?;
    Ok((dest, manifest))
}

/// Finds a tree node by dot path.
pub fn find_node<'a>(tree: &'a ClusterTree, path: &str) -> Option<&'a ClusterNode> {
    tree.node(&parse_path(path)?)
}

/// Dot path of a node, `""` for the root (re-exported for API layers).
pub fn node_key(node: &ClusterNode) -> String {
    format_path(&node.path)
}
