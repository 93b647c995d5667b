use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use reviewlens_core::cluster::{nearest, ClusterNode};
use reviewlens_core::index::{self, entity_tree_key, Index, IndexError, TreeArtifact, ALL_TREE};
use reviewlens_core::pipeline::{label_scheme, TreeBuilder};
use reviewlens_core::querylang::{AttributeCatalog, Session};
use reviewlens_core::summarize::TextIndex;
use serde::Serialize;

use crate::error::ApiError;

pub const DEFAULT_SESSION_IDLE: Duration = Duration::from_secs(3600);

/// Immutable data loaded once at startup.
pub struct Snapshot {
    pub index: Index,
    pub text: TextIndex,
    pub catalog: AttributeCatalog,
    pub entities: Vec<EntityRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Coordinates {
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntityRecord {
    pub id: String,
    pub name: String,
    pub review_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<Coordinates>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub address: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image_url: Option<String>,
    /// Mean present score per attribute; attributes nobody mentions are omitted.
    pub mean_scores: IndexMap<String, f64>,
    /// Index of the top-level cluster nearest to the entity's mean feature
    /// vector. Entities sharing a group are shown next to each other.
    pub group: Option<usize>,
}

impl Snapshot {
    pub fn load(index_dir: &Path) -> Result<Self, IndexError> {
        let index = index::open_latest(index_dir)?;
        let a = &index.artifacts;
        let text = TextIndex::build(&a.corpus);
        let catalog = AttributeCatalog::new(&a.schema.attributes);
        let top: Vec<Vec<f64>> = a
            .trees
            .get(ALL_TREE)
            .map(|t| {
                t.tree
                    .root
                    .children
                    .iter()
                    .map(|c| c.centroid.clone())
                    .collect()
            })
            .unwrap_or_default();

        let dims = a.features.dims;
        let entities = a
            .corpus
            .entities()
            .iter()
            .map(|e| {
                let members = a.corpus.reviews_of(&e.id);
                let mut sums = vec![0.0; dims];
                let mut counts = vec![0usize; dims];
                let mut mean_vec = vec![0.0; dims];
                for &m in &members {
                    for d in 0..dims {
                        mean_vec[d] += a.features.row(m)[d];
                        if let Some(v) = a.features.get(m, d) {
                            sums[d] += v;
                            counts[d] += 1;
                        }
                    }
                }
                let mean_scores = a
                    .schema
                    .attributes
                    .iter()
                    .enumerate()
                    .filter(|&(d, _)| counts[d] > 0)
                    .map(|(d, name)| (name.clone(), sums[d] / counts[d] as f64))
                    .collect();
                let group = (!members.is_empty() && !top.is_empty()).then(|| {
                    mean_vec.iter_mut().for_each(|x| *x /= members.len() as f64);
                    nearest(&mean_vec, &top).0
                });
                EntityRecord {
                    id: e.id.clone(),
                    name: e.name.clone(),
                    review_count: e.review_count,
                    coordinates: e.coordinates().map(|(lat, lon)| Coordinates { lat, lon }),
                    address: e.address.clone(),
                    image_url: e.image_url.clone(),
                    mean_scores,
                    group,
                }
            })
            .collect();

        Ok(Snapshot {
            index,
            text,
            catalog,
            entities,
        })
    }

    pub fn version(&self) -> String {
        self.index.manifest.version_string()
    }

    /// The treemap and map need real entities.
    pub fn entities_enabled(&self) -> bool {
        self.index.artifacts.corpus.has_entity_info()
    }

    pub fn id_of(&self, review: usize) -> &str {
        &self.index.artifacts.corpus.review(review).id
    }
}

pub struct SessionEntry {
    pub session: Session,
    pub entity: String,
    pub path: String,
    last_used: Instant,
}

pub struct AppState {
    pub snapshot: Snapshot,
    /// Where exported schema files go.
    pub exports_dir: PathBuf,
    pub session_idle: Duration,
    sessions: Mutex<HashMap<String, Arc<Mutex<SessionEntry>>>>,
    /// Keyed like the index: `all` or `entity:<id>`.
    trees: Mutex<HashMap<String, Arc<TreeArtifact>>>,
}

impl AppState {
    pub fn new(mut snapshot: Snapshot, exports_dir: PathBuf) -> Self {
        // Trees move into the shared cache so handlers can hold them cheaply.
        let trees = std::mem::take(&mut snapshot.index.artifacts.trees)
            .into_iter()
            .map(|(k, t)| (k, Arc::new(t)))
            .collect();
        AppState {
            snapshot,
            exports_dir,
            session_idle: DEFAULT_SESSION_IDLE,
            sessions: Mutex::new(HashMap::new()),
            trees: Mutex::new(trees),
        }
    }

    /// Opens the latest version under `index_dir`; exports go to
    /// `<index_dir>/exports`.
    pub fn open(index_dir: &Path) -> Result<Self, IndexError> {
        let snapshot = Snapshot::load(index_dir)?;
        Ok(Self::new(snapshot, index_dir.join("exports")))
    }

    /// The tree for `entity` (`all` or an entity id). Trees not built during
    /// preprocessing are built on first use and cached.
    pub fn tree(&self, entity: &str) -> Result<Arc<TreeArtifact>, ApiError> {
        let key = if entity == ALL_TREE {
            ALL_TREE.to_string()
        } else {
            entity_tree_key(entity)
        };
        if let Some(t) = self.trees.lock().unwrap().get(&key) {
            return Ok(t.clone());
        }
        if entity == ALL_TREE {
            return Err(ApiError::internal("index has no tree over all reviews"));
        }
        let a = &self.snapshot.index.artifacts;
        if a.corpus.entity(entity).is_none_or(|e| e.review_count == 0) {
            return Err(ApiError::not_found(format!("unknown entity '{entity}'")));
        }
        let scheme = label_scheme(&a.schema, a.lda.as_ref());
        let builder = TreeBuilder {
            features: &a.features,
            sentiments: &a.sentiments,
            text: &self.snapshot.text,
            attributes: &a.schema.attributes,
            scheme: &scheme,
            params: a.config.hierarchy_params(),
            n_top: a.config.n_top,
            bins: a.config.bins,
        };
        let built = Arc::new(builder.build_entity(&a.corpus, entity, a.config.seed));
        // Deterministic, so a concurrent duplicate build yields the same tree.
        let mut cache = self.trees.lock().unwrap();
        Ok(cache.entry(key).or_insert(built).clone())
    }

    /// Members of the node at `path` in `entity`'s tree.
    pub fn scope(&self, entity: &str, path: &str) -> Result<Vec<usize>, ApiError> {
        let tree = self.tree(entity)?;
        let node = find(&tree, path)?;
        Ok(node.members.iter().map(|&m| m as usize).collect())
    }

    pub fn create_session(
        &self,
        entity: &str,
        path: &str,
    ) -> Result<(String, Arc<Mutex<SessionEntry>>), ApiError> {
        let initial = self.scope(entity, path)?;
        let id = uuid::Uuid::new_v4().to_string();
        let entry = Arc::new(Mutex::new(SessionEntry {
            session: Session::new(initial),
            entity: entity.to_string(),
            path: path.to_string(),
            last_used: Instant::now(),
        }));
        let mut sessions = self.sessions.lock().unwrap();
        self.expire(&mut sessions);
        sessions.insert(id.clone(), entry.clone());
        Ok((id, entry))
    }

    pub fn session(&self, id: &str) -> Result<Arc<Mutex<SessionEntry>>, ApiError> {
        let mut sessions = self.sessions.lock().unwrap();
        self.expire(&mut sessions);
        let entry = sessions
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown or expired session '{id}'")))?;
        entry.lock().unwrap().last_used = Instant::now();
        Ok(entry)
    }

    fn expire(&self, sessions: &mut HashMap<String, Arc<Mutex<SessionEntry>>>) {
        let idle = self.session_idle;
        sessions.retain(|_, s| s.try_lock().map_or(true, |s| s.last_used.elapsed() < idle));
    }
}

pub fn find<'a>(tree: &'a TreeArtifact, path: &str) -> Result<&'a ClusterNode, ApiError> {
    index::find_node(&tree.tree, path)
        .ok_or_else(|| ApiError::not_found(format!("unknown cluster path '{path}'")))
}
