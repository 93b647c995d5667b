use std::fs;
use std::sync::Arc;

use axum::extract::{Query, State};
use axum::routing::{get, post};
use axum::{Json, Router};
use reviewlens_core::corpus::Schema;
use reviewlens_core::querylang::{evaluate_remote, parse, AttrRef};
use reviewlens_core::summarize::{
    frequent_terms, top_divergent_attributes, AttributeDistance, ClusterSummary, Gram,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::ApiError;
use crate::state::{find, AppState, SessionEntry};

pub const API_VERSION: u32 = 1;
pub const DEFAULT_PAGE: usize = 10;
const SUGGESTIONS: usize = 20;

type Shared = State<Arc<AppState>>;
type ApiResult = Result<Json<Value>, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/entities", get(entities))
        .route("/api/clusters", get(clusters))
        .route("/api/summary", get(summary))
        .route("/api/reviews", get(reviews))
        .route("/api/commands", post(command))
        .route("/api/commands/remote", post(remote))
        .route("/api/schema", get(schema).post(save_schema))
        .route("/api/schema/suggest", get(suggest))
        .with_state(state)
}

fn all() -> String {
    "all".to_string()
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("response serializes")
}

async fn entities(State(s): Shared) -> ApiResult {
    let snap = &s.snapshot;
    Ok(Json(json!({
        "api_version": API_VERSION,
        "version": snap.version(),
        "entities_enabled": snap.entities_enabled(),
        "attributes": snap.index.artifacts.schema.attributes,
        "entities": to_value(&snap.entities),
    })))
}

#[derive(Deserialize)]
struct ClusterQuery {
    #[serde(default = "all")]
    entity: String,
    #[serde(default)]
    path: String,
}

#[derive(Serialize)]
struct NodeView<'a> {
    path: String,
    size: usize,
    label: &'a str,
    avg_sentiment: f64,
    coord: [f64; 2],
    is_leaf: bool,
}

async fn clusters(State(s): Shared, Query(q): Query<ClusterQuery>) -> ApiResult {
    let tree = s.tree(&q.entity)?;
    let node = find(&tree, &q.path)?;
    let view = |n: &reviewlens_core::cluster::ClusterNode| {
        to_value(&NodeView {
            path: n.path_string(),
            size: n.size,
            label: &n.label,
            avg_sentiment: n.avg_sentiment,
            coord: n.coord2d,
            is_leaf: n.is_leaf(),
        })
    };
    let children: Vec<Value> = node.children.iter().map(view).collect();
    Ok(Json(json!({
        "api_version": API_VERSION,
        "version": s.snapshot.version(),
        "entity": q.entity,
        "path": node.path_string(),
        "node": view(node),
        "children": children,
    })))
}

#[derive(Deserialize)]
struct SummaryQuery {
    #[serde(default = "all")]
    entity: String,
    #[serde(default)]
    path: String,
    compare: Option<String>,
}

async fn summary(State(s): Shared, Query(q): Query<SummaryQuery>) -> ApiResult {
    let all_tree = s.tree("all")?;
    let dataset = all_tree
        .summaries
        .get("")
        .ok_or_else(|| ApiError::internal("index has no dataset summary"))?;
    let tree = s.tree(&q.entity)?;
    let lookup = |path: &str| -> Result<(String, &ClusterSummary), ApiError> {
        let node = find(&tree, path)?;
        let key = node.path_string();
        let summary = tree
            .summaries
            .get(&key)
            .ok_or_else(|| ApiError::internal(format!("no summary for path '{key}'")))?;
        Ok((key, summary))
    };
    let (p1, s1) = lookup(&q.path)?;
    let mut body = json!({
        "api_version": API_VERSION,
        "version": s.snapshot.version(),
        "entity": q.entity,
        "dataset": to_value(dataset),
        "primary": { "path": p1, "summary": to_value(s1) },
    });
    if let Some(c) = &q.compare {
        let (p2, s2) = lookup(c)?;
        let m = s1.attr_histograms.len();
        let divergent: Vec<AttributeDistance> =
            top_divergent_attributes(s1, s2, m).map_err(|e| ApiError::internal(e.to_string()))?;
        body["secondary"] = json!({ "path": p2, "summary": to_value(s2) });
        body["divergent"] = to_value(&divergent);
    }
    Ok(Json(body))
}

#[derive(Deserialize)]
struct ReviewsQuery {
    #[serde(default = "all")]
    entity: String,
    #[serde(default)]
    path: String,
    session: Option<String>,
    #[serde(default)]
    offset: usize,
    limit: Option<usize>,
}

#[derive(Serialize)]
struct Chip<'a> {
    attribute: &'a str,
    score: f64,
}

fn review_json(s: &AppState, r: usize) -> Value {
    let a = &s.snapshot.index.artifacts;
    let review = a.corpus.review(r);
    let chips: Vec<Chip> = a
        .schema
        .attributes
        .iter()
        .enumerate()
        .filter_map(|(d, name)| {
            a.features.get(r, d).map(|score| Chip {
                attribute: name,
                score,
            })
        })
        .collect();
    let mut v = to_value(review);
    v["sentiment"] = json!(a.sentiments[r]);
    v["attributes"] = to_value(&chips);
    v
}

async fn reviews(State(s): Shared, Query(q): Query<ReviewsQuery>) -> ApiResult {
    let set = match &q.session {
        Some(id) => s.session(id)?.lock().unwrap().session.working_set.clone(),
        None => s.scope(&q.entity, &q.path)?,
    };
    let limit = q.limit.unwrap_or(DEFAULT_PAGE);
    let page: Vec<Value> = set
        .iter()
        .skip(q.offset)
        .take(limit)
        .map(|&r| review_json(&s, r))
        .collect();
    Ok(Json(json!({
        "api_version": API_VERSION,
        "total": set.len(),
        "offset": q.offset,
        "limit": limit,
        "reviews": page,
    })))
}

#[derive(Deserialize)]
struct CommandRequest {
    session: Option<String>,
    /// Scope of a new session; ignored for an existing one.
    #[serde(default)]
    scope: Scope,
    command: String,
}

#[derive(Deserialize)]
struct Scope {
    #[serde(default = "all")]
    entity: String,
    #[serde(default)]
    path: String,
}

impl Default for Scope {
    fn default() -> Self {
        Scope {
            entity: all(),
            path: String::new(),
        }
    }
}

fn session_json(s: &AppState, id: &str, e: &SessionEntry) -> Value {
    let history: Vec<String> = e.session.history.iter().map(ToString::to_string).collect();
    let color: Option<&AttrRef> = e.session.color_attribute.as_ref();
    json!({
        "api_version": API_VERSION,
        "session": id,
        "scope": { "entity": e.entity, "path": e.path },
        "size": e.session.working_set.len(),
        "history": history,
        "color_attribute": color.map(|a| a.name.clone()),
        "version": s.snapshot.version(),
    })
}

async fn command(State(s): Shared, Json(req): Json<CommandRequest>) -> ApiResult {
    let cmd = parse(&req.command, &s.snapshot.catalog)?;
    let (id, entry) = match &req.session {
        Some(id) => (id.clone(), s.session(id)?),
        None => s.create_session(&req.scope.entity, &req.scope.path)?,
    };
    let mut e = entry.lock().unwrap();
    e.session.apply(cmd, &s.snapshot.index.artifacts);
    Ok(Json(session_json(&s, &id, &e)))
}

#[derive(Deserialize)]
struct RemoteRequest {
    session: String,
    /// Page size of ids returned with the result; all ids when absent.
    limit: Option<usize>,
}

async fn remote(State(s): Shared, Json(req): Json<RemoteRequest>) -> ApiResult {
    let entry = s.session(&req.session)?;
    let mut e = entry.lock().unwrap();
    let scope = e.session.initial().to_vec();
    let result = evaluate_remote(&e.session.history, &scope, &s.snapshot.index.artifacts);
    e.session.working_set = result;
    let ids: Vec<&str> = e
        .session
        .working_set
        .iter()
        .take(req.limit.unwrap_or(usize::MAX))
        .map(|&r| s.snapshot.id_of(r))
        .collect();
    let mut body = session_json(&s, &req.session, &e);
    body["ids"] = json!(ids);
    Ok(Json(body))
}

async fn schema(State(s): Shared) -> ApiResult {
    let a = &s.snapshot.index.artifacts;
    Ok(Json(json!({
        "api_version": API_VERSION,
        "version": s.snapshot.version(),
        "featurizer": a.config.featurizer,
        "attributes": a.schema.attributes,
        "schema_version": a.schema.version,
    })))
}

#[derive(Deserialize)]
struct SchemaRequest {
    attributes: Vec<String>,
}

async fn save_schema(State(s): Shared, Json(req): Json<SchemaRequest>) -> ApiResult {
    let schema = Schema::new(&req.attributes)
        .map_err(|e| ApiError::bad_request("invalid_schema", e.to_string()))?;
    fs::create_dir_all(&s.exports_dir).map_err(|e| ApiError::internal(e.to_string()))?;
    let path = next_export_path(&s.exports_dir).map_err(|e| ApiError::internal(e.to_string()))?;
    fs::write(&path, schema.to_file_contents()).map_err(|e| ApiError::internal(e.to_string()))?;
    tracing::info!(path = %path.display(), "exported schema");
    Ok(Json(json!({
        "api_version": API_VERSION,
        "path": path.display().to_string(),
        "attributes": schema.attributes,
        "schema_version": schema.version,
    })))
}

fn next_export_path(dir: &std::path::Path) -> std::io::Result<std::path::PathBuf> {
    let mut max = 0u32;
    for entry in fs::read_dir(dir)? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if let Some(n) = name
            .strip_prefix("schema-")
            .and_then(|r| r.strip_suffix(".txt"))
            .and_then(|n| n.parse::<u32>().ok())
        {
            max = max.max(n);
        }
    }
    Ok(dir.join(format!("schema-{:03}.txt", max + 1)))
}

#[derive(Deserialize)]
struct SuggestQuery {
    #[serde(default = "all")]
    entity: String,
    /// Comma-separated cluster paths.
    #[serde(default)]
    paths: String,
}

async fn suggest(State(s): Shared, Query(q): Query<SuggestQuery>) -> ApiResult {
    let tree = s.tree(&q.entity)?;
    let mut members: Vec<u32> = Vec::new();
    let paths: Vec<&str> = if q.paths.trim().is_empty() {
        vec![""]
    } else {
        q.paths.split(',').map(str::trim).collect()
    };
    for p in &paths {
        members.extend_from_slice(&find(&tree, p)?.members);
    }
    members.sort_unstable();
    members.dedup();
    let schema = &s.snapshot.index.artifacts.schema;
    let suggestions: Vec<Value> = frequent_terms(&s.snapshot.text, &members, SUGGESTIONS, Gram::Unigram)
        .into_iter()
        .map(|(term, count)| {
            json!({ "term": term, "count": count, "in_schema": schema.contains(&term) })
        })
        .collect();
    Ok(Json(json!({
        "api_version": API_VERSION,
        "paths": paths,
        "suggestions": suggestions,
    })))
}
