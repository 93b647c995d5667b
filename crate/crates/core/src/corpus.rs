//! Reviews, entities, schemas and precomputed extractions, plus their on-disk formats.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Entity id used for reviews whose entity is unknown or when no entity file was given.
pub const UNKNOWN_ENTITY: &str = "unknown";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: invalid field `{field}`: {message}")]
    Record {
        path: PathBuf,
        line: usize,
        field: String,
        message: String,
    },
    #[error("duplicate review id {0}")]
    DuplicateReview(String),
    #[error("duplicate entity id {0}")]
    DuplicateEntity(String),
    #[error("duplicate attribute {0}")]
    DuplicateAttribute(String),
    #[error("schema is empty")]
    EmptySchema,
    #[error("invalid attribute name {0:?}")]
    InvalidAttribute(String),
    #[error("{path}:{line}: unknown attribute {attribute} (schema: {schema})")]
    UnknownAttribute {
        path: PathBuf,
        line: usize,
        attribute: String,
        schema: String,
    },
    #[error("{path}:{line}: unknown review id {review_id}")]
    UnknownReview {
        path: PathBuf,
        line: usize,
        review_id: String,
    },
    #[error("{path}:{line}: score {score} outside [-1, 1]")]
    ScoreOutOfRange {
        path: PathBuf,
        line: usize,
        score: f64,
    },
}

type Result<T> = std::result::Result<T, CorpusError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Review {
    pub id: String,
    pub entity_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub address: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_url: Option<String>,
    /// Derived from the corpus; ignored on input.
    #[serde(default)]
    pub review_count: usize,
}

impl Entity {
    fn unknown(review_count: usize) -> Self {
        Entity {
            id: UNKNOWN_ENTITY.to_string(),
            name: "Unknown".to_string(),
            lat: None,
            lon: None,
            address: None,
            image_url: None,
            review_count,
        }
    }

    pub fn coordinates(&self) -> Option<(f64, f64)> {
        self.lat.zip(self.lon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReviewFormat {
    Jsonl,
    Csv,
}

impl ReviewFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => ReviewFormat::Csv,
            _ => ReviewFormat::Jsonl,
        }
    }
}

impl std::str::FromStr for ReviewFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "jsonl" => Ok(ReviewFormat::Jsonl),
            "csv" => Ok(ReviewFormat::Csv),
            other => Err(format!(
                "unknown review format {other:?} (expected jsonl or csv)"
            )),
        }
    }
}

/// A validated set of reviews with their entities.
///
/// Review order is ingestion order and is what every "corpus order" in the
/// system refers to. Review indices (`usize`) are positions in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    reviews: Vec<Review>,
    entities: Vec<Entity>,
    has_entity_info: bool,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus, resolving entity references.
    ///
    /// Without an entity list every review is attached to the `unknown`
    /// pseudo-entity. With one, reviews pointing at ids missing from it are
    /// re-attached to `unknown`, which is appended only when needed.
    pub fn new(mut reviews: Vec<Review>, entities: Option<Vec<Entity>>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(reviews.len());
        for (i, r) in reviews.iter().enumerate() {
            if by_id.insert(r.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateReview(r.id.clone()));
            }
        }

        let has_entity_info = entities.is_some();
        let mut entities = entities.unwrap_or_default();
        let mut entity_pos = HashMap::with_capacity(entities.len());
        for (i, e) in entities.iter().enumerate() {
            if entity_pos.insert(e.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateEntity(e.id.clone()));
            }
        }
        let mut counts = vec![0usize; entities.len()];
        let mut unknown = 0usize;
        for r in reviews.iter_mut() {
            match entity_pos.get(r.entity_id.as_str()) {
                Some(&i) if r.entity_id != UNKNOWN_ENTITY => counts[i] += 1,
                _ => {
                    r.entity_id = UNKNOWN_ENTITY.to_string();
                    unknown += 1;
                }
            }
        }
        for (e, c) in entities.iter_mut().zip(counts) {
            e.review_count = c;
        }
        if let Some(&i) = entity_pos.get(UNKNOWN_ENTITY) {
            entities[i].review_count = unknown;
        } else if unknown > 0 || !has_entity_info {
            entities.push(Entity::unknown(unknown));
        }

        Ok(Corpus {
            reviews,
            entities,
            has_entity_info,
            by_id,
        })
    }

    pub fn reviews(&self) -> &[Review] {
        &self.reviews
    }

    pub fn review(&self, index: usize) -> &Review {
        &self.reviews[index]
    }

    pub fn len(&self) -> usize {
        self.reviews.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reviews.is_empty()
    }

    pub fn index_of(&self, review_id: &str) -> Option<usize> {
        self.by_id.get(review_id).copied()
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.iter().find(|e| e.id == id)
    }

    /// False when the corpus was loaded without an entity file.
    pub fn has_entity_info(&self) -> bool {
        self.has_entity_info
    }

    /// Indices of the reviews of one entity, in corpus order.
    pub fn reviews_of(&self, entity_id: &str) -> Vec<usize> {
        self.reviews
            .iter()
            .enumerate()
            .filter(|(_, r)| r.entity_id == entity_id)
            .map(|(i, _)| i)
            .collect()
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn record_err(path: &Path, line: usize, field: &str, message: impl Into<String>) -> CorpusError {
    CorpusError::Record {
        path: path.to_path_buf(),
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

/// Iterates non-blank lines of a JSONL file with 1-based line numbers.
fn jsonl_lines(path: &Path) -> Result<impl Iterator<Item = Result<(usize, String)>> + '_> {
    let file = File::open(path).map_err(io_err(path))?;
    Ok(BufReader::new(file)
        .lines()
        .enumerate()
        .filter_map(move |(i, line)| match line {
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => Some(Ok((i + 1, l))),
            Err(e) => Some(Err(io_err(path)(e))),
        }))
}

fn json_field<'a>(
    obj: &'a serde_json::Map<String, serde_json::Value>,
    path: &Path,
    line: usize,
    field: &str,
) -> Result<&'a serde_json::Value> {
    obj.get(field)
        .ok_or_else(|| record_err(path, line, field, "missing required field"))
}

fn json_string(value: &serde_json::Value, path: &Path, line: usize, field: &str) -> Result<String> {
    match value {
        serde_json::Value::String(s) => Ok(s.clone()),
        // Numeric ids are common in exported datasets.
        serde_json::Value::Number(n) => Ok(n.to_string()),
        _ => Err(record_err(path, line, field, "expected a string")),
    }
}

fn optional<'a>(
    obj: &'a serde_json::Map<String, serde_json::Value>,
    field: &str,
) -> Option<&'a serde_json::Value> {
    obj.get(field).filter(|v| !v.is_null())
}

fn json_number(value: &serde_json::Value, path: &Path, line: usize, field: &str) -> Result<f64> {
    value
        .as_f64()
        .ok_or_else(|| record_err(path, line, field, "expected a number"))
}

fn validate_review(
    path: &Path,
    line: usize,
    id: String,
    entity_id: String,
    text: String,
    rating: Option<f64>,
    date: Option<String>,
) -> Result<Review> {
    if id.trim().is_empty() {
        return Err(record_err(path, line, "id", "empty id"));
    }
    if text.trim().is_empty() {
        return Err(record_err(path, line, "text", "empty text"));
    }
    if let Some(r) = rating {
        if !r.is_finite() {
            return Err(record_err(path, line, "rating", "not a finite number"));
        }
    }
    if let Some(d) = &date {
        if chrono::NaiveDate::parse_from_str(d, "%Y-%m-%d").is_err()
            && chrono::DateTime::parse_from_rfc3339(d).is_err()
        {
            return Err(record_err(
                path,
                line,
                "date",
                format!("not an ISO-8601 date: {d:?}"),
            ));
        }
    }
    let entity_id = if entity_id.trim().is_empty() {
        UNKNOWN_ENTITY.to_string()
    } else {
        entity_id
    };
    Ok(Review {
        id,
        entity_id,
        text,
        rating,
        date,
    })
}

fn read_reviews(path: &Path, format: ReviewFormat) -> Result<Vec<Review>> {
    let mut reviews = Vec::new();
    let mut seen = HashSet::new();
    let mut push = |review: Review, reviews: &mut Vec<Review>| {
        if !seen.insert(review.id.clone()) {
            return Err(CorpusError::DuplicateReview(review.id));
        }
        reviews.push(review);
        Ok(())
    };
    match format {
        ReviewFormat::Jsonl => {
            for item in jsonl_lines(path)? {
                let (line, text) = item?;
                let value: serde_json::Value = serde_json::from_str(&text)
                    .map_err(|e| record_err(path, line, "<record>", e.to_string()))?;
                let obj = value
                    .as_object()
                    .ok_or_else(|| record_err(path, line, "<record>", "expected a JSON object"))?;
                let id = json_string(json_field(obj, path, line, "id")?, path, line, "id")?;
                let entity_id = json_string(
                    json_field(obj, path, line, "entity_id")?,
                    path,
                    line,
                    "entity_id",
                )?;
                let body = json_string(json_field(obj, path, line, "text")?, path, line, "text")?;
                let rating = optional(obj, "rating")
                    .map(|v| json_number(v, path, line, "rating"))
                    .transpose()?;
                let date = optional(obj, "date")
                    .map(|v| json_string(v, path, line, "date"))
                    .transpose()?;
                push(
                    validate_review(path, line, id, entity_id, body, rating, date)?,
                    &mut reviews,
                )?;
            }
        }
        ReviewFormat::Csv => {
            let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(source) => io_err(path)(source),
                other => record_err(path, 1, "<header>", format!("{other:?}")),
            })?;
            let headers = reader
                .headers()
                .map_err(|e| record_err(path, 1, "<header>", e.to_string()))?
                .clone();
            let col = |name: &str| headers.iter().position(|h| h.trim() == name);
            let (id_col, entity_col, text_col) = match (col("id"), col("entity_id"), col("text")) {
                (Some(a), Some(b), Some(c)) => (a, b, c),
                _ => {
                    return Err(record_err(
                        path,
                        1,
                        "<header>",
                        "CSV header must contain id, entity_id and text",
                    ))
                }
            };
            let rating_col = col("rating");
            let date_col = col("date");
            for (row, record) in reader.records().enumerate() {
                // Row numbers count data rows from 1, i.e. file line minus the header.
                let row = row + 1;
                let record =
                    record.map_err(|e| record_err(path, row, "<record>", e.to_string()))?;
                let get = |c: usize| record.get(c).unwrap_or("").to_string();
                let rating = match rating_col.map(get).filter(|s| !s.trim().is_empty()) {
                    Some(s) => Some(
                        s.trim()
                            .parse::<f64>()
                            .map_err(|_| record_err(path, row, "rating", "expected a number"))?,
                    ),
                    None => None,
                };
                let date = date_col.map(get).filter(|s| !s.trim().is_empty());
                push(
                    validate_review(
                        path,
                        row,
                        get(id_col),
                        get(entity_col),
                        get(text_col),
                        rating,
                        date,
                    )?,
                    &mut reviews,
                )?;
            }
        }
    }
    Ok(reviews)
}

/// Loads reviews without entity information.
pub fn load_reviews(path: &Path, format: ReviewFormat) -> Result<Corpus> {
    Corpus::new(read_reviews(path, format)?, None)
}

/// Loads reviews and, when given, the entity file they refer to.
pub fn load_corpus(
    reviews: &Path,
    format: ReviewFormat,
    entities: Option<&Path>,
) -> Result<Corpus> {
    let reviews = read_reviews(reviews, format)?;
    let entities = entities.map(load_entities).transpose()?;
    Corpus::new(reviews, entities)
}

pub fn load_entities(path: &Path) -> Result<Vec<Entity>> {
    let mut out = Vec::new();
    for item in jsonl_lines(path)? {
        let (line, text) = item?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| record_err(path, line, "<record>", e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| record_err(path, line, "<record>", "expected a JSON object"))?;
        let id = json_string(json_field(obj, path, line, "id")?, path, line, "id")?;
        if id.trim().is_empty() {
            return Err(record_err(path, line, "id", "empty id"));
        }
        let name = json_string(json_field(obj, path, line, "name")?, path, line, "name")?;
        let lat = optional(obj, "lat")
            .map(|v| json_number(v, path, line, "lat"))
            .transpose()?;
        let lon = optional(obj, "lon")
            .map(|v| json_number(v, path, line, "lon"))
            .transpose()?;
        if let Some(lat) = lat {
            if !(-90.0..=90.0).contains(&lat) {
                return Err(record_err(path, line, "lat", "latitude outside [-90, 90]"));
            }
        }
        if let Some(lon) = lon {
            if !(-180.0..=180.0).contains(&lon) {
                return Err(record_err(
                    path,
                    line,
                    "lon",
                    "longitude outside [-180, 180]",
                ));
            }
        }
        let address = optional(obj, "address")
            .map(|v| json_string(v, path, line, "address"))
            .transpose()?;
        let image_url = optional(obj, "image_url")
            .map(|v| json_string(v, path, line, "image_url"))
            .transpose()?;
        out.push(Entity {
            id,
            name,
            lat,
            lon,
            address,
            image_url,
            review_count: 0,
        });
    }
    Ok(out)
}

/// An ordered, flat list of attribute names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub attributes: Vec<String>,
    pub version: String,
}

impl Schema {
    /// Normalizes (trim + lowercase) and validates a list of attribute names.
    pub fn new<I, S>(attributes: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for a in attributes {
            let name = normalize_attribute(a.as_ref())?;
            if !seen.insert(name.clone()) {
                return Err(CorpusError::DuplicateAttribute(name));
            }
            out.push(name);
        }
        if out.is_empty() {
            return Err(CorpusError::EmptySchema);
        }
        let version = schema_version(&out);
        Ok(Schema {
            attributes: out,
            version,
        })
    }

    /// Parses newline-separated attribute names; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        Self::new(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty()),
        )
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn position(&self, attribute: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a == attribute)
    }

    pub fn contains(&self, attribute: &str) -> bool {
        self.position(attribute).is_some()
    }

    /// Newline-separated file contents, one attribute per line.
    pub fn to_file_contents(&self) -> String {
        let mut s = self.attributes.join("\n");
        s.push('\n');
        s
    }
}

fn normalize_attribute(raw: &str) -> Result<String> {
    let name = raw.trim().to_lowercase();
    let valid = !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_alphanumeric() || matches!(c, '-' | '_' | '.' | ' '));
    if !valid {
        return Err(CorpusError::InvalidAttribute(raw.to_string()));
    }
    Ok(name)
}

fn schema_version(attributes: &[String]) -> String {
    let mut hasher = Sha256::new();
    for a in attributes {
        hasher.update(a.as_bytes());
        hasher.update(b"\n");
    }
    let digest = hasher.finalize();
    digest[..6].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn load_schema(path: &Path) -> Result<Schema> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Schema::parse(&text)
}

/// One (review, attribute) sentiment score produced by an external extractor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionRecord {
    pub review_id: String,
    pub attribute: String,
    pub score: f64,
}

/// Reads extraction records and validates them against the schema and corpus.
///
/// Several records for the same (review, attribute) pair are averaged. The
/// output is ordered by review (corpus order), then attribute (schema order).
pub fn load_extractions(
    path: &Path,
    schema: &Schema,
    corpus: &Corpus,
) -> Result<Vec<ExtractionRecord>> {
    let mut sums: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
    for item in jsonl_lines(path)? {
        let (line, text) = item?;
        let raw: RawExtraction = serde_json::from_str(&text)
            .map_err(|e| record_err(path, line, "<record>", e.to_string()))?;
        let attribute = raw.attribute.trim().to_lowercase();
        let attr = schema
            .position(&attribute)
            .ok_or_else(|| CorpusError::UnknownAttribute {
                path: path.to_path_buf(),
                line,
                attribute: attribute.clone(),
                schema: schema.attributes.join(", "),
            })?;
        let review = corpus
            .index_of(&raw.review_id)
            .ok_or_else(|| CorpusError::UnknownReview {
                path: path.to_path_buf(),
                line,
                review_id: raw.review_id.clone(),
            })?;
        if !raw.score.is_finite() || !(-1.0..=1.0).contains(&raw.score) {
            return Err(CorpusError::ScoreOutOfRange {
                path: path.to_path_buf(),
                line,
                score: raw.score,
            });
        }
        let entry = sums.entry((review, attr)).or_insert((0.0, 0));
        entry.0 += raw.score;
        entry.1 += 1;
    }
    Ok(sums
        .into_iter()
        .map(|((review, attr), (sum, n))| ExtractionRecord {
            review_id: corpus.review(review).id.clone(),
            attribute: schema.attributes[attr].clone(),
            score: sum / n as f64,
        })
        .collect())
}

#[derive(Deserialize)]
struct RawExtraction {
    review_id: String,
    attribute: String,
    score: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &tempfile::TempDir, name: &str, contents: &str) -> PathBuf {
        let path = dir.path().join(name);
        let mut f = File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    const THREE: &str = r#"{"id":"r1","entity_id":"h1","text":"Great location."}
{"id":"r2","entity_id":"h1","text":"Rude staff.","rating":2}
{"id":"r3","entity_id":"h2","text":"Clean rooms.","date":"2019-05-01"}
"#;

    #[test]
    fn loads_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "reviews.jsonl", THREE);
        let corpus = load_reviews(&p, ReviewFormat::Jsonl).unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(corpus.review(1).rating, Some(2.0));
        // No entity file: one pseudo-entity holding everything.
        assert!(!corpus.has_entity_info());
        assert_eq!(corpus.entities().len(), 1);
        assert_eq!(corpus.entities()[0].id, UNKNOWN_ENTITY);
        assert_eq!(corpus.entities()[0].review_count, 3);
    }

    #[test]
    fn duplicate_review_id() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "reviews.jsonl",
            "{\"id\":\"r1\",\"entity_id\":\"h\",\"text\":\"a\"}\n{\"id\":\"r1\",\"entity_id\":\"h\",\"text\":\"b\"}\n",
        );
        let err = load_reviews(&p, ReviewFormat::Jsonl).unwrap_err();
        assert_eq!(err.to_string(), "duplicate review id r1");
    }

    #[test]
    fn csv_empty_text_reports_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "reviews.csv",
            "id,entity_id,text\nr1,h1,fine\nr2,h1,   \nr3,h1,ok\n",
        );
        match load_reviews(&p, ReviewFormat::Csv).unwrap_err() {
            CorpusError::Record { line, field, .. } => {
                assert_eq!(line, 2);
                assert_eq!(field, "text");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn csv_requires_columns() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "reviews.csv", "id,body\nr1,x\n");
        assert!(load_reviews(&p, ReviewFormat::Csv).is_err());
    }

    #[test]
    fn missing_field_names_line_and_field() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "reviews.jsonl",
            "{\"id\":\"r1\",\"entity_id\":\"h\",\"text\":\"a\"}\n\n{\"id\":\"r2\",\"text\":\"b\"}\n",
        );
        let err = load_reviews(&p, ReviewFormat::Jsonl)
            .unwrap_err()
            .to_string();
        assert!(err.contains(":3:"), "{err}");
        assert!(err.contains("entity_id"), "{err}");
    }

    #[test]
    fn entity_resolution_and_counts() {
        let dir = tempfile::tempdir().unwrap();
        let r = write(&dir, "reviews.jsonl", THREE);
        let e = write(
            &dir,
            "entities.jsonl",
            "{\"id\":\"h1\",\"name\":\"Hotel One\",\"lat\":40.7,\"lon\":-74.0}\n",
        );
        let corpus = load_corpus(&r, ReviewFormat::Jsonl, Some(&e)).unwrap();
        assert!(corpus.has_entity_info());
        let h1 = corpus.entity("h1").unwrap();
        assert_eq!(h1.review_count, 2);
        assert_eq!(h1.coordinates(), Some((40.7, -74.0)));
        // h2 is not in the entity file.
        assert_eq!(corpus.review(2).entity_id, UNKNOWN_ENTITY);
        assert_eq!(corpus.entity(UNKNOWN_ENTITY).unwrap().review_count, 1);
        let total: usize = corpus.entities().iter().map(|e| e.review_count).sum();
        assert_eq!(total, corpus.len());
    }

    #[test]
    fn entity_coordinates_validated() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(
            &dir,
            "e.jsonl",
            "{\"id\":\"h1\",\"name\":\"x\",\"lat\":91,\"lon\":0}\n",
        );
        assert!(load_entities(&e).is_err());
    }

    #[test]
    fn schema_normalization() {
        let s = Schema::parse("Food\ndrink\nfacility").unwrap();
        assert_eq!(s.attributes, vec!["food", "drink", "facility"]);
        let s = Schema::parse("# hotel schema\n  Location \n\nstaff # people\n").unwrap();
        assert_eq!(s.attributes, vec!["location", "staff"]);
    }

    #[test]
    fn schema_duplicates_and_empty() {
        let err = Schema::parse("location\nlocation").unwrap_err();
        assert_eq!(err.to_string(), "duplicate attribute location");
        assert!(matches!(
            Schema::parse("# nothing\n"),
            Err(CorpusError::EmptySchema)
        ));
    }

    #[test]
    fn schema_of_21() {
        let text: String = (0..21).map(|i| format!("attr{i}\n")).collect();
        assert_eq!(Schema::parse(&text).unwrap().len(), 21);
    }

    #[test]
    fn schema_version_tracks_content() {
        let a = Schema::parse("a\nb").unwrap();
        let b = Schema::parse("A\nB\n").unwrap();
        let c = Schema::parse("b\na").unwrap();
        assert_eq!(a.version, b.version);
        assert_ne!(a.version, c.version);
    }

    fn small_corpus() -> Corpus {
        let reviews = ["r1", "r2"]
            .iter()
            .map(|id| Review {
                id: id.to_string(),
                entity_id: "h".into(),
                text: "text".into(),
                rating: None,
                date: None,
            })
            .collect();
        Corpus::new(reviews, None).unwrap()
    }

    #[test]
    fn extractions_validate_and_average() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = small_corpus();
        let schema = Schema::parse("cleanliness\nfood").unwrap();

        let p = write(
            &dir,
            "x.jsonl",
            "{\"review_id\":\"r1\",\"attribute\":\"cleanliness\",\"score\":0.4}\n",
        );
        assert_eq!(load_extractions(&p, &schema, &corpus).unwrap().len(), 1);

        let p = write(
            &dir,
            "y.jsonl",
            "{\"review_id\":\"r1\",\"attribute\":\"food\",\"score\":0.2}\n{\"review_id\":\"r1\",\"attribute\":\"food\",\"score\":0.6}\n",
        );
        let recs = load_extractions(&p, &schema, &corpus).unwrap();
        assert_eq!(recs.len(), 1);
        assert!((recs[0].score - 0.4).abs() < 1e-12);

        let p = write(
            &dir,
            "z.jsonl",
            "{\"review_id\":\"r1\",\"attribute\":\"view\",\"score\":0.2}\n",
        );
        let err = load_extractions(&p, &schema, &corpus)
            .unwrap_err()
            .to_string();
        assert!(err.contains("unknown attribute view"), "{err}");

        let p = write(
            &dir,
            "w.jsonl",
            "{\"review_id\":\"r2\",\"attribute\":\"food\",\"score\":1.5}\n",
        );
        assert!(matches!(
            load_extractions(&p, &schema, &corpus),
            Err(CorpusError::ScoreOutOfRange { .. })
        ));

        let p = write(
            &dir,
            "v.jsonl",
            "{\"review_id\":\"r9\",\"attribute\":\"food\",\"score\":0.1}\n",
        );
        assert!(matches!(
            load_extractions(&p, &schema, &corpus),
            Err(CorpusError::UnknownReview { .. })
        ));
    }
}
