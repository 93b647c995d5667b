//! Deterministic synthetic hotel-review corpus with extraction records.
//!
//! Every hotel has a latent quality per attribute. A review mentions a few
//! attributes, scores each around the hotel's quality and renders one
//! sentence per attribute from a positive or negative template.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::{Entity, ExtractionRecord, Review};

pub const ATTRIBUTES: &[&str] = &[
    "cleanliness",
    "location",
    "staff",
    "food",
    "service",
    "room",
    "price",
    "facility",
];

const TEMPLATES: &[(&[&str], &[&str])] = &[
    (
        &[
            "The room was spotless and clean.",
            "Very clean bathroom and fresh towels every day.",
            "Housekeeping kept everything clean.",
        ],
        &[
            "The carpet was filthy and stained.",
            "Dirty bathroom and a smelly carpet.",
            "Hair in the shower and a stained carpet.",
        ],
    ),
    (
        &[
            "Great location, walking distance to the metro station.",
            "Convenient location near the city center.",
            "Perfect location close to the metro station and the old town.",
        ],
        &[
            "The location was noisy and far from the metro station.",
            "Bad location, a long walk from the city center.",
            "The neighborhood felt unsafe at night.",
        ],
    ),
    (
        &[
            "Friendly staff at the front desk.",
            "The staff were helpful and polite.",
            "Welcoming staff who remembered our names.",
        ],
        &[
            "Rude staff at the front desk.",
            "Unhelpful staff ignored our requests.",
            "The front desk staff were rude at check in.",
        ],
    ),
    (
        &[
            "Delicious breakfast with a generous portion size.",
            "Tasty food and fresh coffee at breakfast.",
            "The restaurant serves great food and the portion size is generous.",
        ],
        &[
            "Bland breakfast and a small portion size.",
            "The food was cold and stale.",
            "Overpriced restaurant with a tiny portion size.",
        ],
    ),
    (
        &[
            "Excellent service throughout our stay.",
            "Room service was quick and the service was attentive.",
            "The service at the bar was outstanding.",
        ],
        &[
            "Slow service at the restaurant.",
            "Terrible service, we waited an hour for room service.",
            "The service was disappointing and slow.",
        ],
    ),
    (
        &[
            "Spacious room with a comfortable bed.",
            "Quiet room with a beautiful view.",
            "The room was cozy and the bed was comfortable.",
        ],
        &[
            "Cramped room and an uncomfortable bed.",
            "The room was old and outdated.",
            "Noisy room with thin walls.",
        ],
    ),
    (
        &[
            "Affordable price for the quality.",
            "Fair price and good value.",
            "Cheap rates for such a nice stay.",
        ],
        &[
            "Overpriced for what you get.",
            "Expensive rooms and poor value.",
            "The price was far too high.",
        ],
    ),
    (
        &[
            "The pool and gym were great.",
            "Nice pool area and a clean gym.",
            "The spa and pool were lovely.",
        ],
        &[
            "The pool was closed and the gym was broken.",
            "Broken elevator and a dirty pool.",
            "The gym equipment was old and broken.",
        ],
    ),
];

const FILLERS: &[&str] = &[
    "We stayed three nights.",
    "Visited for a business trip.",
    "We came for a family weekend.",
    "Stayed here during a conference.",
    "Our second time at this hotel.",
];

const NAME_A: &[&str] = &[
    "Grand",
    "Royal",
    "Harbor",
    "Park",
    "City",
    "Garden",
    "Central",
    "Riverside",
    "Summit",
    "Plaza",
];
const NAME_B: &[&str] = &["Hotel", "Inn", "Suites", "Lodge", "Residence", "House"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthParams {
    pub n_reviews: usize,
    pub n_entities: usize,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            n_reviews: 10_000,
            n_entities: 60,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub reviews: Vec<Review>,
    pub entities: Vec<Entity>,
    pub schema: Vec<String>,
    pub extractions: Vec<ExtractionRecord>,
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

pub fn generate(params: SynthParams) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n_ent = params.n_entities.max(1);

    let entities: Vec<Entity> = (0..n_ent)
        .map(|i| {
            let name = format!(
                "{} {} {}",
                NAME_A[i % NAME_A.len()],
                NAME_B[(i / NAME_A.len()) % NAME_B.len()],
                i + 1
            );
            // Every seventh hotel has no coordinates.
            let (lat, lon) = if i % 7 == 6 {
                (None, None)
            } else {
                (
                    Some(round2(40.70 + rng.random::<f64>() * 0.10)),
                    Some(round2(-74.02 + rng.random::<f64>() * 0.10)),
                )
            };
            Entity {
                id: format!("h{:03}", i + 1),
                name,
                lat,
                lon,
                address: Some(format!("{} Main Street", 10 + i)),
                image_url: None,
                review_count: 0,
            }
        })
        .collect();

    let quality: Vec<Vec<f64>> = (0..n_ent)
        .map(|_| {
            ATTRIBUTES
                .iter()
                .map(|_| rng.random_range(-0.9..0.9))
                .collect()
        })
        .collect();
    // Zipf-like popularity so a few hotels dominate.
    let weights: Vec<f64> = (0..n_ent).map(|i| 1.0 / (i as f64 + 2.0)).collect();
    let total_w: f64 = weights.iter().sum();

    let mut reviews = Vec::with_capacity(params.n_reviews);
    let mut extractions = Vec::new();
    for r in 0..params.n_reviews {
        let mut u = rng.random::<f64>() * total_w;
        let mut e = n_ent - 1;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                e = i;
                break;
            }
            u -= w;
        }
        let id = format!("r{:05}", r + 1);
        let n_attr = rng.random_range(1..=3);
        let mut attrs: Vec<usize> = (0..ATTRIBUTES.len())
            .collect::<Vec<_>>()
            .choose_multiple(&mut rng, n_attr)
            .copied()
            .collect();
        attrs.sort_unstable();

        let mut sentences = Vec::new();
        if rng.random_bool(0.3) {
            sentences.push(FILLERS.choose(&mut rng).unwrap().to_string());
        }
        let mut score_sum = 0.0;
        for &a in &attrs {
            let score = round2((quality[e][a] + rng.random_range(-0.4..0.4)).clamp(-1.0, 1.0));
            score_sum += score;
            let (pos, neg) = TEMPLATES[a];
            let pool = if score >= 0.0 { pos } else { neg };
            sentences.push(pool.choose(&mut rng).unwrap().to_string());
            extractions.push(ExtractionRecord {
                review_id: id.clone(),
                attribute: ATTRIBUTES[a].to_string(),
                score,
            });
        }
        let mean = score_sum / attrs.len() as f64;
        let rating = (3.0 + 2.0 * mean).round().clamp(1.0, 5.0);
        reviews.push(Review {
            id,
            entity_id: entities[e].id.clone(),
            text: sentences.join(" "),
            rating: Some(rating),
            date: Some(format!(
                "2019-{:02}-{:02}",
                rng.random_range(1..=12),
                rng.random_range(1..=28)
            )),
        });
    }

    SynthCorpus {
        reviews,
        entities,
        schema: ATTRIBUTES.iter().map(|s| s.to_string()).collect(),
        extractions,
    }
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> io::Result<()> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.push(b'\n');
    }
    fs::write(path, out)
}

/// Paths of a written synthetic corpus.
#[derive(Debug, Clone)]
pub struct SynthFiles {
    pub reviews: PathBuf,
    pub entities: PathBuf,
    pub schema: PathBuf,
    pub extractions: PathBuf,
    /// Ready-to-use pipeline config (k1=5, k2=3, depth=5) with `index_dir=index`.
    pub config: PathBuf,
}

pub fn write_corpus(dir: &Path, corpus: &SynthCorpus, seed: u64) -> io::Result<SynthFiles> {
    fs::create_dir_all(dir)?;
    let files = SynthFiles {
        reviews: dir.join("reviews.jsonl"),
        entities: dir.join("entities.jsonl"),
        schema: dir.join("schema.txt"),
        extractions: dir.join("extractions.jsonl"),
        config: dir.join("pipeline.conf"),
    };
    write_jsonl(&files.reviews, &corpus.reviews)?;
    let entities: Vec<serde_json::Value> = corpus
        .entities
        .iter()
        .map(|e| {
            let mut v = serde_json::to_value(e).expect("entity serializes");
            v.as_object_mut().unwrap().remove("review_count");
            v
        })
        .collect();
    write_jsonl(&files.entities, &entities)?;
    fs::write(&files.schema, corpus.schema.join("\n") + "\n")?;
    write_jsonl(&files.extractions, &corpus.extractions)?;
    fs::write(
        &files.config,
        format!(
            "# synthetic hotel corpus\n\
             reviews = reviews.jsonl\n\
             entities = entities.jsonl\n\
             schema = schema.txt\n\
             extractions = extractions.jsonl\n\
             index_dir = index\n\
             featurizer = extractions\n\
             k1 = 5\n\
             k2 = 3\n\
             depth = 5\n\
             seed = {seed}\n"
        ),
    )?;
    Ok(files)
}
