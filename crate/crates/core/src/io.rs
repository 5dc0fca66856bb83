//! File formats: model JSON, dataset text, noise specification JSON, and
//! engine configuration JSON.
//!
//! Writers are hand-rolled so that identical inputs produce byte-identical
//! files; readers go through `serde_json`. Node indices are 1-based in
//! files (0-based everywhere in memory), and all floating point values are
//! serialized with 17 significant digits.

use std::fmt::Write as _;

use serde::Deserialize;
use thiserror::Error;

use crate::contamination::{AdversaryStrategy, NoiseKind, NoiseModel};
use crate::dataset::{Dataset, LabeledDataset, Provenance};
use crate::filter::EngineConfig;
use crate::graph::Dag;
use crate::net::BayesNet;

pub const MODEL_FORMAT: &str = "bayesnet-v1";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Invalid(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Model(#[from] crate::error::ModelError),

    #[error(transparent)]
    Contamination(#[from] crate::contamination::ContaminationError),

    #[error(transparent)]
    Engine(#[from] crate::filter::EngineError),
}

/// Formats a float with 17 significant digits, enough to round-trip any
/// f64 exactly.
pub fn fmt_f64(value: f64) -> String {
    assert!(value.is_finite(), "cannot serialize non-finite float {value}");
    format!("{value:.16e}")
}

fn bitstring(bits: impl Iterator<Item = u8>) -> String {
    bits.map(|b| if b == 1 { '1' } else { '0' }).collect()
}

/// Assignment of `node`'s parents as a bitstring, lowest-indexed parent
/// first (the least significant bit of the assignment integer).
fn assignment_string(fan_in: usize, assignment: u64) -> String {
    (0..fan_in).map(|bit| if (assignment >> bit) & 1 == 1 { '1' } else { '0' }).collect()
}

fn parse_assignment(s: &str) -> Result<u64, FormatError> {
    let mut a = 0u64;
    for (bit, ch) in s.chars().enumerate() {
        match ch {
            '0' => {}
            '1' => a |= 1 << bit,
            other => {
                return Err(FormatError::Invalid(format!("bad assignment character {other:?}")))
            }
        }
    }
    Ok(a)
}

// ---------------------------------------------------------------------------
// Model JSON
// ---------------------------------------------------------------------------

/// Serializes a network in the `bayesnet-v1` format: 1-based node labels,
/// per-node parent lists, and the conditional table in flat-index order
/// with each entry carrying its node and parent-assignment bitstring.
pub fn model_to_json(net: &BayesNet) -> String {
    let dag = net.dag();
    let table = net.config_table();
    let mut out = String::new();
    out.push_str("{\"format\":\"");
    out.push_str(MODEL_FORMAT);
    out.push_str("\",\"d\":");
    let _ = write!(out, "{}", dag.node_count());
    out.push_str(",\"parents\":[");
    for (i, parents) in dag.parent_lists().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push('[');
        for (j, &p) in parents.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", p + 1);
        }
        out.push(']');
    }
    out.push_str("],\"cpt\":[");
    for k in 0..net.num_configs() {
        if k > 0 {
            out.push(',');
        }
        let (node, assignment) = table.entry(k);
        let _ = write!(
            out,
            "{{\"node\":{},\"config\":\"{}\",\"p\":{}}}",
            node + 1,
            assignment_string(dag.fan_in(node), assignment),
            fmt_f64(net.cpt()[k])
        );
    }
    out.push_str("]}\n");
    out
}

#[derive(Deserialize)]
struct ModelFile {
    format: String,
    d: usize,
    parents: Vec<Vec<usize>>,
    cpt: Vec<CptEntryFile>,
}

#[derive(Deserialize)]
struct CptEntryFile {
    node: usize,
    config: String,
    p: f64,
}

/// Parses the `bayesnet-v1` format, validating the format tag, the parent
/// lists, and that table entries appear exactly in flat-index order.
pub fn model_from_json(text: &str) -> Result<BayesNet, FormatError> {
    let file: ModelFile = serde_json::from_str(text)?;
    if file.format != MODEL_FORMAT {
        return Err(FormatError::Invalid(format!(
            "unsupported format {:?}, expected {MODEL_FORMAT:?}",
            file.format
        )));
    }
    if file.parents.len() != file.d {
        return Err(FormatError::Invalid(format!(
            "d = {} but {} parent lists",
            file.d,
            file.parents.len()
        )));
    }
    let mut parents = Vec::with_capacity(file.d);
    for (node, list) in file.parents.iter().enumerate() {
        let mut internal = Vec::with_capacity(list.len());
        for &p in list {
            if p == 0 {
                return Err(FormatError::Invalid(format!(
                    "node {}: parent labels are 1-based",
                    node + 1
                )));
            }
            internal.push(p - 1);
        }
        parents.push(internal);
    }
    let dag = Dag::new(parents)?;
    let table = crate::graph::ConfigTable::new(&dag)?;
    if file.cpt.len() != table.len() {
        return Err(FormatError::Invalid(format!(
            "table has {} entries, expected {}",
            file.cpt.len(),
            table.len()
        )));
    }
    let mut cpt = Vec::with_capacity(table.len());
    for (k, entry) in file.cpt.iter().enumerate() {
        let (node, assignment) = table.entry(k);
        if entry.node != node + 1 {
            return Err(FormatError::Invalid(format!(
                "table entry {k} belongs to node {}, expected node {}",
                entry.node,
                node + 1
            )));
        }
        if entry.config.len() != dag.fan_in(node) || parse_assignment(&entry.config)? != assignment
        {
            return Err(FormatError::Invalid(format!(
                "table entry {k} has configuration {:?}, expected {:?}",
                entry.config,
                assignment_string(dag.fan_in(node), assignment)
            )));
        }
        cpt.push(entry.p);
    }
    Ok(BayesNet::new(dag, cpt)?)
}

// ---------------------------------------------------------------------------
// Dataset text format
// ---------------------------------------------------------------------------

/// Writes the dataset text format: a `"d N"` header line, then one row per
/// sample as `d` characters of `{0,1}`, optionally followed by a space and
/// a `G`/`B` ground-truth label.
pub fn dataset_to_text(data: &Dataset, labels: Option<&[Provenance]>) -> String {
    let mut out = String::with_capacity((data.dim() + 3) * (data.len() + 1));
    let _ = writeln!(out, "{} {}", data.dim(), data.len());
    for (i, row) in data.rows().enumerate() {
        out.push_str(&bitstring(row.iter().copied()));
        if let Some(labels) = labels {
            out.push(' ');
            out.push(match labels[i] {
                Provenance::Clean => 'G',
                Provenance::Corrupt => 'B',
            });
        }
        out.push('\n');
    }
    out
}

/// Parses the dataset text format; the label column is optional but must be
/// used consistently. Errors carry 1-based line numbers.
pub fn dataset_from_text(text: &str) -> Result<(Dataset, Option<Vec<Provenance>>), FormatError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| FormatError::Parse { line: 1, message: "empty file".into() })?;
    let mut parts = header.split_whitespace();
    let parse_usize = |s: Option<&str>, what: &str| -> Result<usize, FormatError> {
        s.ok_or_else(|| FormatError::Parse { line: 1, message: format!("missing {what}") })?
            .parse()
            .map_err(|e| FormatError::Parse { line: 1, message: format!("bad {what}: {e}") })
    };
    let d = parse_usize(parts.next(), "dimension")?;
    let n = parse_usize(parts.next(), "sample count")?;
    if d == 0 {
        return Err(FormatError::Parse { line: 1, message: "dimension must be positive".into() });
    }

    let mut data = Dataset::with_capacity(d, n);
    let mut labels: Vec<Provenance> = Vec::new();
    let mut row = vec![0u8; d];
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let bits = tokens.next().expect("non-empty line has a token");
        if bits.len() != d {
            return Err(FormatError::Parse {
                line: line_no,
                message: format!("row has {} characters, expected {d}", bits.len()),
            });
        }
        for (i, ch) in bits.chars().enumerate() {
            row[i] = match ch {
                '0' => 0,
                '1' => 1,
                other => {
                    return Err(FormatError::Parse {
                        line: line_no,
                        message: format!("bad bit character {other:?}"),
                    })
                }
            };
        }
        data.push_row(&row);
        match tokens.next() {
            Some("G") => labels.push(Provenance::Clean),
            Some("B") => labels.push(Provenance::Corrupt),
            Some(other) => {
                return Err(FormatError::Parse {
                    line: line_no,
                    message: format!("bad label {other:?}, expected G or B"),
                })
            }
            None => {
                if !labels.is_empty() {
                    return Err(FormatError::Parse {
                        line: line_no,
                        message: "missing label on a labeled dataset".into(),
                    });
                }
            }
        }
        if !labels.is_empty() && labels.len() != data.len() {
            return Err(FormatError::Parse {
                line: line_no,
                message: "label column must be used on every row".into(),
            });
        }
    }
    if data.len() != n {
        return Err(FormatError::Invalid(format!(
            "header promised {n} samples, found {}",
            data.len()
        )));
    }
    let labels = if labels.is_empty() { None } else { Some(labels) };
    Ok((data, labels))
}

pub fn labeled_dataset_to_text(data: &LabeledDataset) -> String {
    dataset_to_text(&data.data, Some(&data.labels))
}

// ---------------------------------------------------------------------------
// Noise specification JSON
// ---------------------------------------------------------------------------

/// Serializes an adversary strategy as its JSON object.
pub fn adversary_to_json(adversary: &AdversaryStrategy) -> String {
    match adversary {
        AdversaryStrategy::ProductNoise { means } => {
            let items: Vec<String> = means.iter().map(|&m| fmt_f64(m)).collect();
            format!("{{\"type\":\"product_noise\",\"means\":[{}]}}", items.join(","))
        }
        AdversaryStrategy::PointMass { point } => {
            format!(
                "{{\"type\":\"point_mass\",\"point\":\"{}\"}}",
                bitstring(point.iter().copied())
            )
        }
        AdversaryStrategy::CptShift { target, magnitude } => {
            format!(
                "{{\"type\":\"cpt_shift\",\"target\":{},\"magnitude\":{}}}",
                target,
                fmt_f64(*magnitude)
            )
        }
        AdversaryStrategy::SubtractiveTail { direction, reference } => {
            let dir: Vec<String> = direction.iter().map(|&v| fmt_f64(v)).collect();
            let refv: Vec<String> = reference.iter().map(|&v| fmt_f64(v)).collect();
            format!(
                "{{\"type\":\"subtractive_tail\",\"direction\":[{}],\"reference\":[{}]}}",
                dir.join(","),
                refv.join(",")
            )
        }
    }
}

/// Parses an adversary strategy from its JSON object.
pub fn adversary_from_json(text: &str) -> Result<AdversaryStrategy, FormatError> {
    let file: AdversaryFile = serde_json::from_str(text)?;
    adversary_from_file(file)
}

/// Serializes a noise specification:
/// `{"kind": ..., "eps": ..., "adversary": {"type": ..., ...}}`.
pub fn noise_to_json(model: &NoiseModel) -> String {
    let kind = match model.kind() {
        NoiseKind::HuberAdditive => "huber_additive",
        NoiseKind::TvReplacement => "tv_replacement",
    };
    format!(
        "{{\"kind\":\"{kind}\",\"eps\":{},\"adversary\":{}}}\n",
        fmt_f64(model.eps()),
        adversary_to_json(model.adversary())
    )
}

#[derive(Deserialize)]
struct NoiseFile {
    kind: String,
    eps: f64,
    adversary: AdversaryFile,
}

#[derive(Deserialize)]
#[serde(tag = "type")]
enum AdversaryFile {
    #[serde(rename = "product_noise")]
    ProductNoise { means: Vec<f64> },
    #[serde(rename = "point_mass")]
    PointMass { point: String },
    #[serde(rename = "cpt_shift")]
    CptShift { target: usize, magnitude: f64 },
    #[serde(rename = "subtractive_tail")]
    SubtractiveTail { direction: Vec<f64>, reference: Vec<f64> },
}

fn adversary_from_file(file: AdversaryFile) -> Result<AdversaryStrategy, FormatError> {
    Ok(match file {
        AdversaryFile::ProductNoise { means } => AdversaryStrategy::ProductNoise { means },
        AdversaryFile::PointMass { point } => {
            let mut bits = Vec::with_capacity(point.len());
            for ch in point.chars() {
                match ch {
                    '0' => bits.push(0),
                    '1' => bits.push(1),
                    other => {
                        return Err(FormatError::Invalid(format!(
                            "bad point-mass character {other:?}"
                        )))
                    }
                }
            }
            AdversaryStrategy::PointMass { point: bits }
        }
        AdversaryFile::CptShift { target, magnitude } => {
            AdversaryStrategy::CptShift { target, magnitude }
        }
        AdversaryFile::SubtractiveTail { direction, reference } => {
            AdversaryStrategy::SubtractiveTail { direction, reference }
        }
    })
}

pub fn noise_from_json(text: &str) -> Result<NoiseModel, FormatError> {
    let file: NoiseFile = serde_json::from_str(text)?;
    let kind = match file.kind.as_str() {
        "huber_additive" => NoiseKind::HuberAdditive,
        "tv_replacement" => NoiseKind::TvReplacement,
        other => return Err(FormatError::Invalid(format!("unknown noise kind {other:?}"))),
    };
    let adversary = adversary_from_file(file.adversary)?;
    Ok(NoiseModel::new(kind, file.eps, adversary)?)
}

// ---------------------------------------------------------------------------
// Engine configuration JSON
// ---------------------------------------------------------------------------

pub fn engine_config_to_json(config: &EngineConfig) -> String {
    let max_iters = match config.max_iters {
        Some(v) => v.to_string(),
        None => "null".into(),
    };
    format!(
        concat!(
            "{{\"eps\":{},\"spectral_const\":{},\"alpha_sample_const\":{},",
            "\"main_sample_const\":{},\"main_sample_cap\":{},\"max_iters\":{},",
            "\"eig_tol\":{},\"eig_max_iter\":{},\"seed\":{}}}\n"
        ),
        fmt_f64(config.eps),
        fmt_f64(config.spectral_const),
        fmt_f64(config.alpha_sample_const),
        fmt_f64(config.main_sample_const),
        config.main_sample_cap,
        max_iters,
        fmt_f64(config.eig_tol),
        config.eig_max_iter,
        config.seed
    )
}

#[derive(Deserialize)]
struct EngineConfigFile {
    eps: f64,
    spectral_const: Option<f64>,
    alpha_sample_const: Option<f64>,
    main_sample_const: Option<f64>,
    main_sample_cap: Option<usize>,
    max_iters: Option<usize>,
    eig_tol: Option<f64>,
    eig_max_iter: Option<usize>,
    seed: Option<u64>,
}

/// Parses an engine configuration; omitted fields keep their defaults.
pub fn engine_config_from_json(text: &str) -> Result<EngineConfig, FormatError> {
    let file: EngineConfigFile = serde_json::from_str(text)?;
    let mut config = EngineConfig::new(file.eps)?;
    if let Some(v) = file.spectral_const {
        config.spectral_const = v;
    }
    if let Some(v) = file.alpha_sample_const {
        config.alpha_sample_const = v;
    }
    if let Some(v) = file.main_sample_const {
        config.main_sample_const = v;
    }
    if let Some(v) = file.main_sample_cap {
        config.main_sample_cap = v;
    }
    config.max_iters = file.max_iters;
    if let Some(v) = file.eig_tol {
        config.eig_tol = v;
    }
    if let Some(v) = file.eig_max_iter {
        config.eig_max_iter = v;
    }
    if let Some(v) = file.seed {
        config.seed = v;
    }
    config.validate()?;
    Ok(config)
}
