//! TransE: relations as translations, `score(h, r, t) = −‖e_h + e_r − e_t‖_p`.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::rank::rank_metrics;
use super::split::TripleSplit;
use crate::error::{Error, Result};
use crate::jsonl;
use crate::knowledge_graph::{EntityId, Triple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormOrder {
    L1,
    L2,
}

impl NormOrder {
    fn as_u8(self) -> u8 {
        match self {
            NormOrder::L1 => 1,
            NormOrder::L2 => 2,
        }
    }

    fn from_u8(p: u8) -> Option<Self> {
        match p {
            1 => Some(NormOrder::L1),
            2 => Some(NormOrder::L2),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Softmax cross-entropy of the positive against its corrupted negatives.
    SoftmaxNll,
    MarginRanking {
        margin: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub dim: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub negatives_per_positive: usize,
    pub loss: LossKind,
    pub norm_order: NormOrder,
    /// Epochs between validation MRR checks.
    pub eval_every: usize,
    /// Validation checks without improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 100,
            learning_rate: 0.001,
            optimizer: Optimizer::default(),
            batch_size: 10,
            max_epochs: 1000,
            negatives_per_positive: 10,
            loss: LossKind::SoftmaxNll,
            norm_order: NormOrder::L1,
            eval_every: 10,
            patience: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransEModel {
    dim: usize,
    norm_order: NormOrder,
    /// Row-major `entity_count × dim`.
    entity_emb: Vec<f64>,
    /// Row-major `relation_count × dim`.
    relation_emb: Vec<f64>,
    relations: Vec<String>,
    relation_index: HashMap<String, usize>,
    entity_labels: Vec<String>,
}

fn normalize_rows(m: &mut [f64], dim: usize) {
    for row in m.chunks_mut(dim) {
        let n = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            row.iter_mut().for_each(|x| *x /= n);
        }
    }
}

impl TransEModel {
    /// Build a model from explicit embeddings; entity rows are used as given.
    pub fn from_parts(
        dim: usize,
        norm_order: NormOrder,
        entity_rows: Vec<Vec<f64>>,
        relations: Vec<(String, Vec<f64>)>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid(
                "embedding dimension must be positive".into(),
            ));
        }
        let rows_ok = entity_rows.iter().all(|r| r.len() == dim)
            && relations.iter().all(|(_, r)| r.len() == dim);
        if !rows_ok {
            return Err(Error::Invalid(format!(
                "every embedding row must have {dim} values"
            )));
        }
        let entity_labels = (0..entity_rows.len()).map(|i| i.to_string()).collect();
        let (names, rows): (Vec<String>, Vec<Vec<f64>>) = relations.into_iter().unzip();
        Ok(Self {
            dim,
            norm_order,
            entity_emb: entity_rows.concat(),
            relation_emb: rows.concat(),
            relation_index: names
                .iter()
                .enumerate()
                .map(|(i, n)| (n.clone(), i))
                .collect(),
            relations: names,
            entity_labels,
        })
    }

    /// Uniform `±6/√d` initialization with unit-norm entity and relation
    /// rows.
    fn random(
        entity_labels: Vec<String>,
        relations: Vec<String>,
        dim: usize,
        norm_order: NormOrder,
        rng: &mut impl Rng,
    ) -> Self {
        let bound = 6.0 / (dim as f64).sqrt();
        let mut draw =
            |n: usize| -> Vec<f64> { (0..n * dim).map(|_| rng.gen_range(-bound..bound)).collect() };
        let mut entity_emb = draw(entity_labels.len());
        let mut relation_emb = draw(relations.len());
        normalize_rows(&mut entity_emb, dim);
        normalize_rows(&mut relation_emb, dim);
        Self {
            dim,
            norm_order,
            entity_emb,
            relation_emb,
            relation_index: relations
                .iter()
                .enumerate()
                .map(|(i, n)| (n.clone(), i))
                .collect(),
            relations,
            entity_labels,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm_order(&self) -> NormOrder {
        self.norm_order
    }

    pub fn entity_count(&self) -> usize {
        self.entity_emb.len() / self.dim
    }

    pub fn relations(&self) -> &[String] {
        &self.relations
    }

    pub fn entity_labels(&self) -> &[String] {
        &self.entity_labels
    }

    pub fn entity(&self, i: usize) -> &[f64] {
        &self.entity_emb[i * self.dim..(i + 1) * self.dim]
    }

    pub fn relation(&self, r: usize) -> &[f64] {
        &self.relation_emb[r * self.dim..(r + 1) * self.dim]
    }

    pub fn relation_id(&self, name: &str) -> Option<usize> {
        self.relation_index.get(name).copied()
    }

    pub(crate) fn score_ids(&self, h: usize, r: usize, t: usize) -> f64 {
        let (eh, er, et) = (self.entity(h), self.relation(r), self.entity(t));
        match self.norm_order {
            NormOrder::L1 => -(0..self.dim)
                .map(|i| (eh[i] + er[i] - et[i]).abs())
                .sum::<f64>(),
            NormOrder::L2 => -(0..self.dim)
                .map(|i| {
                    let d = eh[i] + er[i] - et[i];
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
        }
    }

    pub(crate) fn resolve(&self, t: &Triple) -> Result<(usize, usize, usize)> {
        let n = self.entity_count();
        if t.head.index() >= n || t.tail.index() >= n {
            return Err(Error::UnknownId(format!("entity {} or {}", t.head, t.tail)));
        }
        let r = self
            .relation_id(&t.relation)
            .ok_or_else(|| Error::UnknownId(format!("relation `{}`", t.relation)))?;
        Ok((t.head.index(), r, t.tail.index()))
    }

    pub fn all_finite(&self) -> bool {
        self.entity_emb
            .iter()
            .chain(&self.relation_emb)
            .all(|x| x.is_finite())
    }
}

pub fn score_triple(
    model: &TransEModel,
    head: EntityId,
    relation: &str,
    tail: EntityId,
) -> Result<f64> {
    let (h, r, t) = model.resolve(&Triple {
        head,
        relation: relation.to_string(),
        tail,
    })?;
    Ok(model.score_ids(h, r, t))
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_mrr: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// The checkpoint with the best validation MRR (or the last one when
    /// validation never ran).
    pub model: TransEModel,
    pub history: Vec<EpochLog>,
    /// Mean loss over a fixed set of negatives before the first update.
    pub initial_loss: f64,
    /// Same quantity for the returned model.
    pub final_loss: f64,
    pub best_valid_mrr: Option<f64>,
    pub stopped_early: bool,
}

/// Lazily-updated Adam state over one embedding matrix: only rows touched
/// by a batch are stepped.
struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

struct Grads {
    dim: usize,
    rows: HashMap<usize, Vec<f64>>,
}

impl Grads {
    fn new(dim: usize) -> Self {
        Self {
            dim,
            rows: HashMap::new(),
        }
    }

    fn add(&mut self, row: usize, scale: f64, dir: &[f64]) {
        let g = self.rows.entry(row).or_insert_with(|| vec![0.0; self.dim]);
        for (gi, di) in g.iter_mut().zip(dir) {
            *gi += scale * di;
        }
    }
}

fn adam_step(
    params: &mut [f64],
    state: &mut AdamState,
    grads: Grads,
    lr: f64,
    opt: Optimizer,
    step: i32,
) {
    let Optimizer::Adam { beta1, beta2, eps } = opt;
    let bc1 = 1.0 - beta1.powi(step);
    let bc2 = 1.0 - beta2.powi(step);
    let dim = grads.dim;
    let mut rows: Vec<_> = grads.rows.into_iter().collect();
    rows.sort_by_key(|(r, _)| *r);
    for (row, g) in rows {
        for (i, gi) in g.into_iter().enumerate() {
            let k = row * dim + i;
            state.m[k] = beta1 * state.m[k] + (1.0 - beta1) * gi;
            state.v[k] = beta2 * state.v[k] + (1.0 - beta2) * gi * gi;
            let m_hat = state.m[k] / bc1;
            let v_hat = state.v[k] / bc2;
            params[k] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

/// `∂score/∂(e_h + e_r − e_t)`.
fn score_direction(model: &TransEModel, h: usize, r: usize, t: usize) -> Vec<f64> {
    let (eh, er, et) = (model.entity(h), model.relation(r), model.entity(t));
    let d: Vec<f64> = (0..model.dim).map(|i| eh[i] + er[i] - et[i]).collect();
    match model.norm_order {
        NormOrder::L1 => d
            .iter()
            .map(|x| -x.signum() * f64::from(u8::from(*x != 0.0)))
            .collect(),
        NormOrder::L2 => {
            let n = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n == 0.0 {
                vec![0.0; d.len()]
            } else {
                d.iter().map(|x| -x / n).collect()
            }
        }
    }
}

fn corrupt(
    rng: &mut impl Rng,
    (h, r, t): (usize, usize, usize),
    n_entities: usize,
) -> (usize, usize, usize) {
    let replace_head = rng.gen_bool(0.5);
    let original = if replace_head { h } else { t };
    let mut e = rng.gen_range(0..n_entities);
    while e == original && n_entities > 1 {
        e = rng.gen_range(0..n_entities);
    }
    if replace_head {
        (e, r, t)
    } else {
        (h, r, e)
    }
}

/// Loss of one positive against its negatives, and `∂loss/∂score` for each
/// (positive first).
fn loss_and_weights(kind: LossKind, scores: &[f64]) -> (f64, Vec<f64>) {
    match kind {
        LossKind::SoftmaxNll => {
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
            let z: f64 = exps.iter().sum();
            let loss = -(scores[0] - max) + z.ln();
            let mut w: Vec<f64> = exps.iter().map(|e| e / z).collect();
            w[0] -= 1.0;
            (loss, w)
        }
        LossKind::MarginRanking { margin } => {
            let mut w = vec![0.0; scores.len()];
            let mut loss = 0.0;
            for i in 1..scores.len() {
                let l = margin - scores[0] + scores[i];
                if l > 0.0 {
                    loss += l;
                    w[0] -= 1.0;
                    w[i] += 1.0;
                }
            }
            (loss, w)
        }
    }
}

type Negatives = Vec<Vec<(usize, usize, usize)>>;

fn sample_negatives(
    rng: &mut impl Rng,
    positives: &[(usize, usize, usize)],
    k: usize,
    n: usize,
) -> Negatives {
    positives
        .iter()
        .map(|&p| (0..k).map(|_| corrupt(rng, p, n)).collect())
        .collect()
}

fn mean_loss(
    model: &TransEModel,
    kind: LossKind,
    positives: &[(usize, usize, usize)],
    negatives: &Negatives,
) -> f64 {
    let total: f64 = positives
        .iter()
        .zip(negatives)
        .map(|(&(h, r, t), negs)| {
            let scores: Vec<f64> = std::iter::once(model.score_ids(h, r, t))
                .chain(negs.iter().map(|&(a, b, c)| model.score_ids(a, b, c)))
                .collect();
            loss_and_weights(kind, &scores).0
        })
        .sum();
    total / positives.len() as f64
}

/// Train with mini-batch Adam and validation-MRR early stopping.
/// Deterministic for a given split and config.
pub fn train_transe(split: &TripleSplit, config: &TrainConfig) -> Result<TrainOutcome> {
    if split.train.is_empty() {
        return Err(Error::Invalid("training set is empty".into()));
    }
    if config.dim == 0 || config.batch_size == 0 || config.eval_every == 0 {
        return Err(Error::Config(
            "dim, batch_size and eval_every must be positive".into(),
        ));
    }
    if split.entity_count < 2 {
        return Err(Error::Invalid("need at least two entities".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = TransEModel::random(
        split.entity_labels.clone(),
        split.relations.clone(),
        config.dim,
        config.norm_order,
        &mut rng,
    );
    let positives: Vec<(usize, usize, usize)> = split
        .train
        .iter()
        .map(|t| model.resolve(t))
        .collect::<Result<_>>()?;
    let n_entities = split.entity_count;
    let k = config.negatives_per_positive.max(1);

    // Fixed negatives for before/after loss comparison, from their own stream.
    let mut probe_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let probe = sample_negatives(&mut probe_rng, &positives, k, n_entities);
    let initial_loss = mean_loss(&model, config.loss, &positives, &probe);

    let mut ent_state = AdamState::new(model.entity_emb.len());
    let mut rel_state = AdamState::new(model.relation_emb.len());
    let mut step = 0i32;
    let mut history = Vec::new();
    let mut best: Option<(f64, TransEModel)> = None;
    let mut since_best = 0;
    let mut stopped_early = false;
    let mut order: Vec<usize> = (0..positives.len()).collect();

    for epoch in 0..config.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut ent_grads = Grads::new(config.dim);
            let mut rel_grads = Grads::new(config.dim);
            let scale = 1.0 / batch.len() as f64;
            for &idx in batch {
                let pos = positives[idx];
                let samples: Vec<(usize, usize, usize)> = std::iter::once(pos)
                    .chain((0..k).map(|_| corrupt(&mut rng, pos, n_entities)))
                    .collect();
                let scores: Vec<f64> = samples
                    .iter()
                    .map(|&(h, r, t)| model.score_ids(h, r, t))
                    .collect();
                let (loss, weights) = loss_and_weights(config.loss, &scores);
                epoch_loss += loss;
                for (&(h, r, t), w) in samples.iter().zip(weights) {
                    if w == 0.0 {
                        continue;
                    }
                    let dir = score_direction(&model, h, r, t);
                    ent_grads.add(h, w * scale, &dir);
                    rel_grads.add(r, w * scale, &dir);
                    ent_grads.add(t, -w * scale, &dir);
                }
            }
            step += 1;
            adam_step(
                &mut model.entity_emb,
                &mut ent_state,
                ent_grads,
                config.learning_rate,
                config.optimizer,
                step,
            );
            adam_step(
                &mut model.relation_emb,
                &mut rel_state,
                rel_grads,
                config.learning_rate,
                config.optimizer,
                step,
            );
        }
        normalize_rows(&mut model.entity_emb, config.dim);
        let train_loss = epoch_loss / positives.len() as f64;
        if !train_loss.is_finite() || !model.all_finite() {
            return Err(Error::Diverged(format!("epoch {epoch}: loss {train_loss}")));
        }
        let mut log = EpochLog {
            epoch,
            train_loss,
            valid_mrr: None,
        };
        if !split.valid.is_empty() && (epoch + 1) % config.eval_every == 0 {
            let mrr = rank_metrics(&model, &split.valid)?.mrr;
            log.valid_mrr = Some(mrr);
            if best.as_ref().is_none_or(|(b, _)| mrr > *b) {
                best = Some((mrr, model.clone()));
                since_best = 0;
            } else {
                since_best += 1;
            }
        }
        history.push(log);
        if since_best >= config.patience && config.patience > 0 {
            stopped_early = true;
            break;
        }
    }
    let best_valid_mrr = best.as_ref().map(|(m, _)| *m);
    let model = best.map_or(model, |(_, m)| m);
    let final_loss = mean_loss(&model, config.loss, &positives, &probe);
    Ok(TrainOutcome {
        model,
        history,
        initial_loss,
        final_loss,
        best_valid_mrr,
        stopped_early,
    })
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

pub const MODEL_FILE: &str = "model.txt";
pub const LABELS_FILE: &str = "labels.jsonl";

#[derive(Serialize, Deserialize)]
struct ModelHeader {
    dim: usize,
    norm_order: u8,
    entity_count: usize,
    relation_count: usize,
}

#[derive(Serialize, Deserialize)]
struct LabelRecord {
    kind: String,
    index: usize,
    label: String,
}

fn write_rows(w: &mut impl Write, m: &[f64], dim: usize) -> std::io::Result<()> {
    for row in m.chunks(dim) {
        let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Header line, entity rows, relation rows in `model.txt`; index → label
/// mapping in `labels.jsonl`.
pub fn persist_model(model: &TransEModel, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(MODEL_FILE);
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(file);
    let header = ModelHeader {
        dim: model.dim,
        norm_order: model.norm_order.as_u8(),
        entity_count: model.entity_count(),
        relation_count: model.relations.len(),
    };
    let header = serde_json::to_string(&header).map_err(|e| Error::Invalid(e.to_string()))?;
    (|| {
        writeln!(w, "{header}")?;
        write_rows(&mut w, &model.entity_emb, model.dim)?;
        write_rows(&mut w, &model.relation_emb, model.dim)?;
        w.flush()
    })()
    .map_err(|e| Error::io(&path, e))?;
    let labels = model
        .entity_labels
        .iter()
        .enumerate()
        .map(|(index, label)| LabelRecord {
            kind: "entity".into(),
            index,
            label: label.clone(),
        })
        .chain(
            model
                .relations
                .iter()
                .enumerate()
                .map(|(index, label)| LabelRecord {
                    kind: "relation".into(),
                    index,
                    label: label.clone(),
                }),
        );
    jsonl::write_all(&dir.join(LABELS_FILE), labels)
}

pub fn load_model(dir: &Path) -> Result<TransEModel> {
    let path = dir.join(MODEL_FILE);
    let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
    let mut lines = BufReader::new(file).lines();
    let mut next_line = |n: usize| -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::parse(&path, n, "unexpected end of model file"))?
            .map_err(|e| Error::io(&path, e))
    };
    let header: ModelHeader =
        serde_json::from_str(&next_line(1)?).map_err(|e| Error::parse(&path, 1, e.to_string()))?;
    let norm_order = NormOrder::from_u8(header.norm_order).ok_or_else(|| {
        Error::parse(
            &path,
            1,
            format!("unsupported norm order {}", header.norm_order),
        )
    })?;
    let mut read = |count: usize, offset: usize| -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(count * header.dim);
        for i in 0..count {
            let n = offset + i + 1;
            let line = next_line(n)?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::parse(&path, n, format!("{e}")))?;
            if row.len() != header.dim {
                return Err(Error::parse(
                    &path,
                    n,
                    format!("expected {} values, got {}", header.dim, row.len()),
                ));
            }
            out.extend(row);
        }
        Ok(out)
    };
    let entity_emb = read(header.entity_count, 1)?;
    let relation_emb = read(header.relation_count, 1 + header.entity_count)?;
    let mut entity_labels: Vec<String> = (0..header.entity_count).map(|i| i.to_string()).collect();
    let mut relations: Vec<String> = vec![String::new(); header.relation_count];
    let labels_path = dir.join(LABELS_FILE);
    for (line, rec) in jsonl::read_lines::<LabelRecord>(&labels_path)? {
        let rec = rec.map_err(|m| Error::parse(&labels_path, line, m))?;
        let slot = match rec.kind.as_str() {
            "entity" => entity_labels.get_mut(rec.index),
            "relation" => relations.get_mut(rec.index),
            _ => None,
        };
        *slot.ok_or_else(|| Error::parse(&labels_path, line, "label index out of range"))? =
            rec.label;
    }
    Ok(TransEModel {
        dim: header.dim,
        norm_order,
        entity_emb,
        relation_emb,
        relation_index: relations
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect(),
        relations,
        entity_labels,
    })
}
