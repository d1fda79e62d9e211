//! Run configuration, read from TOML. Every section and field is optional;
//! missing values take the library defaults.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::LoadMode;
use crate::error::{Error, Result};
use crate::generation::GenerationParams;
use crate::kg_embedding::{SplitRatios, TrainConfig};
use crate::knowledge_graph::GraphBuildConfig;
use crate::metrics::DEFAULT_CONTRADICTION_THRESHOLD;
use crate::reasoning::{default_alias_table, AskOptions, RelationAliases, DEFAULT_FUZZY_THRESHOLD};
use crate::vector_store::{DEFAULT_DIM, DEFAULT_TOP_K};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub matching: MatchingConfig,
    pub retrieval: RetrievalConfig,
    pub generation: GenerationParams,
    pub generator: GeneratorConfig,
    pub entailment: EntailmentConfig,
    pub sts: StsConfig,
    pub kg: KgConfig,
    pub split: SplitConfig,
    pub transe: TrainConfig,
    pub eval: EvalConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchingConfig {
    pub fuzzy_threshold: f64,
    /// Question phrase → relation name. Replaces the built-in table when
    /// non-empty.
    pub aliases: BTreeMap<String, String>,
    /// Extra phrases merged over the alias table.
    pub extra_aliases: BTreeMap<String, String>,
}

impl Default for MatchingConfig {
    fn default() -> Self {
        Self {
            fuzzy_threshold: DEFAULT_FUZZY_THRESHOLD,
            aliases: BTreeMap::new(),
            extra_aliases: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalConfig {
    pub k: usize,
    pub dim: usize,
    pub embedder: EmbedderConfig,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_TOP_K,
            dim: DEFAULT_DIM,
            embedder: EmbedderConfig::Hashing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EmbedderConfig {
    /// The built-in feature-hashing embedder.
    #[default]
    Hashing,
    Subprocess {
        command: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorConfig {
    Fixture {
        path: PathBuf,
    },
    Subprocess {
        command: Vec<String>,
    },
    Http {
        url: String,
    },
    #[default]
    Unset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntailmentConfig {
    pub threshold: f64,
    pub nli: NliConfig,
}

impl Default for EntailmentConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_CONTRADICTION_THRESHOLD,
            nli: NliConfig::Unset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NliConfig {
    Stub {
        path: PathBuf,
    },
    Subprocess {
        command: Vec<String>,
    },
    #[default]
    Unset,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StsConfig {
    /// Five times the embedding cosine.
    #[default]
    Embedding,
    Subprocess {
        command: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KgConfig {
    #[serde(flatten)]
    pub build: GraphBuildConfig,
    pub synonym_expansion: bool,
    /// Use every relation of the matched disease when no relation phrase is
    /// found in the question.
    pub all_relations_when_unmatched: bool,
}

impl Default for KgConfig {
    fn default() -> Self {
        Self {
            build: GraphBuildConfig::default(),
            synonym_expansion: true,
            all_relations_when_unmatched: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[derive(Default)]
pub struct SplitConfig {
    #[serde(flatten)]
    pub ratios: SplitRatios,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub metrics: Vec<String>,
    pub max_words: usize,
    pub mode: LoadMode,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            metrics: ["rouge_l", "bertscore", "sts", "flesch", "contradiction"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            max_words: 150,
            mode: LoadMode::Strict,
        }
    }
}

impl Config {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// The alias table in effect, built against the configured relation set.
    pub fn relation_aliases(&self) -> RelationAliases {
        let mut table = if self.matching.aliases.is_empty() {
            default_alias_table()
        } else {
            self.matching.aliases.clone()
        };
        table.extend(self.matching.extra_aliases.clone());
        RelationAliases::new(&table, &self.kg.build.relations)
    }

    pub fn ask_options(&self) -> AskOptions {
        AskOptions {
            params: self.generation,
            k: self.retrieval.k,
            fuzzy_threshold: self.matching.fuzzy_threshold,
            synonym_expansion: self.kg.synonym_expansion,
            all_relations_when_unmatched: self.kg.all_relations_when_unmatched,
            ..AskOptions::default()
        }
    }
}
