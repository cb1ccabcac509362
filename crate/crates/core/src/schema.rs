//! Schemas, scenarios and ground-truth mappings.
//!
//! A [`Scenario`] pairs a source and a target [`Schema`] with the mapping a
//! user expects. Scenarios are read from a small JSON format:
//!
//! ```json
//! {
//!   "name": "Person",
//!   "source": [{"id": "s1", "name": "firstName"}],
//!   "target": [{"id": "t1", "name": "fname"}],
//!   "expected": [["s1", "t1"]],
//!   "band": "medium"
//! }
//! ```
//!
//! Unknown keys are rejected. An optional `"note"` string may carry provenance
//! text for humans.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::similarity::{self, MeasureId};

/// Stable identifier of a schema element, unique within its schema.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementId(Arc<str>);

impl ElementId {
    pub fn new(id: impl AsRef<str>) -> Self {
        ElementId(Arc::from(id.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ElementId {
    fn from(s: &str) -> Self {
        ElementId::new(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Source,
    Target,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Source => Side::Target,
            Side::Target => Side::Source,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Source => f.write_str("source"),
            Side::Target => f.write_str("target"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemaElement {
    pub id: ElementId,
    pub name: String,
    pub side: Side,
}

/// One population of elements, all on the same side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema {
    label: String,
    side: Side,
    elements: Vec<SchemaElement>,
}

impl Schema {
    /// Builds a schema from `(id, name)` pairs, checking id uniqueness and
    /// non-blank names.
    pub fn new<I, A, B>(label: impl Into<String>, side: Side, elements: I) -> Result<Self, ScenarioError>
    where
        I: IntoIterator<Item = (A, B)>,
        A: AsRef<str>,
        B: Into<String>,
    {
        let field = side.to_string();
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (i, (id, name)) in elements.into_iter().enumerate() {
            let id = id.as_ref();
            let name = name.into();
            if id.trim().is_empty() {
                return Err(ScenarioError::validation(format!("{field}[{i}].id"), "id must not be empty"));
            }
            if name.trim().is_empty() {
                return Err(ScenarioError::validation(
                    format!("{field}[{i}].name"),
                    format!("element {id:?} has a blank name"),
                ));
            }
            if !seen.insert(id.to_owned()) {
                return Err(ScenarioError::validation(format!("{field}[{i}].id"), format!("duplicate id {id:?}")));
            }
            out.push(SchemaElement { id: ElementId::new(id), name, side });
        }
        if out.is_empty() {
            return Err(ScenarioError::validation(field, "schema has no elements"));
        }
        Ok(Schema { label: label.into(), side, elements: out })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn elements(&self) -> &[SchemaElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn get(&self, id: &ElementId) -> Option<&SchemaElement> {
        self.elements.iter().find(|e| &e.id == id)
    }

    pub fn position(&self, id: &ElementId) -> Option<usize> {
        self.elements.iter().position(|e| &e.id == id)
    }
}

/// A `(source id, target id)` correspondence.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Correspondence(pub ElementId, pub ElementId);

impl Correspondence {
    pub fn new(source: impl Into<ElementId>, target: impl Into<ElementId>) -> Self {
        Correspondence(source.into(), target.into())
    }

    pub fn source(&self) -> &ElementId {
        &self.0
    }

    pub fn target(&self) -> &ElementId {
        &self.1
    }
}

impl fmt::Display for Correspondence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.0, self.1)
    }
}

/// The 1:1 mapping a user expects between two schemas.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundTruthMapping {
    pairs: BTreeSet<Correspondence>,
}

impl GroundTruthMapping {
    /// Validates referential integrity and injectivity against both schemas.
    pub fn new(
        pairs: impl IntoIterator<Item = Correspondence>,
        source: &Schema,
        target: &Schema,
    ) -> Result<Self, ScenarioError> {
        let mut used_s = HashSet::new();
        let mut used_t = HashSet::new();
        let mut set = BTreeSet::new();
        for (i, pair) in pairs.into_iter().enumerate() {
            if source.get(pair.source()).is_none() {
                return Err(ScenarioError::validation(
                    format!("expected[{i}][0]"),
                    format!("unknown source id {:?}", pair.source().as_str()),
                ));
            }
            if target.get(pair.target()).is_none() {
                return Err(ScenarioError::validation(
                    format!("expected[{i}][1]"),
                    format!("unknown target id {:?}", pair.target().as_str()),
                ));
            }
            if !used_s.insert(pair.source().clone()) {
                return Err(ScenarioError::validation(
                    format!("expected[{i}][0]"),
                    format!("source id {:?} mapped twice", pair.source().as_str()),
                ));
            }
            if !used_t.insert(pair.target().clone()) {
                return Err(ScenarioError::validation(
                    format!("expected[{i}][1]"),
                    format!("target id {:?} mapped twice", pair.target().as_str()),
                ));
            }
            set.insert(pair);
        }
        Ok(GroundTruthMapping { pairs: set })
    }

    pub fn pairs(&self) -> &BTreeSet<Correspondence> {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, pair: &Correspondence) -> bool {
        self.pairs.contains(pair)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeterogeneityBand {
    Low,
    Medium,
    High,
}

impl HeterogeneityBand {
    /// Low ≤ 0.25 < Medium ≤ 0.50 < High.
    pub fn classify(index: f64) -> Self {
        if index <= 0.25 {
            HeterogeneityBand::Low
        } else if index <= 0.50 {
            HeterogeneityBand::Medium
        } else {
            HeterogeneityBand::High
        }
    }
}

impl fmt::Display for HeterogeneityBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeterogeneityBand::Low => f.write_str("low"),
            HeterogeneityBand::Medium => f.write_str("medium"),
            HeterogeneityBand::High => f.write_str("high"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub name: String,
    pub source: Schema,
    pub target: Schema,
    pub expected: GroundTruthMapping,
    pub band: HeterogeneityBand,
    pub note: Option<String>,
}

impl Scenario {
    pub fn new(
        name: impl Into<String>,
        source: Schema,
        target: Schema,
        expected: impl IntoIterator<Item = Correspondence>,
        band: HeterogeneityBand,
    ) -> Result<Self, ScenarioError> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(ScenarioError::validation("name", "scenario name must not be empty"));
        }
        if source.side() != Side::Source {
            return Err(ScenarioError::validation("source", "source schema must hold source-side elements"));
        }
        if target.side() != Side::Target {
            return Err(ScenarioError::validation("target", "target schema must hold target-side elements"));
        }
        let expected = GroundTruthMapping::new(expected, &source, &target)?;
        Ok(Scenario { name, source, target, expected, band, note: None })
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn schema(&self, side: Side) -> &Schema {
        match side {
            Side::Source => &self.source,
            Side::Target => &self.target,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(ScenarioError::Parse)?;
        file.try_into()
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&ScenarioFile::from(self)).expect("scenario serializes");
        text.push('\n');
        text
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
    Scenario::from_json(&text)
}

/// 1 − mean normalized Levenshtein similarity over the expected pairs.
pub fn heterogeneity_index(scenario: &Scenario) -> f64 {
    let pairs = scenario.expected.pairs();
    if pairs.is_empty() {
        return 0.0;
    }
    let total: f64 = pairs
        .iter()
        .map(|p| {
            let s = &scenario.source.get(p.source()).expect("validated").name;
            let t = &scenario.target.get(p.target()).expect("validated").name;
            similarity::score(MeasureId::LevenshteinNorm, &similarity::normalize(s), &similarity::normalize(t))
        })
        .sum();
    1.0 - total / pairs.len() as f64
}

const PERSON: &str = include_str!("../fixtures/person.scenario.json");
const ORDER: &str = include_str!("../fixtures/order.scenario.json");
const TRAVEL: &str = include_str!("../fixtures/travel.scenario.json");

/// The Person, Order and Travel benchmark scenarios, in that order.
pub fn builtin_fixtures() -> Vec<Scenario> {
    [PERSON, ORDER, TRAVEL].iter().map(|text| Scenario::from_json(text).expect("embedded fixture is valid")).collect()
}

/// Looks a built-in fixture up by case-insensitive name.
pub fn builtin_fixture(name: &str) -> Option<Scenario> {
    builtin_fixtures().into_iter().find(|s| s.name.eq_ignore_ascii_case(name))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ElementRecord {
    id: String,
    name: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    source: Vec<ElementRecord>,
    target: Vec<ElementRecord>,
    expected: Vec<(String, String)>,
    band: HeterogeneityBand,
}

impl TryFrom<ScenarioFile> for Scenario {
    type Error = ScenarioError;

    fn try_from(file: ScenarioFile) -> Result<Self, Self::Error> {
        let source = Schema::new(
            format!("{} source", file.name),
            Side::Source,
            file.source.into_iter().map(|e| (e.id, e.name)),
        )?;
        let target = Schema::new(
            format!("{} target", file.name),
            Side::Target,
            file.target.into_iter().map(|e| (e.id, e.name)),
        )?;
        let expected = file.expected.into_iter().map(|(s, t)| Correspondence::new(s.as_str(), t.as_str()));
        let scenario = Scenario::new(file.name, source, target, expected, file.band)?;
        Ok(Scenario { note: file.note, ..scenario })
    }
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        let records = |schema: &Schema| {
            schema.elements().iter().map(|e| ElementRecord { id: e.id.to_string(), name: e.name.clone() }).collect()
        };
        ScenarioFile {
            name: s.name.clone(),
            note: s.note.clone(),
            source: records(&s.source),
            target: records(&s.target),
            expected: s.expected.pairs().iter().map(|p| (p.source().to_string(), p.target().to_string())).collect(),
            band: s.band,
        }
    }
}
