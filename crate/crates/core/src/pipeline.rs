//! From a stored object to proofs and figures: registry resolution,
//! typechecking, expansion, and the backends.

use serde::Serialize;
use thiserror::Error;

use crate::backends::{
    algebraize, compile_construction, compile_goal, numeric_oracle, wu_prove, AlgebraError, ConstructError, ConstructionSequence, OracleReport, ProofResult,
    WuError, WuLimits,
};
use crate::expand::{expand, register_definition, shipped_registry, ExpandError, ExpandedStatement, Goal, Profile};
use crate::geolang::{parse, typecheck, Registry, TypedProgram};
use crate::store::{ObjectId, ObjectKind, Store, StoreError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("`{0}` has no formal representation")]
    NoFormal(ObjectId),
    #[error("syntax error: {0}")]
    Parse(String),
    #[error("type error: {0}")]
    Type(String),
    #[error(transparent)]
    Expand(#[from] ExpandError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Wu(#[from] WuError),
    #[error(transparent)]
    Construct(#[from] ConstructError),
    #[error("no goal matches direction `{0}`")]
    Direction(String),
}

/// A registry resolved against a store.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub registry: Registry,
    /// Store definitions that could not be registered, with the reason.
    pub skipped: Vec<(ObjectId, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GoalProof {
    pub goal: String,
    pub result: ProofResult,
}

impl Pipeline {
    /// The shipped registry extended with the store's Concept definitions.
    /// A symbol the shipped registry already defines keeps its shipped
    /// meaning. Definitions are registered once their dependencies are.
    pub fn for_store(store: &Store) -> Pipeline {
        let mut registry = shipped_registry();
        let mut skipped = Vec::new();
        let mut pending = Vec::new();
        for o in store.objects().filter(|o| o.kind == ObjectKind::Concept) {
            let (Some(id), Some(src)) = (&o.id, &o.formal) else { continue };
            let def = match parse(src).map(|p| p.definitions().next().cloned()) {
                Ok(Some(d)) => d,
                Ok(None) => continue,
                Err(e) => {
                    skipped.push((id.clone(), e.to_string()));
                    continue;
                }
            };
            if registry.contains(&def.symbol) {
                continue;
            }
            pending.push((id.clone(), def));
        }
        loop {
            let before = pending.len();
            let mut failed = Vec::new();
            for (id, def) in pending {
                if let Err(e) = register_definition(&def, &mut registry) {
                    failed.push((id, def, e.to_string()));
                }
            }
            pending = failed.iter().map(|(i, d, _)| (i.clone(), d.clone())).collect();
            if pending.len() == before || pending.is_empty() {
                skipped.extend(failed.into_iter().map(|(i, _, e)| (i, e)));
                break;
            }
        }
        Pipeline { registry, skipped }
    }

    pub fn typecheck(&self, src: &str) -> Result<TypedProgram, PipelineError> {
        let program = parse(src).map_err(|e| PipelineError::Parse(e.to_string()))?;
        typecheck(&program, &self.registry).map_err(|e| PipelineError::Type(e.to_string()))
    }

    pub fn expand(&self, src: &str, profile: &Profile) -> Result<ExpandedStatement, PipelineError> {
        Ok(expand(&self.typecheck(src)?, &self.registry, profile)?)
    }

    /// Goals whose label is `direction` or starts with `direction.`;
    /// every goal when `direction` is `None` or `both`.
    pub fn goals(&self, src: &str, direction: Option<&str>) -> Result<Vec<Goal>, PipelineError> {
        let goals = self.expand(src, &Profile::prover_core())?.split()?;
        let Some(d) = direction.filter(|d| *d != "both") else { return Ok(goals) };
        let picked: Vec<Goal> = goals.into_iter().filter(|g| g.label == d || g.label.strip_prefix(d).is_some_and(|r| r.starts_with('.'))).collect();
        if picked.is_empty() {
            return Err(PipelineError::Direction(d.to_string()));
        }
        Ok(picked)
    }

    pub fn prove(&self, src: &str, direction: Option<&str>, limits: &WuLimits) -> Result<Vec<GoalProof>, PipelineError> {
        self.goals(src, direction)?
            .into_iter()
            .map(|g| {
                let form = algebraize(&g.statement)?;
                Ok(GoalProof { goal: g.label, result: wu_prove(&form, limits)? })
            })
            .collect()
    }

    /// The construction of the first goal, for drawing. Derived terms are
    /// unfolded to auxiliary objects, which the compiler turns into
    /// constructor steps where it recognizes their origin.
    pub fn figure(&self, src: &str) -> Result<ConstructionSequence, PipelineError> {
        Ok(compile_construction(&self.expand(src, &Profile::prover_core())?)?)
    }

    /// One construction per goal, with unmatched premises as checks.
    pub fn goal_figures(&self, src: &str, direction: Option<&str>) -> Result<Vec<(String, ConstructionSequence)>, PipelineError> {
        let goals = self.expand(src, &Profile::prover_core())?.split()?;
        goals
            .into_iter()
            .filter(|g| direction.is_none_or(|d| d == "both" || g.label == d || g.label.starts_with(&format!("{d}."))))
            .map(|g| Ok((g.label, compile_goal(&g.statement)?)))
            .collect()
    }

    pub fn oracle(&self, src: &str, direction: Option<&str>, n: usize, seed: u64) -> Result<Vec<(String, OracleReport)>, PipelineError> {
        Ok(self.goal_figures(src, direction)?.into_iter().map(|(label, seq)| (label, numeric_oracle(&seq, n, seed))).collect())
    }
}

/// The formal source of a stored object.
pub fn formal_source<'a>(store: &'a Store, id: &ObjectId) -> Result<&'a str, PipelineError> {
    let obj = store.object(id).ok_or_else(|| StoreError::UnknownObject(id.to_string()))?;
    obj.formal.as_deref().ok_or_else(|| PipelineError::NoFormal(id.clone()))
}

/// The source a figure is drawn from: the diagram instruction when there
/// is one, else the formal representation.
pub fn figure_source<'a>(store: &'a Store, id: &ObjectId) -> Result<&'a str, PipelineError> {
    let obj = store.object(id).ok_or_else(|| StoreError::UnknownObject(id.to_string()))?;
    obj.diagram.as_deref().or(obj.formal.as_deref()).ok_or_else(|| PipelineError::NoFormal(id.clone()))
}

pub fn prove_object(store: &Store, id: &ObjectId, direction: Option<&str>, limits: &WuLimits) -> Result<Vec<GoalProof>, PipelineError> {
    Pipeline::for_store(store).prove(formal_source(store, id)?, direction, limits)
}

pub fn figure_object(store: &Store, id: &ObjectId) -> Result<ConstructionSequence, PipelineError> {
    Pipeline::for_store(store).figure(figure_source(store, id)?)
}
