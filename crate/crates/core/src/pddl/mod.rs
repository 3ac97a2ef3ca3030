//! Typed STRIPS: lifted domains, tasks, grounding, transitions and plan
//! validation.
//!
//! Identifiers are always lower case. Types are flat: an entity of type `t`
//! only binds parameters declared with type `t`.

mod emit;
mod ground;
mod parse;
pub mod sexpr;
mod state;
mod validate;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use emit::{emit_domain, emit_task};
pub use ground::{ground, ground_within, GroundAction, GroundedProblem};
pub use parse::{parse_domain, parse_plan, parse_task};
pub use state::State;
pub use validate::{validate_plan, InvalidReason, Validation};

/// Requirements accepted by the parser.
pub const SUPPORTED_REQUIREMENTS: [&str; 2] = [":strips", ":typing"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PddlError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unsupported requirement `{0}`")]
    UnsupportedRequirement(String),
    #[error("unsupported construct `{0}`")]
    Unsupported(String),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("`{name}` expects {expected} arguments, found {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("`{entity}` has type `{found}` but `{context}` expects `{expected}`")]
    TypeMismatch {
        context: String,
        entity: String,
        expected: String,
        found: String,
    },
    #[error("duplicate definition of `{0}`")]
    Duplicate(String),
    #[error("variable `{var}` in action `{action}` is not a parameter")]
    UnboundVariable { action: String, var: String },
    #[error("problem is for domain `{found}`, expected `{expected}`")]
    DomainMismatch { expected: String, found: String },
    #[error("action `{action}` is not applicable: missing {missing}")]
    Inapplicable { action: String, missing: GroundAtom },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TypedParam {
    pub name: String,
    pub ty: String,
}

impl TypedParam {
    pub fn new(name: impl Into<String>, ty: impl Into<String>) -> Self {
        TypedParam {
            name: name.into(),
            ty: ty.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PredicateSchema {
    pub name: String,
    pub params: Vec<TypedParam>,
}

impl PredicateSchema {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

/// An atom over action parameters, e.g. `(rat ?r ?p1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LiftedAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl LiftedAtom {
    pub fn new(predicate: &str, args: &[&str]) -> Self {
        LiftedAtom {
            predicate: predicate.to_string(),
            args: args.iter().map(|a| a.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<TypedParam>,
    pub pre: Vec<LiftedAtom>,
    pub add: Vec<LiftedAtom>,
    pub del: Vec<LiftedAtom>,
}

impl ActionSchema {
    fn param_index(&self, var: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == var)
    }

    /// Instantiates a lifted atom of this schema under a binding of its parameters.
    pub fn instantiate(&self, atom: &LiftedAtom, binding: &[String]) -> GroundAtom {
        GroundAtom {
            predicate: atom.predicate.clone(),
            args: atom
                .args
                .iter()
                .map(|v| binding[self.param_index(v).expect("checked at construction")].clone())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub name: String,
    pub requirements: Vec<String>,
    pub types: Vec<String>,
    pub predicates: Vec<PredicateSchema>,
    pub actions: Vec<ActionSchema>,
}

impl Domain {
    pub fn predicate(&self, name: &str) -> Option<&PredicateSchema> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&ActionSchema> {
        self.actions.iter().find(|a| a.name == name)
    }

    /// Predicates that no action adds or deletes.
    pub fn static_predicates(&self) -> BTreeSet<&str> {
        let fluent: BTreeSet<&str> = self
            .actions
            .iter()
            .flat_map(|a| a.add.iter().chain(&a.del))
            .map(|atom| atom.predicate.as_str())
            .collect();
        self.predicates
            .iter()
            .map(|p| p.name.as_str())
            .filter(|p| !fluent.contains(p))
            .collect()
    }

    /// Structural checks: declared types, predicate arities, bound variables,
    /// disjoint add/del lists.
    pub fn check(&self) -> Result<(), PddlError> {
        let mut seen = BTreeSet::new();
        for ty in &self.types {
            if !seen.insert(ty.as_str()) {
                return Err(PddlError::Duplicate(ty.clone()));
            }
        }
        let mut seen = BTreeSet::new();
        for p in &self.predicates {
            if !seen.insert(p.name.as_str()) {
                return Err(PddlError::Duplicate(p.name.clone()));
            }
            if p.arity() > 2 {
                return Err(PddlError::Unsupported(format!(
                    "predicate `{}` with arity {} (at most 2)",
                    p.name,
                    p.arity()
                )));
            }
            for param in &p.params {
                self.check_type(&param.ty)?;
            }
        }
        let mut seen = BTreeSet::new();
        for a in &self.actions {
            if !seen.insert(a.name.as_str()) {
                return Err(PddlError::Duplicate(a.name.clone()));
            }
            for param in &a.params {
                self.check_type(&param.ty)?;
            }
            for atom in a.pre.iter().chain(&a.add).chain(&a.del) {
                let schema = self
                    .predicate(&atom.predicate)
                    .ok_or_else(|| PddlError::UnknownPredicate(atom.predicate.clone()))?;
                if schema.arity() != atom.args.len() {
                    return Err(PddlError::Arity {
                        name: atom.predicate.clone(),
                        expected: schema.arity(),
                        found: atom.args.len(),
                    });
                }
                for (var, slot) in atom.args.iter().zip(&schema.params) {
                    let idx = a.param_index(var).ok_or_else(|| PddlError::UnboundVariable {
                        action: a.name.clone(),
                        var: var.clone(),
                    })?;
                    if a.params[idx].ty != slot.ty {
                        return Err(PddlError::TypeMismatch {
                            context: format!("{} in {}", atom.predicate, a.name),
                            entity: var.clone(),
                            expected: slot.ty.clone(),
                            found: a.params[idx].ty.clone(),
                        });
                    }
                }
            }
            if let Some(both) = a.add.iter().find(|x| a.del.contains(x)) {
                return Err(PddlError::Unsupported(format!(
                    "action `{}` both adds and deletes `{}`",
                    a.name, both.predicate
                )));
            }
        }
        Ok(())
    }

    fn check_type(&self, ty: &str) -> Result<(), PddlError> {
        if self.types.iter().any(|t| t == ty) {
            Ok(())
        } else {
            Err(PddlError::UnknownType(ty.to_string()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Entity {
    pub name: String,
    pub ty: String,
}

impl Entity {
    pub fn new(name: impl Into<String>, ty: impl Into<String>) -> Self {
        Entity {
            name: name.into(),
            ty: ty.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new(predicate: &str, args: &[&str]) -> Self {
        GroundAtom {
            predicate: predicate.to_string(),
            args: args.iter().map(|a| a.to_string()).collect(),
        }
    }

    pub fn mentions(&self, entity: &str) -> bool {
        self.args.iter().any(|a| a == entity)
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

/// A task instance: entities, initial state and goal.
///
/// Entities are kept sorted by name so that every derived artifact
/// (groundings, scene graphs, emitted text) has a canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub name: String,
    pub domain: String,
    pub entities: Vec<Entity>,
    pub init: BTreeSet<GroundAtom>,
    pub goal: BTreeSet<GroundAtom>,
}

impl Task {
    pub fn new(
        name: impl Into<String>,
        domain: impl Into<String>,
        mut entities: Vec<Entity>,
        init: BTreeSet<GroundAtom>,
        goal: BTreeSet<GroundAtom>,
    ) -> Self {
        entities.sort();
        entities.dedup();
        Task {
            name: name.into(),
            domain: domain.into(),
            entities,
            init,
            goal,
        }
    }

    pub fn entity(&self, name: &str) -> Option<&Entity> {
        self.entities
            .binary_search_by(|e| e.name.as_str().cmp(name))
            .ok()
            .map(|i| &self.entities[i])
    }

    /// Entity names mentioned by goal atoms.
    pub fn goal_entities(&self) -> BTreeSet<String> {
        self.goal.iter().flat_map(|a| a.args.iter().cloned()).collect()
    }

    /// Type-checks every atom against `domain`.
    pub fn check(&self, domain: &Domain) -> Result<(), PddlError> {
        if self.domain != domain.name {
            return Err(PddlError::DomainMismatch {
                expected: domain.name.clone(),
                found: self.domain.clone(),
            });
        }
        for w in self.entities.windows(2) {
            if w[0].name == w[1].name {
                return Err(PddlError::Duplicate(w[0].name.clone()));
            }
        }
        for e in &self.entities {
            domain.check_type(&e.ty)?;
        }
        for atom in self.init.iter().chain(&self.goal) {
            self.check_atom(domain, atom)?;
        }
        Ok(())
    }

    pub(crate) fn check_atom(&self, domain: &Domain, atom: &GroundAtom) -> Result<(), PddlError> {
        let schema = domain
            .predicate(&atom.predicate)
            .ok_or_else(|| PddlError::UnknownPredicate(atom.predicate.clone()))?;
        if schema.arity() != atom.args.len() {
            return Err(PddlError::Arity {
                name: atom.predicate.clone(),
                expected: schema.arity(),
                found: atom.args.len(),
            });
        }
        for (arg, slot) in atom.args.iter().zip(&schema.params) {
            let e = self
                .entity(arg)
                .ok_or_else(|| PddlError::UnknownEntity(arg.clone()))?;
            if e.ty != slot.ty {
                return Err(PddlError::TypeMismatch {
                    context: atom.predicate.clone(),
                    entity: arg.clone(),
                    expected: slot.ty.clone(),
                    found: e.ty.clone(),
                });
            }
        }
        Ok(())
    }
}

/// One plan step: an action schema name plus its argument entities.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlanStep {
    pub action: String,
    pub args: Vec<String>,
}

impl PlanStep {
    pub fn new(action: &str, args: &[&str]) -> Self {
        PlanStep {
            action: action.to_string(),
            args: args.iter().map(|a| a.to_string()).collect(),
        }
    }
}

impl fmt::Display for PlanStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.action)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
}

impl Plan {
    pub fn new(steps: Vec<PlanStep>) -> Self {
        Plan { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for step in &self.steps {
            writeln!(f, "{step}")?;
        }
        Ok(())
    }
}
