//! Fixed-width graph encoding of a task's initial state and goal, and
//! importance labels derived from plans.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mazenamo::{preds, OBJECT, POS, ROBOT};
use crate::pddl::{ground, validate_plan, Domain, GroundAtom, PddlError, Plan, Task, Validation};
use crate::search::{solve_optimal, Deadline};

pub const TYPES: [&str; 3] = [ROBOT, OBJECT, POS];

pub const UNARY: [&str; 9] = [
    preds::IS_HEAVY,
    preds::IS_LIGHT,
    preds::ON_GROUND,
    preds::CLEAR,
    preds::HANDEMPTY,
    preds::DIR_IS_LEFT,
    preds::DIR_IS_RIGHT,
    preds::DIR_IS_UP,
    preds::DIR_IS_DOWN,
];

pub const BINARY: [&str; 8] = [
    preds::R_AT,
    preds::O_AT,
    preds::UP_TO,
    preds::DOWN_TO,
    preds::LEFT_TO,
    preds::RIGHT_TO,
    preds::UPON,
    preds::HOLDING,
];

/// Predicates that are known but carry no extra information for the model:
/// box occupancy is already visible through `oat` edges.
pub const IGNORED: [&str; 1] = [preds::IS_EMPTY];

pub const NODE_DIM: usize = TYPES.len() + 2 * UNARY.len();
pub const EDGE_DIM: usize = 2 * BINARY.len();

/// The feature layout, serialized alongside trained weights.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FeatureSpec {
    pub ordered_types: Vec<String>,
    pub ordered_unary_predicates: Vec<String>,
    pub ordered_binary_predicates: Vec<String>,
    pub node_dim: usize,
    pub edge_dim: usize,
}

impl FeatureSpec {
    pub fn current() -> Self {
        let own = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        FeatureSpec {
            ordered_types: own(&TYPES),
            ordered_unary_predicates: own(&UNARY),
            ordered_binary_predicates: own(&BINARY),
            node_dim: NODE_DIM,
            edge_dim: EDGE_DIM,
        }
    }

    /// Stable 64-bit FNV-1a digest of the layout.
    pub fn fingerprint(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let text = serde_json::to_string(self).expect("serializable");
        for b in text.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }

    pub fn type_index(ty: &str) -> Option<usize> {
        TYPES.iter().position(|&t| t == ty)
    }

    pub fn unary_index(pred: &str) -> Option<usize> {
        UNARY.iter().position(|&p| p == pred)
    }

    pub fn binary_index(pred: &str) -> Option<usize> {
        BINARY.iter().position(|&p| p == pred)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub src: u32,
    pub dst: u32,
    pub features: [u8; EDGE_DIM],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneGraph {
    /// Entity name per node, in task entity order.
    pub entities: Vec<String>,
    pub nodes: Vec<[u8; NODE_DIM]>,
    /// Sorted by (src, dst); no self-edges, no all-zero feature vectors.
    pub edges: Vec<Edge>,
}

impl SceneGraph {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_of(&self, entity: &str) -> Option<usize> {
        self.entities.iter().position(|e| e == entity)
    }

    pub fn edge(&self, src: usize, dst: usize) -> Option<&Edge> {
        self.edges
            .binary_search_by_key(&(src as u32, dst as u32), |e| (e.src, e.dst))
            .ok()
            .map(|i| &self.edges[i])
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("predicate `{0}` has no slot in the feature layout")]
    UnknownPredicate(String),
    #[error("type `{0}` has no slot in the feature layout")]
    UnknownType(String),
    #[error("atom {0} relates an entity to itself")]
    SelfRelation(String),
    #[error("plan is not valid for the task: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Pddl(#[from] PddlError),
}

/// Encodes `task`: one node per entity, one edge per ordered entity pair
/// related by some binary atom of the initial state or goal.
pub fn encode(task: &Task, domain: &Domain) -> Result<SceneGraph, SceneError> {
    task.check(domain)?;
    let index: BTreeMap<&str, usize> = task
        .entities
        .iter()
        .enumerate()
        .map(|(i, e)| (e.name.as_str(), i))
        .collect();
    let mut nodes = Vec::with_capacity(task.entities.len());
    for e in &task.entities {
        let mut f = [0u8; NODE_DIM];
        let t = FeatureSpec::type_index(&e.ty).ok_or_else(|| SceneError::UnknownType(e.ty.clone()))?;
        f[t] = 1;
        nodes.push(f);
    }
    let mut edges: BTreeMap<(u32, u32), [u8; EDGE_DIM]> = BTreeMap::new();
    for (atoms, unary_off, binary_off) in [
        (&task.init, TYPES.len(), 0),
        (&task.goal, TYPES.len() + UNARY.len(), BINARY.len()),
    ] {
        for atom in atoms {
            if IGNORED.contains(&atom.predicate.as_str()) {
                continue;
            }
            match atom.args.len() {
                1 => {
                    let k = FeatureSpec::unary_index(&atom.predicate)
                        .ok_or_else(|| SceneError::UnknownPredicate(atom.predicate.clone()))?;
                    nodes[index[atom.args[0].as_str()]][unary_off + k] = 1;
                }
                2 => {
                    let k = FeatureSpec::binary_index(&atom.predicate)
                        .ok_or_else(|| SceneError::UnknownPredicate(atom.predicate.clone()))?;
                    let (i, j) = (index[atom.args[0].as_str()], index[atom.args[1].as_str()]);
                    if i == j {
                        return Err(SceneError::SelfRelation(atom.to_string()));
                    }
                    edges.entry((i as u32, j as u32)).or_insert([0; EDGE_DIM])[binary_off + k] = 1;
                }
                _ => return Err(SceneError::UnknownPredicate(atom.predicate.clone())),
            }
        }
    }
    Ok(SceneGraph {
        entities: task.entities.iter().map(|e| e.name.clone()).collect(),
        nodes,
        edges: edges
            .into_iter()
            .map(|((src, dst), features)| Edge { src, dst, features })
            .collect(),
    })
}

/// Per-node importance label, in task entity order.
pub type LabelVector = Vec<u8>;

/// Marks every entity mentioned by a step of `plan` or by the goal.
/// The plan must be valid for `task`.
pub fn label(domain: &Domain, task: &Task, plan: &Plan) -> Result<LabelVector, SceneError> {
    match validate_plan(domain, task, plan)? {
        Validation::Valid => {}
        Validation::Invalid { step, reason } => {
            return Err(SceneError::InvalidPlan(format!("step {step}: {reason:?}")));
        }
    }
    let mut important = task.goal_entities();
    for step in &plan.steps {
        important.extend(step.args.iter().cloned());
    }
    Ok(task
        .entities
        .iter()
        .map(|e| important.contains(&e.name) as u8)
        .collect())
}

/// An encoded task with its labels, as stored in a training-set file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub graph: SceneGraph,
    pub labels: LabelVector,
}

/// Encodes `task` and labels it with an optimal plan. `Ok(None)` when the
/// optimal search is cut off by `max_expansions` or finds no plan.
pub fn optimal_example(
    domain: &Domain,
    id: &str,
    task: &Task,
    max_expansions: u64,
) -> Result<Option<Example>, SceneError> {
    let problem = ground(domain, task)?;
    let outcome = solve_optimal(&problem, &Deadline::unbounded().with_max_expansions(max_expansions));
    let Some(plan) = outcome.plan() else { return Ok(None) };
    Ok(Some(Example {
        id: id.into(),
        graph: encode(task, domain)?,
        labels: label(domain, task, plan)?,
    }))
}

#[derive(Serialize, Deserialize)]
struct StoredExample {
    graph: SceneGraph,
    labels: LabelVector,
}

/// Training-set file text: one entry per example, keyed by id.
pub fn examples_to_json(examples: &[Example]) -> String {
    let map: BTreeMap<&str, StoredExample> = examples
        .iter()
        .map(|e| {
            let stored = StoredExample {
                graph: e.graph.clone(),
                labels: e.labels.clone(),
            };
            (e.id.as_str(), stored)
        })
        .collect();
    serde_json::to_string(&map).expect("serializable") + "\n"
}

/// Parses a training-set file; examples come back in id order.
pub fn examples_from_json(text: &str) -> Result<Vec<Example>, serde_json::Error> {
    let map: BTreeMap<String, StoredExample> = serde_json::from_str(text)?;
    Ok(map
        .into_iter()
        .map(|(id, s)| Example {
            id,
            graph: s.graph,
            labels: s.labels,
        })
        .collect())
}

/// All binary atoms of the initial state and goal, for tests and tooling.
pub fn binary_atoms(task: &Task) -> impl Iterator<Item = &GroundAtom> {
    task.init
        .iter()
        .chain(task.goal.iter())
        .filter(|a| a.args.len() == 2)
}
