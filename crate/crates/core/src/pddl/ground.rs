use std::collections::{BTreeSet, HashMap, HashSet};

use super::{Domain, GroundAtom, PddlError, PlanStep, State, Task};

/// A fully instantiated action over atom indices of its `GroundedProblem`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundAction {
    pub schema: String,
    pub args: Vec<String>,
    pub pre: Vec<u32>,
    pub add: Vec<u32>,
    pub del: Vec<u32>,
}

impl GroundAction {
    pub fn step(&self) -> PlanStep {
        PlanStep {
            action: self.schema.clone(),
            args: self.args.clone(),
        }
    }
}

/// The propositional form of a task.
///
/// Only fluent atoms (and goal atoms) get an index; static atoms are checked
/// during grounding and compiled out of action preconditions.
#[derive(Debug, Clone)]
pub struct GroundedProblem {
    pub atoms: Vec<GroundAtom>,
    pub init: State,
    pub goal: Vec<u32>,
    pub actions: Vec<GroundAction>,
    pub static_atoms: BTreeSet<GroundAtom>,
    index: HashMap<GroundAtom, u32>,
}

impl GroundedProblem {
    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn atom_index(&self, atom: &GroundAtom) -> Option<u32> {
        self.index.get(atom).copied()
    }

    pub fn applicable(&self, state: &State, action: &GroundAction) -> bool {
        state.contains_all(&action.pre)
    }

    /// `(s \ del) ∪ add`, or an error naming the first missing precondition.
    pub fn apply(&self, state: &State, action: &GroundAction) -> Result<State, PddlError> {
        if let Some(&missing) = action.pre.iter().find(|&&p| !state.contains(p)) {
            return Err(PddlError::Inapplicable {
                action: action.step().to_string(),
                missing: self.atoms[missing as usize].clone(),
            });
        }
        Ok(self.successor(state, action))
    }

    /// Applies `action` without checking its preconditions.
    #[inline]
    pub fn successor(&self, state: &State, action: &GroundAction) -> State {
        let mut next = state.clone();
        for &d in &action.del {
            next.remove(d);
        }
        for &a in &action.add {
            next.insert(a);
        }
        next
    }

    pub fn is_goal(&self, state: &State) -> bool {
        state.contains_all(&self.goal)
    }

    /// The state as a set of atoms, static atoms included.
    pub fn atoms_of(&self, state: &State) -> BTreeSet<GroundAtom> {
        state
            .iter()
            .map(|i| self.atoms[i as usize].clone())
            .chain(self.static_atoms.iter().cloned())
            .collect()
    }

    /// Finds the ground action matching a plan step.
    pub fn find_action(&self, step: &PlanStep) -> Option<usize> {
        self.actions
            .binary_search_by(|a| {
                (a.schema.as_str(), &a.args[..]).cmp(&(step.action.as_str(), &step.args[..]))
            })
            .ok()
    }
}

/// Grounds every type-correct action instance whose static preconditions hold
/// in the initial state.
pub fn ground(domain: &Domain, task: &Task) -> Result<GroundedProblem, PddlError> {
    ground_within(domain, task, || false).map(|g| g.expect("never stopped"))
}

/// Like [`ground`], but polls `should_stop` periodically and returns `Ok(None)`
/// once it reports true.
pub fn ground_within(
    domain: &Domain,
    task: &Task,
    mut should_stop: impl FnMut() -> bool,
) -> Result<Option<GroundedProblem>, PddlError> {
    task.check(domain)?;
    let statics = domain.static_predicates();

    let mut pred_names: Vec<&str> = domain.predicates.iter().map(|p| p.name.as_str()).collect();
    pred_names.sort_unstable();
    let pred_id = |name: &str| pred_names.binary_search(&name).expect("checked") as u64;
    let entity_id =
        |name: &str| task.entities.binary_search_by(|e| e.name.as_str().cmp(name)).expect("checked") as u64;
    let key = |pred: u64, args: &[u64]| -> u64 {
        let a0 = args.first().map_or(0, |a| a + 1);
        let a1 = args.get(1).map_or(0, |a| a + 1);
        (pred << 48) | (a0 << 24) | a1
    };
    let atom_key = |a: &GroundAtom| {
        let args: Vec<u64> = a.args.iter().map(|x| entity_id(x)).collect();
        key(pred_id(&a.predicate), &args)
    };

    let mut static_true: HashSet<u64> = HashSet::new();
    let mut static_atoms = BTreeSet::new();
    let mut universe: Vec<u64> = Vec::new();
    let mut init_keys = Vec::new();
    for a in &task.init {
        if statics.contains(a.predicate.as_str()) {
            static_true.insert(atom_key(a));
            static_atoms.insert(a.clone());
        } else {
            init_keys.push(atom_key(a));
        }
    }
    let mut goal_keys = Vec::new();
    for a in &task.goal {
        let k = atom_key(a);
        if !statics.contains(a.predicate.as_str()) || !static_true.contains(&k) {
            goal_keys.push(k);
        }
    }
    universe.extend(&init_keys);
    universe.extend(&goal_keys);

    let mut schemas: Vec<_> = domain.actions.iter().collect();
    schemas.sort_by(|a, b| a.name.cmp(&b.name));

    struct Template {
        pred: u64,
        slots: Vec<usize>,
    }
    struct Raw {
        schema: usize,
        binding: Vec<u64>,
        pre: Vec<u64>,
        add: Vec<u64>,
        del: Vec<u64>,
    }
    let mut raw: Vec<Raw> = Vec::new();
    let mut polls = 0u32;

    for (si, schema) in schemas.iter().enumerate() {
        let template = |atoms: &[super::LiftedAtom]| -> Vec<Template> {
            atoms
                .iter()
                .map(|a| Template {
                    pred: pred_id(&a.predicate),
                    slots: a
                        .args
                        .iter()
                        .map(|v| schema.params.iter().position(|p| &p.name == v).expect("checked"))
                        .collect(),
                })
                .collect()
        };
        let n = schema.params.len();
        // Static checks run as soon as their last parameter is bound.
        let mut static_at_level: Vec<Vec<Template>> = (0..=n).map(|_| Vec::new()).collect();
        let mut fluent_pre = Vec::new();
        for (atom, t) in schema.pre.iter().zip(template(&schema.pre)) {
            if statics.contains(atom.predicate.as_str()) {
                let level = t.slots.iter().map(|s| s + 1).max().unwrap_or(0);
                static_at_level[level].push(t);
            } else {
                fluent_pre.push(t);
            }
        }
        let add = template(&schema.add);
        let del = template(&schema.del);
        let candidates: Vec<Vec<u64>> = schema
            .params
            .iter()
            .map(|p| {
                task.entities
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e.ty == p.ty)
                    .map(|(i, _)| i as u64)
                    .collect()
            })
            .collect();

        let holds = |ts: &[Template], binding: &[u64]| {
            ts.iter().all(|t| {
                let args: Vec<u64> = t.slots.iter().map(|&s| binding[s]).collect();
                static_true.contains(&key(t.pred, &args))
            })
        };
        if !holds(&static_at_level[0], &[]) {
            continue;
        }
        if candidates.iter().any(|c| c.is_empty()) {
            continue;
        }

        // Iterative DFS over bindings in lexicographic order.
        let mut binding = vec![0u64; n];
        let mut cursor = vec![0usize; n];
        let mut level = 0usize;
        if n == 0 {
            raw.push(Raw {
                schema: si,
                binding: Vec::new(),
                pre: fluent_pre.iter().map(|t| key(t.pred, &[])).collect(),
                add: add.iter().map(|t| key(t.pred, &[])).collect(),
                del: del.iter().map(|t| key(t.pred, &[])).collect(),
            });
            continue;
        }
        loop {
            polls += 1;
            if polls % 1024 == 0 && should_stop() {
                return Ok(None);
            }
            if cursor[level] == candidates[level].len() {
                cursor[level] = 0;
                if level == 0 {
                    break;
                }
                level -= 1;
                cursor[level] += 1;
                continue;
            }
            binding[level] = candidates[level][cursor[level]];
            if !holds(&static_at_level[level + 1], &binding) {
                cursor[level] += 1;
                continue;
            }
            if level + 1 < n {
                level += 1;
                continue;
            }
            let inst = |ts: &[Template]| -> Vec<u64> {
                ts.iter()
                    .map(|t| {
                        let args: Vec<u64> = t.slots.iter().map(|&s| binding[s]).collect();
                        key(t.pred, &args)
                    })
                    .collect()
            };
            raw.push(Raw {
                schema: si,
                binding: binding.clone(),
                pre: inst(&fluent_pre),
                add: inst(&add),
                del: inst(&del),
            });
            cursor[level] += 1;
        }
    }

    for r in &raw {
        universe.extend(&r.pre);
        universe.extend(&r.add);
        universe.extend(&r.del);
    }
    universe.sort_unstable();
    universe.dedup();
    let idx = |k: &u64| universe.binary_search(k).expect("in universe") as u32;
    let to_indices = |ks: &[u64]| -> Vec<u32> {
        let mut v: Vec<u32> = ks.iter().map(idx).collect();
        v.sort_unstable();
        v.dedup();
        v
    };

    let sorted_preds: Vec<&str> = pred_names.clone();
    let atoms: Vec<GroundAtom> = universe
        .iter()
        .map(|&k| {
            let pred = sorted_preds[(k >> 48) as usize];
            let arity = domain.predicate(pred).expect("declared").arity();
            let slots = [(k >> 24) & 0xFF_FFFF, k & 0xFF_FFFF];
            GroundAtom {
                predicate: pred.to_string(),
                args: slots[..arity]
                    .iter()
                    .map(|&s| task.entities[(s - 1) as usize].name.clone())
                    .collect(),
            }
        })
        .collect();
    let index = atoms
        .iter()
        .enumerate()
        .map(|(i, a)| (a.clone(), i as u32))
        .collect();

    let actions = raw
        .into_iter()
        .map(|r| {
            let add = to_indices(&r.add);
            let mut del = to_indices(&r.del);
            del.retain(|d| add.binary_search(d).is_err());
            GroundAction {
                schema: schemas[r.schema].name.clone(),
                args: r
                    .binding
                    .iter()
                    .map(|&e| task.entities[e as usize].name.clone())
                    .collect(),
                pre: to_indices(&r.pre),
                add,
                del,
            }
        })
        .collect();

    let num_atoms = atoms.len();
    Ok(Some(GroundedProblem {
        init: State::from_indices(num_atoms, init_keys.iter().map(idx)),
        goal: to_indices(&goal_keys),
        atoms,
        actions,
        static_atoms,
        index,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_domain, parse_task};

    const TOY: &str = "
        (define (domain toy)
          (:requirements :strips :typing)
          (:types cell)
          (:predicates (at ?c - cell) (adj ?a - cell ?b - cell) (lit))
          (:action go
            :parameters (?a ?b - cell)
            :precondition (and (at ?a) (adj ?a ?b))
            :effect (and (at ?b) (not (at ?a))))
          (:action flip
            :parameters ()
            :precondition (and)
            :effect (and (lit))))";

    fn toy() -> (Domain, Task) {
        let d = parse_domain(TOY).unwrap();
        let t = parse_task(
            "(define (problem p) (:domain toy) (:objects c1 c2 c3 - cell)
               (:init (at c1) (adj c1 c2) (adj c2 c1) (adj c2 c3)) (:goal (and (at c3))))",
            &d,
        )
        .unwrap();
        (d, t)
    }

    #[test]
    fn static_adjacency_prunes_bindings() {
        let (d, t) = toy();
        let g = ground(&d, &t).unwrap();
        let steps: Vec<String> = g.actions.iter().map(|a| a.step().to_string()).collect();
        assert_eq!(steps, vec!["(flip)", "(go c1 c2)", "(go c2 c1)", "(go c2 c3)"]);
        // adj is static: compiled out of preconditions and excluded from the universe.
        assert!(g.atom_index(&GroundAtom::new("adj", &["c1", "c2"])).is_none());
        assert_eq!(g.static_atoms.len(), 3);
        assert_eq!(g.actions[1].pre.len(), 1);
    }

    #[test]
    fn apply_follows_transition_formula() {
        let (d, t) = toy();
        let g = ground(&d, &t).unwrap();
        let go = &g.actions[g.find_action(&PlanStep::new("go", &["c1", "c2"])).unwrap()];
        let s1 = g.apply(&g.init, go).unwrap();
        assert!(s1.contains(g.atom_index(&GroundAtom::new("at", &["c2"])).unwrap()));
        assert!(!s1.contains(g.atom_index(&GroundAtom::new("at", &["c1"])).unwrap()));
        // Input untouched.
        assert!(g.init.contains(g.atom_index(&GroundAtom::new("at", &["c1"])).unwrap()));
        let err = g.apply(&g.init, &g.actions[3]).unwrap_err();
        assert_eq!(
            err,
            PddlError::Inapplicable {
                action: "(go c2 c3)".into(),
                missing: GroundAtom::new("at", &["c2"])
            }
        );
        let flip = &g.actions[0];
        assert!(g.applicable(&g.init, flip));
    }

    #[test]
    fn stops_when_asked() {
        let (d, t) = toy();
        // Too few bindings to reach a poll; grounding completes.
        assert!(ground_within(&d, &t, || true).unwrap().is_some());
    }
}
