use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Domain, GroundAtom, PddlError, Plan, Task};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Validation {
    Valid,
    Invalid { step: usize, reason: InvalidReason },
}

impl Validation {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validation::Valid)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InvalidReason {
    /// The step at `step` has an unsatisfied precondition.
    Inapplicable { missing: GroundAtom },
    /// Every step applied but the final state misses goal atoms; `step` is the plan length.
    GoalUnsatisfied { missing: Vec<GroundAtom> },
}

/// Checks a plan by direct simulation over atom sets, independently of the
/// grounder.
pub fn validate_plan(domain: &Domain, task: &Task, plan: &Plan) -> Result<Validation, PddlError> {
    let mut state: BTreeSet<GroundAtom> = task.init.clone();
    for (i, step) in plan.steps.iter().enumerate() {
        let schema = domain
            .action(&step.action)
            .ok_or_else(|| PddlError::UnknownAction(step.action.clone()))?;
        if schema.params.len() != step.args.len() {
            return Err(PddlError::Arity {
                name: step.action.clone(),
                expected: schema.params.len(),
                found: step.args.len(),
            });
        }
        for (arg, param) in step.args.iter().zip(&schema.params) {
            let e = task
                .entity(arg)
                .ok_or_else(|| PddlError::UnknownEntity(arg.clone()))?;
            if e.ty != param.ty {
                return Err(PddlError::TypeMismatch {
                    context: step.action.clone(),
                    entity: arg.clone(),
                    expected: param.ty.clone(),
                    found: e.ty.clone(),
                });
            }
        }
        for pre in &schema.pre {
            let atom = schema.instantiate(pre, &step.args);
            if !state.contains(&atom) {
                return Ok(Validation::Invalid {
                    step: i,
                    reason: InvalidReason::Inapplicable { missing: atom },
                });
            }
        }
        let adds: Vec<GroundAtom> = schema
            .add
            .iter()
            .map(|a| schema.instantiate(a, &step.args))
            .collect();
        for d in &schema.del {
            state.remove(&schema.instantiate(d, &step.args));
        }
        state.extend(adds);
    }
    let missing: Vec<GroundAtom> = task.goal.difference(&state).cloned().collect();
    if missing.is_empty() {
        Ok(Validation::Valid)
    } else {
        Ok(Validation::Invalid {
            step: plan.len(),
            reason: InvalidReason::GoalUnsatisfied { missing },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_domain, parse_task, PlanStep};

    fn toy() -> (Domain, Task) {
        let d = parse_domain(
            "(define (domain toy) (:types cell)
               (:predicates (at ?c - cell) (adj ?a - cell ?b - cell))
               (:action go :parameters (?a ?b - cell)
                 :precondition (and (at ?a) (adj ?a ?b))
                 :effect (and (at ?b) (not (at ?a)))))",
        )
        .unwrap();
        let t = parse_task(
            "(define (problem p) (:domain toy) (:objects c1 c2 c3 - cell)
               (:init (at c1) (adj c1 c2) (adj c2 c3)) (:goal (and (at c3))))",
            &d,
        )
        .unwrap();
        (d, t)
    }

    #[test]
    fn valid_and_invalid_plans() {
        let (d, t) = toy();
        let good = Plan::new(vec![
            PlanStep::new("go", &["c1", "c2"]),
            PlanStep::new("go", &["c2", "c3"]),
        ]);
        assert_eq!(validate_plan(&d, &t, &good).unwrap(), Validation::Valid);

        let short = Plan::new(vec![PlanStep::new("go", &["c1", "c2"])]);
        assert_eq!(
            validate_plan(&d, &t, &short).unwrap(),
            Validation::Invalid {
                step: 1,
                reason: InvalidReason::GoalUnsatisfied {
                    missing: vec![GroundAtom::new("at", &["c3"])]
                }
            }
        );

        let bad = Plan::new(vec![PlanStep::new("go", &["c2", "c3"])]);
        assert_eq!(
            validate_plan(&d, &t, &bad).unwrap(),
            Validation::Invalid {
                step: 0,
                reason: InvalidReason::Inapplicable {
                    missing: GroundAtom::new("at", &["c2"])
                }
            }
        );
    }

    #[test]
    fn unknown_entity_is_an_error() {
        let (d, t) = toy();
        let plan = Plan::new(vec![PlanStep::new("go", &["c1", "c9"])]);
        assert_eq!(
            validate_plan(&d, &t, &plan).unwrap_err(),
            PddlError::UnknownEntity("c9".into())
        );
    }

    #[test]
    fn empty_plan_valid_iff_goal_in_init() {
        let (d, mut t) = toy();
        assert!(!validate_plan(&d, &t, &Plan::default()).unwrap().is_valid());
        t.goal = [GroundAtom::new("at", &["c1"])].into_iter().collect();
        assert!(validate_plan(&d, &t, &Plan::default()).unwrap().is_valid());
    }
}
