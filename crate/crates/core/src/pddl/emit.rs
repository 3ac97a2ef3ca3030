use std::fmt::Write;

use super::{Domain, LiftedAtom, Task, TypedParam};

pub fn emit_domain(d: &Domain) -> String {
    let mut out = String::new();
    writeln!(out, "(define (domain {})", d.name).unwrap();
    if !d.requirements.is_empty() {
        writeln!(out, "  (:requirements {})", d.requirements.join(" ")).unwrap();
    }
    if !d.types.is_empty() {
        writeln!(out, "  (:types {})", d.types.join(" ")).unwrap();
    }
    if !d.predicates.is_empty() {
        writeln!(out, "  (:predicates").unwrap();
        for p in &d.predicates {
            let params = typed(&p.params);
            if params.is_empty() {
                writeln!(out, "    ({})", p.name).unwrap();
            } else {
                writeln!(out, "    ({} {})", p.name, params).unwrap();
            }
        }
        writeln!(out, "  )").unwrap();
    }
    for a in &d.actions {
        writeln!(out, "  (:action {}", a.name).unwrap();
        writeln!(out, "    :parameters ({})", typed(&a.params)).unwrap();
        let pre: String = a.pre.iter().map(|x| format!(" {}", lifted(x))).collect();
        writeln!(out, "    :precondition (and{pre})").unwrap();
        let eff: String = a
            .add
            .iter()
            .map(|x| format!(" {}", lifted(x)))
            .chain(a.del.iter().map(|x| format!(" (not {})", lifted(x))))
            .collect();
        writeln!(out, "    :effect (and{eff}))").unwrap();
    }
    out.push_str(")\n");
    out
}

pub fn emit_task(t: &Task) -> String {
    let mut out = String::new();
    writeln!(out, "(define (problem {})", t.name).unwrap();
    writeln!(out, "  (:domain {})", t.domain).unwrap();
    writeln!(out, "  (:objects").unwrap();
    for e in &t.entities {
        writeln!(out, "    {} - {}", e.name, e.ty).unwrap();
    }
    writeln!(out, "  )").unwrap();
    writeln!(out, "  (:init").unwrap();
    for a in &t.init {
        writeln!(out, "    {a}").unwrap();
    }
    writeln!(out, "  )").unwrap();
    let goal: String = t.goal.iter().map(|a| format!(" {a}")).collect();
    writeln!(out, "  (:goal (and{goal}))").unwrap();
    out.push_str(")\n");
    out
}

fn typed(params: &[TypedParam]) -> String {
    params
        .iter()
        .map(|p| format!("{} - {}", p.name, p.ty))
        .collect::<Vec<_>>()
        .join(" ")
}

fn lifted(a: &LiftedAtom) -> String {
    let mut s = format!("({}", a.predicate);
    for arg in &a.args {
        s.push(' ');
        s.push_str(arg);
    }
    s.push(')');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_domain, parse_task, Entity};
    use std::collections::BTreeSet;

    #[test]
    fn empty_goal_emits_empty_conjunction() {
        let d = parse_domain("(define (domain e) (:types t) (:predicates (p ?x - t)))").unwrap();
        let t = Task::new(
            "p",
            "e",
            vec![Entity::new("a", "t")],
            BTreeSet::new(),
            BTreeSet::new(),
        );
        let text = emit_task(&t);
        assert!(text.contains("(:goal (and))"));
        assert_eq!(parse_task(&text, &d).unwrap(), t);
        assert_eq!(parse_domain(&emit_domain(&d)).unwrap(), d);
    }
}
