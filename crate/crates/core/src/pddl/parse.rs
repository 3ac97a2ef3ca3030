use std::collections::BTreeSet;

use super::sexpr::{read_all, read_one, syntax, SExpr};
use super::{
    ActionSchema, Domain, Entity, GroundAtom, LiftedAtom, PddlError, Plan, PlanStep,
    PredicateSchema, Task, TypedParam, SUPPORTED_REQUIREMENTS,
};

/// Parses a typed-STRIPS domain.
pub fn parse_domain(text: &str) -> Result<Domain, PddlError> {
    let root = read_one(text)?;
    let items = expect_define(&root)?;
    let name = section_name(&items[1], "domain")?;
    let mut domain = Domain {
        name,
        requirements: Vec::new(),
        types: Vec::new(),
        predicates: Vec::new(),
        actions: Vec::new(),
    };
    for section in &items[2..] {
        let body = section
            .as_list()
            .ok_or_else(|| syntax(section.pos(), "expected a section list"))?;
        match section.head() {
            Some(":requirements") => {
                for req in &body[1..] {
                    let r = atom(req)?;
                    if !SUPPORTED_REQUIREMENTS.contains(&r) {
                        return Err(PddlError::UnsupportedRequirement(r.to_string()));
                    }
                    domain.requirements.push(r.to_string());
                }
            }
            Some(":types") => {
                for t in &body[1..] {
                    let t = atom(t)?;
                    if t == "-" {
                        return Err(PddlError::Unsupported("type hierarchy".into()));
                    }
                    domain.types.push(t.to_string());
                }
            }
            Some(":predicates") => {
                for p in &body[1..] {
                    let list = p
                        .as_list()
                        .ok_or_else(|| syntax(p.pos(), "expected predicate declaration"))?;
                    let name = list
                        .first()
                        .ok_or_else(|| syntax(p.pos(), "empty predicate declaration"))?;
                    domain.predicates.push(PredicateSchema {
                        name: atom(name)?.to_string(),
                        params: typed_list(&list[1..])?
                            .into_iter()
                            .map(|(n, t)| TypedParam::new(n, t))
                            .collect(),
                    });
                }
            }
            Some(":action") => domain.actions.push(parse_action(body)?),
            Some(other) => return Err(PddlError::Unsupported(other.to_string())),
            None => return Err(syntax(section.pos(), "expected a section keyword")),
        }
    }
    domain.check()?;
    Ok(domain)
}

fn parse_action(body: &[SExpr]) -> Result<ActionSchema, PddlError> {
    let pos = body[0].pos();
    let name = atom(body.get(1).ok_or_else(|| syntax(pos, "action without a name"))?)?;
    let mut action = ActionSchema {
        name: name.to_string(),
        params: Vec::new(),
        pre: Vec::new(),
        add: Vec::new(),
        del: Vec::new(),
    };
    let mut rest = body[2..].iter();
    while let Some(key) = rest.next() {
        let value = rest
            .next()
            .ok_or_else(|| syntax(key.pos(), "keyword without a value"))?;
        match atom(key)? {
            ":parameters" => {
                let list = value
                    .as_list()
                    .ok_or_else(|| syntax(value.pos(), "expected parameter list"))?;
                action.params = typed_list(list)?
                    .into_iter()
                    .map(|(n, t)| TypedParam::new(n, t))
                    .collect();
            }
            ":precondition" => {
                for lit in conjunction(value)? {
                    match lit.head() {
                        Some("not") => {
                            return Err(PddlError::Unsupported("negative precondition".into()))
                        }
                        _ => action.pre.push(lifted_atom(lit)?),
                    }
                }
            }
            ":effect" => {
                for lit in conjunction(value)? {
                    if lit.head() == Some("not") {
                        let inner = lit.as_list().unwrap();
                        if inner.len() != 2 {
                            return Err(syntax(lit.pos(), "`not` takes one atom"));
                        }
                        action.del.push(lifted_atom(&inner[1])?);
                    } else {
                        action.add.push(lifted_atom(lit)?);
                    }
                }
            }
            other => return Err(PddlError::Unsupported(other.to_string())),
        }
    }
    Ok(action)
}

/// Parses a problem file against an already-parsed domain.
pub fn parse_task(text: &str, domain: &Domain) -> Result<Task, PddlError> {
    let root = read_one(text)?;
    let items = expect_define(&root)?;
    let name = section_name(&items[1], "problem")?;
    let mut domain_name = None;
    let mut entities = Vec::new();
    let mut init = BTreeSet::new();
    let mut goal = BTreeSet::new();
    for section in &items[2..] {
        let body = section
            .as_list()
            .ok_or_else(|| syntax(section.pos(), "expected a section list"))?;
        match section.head() {
            Some(":domain") => {
                let d = body
                    .get(1)
                    .ok_or_else(|| syntax(section.pos(), "missing domain name"))?;
                domain_name = Some(atom(d)?.to_string());
            }
            Some(":objects") => {
                for (n, t) in typed_list(&body[1..])? {
                    if entities.iter().any(|e: &Entity| e.name == n) {
                        return Err(PddlError::Duplicate(n));
                    }
                    entities.push(Entity::new(n, t));
                }
            }
            Some(":init") => {
                for a in &body[1..] {
                    init.insert(ground_atom(a)?);
                }
            }
            Some(":goal") => {
                let value = body
                    .get(1)
                    .ok_or_else(|| syntax(section.pos(), "missing goal"))?;
                for lit in conjunction(value)? {
                    if lit.head() == Some("not") {
                        return Err(PddlError::Unsupported("negative goal".into()));
                    }
                    goal.insert(ground_atom(lit)?);
                }
            }
            Some(other) => return Err(PddlError::Unsupported(other.to_string())),
            None => return Err(syntax(section.pos(), "expected a section keyword")),
        }
    }
    let domain_name = domain_name.ok_or_else(|| syntax(root.pos(), "missing (:domain ...)"))?;
    let task = Task::new(name, domain_name, entities, init, goal);
    task.check(domain)?;
    Ok(task)
}

/// Parses a plan in the usual one-action-per-line form, `(move_up robot p1 p2)`.
pub fn parse_plan(text: &str) -> Result<Plan, PddlError> {
    let mut steps = Vec::new();
    for expr in read_all(text)? {
        let list = expr
            .as_list()
            .ok_or_else(|| syntax(expr.pos(), "expected a parenthesised action"))?;
        let (head, args) = list
            .split_first()
            .ok_or_else(|| syntax(expr.pos(), "empty action"))?;
        steps.push(PlanStep {
            action: atom(head)?.to_string(),
            args: args
                .iter()
                .map(|a| atom(a).map(str::to_string))
                .collect::<Result<_, _>>()?,
        });
    }
    Ok(Plan::new(steps))
}

fn expect_define(root: &SExpr) -> Result<&[SExpr], PddlError> {
    let items = root
        .as_list()
        .ok_or_else(|| syntax(root.pos(), "expected `(define ...)`"))?;
    if root.head() != Some("define") || items.len() < 2 {
        return Err(syntax(root.pos(), "expected `(define ...)`"));
    }
    Ok(items)
}

fn section_name(expr: &SExpr, keyword: &str) -> Result<String, PddlError> {
    match expr.as_list() {
        Some([k, name]) if k.as_atom() == Some(keyword) => Ok(atom(name)?.to_string()),
        _ => Err(syntax(expr.pos(), format!("expected `({keyword} <name>)`"))),
    }
}

fn atom(expr: &SExpr) -> Result<&str, PddlError> {
    expr.as_atom()
        .ok_or_else(|| syntax(expr.pos(), "expected an identifier"))
}

/// `a b - t c - u` → [(a,t), (b,t), (c,u)]. Trailing untyped names get `object`.
fn typed_list(items: &[SExpr]) -> Result<Vec<(String, String)>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut it = items.iter();
    while let Some(item) = it.next() {
        let s = atom(item)?;
        if s == "-" {
            let ty = it
                .next()
                .ok_or_else(|| syntax(item.pos(), "missing type after `-`"))?;
            if ty.head() == Some("either") {
                return Err(PddlError::Unsupported("either".into()));
            }
            let ty = atom(ty)?;
            if pending.is_empty() {
                return Err(syntax(item.pos(), "type without names"));
            }
            out.extend(pending.drain(..).map(|n| (n, ty.to_string())));
        } else {
            pending.push(s.to_string());
        }
    }
    out.extend(pending.into_iter().map(|n| (n, "object".to_string())));
    Ok(out)
}

/// Flattens `(and l1 l2 ...)`, a single literal, or `()` into a literal list.
fn conjunction(expr: &SExpr) -> Result<Vec<&SExpr>, PddlError> {
    let list = expr
        .as_list()
        .ok_or_else(|| syntax(expr.pos(), "expected a formula"))?;
    match expr.head() {
        None if list.is_empty() => Ok(Vec::new()),
        Some("and") => {
            let mut out = Vec::new();
            for sub in &list[1..] {
                if sub.head() == Some("and") {
                    out.extend(conjunction(sub)?);
                } else {
                    check_literal(sub)?;
                    out.push(sub);
                }
            }
            Ok(out)
        }
        _ => {
            check_literal(expr)?;
            Ok(vec![expr])
        }
    }
}

fn check_literal(expr: &SExpr) -> Result<(), PddlError> {
    match expr.head() {
        Some(k @ ("or" | "imply" | "exists" | "forall" | "when" | "=" | "increase")) => {
            Err(PddlError::Unsupported(k.to_string()))
        }
        Some(_) => Ok(()),
        None => Err(syntax(expr.pos(), "expected a literal")),
    }
}

fn lifted_atom(expr: &SExpr) -> Result<LiftedAtom, PddlError> {
    let (predicate, args) = atom_parts(expr)?;
    for a in &args {
        if !a.starts_with('?') {
            return Err(PddlError::Unsupported(format!("constant `{a}` in action schema")));
        }
    }
    Ok(LiftedAtom { predicate, args })
}

fn ground_atom(expr: &SExpr) -> Result<GroundAtom, PddlError> {
    let (predicate, args) = atom_parts(expr)?;
    Ok(GroundAtom { predicate, args })
}

fn atom_parts(expr: &SExpr) -> Result<(String, Vec<String>), PddlError> {
    let list = expr
        .as_list()
        .ok_or_else(|| syntax(expr.pos(), "expected an atom"))?;
    let (head, args) = list
        .split_first()
        .ok_or_else(|| syntax(expr.pos(), "empty atom"))?;
    let head = atom(head)?;
    if head == "not" {
        return Err(PddlError::Unsupported("negative literal".into()));
    }
    let args = args
        .iter()
        .map(|a| atom(a).map(str::to_string))
        .collect::<Result<_, _>>()?;
    Ok((head.to_string(), args))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "
        (define (domain toy)
          (:requirements :strips :typing)
          (:types cell)
          (:predicates (at ?c - cell) (adj ?a - cell ?b - cell))
          (:action go
            :parameters (?a ?b - cell)
            :precondition (and (at ?a) (adj ?a ?b))
            :effect (and (at ?b) (not (at ?a)))))";

    #[test]
    fn parses_toy_domain() {
        let d = parse_domain(TOY).unwrap();
        assert_eq!(d.name, "toy");
        assert_eq!(d.actions.len(), 1);
        assert_eq!(d.actions[0].params[1], TypedParam::new("?b", "cell"));
        assert_eq!(d.actions[0].del, vec![LiftedAtom::new("at", &["?a"])]);
    }

    #[test]
    fn zero_action_domain() {
        let d = parse_domain("(define (domain e) (:types t) (:predicates (p ?x - t)))").unwrap();
        assert!(d.actions.is_empty());
    }

    #[test]
    fn rejects_adl_requirement_by_name() {
        let err = parse_domain("(define (domain e) (:requirements :strips :adl))").unwrap_err();
        assert_eq!(err, PddlError::UnsupportedRequirement(":adl".into()));
    }

    #[test]
    fn rejects_conditional_effects() {
        let text = TOY.replace("(and (at ?b) (not (at ?a)))", "(when (at ?a) (at ?b))");
        assert_eq!(
            parse_domain(&text).unwrap_err(),
            PddlError::Unsupported("when".into())
        );
    }

    #[test]
    fn rejects_unbound_variable() {
        let text = TOY.replace("(not (at ?a))", "(not (at ?z))");
        assert!(matches!(
            parse_domain(&text),
            Err(PddlError::UnboundVariable { .. })
        ));
    }

    #[test]
    fn syntax_error_carries_position() {
        let err = parse_domain("(define (domain x)\n  (:types a)").unwrap_err();
        assert!(matches!(err, PddlError::Syntax { line: 1, col: 1, .. }));
    }

    #[test]
    fn parses_problem_and_checks_arity() {
        let d = parse_domain(TOY).unwrap();
        let t = parse_task(
            "(define (problem p) (:domain toy) (:objects c1 c2 - cell)
               (:init (at c1) (adj c1 c2)) (:goal (and (at c2))))",
            &d,
        )
        .unwrap();
        assert_eq!(t.entities.len(), 2);
        assert_eq!(t.goal.len(), 1);

        let err = parse_task(
            "(define (problem p) (:domain toy) (:objects c1 - cell) (:init (adj c1)) (:goal (at c1)))",
            &d,
        )
        .unwrap_err();
        assert_eq!(
            err,
            PddlError::Arity {
                name: "adj".into(),
                expected: 2,
                found: 1
            }
        );
    }

    #[test]
    fn empty_init_and_unknowns() {
        let d = parse_domain(TOY).unwrap();
        let t = parse_task(
            "(define (problem p) (:domain toy) (:objects c1 - cell) (:init) (:goal (and)))",
            &d,
        )
        .unwrap();
        assert!(t.init.is_empty() && t.goal.is_empty());
        let err = parse_task(
            "(define (problem p) (:domain toy) (:objects c1 - cell) (:init (at c9)) (:goal (and)))",
            &d,
        )
        .unwrap_err();
        assert_eq!(err, PddlError::UnknownEntity("c9".into()));
        let err = parse_task(
            "(define (problem p) (:domain toy) (:objects c1 - room) (:init) (:goal (and)))",
            &d,
        )
        .unwrap_err();
        assert_eq!(err, PddlError::UnknownType("room".into()));
        let err = parse_task(
            "(define (problem p) (:domain toy) (:objects c1 - cell) (:init (on c1)) (:goal (and)))",
            &d,
        )
        .unwrap_err();
        assert_eq!(err, PddlError::UnknownPredicate("on".into()));
    }

    #[test]
    fn parses_plan_text() {
        let plan = parse_plan("; cost = 2\n(go c1 c2)\n(GO c2 c3)\n").unwrap();
        assert_eq!(plan.steps[1], PlanStep::new("go", &["c2", "c3"]));
    }
}
