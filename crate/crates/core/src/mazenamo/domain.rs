//! The authored MazeNamo domain: 32 STRIPS operators over 18 predicates.

use crate::pddl::{ActionSchema, Domain, LiftedAtom, PredicateSchema, TypedParam};

pub const DOMAIN_NAME: &str = "mazenamo";

pub const ROBOT: &str = "robot";
pub const OBJECT: &str = "object";
pub const POS: &str = "pos";

/// Predicate names (lower case, as all identifiers are).
pub mod preds {
    pub const R_AT: &str = "rat";
    pub const O_AT: &str = "oat";
    pub const DIR_IS_LEFT: &str = "dirisleft";
    pub const DIR_IS_RIGHT: &str = "dirisright";
    pub const DIR_IS_UP: &str = "dirisup";
    pub const DIR_IS_DOWN: &str = "dirisdown";
    pub const UP_TO: &str = "upto";
    pub const DOWN_TO: &str = "downto";
    pub const LEFT_TO: &str = "leftto";
    pub const RIGHT_TO: &str = "rightto";
    pub const IS_HEAVY: &str = "isheavy";
    pub const IS_LIGHT: &str = "islight";
    pub const ON_GROUND: &str = "onground";
    pub const UPON: &str = "upon";
    pub const CLEAR: &str = "clear";
    pub const HANDEMPTY: &str = "handempty";
    pub const HOLDING: &str = "holding";
    pub const IS_EMPTY: &str = "isempty";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dir {
    Left,
    Right,
    Up,
    Down,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::Left, Dir::Right, Dir::Up, Dir::Down];

    pub fn name(self) -> &'static str {
        match self {
            Dir::Left => "left",
            Dir::Right => "right",
            Dir::Up => "up",
            Dir::Down => "down",
        }
    }

    /// `dirIs*` predicate for this orientation.
    pub fn facing_pred(self) -> &'static str {
        match self {
            Dir::Left => preds::DIR_IS_LEFT,
            Dir::Right => preds::DIR_IS_RIGHT,
            Dir::Up => preds::DIR_IS_UP,
            Dir::Down => preds::DIR_IS_DOWN,
        }
    }

    /// Adjacency predicate `d(a, b)`: `a` is the neighbour of `b` in direction `d`.
    pub fn adjacency_pred(self) -> &'static str {
        match self {
            Dir::Left => preds::LEFT_TO,
            Dir::Right => preds::RIGHT_TO,
            Dir::Up => preds::UP_TO,
            Dir::Down => preds::DOWN_TO,
        }
    }

    /// Counter-clockwise quarter turn.
    pub fn turned_left(self) -> Dir {
        match self {
            Dir::Up => Dir::Left,
            Dir::Left => Dir::Down,
            Dir::Down => Dir::Right,
            Dir::Right => Dir::Up,
        }
    }

    pub fn turned_right(self) -> Dir {
        self.turned_left().turned_left().turned_left()
    }

    /// (row, col) offset.
    pub fn delta(self) -> (i64, i64) {
        match self {
            Dir::Left => (0, -1),
            Dir::Right => (0, 1),
            Dir::Up => (-1, 0),
            Dir::Down => (1, 0),
        }
    }

    pub fn glyph(self) -> char {
        match self {
            Dir::Left => '<',
            Dir::Right => '>',
            Dir::Up => '^',
            Dir::Down => 'v',
        }
    }
}

fn at(p: &str, args: &[&str]) -> LiftedAtom {
    LiftedAtom::new(p, args)
}

fn params(list: &[(&str, &str)]) -> Vec<TypedParam> {
    list.iter().map(|(n, t)| TypedParam::new(*n, *t)).collect()
}

/// Builds the MazeNamo domain.
pub fn mazenamo_domain() -> Domain {
    use preds::*;
    let r = ("?r", ROBOT);
    let predicates = vec![
        PredicateSchema { name: R_AT.into(), params: params(&[r, ("?p", POS)]) },
        PredicateSchema { name: O_AT.into(), params: params(&[("?o", OBJECT), ("?p", POS)]) },
        PredicateSchema { name: DIR_IS_LEFT.into(), params: params(&[r]) },
        PredicateSchema { name: DIR_IS_RIGHT.into(), params: params(&[r]) },
        PredicateSchema { name: DIR_IS_UP.into(), params: params(&[r]) },
        PredicateSchema { name: DIR_IS_DOWN.into(), params: params(&[r]) },
        PredicateSchema { name: UP_TO.into(), params: params(&[("?p1", POS), ("?p2", POS)]) },
        PredicateSchema { name: DOWN_TO.into(), params: params(&[("?p1", POS), ("?p2", POS)]) },
        PredicateSchema { name: LEFT_TO.into(), params: params(&[("?p1", POS), ("?p2", POS)]) },
        PredicateSchema { name: RIGHT_TO.into(), params: params(&[("?p1", POS), ("?p2", POS)]) },
        PredicateSchema { name: IS_HEAVY.into(), params: params(&[("?o", OBJECT)]) },
        PredicateSchema { name: IS_LIGHT.into(), params: params(&[("?o", OBJECT)]) },
        PredicateSchema { name: ON_GROUND.into(), params: params(&[("?o", OBJECT)]) },
        PredicateSchema { name: UPON.into(), params: params(&[("?o1", OBJECT), ("?o2", OBJECT)]) },
        PredicateSchema { name: CLEAR.into(), params: params(&[("?o", OBJECT)]) },
        PredicateSchema { name: HANDEMPTY.into(), params: params(&[r]) },
        PredicateSchema { name: HOLDING.into(), params: params(&[r, ("?o", OBJECT)]) },
        PredicateSchema { name: IS_EMPTY.into(), params: params(&[("?p", POS)]) },
    ];

    let mut actions = Vec::new();
    for d in Dir::ALL {
        for (turn, to) in [("left", d.turned_left()), ("right", d.turned_right())] {
            actions.push(ActionSchema {
                name: format!("turn_{turn}_from_{}", d.name()),
                params: params(&[r]),
                pre: vec![at(d.facing_pred(), &["?r"])],
                add: vec![at(to.facing_pred(), &["?r"])],
                del: vec![at(d.facing_pred(), &["?r"])],
            });
        }
    }
    for d in Dir::ALL {
        let face = d.facing_pred();
        let adj = d.adjacency_pred();
        let dn = d.name();
        actions.push(ActionSchema {
            name: format!("move_{dn}"),
            params: params(&[r, ("?p1", POS), ("?p2", POS)]),
            pre: vec![
                at(R_AT, &["?r", "?p1"]),
                at(face, &["?r"]),
                at(adj, &["?p2", "?p1"]),
                at(IS_EMPTY, &["?p2"]),
            ],
            add: vec![at(R_AT, &["?r", "?p2"])],
            del: vec![at(R_AT, &["?r", "?p1"])],
        });
        actions.push(ActionSchema {
            name: format!("push_{dn}"),
            params: params(&[r, ("?p1", POS), ("?p2", POS), ("?p3", POS), ("?o", OBJECT)]),
            pre: vec![
                at(R_AT, &["?r", "?p1"]),
                at(face, &["?r"]),
                at(adj, &["?p2", "?p1"]),
                at(adj, &["?p3", "?p2"]),
                at(O_AT, &["?o", "?p2"]),
                at(ON_GROUND, &["?o"]),
                at(CLEAR, &["?o"]),
                at(IS_EMPTY, &["?p3"]),
                at(HANDEMPTY, &["?r"]),
            ],
            add: vec![
                at(R_AT, &["?r", "?p2"]),
                at(O_AT, &["?o", "?p3"]),
                at(IS_EMPTY, &["?p2"]),
            ],
            del: vec![
                at(R_AT, &["?r", "?p1"]),
                at(O_AT, &["?o", "?p2"]),
                at(IS_EMPTY, &["?p3"]),
            ],
        });
        actions.push(ActionSchema {
            name: format!("pickup_ground_{dn}"),
            params: params(&[r, ("?p1", POS), ("?p2", POS), ("?o", OBJECT)]),
            pre: vec![
                at(R_AT, &["?r", "?p1"]),
                at(HANDEMPTY, &["?r"]),
                at(face, &["?r"]),
                at(adj, &["?p2", "?p1"]),
                at(O_AT, &["?o", "?p2"]),
                at(IS_LIGHT, &["?o"]),
                at(ON_GROUND, &["?o"]),
                at(CLEAR, &["?o"]),
            ],
            add: vec![at(HOLDING, &["?r", "?o"]), at(IS_EMPTY, &["?p2"])],
            del: vec![
                at(HANDEMPTY, &["?r"]),
                at(O_AT, &["?o", "?p2"]),
                at(ON_GROUND, &["?o"]),
                at(CLEAR, &["?o"]),
            ],
        });
        actions.push(ActionSchema {
            name: format!("pickup_stacked_{dn}"),
            params: params(&[r, ("?p1", POS), ("?p2", POS), ("?o", OBJECT), ("?b", OBJECT)]),
            pre: vec![
                at(R_AT, &["?r", "?p1"]),
                at(HANDEMPTY, &["?r"]),
                at(face, &["?r"]),
                at(adj, &["?p2", "?p1"]),
                at(UPON, &["?o", "?b"]),
                at(O_AT, &["?o", "?p2"]),
                at(O_AT, &["?b", "?p2"]),
                at(IS_LIGHT, &["?o"]),
                at(CLEAR, &["?o"]),
            ],
            add: vec![at(HOLDING, &["?r", "?o"]), at(CLEAR, &["?b"])],
            del: vec![
                at(HANDEMPTY, &["?r"]),
                at(UPON, &["?o", "?b"]),
                at(O_AT, &["?o", "?p2"]),
                at(CLEAR, &["?o"]),
            ],
        });
        actions.push(ActionSchema {
            name: format!("place_ground_{dn}"),
            params: params(&[r, ("?p1", POS), ("?p2", POS), ("?o", OBJECT)]),
            pre: vec![
                at(R_AT, &["?r", "?p1"]),
                at(face, &["?r"]),
                at(HOLDING, &["?r", "?o"]),
                at(adj, &["?p2", "?p1"]),
                at(IS_EMPTY, &["?p2"]),
            ],
            add: vec![
                at(O_AT, &["?o", "?p2"]),
                at(ON_GROUND, &["?o"]),
                at(CLEAR, &["?o"]),
                at(HANDEMPTY, &["?r"]),
            ],
            del: vec![at(HOLDING, &["?r", "?o"]), at(IS_EMPTY, &["?p2"])],
        });
        actions.push(ActionSchema {
            name: format!("place_on_object_{dn}"),
            params: params(&[r, ("?p1", POS), ("?p2", POS), ("?o", OBJECT), ("?b", OBJECT)]),
            pre: vec![
                at(R_AT, &["?r", "?p1"]),
                at(face, &["?r"]),
                at(HOLDING, &["?r", "?o"]),
                at(adj, &["?p2", "?p1"]),
                at(O_AT, &["?b", "?p2"]),
                at(IS_HEAVY, &["?b"]),
                at(CLEAR, &["?b"]),
                at(ON_GROUND, &["?b"]),
            ],
            add: vec![
                at(UPON, &["?o", "?b"]),
                at(O_AT, &["?o", "?p2"]),
                at(CLEAR, &["?o"]),
                at(HANDEMPTY, &["?r"]),
            ],
            del: vec![at(HOLDING, &["?r", "?o"]), at(CLEAR, &["?b"])],
        });
    }
    actions.sort_by(|a, b| a.name.cmp(&b.name));

    let domain = Domain {
        name: DOMAIN_NAME.into(),
        requirements: vec![":strips".into(), ":typing".into()],
        types: vec![ROBOT.into(), OBJECT.into(), POS.into()],
        predicates,
        actions,
    };
    debug_assert!(domain.check().is_ok());
    domain
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{emit_domain, parse_domain};

    #[test]
    fn schema_counts() {
        let d = mazenamo_domain();
        assert_eq!(d.actions.len(), 32);
        assert_eq!(d.predicates.len(), 18);
        let count = |prefix: &str| d.actions.iter().filter(|a| a.name.starts_with(prefix)).count();
        assert_eq!(count("turn_"), 8);
        assert_eq!(count("move_"), 4);
        assert_eq!(count("push_"), 4);
        assert_eq!(count("pickup_"), 8);
        assert_eq!(count("place_"), 8);
    }

    #[test]
    fn effect_variables_are_parameters() {
        let d = mazenamo_domain();
        d.check().unwrap();
        for a in &d.actions {
            for atom in a.pre.iter().chain(&a.add).chain(&a.del) {
                for v in &atom.args {
                    assert!(a.params.iter().any(|p| &p.name == v), "{} {v}", a.name);
                }
            }
        }
    }

    #[test]
    fn round_trips_through_text() {
        let d = mazenamo_domain();
        assert_eq!(parse_domain(&emit_domain(&d)).unwrap(), d);
    }

    #[test]
    fn turns_compose() {
        for d in Dir::ALL {
            assert_eq!(d.turned_left().turned_right(), d);
            assert_eq!(d.turned_left().turned_left().turned_left().turned_left(), d);
        }
    }

    #[test]
    fn static_predicates_are_adjacency_and_category() {
        let d = mazenamo_domain();
        let statics = d.static_predicates();
        let expected = [preds::DOWN_TO, preds::IS_HEAVY, preds::IS_LIGHT, preds::LEFT_TO, preds::RIGHT_TO, preds::UP_TO];
        assert_eq!(statics.into_iter().collect::<Vec<_>>(), expected);
    }
}
