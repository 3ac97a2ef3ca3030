use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::domain::{preds, Dir, DOMAIN_NAME, OBJECT, POS, ROBOT};
use super::MazeError;
use crate::pddl::{Entity, GroundAtom, Task};

pub const ROBOT_NAME: &str = "robot";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Wall,
    Heavy,
    Light,
    /// A light box resting on a heavy box.
    LightOnHeavy,
    Free,
}

impl Cell {
    pub fn glyph(self) -> char {
        match self {
            Cell::Wall => '#',
            Cell::Heavy => 'H',
            Cell::Light => 'L',
            Cell::LightOnHeavy => 'l',
            Cell::Free => '.',
        }
    }

    pub fn from_glyph(c: char) -> Option<Cell> {
        Some(match c {
            '#' => Cell::Wall,
            'H' => Cell::Heavy,
            'L' => Cell::Light,
            'l' => Cell::LightOnHeavy,
            '.' => Cell::Free,
            _ => return None,
        })
    }
}

pub type Coord = (usize, usize);

/// An `n × n` maze with a walled border.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MazeGrid {
    pub n: usize,
    pub seed: u64,
    /// Row-major.
    pub cells: Vec<Cell>,
    pub robot: Coord,
    pub robot_dir: Dir,
    pub goal: Coord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GenConfig {
    pub n: usize,
    pub seed: u64,
    pub p_wall: f64,
    pub p_heavy: f64,
    pub p_light: f64,
    pub p_free: f64,
    /// Probability that a heavy cell carries a light box on top.
    #[serde(default)]
    pub p_stack_on_heavy: f64,
}

impl GenConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        GenConfig {
            n,
            seed,
            p_wall: 0.20,
            p_heavy: 0.10,
            p_light: 0.15,
            p_free: 0.55,
            p_stack_on_heavy: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), MazeError> {
        if self.n < 4 {
            return Err(MazeError::Config(format!("n must be at least 4, got {}", self.n)));
        }
        let ps = [self.p_wall, self.p_heavy, self.p_light, self.p_free];
        if ps.iter().any(|p| !(0.0..=1.0).contains(p)) || (ps.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(MazeError::Config(format!("cell probabilities {ps:?} must sum to 1")));
        }
        if !(0.0..=1.0).contains(&self.p_stack_on_heavy) {
            return Err(MazeError::Config("pStackOnHeavy must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Samples a maze: walled border, i.i.d. interior cells, then robot and goal
/// on distinct free cells. Deterministic in `cfg.seed`.
pub fn generate(cfg: &GenConfig) -> Result<MazeGrid, MazeError> {
    cfg.validate()?;
    let n = cfg.n;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut cells = vec![Cell::Wall; n * n];
    for r in 1..n - 1 {
        for c in 1..n - 1 {
            let u: f64 = rng.gen();
            let cell = if u < cfg.p_wall {
                Cell::Wall
            } else if u < cfg.p_wall + cfg.p_heavy {
                if cfg.p_stack_on_heavy > 0.0 && rng.gen::<f64>() < cfg.p_stack_on_heavy {
                    Cell::LightOnHeavy
                } else {
                    Cell::Heavy
                }
            } else if u < cfg.p_wall + cfg.p_heavy + cfg.p_light {
                Cell::Light
            } else {
                Cell::Free
            };
            cells[r * n + c] = cell;
        }
    }
    let mut free: Vec<Coord> = (0..n * n)
        .filter(|&i| cells[i] == Cell::Free)
        .map(|i| (i / n, i % n))
        .collect();
    if free.len() < 2 {
        return Err(MazeError::NoFreeCell { free: free.len() });
    }
    let robot = free.remove(rng.gen_range(0..free.len()));
    let goal = free[rng.gen_range(0..free.len())];
    let robot_dir = Dir::ALL[rng.gen_range(0..4)];
    Ok(MazeGrid {
        n,
        seed: cfg.seed,
        cells,
        robot,
        robot_dir,
        goal,
    })
}

pub fn pos_name((r, c): Coord) -> String {
    format!("p{r}_{c}")
}

/// Base box at a cell.
pub fn box_name((r, c): Coord) -> String {
    format!("o{r}_{c}")
}

/// Light box stacked on the base box of a cell.
pub fn stacked_box_name((r, c): Coord) -> String {
    format!("o{r}_{c}s")
}

pub fn parse_pos_name(name: &str) -> Option<Coord> {
    let (r, c) = name.strip_prefix('p')?.split_once('_')?;
    Some((r.parse().ok()?, c.parse().ok()?))
}

impl MazeGrid {
    pub fn cell(&self, (r, c): Coord) -> Cell {
        self.cells[r * self.n + c]
    }

    pub fn set(&mut self, (r, c): Coord, cell: Cell) {
        self.cells[r * self.n + c] = cell;
    }

    pub fn neighbour(&self, (r, c): Coord, d: Dir) -> Option<Coord> {
        let (dr, dc) = d.delta();
        let nr = r as i64 + dr;
        let nc = c as i64 + dc;
        if nr < 0 || nc < 0 || nr >= self.n as i64 || nc >= self.n as i64 {
            return None;
        }
        Some((nr as usize, nc as usize))
    }

    /// Border walls, robot and goal on distinct free cells.
    pub fn validate(&self) -> Result<(), MazeError> {
        let n = self.n;
        if self.cells.len() != n * n {
            return Err(MazeError::Config("cell count does not match n".into()));
        }
        for i in 0..n {
            for cell in [(0, i), (n - 1, i), (i, 0), (i, n - 1)] {
                if self.cell(cell) != Cell::Wall {
                    return Err(MazeError::Config(format!("border cell {cell:?} is not a wall")));
                }
            }
        }
        if self.cell(self.robot) != Cell::Free || self.cell(self.goal) != Cell::Free {
            return Err(MazeError::Config("robot and goal must be on free cells".into()));
        }
        if self.robot == self.goal {
            return Err(MazeError::Config("robot and goal must differ".into()));
        }
        Ok(())
    }

    pub fn task_name(&self) -> String {
        format!("mazenamo-n{}-s{}", self.n, self.seed)
    }

    /// Typed MazeNamo task for this grid. Walls get no entity.
    pub fn to_task(&self) -> Task {
        let n = self.n;
        let mut entities = vec![Entity::new(ROBOT_NAME, ROBOT)];
        let mut init = BTreeSet::new();
        let atom = |p: &str, args: &[&str]| GroundAtom::new(p, args);
        init.insert(atom(preds::R_AT, &[ROBOT_NAME, &pos_name(self.robot)]));
        init.insert(atom(self.robot_dir.facing_pred(), &[ROBOT_NAME]));
        init.insert(atom(preds::HANDEMPTY, &[ROBOT_NAME]));
        for r in 0..n {
            for c in 0..n {
                let here = (r, c);
                let cell = self.cell(here);
                if cell == Cell::Wall {
                    continue;
                }
                let p = pos_name(here);
                entities.push(Entity::new(&p, POS));
                for d in Dir::ALL {
                    if let Some(nb) = self.neighbour(here, d) {
                        if self.cell(nb) != Cell::Wall {
                            init.insert(atom(d.adjacency_pred(), &[&pos_name(nb), &p]));
                        }
                    }
                }
                match cell {
                    Cell::Free => {
                        init.insert(atom(preds::IS_EMPTY, &[&p]));
                    }
                    Cell::Heavy | Cell::Light | Cell::LightOnHeavy => {
                        let base = box_name(here);
                        entities.push(Entity::new(&base, OBJECT));
                        let kind = if cell == Cell::Light { preds::IS_LIGHT } else { preds::IS_HEAVY };
                        init.insert(atom(kind, &[&base]));
                        init.insert(atom(preds::O_AT, &[&base, &p]));
                        init.insert(atom(preds::ON_GROUND, &[&base]));
                        if cell == Cell::LightOnHeavy {
                            let top = stacked_box_name(here);
                            entities.push(Entity::new(&top, OBJECT));
                            init.insert(atom(preds::IS_LIGHT, &[&top]));
                            init.insert(atom(preds::O_AT, &[&top, &p]));
                            init.insert(atom(preds::UPON, &[&top, &base]));
                            init.insert(atom(preds::CLEAR, &[&top]));
                        } else {
                            init.insert(atom(preds::CLEAR, &[&base]));
                        }
                    }
                    Cell::Wall => unreachable!(),
                }
            }
        }
        let goal = [atom(preds::R_AT, &[ROBOT_NAME, &pos_name(self.goal)])]
            .into_iter()
            .collect();
        Task::new(self.task_name(), DOMAIN_NAME, entities, init, goal)
    }

    /// One glyph per cell, rows separated by newlines.
    pub fn render(&self) -> String {
        let mut out = String::with_capacity(self.n * (self.n + 1));
        for r in 0..self.n {
            for c in 0..self.n {
                let here = (r, c);
                let ch = if here == self.robot {
                    self.robot_dir.glyph()
                } else if here == self.goal {
                    'G'
                } else {
                    self.cell(here).glyph()
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }

    /// Parses the drawing produced by [`MazeGrid::render`].
    pub fn from_ascii(text: &str, seed: u64) -> Result<MazeGrid, MazeError> {
        let rows: Vec<&str> = text.lines().map(str::trim_end).filter(|l| !l.is_empty()).collect();
        let n = rows.len();
        let mut cells = Vec::with_capacity(n * n);
        let mut robot = None;
        let mut goal = None;
        for (r, row) in rows.iter().enumerate() {
            if row.chars().count() != n {
                return Err(MazeError::Config(format!("row {r} does not have {n} cells")));
            }
            for (c, ch) in row.chars().enumerate() {
                let cell = match ch {
                    '<' | '>' | '^' | 'v' => {
                        let dir = Dir::ALL.into_iter().find(|d| d.glyph() == ch).unwrap();
                        robot = Some(((r, c), dir));
                        Cell::Free
                    }
                    'G' => {
                        goal = Some((r, c));
                        Cell::Free
                    }
                    other => Cell::from_glyph(other)
                        .ok_or_else(|| MazeError::Config(format!("unknown glyph `{other}`")))?,
                };
                cells.push(cell);
            }
        }
        let ((robot, robot_dir), goal) = robot
            .zip(goal)
            .ok_or_else(|| MazeError::Config("drawing needs a robot and a goal".into()))?;
        let grid = MazeGrid {
            n,
            seed,
            cells,
            robot,
            robot_dir,
            goal,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn to_record(&self) -> InstanceRecord {
        InstanceRecord {
            id: self.task_name(),
            n: self.n,
            seed: self.seed,
            cells: self.cells.iter().map(|c| c.glyph()).collect(),
            robot: RobotRecord {
                cell: [self.robot.0, self.robot.1],
                dir: self.robot_dir,
            },
            goal: [self.goal.0, self.goal.1],
            level: None,
            ref_solve_time_sec: None,
        }
    }
}

/// Renders a MazeNamo state given as an atom set (static atoms included).
///
/// The grid size is recovered from position names; cells without a position
/// entity are walls.
pub fn render_state(task: &Task, atoms: &BTreeSet<GroundAtom>) -> String {
    let positions: Vec<Coord> = task
        .entities
        .iter()
        .filter(|e| e.ty == POS)
        .filter_map(|e| parse_pos_name(&e.name))
        .collect();
    let n = positions.iter().map(|&(r, c)| r.max(c)).max().map_or(0, |m| m + 2);
    let mut glyphs = vec!['#'; n * n];
    for &(r, c) in &positions {
        glyphs[r * n + c] = '.';
    }
    for g in &task.goal {
        if g.predicate == preds::R_AT {
            if let Some((r, c)) = parse_pos_name(&g.args[1]) {
                glyphs[r * n + c] = 'G';
            }
        }
    }
    let heavy: BTreeSet<&str> = atoms
        .iter()
        .filter(|a| a.predicate == preds::IS_HEAVY)
        .map(|a| a.args[0].as_str())
        .collect();
    let stacked: BTreeSet<&str> = atoms
        .iter()
        .filter(|a| a.predicate == preds::UPON)
        .map(|a| a.args[0].as_str())
        .collect();
    let mut boxes: BTreeMap<Coord, char> = BTreeMap::new();
    for a in atoms.iter().filter(|a| a.predicate == preds::O_AT) {
        let Some(cell) = parse_pos_name(&a.args[1]) else { continue };
        let o = a.args[0].as_str();
        let glyph = if stacked.contains(o) {
            'l'
        } else if heavy.contains(o) {
            'H'
        } else {
            'L'
        };
        let slot = boxes.entry(cell).or_insert(glyph);
        if glyph == 'l' {
            *slot = 'l';
        }
    }
    for ((r, c), g) in boxes {
        glyphs[r * n + c] = g;
    }
    let dir = Dir::ALL
        .into_iter()
        .find(|d| atoms.contains(&GroundAtom::new(d.facing_pred(), &[ROBOT_NAME])));
    for a in atoms.iter().filter(|a| a.predicate == preds::R_AT) {
        if let (Some((r, c)), Some(d)) = (parse_pos_name(&a.args[1]), dir) {
            glyphs[r * n + c] = d.glyph();
        }
    }
    let mut out = String::with_capacity(n * (n + 1));
    for row in glyphs.chunks(n.max(1)) {
        out.extend(row);
        out.push('\n');
    }
    out
}

/// Instance file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InstanceRecord {
    pub id: String,
    pub n: usize,
    pub seed: u64,
    /// Row-major cell glyphs (`#`, `H`, `L`, `l`, `.`).
    pub cells: String,
    pub robot: RobotRecord,
    pub goal: [usize; 2],
    pub level: Option<String>,
    pub ref_solve_time_sec: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotRecord {
    pub cell: [usize; 2],
    pub dir: Dir,
}

impl InstanceRecord {
    pub fn to_grid(&self) -> Result<MazeGrid, MazeError> {
        let cells = self
            .cells
            .chars()
            .map(|c| Cell::from_glyph(c).ok_or_else(|| MazeError::Config(format!("unknown glyph `{c}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        let grid = MazeGrid {
            n: self.n,
            seed: self.seed,
            cells,
            robot: (self.robot.cell[0], self.robot.cell[1]),
            robot_dir: self.robot.dir,
            goal: (self.goal[0], self.goal[1]),
        };
        grid.validate()?;
        Ok(grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mazenamo::mazenamo_domain;
    use crate::pddl::{emit_task, ground, parse_task};

    fn open_grid(n: usize) -> MazeGrid {
        let mut cells = vec![Cell::Wall; n * n];
        for r in 1..n - 1 {
            for c in 1..n - 1 {
                cells[r * n + c] = Cell::Free;
            }
        }
        MazeGrid {
            n,
            seed: 0,
            cells,
            robot: (1, 1),
            robot_dir: Dir::Right,
            goal: (n - 2, n - 2),
        }
    }

    #[test]
    fn generation_is_deterministic_and_walled() {
        let a = generate(&GenConfig::new(10, 7)).unwrap();
        let b = generate(&GenConfig::new(10, 7)).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
        assert_ne!(a, generate(&GenConfig::new(10, 8)).unwrap());
    }

    #[test]
    fn smallest_grid_has_four_interior_cells() {
        let mut cfg = GenConfig::new(4, 1);
        cfg.p_wall = 0.0;
        cfg.p_heavy = 0.0;
        cfg.p_light = 0.0;
        cfg.p_free = 1.0;
        let g = generate(&cfg).unwrap();
        let interior = g.cells.iter().filter(|&&c| c != Cell::Wall).count();
        assert_eq!(interior, 4);
        let drawing = g.render();
        assert_eq!(drawing.lines().next().unwrap(), "####");
        assert_eq!(drawing.lines().count(), 4);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(matches!(generate(&GenConfig::new(3, 0)), Err(MazeError::Config(_))));
        let mut cfg = GenConfig::new(6, 0);
        cfg.p_free = 0.9;
        assert!(matches!(generate(&cfg), Err(MazeError::Config(_))));
        let mut cfg = GenConfig::new(6, 0);
        cfg.p_wall = 1.0;
        cfg.p_free = 0.0;
        cfg.p_heavy = 0.0;
        cfg.p_light = 0.0;
        assert_eq!(generate(&cfg), Err(MazeError::NoFreeCell { free: 0 }));
    }

    #[test]
    fn empty_interior_encoding() {
        let g = open_grid(5);
        let t = g.to_task();
        let count = |ty: &str| t.entities.iter().filter(|e| e.ty == ty).count();
        assert_eq!(count(POS), 9);
        assert_eq!(count(OBJECT), 0);
        assert_eq!(count(ROBOT), 1);
        assert_eq!(t.goal.len(), 1);
        t.check(&mazenamo_domain()).unwrap();
    }

    #[test]
    fn heavy_cell_encoding() {
        let mut g = open_grid(5);
        g.set((2, 2), Cell::Heavy);
        let t = g.to_task();
        let (o, p) = (box_name((2, 2)), pos_name((2, 2)));
        for a in [
            GroundAtom::new(preds::IS_HEAVY, &[&o]),
            GroundAtom::new(preds::ON_GROUND, &[&o]),
            GroundAtom::new(preds::CLEAR, &[&o]),
            GroundAtom::new(preds::O_AT, &[&o, &p]),
        ] {
            assert!(t.init.contains(&a), "{a}");
        }
        assert!(!t.init.contains(&GroundAtom::new(preds::IS_EMPTY, &[&p])));
    }

    #[test]
    fn walls_have_no_entity_or_adjacency() {
        let mut g = open_grid(5);
        g.set((2, 2), Cell::Wall);
        let t = g.to_task();
        let p = pos_name((2, 2));
        assert!(t.entity(&p).is_none());
        assert!(t.init.iter().all(|a| !a.mentions(&p)));
    }

    #[test]
    fn render_matches_task_rendering() {
        for seed in 0..20 {
            let mut cfg = GenConfig::new(8, seed);
            cfg.p_stack_on_heavy = 0.5;
            let g = generate(&cfg).unwrap();
            let t = g.to_task();
            assert_eq!(render_state(&t, &t.init), g.render());
            assert_eq!(MazeGrid::from_ascii(&g.render(), seed).unwrap(), g);
            assert_eq!(g.to_record().to_grid().unwrap(), g);
        }
    }

    #[test]
    fn move_up_moves_glyph_one_row() {
        let mut g = open_grid(5);
        g.robot = (3, 2);
        g.robot_dir = Dir::Up;
        g.goal = (1, 1);
        let t = g.to_task();
        let d = mazenamo_domain();
        let gp = ground(&d, &t).unwrap();
        let step = crate::pddl::PlanStep::new("move_up", &["robot", "p3_2", "p2_2"]);
        let a = &gp.actions[gp.find_action(&step).unwrap()];
        let next = gp.apply(&gp.init, a).unwrap();
        let before = render_state(&t, &gp.atoms_of(&gp.init));
        let after = render_state(&t, &gp.atoms_of(&next));
        let row_of = |s: &str| s.lines().position(|l| l.contains('^')).unwrap();
        assert_eq!(row_of(&before), 3);
        assert_eq!(row_of(&after), 2);
    }

    #[test]
    fn generated_tasks_round_trip_as_pddl() {
        let d = mazenamo_domain();
        for seed in 0..10 {
            let t = generate(&GenConfig::new(10, seed)).unwrap().to_task();
            assert_eq!(parse_task(&emit_task(&t), &d).unwrap(), t);
        }
    }
}
