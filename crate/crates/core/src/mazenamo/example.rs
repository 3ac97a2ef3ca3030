use super::{box_name, pos_name, stacked_box_name, MazeGrid, ROBOT_NAME};
use crate::pddl::{Plan, PlanStep};

const DRAWING: &str = "\
######
###.##
#GLl##
###^.#
######
######
";

/// A heavy box carrying a light box blocks the way to the goal, with a second
/// light box between it and the goal. Returns the maze and its shortest plan:
/// lift the top box, set it aside, turn back and push the heavy box, lift the
/// second box, then walk into the goal.
pub fn stacked_blocker() -> (MazeGrid, Plan) {
    let grid = MazeGrid::from_ascii(DRAWING, 0).expect("drawing is valid");
    let p = |r, c| pos_name((r, c));
    let r = ROBOT_NAME.to_string();
    let step = |action: &str, args: Vec<String>| PlanStep {
        action: action.into(),
        args,
    };
    let plan = Plan::new(vec![
        step("pickup_stacked_up", vec![r.clone(), p(3, 3), p(2, 3), stacked_box_name((2, 3)), box_name((2, 3))]),
        step("turn_right_from_up", vec![r.clone()]),
        step("place_ground_right", vec![r.clone(), p(3, 3), p(3, 4), stacked_box_name((2, 3))]),
        step("turn_left_from_right", vec![r.clone()]),
        step("push_up", vec![r.clone(), p(3, 3), p(2, 3), p(1, 3), box_name((2, 3))]),
        step("turn_left_from_up", vec![r.clone()]),
        step("pickup_ground_left", vec![r.clone(), p(2, 3), p(2, 2), box_name((2, 2))]),
        step("move_left", vec![r.clone(), p(2, 3), p(2, 2)]),
        step("move_left", vec![r, p(2, 2), p(2, 1)]),
    ]);
    (grid, plan)
}
