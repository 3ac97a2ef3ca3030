pub mod bench;
pub mod gnn;
pub mod mazenamo;
pub mod pddl;
pub mod pipeline;
pub mod relax;
pub mod scenegraph;
pub mod search;
