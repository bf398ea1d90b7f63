pub mod combing;
pub mod diagram;
pub mod dps;
pub mod families;
pub mod fillfuncs;
pub mod graph;
pub mod heisenberg;
pub mod presentation;
pub mod words;
