pub mod evaluate;
pub mod explain;
pub mod extract;
pub mod gensynth;
pub mod train;
