pub mod converge;
pub mod figure;
pub mod limits;
pub mod simulate;
