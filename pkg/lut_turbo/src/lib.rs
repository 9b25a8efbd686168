pub mod apply;
pub mod cube;
