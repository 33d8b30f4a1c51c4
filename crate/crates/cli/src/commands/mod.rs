pub mod eval;
pub mod sweep;
pub mod tools;
pub mod train;
pub mod verify;
