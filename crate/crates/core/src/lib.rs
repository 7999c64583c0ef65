pub mod bench;
pub mod error;
pub mod kernel;
pub mod network;
pub mod replacement;
pub mod team;
pub mod wire;
