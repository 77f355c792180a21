pub mod error;
pub mod linalg;
pub mod scalars;
pub mod localfield;
pub mod rootsystem;
pub mod symplectic;
pub mod schrodinger;
pub mod ktypes;
pub mod cli;
pub mod oracles;
