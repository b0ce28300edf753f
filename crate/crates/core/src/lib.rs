pub mod bench;
pub mod cli;
pub mod cone;
pub mod direction;
pub mod error;
pub mod expr;
pub mod oracle;
pub mod problem;
pub mod setorder;
pub mod solver;
