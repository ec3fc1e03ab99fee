pub mod field;
pub mod grid;
pub mod solvers;
pub mod flow;
pub mod bench;
pub mod cases;
pub mod cli;
pub mod config;
pub mod io;
pub mod sim;
