pub mod cert;
pub mod formula;
pub mod generate;
pub mod harness;
pub mod pipeline;
pub mod prepro;
pub mod process;
pub mod sat;
pub mod solver;
