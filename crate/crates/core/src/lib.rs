pub mod activation;
pub mod bench;
pub mod cli;
pub mod evaluation;
pub mod indicators;
pub mod lstm;
pub mod paired_ann;
pub mod signal;
pub mod tickdata;
