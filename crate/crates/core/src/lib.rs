pub mod backend;
pub mod corpus;
pub mod embedspace;
pub mod harness;
pub mod seed;
pub mod strategies;
pub mod synthetic;
pub mod textmetrics;
