pub mod counting;
pub mod dichotomy;
pub mod fixtures;
pub mod frames;
pub mod maltsev;
pub mod oracle;
pub mod relations;
pub mod strategy;
