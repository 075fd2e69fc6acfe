pub mod config;
pub mod corpus;
pub mod encoder;
pub mod evaluator;
pub mod heads;
pub mod model;
pub mod numeric;
pub mod rephrase;
pub mod service;
pub mod span;
pub mod tracker;
pub mod trainer;

#[cfg(test)]
pub(crate) mod testutil;
