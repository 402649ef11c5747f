pub mod circuit;
pub mod cli;
pub mod compile;
pub mod corpus;
pub mod crn;
pub mod engine;
pub mod lowerbound;
pub mod verify;
