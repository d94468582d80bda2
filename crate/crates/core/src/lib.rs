pub mod causality;
pub mod controller;
pub mod corpus;
pub mod eval;
pub mod syntax;
pub mod reversible;
pub mod system;
