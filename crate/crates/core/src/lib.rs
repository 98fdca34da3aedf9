//! Decision engine for migrating a web server to cloud infrastructure:
//! selects VM images and infrastructure services from a catalog under
//! satisficing requirements and AHP-weighted preferences, then ranks
//! feasible image/service combinations.

pub mod ahp;
pub mod bench;
pub mod catalog;
pub mod codes;
pub mod demo;
pub mod evaluation;
pub mod requirements;
pub mod session;
