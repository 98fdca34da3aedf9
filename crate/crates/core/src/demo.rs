//! Bundled demo catalog and session: a PHP web shop choosing among a few
//! Amazon, Rackspace and GoGrid offerings.

use crate::catalog::{Catalog, CatalogDocument};
use crate::session::SessionDocument;

pub const CATALOG_TOML: &str = include_str!("../data/demo_catalog.toml");
pub const SESSION_TOML: &str = include_str!("../data/demo_session.toml");

pub fn catalog() -> Catalog {
    Catalog::from_document(CatalogDocument::parse(CATALOG_TOML).expect("demo catalog parses")).expect("demo catalog is valid")
}

pub fn session() -> SessionDocument {
    SessionDocument::parse(SESSION_TOML).expect("demo session parses")
}
