//! Network representation, documents and random generation.

mod document;
mod generate;
mod network;
mod validate;

pub(crate) use document::NetworkDocument;
pub use document::{parse_network, serialize_network};
pub(crate) use generate::sample_row;
pub use generate::{forward_sample, generate_random_network, GeneratorConfig};
pub use network::{Assignment, BayesianNetwork, Cpt, CptRows, Evidence, Variable, ROW_SUM_TOLERANCE};
pub use validate::{validate_network, validate_parts, Finding, ValidationReport};
