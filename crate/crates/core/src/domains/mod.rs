//! Built-in reference domains, registered by the names instance files use.

pub mod briefcase;
pub mod grid;

use std::sync::{Arc, OnceLock};

use crate::domain::Domain;

pub const DOMAIN_NAMES: [&str; 3] = ["briefcase", "rnp", "2rnp"];

/// Looks up a built-in domain by name.
pub fn builtin(name: &str) -> Option<Arc<Domain>> {
    static BRIEFCASE: OnceLock<Arc<Domain>> = OnceLock::new();
    static RNP: OnceLock<Arc<Domain>> = OnceLock::new();
    static TWO_RNP: OnceLock<Arc<Domain>> = OnceLock::new();
    let cell = match name {
        "briefcase" => BRIEFCASE.get_or_init(|| Arc::new(briefcase::domain())),
        "rnp" => RNP.get_or_init(|| Arc::new(grid::rnp())),
        "2rnp" => TWO_RNP.get_or_init(|| Arc::new(grid::two_rnp())),
        _ => return None,
    };
    Some(cell.clone())
}
