pub mod claim;
pub mod landscape;
pub mod lemma;
pub mod trajectory;

use anyhow::{bail, Result};

use crate::args::Format;

/// Formats a command can emit, filtered by `--format`.
pub(crate) fn selected(requested: Option<Format>, supported: &[Format], command: &str) -> Result<Vec<Format>> {
    match requested {
        None => Ok(supported.to_vec()),
        Some(f) if supported.contains(&f) => Ok(vec![f]),
        Some(f) => bail!("`{command}` cannot emit {f:?} output"),
    }
}
