//! Instance lookup by generator name or file path, and report output.

use std::fs;
use std::io::Write;
use std::path::Path;

use twochoice_core::instance::{gen_adversarial_waterlevel, gen_example_impossible, parse_instance, Instance};

use crate::error::{CliError, CliResult};

/// `adv_k<N>` and `example_impossible` are generated; anything else is read as an OBMI file.
pub fn load_instance(spec: &str) -> CliResult<Instance> {
    if let Some(k) = spec.strip_prefix("adv_k") {
        if let Ok(k) = k.parse::<u32>() {
            return Ok(gen_adversarial_waterlevel(k)?);
        }
    }
    if spec == "example_impossible" {
        return Ok(gen_example_impossible().0);
    }
    let text = fs::read_to_string(spec).map_err(|e| CliError::Usage(format!("{spec}: {e}")))?;
    parse_instance(&text).map_err(|e| CliError::Usage(format!("{spec}: {e}")))
}

/// Round count of a generated adversarial instance name.
pub fn adversarial_rounds(spec: &str) -> Option<u32> {
    spec.strip_prefix("adv_k")?.parse().ok()
}

pub fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Writes `text` to `path` or standard output.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

pub fn pretty(value: &serde_json::Value) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
