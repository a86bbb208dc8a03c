//! Library side of the `cmac-region` command-line tool: scenario files,
//! subcommands and output encodings.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;
pub mod table;

use std::path::{Path, PathBuf};

pub use commands::Report;
pub use config::{Format, Mode, Overrides, ScenarioConfig};
pub use error::{CliError, CliResult};
pub use table::{Cell, Table};

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `table` to `out`, or returns it for stdout when `out` is `None`.
/// A CSV file gets a JSON mirror next to it.
pub fn emit(table: &Table, out: Option<&Path>, format: Format) -> CliResult<Option<String>> {
    let body = match format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    };
    let Some(path) = out else {
        return Ok(Some(body));
    };
    write_file(path, &body)?;
    if format == Format::Csv {
        write_file(&mirror_path(path), &table.to_json())?;
    }
    Ok(None)
}

/// `x.csv` → `x.json`; other names get `.json` appended.
pub fn mirror_path(path: &Path) -> PathBuf {
    match path.extension() {
        Some(ext) if ext == "csv" => path.with_extension("json"),
        _ => {
            let mut s = path.as_os_str().to_owned();
            s.push(".json");
            PathBuf::from(s)
        }
    }
}

pub fn write_svg(path: &Path, svg: &str) -> CliResult<()> {
    write_file(path, svg)
}
