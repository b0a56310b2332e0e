//! Small file helpers shared by the loaders and report writers.
//!
//! Every file this crate writes may start with one `#` header line; every
//! loader skips leading `#` lines so outputs can be fed back as inputs.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// Lines that carry data: skips blanks and `#` comment/header lines.
/// Yields 1-based line numbers alongside the line.
pub fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            None
        } else {
            Some((i + 1, trimmed))
        }
    })
}

/// The `#` line written at the top of every output file.
pub fn header_line(tool_version: &str, config_hash: &str) -> String {
    format!("# shaper {tool_version} config={config_hash}\n")
}

pub(crate) fn with_header(header: Option<&str>, body: String) -> String {
    match header {
        Some(h) => {
            let mut s = String::with_capacity(h.len() + body.len() + 1);
            s.push_str(h);
            if !h.ends_with('\n') {
                s.push('\n');
            }
            s.push_str(&body);
            s
        }
        None => body,
    }
}

pub(crate) fn source_name(path: &Path) -> String {
    path.display().to_string()
}
