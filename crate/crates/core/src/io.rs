//! CSV/JSON helpers shared by the exporters and the CLI.

use std::io::Write;

use crate::error::Result;

/// Bumped whenever a CSV column layout changes.
pub const SCHEMA_VERSION: u32 = 1;

/// First line of every CSV file: `# schema=<version> <description>`.
pub fn write_schema_line<W: Write + ?Sized>(out: &mut W, description: &str) -> Result<()> {
    writeln!(out, "# schema={SCHEMA_VERSION} {description}")?;
    Ok(())
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Reads a CSV written by this crate: skips the schema line, returns the
/// header and the numeric rows.
pub fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let first = lines
        .next()
        .ok_or_else(|| crate::Error::Invalid("empty csv".into()))?;
    let header_line = if first.starts_with('#') {
        lines
            .next()
            .ok_or_else(|| crate::Error::Invalid("csv has no header".into()))?
    } else {
        first
    };
    let header: Vec<String> = header_line.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (i, l) in lines.enumerate() {
        let row: std::result::Result<Vec<f64>, _> = l.split(',').map(|s| s.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| crate::Error::Invalid(format!("csv row {}: {e}", i + 1)))?;
        if row.len() != header.len() {
            return Err(crate::Error::Invalid(format!(
                "csv row {} has {} fields, header has {}",
                i + 1,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok((header, rows))
}
