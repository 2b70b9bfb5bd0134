// SPDX-License-Identifier: Apache-2.0

use crate::error::{Error, Result};
use crate::timing::SweepRow;

/// CSV with columns target, area, delay, slack, size, level, deficiency.
pub fn emit_report(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record([
            "target",
            "area",
            "delay",
            "slack",
            "size",
            "level",
            "deficiency",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(e.to_string()))
}

pub fn parse_report(text: &str) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
