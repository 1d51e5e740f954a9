use roxmltree::{Document, ParsingOptions};

use crate::error::{Error, Result};

/// Parse UTF-8 XML; errors carry the byte offset of the problem.
pub(crate) fn parse_document(xml: &[u8]) -> Result<Document<'_>> {
    let text = std::str::from_utf8(xml).map_err(|e| Error::Xml {
        offset: e.valid_up_to(),
        message: "input is not valid UTF-8".into(),
    })?;
    let opts = ParsingOptions {
        allow_dtd: true,
        ..ParsingOptions::default()
    };
    Document::parse_with_options(text, opts).map_err(|e| {
        let pos = e.pos();
        Error::Xml {
            offset: byte_offset(text, pos.row as usize, pos.col as usize),
            message: e.to_string(),
        }
    })
}

fn byte_offset(text: &str, row: usize, col: usize) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(row.saturating_sub(1))
        .map(str::len)
        .sum();
    let line = &text[line_start.min(text.len())..];
    let within: usize = line
        .chars()
        .take(col.saturating_sub(1))
        .map(char::len_utf8)
        .sum();
    (line_start + within).min(text.len())
}

