//! TEI edition parsing: selector rule sets and per-page region transcripts.

mod extract;
pub mod pattern;
mod rules;

pub use extract::{
    extract_page_label, page_region_types, parse_edition, resolve_linked_notes, Edition, NoteLinks,
    PageRecord, ParseWarning, RegionTranscript, WarningKind,
};
pub use pattern::PathPattern;
pub use rules::{NoteResolution, SelectorRule, SelectorRuleSet};
