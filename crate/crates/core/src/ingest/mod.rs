//! Event ingestion from Wikipedia dumps and delimited files.

mod dump;
mod tables;

pub use dump::{read_wiki_dump, DumpOptions, IngestReport, WikiDumpReader};
pub use tables::{
    read_event_log, read_first_edits, read_page_theme_map, read_trait_labels, write_event_log,
    write_first_edits, write_trait_labels, EventLogReader, FirstEdits, PageThemeMap, TraitLabels,
};
