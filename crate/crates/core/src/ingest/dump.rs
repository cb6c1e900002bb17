//! Single-pass reader for MediaWiki `stub-meta-history` exports.
//!
//! Only page metadata and revision timestamps/contributors are decoded;
//! revision text is skipped. Revisions are buffered per page (namespace and
//! page id may in principle follow the revisions) and flushed at `</page>`,
//! so memory is bounded by the largest single page.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::io::BufRead;

use chrono::{DateTime, Utc};
use quick_xml::events::{BytesStart, Event as XmlEvent};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};

use super::PageThemeMap;
use crate::error::{Error, Result};
use crate::model::{map_namespace, parse_timestamp, BasicCategory, Event, FramePosition, ThemeSet, TimeGrid, UserId};

/// Bookkeeping for one ingestion pass.
///
/// `events_emitted` plus every `skipped_*` counter plus `parse_errors`
/// equals `revisions_scanned`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub revisions_scanned: u64,
    pub events_emitted: u64,
    pub pages_seen: u64,
    pub users_seen: u64,
    pub skipped_unmapped_namespace: u64,
    pub skipped_anonymous: u64,
    pub skipped_excluded: u64,
    pub skipped_out_of_window: u64,
    pub parse_errors: u64,
    /// Emitted events per basic category, in column order.
    pub events_per_category: [u64; 6],
}

impl IngestReport {
    pub fn is_conserved(&self) -> bool {
        self.events_emitted
            + self.skipped_unmapped_namespace
            + self.skipped_anonymous
            + self.skipped_excluded
            + self.skipped_out_of_window
            + self.parse_errors
            == self.revisions_scanned
    }
}

#[derive(Debug, Clone, Default)]
pub struct DumpOptions {
    /// Usernames dropped before any other rule (e.g. known bots).
    pub exclude_users: HashSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tag {
    Page,
    Title,
    Ns,
    PageId,
    Revision,
    Timestamp,
    Contributor,
    Username,
    Ip,
    Other,
}

impl Tag {
    fn classify(name: &[u8], parent: Option<Tag>) -> Tag {
        match (parent, name) {
            (_, b"page") if parent != Some(Tag::Page) => Tag::Page,
            (Some(Tag::Page), b"title") => Tag::Title,
            (Some(Tag::Page), b"ns") => Tag::Ns,
            (Some(Tag::Page), b"id") => Tag::PageId,
            (Some(Tag::Page), b"revision") => Tag::Revision,
            (Some(Tag::Revision), b"timestamp") => Tag::Timestamp,
            (Some(Tag::Revision), b"contributor") => Tag::Contributor,
            (Some(Tag::Contributor), b"username") => Tag::Username,
            (Some(Tag::Contributor), b"ip") => Tag::Ip,
            _ => Tag::Other,
        }
    }

    fn captures_text(self) -> bool {
        matches!(self, Tag::Title | Tag::Ns | Tag::PageId | Tag::Timestamp | Tag::Username | Tag::Ip)
    }
}

#[derive(Debug, Default)]
struct RawRevision {
    timestamp: String,
    username: Option<String>,
}

#[derive(Debug, Default)]
struct RawPage {
    ns: Option<String>,
    id: Option<String>,
    revisions: Vec<RawRevision>,
}

/// Streaming iterator over the events of a dump.
///
/// Yields `Err(MalformedXml)` once and then stops. The [`IngestReport`] and
/// the first-edit side table are available at any point and complete once
/// the iterator is exhausted.
pub struct WikiDumpReader<'a, R: BufRead> {
    reader: Reader<R>,
    buf: Vec<u8>,
    grid: TimeGrid,
    themes: Option<&'a PageThemeMap>,
    options: DumpOptions,
    stack: Vec<Tag>,
    text: String,
    page: RawPage,
    revision: RawRevision,
    pending: VecDeque<Event>,
    report: IngestReport,
    users: HashSet<String>,
    first_edits: BTreeMap<UserId, DateTime<Utc>>,
    done: bool,
}

impl<'a, R: BufRead> WikiDumpReader<'a, R> {
    pub fn new(input: R, grid: TimeGrid, themes: Option<&'a PageThemeMap>) -> Self {
        Self::with_options(input, grid, themes, DumpOptions::default())
    }

    pub fn with_options(input: R, grid: TimeGrid, themes: Option<&'a PageThemeMap>, options: DumpOptions) -> Self {
        let mut reader = Reader::from_reader(input);
        reader.config_mut().trim_text(true);
        WikiDumpReader {
            reader,
            buf: Vec::with_capacity(4096),
            grid,
            themes,
            options,
            stack: Vec::new(),
            text: String::new(),
            page: RawPage::default(),
            revision: RawRevision::default(),
            pending: VecDeque::new(),
            report: IngestReport::default(),
            users: HashSet::new(),
            first_edits: BTreeMap::new(),
            done: false,
        }
    }

    pub fn report(&self) -> &IngestReport {
        &self.report
    }

    /// Earliest timestamp of any named revision per user over the whole
    /// dump, including revisions outside the grid.
    pub fn first_edits(&self) -> &BTreeMap<UserId, DateTime<Utc>> {
        &self.first_edits
    }

    pub fn into_parts(self) -> (IngestReport, BTreeMap<UserId, DateTime<Utc>>) {
        (self.report, self.first_edits)
    }

    fn malformed(&self, message: impl Into<String>) -> Error {
        Error::MalformedXml { offset: self.reader.error_position().max(self.reader.buffer_position()), message: message.into() }
    }

    fn open(&mut self, start: &BytesStart<'_>) -> Tag {
        let tag = Tag::classify(start.local_name().as_ref(), self.stack.last().copied());
        match tag {
            Tag::Page => self.page = RawPage::default(),
            Tag::Revision => self.revision = RawRevision::default(),
            _ => {}
        }
        self.text.clear();
        self.stack.push(tag);
        tag
    }

    fn close(&mut self, tag: Tag) {
        let text = std::mem::take(&mut self.text);
        match tag {
            Tag::Ns => self.page.ns = Some(text),
            Tag::PageId => self.page.id = Some(text),
            Tag::Timestamp => self.revision.timestamp = text,
            Tag::Username => self.revision.username = Some(text),
            Tag::Revision => {
                let rev = std::mem::take(&mut self.revision);
                self.page.revisions.push(rev);
            }
            Tag::Page => self.flush_page(),
            _ => {}
        }
    }

    fn flush_page(&mut self) {
        let page = std::mem::take(&mut self.page);
        self.report.pages_seen += 1;
        let ns = page.ns.as_deref().and_then(|s| s.trim().parse::<i32>().ok());
        let themes = match (self.themes, page.id.as_deref().and_then(|s| s.trim().parse::<u64>().ok())) {
            (Some(map), Some(id)) => map.get(&id).copied().unwrap_or(ThemeSet::EMPTY),
            _ => ThemeSet::EMPTY,
        };
        for rev in page.revisions {
            self.report.revisions_scanned += 1;
            let Some(name) = rev.username.filter(|n| !n.is_empty()) else {
                self.report.skipped_anonymous += 1;
                continue;
            };
            if self.options.exclude_users.contains(&name) {
                self.report.skipped_excluded += 1;
                continue;
            }
            let Ok(ts) = parse_timestamp(&rev.timestamp) else {
                self.report.parse_errors += 1;
                continue;
            };
            let user = UserId(name);
            match self.first_edits.get_mut(&user) {
                Some(first) if *first <= ts => {}
                Some(first) => *first = ts,
                None => {
                    self.first_edits.insert(user.clone(), ts);
                }
            }
            let Some(ns) = ns else {
                self.report.parse_errors += 1;
                continue;
            };
            let category = match map_namespace(ns) {
                Ok(c) => c,
                Err(_) => {
                    self.report.skipped_unmapped_namespace += 1;
                    continue;
                }
            };
            if !matches!(self.grid.frame_of(&ts), FramePosition::In(_)) {
                self.report.skipped_out_of_window += 1;
                continue;
            }
            if self.users.insert(user.0.clone()) {
                self.report.users_seen += 1;
            }
            self.report.events_emitted += 1;
            self.report.events_per_category[category.index()] += 1;
            self.pending.push_back(Event {
                user,
                timestamp: ts,
                namespace: Some(ns),
                category,
                themes: if category == BasicCategory::Content { themes } else { ThemeSet::EMPTY },
            });
        }
    }

    /// Advance the XML stream until at least one event is pending or input ends.
    fn pump(&mut self) -> Result<()> {
        while self.pending.is_empty() {
            self.buf.clear();
            let ev = match self.reader.read_event_into(&mut self.buf) {
                Ok(ev) => ev,
                Err(e) => return Err(self.malformed(e.to_string())),
            };
            match ev {
                XmlEvent::Start(start) => {
                    let start = start.into_owned();
                    self.open(&start);
                }
                XmlEvent::Empty(start) => {
                    let start = start.into_owned();
                    let tag = self.open(&start);
                    self.stack.pop();
                    self.close(tag);
                }
                XmlEvent::End(_) => match self.stack.pop() {
                    Some(tag) => self.close(tag),
                    None => return Err(self.malformed("unbalanced end tag")),
                },
                XmlEvent::Text(t) => {
                    if self.stack.last().is_some_and(|t| t.captures_text()) {
                        let s = t.unescape().map(|s| s.into_owned());
                        let s = s.map_err(|e| self.malformed(e.to_string()))?;
                        self.text.push_str(&s);
                    }
                }
                XmlEvent::CData(c) => {
                    if self.stack.last().is_some_and(|t| t.captures_text()) {
                        let s = std::str::from_utf8(&c).map(str::to_owned);
                        let s = s.map_err(|e| self.malformed(e.to_string()))?;
                        self.text.push_str(&s);
                    }
                }
                XmlEvent::Eof => {
                    if !self.stack.is_empty() {
                        return Err(self.malformed("unexpected end of input inside an element"));
                    }
                    self.done = true;
                    return Ok(());
                }
                _ => {}
            }
        }
        Ok(())
    }
}

impl<R: BufRead> Iterator for WikiDumpReader<'_, R> {
    type Item = Result<Event>;

    fn next(&mut self) -> Option<Self::Item> {
        if let Some(ev) = self.pending.pop_front() {
            return Some(Ok(ev));
        }
        if self.done {
            return None;
        }
        if let Err(e) = self.pump() {
            self.done = true;
            self.pending.clear();
            return Some(Err(e));
        }
        self.pending.pop_front().map(Ok)
    }
}

/// Read a whole dump into memory.
pub fn read_wiki_dump<R: BufRead>(
    input: R,
    grid: TimeGrid,
    themes: Option<&PageThemeMap>,
) -> Result<(Vec<Event>, IngestReport)> {
    let mut reader = WikiDumpReader::new(input, grid, themes);
    let events = reader.by_ref().collect::<Result<Vec<_>>>()?;
    Ok((events, reader.report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Theme;

    const FIXTURE: &str = r#"<mediawiki xmlns="http://www.mediawiki.org/xml/export-0.8/" version="0.8">
  <siteinfo><sitename>Wikipedia</sitename><namespaces><namespace key="0" /></namespaces></siteinfo>
  <page>
    <title>Algebra</title>
    <ns>0</ns>
    <id>11</id>
    <revision>
      <id>100</id>
      <timestamp>2007-02-01T10:00:00Z</timestamp>
      <contributor><username>Alice</username><id>1</id></contributor>
      <text id="9" bytes="10" />
    </revision>
    <revision>
      <id>101</id>
      <timestamp>2008-05-01T10:00:00Z</timestamp>
      <contributor><username>Bob &amp; Co</username><id>2</id></contributor>
    </revision>
  </page>
  <page>
    <title>User:Alice</title>
    <ns>2</ns>
    <id>12</id>
    <revision>
      <timestamp>2009-01-01T00:00:00Z</timestamp>
      <contributor><username>Alice</username><id>1</id></contributor>
    </revision>
    <revision>
      <timestamp>2009-01-02T00:00:00Z</timestamp>
      <contributor><ip>10.0.0.1</ip></contributor>
    </revision>
  </page>
</mediawiki>"#;

    #[test]
    fn fixture_counts() {
        let (events, report) = read_wiki_dump(FIXTURE.as_bytes(), TimeGrid::default(), None).unwrap();
        assert_eq!(events.len(), 3);
        assert_eq!(report.pages_seen, 2);
        assert_eq!(report.skipped_anonymous, 1);
        assert_eq!(report.events_emitted, 3);
        assert_eq!(report.users_seen, 2);
        assert!(report.is_conserved());
        assert_eq!(events[1].user.as_str(), "Bob & Co");
        assert_eq!(events[2].category, BasicCategory::User);
        assert_eq!(events[2].namespace, Some(2));
    }

    #[test]
    fn themes_attach_to_content_pages() {
        let mut map = PageThemeMap::new();
        map.insert(11, [Theme::Mathematics, Theme::Science].into_iter().collect());
        map.insert(12, [Theme::People].into_iter().collect());
        let (events, _) = read_wiki_dump(FIXTURE.as_bytes(), TimeGrid::default(), Some(&map)).unwrap();
        assert!(events[0].themes.contains(Theme::Mathematics));
        assert_eq!(events[0].themes.len(), 2);
        // user-page edits never carry themes
        assert!(events[2].themes.is_empty());
    }

    #[test]
    fn out_of_window_and_side_table() {
        let grid = TimeGrid::new(2008, 1, 4).unwrap();
        let mut reader = WikiDumpReader::new(FIXTURE.as_bytes(), grid, None);
        let events: Vec<_> = reader.by_ref().collect::<Result<_>>().unwrap();
        assert_eq!(events.len(), 1);
        let report = reader.report().clone();
        assert_eq!(report.skipped_out_of_window, 2);
        assert!(report.is_conserved());
        let first = reader.first_edits();
        assert_eq!(first[&UserId::from("Alice")], parse_timestamp("2007-02-01T10:00:00Z").unwrap());
    }

    #[test]
    fn malformed_reports_offset() {
        let bad = "<mediawiki><page><ns>0</ns><revision></page></mediawiki>";
        let err = read_wiki_dump(bad.as_bytes(), TimeGrid::default(), None).unwrap_err();
        match err {
            Error::MalformedXml { offset, .. } => assert!(offset > 0),
            other => panic!("unexpected {other:?}"),
        }
        let truncated = "<mediawiki><page><ns>0</ns>";
        assert!(matches!(
            read_wiki_dump(truncated.as_bytes(), TimeGrid::default(), None),
            Err(Error::MalformedXml { .. })
        ));
    }

    #[test]
    fn unmapped_and_excluded_are_counted() {
        let xml = r#"<mediawiki><page><ns>16</ns><id>1</id>
            <revision><timestamp>2007-02-01T00:00:00Z</timestamp><contributor><username>A</username></contributor></revision>
            </page><page><ns>0</ns><id>2</id>
            <revision><timestamp>2007-02-01T00:00:00Z</timestamp><contributor><username>BotX</username></contributor></revision>
            <revision><timestamp>garbage</timestamp><contributor><username>B</username></contributor></revision>
            <revision><timestamp>2007-03-01T00:00:00Z</timestamp><contributor deleted="deleted" /></revision>
            </page></mediawiki>"#;
        let mut opts = DumpOptions::default();
        opts.exclude_users.insert("BotX".into());
        let mut reader = WikiDumpReader::with_options(xml.as_bytes(), TimeGrid::default(), None, opts);
        assert_eq!(reader.by_ref().count(), 0);
        let r = reader.report();
        assert_eq!(r.skipped_unmapped_namespace, 1);
        assert_eq!(r.skipped_excluded, 1);
        assert_eq!(r.parse_errors, 1);
        assert_eq!(r.skipped_anonymous, 1);
        assert!(r.is_conserved());
    }

    #[test]
    fn two_passes_identical() {
        let a = read_wiki_dump(FIXTURE.as_bytes(), TimeGrid::default(), None).unwrap();
        let b = read_wiki_dump(FIXTURE.as_bytes(), TimeGrid::default(), None).unwrap();
        assert_eq!(a, b);
    }
}
