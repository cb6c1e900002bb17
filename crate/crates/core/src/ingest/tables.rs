//! Delimited text inputs: generic event logs, trait labels, page→theme
//! maps and the first-edit side table.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{format_timestamp, parse_timestamp, BasicCategory, Event, Theme, ThemeSet, Trait, UserId};

pub type PageThemeMap = BTreeMap<u64, ThemeSet>;
pub type FirstEdits = BTreeMap<UserId, DateTime<Utc>>;

/// Comma unless the header line contains a tab and no comma.
fn sniff_delimiter<R: BufRead>(input: &mut R) -> Result<u8> {
    let head = input.fill_buf()?;
    let line_end = head.iter().position(|&b| b == b'\n').unwrap_or(head.len());
    let line = &head[..line_end];
    let tab = line.contains(&b'\t');
    let comma = line.contains(&b',');
    Ok(if tab && !comma { b'\t' } else { b',' })
}

fn delimited<R: BufRead>(mut input: R) -> Result<csv::Reader<R>> {
    let delim = sniff_delimiter(&mut input)?;
    Ok(csv::ReaderBuilder::new()
        .delimiter(delim)
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(input))
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        csv::ErrorKind::Utf8 { err, .. } => Error::Row { line, message: format!("invalid UTF-8: {err}") },
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            Error::Row { line, message: format!("expected {expected_len} fields, found {len}") }
        }
        other => Error::Row { line, message: format!("{other:?}") },
    }
}

/// Resolve header columns: every required name present, nothing unknown.
fn header_positions(
    headers: &csv::StringRecord,
    required: &[&str],
    optional: &[&str],
) -> Result<Vec<Option<usize>>> {
    let mut seen = Vec::new();
    for h in headers.iter() {
        let h = h.trim_start_matches('\u{feff}');
        if !required.contains(&h) && !optional.contains(&h) {
            return Err(Error::Schema(format!("unknown column {h:?}")));
        }
        if seen.contains(&h) {
            return Err(Error::Schema(format!("duplicate column {h:?}")));
        }
        seen.push(h);
    }
    let find = |name: &str| seen.iter().position(|h| *h == name);
    let mut out = Vec::new();
    for name in required {
        out.push(Some(find(name).ok_or_else(|| Error::Schema(format!("missing column {name:?}")))?));
    }
    for name in optional {
        out.push(find(name));
    }
    Ok(out)
}

fn read_headers<R: std::io::Read>(rdr: &mut csv::Reader<R>) -> Result<csv::StringRecord> {
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::Schema("missing header row".into()));
    }
    Ok(headers)
}

fn parse_themes(field: &str) -> std::result::Result<ThemeSet, String> {
    let mut set = ThemeSet::EMPTY;
    for name in field.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        set.insert(name.parse::<Theme>().map_err(|e| e.to_string())?);
    }
    Ok(set)
}

/// Streaming reader for `user_id,timestamp,category[,themes]` logs.
pub struct EventLogReader<R: BufRead> {
    rdr: csv::Reader<R>,
    cols: [usize; 3],
    themes_col: Option<usize>,
    record: csv::StringRecord,
    failed: bool,
}

impl<R: BufRead> EventLogReader<R> {
    pub fn new(input: R) -> Result<Self> {
        let mut rdr = delimited(input)?;
        let headers = read_headers(&mut rdr)?;
        let pos = header_positions(&headers, &["user_id", "timestamp", "category"], &["themes"])?;
        Ok(EventLogReader {
            rdr,
            cols: [pos[0].unwrap(), pos[1].unwrap(), pos[2].unwrap()],
            themes_col: pos[3],
            record: csv::StringRecord::new(),
            failed: false,
        })
    }

    fn parse_row(&self) -> Result<Event> {
        let line = self.record.position().map(|p| p.line()).unwrap_or(0);
        let row_err = |message: String| Error::Row { line, message };
        let user = &self.record[self.cols[0]];
        if user.is_empty() {
            return Err(row_err("empty user_id".into()));
        }
        let ts = parse_timestamp(&self.record[self.cols[1]]).map_err(|e| row_err(e.to_string()))?;
        let category: BasicCategory = self.record[self.cols[2]].parse().map_err(|e: Error| row_err(e.to_string()))?;
        let themes = match self.themes_col {
            Some(c) => parse_themes(&self.record[c]).map_err(row_err)?,
            None => ThemeSet::EMPTY,
        };
        if !themes.is_empty() && category != BasicCategory::Content {
            return Err(row_err(format!("themes given for a {category} event")));
        }
        Ok(Event::new(user, ts, category).with_themes(themes))
    }
}

impl<R: BufRead> Iterator for EventLogReader<R> {
    type Item = Result<Event>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        match self.rdr.read_record(&mut self.record) {
            Ok(false) => None,
            Ok(true) => Some(self.parse_row()),
            Err(e) => {
                self.failed = true;
                Some(Err(csv_error(e)))
            }
        }
    }
}

/// Read a full event log, failing on the first invalid row.
pub fn read_event_log<R: BufRead>(input: R) -> Result<Vec<Event>> {
    EventLogReader::new(input)?.collect()
}

pub fn write_event_log<W: Write>(out: W, events: &[Event]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["user_id", "timestamp", "category", "themes"]).map_err(csv_error)?;
    for ev in events {
        let themes: Vec<&str> = ev.themes.iter().map(Theme::name).collect();
        w.write_record([
            ev.user.as_str(),
            &format_timestamp(&ev.timestamp),
            ev.category.name(),
            &themes.join(";"),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-user trait labels, at most one class per (user, trait).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraitLabels {
    by_user: BTreeMap<UserId, BTreeMap<Trait, String>>,
}

impl TraitLabels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert a label; re-inserting the same class is a no-op.
    pub fn insert(&mut self, user: UserId, trait_: Trait, class: &str) -> Result<()> {
        let class = trait_
            .canonical_class(class)
            .ok_or_else(|| Error::UnknownClass { trait_, class: class.to_owned() })?;
        let entry = self.by_user.entry(user.clone()).or_default();
        match entry.get(&trait_) {
            Some(existing) if existing != class => Err(Error::Conflict {
                user: user.0,
                trait_,
                existing: existing.clone(),
                new: class.to_owned(),
            }),
            Some(_) => Ok(()),
            None => {
                entry.insert(trait_, class.to_owned());
                Ok(())
            }
        }
    }

    pub fn get(&self, user: &UserId, trait_: Trait) -> Option<&str> {
        self.by_user.get(user).and_then(|m| m.get(&trait_)).map(String::as_str)
    }

    pub fn labels_of(&self, user: &UserId) -> Option<&BTreeMap<Trait, String>> {
        self.by_user.get(user)
    }

    pub fn users(&self) -> impl Iterator<Item = &UserId> {
        self.by_user.keys()
    }

    /// Total number of (user, trait) labels.
    pub fn len(&self) -> usize {
        self.by_user.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_user.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&UserId, Trait, &str)> {
        self.by_user
            .iter()
            .flat_map(|(u, m)| m.iter().map(move |(t, c)| (u, *t, c.as_str())))
    }

    /// Classes present for a trait, in vocabulary order.
    pub fn classes(&self, trait_: Trait) -> Vec<&'static str> {
        trait_
            .vocabulary()
            .iter()
            .copied()
            .filter(|c| self.iter().any(|(_, t, v)| t == trait_ && v == *c))
            .collect()
    }
}

pub fn read_trait_labels<R: BufRead>(input: R) -> Result<TraitLabels> {
    let mut rdr = delimited(input)?;
    let headers = read_headers(&mut rdr)?;
    let pos = header_positions(&headers, &["user_id", "trait", "class"], &[])?;
    let (u, t, c) = (pos[0].unwrap(), pos[1].unwrap(), pos[2].unwrap());
    let mut labels = TraitLabels::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec[u].is_empty() {
            return Err(Error::Row { line, message: "empty user_id".into() });
        }
        let trait_: Trait = rec[t].parse().map_err(|e: Error| Error::Row { line, message: e.to_string() })?;
        labels.insert(UserId::from(&rec[u]), trait_, &rec[c])?;
    }
    Ok(labels)
}

pub fn write_trait_labels<W: Write>(out: W, labels: &TraitLabels) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["user_id", "trait", "class"]).map_err(csv_error)?;
    for (user, t, class) in labels.iter() {
        w.write_record([user.as_str(), t.name(), class]).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_page_theme_map<R: BufRead>(input: R) -> Result<PageThemeMap> {
    let mut rdr = delimited(input)?;
    let headers = read_headers(&mut rdr)?;
    let pos = header_positions(&headers, &["page_id", "theme"], &[])?;
    let (p, t) = (pos[0].unwrap(), pos[1].unwrap());
    let mut map = PageThemeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let page: u64 = rec[p]
            .parse()
            .map_err(|_| Error::Row { line, message: format!("bad page_id {:?}", &rec[p]) })?;
        let theme: Theme = rec[t].parse()?;
        map.entry(page).or_default().insert(theme);
    }
    Ok(map)
}

pub fn read_first_edits<R: BufRead>(input: R) -> Result<FirstEdits> {
    let mut rdr = delimited(input)?;
    let headers = read_headers(&mut rdr)?;
    let pos = header_positions(&headers, &["user_id", "first_edit_timestamp"], &[])?;
    let (u, t) = (pos[0].unwrap(), pos[1].unwrap());
    let mut map = FirstEdits::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let ts = parse_timestamp(&rec[t]).map_err(|e| Error::Row { line, message: e.to_string() })?;
        let entry = map.entry(UserId::from(&rec[u])).or_insert(ts);
        if ts < *entry {
            *entry = ts;
        }
    }
    Ok(map)
}

pub fn write_first_edits<W: Write>(out: W, first: &FirstEdits) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["user_id", "first_edit_timestamp"]).map_err(csv_error)?;
    for (user, ts) in first {
        w.write_record([user.as_str(), &format_timestamp(ts)]).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
