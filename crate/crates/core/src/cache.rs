//! Versioned binary caches for events and activity tables, so CLI stages
//! can hand data to each other without re-parsing text.
//!
//! Layout (little endian): 8-byte magic, `u32` version, then a body.
//! Decoders treat their input as untrusted and never allocate more than
//! the remaining input can justify.

use std::io::Write;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use chrono::{TimeZone, Utc};

use crate::error::{Error, Result};
use crate::featurize::{ActivityTable, UserActivity};
use crate::model::{BasicCategory, CategoryScheme, Event, ThemeSet, TimeGrid, UserId};

pub const EVENTS_MAGIC: [u8; 8] = *b"TLEVENTS";
pub const ACTIVITY_MAGIC: [u8; 8] = *b"TLACTVTY";
pub const VERSION: u32 = 1;

const NO_NAMESPACE: i32 = i32::MIN;
const MAX_FRAMES: u32 = 4096;

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Cache(msg.into())
}

struct Cursor<'a> {
    data: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn remaining(&self) -> usize {
        self.data.len()
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.data.len() {
            return Err(corrupt("truncated input"));
        }
        let (head, tail) = self.data.split_at(n);
        self.data = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8> {
        self.data.read_u8().map_err(|_| corrupt("truncated input"))
    }

    fn u32(&mut self) -> Result<u32> {
        self.data.read_u32::<LittleEndian>().map_err(|_| corrupt("truncated input"))
    }

    fn i32(&mut self) -> Result<i32> {
        self.data.read_i32::<LittleEndian>().map_err(|_| corrupt("truncated input"))
    }

    fn u64(&mut self) -> Result<u64> {
        self.data.read_u64::<LittleEndian>().map_err(|_| corrupt("truncated input"))
    }

    fn i64(&mut self) -> Result<i64> {
        self.data.read_i64::<LittleEndian>().map_err(|_| corrupt("truncated input"))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        let s = std::str::from_utf8(bytes).map_err(|_| corrupt("user id is not UTF-8"))?;
        if s.is_empty() {
            return Err(corrupt("empty user id"));
        }
        Ok(s.to_owned())
    }

    fn header(&mut self, magic: &[u8; 8]) -> Result<()> {
        if self.take(8).map_err(|_| corrupt("missing magic"))? != magic {
            return Err(corrupt("bad magic"));
        }
        let version = self.u32()?;
        if version != VERSION {
            return Err(corrupt(format!("unsupported version {version}")));
        }
        Ok(())
    }
}

fn write_str<W: Write>(out: &mut W, s: &str) -> Result<()> {
    out.write_u32::<LittleEndian>(s.len() as u32)?;
    out.write_all(s.as_bytes())?;
    Ok(())
}

pub fn encode_events<W: Write>(mut out: W, events: &[Event]) -> Result<()> {
    out.write_all(&EVENTS_MAGIC)?;
    out.write_u32::<LittleEndian>(VERSION)?;
    out.write_u64::<LittleEndian>(events.len() as u64)?;
    for ev in events {
        write_str(&mut out, ev.user.as_str())?;
        out.write_i64::<LittleEndian>(ev.timestamp.timestamp())?;
        out.write_i32::<LittleEndian>(ev.namespace.unwrap_or(NO_NAMESPACE))?;
        out.write_u8(ev.category.index() as u8)?;
        out.write_u32::<LittleEndian>(ev.themes.bits())?;
    }
    Ok(())
}

pub fn decode_events(data: &[u8]) -> Result<Vec<Event>> {
    let mut cur = Cursor { data };
    cur.header(&EVENTS_MAGIC)?;
    let count = cur.u64()?;
    // smallest record: 4 + 1 + 8 + 4 + 1 + 4 bytes
    if count > (cur.remaining() / 22) as u64 {
        return Err(corrupt(format!("declared {count} events exceed input size")));
    }
    let mut events = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let user = cur.string()?;
        let secs = cur.i64()?;
        let timestamp = Utc.timestamp_opt(secs, 0).single().ok_or_else(|| corrupt("timestamp out of range"))?;
        let ns = cur.i32()?;
        let category = BasicCategory::from_index(cur.u8()? as usize).ok_or_else(|| corrupt("bad category"))?;
        let themes = ThemeSet::from_bits(cur.u32()?).ok_or_else(|| corrupt("bad theme bits"))?;
        let ev = Event {
            user: UserId(user),
            timestamp,
            namespace: (ns != NO_NAMESPACE).then_some(ns),
            category,
            themes,
        };
        if !ev.is_consistent() {
            return Err(corrupt("namespace disagrees with category"));
        }
        events.push(ev);
    }
    if cur.remaining() != 0 {
        return Err(corrupt("trailing bytes"));
    }
    Ok(events)
}

pub fn encode_activity<W: Write>(mut out: W, table: &ActivityTable) -> Result<()> {
    out.write_all(&ACTIVITY_MAGIC)?;
    out.write_u32::<LittleEndian>(VERSION)?;
    out.write_i64::<LittleEndian>(table.grid().origin().timestamp())?;
    out.write_u32::<LittleEndian>(table.grid().frames() as u32)?;
    out.write_u8(match table.scheme() {
        CategoryScheme::Basic => 0,
        CategoryScheme::Extended => 1,
    })?;
    out.write_u64::<LittleEndian>(table.users().len() as u64)?;
    for u in table.users() {
        write_str(&mut out, u.user.as_str())?;
        out.write_i64::<LittleEndian>(u.join_frame)?;
        for &c in &u.counts {
            out.write_u32::<LittleEndian>(c)?;
        }
    }
    Ok(())
}

pub fn decode_activity(data: &[u8]) -> Result<ActivityTable> {
    let mut cur = Cursor { data };
    cur.header(&ACTIVITY_MAGIC)?;
    let origin = Utc
        .timestamp_opt(cur.i64()?, 0)
        .single()
        .ok_or_else(|| corrupt("origin out of range"))?;
    let frames = cur.u32()?;
    if frames == 0 || frames > MAX_FRAMES {
        return Err(corrupt(format!("frame count {frames} out of range")));
    }
    let grid = TimeGrid::from_origin(origin, frames as usize).map_err(|e| corrupt(e.to_string()))?;
    let scheme = match cur.u8()? {
        0 => CategoryScheme::Basic,
        1 => CategoryScheme::Extended,
        other => return Err(corrupt(format!("bad scheme tag {other}"))),
    };
    let ncat = scheme.len();
    let width = frames as usize * ncat;
    let n_users = cur.u64()?;
    let min_record = 4 + 1 + 8 + 4 * width;
    if n_users > (cur.remaining() / min_record) as u64 {
        return Err(corrupt(format!("declared {n_users} users exceed input size")));
    }
    let mut users = Vec::with_capacity(n_users as usize);
    for _ in 0..n_users {
        let user = UserId(cur.string()?);
        let join_frame = cur.i64()?;
        let mut counts = Vec::with_capacity(width);
        for _ in 0..width {
            counts.push(cur.u32()?);
        }
        let first_active = (0..frames as usize).find(|&f| counts[f * ncat..f * ncat + 6].iter().any(|&c| c > 0));
        let Some(first) = first_active else {
            return Err(corrupt(format!("user {user} has no activity")));
        };
        if join_frame > first as i64 {
            return Err(corrupt(format!("user {user} active before joining")));
        }
        users.push(UserActivity { user, join_frame, first_active, counts });
    }
    if cur.remaining() != 0 {
        return Err(corrupt("trailing bytes"));
    }
    ActivityTable::from_parts(grid, scheme, users)
}
