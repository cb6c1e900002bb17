//! Core domain types: events, the quarterly time grid, category schemes and
//! trait labels.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque user identifier. Ordering is lexicographic and defines the row
/// order of every dataset.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub String);

impl UserId {
    pub fn new(id: impl Into<String>) -> Self {
        UserId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for UserId {
    fn from(s: &str) -> Self {
        UserId(s.to_owned())
    }
}

/// The six namespace-derived edit categories, in feature column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BasicCategory {
    #[serde(rename = "CONTENT")]
    Content,
    #[serde(rename = "TALK-C")]
    TalkContent,
    #[serde(rename = "USER")]
    User,
    #[serde(rename = "TALK-U")]
    TalkUser,
    #[serde(rename = "WIKI")]
    Wiki,
    #[serde(rename = "INFRA")]
    Infra,
}

impl BasicCategory {
    pub const ALL: [BasicCategory; 6] = [
        BasicCategory::Content,
        BasicCategory::TalkContent,
        BasicCategory::User,
        BasicCategory::TalkUser,
        BasicCategory::Wiki,
        BasicCategory::Infra,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BasicCategory::Content => "CONTENT",
            BasicCategory::TalkContent => "TALK-C",
            BasicCategory::User => "USER",
            BasicCategory::TalkUser => "TALK-U",
            BasicCategory::Wiki => "WIKI",
            BasicCategory::Infra => "INFRA",
        }
    }

    /// Column position within a frame block.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for BasicCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BasicCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::UnknownCategory(s.to_owned()))
    }
}

/// Map a raw MediaWiki namespace code onto its basic category.
pub fn map_namespace(code: i32) -> Result<BasicCategory> {
    use BasicCategory::*;
    match code {
        0 | 6 => Ok(Content),
        1 | 7 => Ok(TalkContent),
        2 => Ok(User),
        3 => Ok(TalkUser),
        4 | 5 => Ok(Wiki),
        8..=15 | 100 | 101 => Ok(Infra),
        other => Err(Error::UnmappedNamespace(other)),
    }
}

/// The 23 thematic categories of the extended feature set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Theme {
    Agriculture,
    AppliedSciences,
    Arts,
    Belief,
    Business,
    Chronology,
    Culture,
    Education,
    Environment,
    Geography,
    Health,
    History,
    Humanities,
    Language,
    Law,
    Life,
    Mathematics,
    Nature,
    People,
    Politics,
    Science,
    Society,
    Technology,
}

impl Theme {
    pub const COUNT: usize = 23;

    pub const ALL: [Theme; 23] = [
        Theme::Agriculture,
        Theme::AppliedSciences,
        Theme::Arts,
        Theme::Belief,
        Theme::Business,
        Theme::Chronology,
        Theme::Culture,
        Theme::Education,
        Theme::Environment,
        Theme::Geography,
        Theme::Health,
        Theme::History,
        Theme::Humanities,
        Theme::Language,
        Theme::Law,
        Theme::Life,
        Theme::Mathematics,
        Theme::Nature,
        Theme::People,
        Theme::Politics,
        Theme::Science,
        Theme::Society,
        Theme::Technology,
    ];

    pub fn name(self) -> &'static str {
        const NAMES: [&str; 23] = [
            "AGRICULTURE",
            "APPLIED-SCIENCES",
            "ARTS",
            "BELIEF",
            "BUSINESS",
            "CHRONOLOGY",
            "CULTURE",
            "EDUCATION",
            "ENVIRONMENT",
            "GEOGRAPHY",
            "HEALTH",
            "HISTORY",
            "HUMANITIES",
            "LANGUAGE",
            "LAW",
            "LIFE",
            "MATHEMATICS",
            "NATURE",
            "PEOPLE",
            "POLITICS",
            "SCIENCE",
            "SOCIETY",
            "TECHNOLOGY",
        ];
        NAMES[self as usize]
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Theme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Theme {
    type Err = Error;

    /// Case-insensitive; `_` and ` ` are accepted in place of `-`.
    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .trim()
            .chars()
            .map(|c| match c {
                '_' | ' ' => '-',
                c => c.to_ascii_uppercase(),
            })
            .collect();
        Self::ALL
            .iter()
            .copied()
            .find(|t| t.name() == norm)
            .ok_or_else(|| Error::UnknownTheme(s.to_owned()))
    }
}

/// A set of themes stored as a bitmask over [`Theme::ALL`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ThemeSet(u32);

impl ThemeSet {
    pub const EMPTY: ThemeSet = ThemeSet(0);

    pub fn from_bits(bits: u32) -> Option<Self> {
        if bits >> Theme::COUNT == 0 {
            Some(ThemeSet(bits))
        } else {
            None
        }
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn insert(&mut self, theme: Theme) {
        self.0 |= 1 << theme.index();
    }

    pub fn contains(self, theme: Theme) -> bool {
        self.0 & (1 << theme.index()) != 0
    }

    pub fn union(self, other: ThemeSet) -> ThemeSet {
        ThemeSet(self.0 | other.0)
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = Theme> {
        Theme::ALL.into_iter().filter(move |t| self.contains(*t))
    }
}

impl FromIterator<Theme> for ThemeSet {
    fn from_iter<I: IntoIterator<Item = Theme>>(iter: I) -> Self {
        let mut set = ThemeSet::EMPTY;
        for t in iter {
            set.insert(t);
        }
        set
    }
}

impl Serialize for ThemeSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.len()))?;
        for t in self.iter() {
            seq.serialize_element(t.name())?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for ThemeSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let names = Vec::<String>::deserialize(d)?;
        names
            .iter()
            .map(|n| n.parse::<Theme>().map_err(serde::de::Error::custom))
            .collect()
    }
}

/// One atomic revision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub user: UserId,
    pub timestamp: DateTime<Utc>,
    /// Raw MediaWiki namespace, absent for generic logs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub namespace: Option<i32>,
    pub category: BasicCategory,
    #[serde(default, skip_serializing_if = "ThemeSet::is_empty")]
    pub themes: ThemeSet,
}

impl Event {
    pub fn new(user: impl Into<String>, timestamp: DateTime<Utc>, category: BasicCategory) -> Self {
        Event {
            user: UserId(user.into()),
            timestamp,
            namespace: None,
            category,
            themes: ThemeSet::EMPTY,
        }
    }

    pub fn with_themes(mut self, themes: ThemeSet) -> Self {
        self.themes = themes;
        self
    }

    /// Namespace/category agreement, when a namespace is recorded.
    pub fn is_consistent(&self) -> bool {
        match self.namespace {
            Some(ns) => map_namespace(ns).map(|c| c == self.category).unwrap_or(false),
            None => true,
        }
    }
}

/// Parse an ISO-8601 UTC timestamp. Accepts `Z`/offset suffixes and bare
/// `YYYY-MM-DDTHH:MM:SS` (taken as UTC).
pub fn parse_timestamp(s: &str) -> Result<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(Utc.from_utc_datetime(&naive));
        }
    }
    if let Ok(date) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(Utc.from_utc_datetime(&date.and_hms_opt(0, 0, 0).expect("midnight")));
    }
    Err(Error::BadTimestamp(s.to_owned()))
}

/// Canonical second-resolution rendering, e.g. `2007-01-01T00:00:00Z`.
pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

/// Position of an instant relative to a [`TimeGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FramePosition {
    In(usize),
    Before,
    After,
}

impl FramePosition {
    pub fn index(self) -> Option<usize> {
        match self {
            FramePosition::In(i) => Some(i),
            _ => None,
        }
    }
}

/// Half-open calendar quarters `[origin, origin + 3·frames months)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeGrid {
    origin: DateTime<Utc>,
    frames: usize,
}

impl Default for TimeGrid {
    /// 2007-01-01 to 2013-07-01, 26 quarters.
    fn default() -> Self {
        TimeGrid::new(2007, 1, 26).expect("default grid is valid")
    }
}

impl TimeGrid {
    /// `start_month` must be 1, 4, 7 or 10.
    pub fn new(year: i32, start_month: u32, frames: usize) -> Result<Self> {
        if frames == 0 {
            return Err(Error::InvalidGrid("frame count must be positive".into()));
        }
        if !matches!(start_month, 1 | 4 | 7 | 10) {
            return Err(Error::InvalidGrid(format!(
                "origin month {start_month} is not a quarter start"
            )));
        }
        let origin = Utc
            .with_ymd_and_hms(year, start_month, 1, 0, 0, 0)
            .single()
            .ok_or_else(|| Error::InvalidGrid(format!("bad origin year {year}")))?;
        Ok(TimeGrid { origin, frames })
    }

    /// Build from an origin instant, which must sit exactly on a quarter start.
    pub fn from_origin(origin: DateTime<Utc>, frames: usize) -> Result<Self> {
        let grid = TimeGrid::new(origin.year(), origin.month(), frames)?;
        if grid.origin != origin {
            return Err(Error::InvalidGrid(format!(
                "origin {} is not midnight on the first day of a quarter",
                format_timestamp(&origin)
            )));
        }
        Ok(grid)
    }

    pub fn origin(&self) -> DateTime<Utc> {
        self.origin
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    fn month_ordinal(ts: &DateTime<Utc>) -> i64 {
        ts.year() as i64 * 12 + ts.month0() as i64
    }

    /// Signed quarter offset from the origin; negative before it.
    pub fn quarter_offset(&self, ts: &DateTime<Utc>) -> i64 {
        let months = Self::month_ordinal(ts) - Self::month_ordinal(&self.origin);
        months.div_euclid(3)
    }

    pub fn frame_of(&self, ts: &DateTime<Utc>) -> FramePosition {
        let q = self.quarter_offset(ts);
        if q < 0 {
            FramePosition::Before
        } else if q as usize >= self.frames {
            FramePosition::After
        } else {
            FramePosition::In(q as usize)
        }
    }

    /// Start instant of quarter `i` (may equal `end()` for `i == frames`).
    pub fn frame_start(&self, i: usize) -> DateTime<Utc> {
        let months = Self::month_ordinal(&self.origin) + 3 * i as i64;
        let year = months.div_euclid(12) as i32;
        let month = months.rem_euclid(12) as u32 + 1;
        Utc.with_ymd_and_hms(year, month, 1, 0, 0, 0)
            .single()
            .expect("quarter start is a valid date")
    }

    pub fn end(&self) -> DateTime<Utc> {
        self.frame_start(self.frames)
    }

    pub fn contains(&self, ts: &DateTime<Utc>) -> bool {
        matches!(self.frame_of(ts), FramePosition::In(_))
    }
}

/// One feature-count category: a basic category or an extended theme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Basic(BasicCategory),
    Theme(Theme),
}

impl Category {
    pub fn name(self) -> &'static str {
        match self {
            Category::Basic(c) => c.name(),
            Category::Theme(t) => t.name(),
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Ok(c) = s.parse::<BasicCategory>() {
            return Ok(Category::Basic(c));
        }
        s.parse::<Theme>()
            .map(Category::Theme)
            .map_err(|_| Error::UnknownCategory(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CategoryScheme {
    #[default]
    Basic,
    Extended,
}

impl CategoryScheme {
    /// Basic categories first, then the 23 themes in table order.
    pub fn categories(self) -> Vec<Category> {
        let mut cats: Vec<Category> = BasicCategory::ALL.iter().map(|&c| Category::Basic(c)).collect();
        if self == CategoryScheme::Extended {
            cats.extend(Theme::ALL.iter().map(|&t| Category::Theme(t)));
        }
        cats
    }

    pub fn len(self) -> usize {
        match self {
            CategoryScheme::Basic => 6,
            CategoryScheme::Extended => 6 + Theme::COUNT,
        }
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn name(self) -> &'static str {
        match self {
            CategoryScheme::Basic => "basic",
            CategoryScheme::Extended => "extended",
        }
    }
}

impl FromStr for CategoryScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "basic" => Ok(CategoryScheme::Basic),
            "extended" => Ok(CategoryScheme::Extended),
            other => Err(Error::Config(format!("unknown scheme {other:?}"))),
        }
    }
}

/// Self-disclosed private traits used as prediction targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trait {
    Gender,
    Education,
    Religion,
}

impl Trait {
    pub const ALL: [Trait; 3] = [Trait::Gender, Trait::Education, Trait::Religion];

    pub fn name(self) -> &'static str {
        match self {
            Trait::Gender => "gender",
            Trait::Education => "education",
            Trait::Religion => "religion",
        }
    }

    /// Declared class vocabulary, lowercase.
    pub fn vocabulary(self) -> &'static [&'static str] {
        match self {
            Trait::Gender => &["female", "male"],
            Trait::Education => &["undergrads", "grads", "phd"],
            Trait::Religion => &["christian", "muslim", "atheist", "jewish"],
        }
    }

    /// Canonical (lowercase) class value, if it belongs to the vocabulary.
    pub fn canonical_class(self, value: &str) -> Option<&'static str> {
        let v = value.trim().to_ascii_lowercase();
        self.vocabulary().iter().copied().find(|c| *c == v)
    }
}

impl fmt::Display for Trait {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Trait {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let l = s.trim().to_ascii_lowercase();
        Self::ALL
            .iter()
            .copied()
            .find(|t| t.name() == l)
            .ok_or_else(|| Error::UnknownTrait(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraitLabel {
    pub user: UserId,
    #[serde(rename = "trait")]
    pub trait_: Trait,
    pub class: String,
}

impl TraitLabel {
    pub fn new(user: impl Into<String>, trait_: Trait, class: &str) -> Result<Self> {
        let class = trait_
            .canonical_class(class)
            .ok_or_else(|| Error::UnknownClass { trait_, class: class.to_owned() })?;
        Ok(TraitLabel { user: UserId(user.into()), trait_, class: class.to_owned() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ts(s: &str) -> DateTime<Utc> {
        parse_timestamp(s).unwrap()
    }

    #[test]
    fn namespace_table() {
        assert_eq!(map_namespace(0).unwrap(), BasicCategory::Content);
        assert_eq!(map_namespace(3).unwrap(), BasicCategory::TalkUser);
        assert_eq!(map_namespace(100).unwrap(), BasicCategory::Infra);
        assert!(matches!(map_namespace(16), Err(Error::UnmappedNamespace(16))));
        assert!(matches!(map_namespace(-1), Err(Error::UnmappedNamespace(-1))));
    }

    #[test]
    fn namespace_partition() {
        let listed = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 100, 101];
        let mut per_cat = [0usize; 6];
        for code in listed {
            per_cat[map_namespace(code).unwrap().index()] += 1;
        }
        assert_eq!(per_cat, [2, 2, 1, 1, 2, 10]);
        let mapped = (-50..300).filter(|c| map_namespace(*c).is_ok()).count();
        assert_eq!(mapped, listed.len());
    }

    #[test]
    fn frame_boundaries() {
        let grid = TimeGrid::default();
        assert_eq!(grid.frames(), 26);
        assert_eq!(grid.frame_of(&ts("2007-01-01T00:00:00")), FramePosition::In(0));
        assert_eq!(grid.frame_of(&ts("2007-04-01T00:00:00")), FramePosition::In(1));
        assert_eq!(grid.frame_of(&ts("2007-03-31T23:59:59Z")), FramePosition::In(0));
        assert_eq!(grid.frame_of(&ts("2006-12-31T23:59:59")), FramePosition::Before);
        assert_eq!(grid.frame_of(&ts("2008-01-01T00:00:00Z")), FramePosition::In(4));
        assert_eq!(grid.frame_of(&ts("2013-06-30T23:59:59Z")), FramePosition::In(25));
        assert_eq!(grid.frame_of(&ts("2013-07-01T00:00:00Z")), FramePosition::After);
        assert_eq!(grid.end(), ts("2013-07-01T00:00:00Z"));
        assert_eq!(grid.quarter_offset(&ts("2005-06-01T00:00:00Z")), -7);
    }

    #[test]
    fn grid_rejects_unanchored_origin() {
        assert!(TimeGrid::new(2007, 2, 4).is_err());
        assert!(TimeGrid::new(2007, 1, 0).is_err());
        assert!(TimeGrid::from_origin(ts("2007-01-02T00:00:00Z"), 3).is_err());
        assert!(TimeGrid::from_origin(ts("2007-07-01T00:00:00Z"), 3).is_ok());
    }

    #[test]
    fn scheme_column_order() {
        let basic = CategoryScheme::Basic.categories();
        let names: Vec<_> = basic.iter().map(|c| c.name()).collect();
        assert_eq!(names, ["CONTENT", "TALK-C", "USER", "TALK-U", "WIKI", "INFRA"]);
        let ext = CategoryScheme::Extended.categories();
        assert_eq!(ext.len(), 29);
        assert_eq!(ext[6].name(), "AGRICULTURE");
        assert_eq!(ext[28].name(), "TECHNOLOGY");
    }

    #[test]
    fn theme_parsing() {
        assert_eq!("applied_sciences".parse::<Theme>().unwrap(), Theme::AppliedSciences);
        assert_eq!("MATHEMATICS".parse::<Theme>().unwrap(), Theme::Mathematics);
        assert!(matches!("ASTROLOGY".parse::<Theme>(), Err(Error::UnknownTheme(_))));
    }

    #[test]
    fn trait_vocabulary() {
        assert_eq!(Trait::Education.canonical_class("PhD"), Some("phd"));
        assert!(TraitLabel::new("u1", Trait::Gender, "other").is_err());
    }

    fn arb_event() -> impl Strategy<Value = Event> {
        (
            "[a-zA-Z0-9_ ]{1,12}",
            0i64..2_000_000_000,
            proptest::option::of(prop::sample::select(vec![0, 1, 2, 3, 4, 5, 6, 7, 8, 14, 100, 101])),
            0u32..(1 << 23),
        )
            .prop_map(|(user, secs, ns, bits)| {
                let category = ns.map(|n| map_namespace(n).unwrap()).unwrap_or(BasicCategory::Wiki);
                Event {
                    user: UserId(user),
                    timestamp: Utc.timestamp_opt(secs, 0).unwrap(),
                    namespace: ns,
                    category,
                    themes: ThemeSet::from_bits(bits).unwrap(),
                }
            })
    }

    proptest! {
        #[test]
        fn event_serde_roundtrip(ev in arb_event()) {
            let json = serde_json::to_string(&ev).unwrap();
            let back: Event = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(back, ev);
        }

        #[test]
        fn frame_of_is_monotone(a in 1_100_000_000i64..1_450_000_000, b in 1_100_000_000i64..1_450_000_000) {
            let grid = TimeGrid::default();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (lo, hi) = (Utc.timestamp_opt(lo, 0).unwrap(), Utc.timestamp_opt(hi, 0).unwrap());
            prop_assert!(grid.quarter_offset(&lo) <= grid.quarter_offset(&hi));
            if let (Some(i), Some(j)) = (grid.frame_of(&lo).index(), grid.frame_of(&hi).index()) {
                prop_assert!(i <= j);
                prop_assert!(grid.frame_start(i) <= lo && lo < grid.frame_start(i + 1));
            }
        }
    }
}
