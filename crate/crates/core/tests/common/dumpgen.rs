//! Generator for MediaWiki stub-history exports that tallies, while
//! writing, what a correct reader must report.

use std::collections::BTreeSet;
use std::io::Read;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Column of each namespace code in the basic category order
/// CONTENT, TALK-C, USER, TALK-U, WIKI, INFRA; `None` for unmapped codes.
fn category_of(ns: i32) -> Option<usize> {
    match ns {
        0 | 6 => Some(0),
        1 | 7 => Some(1),
        2 => Some(2),
        3 => Some(3),
        4 | 5 => Some(4),
        8..=15 | 100 | 101 => Some(5),
        _ => None,
    }
}

const NAMESPACES: [i32; 14] = [0, 0, 0, 1, 2, 3, 4, 5, 6, 10, 14, 100, 118, -1];

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct DumpTruth {
    pub pages: u64,
    pub revisions: u64,
    pub emitted: u64,
    pub anonymous: u64,
    pub unmapped: u64,
    pub out_of_window: u64,
    pub bad_timestamps: u64,
    pub per_category: [u64; 6],
    pub users: BTreeSet<String>,
}

pub struct DumpGen {
    rng: ChaCha8Rng,
    next_page: u64,
    pub truth: DumpTruth,
}

pub const HEADER: &str = "<mediawiki xmlns=\"http://www.mediawiki.org/xml/export-0.8/\" version=\"0.8\" xml:lang=\"en\">\n  <siteinfo>\n    <sitename>Wikipedia</sitename>\n    <namespaces>\n      <namespace key=\"0\" case=\"first-letter\" />\n      <namespace key=\"2\" case=\"first-letter\">User</namespace>\n    </namespaces>\n  </siteinfo>\n";
pub const FOOTER: &str = "</mediawiki>\n";

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl DumpGen {
    /// Tallies assume a grid starting January 2007.
    pub fn new(rng: ChaCha8Rng) -> Self {
        DumpGen { rng, next_page: 1, truth: DumpTruth::default() }
    }

    /// One `<page>` element with 1–`max_revisions` revisions.
    pub fn page(&mut self, frames: usize, max_revisions: usize) -> String {
        let ns = NAMESPACES[self.rng.random_range(0..NAMESPACES.len())];
        self.page_in(ns, frames, max_revisions)
    }

    pub fn page_in(&mut self, ns: i32, frames: usize, max_revisions: usize) -> String {
        let r = &mut self.rng;
        let id = self.next_page;
        self.next_page += 1;
        let mut out = format!(
            "  <page>\n    <title>Page {id} &amp; more</title>\n    <ns>{ns}</ns>\n    <id>{id}</id>\n"
        );
        self.truth.pages += 1;
        let first_year = 2007;
        let last_month = first_year * 12 + 3 * frames as i32;
        for k in 0..r.random_range(1..=max_revisions) {
            self.truth.revisions += 1;
            let year = r.random_range(2004..=2015);
            let month = r.random_range(1..=12);
            let bad_time = r.random::<f64>() < 0.02;
            let timestamp = if bad_time {
                "not-a-time".to_string()
            } else {
                format!("{year}-{month:02}-{:02}T{:02}:{:02}:{:02}Z", r.random_range(1..=28), r.random_range(0..24), r.random_range(0..60), r.random_range(0..60))
            };
            let who = r.random::<f64>();
            let (contributor, name) = if who < 0.1 {
                (format!("<contributor><ip>10.0.{}.{}</ip></contributor>", r.random_range(0..255), r.random_range(0..255)), None)
            } else if who < 0.12 {
                ("<contributor deleted=\"deleted\" />".to_string(), None)
            } else {
                let name = match r.random_range(0..4) {
                    0 => format!("Ed <{}> & co", r.random_range(0..40)),
                    _ => format!("Editor{}", r.random_range(0..400)),
                };
                (format!("<contributor>\n        <username>{}</username>\n        <id>{}</id>\n      </contributor>", escape(&name), r.random_range(1..9999)), Some(name))
            };
            out.push_str(&format!(
                "    <revision>\n      <id>{}</id>\n      <parentid>{}</parentid>\n      <timestamp>{timestamp}</timestamp>\n      {contributor}\n      <minor />\n      <comment>edit {k} &lt;fix&gt;</comment>\n      <model>wikitext</model>\n      <format>text/x-wiki</format>\n      <text id=\"{}\" bytes=\"{}\" />\n      <sha1>abc{k}</sha1>\n    </revision>\n",
                id * 1000 + k as u64,
                id * 1000 + k as u64 - 1,
                id * 7 + k as u64,
                r.random_range(0..50_000),
            ));

            // tally in the reader's rule order: contributor, timestamp, namespace, window
            let t = &mut self.truth;
            let Some(name) = name else {
                t.anonymous += 1;
                continue;
            };
            if bad_time {
                t.bad_timestamps += 1;
                continue;
            }
            let Some(cat) = category_of(ns) else {
                t.unmapped += 1;
                continue;
            };
            let m = year * 12 + month - 1;
            if m < first_year * 12 || m >= last_month {
                t.out_of_window += 1;
                continue;
            }
            t.emitted += 1;
            t.per_category[cat] += 1;
            t.users.insert(name);
        }
        out.push_str("  </page>\n");
        out
    }
}

/// A dump of at least `target_bytes`, produced page by page on read so the
/// document never exists in memory as a whole.
pub struct DumpStream {
    pub gen: DumpGen,
    frames: usize,
    target_bytes: u64,
    produced: u64,
    chunk: Vec<u8>,
    pos: usize,
    finished: bool,
}

impl DumpStream {
    pub fn new(gen: DumpGen, frames: usize, target_bytes: u64) -> Self {
        DumpStream { gen, frames, target_bytes, produced: 0, chunk: HEADER.as_bytes().to_vec(), pos: 0, finished: false }
    }

    pub fn produced(&self) -> u64 {
        self.produced
    }
}

impl Read for DumpStream {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        if self.pos == self.chunk.len() {
            if self.finished {
                return Ok(0);
            }
            self.chunk.clear();
            self.pos = 0;
            if self.produced >= self.target_bytes {
                self.chunk.extend_from_slice(FOOTER.as_bytes());
                self.finished = true;
            } else {
                while self.chunk.len() < 64 * 1024 {
                    let page = self.gen.page(self.frames, 12);
                    self.chunk.extend_from_slice(page.as_bytes());
                }
            }
        }
        let n = buf.len().min(self.chunk.len() - self.pos);
        buf[..n].copy_from_slice(&self.chunk[self.pos..self.pos + n]);
        self.pos += n;
        self.produced += n as u64;
        Ok(n)
    }
}

/// A whole dump of `pages` pages as one string, with its tallies. Pages
/// cycle through the namespace list so small dumps cover every category.
pub fn small_dump(rng: ChaCha8Rng, pages: usize, frames: usize) -> (String, DumpTruth) {
    let mut gen = DumpGen::new(rng);
    let mut doc = HEADER.to_string();
    for i in 0..pages {
        doc.push_str(&gen.page_in(NAMESPACES[i % NAMESPACES.len()], frames, 15));
    }
    doc.push_str(FOOTER);
    (doc, gen.truth)
}
