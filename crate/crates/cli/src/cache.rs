//! Persistent reductivity memo: one `code TAB r TAB version` line per curve.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use spherical::CanonicalCode;

/// Entries written by another engine version are ignored.
pub const ENGINE_VERSION: &str = concat!("spherical-", env!("CARGO_PKG_VERSION"));

const FILE_NAME: &str = "reductivity.tsv";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CacheEntry {
    pub code: CanonicalCode,
    pub r: usize,
    pub version: String,
}

impl CacheEntry {
    fn parse(line: &str) -> Option<CacheEntry> {
        let mut fields = line.split('\t');
        let code = CanonicalCode::parse(fields.next()?).ok()?;
        let r = fields.next()?.parse().ok()?;
        let version = fields.next()?.to_string();
        if fields.next().is_some() || version.is_empty() {
            return None;
        }
        Some(CacheEntry { code, r, version })
    }

    fn to_line(&self) -> String {
        format!("{}\t{}\t{}", self.code, self.r, self.version)
    }
}

/// The memo is owned by one thread; workers hand results back to it.
pub struct Cache {
    path: PathBuf,
    known: HashMap<CanonicalCode, usize>,
    writer: Option<BufWriter<File>>,
    pub hits: usize,
}

impl Cache {
    /// Loads `dir/reductivity.tsv`, skipping corrupt lines with a warning.
    pub fn open(dir: &Path) -> std::io::Result<Cache> {
        fs::create_dir_all(dir)?;
        let path = dir.join(FILE_NAME);
        let mut known = HashMap::new();
        if path.exists() {
            for (i, line) in fs::read_to_string(&path)?.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match CacheEntry::parse(line) {
                    Some(e) if e.version == ENGINE_VERSION => {
                        known.insert(e.code, e.r);
                    }
                    Some(_) => {}
                    None => eprintln!("warning: {}:{}: skipping corrupt cache line", path.display(), i + 1),
                }
            }
        }
        Ok(Cache { path, known, writer: None, hits: 0 })
    }

    pub fn get(&mut self, code: &CanonicalCode) -> Option<usize> {
        let r = self.known.get(code).copied();
        if r.is_some() {
            self.hits += 1;
        }
        r
    }

    /// Records a value and flushes it, so an interrupted run keeps it.
    pub fn put(&mut self, code: &CanonicalCode, r: usize) -> std::io::Result<()> {
        if self.known.get(code) == Some(&r) {
            return Ok(());
        }
        if self.writer.is_none() {
            let file = OpenOptions::new().create(true).append(true).open(&self.path)?;
            self.writer = Some(BufWriter::new(file));
        }
        let w = self.writer.as_mut().expect("writer just opened");
        let entry = CacheEntry { code: code.clone(), r, version: ENGINE_VERSION.to_string() };
        writeln!(w, "{}", entry.to_line())?;
        w.flush()?;
        self.known.insert(code.clone(), r);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_and_skips_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let code = spherical::generators::torus_projection(3, 2).unwrap().canonical();
        {
            let mut cache = Cache::open(dir.path()).unwrap();
            assert_eq!(cache.get(&code), None);
            cache.put(&code, 1).unwrap();
        }
        let path = dir.path().join(FILE_NAME);
        let mut text = fs::read_to_string(&path).unwrap();
        text.push_str("garbage line\n1+ 1+\tnot-a-number\tv\n1+ 1+\t0\tother-version\n");
        fs::write(&path, text).unwrap();
        let mut cache = Cache::open(dir.path()).unwrap();
        assert_eq!(cache.get(&code), Some(1));
        assert_eq!(cache.get(&CanonicalCode::parse("1+ 1+").unwrap()), None);
        assert_eq!(cache.hits, 1);
    }
}
