//! Song history in a single SQLite file.
//!
//! The database runs in WAL mode with `synchronous = FULL`, so a record is on
//! disk once `insert` returns. All access goes through one connection behind a
//! mutex, which serializes writers.

use std::path::Path;
use std::sync::Mutex;

use rusqlite::{params, Connection, OptionalExtension, Row};
use serde::{Deserialize, Serialize};
use versetune::{EvaluationReport, KeySignature, TimeSignature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    Lyrics,
    Image,
}

impl InputKind {
    fn as_str(self) -> &'static str {
        match self {
            InputKind::Lyrics => "lyrics",
            InputKind::Image => "image",
        }
    }
}

/// One generated song. Binary artifacts are served by their own routes and
/// left out of the JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SongRecord {
    pub id: String,
    /// RFC 3339, UTC.
    pub created_at: String,
    pub input_kind: InputKind,
    pub lyrics: String,
    pub title: String,
    pub key: KeySignature,
    pub time_signature: TimeSignature,
    pub seed: u64,
    pub output: versetune::OutputKind,
    pub instrument: u8,
    pub report: Option<EvaluationReport>,
    pub rating: Option<u8>,
    #[serde(skip)]
    pub musicxml: Vec<u8>,
    #[serde(skip)]
    pub midi: Vec<u8>,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error(transparent)]
    Sqlite(#[from] rusqlite::Error),
    #[error("stored record is corrupt: {0}")]
    Corrupt(String),
}

pub type StoreResult<T> = Result<T, StoreError>;

pub struct Store {
    conn: Mutex<Connection>,
}

const COLUMNS: &str =
    "id, created_at, input_kind, lyrics, title, key, time_signature, seed, output, instrument, report, rating, musicxml, midi";

fn corrupt(what: &str, detail: impl std::fmt::Display) -> StoreError {
    StoreError::Corrupt(format!("{what}: {detail}"))
}

/// A row as stored; text columns are parsed by [`RawRow::decode`].
struct RawRow {
    id: String,
    created_at: String,
    input_kind: String,
    lyrics: String,
    title: String,
    key: String,
    time_signature: String,
    seed: i64,
    output: String,
    instrument: u8,
    report: Option<String>,
    rating: Option<u8>,
    musicxml: Vec<u8>,
    midi: Vec<u8>,
}

fn read_row(row: &Row<'_>) -> rusqlite::Result<RawRow> {
    Ok(RawRow {
        id: row.get(0)?,
        created_at: row.get(1)?,
        input_kind: row.get(2)?,
        lyrics: row.get(3)?,
        title: row.get(4)?,
        key: row.get(5)?,
        time_signature: row.get(6)?,
        seed: row.get(7)?,
        output: row.get(8)?,
        instrument: row.get(9)?,
        report: row.get(10)?,
        rating: row.get(11)?,
        musicxml: row.get(12)?,
        midi: row.get(13)?,
    })
}

impl RawRow {
    fn decode(self) -> StoreResult<SongRecord> {
        let input_kind = match self.input_kind.as_str() {
            "lyrics" => InputKind::Lyrics,
            "image" => InputKind::Image,
            other => return Err(corrupt("input_kind", other)),
        };
        let report = self.report.map(|r| serde_json::from_str(&r)).transpose().map_err(|e| corrupt("report", e))?;
        Ok(SongRecord {
            id: self.id,
            created_at: self.created_at,
            input_kind,
            lyrics: self.lyrics,
            title: self.title,
            key: self.key.parse().map_err(|e| corrupt("key", e))?,
            time_signature: self.time_signature.parse().map_err(|e| corrupt("time_signature", e))?,
            // Seeds are stored as the same 64 bits reinterpreted as signed.
            seed: self.seed as u64,
            output: self.output.parse().map_err(|e| corrupt("output", e))?,
            instrument: self.instrument,
            report,
            rating: self.rating,
            musicxml: self.musicxml,
            midi: self.midi,
        })
    }
}

impl Store {
    pub fn open(path: &Path) -> StoreResult<Store> {
        Store::init(Connection::open(path)?)
    }

    /// A throwaway store, for tests.
    pub fn in_memory() -> StoreResult<Store> {
        Store::init(Connection::open_in_memory()?)
    }

    fn init(conn: Connection) -> StoreResult<Store> {
        conn.pragma_update(None, "journal_mode", "WAL")?;
        conn.pragma_update(None, "synchronous", "FULL")?;
        conn.execute_batch(
            "CREATE TABLE IF NOT EXISTS songs (
                seq INTEGER PRIMARY KEY AUTOINCREMENT,
                id TEXT NOT NULL UNIQUE,
                created_at TEXT NOT NULL,
                input_kind TEXT NOT NULL,
                lyrics TEXT NOT NULL,
                title TEXT NOT NULL,
                key TEXT NOT NULL,
                time_signature TEXT NOT NULL,
                seed INTEGER NOT NULL,
                output TEXT NOT NULL,
                instrument INTEGER NOT NULL,
                report TEXT,
                rating INTEGER CHECK (rating BETWEEN 1 AND 5),
                musicxml BLOB NOT NULL,
                midi BLOB NOT NULL
            );",
        )?;
        Ok(Store { conn: Mutex::new(conn) })
    }

    fn conn(&self) -> std::sync::MutexGuard<'_, Connection> {
        self.conn.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    pub fn insert(&self, record: &SongRecord) -> StoreResult<()> {
        let report = record.report.as_ref().map(|r| serde_json::to_string(r).expect("reports serialize"));
        self.conn().execute(
            &format!("INSERT INTO songs ({COLUMNS}) VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9, ?10, ?11, ?12, ?13, ?14)"),
            params![
                record.id,
                record.created_at,
                record.input_kind.as_str(),
                record.lyrics,
                record.title,
                record.key.to_string(),
                record.time_signature.to_string(),
                record.seed as i64,
                record.output.to_string(),
                record.instrument,
                report,
                record.rating,
                record.musicxml,
                record.midi,
            ],
        )?;
        Ok(())
    }

    pub fn get(&self, id: &str) -> StoreResult<Option<SongRecord>> {
        let found = self
            .conn()
            .query_row(&format!("SELECT {COLUMNS} FROM songs WHERE id = ?1"), [id], read_row)
            .optional()?;
        found.map(RawRow::decode).transpose()
    }

    /// Newest first, and the total number of records.
    pub fn list(&self, limit: usize, offset: usize) -> StoreResult<(Vec<SongRecord>, usize)> {
        let conn = self.conn();
        let total: i64 = conn.query_row("SELECT COUNT(*) FROM songs", [], |r| r.get(0))?;
        let mut stmt = conn.prepare(&format!("SELECT {COLUMNS} FROM songs ORDER BY seq DESC LIMIT ?1 OFFSET ?2"))?;
        let rows = stmt.query_map(params![limit as i64, offset as i64], read_row)?;
        let mut items = Vec::new();
        for row in rows {
            items.push(row?.decode()?);
        }
        Ok((items, total as usize))
    }

    /// Overwrites the rating; `None` when the id is unknown.
    pub fn set_rating(&self, id: &str, stars: u8) -> StoreResult<Option<SongRecord>> {
        let changed = self.conn().execute("UPDATE songs SET rating = ?1 WHERE id = ?2", params![stars, id])?;
        if changed == 0 {
            return Ok(None);
        }
        self.get(id)
    }

    /// Folds the write-ahead log back into the main file.
    pub fn checkpoint(&self) -> StoreResult<()> {
        self.conn().query_row("PRAGMA wal_checkpoint(TRUNCATE)", [], |_| Ok(()))?;
        Ok(())
    }
}
