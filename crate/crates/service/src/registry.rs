//! Directory-backed application registry.
//!
//! Layout, one folder per application:
//!
//! ```text
//! <root>/<app_id>/record.json     id, name, source kind, mode, revision, timestamp
//! <root>/<app_id>/source.sbp|grg  the registered source, verbatim
//! <root>/<app_id>/theory.grg      the compiled theory
//! <root>/<app_id>/metadata.json
//! <root>/<app_id>/revision
//! ```
//!
//! A new revision is written to a staging folder and swapped in with two
//! renames, so a reader never sees a partially written application.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use arbiter_core::rule_lang::{parse_theory, render_theory, Diagnostic, Theory};
use arbiter_core::sbp::{metadata_of, ApplicationMetadata, Mode};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::source::{compile_source, SourceKind};

const STAGING_PREFIX: &str = ".staging-";
const RETIRED_PREFIX: &str = ".retired-";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordInfo {
    pub app_id: String,
    pub name: String,
    pub source_kind: SourceKind,
    pub mode: Mode,
    pub revision: u64,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone)]
pub struct ApplicationRecord {
    pub info: RecordInfo,
    pub theory: Theory,
    pub metadata: ApplicationMetadata,
    pub source: String,
    /// Warnings and notes from validation.
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegisterRequest {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub policy: Option<String>,
    #[serde(default)]
    pub grg: Option<String>,
    #[serde(default)]
    pub mode: Option<Mode>,
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("invalid application id `{0}` (use 1-64 letters, digits, `-` or `_`)")]
    InvalidId(String),
    #[error("a registration needs exactly one of `policy` or `grg`")]
    InvalidRequest,
    #[error("source rejected with {} diagnostic(s)", .0.len())]
    Invalid(Vec<Diagnostic>),
    #[error("application `{0}` is not registered")]
    NotFound(String),
    #[error("registry entry `{path}` is corrupt: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("registry i/o on `{path}`: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RegistryError + '_ {
    move |source| RegistryError::Io { path: path.to_path_buf(), source }
}

pub fn valid_app_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

pub struct Registry {
    root: PathBuf,
    apps: RwLock<HashMap<String, Arc<ApplicationRecord>>>,
    writer: Mutex<()>,
}

impl Registry {
    /// Opens (creating if needed) the registry at `root` and loads every
    /// application in it.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, RegistryError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        recover(&root)?;
        let mut apps = HashMap::new();
        for entry in fs::read_dir(&root).map_err(io_err(&root))? {
            let entry = entry.map_err(io_err(&root))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if name.starts_with('.') || !entry.path().is_dir() {
                continue;
            }
            let record = load_app_dir(&entry.path())?;
            apps.insert(record.info.app_id.clone(), Arc::new(record));
        }
        Ok(Registry { root, apps: RwLock::new(apps), writer: Mutex::new(()) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn get(&self, id: &str) -> Option<Arc<ApplicationRecord>> {
        self.apps.read().expect("registry lock").get(id).cloned()
    }

    /// Every application, ordered by id.
    pub fn list(&self) -> Vec<Arc<ApplicationRecord>> {
        let mut all: Vec<_> = self.apps.read().expect("registry lock").values().cloned().collect();
        all.sort_by(|a, b| a.info.app_id.cmp(&b.info.app_id));
        all
    }

    /// Validates and stores a new revision of `id`.
    pub fn register(&self, id: &str, req: RegisterRequest) -> Result<Arc<ApplicationRecord>, RegistryError> {
        if !valid_app_id(id) {
            return Err(RegistryError::InvalidId(id.to_string()));
        }
        let (kind, text) = match (req.policy, req.grg) {
            (Some(p), None) => (SourceKind::Sbp, p),
            (None, Some(g)) => (SourceKind::Grg, g),
            _ => return Err(RegistryError::InvalidRequest),
        };
        let mode = req.mode.unwrap_or_default();
        let compiled = compile_source(kind, &text, mode).map_err(RegistryError::Invalid)?;

        let _guard = self.writer.lock().expect("registry writer lock");
        let revision = self.get(id).map_or(1, |r| r.info.revision + 1);
        let record = ApplicationRecord {
            info: RecordInfo {
                app_id: id.to_string(),
                name: req.name.unwrap_or_else(|| id.to_string()),
                source_kind: kind,
                mode,
                revision,
                created_at: Utc::now(),
            },
            metadata: metadata_of(&compiled.theory),
            theory: compiled.theory,
            source: text,
            diagnostics: compiled.diagnostics,
        };
        self.persist(&record)?;
        let record = Arc::new(record);
        self.apps.write().expect("registry lock").insert(id.to_string(), record.clone());
        Ok(record)
    }

    fn persist(&self, record: &ApplicationRecord) -> Result<(), RegistryError> {
        let id = &record.info.app_id;
        let stamp = Utc::now().timestamp_nanos_opt().unwrap_or_default();
        let staging = self.root.join(format!("{STAGING_PREFIX}{id}-{stamp}"));
        fs::create_dir(&staging).map_err(io_err(&staging))?;
        write_synced(&staging.join("record.json"), &to_pretty(&record.info))?;
        write_synced(&staging.join(record.info.source_kind.file_name()), &record.source)?;
        write_synced(&staging.join("theory.grg"), &render_theory(&record.theory))?;
        write_synced(&staging.join("metadata.json"), &to_pretty(&record.metadata))?;
        write_synced(&staging.join("revision"), &format!("{}\n", record.info.revision))?;

        let live = self.root.join(id);
        let retired = self.root.join(format!("{RETIRED_PREFIX}{id}-{stamp}"));
        if live.exists() {
            fs::rename(&live, &retired).map_err(io_err(&live))?;
        }
        fs::rename(&staging, &live).map_err(io_err(&staging))?;
        if retired.exists() {
            fs::remove_dir_all(&retired).map_err(io_err(&retired))?;
        }
        Ok(())
    }
}

fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("registry records serialize");
    s.push('\n');
    s
}

fn write_synced(path: &Path, contents: &str) -> Result<(), RegistryError> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(contents.as_bytes()).map_err(io_err(path))?;
    f.sync_all().map_err(io_err(path))
}

/// Finishes or rolls back swaps interrupted by a crash.
fn recover(root: &Path) -> Result<(), RegistryError> {
    for entry in fs::read_dir(root).map_err(io_err(root))? {
        let path = entry.map_err(io_err(root))?.path();
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        if name.starts_with(STAGING_PREFIX) {
            fs::remove_dir_all(&path).map_err(io_err(&path))?;
        } else if let Some(rest) = name.strip_prefix(RETIRED_PREFIX) {
            let id = rest.rsplit_once('-').map_or(rest, |(id, _)| id);
            let live = root.join(id);
            if live.exists() {
                fs::remove_dir_all(&path).map_err(io_err(&path))?;
            } else {
                fs::rename(&path, &live).map_err(io_err(&path))?;
            }
        }
    }
    Ok(())
}

/// Loads one application folder, re-checking the stored theory.
pub fn load_app_dir(dir: &Path) -> Result<ApplicationRecord, RegistryError> {
    let corrupt = |reason: String| RegistryError::Corrupt { path: dir.to_path_buf(), reason };
    let read = |name: &str| {
        let p = dir.join(name);
        fs::read_to_string(&p).map_err(io_err(&p))
    };
    let info: RecordInfo = serde_json::from_str(&read("record.json")?).map_err(|e| corrupt(e.to_string()))?;
    let source = read(info.source_kind.file_name())?;
    let theory = parse_theory(&read("theory.grg")?).map_err(|e| corrupt(e.to_string()))?;
    let metadata: ApplicationMetadata =
        serde_json::from_str(&read("metadata.json")?).map_err(|e| corrupt(e.to_string()))?;
    if metadata != metadata_of(&theory) {
        return Err(corrupt("metadata.json does not match theory.grg".into()));
    }
    let compiled = compile_source(info.source_kind, &source, info.mode)
        .map_err(|d| corrupt(format!("stored source no longer validates ({} diagnostics)", d.len())))?;
    if compiled.theory != theory {
        return Err(corrupt("theory.grg does not match the stored source".into()));
    }
    Ok(ApplicationRecord { info, theory, metadata, source, diagnostics: compiled.diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;

    const POLICY: &str = include_str!("../../core/fixtures/salary.sbp");

    fn policy(mode: Mode) -> RegisterRequest {
        RegisterRequest { name: Some("Salary".into()), policy: Some(POLICY.into()), grg: None, mode: Some(mode) }
    }

    #[test]
    fn register_persist_reload() {
        let dir = tempfile::tempdir().unwrap();
        let reg = Registry::open(dir.path()).unwrap();
        let rec = reg.register("salary", policy(Mode::Basic)).unwrap();
        assert_eq!(rec.info.revision, 1);
        assert_eq!(rec.metadata.options, ["accept", "refuse"]);
        assert_eq!(rec.metadata.scenario_elements.len(), 4);

        let again = reg.register("salary", policy(Mode::Basic)).unwrap();
        assert_eq!(again.info.revision, 2);
        assert_eq!(again.metadata, rec.metadata);

        let reopened = Registry::open(dir.path()).unwrap();
        let loaded = reopened.get("salary").unwrap();
        assert_eq!(loaded.info, again.info);
        assert_eq!(loaded.theory, again.theory);
        assert_eq!(fs::read_to_string(dir.path().join("salary/revision")).unwrap(), "2\n");
    }

    #[test]
    fn rejects_bad_requests() {
        let dir = tempfile::tempdir().unwrap();
        let reg = Registry::open(dir.path()).unwrap();
        assert!(matches!(reg.register("../x", policy(Mode::Basic)), Err(RegistryError::InvalidId(_))));
        assert!(matches!(reg.register("x", RegisterRequest::default()), Err(RegistryError::InvalidRequest)));
        let bad = RegisterRequest { grg: Some("rule(r1,a,[]".into()), ..Default::default() };
        match reg.register("x", bad) {
            Err(RegistryError::Invalid(d)) => assert_eq!(d[0].code, "ParseError"),
            other => panic!("{other:?}"),
        }
        assert!(reg.list().is_empty());
    }

    #[test]
    fn interrupted_swap_is_recovered() {
        let dir = tempfile::tempdir().unwrap();
        {
            let reg = Registry::open(dir.path()).unwrap();
            reg.register("salary", policy(Mode::Advanced)).unwrap();
        }
        // Crash between the two renames: only the retired copy and a staging
        // folder exist.
        fs::rename(dir.path().join("salary"), dir.path().join(".retired-salary-1")).unwrap();
        fs::create_dir(dir.path().join(".staging-salary-2")).unwrap();
        let reg = Registry::open(dir.path()).unwrap();
        assert_eq!(reg.get("salary").unwrap().info.revision, 1);
        assert!(!dir.path().join(".staging-salary-2").exists());
    }

    #[test]
    fn tampered_metadata_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        Registry::open(dir.path()).unwrap().register("salary", policy(Mode::Basic)).unwrap();
        fs::write(dir.path().join("salary/metadata.json"), "{\"options\":[],\"scenario_elements\":[]}").unwrap();
        assert!(matches!(Registry::open(dir.path()), Err(RegistryError::Corrupt { .. })));
    }
}
