//! Target description and staged working copies.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;
use zeroleak_core::csrc::{self, CodeError};
use zeroleak_core::fingerprint::Fingerprinter;

use crate::exec::{self, Vars};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IpEncoding {
    /// Trace ips are instruction addresses resolved through disassembly.
    #[default]
    Address,
    /// Trace ips are 1-based line numbers in the file defining the target
    /// function (source-level instrumentation macros).
    SourceLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExternalTool {
    Microwalk,
    Spectector,
    Pitchfork,
    Kleespectre,
}

/// An external detector run after the build. Its report is read from
/// `report` (a template) when set, else from stdout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectorCommand {
    pub tool: ExternalTool,
    pub cmd: String,
    #[serde(default)]
    pub report: Option<String>,
}

fn default_secret_bytes() -> usize {
    16
}

fn default_language() -> String {
    "C".into()
}

fn default_timeout() -> u64 {
    exec::DEFAULT_TIMEOUT.as_secs()
}

fn default_true() -> bool {
    true
}

/// Target as described by a JSON file. Relative `root` is resolved against
/// the directory of that file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub name: String,
    pub root: PathBuf,
    /// Paths relative to `root`.
    pub source_files: Vec<PathBuf>,
    pub function_name: String,
    #[serde(default = "default_language")]
    pub language: String,
    pub build_cmd: String,
    pub test_cmd: String,
    /// Runs one traced execution; `{input}` is the secret file, and
    /// `ZLTR_OUT`/`ZLTR_INPUT_ID` are set in its environment.
    #[serde(default)]
    pub trace_cmd: Option<String>,
    /// Path template of the built binary, exposed as `{binary}`.
    #[serde(default)]
    pub binary: Option<String>,
    #[serde(default)]
    pub disasm_cmd: Option<String>,
    #[serde(default)]
    pub ip_encoding: IpEncoding,
    #[serde(default)]
    pub detector_cmds: Vec<DetectorCommand>,
    #[serde(default)]
    pub formatter_cmd: Option<String>,
    #[serde(default = "default_secret_bytes")]
    pub secret_bytes: usize,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Also run the advisory disassembly Spectre scanner.
    #[serde(default)]
    pub spectre_scan: bool,
    /// Fail fast when a referenced command is missing.
    #[serde(default = "default_true")]
    pub check_commands: bool,
}

#[derive(Debug, Error)]
pub enum TargetError {
    #[error("cannot read target spec {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid target spec {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("invalid target spec: {0}")]
    Invalid(String),
    #[error("`{name}` must be defined in exactly one source file, found {count}")]
    DefinitionCount { name: String, count: usize },
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("staging failed at {path}: {source}")]
    Stage { path: PathBuf, source: std::io::Error },
}

const DEFAULT_DISASM: &str = "objdump -d -l {binary}";

impl TargetSpec {
    pub fn load(path: &Path) -> Result<Self, TargetError> {
        let text = fs::read_to_string(path).map_err(|source| TargetError::Read { path: path.into(), source })?;
        let mut spec: TargetSpec =
            serde_json::from_str(&text).map_err(|source| TargetError::Parse { path: path.into(), source })?;
        if spec.root.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            spec.root = base.join(&spec.root);
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs.max(1))
    }

    pub fn disasm_cmd(&self) -> &str {
        self.disasm_cmd.as_deref().unwrap_or(DEFAULT_DISASM)
    }

    pub fn validate(&self) -> Result<(), TargetError> {
        let bad = |m: &str| Err(TargetError::Invalid(m.to_string()));
        if self.function_name.trim().is_empty() {
            return bad("function_name is empty");
        }
        if self.source_files.is_empty() {
            return bad("source_files is empty");
        }
        if self.source_files.iter().any(|p| p.is_absolute() || p.components().any(|c| c.as_os_str() == "..")) {
            return bad("source_files must be relative to root without `..`");
        }
        if self.trace_cmd.is_none() && self.detector_cmds.is_empty() && !self.spectre_scan {
            return bad("no detection configured: set trace_cmd, detector_cmds or spectre_scan");
        }
        if self.secret_bytes == 0 {
            return bad("secret_bytes must be positive");
        }
        if self.check_commands {
            let mut cmds = vec![self.build_cmd.as_str(), self.test_cmd.as_str()];
            cmds.extend(self.trace_cmd.as_deref());
            cmds.extend(self.formatter_cmd.as_deref());
            cmds.extend(self.detector_cmds.iter().map(|d| d.cmd.as_str()));
            if self.ip_encoding == IpEncoding::Address && self.trace_cmd.is_some() || self.spectre_scan {
                cmds.push(self.disasm_cmd());
            }
            if let Some(missing) = cmds.into_iter().find(|c| !exec::command_exists(c)) {
                return Err(TargetError::Invalid(format!("command not found: `{missing}`")));
            }
        }
        Ok(())
    }

    /// The source file (relative path) that defines the target function.
    pub fn defining_file(&self, root: &Path) -> Result<PathBuf, TargetError> {
        let mut hits = Vec::new();
        for rel in &self.source_files {
            let path = root.join(rel);
            let text = fs::read_to_string(&path).map_err(|source| TargetError::Read { path: path.clone(), source })?;
            match csrc::locate_function(&text, &self.function_name) {
                Ok(_) => hits.push(rel.clone()),
                Err(CodeError::FunctionSpanNotFound(_)) => {}
                Err(e) => return Err(e.into()),
            }
        }
        match hits.len() {
            1 => Ok(hits.remove(0)),
            count => Err(TargetError::DefinitionCount { name: self.function_name.clone(), count }),
        }
    }
}

/// A private copy of the target tree.
#[derive(Debug)]
pub struct Stage {
    dir: tempfile::TempDir,
}

fn copy_tree(from: &Path, to: &Path) -> Result<(), TargetError> {
    for entry in WalkDir::new(from).follow_links(false) {
        let entry = entry.map_err(|e| TargetError::Stage {
            path: from.into(),
            source: e.into_io_error().unwrap_or_else(|| std::io::Error::other("walk error")),
        })?;
        let rel = entry.path().strip_prefix(from).expect("walk stays under root");
        let dest = to.join(rel);
        let err = |source| TargetError::Stage { path: entry.path().into(), source };
        if entry.file_type().is_dir() {
            fs::create_dir_all(&dest).map_err(err)?;
        } else if entry.file_type().is_file() {
            fs::copy(entry.path(), &dest).map_err(err)?;
        } else if entry.file_type().is_symlink() {
            let link = fs::read_link(entry.path()).map_err(err)?;
            std::os::unix::fs::symlink(link, &dest).map_err(err)?;
        }
    }
    Ok(())
}

impl Stage {
    pub fn new(root: &Path) -> Result<Self, TargetError> {
        let dir = tempfile::Builder::new()
            .prefix("zeroleak-stage-")
            .tempdir()
            .map_err(|source| TargetError::Stage { path: root.into(), source })?;
        copy_tree(root, dir.path())?;
        Ok(Self { dir })
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn read(&self, rel: &Path) -> Result<String, TargetError> {
        let path = self.path().join(rel);
        fs::read_to_string(&path).map_err(|source| TargetError::Read { path, source })
    }

    pub fn write(&self, rel: &Path, text: &str) -> Result<(), TargetError> {
        let path = self.path().join(rel);
        fs::write(&path, text).map_err(|source| TargetError::Stage { path, source })
    }

    /// Placeholder values for command templates run in this stage.
    pub fn vars(&self, spec: &TargetSpec) -> Result<Vars, exec::ExecError> {
        let vars = Vars::new().set_path("staging_dir", self.path());
        Ok(match &spec.binary {
            Some(b) => {
                let bin = exec::render(b, &vars, false)?;
                vars.set("binary", bin)
            }
            None => vars,
        })
    }

    /// Copies the staged sources back over the originals.
    pub fn write_back(&self, spec: &TargetSpec) -> Result<(), TargetError> {
        for rel in &spec.source_files {
            let text = self.read(rel)?;
            let dest = spec.root.join(rel);
            fs::write(&dest, text).map_err(|source| TargetError::Stage { path: dest, source })?;
        }
        Ok(())
    }
}

/// Content hash of every regular file under `root`, for before/after checks.
pub fn tree_checksum(root: &Path) -> std::io::Result<String> {
    let mut fp = Fingerprinter::new();
    let mut entries: Vec<_> = WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.into_io_error().unwrap_or_else(|| std::io::Error::other("walk error")))?;
    entries.retain(|e| e.file_type().is_file());
    for e in entries {
        let rel = e.path().strip_prefix(root).unwrap_or(e.path());
        fp.push_bytes(rel.to_string_lossy().as_bytes());
        fp.push_bytes(&fs::read(e.path())?);
    }
    Ok(fp.finish().to_string())
}
