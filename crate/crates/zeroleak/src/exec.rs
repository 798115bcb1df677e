//! Shell command templates and child processes with timeouts.
//!
//! Templates are run through `sh -c` after substituting `{name}`
//! placeholders with shell-quoted values. Children get their own process
//! group so a timeout kills the whole tree.

use std::collections::BTreeMap;
use std::io::Read;
use std::os::unix::process::CommandExt;
use std::path::Path;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;
use wait_timeout::ChildExt;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("command timed out after {0:?}: {1}")]
    CommandTimeout(Duration, String),
    #[error("command not found: {0}")]
    CommandNotFound(String),
    #[error("unknown placeholder `{{{0}}}` in command template")]
    UnknownPlaceholder(String),
    #[error("failed to run `{cmd}`: {source}")]
    Io { cmd: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutput {
    pub command: String,
    /// `None` when killed by a signal.
    pub code: Option<i32>,
    pub stdout: String,
    pub stderr: String,
    pub elapsed: Duration,
}

impl CommandOutput {
    pub fn success(&self) -> bool {
        self.code == Some(0)
    }

    /// stderr followed by stdout, each trimmed.
    pub fn diagnostics(&self) -> String {
        let mut s = self.stderr.trim_end().to_string();
        let out = self.stdout.trim_end();
        if !out.is_empty() {
            if !s.is_empty() {
                s.push('\n');
            }
            s.push_str(out);
        }
        s
    }
}

/// Values for `{name}` placeholders.
#[derive(Debug, Clone, Default)]
pub struct Vars(BTreeMap<String, String>);

impl Vars {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(mut self, name: &str, value: impl Into<String>) -> Self {
        self.0.insert(name.to_string(), value.into());
        self
    }

    pub fn set_path(self, name: &str, value: &Path) -> Self {
        self.set(name, value.to_string_lossy().into_owned())
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.0.get(name).map(String::as_str)
    }
}

fn shell_quote(v: &str) -> String {
    let plain = !v.is_empty()
        && v.bytes().all(|b| b.is_ascii_alphanumeric() || b"_./-=:,+@%".contains(&b));
    if plain {
        v.to_string()
    } else {
        format!("'{}'", v.replace('\'', "'\\''"))
    }
}

/// Substitutes placeholders. `{{` and `}}` are literal braces; a `{` not
/// followed by an identifier and `}` is kept as is (shell brace groups).
pub fn render(template: &str, vars: &Vars, quote: bool) -> Result<String, ExecError> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(i) = rest.find(['{', '}']) {
        out.push_str(&rest[..i]);
        let tail = &rest[i..];
        if tail.starts_with("{{") || tail.starts_with("}}") {
            out.push_str(&tail[..1]);
            rest = &tail[2..];
            continue;
        }
        if tail.starts_with('{') {
            if let Some(end) = tail.find('}') {
                let name = &tail[1..end];
                if !name.is_empty() && name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_') {
                    let v = vars.get(name).ok_or_else(|| ExecError::UnknownPlaceholder(name.to_string()))?;
                    out.push_str(&if quote { shell_quote(v) } else { v.to_string() });
                    rest = &tail[end + 1..];
                    continue;
                }
            }
        }
        out.push_str(&tail[..1]);
        rest = &tail[1..];
    }
    out.push_str(rest);
    Ok(out)
}

fn drain<R: Read + Send + 'static>(r: Option<R>) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(mut r) = r {
            let _ = r.read_to_end(&mut buf);
        }
        String::from_utf8_lossy(&buf).into_owned()
    })
}

/// Runs `sh -c <cmd>` in `cwd` with extra environment, killing the process
/// group on timeout. Exit status 127 from the shell maps to
/// [`ExecError::CommandNotFound`].
pub fn run_shell(
    cmd: &str,
    cwd: Option<&Path>,
    env: &[(&str, String)],
    timeout: Duration,
) -> Result<CommandOutput, ExecError> {
    let io = |source| ExecError::Io { cmd: cmd.to_string(), source };
    let mut c = Command::new("sh");
    c.arg("-c").arg(cmd).stdin(Stdio::null()).stdout(Stdio::piped()).stderr(Stdio::piped());
    c.process_group(0);
    if let Some(d) = cwd {
        c.current_dir(d);
    }
    for (k, v) in env {
        c.env(k, v);
    }
    log::debug!("exec: {cmd}");
    let start = Instant::now();
    let mut child = c.spawn().map_err(io)?;
    let out_h = drain(child.stdout.take());
    let err_h = drain(child.stderr.take());
    let status = match child.wait_timeout(timeout).map_err(io)? {
        Some(s) => s,
        None => {
            let pgid = child.id() as libc::pid_t;
            // SAFETY: plain syscall on the child's own process group
            unsafe {
                libc::kill(-pgid, libc::SIGKILL);
            }
            let _ = child.wait();
            let _ = out_h.join();
            let _ = err_h.join();
            return Err(ExecError::CommandTimeout(timeout, cmd.to_string()));
        }
    };
    let stdout = out_h.join().unwrap_or_default();
    let stderr = err_h.join().unwrap_or_default();
    if status.code() == Some(127) {
        return Err(ExecError::CommandNotFound(
            stderr.lines().next().map_or_else(|| cmd.to_string(), str::to_string),
        ));
    }
    Ok(CommandOutput { command: cmd.to_string(), code: status.code(), stdout, stderr, elapsed: start.elapsed() })
}

/// Whether the first word of a command template resolves to an executable
/// (absolute/relative path or a `PATH` entry). Templates starting with a
/// placeholder are accepted since they only resolve at run time.
pub fn command_exists(template: &str) -> bool {
    let Some(first) = template.split_whitespace().next() else {
        return false;
    };
    if first.contains('{') || first.contains('=') {
        return true;
    }
    const BUILTINS: &[&str] = &["cd", "test", "[", "true", "false", "echo", "exit", "set", "export", "exec", ":"];
    if BUILTINS.contains(&first) {
        return true;
    }
    let is_exec = |p: &Path| {
        use std::os::unix::fs::PermissionsExt;
        p.metadata().is_ok_and(|m| m.is_file() && m.permissions().mode() & 0o111 != 0)
    };
    if first.contains('/') {
        return is_exec(Path::new(first));
    }
    std::env::var_os("PATH")
        .is_some_and(|paths| std::env::split_paths(&paths).any(|d| is_exec(&d.join(first))))
}
