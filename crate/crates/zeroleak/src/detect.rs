//! Detection runs: seeded secret inputs, traced executions, MI analysis,
//! external detector reports and the advisory disassembly scan, merged into
//! one leakage report.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use zeroleak_core::adapters::{self, AdapterError};
use zeroleak_core::classify::{controlling_line, has_loop_keyword};
use zeroleak_core::csrc::{function_containing_line, line_range};
use zeroleak_core::leakage::{Detector, DetectorVerdict, LeakageKind, LeakagePoint, MergedReport};
use zeroleak_core::mi::{analyze_bundle, differs_only_in_count, whole_trace_mi, AnalysisError, Channel, LeakageFinding};
use zeroleak_core::srcmap::{parse_annotated_disassembly, AddressMap, SourceLocation, SrcmapError};
use zeroleak_core::trace::TraceBundle;

use crate::exec::{self, ExecError, Vars};
use crate::io::{self, BundleIoError};
use crate::target::{ExternalTool, IpEncoding, Stage, TargetError, TargetSpec};

pub const DEFAULT_INPUTS: usize = 16;
pub const DEFAULT_SEED: u64 = 0x5eed_2e20_1eaf;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectOptions {
    pub inputs: usize,
    pub seed: u64,
    /// Rerun input 0 and require an identical trace.
    pub check_determinism: bool,
    /// Copy the recorded bundle here, with the disassembly when one was made.
    pub save_bundle: Option<PathBuf>,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self { inputs: DEFAULT_INPUTS, seed: DEFAULT_SEED, check_determinism: true, save_bundle: None }
    }
}

#[derive(Debug, Error)]
pub enum DetectError {
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error("trace run for input {input_id} failed: {diagnostics}")]
    TraceFailure { input_id: u32, diagnostics: String },
    #[error(transparent)]
    Bundle(#[from] BundleIoError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("disassembly: {0}")]
    Srcmap(#[from] SrcmapError),
    #[error("disassembler failed: {0}")]
    Disassembler(String),
    #[error("{tool:?} report: {source}")]
    Adapter { tool: ExternalTool, source: AdapterError },
    #[error("spectre scan: {0}")]
    Scanner(AdapterError),
    #[error("cannot read {path}: {source}")]
    Report { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Target(#[from] TargetError),
}

/// `count` secrets of `len` bytes from a ChaCha20 stream seeded with `seed`.
pub fn secret_inputs(count: usize, len: usize, seed: u64) -> Vec<Vec<u8>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut v = vec![0; len];
            rng.fill_bytes(&mut v);
            v
        })
        .collect()
}

/// Where builtin finding ips point to.
pub enum IpResolver<'a> {
    /// Instruction addresses, through a disassembly map. Paths under
    /// `strip` are made relative to it.
    Map { map: &'a AddressMap, strip: Option<&'a Path> },
    /// Line numbers in `file`.
    Lines { file: &'a str },
}

fn relativize(loc: &mut SourceLocation, strip: Option<&Path>) {
    let Some(base) = strip else { return };
    if let Ok(rel) = Path::new(&loc.file).strip_prefix(base) {
        loc.file = rel.to_string_lossy().into_owned();
    }
    // macOS-style /private prefixes and symlinked temp dirs
    else if let Ok(canon) = base.canonicalize() {
        if let Ok(rel) = Path::new(&loc.file).strip_prefix(canon) {
            loc.file = rel.to_string_lossy().into_owned();
        }
    }
}

impl IpResolver<'_> {
    fn locate(&self, ip: u64, sources: &dyn Fn(&str) -> Option<String>) -> Option<SourceLocation> {
        match self {
            Self::Map { map, strip } => {
                let mut loc = map.lookup(ip)?.clone();
                if loc.function.is_none() {
                    loc.function = map.function_at(ip).map(str::to_string);
                }
                relativize(&mut loc, *strip);
                Some(loc)
            }
            Self::Lines { file } => {
                let line = u32::try_from(ip).ok().filter(|&l| l >= 1)?;
                let mut loc = SourceLocation::new(*file, line);
                if let Some(src) = sources(file) {
                    loc.function =
                        function_containing_line(&src, line).and_then(|i| i.function_name().map(str::to_string));
                }
                Some(loc)
            }
        }
    }
}

/// Lines searched above a control-flow finding for its condition.
pub const CONTROL_WALK_BACK: u32 = 3;

/// Converts MI findings to leakage points. Control-flow findings move to
/// their controlling condition line when the source is available; on a line
/// with a loop keyword they become `LoopBound`, otherwise `ConditionalBranch`.
/// `sources` returns the text of a (relative) source file when available.
pub fn builtin_verdict(
    findings: &[LeakageFinding],
    resolver: &IpResolver<'_>,
    sources: &dyn Fn(&str) -> Option<String>,
) -> DetectorVerdict {
    let mut cache: BTreeMap<String, Option<String>> = BTreeMap::new();
    let points = findings
        .iter()
        .map(|f| {
            let mut loc = resolver.locate(f.ip, sources);
            let kind = match f.channel {
                Channel::MemoryAccess => LeakageKind::MemoryAccess,
                Channel::ControlFlow => {
                    let looped = loc.as_mut().and_then(|l| {
                        let src = cache.entry(l.file.clone()).or_insert_with(|| sources(&l.file)).as_ref()?;
                        l.line = controlling_line(src, l.line, CONTROL_WALK_BACK);
                        Some(has_loop_keyword(&src[line_range(src, l.line)?]))
                    });
                    if looped == Some(true) {
                        LeakageKind::LoopBound
                    } else {
                        LeakageKind::ConditionalBranch
                    }
                }
            };
            let detail = format!(
                "ip 0x{:x}: {} distinct observations, {:.3} bits",
                f.ip, f.distinct_observations, f.mi_bits
            );
            LeakagePoint::new(kind, Detector::Builtin)
                .at(loc)
                .with_ip(f.ip)
                .with_severity(f.mi_bits)
                .with_detail(detail)
        })
        .collect();
    DetectorVerdict::new(Detector::Builtin, points)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub inputs: usize,
    /// `None` for bundles recorded elsewhere.
    pub seed: Option<u64>,
    pub whole_trace_mi: Option<f64>,
    pub findings: Vec<LeakageFinding>,
    pub verdicts: Vec<DetectorVerdict>,
    pub merged: MergedReport,
}

impl DetectionReport {
    pub fn is_secure(&self) -> bool {
        self.merged.is_secure()
    }

    pub fn leak_count(&self) -> usize {
        self.merged.unique_leak_count()
    }
}

/// Flat JSON form of a point list: `kind, file, line, ip, severity_bits,
/// detector, detail`.
pub fn points_json(points: &[LeakagePoint]) -> serde_json::Value {
    points
        .iter()
        .map(|p| {
            serde_json::json!({
                "kind": p.kind.as_str(),
                "file": p.source.as_ref().map(|s| s.file.as_str()),
                "line": p.line(),
                "function": p.source.as_ref().and_then(|s| s.function.as_deref()),
                "ip": p.ip.map(|ip| format!("0x{ip:x}")),
                "severity_bits": p.severity_bits,
                "detector": p.detectors.iter().map(|d| d.as_str()).collect::<Vec<_>>(),
                "detail": p.detail,
            })
        })
        .collect()
}

fn record_traces(
    spec: &TargetSpec,
    stage: &Stage,
    cmd: &str,
    opts: &DetectOptions,
) -> Result<TraceBundle, DetectError> {
    let inputs_dir = tempfile::Builder::new()
        .prefix("zeroleak-inputs-")
        .tempdir()
        .map_err(|source| DetectError::Report { path: std::env::temp_dir(), source })?;
    let trace_dir = tempfile::Builder::new()
        .prefix("zeroleak-traces-")
        .tempdir()
        .map_err(|source| DetectError::Report { path: std::env::temp_dir(), source })?;
    let base = stage.vars(spec)?.set_path("trace_dir", trace_dir.path());

    let run = |id: u32, secret: &[u8], out: &Path| -> Result<(), DetectError> {
        let input = inputs_dir.path().join(format!("input_{id}.bin"));
        fs::write(&input, secret).map_err(|source| DetectError::Report { path: input.clone(), source })?;
        let vars = base.clone().set_path("input", &input).set("input_id", id.to_string());
        let rendered = exec::render(cmd, &vars, true)?;
        let env = [("ZLTR_OUT", out.to_string_lossy().into_owned()), ("ZLTR_INPUT_ID", id.to_string())];
        let o = exec::run_shell(&rendered, Some(stage.path()), &env, spec.timeout())?;
        if !o.success() {
            return Err(DetectError::TraceFailure { input_id: id, diagnostics: o.diagnostics() });
        }
        if !out.is_file() {
            return Err(DetectError::TraceFailure { input_id: id, diagnostics: "no trace file written".into() });
        }
        Ok(())
    };

    let secrets = secret_inputs(opts.inputs, spec.secret_bytes, opts.seed);
    for (i, s) in secrets.iter().enumerate() {
        let id = i as u32;
        run(id, s, &trace_dir.path().join(io::trace_file_name(id)))?;
    }
    if opts.check_determinism && !secrets.is_empty() {
        let again = inputs_dir.path().join("rerun.zltr");
        run(0, &secrets[0], &again)?;
        let first = io::read_trace_file(&trace_dir.path().join(io::trace_file_name(0)))?;
        if io::read_trace_file(&again)? != first {
            return Err(DetectError::TraceFailure {
                input_id: 0,
                diagnostics: "two runs on the same input produced different traces".into(),
            });
        }
    }
    let bundle = io::read_bundle_dir(trace_dir.path())?;
    if let Some(dir) = &opts.save_bundle {
        io::write_bundle_dir(dir, &bundle)?;
    }
    Ok(bundle)
}

fn disassemble(spec: &TargetSpec, stage: &Stage, vars: &Vars) -> Result<String, DetectError> {
    let cmd = exec::render(spec.disasm_cmd(), vars, true)?;
    let o = exec::run_shell(&cmd, Some(stage.path()), &[], spec.timeout())?;
    if !o.success() {
        return Err(DetectError::Disassembler(o.diagnostics()));
    }
    Ok(o.stdout)
}

fn external_verdict(
    tool: ExternalTool,
    text: &str,
    map: Option<&AddressMap>,
) -> Result<DetectorVerdict, AdapterError> {
    match tool {
        ExternalTool::Microwalk => {
            let empty = AddressMap::default();
            adapters::parse_microwalk_report(text, map.unwrap_or(&empty))
        }
        ExternalTool::Spectector => adapters::parse_spectector_output(text, map),
        ExternalTool::Pitchfork => adapters::parse_pitchfork_output(text, map),
        ExternalTool::Kleespectre => adapters::parse_kleespectre_output(text),
    }
}

fn detector_of(tool: ExternalTool) -> Detector {
    match tool {
        ExternalTool::Microwalk => Detector::Microwalk,
        ExternalTool::Spectector => Detector::Spectector,
        ExternalTool::Pitchfork => Detector::Pitchfork,
        ExternalTool::Kleespectre => Detector::KLEESpectre,
    }
}

/// Memory findings whose address sequences differ only in length are
/// reported on the control-flow channel.
pub fn attribute_counts(findings: &mut [LeakageFinding], bundle: &TraceBundle) {
    for f in findings.iter_mut() {
        if f.channel == Channel::MemoryAccess && differs_only_in_count(bundle, f.ip, f.channel) {
            f.channel = Channel::ControlFlow;
        }
    }
}

fn builtin_findings(bundle: &TraceBundle) -> Result<Vec<LeakageFinding>, DetectError> {
    let mut findings = analyze_bundle(bundle)?;
    attribute_counts(&mut findings, bundle);
    Ok(findings)
}

/// Builtin analysis of an already recorded bundle, without a target tree.
pub fn analyze_recorded(
    bundle: &TraceBundle,
    resolver: &IpResolver<'_>,
    sources: &dyn Fn(&str) -> Option<String>,
) -> Result<DetectionReport, DetectError> {
    let findings = builtin_findings(bundle)?;
    let whole = whole_trace_mi(bundle)?;
    let verdicts = vec![builtin_verdict(&findings, resolver, sources)];
    let merged = MergedReport::from_verdicts(&verdicts);
    Ok(DetectionReport { inputs: bundle.input_count(), seed: None, whole_trace_mi: Some(whole), findings, verdicts, merged })
}

/// File name of the disassembly saved next to a recorded bundle.
pub const DISASM_FILE: &str = "disasm.txt";

/// Writes the disassembly with staging paths made relative.
fn save_disassembly(dir: &Path, text: &str, stage: &Path) -> Result<(), DetectError> {
    let mut t = text.to_string();
    for base in [Some(stage.to_path_buf()), stage.canonicalize().ok()].into_iter().flatten() {
        t = t.replace(&format!("{}/", base.to_string_lossy()), "");
    }
    let path = dir.join(DISASM_FILE);
    fs::create_dir_all(dir).and_then(|_| fs::write(&path, t)).map_err(|source| DetectError::Report { path, source })
}

/// Runs every configured detector against an already built stage.
pub fn run_detect(spec: &TargetSpec, stage: &Stage, opts: &DetectOptions) -> Result<DetectionReport, DetectError> {
    let vars = stage.vars(spec)?;
    let sources = |rel: &str| stage.read(Path::new(rel)).ok();
    let needs_map = (spec.trace_cmd.is_some() && spec.ip_encoding == IpEncoding::Address)
        || spec.spectre_scan
        || !spec.detector_cmds.is_empty() && spec.binary.is_some();
    let disasm = if needs_map { Some(disassemble(spec, stage, &vars)?) } else { None };
    let map = match &disasm {
        Some(text) => Some(parse_annotated_disassembly(text)?),
        None => None,
    };
    if let (Some(dir), Some(text)) = (&opts.save_bundle, &disasm) {
        save_disassembly(dir, text, stage.path())?;
    }

    let mut verdicts = Vec::new();
    let mut findings = Vec::new();
    let mut whole = None;
    if let Some(cmd) = &spec.trace_cmd {
        let bundle = record_traces(spec, stage, cmd, opts)?;
        findings = builtin_findings(&bundle)?;
        whole = Some(whole_trace_mi(&bundle)?);
        let defining = spec.defining_file(stage.path())?;
        let defining = defining.to_string_lossy();
        let resolver = match (spec.ip_encoding, &map) {
            (IpEncoding::Address, Some(map)) => IpResolver::Map { map, strip: Some(stage.path()) },
            _ => IpResolver::Lines { file: &defining },
        };
        verdicts.push(builtin_verdict(&findings, &resolver, &sources));
    }

    for d in &spec.detector_cmds {
        let rendered = exec::render(&d.cmd, &vars, true)?;
        let verdict = match exec::run_shell(&rendered, Some(stage.path()), &[], spec.timeout()) {
            Err(ExecError::CommandTimeout(..)) => {
                log::warn!("{:?} timed out; its verdict is inconclusive", d.tool);
                DetectorVerdict { tool: detector_of(d.tool), points: vec![], terminated: false }
            }
            Err(e) => return Err(e.into()),
            Ok(o) => {
                let text = match &d.report {
                    Some(t) => {
                        let path = stage.path().join(exec::render(t, &vars, false)?);
                        fs::read_to_string(&path).map_err(|source| DetectError::Report { path, source })?
                    }
                    None => o.stdout,
                };
                external_verdict(d.tool, &text, map.as_ref())
                    .map_err(|source| DetectError::Adapter { tool: d.tool, source })?
            }
        };
        verdicts.push(verdict);
    }

    if spec.spectre_scan {
        if let Some(text) = &disasm {
            verdicts.push(adapters::builtin_spectre_scan(text).map_err(DetectError::Scanner)?);
        }
    }

    for v in &mut verdicts {
        for p in &mut v.points {
            if let Some(loc) = &mut p.source {
                relativize(loc, Some(stage.path()));
            }
        }
    }
    let merged = MergedReport::from_verdicts(&verdicts);
    Ok(DetectionReport { inputs: opts.inputs, seed: Some(opts.seed), whole_trace_mi: whole, findings, verdicts, merged })
}
