use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rust_decimal::Decimal;
use zeroleak::bench::{run_bench, BenchConfig, BenchVariant};
use zeroleak::config::PipelineConfig;
use zeroleak::detect::{analyze_recorded, points_json, run_detect, DetectOptions, DetectionReport, IpResolver, DEFAULT_INPUTS, DEFAULT_SEED};
use zeroleak::exec;
use zeroleak::generate::{generate_crypto, generate_driver, GenerationTranscript};
use zeroleak::io::read_bundle_dir;
use zeroleak::report::{estimate_session_cost, SessionReport, SessionStatus};
use zeroleak::session::{apply_best, run_patch_session, SessionError};
use zeroleak::target::{Stage, TargetSpec};
use zeroleak_core::ledger::{CostLedger, ModelConfig};
use zeroleak_core::srcmap::parse_annotated_disassembly;

const EXIT_SECURE: u8 = 0;
const EXIT_LEAKS: u8 = 2;
const EXIT_ERROR: u8 = 3;

type Res = Result<u8, Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "zeroleak", version, about = "Side-channel leakage detection and patching")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Detect leakage in a target, or in a recorded trace bundle.
    Detect(DetectArgs),
    /// Run a patching session.
    Patch(PatchArgs),
    /// Measure gadget variants with the cycle harness.
    Bench(BenchArgs),
    /// Cost of a saved session, or of a token count under a model.
    Cost(CostArgs),
    /// Generate a trace driver for a library.
    GenDriver(GenDriverArgs),
    /// Generate an implementation of an algorithm function by function.
    GenCrypto(GenCryptoArgs),
    /// Print the summary of a saved session report.
    Report(ReportArgs),
    /// Resolve addresses through an annotated disassembly.
    Srcmap(SrcmapArgs),
}

#[derive(Args)]
struct DetectArgs {
    /// Target spec (JSON).
    #[arg(long, conflicts_with = "bundle")]
    target: Option<PathBuf>,
    /// Directory of recorded `trace_<id>.zltr` files.
    #[arg(long, required_unless_present = "target")]
    bundle: Option<PathBuf>,
    /// Annotated disassembly matching the bundle's ips.
    #[arg(long, requires = "bundle")]
    disasm: Option<PathBuf>,
    /// Source root for bundle mode; with `--lines-file` ips are line numbers.
    #[arg(long, requires = "bundle")]
    source_root: Option<PathBuf>,
    #[arg(long, requires = "bundle", conflicts_with = "disasm")]
    lines_file: Option<String>,
    #[arg(long, default_value_t = DEFAULT_INPUTS)]
    inputs: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    no_determinism_check: bool,
    /// Keep the recorded traces here.
    #[arg(long)]
    save_bundle: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Full report (findings and per-detector verdicts).
    #[arg(long)]
    full: bool,
}

#[derive(Args)]
struct PatchArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    target: PathBuf,
    /// Directory for `<name>.json` and `<name>.txt`.
    #[arg(long, default_value = "zeroleak-reports")]
    out: PathBuf,
    /// Write the best candidate over the original source.
    #[arg(long)]
    apply: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory with the corpus Makefile.
    #[arg(long, default_value = "corpus/c")]
    harness: PathBuf,
    /// Comma-separated variants.
    #[arg(long, value_delimiter = ',', default_value = "baseline,inline_lfence")]
    variants: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    cases: Vec<String>,
    #[arg(long, default_value_t = zeroleak::bench::DEFAULT_ITERATIONS)]
    iterations: u64,
    /// Write CSV here; the aligned table always goes to stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct CostArgs {
    /// Saved session report.
    #[arg(long, conflicts_with = "model")]
    report: Option<PathBuf>,
    /// Model preset id.
    #[arg(long, required_unless_present = "report")]
    model: Option<String>,
    #[arg(long, default_value_t = 0)]
    prompt_tokens: u64,
    #[arg(long, default_value_t = 0)]
    completion_tokens: u64,
    /// Per 1K prompt tokens.
    #[arg(long)]
    price_in: Option<Decimal>,
    /// Per 1K completion tokens.
    #[arg(long)]
    price_out: Option<Decimal>,
}

#[derive(Args)]
struct GenDriverArgs {
    #[arg(long)]
    config: PathBuf,
    /// Header or test file describing the library API.
    #[arg(long)]
    api: Option<PathBuf>,
    #[arg(long, default_value = "C")]
    language: String,
    /// Transcript JSON; the code goes to `<out>.c`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenCryptoArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    algorithm: String,
    #[arg(long, default_value = "C")]
    language: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    report: PathBuf,
    /// Print the JSON instead of the summary.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SrcmapArgs {
    #[arg(long)]
    disasm: PathBuf,
    /// Hex (0x..) or decimal addresses.
    addresses: Vec<String>,
}

fn read(path: &Path) -> Result<String, Box<dyn Error>> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn detection_json(r: &DetectionReport, full: bool) -> serde_json::Value {
    let mut v = serde_json::json!({
        "secure": r.is_secure(),
        "leak_count": r.leak_count(),
        "inputs": r.inputs,
        "seed": r.seed,
        "whole_trace_mi": r.whole_trace_mi,
        "points": points_json(&r.merged.points),
        "advisory": points_json(&r.merged.advisory),
        "all_terminated": r.merged.all_terminated,
    });
    if full {
        v["report"] = serde_json::to_value(r).expect("report serializes");
    }
    v
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Box<dyn Error>> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display()).into()),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn detect(a: DetectArgs) -> Res {
    let report = if let Some(target) = &a.target {
        let spec = TargetSpec::load(target)?;
        let stage = Stage::new(&spec.root)?;
        let vars = stage.vars(&spec)?;
        let o = exec::run_shell(&exec::render(&spec.build_cmd, &vars, true)?, Some(stage.path()), &[], spec.timeout())?;
        if !o.success() {
            return Err(format!("build failed:\n{}", o.diagnostics()).into());
        }
        let opts = DetectOptions {
            inputs: a.inputs,
            seed: a.seed,
            check_determinism: !a.no_determinism_check,
            save_bundle: a.save_bundle.clone(),
        };
        run_detect(&spec, &stage, &opts)?
    } else {
        let dir = a.bundle.as_ref().expect("clap requires one of target or bundle");
        let bundle = read_bundle_dir(dir)?;
        let root = a.source_root.clone();
        let sources = move |rel: &str| root.as_ref().and_then(|r| fs::read_to_string(r.join(rel)).ok());
        match (&a.disasm, &a.lines_file) {
            (Some(d), _) => {
                let map = parse_annotated_disassembly(&read(d)?)?;
                let strip = a.source_root.as_deref();
                analyze_recorded(&bundle, &IpResolver::Map { map: &map, strip }, &sources)?
            }
            (None, Some(f)) => analyze_recorded(&bundle, &IpResolver::Lines { file: f }, &sources)?,
            (None, None) => {
                let empty = Default::default();
                analyze_recorded(&bundle, &IpResolver::Map { map: &empty, strip: None }, &sources)?
            }
        }
    };
    let text = serde_json::to_string_pretty(&detection_json(&report, a.full))?;
    emit(&text, a.out.as_deref())?;
    Ok(if report.is_secure() { EXIT_SECURE } else { EXIT_LEAKS })
}

fn patch(a: PatchArgs) -> Res {
    let config = PipelineConfig::load(&a.config)?;
    let spec = TargetSpec::load(&a.target)?;
    let backend = config.backend.build()?;
    let report = match run_patch_session(&config, &spec, backend.as_ref()) {
        Ok(r) => r,
        Err(SessionError::Gateway { source, partial }) => {
            partial.save(&a.out, &format!("{}.partial", spec.name))?;
            return Err(format!("gateway: {source} (partial report saved)").into());
        }
        Err(e) => return Err(e.into()),
    };
    report.save(&a.out, &spec.name)?;
    print!("{}", report.summary());
    if a.apply && apply_best(&report, &spec.root)? {
        println!("applied best candidate to {}", spec.root.join(&report.target.defining_file).display());
    }
    Ok(match report.status {
        SessionStatus::Secure => EXIT_SECURE,
        _ => EXIT_LEAKS,
    })
}

fn bench(a: BenchArgs) -> Res {
    let variants = a.variants.iter().filter(|v| !v.is_empty()).map(|v| v.parse()).collect::<Result<Vec<BenchVariant>, _>>()?;
    let mut cfg = BenchConfig::new(&a.harness);
    cfg.iterations = a.iterations;
    cfg.cases = a.cases;
    let table = run_bench(&cfg, &variants)?;
    for (v, diag) in &table.unavailable {
        eprintln!("{} unavailable: {}", v.as_str(), diag.lines().next().unwrap_or(""));
    }
    print!("{}", table.to_text());
    if let Some(p) = &a.csv {
        fs::write(p, table.to_csv())?;
    }
    Ok(EXIT_SECURE)
}

fn cost(a: CostArgs) -> Res {
    if let Some(p) = &a.report {
        let r = SessionReport::load(p)?;
        let t = &r.ledger.totals;
        println!("calls       {}", r.ledger.len());
        println!("tokens      {} prompt, {} completion", t.prompt_tokens, t.completion_tokens);
        println!("cost        {}", r.ledger.total_cost_2dp());
        println!("cost exact  {}", estimate_session_cost(&r));
        return Ok(EXIT_SECURE);
    }
    let id = a.model.as_deref().expect("clap requires one of report or model");
    let mut m = ModelConfig::preset(id)?;
    if let Some(p) = a.price_in {
        m.price_in = p;
    }
    if let Some(p) = a.price_out {
        m.price_out = p;
    }
    let mut ledger = CostLedger::default();
    ledger.record(&m.model_id, a.prompt_tokens, a.completion_tokens, &m);
    println!("{}", ledger.total_cost_2dp());
    Ok(EXIT_SECURE)
}

fn save_transcript(t: &GenerationTranscript, out: Option<&Path>) -> Res {
    match out {
        Some(p) => {
            fs::write(p, serde_json::to_string_pretty(t)?)?;
            fs::write(p.with_extension("c"), t.code())?;
        }
        None => print!("{}", t.code()),
    }
    eprintln!("cost {}", t.ledger.total_cost_2dp());
    Ok(EXIT_SECURE)
}

fn gen_driver(a: GenDriverArgs) -> Res {
    let config = PipelineConfig::load(&a.config)?;
    let backend = config.backend.build()?;
    let api = match &a.api {
        Some(p) => read(p)?,
        None => String::new(),
    };
    let t = generate_driver(backend.as_ref(), &config.model_config(), &a.language, &config.specifics, &api)?;
    save_transcript(&t, a.out.as_deref())
}

fn gen_crypto(a: GenCryptoArgs) -> Res {
    let config = PipelineConfig::load(&a.config)?;
    let backend = config.backend.build()?;
    let t = generate_crypto(backend.as_ref(), &config.model_config(), &a.language, &config.specifics, &a.algorithm)?;
    save_transcript(&t, a.out.as_deref())
}

fn report(a: ReportArgs) -> Res {
    let r = SessionReport::load(&a.report)?;
    if a.json {
        println!("{}", r.to_json());
    } else {
        print!("{}", r.summary());
    }
    Ok(if r.is_secure() { EXIT_SECURE } else { EXIT_LEAKS })
}

fn parse_addr(s: &str) -> Result<u64, Box<dyn Error>> {
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(h) => u64::from_str_radix(h, 16),
        None => s.parse(),
    };
    r.map_err(|_| format!("bad address `{s}`").into())
}

fn srcmap(a: SrcmapArgs) -> Res {
    let map = parse_annotated_disassembly(&read(&a.disasm)?)?;
    for s in &a.addresses {
        let ip = parse_addr(s)?;
        let func = map.function_at(ip).unwrap_or("?");
        match map.lookup(ip) {
            Some(loc) => println!("0x{ip:x} {func} {loc}"),
            None => println!("0x{ip:x} {func} ?"),
        }
    }
    Ok(EXIT_SECURE)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { EXIT_SECURE });
        }
    };
    let r = match cli.cmd {
        Cmd::Detect(a) => detect(a),
        Cmd::Patch(a) => patch(a),
        Cmd::Bench(a) => bench(a),
        Cmd::Cost(a) => cost(a),
        Cmd::GenDriver(a) => gen_driver(a),
        Cmd::GenCrypto(a) => gen_crypto(a),
        Cmd::Report(a) => report(a),
        Cmd::Srcmap(a) => srcmap(a),
    };
    match r {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
