//! The patching loop: detect, prompt per leakage point, extract, apply,
//! verify, repeat under trial budgets.

use std::collections::{BTreeSet, VecDeque};
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;
use zeroleak_core::classify::patch_option_for;
use zeroleak_core::context::{ContextError, ConversationContext, Message, Role};
use zeroleak_core::csrc::{self, extract_code, line_range, CodeError, ItemKind};
use zeroleak_core::leakage::{cmp_points, LeakageKind, LeakagePoint};
use zeroleak_core::ledger::{CostLedger, ModelConfig};
use zeroleak_core::prompt::{
    functional_failure_reason, render_patch_prompt, render_system_prompt, PatchOption, PatchPrompt, PromptError,
    PromptMode,
};

use crate::config::PipelineConfig;
use crate::detect::DetectOptions;
use crate::gateway::{complete, Backend, GatewayError};
use crate::report::{BestCandidate, SessionReport, SessionStatus, SessionTiming, TargetSummary, TrialRecord};
use crate::target::{Stage, TargetError, TargetSpec};
use crate::verify::{apply_patch, verify, Verification, VerificationOutcome, VerifyError};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("baseline does not pass its own gates ({stage}): {diagnostics}")]
    BaselineBroken { stage: &'static str, diagnostics: String },
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Target(#[from] TargetError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error("gateway: {source}")]
    Gateway { source: GatewayError, partial: Box<SessionReport> },
    #[error("context lost its pinned messages before a gateway call")]
    PinnedContextLost,
}

fn option_name(o: &PatchOption) -> &'static str {
    match o {
        PatchOption::MemAccess { .. } => "MemAccess",
        PatchOption::Conditional { .. } => "Conditional",
        PatchOption::LoopBound { .. } => "LoopBound",
        PatchOption::Retry { .. } => "Retry",
        PatchOption::SpectreCond { .. } => "SpectreCond",
    }
}

/// Point identity across patches: kind plus the trimmed text of its line,
/// since line numbers shift when code is rewritten.
fn signature(p: &LeakagePoint, src: &str, file: &str) -> Option<(LeakageKind, String)> {
    let loc = p.source.as_ref().filter(|l| l.file == file)?;
    let text = src[line_range(src, loc.line)?].trim().to_string();
    Some((p.kind, text))
}

fn signatures(points: &[LeakagePoint], src: &str, file: &str) -> BTreeSet<(LeakageKind, String)> {
    points.iter().filter_map(|p| signature(p, src, file)).collect()
}

fn function_text(src: &str, name: &str) -> Result<String, CodeError> {
    Ok(csrc::locate_function(src, name)?.text(src).to_string())
}

/// Whether the point lies in `name` inside `src` and has a prompt option.
fn patchable(p: &LeakagePoint, src: &str, file: &str, name: &str) -> Option<PatchOption> {
    let loc = p.source.as_ref().filter(|l| l.file == file)?;
    let item = csrc::function_containing_line(src, loc.line)?;
    if item.function_name() != Some(name) {
        return None;
    }
    patch_option_for(p, src)
}

fn cmp_schedule(a: &LeakagePoint, b: &LeakagePoint) -> std::cmp::Ordering {
    let sev = |p: &LeakagePoint| p.severity_bits.unwrap_or(f64::NEG_INFINITY);
    sev(b).total_cmp(&sev(a)).then_with(|| cmp_points(a, b))
}

fn ms(t: Instant) -> u64 {
    t.elapsed().as_millis() as u64
}

struct Loop<'a> {
    spec: &'a TargetSpec,
    config: &'a PipelineConfig,
    model: ModelConfig,
    backend: &'a dyn Backend,
    opts: DetectOptions,
    defining: PathBuf,
    file: String,
    params: usize,
    language: String,
    report: SessionReport,
    ctx: Option<ConversationContext>,
    started: Instant,
}

enum Step {
    /// The point is gone; the candidate was accepted.
    Resolved,
    /// Keep trying; carries the next user prompt and its option.
    Again(String, &'static str),
    /// Secure tree reached.
    Done,
}

impl Loop<'_> {
    fn system_prompt(&self) -> Result<String, PromptError> {
        render_system_prompt(&self.language, &self.config.specifics, self.report.mode)
    }

    fn push_user(&mut self, text: String, original_fn: &str) -> Result<(), SessionError> {
        match &mut self.ctx {
            Some(ctx) => ctx.append_and_truncate(Message::user(text))?,
            None => {
                let budget = (self.model.context_window as usize) * 9 / 10;
                let system = Message::system(self.system_prompt()?);
                self.ctx = Some(ConversationContext::new(system, Message::user(text), original_fn, budget)?);
            }
        }
        Ok(())
    }

    fn check_pinned(&self) -> Result<&ConversationContext, SessionError> {
        let ctx = self.ctx.as_ref().ok_or(SessionError::PinnedContextLost)?;
        let mut it = ctx.messages();
        let ok = it.next().is_some_and(|m| m.role == Role::System)
            && it.next().is_some_and(|m| m.role == Role::User && m.text.contains(ctx.original_function().trim_end()));
        if ok {
            Ok(ctx)
        } else {
            Err(SessionError::PinnedContextLost)
        }
    }

    fn stage_with(&self, src: &str) -> Result<Stage, SessionError> {
        let stage = Stage::new(&self.spec.root)?;
        stage.write(&self.defining, src)?;
        Ok(stage)
    }

    fn fail(&mut self, source: GatewayError) -> SessionError {
        self.report.timing.wall_ms = ms(self.started);
        SessionError::Gateway { source, partial: Box::new(self.report.clone()) }
    }
}

/// Runs one patching session. The original tree is only read; the best
/// candidate is returned in the report.
pub fn run_patch_session(
    config: &PipelineConfig,
    spec: &TargetSpec,
    backend: &dyn Backend,
) -> Result<SessionReport, SessionError> {
    let started = Instant::now();
    let spec = &config.effective_target(spec);
    let model = config.model_config();
    let opts = DetectOptions {
        inputs: config.policy.input_count,
        seed: config.policy.prng_seed,
        check_determinism: true,
        save_bundle: None,
    };

    let base_stage = Stage::new(&spec.root)?;
    let defining = spec.defining_file(base_stage.path())?;
    let file = defining.to_string_lossy().into_owned();
    let t0 = Instant::now();
    let baseline = verify(spec, &base_stage, &opts)?;
    let baseline_ms = ms(t0);
    let detection = match (&baseline.outcome, &baseline.detection) {
        (VerificationOutcome::SyntaxError(d), _) => {
            return Err(SessionError::BaselineBroken { stage: "build", diagnostics: d.clone() })
        }
        (VerificationOutcome::TestFailure(d), _) => {
            return Err(SessionError::BaselineBroken { stage: "test", diagnostics: d.clone() })
        }
        (_, Some(d)) => d.clone(),
        (_, None) => unreachable!("detection runs once build and tests pass"),
    };
    // formatting may have rewritten the baseline
    let original_src = base_stage.read(&defining)?;
    let original_item = csrc::locate_function(&original_src, &spec.function_name)?;
    let original_fn = original_item.text(&original_src).to_string();
    let params = match original_item.kind {
        ItemKind::Function { params, .. } => params,
        _ => unreachable!("locate_function returns definitions"),
    };

    let initial = detection.merged.points.clone();
    let mode = config.mode.unwrap_or_else(|| {
        if !initial.is_empty() && initial.iter().all(|p| p.kind == LeakageKind::SpectreV1) {
            PromptMode::Spectre
        } else {
            PromptMode::ConstantTime
        }
    });
    let (mut schedule, unpatchable): (Vec<LeakagePoint>, Vec<LeakagePoint>) = initial
        .iter()
        .cloned()
        .partition(|p| patchable(p, &original_src, &file, &spec.function_name).is_some());
    schedule.sort_by(cmp_schedule);

    let report = SessionReport {
        version: crate::report::REPORT_VERSION,
        target: TargetSummary {
            name: spec.name.clone(),
            function_name: spec.function_name.clone(),
            defining_file: file.clone(),
            source_files: spec.source_files.iter().map(|p| p.to_string_lossy().into_owned()).collect(),
        },
        model_id: model.model_id.clone(),
        mode,
        seed: opts.seed,
        inputs: opts.inputs,
        status: if detection.is_secure() { SessionStatus::Secure } else { SessionStatus::LeaksRemain },
        initial_leak_count: detection.leak_count(),
        initial_points: initial.clone(),
        final_points: initial.clone(),
        final_leak_count: detection.leak_count(),
        unpatchable,
        trials: Vec::new(),
        best_candidate: Some(BestCandidate {
            trial_index: None,
            leak_count: detection.leak_count(),
            points: initial.clone(),
            function_text: original_fn.clone(),
            source_text: original_src.clone(),
        }),
        ledger: CostLedger::default(),
        timing: SessionTiming { baseline_ms, ..Default::default() },
    };
    let mut lp = Loop {
        spec,
        config,
        model,
        backend,
        opts,
        defining,
        file,
        params,
        language: spec.language.clone(),
        report,
        ctx: None,
        started,
    };

    if detection.is_secure() {
        lp.report.timing.wall_ms = ms(started);
        return Ok(lp.report);
    }

    let mut current_src = original_src.clone();
    let mut current_points = initial.clone();
    let mut known = signatures(&initial, &original_src, &lp.file);
    let mut queue: VecDeque<(LeakagePoint, (LeakageKind, String))> = schedule
        .into_iter()
        .filter_map(|p| signature(&p, &original_src, &lp.file).map(|s| (p, s)))
        .collect();
    let mut exhausted = false;
    let mut secure = false;
    let policy = config.policy.clone();

    'points: while let Some((point, sig)) = queue.pop_front() {
        // earlier patches may have fixed it or moved its line
        let live = current_points
            .iter()
            .find(|p| signature(p, &current_src, &lp.file).as_ref() == Some(&sig))
            .cloned();
        let Some(point) = live else {
            log::info!("{:?} at {:?} no longer present", point.kind, point.line());
            continue;
        };
        let Some(option) = patchable(&point, &current_src, &lp.file, &spec.function_name) else {
            lp.report.unpatchable.push(point);
            continue;
        };

        let prompt_for = |option: PatchOption, src: &str| -> Result<String, SessionError> {
            let fn_text = function_text(src, &spec.function_name)?;
            Ok(render_patch_prompt(
                &PatchPrompt { option, language_tag: spec.language.clone(), specifics: config.specifics.clone() },
                &fn_text,
            )?)
        };
        let mut next_option = option_name(&option);
        let mut next_prompt = prompt_for(option, &current_src)?;

        let mut resolved = false;
        for point_trial in 1..=policy.max_trials_per_point {
            let used = lp.report.ledger.totals.prompt_tokens + lp.report.ledger.totals.completion_tokens;
            if lp.report.trials.len() as u32 >= policy.max_total_iterations || used >= policy.token_budget {
                exhausted = true;
                break 'points;
            }
            let trial_index = lp.report.trials.len() as u32 + 1;
            let prompt = next_prompt.clone();
            lp.push_user(prompt.clone(), &original_fn)?;

            let t = Instant::now();
            let exchange = {
                let ctx = lp.check_pinned()?;
                complete(lp.backend, &lp.model, ctx, &|r| {
                    i64::from(extract_code(r, &spec.function_name, Some(params), 0).is_ok())
                })
            };
            let exchange = match exchange {
                Ok(e) => e,
                Err(e) => return Err(lp.fail(e)),
            };
            lp.report.timing.gateway_ms.push(ms(t));
            let cost = lp.model.cost_of(exchange.prompt_tokens, exchange.completion_tokens);
            lp.report.ledger.record_cost(&exchange, &lp.model);
            let response = exchange.response_text;

            let t = Instant::now();
            let (verification, patched_src) = match extract_code(&response, &spec.function_name, Some(lp.params), trial_index) {
                Err(e) => (
                    Verification { outcome: VerificationOutcome::SyntaxError(e.to_string()), detection: None },
                    None,
                ),
                Ok(cand) => {
                    let stage = lp.stage_with(&current_src)?;
                    match apply_patch(spec, &stage, &cand) {
                        Err(VerifyError::Code(e)) => (
                            Verification { outcome: VerificationOutcome::SyntaxError(e.to_string()), detection: None },
                            None,
                        ),
                        Err(e) => return Err(e.into()),
                        Ok(_) => {
                            let v = verify(spec, &stage, &lp.opts)?;
                            (v, Some(stage.read(&lp.defining)?))
                        }
                    }
                }
            };
            lp.report.timing.verify_ms.push(ms(t));

            let outcome = &verification.outcome;
            lp.report.trials.push(TrialRecord {
                trial_index,
                point_trial,
                point: point.clone(),
                option: next_option.to_string(),
                prompt,
                response: response.clone(),
                outcome: outcome.name().to_string(),
                diagnostics: match outcome {
                    VerificationOutcome::SyntaxError(d) | VerificationOutcome::TestFailure(d) => Some(d.clone()),
                    _ => None,
                },
                leak_count: verification.leak_count(),
                prompt_tokens: exchange.prompt_tokens,
                completion_tokens: exchange.completion_tokens,
                cost,
            });

            let step = match (outcome, patched_src) {
                (VerificationOutcome::SyntaxError(d), _) => {
                    let o = PatchOption::Retry { crash_reason: d.clone() };
                    Step::Again(prompt_for_retry(&o, spec, config)?, "Retry")
                }
                (VerificationOutcome::TestFailure(d), _) => {
                    lp.ctx.as_mut().expect("context exists").append_and_truncate(Message::assistant(response))?;
                    let o = PatchOption::Retry { crash_reason: functional_failure_reason(d) };
                    Step::Again(prompt_for_retry(&o, spec, config)?, "Retry")
                }
                (_, None) => unreachable!("detection outcomes come from an applied candidate"),
                (VerificationOutcome::Leaky(_) | VerificationOutcome::Secure, Some(patched)) => {
                    lp.ctx.as_mut().expect("context exists").append_and_truncate(Message::assistant(response))?;
                    let det = verification.detection.as_ref().expect("detection ran");
                    let count = det.leak_count();
                    let best_count = lp.report.best_candidate.as_ref().map_or(usize::MAX, |b| b.leak_count);
                    if !policy.keep_best || count < best_count {
                        lp.report.best_candidate = Some(BestCandidate {
                            trial_index: Some(trial_index),
                            leak_count: count,
                            points: det.merged.points.clone(),
                            function_text: function_text(&patched, &spec.function_name)?,
                            source_text: patched.clone(),
                        });
                    }
                    let new_points = det.merged.points.clone();
                    let now = signatures(&new_points, &patched, &lp.file);
                    if det.is_secure() {
                        current_src = patched;
                        current_points = new_points;
                        Step::Done
                    } else if !now.contains(&sig) {
                        for p in &new_points {
                            if let Some(s) = signature(p, &patched, &lp.file) {
                                if known.insert(s.clone())
                                    && patchable(p, &patched, &lp.file, &spec.function_name).is_some()
                                {
                                    queue.push_back((p.clone(), s));
                                }
                            }
                        }
                        current_src = patched;
                        current_points = new_points;
                        Step::Resolved
                    } else {
                        // same point again, asked about the candidate's code
                        let again = new_points
                            .iter()
                            .find(|p| signature(p, &patched, &lp.file).as_ref() == Some(&sig))
                            .and_then(|p| patchable(p, &patched, &lp.file, &spec.function_name));
                        match again {
                            Some(o) => {
                                let name = option_name(&o);
                                Step::Again(prompt_for(o, &patched)?, name)
                            }
                            None => Step::Again(next_prompt.clone(), next_option),
                        }
                    }
                }
            };
            match step {
                Step::Done => {
                    secure = true;
                    break 'points;
                }
                Step::Resolved => {
                    resolved = true;
                    break;
                }
                Step::Again(p, o) => {
                    next_prompt = p;
                    next_option = o;
                }
            }
        }
        if !resolved {
            exhausted = true;
        }
    }

    let r = &mut lp.report;
    if policy.keep_best {
        let best = r.best_candidate.as_ref().expect("best starts as the original");
        r.final_points = best.points.clone();
        r.final_leak_count = best.leak_count;
    } else {
        r.final_leak_count = current_points.len();
        r.final_points = current_points;
    }
    r.status = if secure && r.final_leak_count == 0 {
        SessionStatus::Secure
    } else if exhausted {
        SessionStatus::BudgetExhausted
    } else {
        SessionStatus::LeaksRemain
    };
    r.timing.wall_ms = ms(started);
    Ok(lp.report)
}

fn prompt_for_retry(o: &PatchOption, spec: &TargetSpec, config: &PipelineConfig) -> Result<String, SessionError> {
    // the retry prompt carries no function text
    Ok(render_patch_prompt(
        &PatchPrompt { option: o.clone(), language_tag: spec.language.clone(), specifics: config.specifics.clone() },
        "",
    )?)
}

/// Writes the best candidate's defining file over the original tree.
pub fn apply_best(report: &SessionReport, root: &Path) -> std::io::Result<bool> {
    match &report.best_candidate {
        Some(b) if b.trial_index.is_some() => {
            std::fs::write(root.join(&report.target.defining_file), &b.source_text)?;
            Ok(true)
        }
        _ => Ok(false),
    }
}
