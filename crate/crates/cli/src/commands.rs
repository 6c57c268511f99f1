use crate::limits::parse_limits;
use crate::{Status, TaskInput};
use anyhow::{Context, Result};
use std::fs;
use std::path::{Path, PathBuf};
use tmacro_core::composer::mutex_surface;
use tmacro_core::effect_safe::{base_plan, build_effect_safe};
use tmacro_core::pddl::{
    self, emit_domain, emit_plan, emit_problem, emit_task, ground_with_macros, lift_compose,
    parse_config, parse_domain, parse_plan, parse_problem, Config, GroundingReport,
    GroundingStatus, LiftedDomain, MutexEntry, Problem,
};
use tmacro_core::planner::{solve, SearchLimits, SearchResult};
use tmacro_core::refinement::{refine_all, RefineError, Refinement};
use tmacro_core::semantics::{check_plan, unroll};
use tmacro_core::{validate_plan_shape, Plan, PlanningTask, TimedAction};

fn count(n: usize, noun: &str) -> String {
    if n == 1 {
        format!("1 {noun}")
    } else {
        format!("{n} {noun}s")
    }
}

fn lines(items: &[String]) -> String {
    items.iter().map(|l| format!("{l}\n")).collect()
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Writes to `path`, or to standard output without one.
fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_domain(path: &Path) -> Result<LiftedDomain> {
    parse_domain(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn load_problem(path: &Path, dom: &LiftedDomain) -> Result<Problem> {
    parse_problem(&read(path)?, dom).with_context(|| format!("in {}", path.display()))
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => parse_config(&read(p)?).with_context(|| format!("in {}", p.display())),
        None => Ok(Config::default()),
    }
}

struct Loaded {
    dom: LiftedDomain,
    prob: Problem,
    config: Config,
    task: PlanningTask,
}

fn report_exclusions(report: &GroundingReport) {
    for e in &report.excluded {
        eprintln!("note: {e}");
    }
}

fn load_task(input: &TaskInput, manifest: Option<&Path>) -> Result<Loaded> {
    let dom = load_domain(&input.domain)?;
    let prob = load_problem(&input.problem, &dom)?;
    let config = load_config(manifest)?;
    let (task, report) = ground_with_macros(&dom, &prob, &config.recipes)?;
    report_exclusions(&report);
    Ok(Loaded {
        dom,
        prob,
        config,
        task,
    })
}

fn lift_all(dom: &LiftedDomain, config: &Config, prob: Option<&Problem>) -> Result<LiftedDomain> {
    let mut out = dom.clone();
    for recipe in &config.recipes {
        let (schema, report) =
            lift_compose(dom, recipe, prob).with_context(|| format!("composing `{}`", recipe.name))?;
        if prob.is_some() {
            eprintln!(
                "{}: {} groundings admitted, {} excluded",
                recipe.name,
                report.admitted().count(),
                report.excluded().count()
            );
            for c in report.excluded() {
                if let GroundingStatus::Excluded(reason) = &c.status {
                    eprintln!("note: ({} {}) excluded: {reason}", recipe.name, c.args.join(" "));
                }
            }
        }
        out.schemas.push(schema);
    }
    Ok(out)
}

fn manifest_of(config: &Config) -> Config {
    Config {
        recipes: config.recipes.clone(),
        ..Config::default()
    }
}

pub fn compose(
    domain: &Path,
    recipes: &Path,
    problem: Option<&Path>,
    output: Option<&Path>,
    manifest: Option<&Path>,
) -> Result<Status> {
    let dom = load_domain(domain)?;
    let config = load_config(Some(recipes))?;
    let prob = problem.map(|p| load_problem(p, &dom)).transpose()?;
    let out = lift_all(&dom, &config, prob.as_ref())?;
    write_or_print(output, &emit_domain(&out))?;
    if let Some(m) = manifest {
        write(m, &manifest_of(&config).to_text())?;
    }
    Ok(Status::Ok)
}

pub fn transform(
    input: &TaskInput,
    manifest: Option<&Path>,
    output: &Path,
    problem_out: &Path,
    manifest_out: Option<&Path>,
) -> Result<Status> {
    let loaded = load_task(input, manifest)?;
    let est = build_effect_safe(&loaded.task)?;
    let (d, p) = emit_task(&est.task, &format!("{}-safe", loaded.dom.name), &loaded.prob.name)?;
    write(output, &emit_domain(&d))?;
    write(problem_out, &emit_problem(&p))?;
    if let Some(m) = manifest_out {
        let mut cfg = manifest_of(&loaded.config);
        cfg.mutex = loaded
            .task
            .actions
            .iter()
            .filter(|a| a.is_macro())
            .map(|a| MutexEntry {
                action: a.name.clone(),
                atoms: mutex_surface(a.mutex()),
            })
            .collect();
        write(m, &cfg.to_text())?;
    }
    eprintln!(
        "{} actions, {} mutex atoms",
        est.task.actions.len(),
        est.mutex_universe.len()
    );
    Ok(Status::Ok)
}

pub fn ground(input: &TaskInput, manifest: Option<&Path>, output: &Path, problem_out: &Path) -> Result<Status> {
    let loaded = load_task(input, manifest)?;
    let (d, p) = emit_task(&loaded.task, &format!("{}-ground", loaded.dom.name), &loaded.prob.name)?;
    write(output, &emit_domain(&d))?;
    write(problem_out, &emit_problem(&p))?;
    eprintln!("{} ground actions", loaded.task.actions.len());
    Ok(Status::Ok)
}

struct Verdict {
    status: Status,
    lines: Vec<String>,
    trace: Option<String>,
}

fn validate_one(task: &PlanningTask, text: &str, trace_json: Option<bool>) -> Verdict {
    let fail = |status, lines| Verdict {
        status,
        lines,
        trace: None,
    };
    let plan = match parse_plan(text, task) {
        Ok(p) => p,
        Err(e) => return fail(Status::InputError, vec![e.to_string()]),
    };
    let shape = validate_plan_shape(&plan);
    if !shape.is_empty() {
        return fail(Status::InputError, shape.describe(&plan));
    }
    let trace = match unroll(task, &plan) {
        Ok(t) => t,
        Err(e) => return fail(Status::InputError, vec![e.to_string()]),
    };
    let report = tmacro_core::semantics::check_trace(task, &plan, &trace);
    let rendered = trace_json.map(|json| {
        if json {
            format!("{:#}\n", trace.to_json(&plan))
        } else {
            trace.to_text(&plan)
        }
    });
    if report.solves {
        let makespan = plan
            .makespan()
            .map(|m| tmacro_core::time::Decimal(&m).to_string())
            .unwrap_or_else(|| "0".into());
        Verdict {
            status: Status::Ok,
            lines: vec![format!("valid plan, {}, makespan {makespan}", count(plan.len(), "step"))],
            trace: rendered,
        }
    } else {
        let mut lines = vec!["not a solution".to_string()];
        lines.extend(report.describe(&plan));
        Verdict {
            status: Status::Unsolved,
            lines,
            trace: rendered,
        }
    }
}

fn trace_path(base: &Path, index: usize, count: usize) -> PathBuf {
    if count == 1 {
        return base.to_path_buf();
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    let name = match base.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}-{index}.{ext}"),
        None => format!("{stem}-{index}"),
    };
    base.with_file_name(name)
}

pub fn validate(
    input: &TaskInput,
    plans: &[PathBuf],
    manifest: Option<&Path>,
    trace: Option<&Path>,
    jobs: usize,
) -> Result<Status> {
    let loaded = load_task(input, manifest)?;
    let texts = plans.iter().map(|p| read(p)).collect::<Result<Vec<_>>>()?;
    let trace_json = trace.map(|t| t.extension().is_some_and(|e| e == "json"));
    let task = &loaded.task;
    let chunk = texts.len().div_ceil(jobs.max(1)).max(1);
    let verdicts: Vec<Verdict> = std::thread::scope(|scope| {
        let handles: Vec<_> = texts
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|t| validate_one(task, t, trace_json))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("validation worker panicked"))
            .collect()
    });
    let mut worst = Status::Ok;
    for (i, (path, v)) in plans.iter().zip(&verdicts).enumerate() {
        for line in &v.lines {
            eprintln!("{}: {line}", path.display());
        }
        if let (Some(base), Some(text)) = (trace, &v.trace) {
            write(&trace_path(base, i, plans.len()), text)?;
        }
        worst = worst.max(v.status);
    }
    Ok(worst)
}

/// Maps the steps of `plan` to the actions of `original` with the same name
/// and body, then checks the plan there.
fn certify_against(original: &PlanningTask, plan: &Plan) -> std::result::Result<Plan, Vec<String>> {
    let mut steps = Vec::new();
    for s in &plan.steps {
        match original.action(&s.action.name) {
            Some(a) if **a == *s.action => steps.push(TimedAction::new(s.start.clone(), a.clone())),
            _ => return Err(vec![format!("{} is not an action of the original task", s.action.name)]),
        }
    }
    let mapped = Plan::new(steps);
    match check_plan(original, &mapped) {
        Ok(r) if r.solves => Ok(mapped),
        Ok(r) => Err(r.describe(&mapped)),
        Err(e) => Err(vec![e.to_string()]),
    }
}

fn original_domain(dom: &LiftedDomain, config: &Config) -> LiftedDomain {
    let mut out = dom.clone();
    out.schemas
        .retain(|s| !config.recipes.iter().any(|r| r.name == s.name));
    out
}

enum Refined {
    Done(Refinement),
    Failed(Status),
}

/// Refines a base plan and certifies the result against the original task.
fn refine_and_certify(task: &PlanningTask, original: &PlanningTask, base: &Plan, input_is_trusted: bool) -> Result<Refined> {
    let refinement = match refine_all(task, base) {
        Ok(r) => r,
        Err(RefineError::NotASolution(report)) => {
            eprintln!("base plan is not a solution of the macro task");
            for line in report.describe(base) {
                eprintln!("  {line}");
            }
            let status = if input_is_trusted {
                Status::CertificationFailure
            } else {
                Status::Unsolved
            };
            return Ok(Refined::Failed(status));
        }
        Err(e @ RefineError::CertificationFailure { .. }) => {
            eprintln!("certification failed: {e}");
            return Ok(Refined::Failed(Status::CertificationFailure));
        }
        Err(e) => return Err(e.into()),
    };
    match certify_against(original, &refinement.plan) {
        Ok(plan) => Ok(Refined::Done(Refinement {
            plan,
            steps: refinement.steps,
        })),
        Err(lines) => {
            eprintln!("refined plan fails on the original task");
            for line in lines {
                eprintln!("  {line}");
            }
            Ok(Refined::Failed(Status::CertificationFailure))
        }
    }
}

pub fn refine(
    input: &TaskInput,
    plan: &Path,
    manifest: &Path,
    output: Option<&Path>,
    audit: Option<&Path>,
) -> Result<Status> {
    let loaded = load_task(input, Some(manifest))?;
    let est = build_effect_safe(&loaded.task)?;
    let plan_hat = parse_plan(&read(plan)?, &est.task).with_context(|| format!("in {}", plan.display()))?;
    let base = base_plan(&plan_hat, &est)?;
    let (original, _) = pddl::ground(&original_domain(&loaded.dom, &loaded.config), &loaded.prob)?;
    match refine_and_certify(&loaded.task, &original, &base, false)? {
        Refined::Failed(status) => Ok(status),
        Refined::Done(r) => {
            write_or_print(output, &emit_plan(&r.plan))?;
            if let Some(a) = audit {
                write(a, &lines(&r.audit()))?;
            }
            eprintln!(
                "{} unfolded; the plan solves the original task",
                count(r.steps.len(), "macro")
            );
            Ok(Status::Ok)
        }
    }
}

fn report_search(result: &SearchResult) {
    match result {
        SearchResult::Solved { plan } => eprintln!("solved with {}", count(plan.len(), "step")),
        SearchResult::ExhaustedComplete => eprintln!("no plan exists within the limits"),
        SearchResult::BudgetExceeded => eprintln!("node budget exhausted before a plan was found"),
    }
}

fn limits_of(text: Option<&str>) -> Result<SearchLimits> {
    text.map(parse_limits)
        .transpose()
        .map(Option::unwrap_or_default)
}

pub fn plan(
    input: &TaskInput,
    manifest: Option<&Path>,
    effect_safe: bool,
    limits: Option<&str>,
    output: Option<&Path>,
) -> Result<Status> {
    let limits = limits_of(limits)?;
    let loaded = load_task(input, manifest)?;
    let result = if effect_safe {
        solve(&build_effect_safe(&loaded.task)?.task, &limits)
    } else {
        solve(&loaded.task, &limits)
    };
    report_search(&result);
    match result {
        SearchResult::Solved { plan } => {
            write_or_print(output, &emit_plan(&plan))?;
            Ok(Status::Ok)
        }
        _ => Ok(Status::Unsolved),
    }
}

pub fn shortest_paths(input: &TaskInput, config: &Path, output: &Path, problem_out: &Path) -> Result<Status> {
    let dom = load_domain(&input.domain)?;
    let prob = load_problem(&input.problem, &dom)?;
    let cfg = load_config(Some(config))?;
    let spec = cfg.move_spec()?;
    let (d, p) = pddl::shortest_path_closure(&dom, &prob, &spec, &cfg.edges)?;
    write(output, &emit_domain(&d))?;
    write(problem_out, &emit_problem(&p))?;
    eprintln!(
        "{} direct moves replace `{}`",
        d.schemas.len() + 1 - dom.schemas.len(),
        spec.schema
    );
    Ok(Status::Ok)
}

pub fn pipeline(
    input: &TaskInput,
    recipes: &Path,
    limits: Option<&str>,
    output: Option<&Path>,
    workdir: Option<&Path>,
) -> Result<Status> {
    let limits = limits_of(limits)?;
    let dom = load_domain(&input.domain)?;
    let prob = load_problem(&input.problem, &dom)?;
    let config = load_config(Some(recipes))?;
    // grounding below checks every instance of the lifted macros
    let macro_dom = lift_all(&dom, &config, None)?;
    let (task, report) = ground_with_macros(&macro_dom, &prob, &config.recipes)?;
    report_exclusions(&report);
    let est = build_effect_safe(&task)?;
    let result = solve(&est.task, &limits);
    report_search(&result);
    let SearchResult::Solved { plan: plan_hat } = result else {
        return Ok(Status::Unsolved);
    };
    let base = base_plan(&plan_hat, &est)?;
    let (original, _) = pddl::ground(&dom, &prob)?;
    let refinement = match refine_and_certify(&task, &original, &base, true)? {
        Refined::Done(r) => r,
        Refined::Failed(status) => return Ok(status),
    };
    if let Some(dir) = workdir {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let (d, p) = emit_task(&est.task, &format!("{}-safe", dom.name), &prob.name)?;
        for (name, text) in [
            ("macro-domain.pddl", emit_domain(&macro_dom)),
            ("manifest.cfg", manifest_of(&config).to_text()),
            ("safe-domain.pddl", emit_domain(&d)),
            ("safe-problem.pddl", emit_problem(&p)),
            ("safe-plan.txt", emit_plan(&plan_hat)),
            ("base-plan.txt", emit_plan(&base)),
            ("audit.txt", lines(&refinement.audit())),
        ] {
            write(&dir.join(name), &text)?;
        }
    }
    write_or_print(output, &emit_plan(&refinement.plan))?;
    eprintln!(
        "{} unfolded; the {}-step plan solves the original task",
        count(refinement.steps.len(), "macro"),
        refinement.plan.len()
    );
    Ok(Status::Ok)
}
