use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use turtle_core::embedding::{
    load_embeddings, make_folds, random_split, read_labels, read_split, write_emb1, write_labels, write_split,
    EmbeddingMatrix, Format, MultiViewDataset,
};
use turtle_core::margin::{bound_check, gaussian_directions, unit_ball_cloud};
use turtle_core::report::{read_grid, write_grid, write_train_report, ReportFields};
use turtle_core::rng::derive_seed;
use turtle_core::selection::{
    clustering_accuracy, cross_validate_task, cv_budget, kmeans_baseline, linear_probe, log_grid, select_best,
    Candidate, DEFAULT_GRID_SIZE, FULL_GRID_SIZE,
};
use turtle_core::synth::{synth, ClassBalance, SynthSpec};
use turtle_core::train::{run_grid, turtle_train, HyperGrid, TrainConfig};

use crate::args::*;
use crate::config::ConfigFile;

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation: exit 1 with usage.
    Usage(String),
    /// Failure while running: exit 2.
    Runtime(String),
}

impl From<turtle_core::Error> for CliError {
    fn from(e: turtle_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn runtime(msg: impl Into<String>) -> CliError {
    CliError::Runtime(msg.into())
}

fn load_views(paths: &[PathBuf], classes: usize) -> CliResult<MultiViewDataset<f64>> {
    if paths.is_empty() {
        return Err(usage("--spaces is required"));
    }
    let views = paths
        .iter()
        .map(|p| load_embeddings::<f64>(p, Format::from_path(p)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MultiViewDataset::new(views, classes)?)
}

fn join_paths(paths: &[PathBuf]) -> String {
    paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(",")
}

pub fn synth_cmd(a: &SynthArgs) -> CliResult {
    let balance = match &a.proportions {
        None => ClassBalance::Balanced,
        Some(p) => ClassBalance::Proportions(p.clone()),
    };
    let spec = SynthSpec {
        n_samples: a.samples,
        n_classes: a.classes,
        dims: a.dims.clone(),
        separation: a.separation,
        balance,
        seed: a.seed,
    };
    let d = synth::<f64>(&spec).map_err(|e| usage(e.to_string()))?;
    let split = random_split(a.samples, a.test_fraction, derive_seed(a.seed, u64::MAX))
        .map_err(|e| usage(e.to_string()))?;
    fs::create_dir_all(&a.out).map_err(|e| runtime(format!("{}: {e}", a.out.display())))?;
    let mut names = Vec::new();
    for (k, view) in d.views().iter().enumerate() {
        let name = format!("view-{k}.emb");
        write_emb1(&a.out.join(&name), view)?;
        names.push(name);
    }
    write_labels(&a.out.join("labels.txt"), d.labels().expect("synth attaches labels"))?;
    write_split(&a.out.join("split.txt"), &split)?;
    let mut f = ReportFields::default();
    f.push("samples", a.samples);
    f.push("classes", a.classes);
    f.push("dims", a.dims.iter().map(usize::to_string).collect::<Vec<_>>().join(","));
    f.push("separation", a.separation);
    f.push(
        "proportions",
        a.proportions
            .as_ref()
            .map_or("balanced".to_string(), |p| p.iter().map(f64::to_string).collect::<Vec<_>>().join(",")),
    );
    f.push("test-fraction", a.test_fraction);
    f.push("seed", a.seed);
    f.push("views", names.join(","));
    f.write(&a.out.join("synth.txt"))?;
    println!("wrote {} views, labels.txt and split.txt to {}", names.len(), a.out.display());
    Ok(())
}

/// Fully resolved training inputs.
struct Resolved {
    cfg: TrainConfig<f64>,
    spaces: Vec<PathBuf>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
}

fn resolve_train(a: &TrainArgs) -> CliResult<Resolved> {
    let file = match &a.config {
        Some(p) => ConfigFile::load(p).map_err(usage)?,
        None => ConfigFile::default(),
    };
    let spaces = if a.spaces.is_empty() {
        file.resolve::<String>("spaces", None)
            .map_err(usage)?
            .map(|s| s.split(',').map(|p| PathBuf::from(p.trim())).collect())
            .unwrap_or_default()
    } else {
        a.spaces.clone()
    };
    let classes = file
        .resolve("classes", a.classes)
        .map_err(usage)?
        .ok_or_else(|| usage("--classes is required"))?;
    let mut cfg = TrainConfig::<f64>::new(classes);
    macro_rules! set {
        ($key:literal, $flag:expr, $target:expr) => {
            if let Some(v) = file.resolve($key, $flag).map_err(usage)? {
                $target = v;
            }
        };
    }
    set!("gamma", a.gamma, cfg.gamma);
    set!("inner-steps", a.inner_steps, cfg.inner.steps);
    set!("iters", a.iters, cfg.outer_iters);
    set!("batch", a.batch, cfg.batch_size);
    set!("outer-lr", a.outer_lr, cfg.outer_lr);
    set!("inner-lr", a.inner_lr, cfg.inner.learning_rate);
    set!("warm-start", a.warm_start, cfg.inner.warm_start);
    set!("seed", a.seed, cfg.seed);
    set!("normalize", a.normalize, cfg.normalize);
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let out = file.resolve("out", a.out.clone()).map_err(usage)?;
    let jobs = file.resolve::<usize>("jobs", None).map_err(usage)?;
    if spaces.is_empty() {
        return Err(usage("--spaces is required"));
    }
    Ok(Resolved {
        cfg,
        spaces,
        out,
        jobs,
    })
}

fn echo_fields(r: &Resolved, out: &Path) -> ReportFields {
    let mut f = ReportFields::default();
    f.push("config.spaces", join_paths(&r.spaces));
    f.push("config.out", out.display());
    f
}

pub fn train_cmd(a: &TrainArgs) -> CliResult {
    let r = resolve_train(a)?;
    let out = r.out.clone().unwrap_or_else(|| PathBuf::from("turtle-run"));
    let d = load_views(&r.spaces, r.cfg.n_classes)?;
    let report = turtle_train(&d, &r.cfg)?;
    write_train_report(&out, &report, &echo_fields(&r, &out))?;
    println!(
        "distinct classes: {}/{}{}",
        report.distinct_classes,
        r.cfg.n_classes,
        if report.degenerate { " (degenerate)" } else { "" }
    );
    println!("final loss: {}", report.loss_trace.last().copied().unwrap_or(f64::NAN));
    println!("wall clock: {:.2}s", report.wall_clock.as_secs_f64());
    println!("wrote {}", out.display());
    Ok(())
}

pub fn grid_cmd(a: &GridArgs) -> CliResult {
    let r = resolve_train(&a.train)?;
    let out = r.out.clone().unwrap_or_else(|| PathBuf::from("turtle-grid"));
    let jobs = a.jobs.or(r.jobs).unwrap_or(1);
    let mut grid = HyperGrid::<f64>::default();
    if let Some(v) = &a.outer_lrs {
        grid.outer_lrs = v.clone();
    }
    if let Some(v) = &a.inner_lrs {
        grid.inner_lrs = v.clone();
    }
    if let Some(v) = &a.warm_starts {
        grid.warm_start_options = v.clone();
    }
    if grid.is_empty() {
        return Err(usage("the learning-rate grid is empty"));
    }
    let d = load_views(&r.spaces, r.cfg.n_classes)?;
    let runs = run_grid(&d, &grid, &r.cfg, jobs)?;
    let mut extra = echo_fields(&r, &out);
    extra.push("config.jobs", jobs);
    write_grid(&out, &runs, &extra)?;
    let ok = runs.iter().filter(|g| g.outcome.is_ok()).count();
    println!("{ok}/{} runs finished; wrote {}", runs.len(), out.display());
    Ok(())
}

pub fn select_cmd(a: &SelectArgs) -> CliResult {
    let runs = read_grid(&a.grid)?;
    if runs.is_empty() {
        return Err(runtime(format!("no run directories in {}", a.grid.display())));
    }
    let recorded = runs.iter().find(|r| r.succeeded());
    let classes = match a.classes {
        Some(c) => c,
        None => recorded
            .and_then(|r| r.fields.get("config.classes"))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| usage("--classes is required when no run recorded it"))?,
    };
    let normalize = a.normalize.unwrap_or_else(|| {
        recorded.and_then(|r| r.fields.get("config.normalize")) == Some("true")
    });
    let mut d = load_views(&a.spaces, classes)?;
    if normalize {
        d = d.normalized();
    }
    let folds = make_folds(d.n_samples(), a.folds, a.seed).map_err(|e| usage(e.to_string()))?;
    let budget = cv_budget::<f64>();
    let mut candidates = Vec::with_capacity(runs.len());
    let mut table = String::from("run,status,degenerate,cv-score\n");
    for run in &runs {
        let name = run.dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let scored = match &run.labels {
            Some(labels) => match cross_validate_task(&d, labels, &folds, &budget) {
                Ok(cv) => Some(cv),
                Err(e) => {
                    log::warn!("{name}: cannot score: {e}");
                    None
                }
            },
            None => None,
        };
        let degenerate = run.degenerate() || scored.as_ref().is_some_and(|c| c.degenerate);
        let score = scored.as_ref().map(|c| c.score);
        let _ = writeln!(
            table,
            "{name},{},{degenerate},{}",
            if run.succeeded() { "ok" } else { "failed" },
            score.map_or(String::new(), |s| s.to_string())
        );
        candidates.push(Candidate { cv_score: score, degenerate });
    }
    let best = select_best(&candidates)?;
    let chosen = &runs[best];
    let get = |k: &str| chosen.fields.get(k).unwrap_or("?").to_string();
    let score = candidates[best].cv_score.expect("selected runs are scored");
    let name = chosen.dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    println!(
        "selected {name}: outer-lr={} inner-lr={} warm-start={} cv-score={score:.6}",
        get("config.outer-lr"),
        get("config.inner-lr"),
        get("config.warm-start")
    );
    let table_path = a.grid.join("selection.csv");
    fs::write(&table_path, table).map_err(|e| runtime(format!("{}: {e}", table_path.display())))?;
    let mut f = ReportFields::default();
    f.push("selected", &name);
    f.push("cv-score", score);
    f.push("outer-lr", get("config.outer-lr"));
    f.push("inner-lr", get("config.inner-lr"));
    f.push("warm-start", get("config.warm-start"));
    f.push("labels", chosen.dir.join("labels.txt").display());
    f.push("config.spaces", join_paths(&a.spaces));
    f.push("config.classes", classes);
    f.push("config.folds", a.folds);
    f.push("config.seed", a.seed);
    f.push("config.normalize", normalize);
    f.write(&a.grid.join("selection.txt"))?;
    Ok(())
}

pub fn eval_cmd(a: &EvalArgs) -> CliResult {
    let pred = read_labels(&a.pred)?;
    let truth = read_labels(&a.truth)?;
    let classes = a
        .classes
        .unwrap_or_else(|| pred.iter().chain(&truth).max().map_or(1, |&m| m + 1));
    let report = clustering_accuracy(&pred, &truth, classes)?;
    println!("accuracy: {:.6}", report.accuracy);
    println!("matched: {}/{}", report.matched, report.n_samples);
    if let Some(path) = &a.contingency {
        report.write_contingency_csv(path)?;
    }
    Ok(())
}

pub fn kmeans_cmd(a: &KmeansArgs) -> CliResult {
    if a.classes == 0 {
        return Err(usage("--classes must be at least 1"));
    }
    let d = load_views(&a.spaces, a.classes)?;
    if d.n_samples() < a.classes {
        return Err(usage(format!("{} samples cannot form {} clusters", d.n_samples(), a.classes)));
    }
    let r = kmeans_baseline(&d, a.classes, a.seed);
    println!("inertia: {}", r.inertia);
    println!("iterations: {}", r.inertia_trace.len());
    if let Some(out) = &a.out {
        write_labels(out, &r.labels)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

pub fn probe_cmd(a: &ProbeArgs) -> CliResult {
    let mut view: EmbeddingMatrix<f64> = load_embeddings(&a.space, Format::from_path(&a.space))?;
    if a.normalize {
        view = turtle_core::embedding::l2_normalize(&view);
    }
    let labels = read_labels(&a.labels)?;
    let split = read_split(&a.split)?;
    let grid = log_grid(if a.full_grid { FULL_GRID_SIZE } else { DEFAULT_GRID_SIZE });
    let r = linear_probe(&view, &labels, &split, &grid, a.seed)?;
    println!("accuracy: {:.6}", r.accuracy);
    println!("lambda: {:e}", r.lambda);
    Ok(())
}

pub fn bench_margin_cmd(a: &BenchMarginArgs) -> CliResult {
    if a.points == 0 || a.dim == 0 {
        return Err(usage("--points and --dim must be positive"));
    }
    let eta = a.eta.unwrap_or(0.99 / a.points as f64);
    let cloud = unit_ball_cloud(a.points, a.dim, a.seed);
    let thetas = gaussian_directions(a.thetas, a.dim, derive_seed(a.seed, 1));
    let mut csv = String::from("theta_id,lhs,rhs,residual,holds\n");
    let mut held = 0;
    for (i, theta) in thetas.iter().enumerate() {
        let r = bound_check(theta, cloud.view(), eta, a.steps).map_err(|e| match e {
            turtle_core::Error::InvalidConfig(m) => usage(m),
            other => runtime(format!("theta {i}: {other}")),
        })?;
        held += usize::from(r.holds);
        let _ = writeln!(csv, "{i},{:e},{:e},{},{}", r.lhs, r.rhs(), r.residual_norm, r.holds);
    }
    match &a.out {
        Some(p) => {
            fs::write(p, &csv).map_err(|e| runtime(format!("{}: {e}", p.display())))?;
            eprintln!("bound held for {held}/{} directions; wrote {}", thetas.len(), p.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}
