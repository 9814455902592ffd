use std::fs;
use std::path::{Path, PathBuf};

use riskroute::datagen::{
    default_class_specs, default_duration_table, generate_corpus, read_corpus_csv, write_corpus_csv,
};
use riskroute::evaluate::{
    build_days, compute_kpis, parse_strategies, recommend, replay, resolve_durations, run_comparison, synthetic_month,
    write_reports, ComparisonSetup, Day, DurationStrategy, StrategyContext, StrategyReport,
};
use riskroute::forecast::{
    train, write_metrics_csv, ForecastModel, MetricsRow, TrainingRecord, Variant, FEATURE_NAMES,
};
use riskroute::model::{Instance, Plan};
use riskroute::risk::{buffer_from_total, conformal_calibrate, estimate_variances, ConformalTable, Residual};
use riskroute::solver::{read_pareto_index, solve, write_convergence_csv, write_pareto_set, BufferRule};
use serde::Serialize;

use crate::args::{
    CalibrateArgs, CompareArgs, GenArgs, GlobalArgs, ReplayArgs, ReportArgs, SolveArgs, SolverArgs, TrainArgs,
};
use crate::config::{grid_from_arg, read_json, read_text, write_json, write_manifest, Config, RuleKind};
use crate::error::{CliError, CliResult};

/// Shared state of one invocation.
pub struct Run {
    pub config: Config,
    pub out: PathBuf,
}

impl Run {
    pub fn new(global: &GlobalArgs) -> CliResult<Self> {
        let mut config = Config::load(global.config.as_deref())?;
        if let Some(seed) = global.seed {
            config.seed = seed;
        }
        fs::create_dir_all(&global.out)?;
        Ok(Self {
            config,
            out: global.out.clone(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn finish(&self, command: &str, inputs: &[PathBuf], outputs: &[PathBuf]) -> CliResult<()> {
        let manifest = write_manifest(&self.out, command, &self.config, inputs, outputs)?;
        say!("manifest {}", manifest.display());
        Ok(())
    }
}

fn load_corpus(path: &Path) -> CliResult<Vec<TrainingRecord>> {
    if !path.exists() {
        return Err(CliError::missing(path));
    }
    read_corpus_csv(path).map_err(|e| CliError::schema(path, e))
}

fn load_model(path: &Path) -> CliResult<ForecastModel> {
    ForecastModel::from_json(&read_text(path)?).map_err(|e| CliError::schema(path, e))
}

fn apply_solver_args(config: &mut Config, a: &SolverArgs) {
    let s = &mut config.solver;
    if let Some(v) = a.alpha {
        s.alpha = Some(v);
    }
    if let Some(v) = a.population {
        s.population = v;
    }
    if let Some(v) = a.generations {
        s.generations = v;
    }
    if let Some(v) = a.time_budget {
        s.time_budget_secs = v;
    }
    if let Some(r) = a.rule {
        config.compare.rule = r.into();
    }
}

fn buffer_rule(kind: RuleKind, conformal: Option<ConformalTable>) -> CliResult<BufferRule> {
    Ok(match kind {
        RuleKind::SubGaussian => BufferRule::SubGaussian,
        RuleKind::None => BufferRule::None,
        RuleKind::Conformal => BufferRule::Conformal {
            table: conformal.ok_or_else(|| CliError::usage("--rule conformal needs --conformal <FILE>"))?,
        },
    })
}

pub fn gen(run: &mut Run, args: &GenArgs) -> CliResult<()> {
    if let Some(days) = args.days {
        run.config.generator.n_days = days;
    }
    run.config.seal();
    let records = generate_corpus(&run.config.generator, &default_class_specs())?;
    let corpus = run.path("corpus.csv");
    write_corpus_csv(&corpus, &records)?;
    say!("records {} days {}", records.len(), run.config.generator.n_days);
    run.finish("gen", &[], &[corpus])
}

#[derive(Serialize)]
struct GridRow {
    n_trees: usize,
    max_depth: usize,
    learning_rate: f64,
    validation_mae: f64,
}

pub fn train_cmd(run: &mut Run, args: &TrainArgs) -> CliResult<()> {
    if let Some(v) = &args.variant {
        run.config.train.variant = v.parse::<Variant>().map_err(|e| CliError::usage(e.to_string()))?;
    }
    if let Some(g) = &args.grid {
        run.config.train.grid = Some(grid_from_arg(g)?);
    }
    run.config.seal();
    let records = load_corpus(&args.corpus)?;
    let outcome = train(&records, &run.config.train)?;

    let model = run.path("model.json");
    fs::write(&model, outcome.model.to_json()?)?;
    let conformal = run.path("conformal.json");
    write_json(&conformal, &outcome.conformal)?;
    let metrics_json = run.path("metrics.json");
    write_json(&metrics_json, &outcome.metrics)?;
    let metrics_csv = run.path("metrics.csv");
    write_metrics_csv(&outcome.metrics, fs::File::create(&metrics_csv)?)?;
    let mut outputs = vec![model, conformal, metrics_json, metrics_csv];
    if !outcome.grid.is_empty() {
        let path = run.path("grid.csv");
        let mut w = csv::Writer::from_path(&path).map_err(riskroute::Error::from)?;
        for p in &outcome.grid {
            w.serialize(GridRow {
                n_trees: p.hyperparams.n_trees,
                max_depth: p.hyperparams.max_depth,
                learning_rate: p.hyperparams.learning_rate,
                validation_mae: p.validation_mae,
            })
            .map_err(riskroute::Error::from)?;
        }
        w.flush()?;
        outputs.push(path);
    }
    for row in &outcome.metrics {
        say!(
            "{} {} mae {:.4} rmse {:.4} mape {:.2}",
            row.model,
            row.set,
            row.metrics.mae,
            row.metrics.rmse,
            row.metrics.mape
        );
    }
    run.finish("train", std::slice::from_ref(&args.corpus), &outputs)
}

#[derive(Serialize)]
struct BufferRow {
    class: String,
    n: usize,
    variance: String,
    sub_gaussian_buffer: String,
    conformal_width: String,
}

pub fn calibrate(run: &mut Run, args: &CalibrateArgs) -> CliResult<()> {
    if let Some(a) = args.alpha {
        run.config.solver.alpha = Some(a);
    }
    run.config.seal();
    let alpha = run.config.solver.alpha.unwrap_or(run.config.fleet.risk_level);
    let mut model = load_model(&args.model)?;
    let records = load_corpus(&args.corpus)?;
    let residuals: Vec<Residual> = records
        .iter()
        .map(|r| Residual::new(r.class, r.duration, model.predict(r.class, &r.attributes)))
        .collect();
    let variances = estimate_variances(&residuals)?;
    let conformal_table = conformal_calibrate(&residuals)?;

    let buffers = run.path("buffers.csv");
    let mut w = csv::Writer::from_path(&buffers).map_err(riskroute::Error::from)?;
    say!("class n variance buffer_min conformal_min (alpha {alpha})");
    for (&class, &var) in &variances.per_class {
        let row = BufferRow {
            class: class.to_string(),
            n: variances.counts[&class],
            variance: format!("{var:.4}"),
            sub_gaussian_buffer: format!("{:.4}", buffer_from_total(var, alpha)?),
            conformal_width: format!("{:.4}", conformal_table.upper_width(class, alpha)?),
        };
        say!(
            "{} {} {} {} {}",
            row.class,
            row.n,
            row.variance,
            row.sub_gaussian_buffer,
            row.conformal_width
        );
        w.serialize(&row).map_err(riskroute::Error::from)?;
    }
    w.flush()?;

    model.variance_table = Some(variances.clone());
    let model_out = run.path("model.json");
    fs::write(&model_out, model.to_json()?)?;
    let variance = run.path("variance.json");
    write_json(&variance, &variances)?;
    let conformal = run.path("conformal.json");
    write_json(&conformal, &conformal_table)?;
    run.finish(
        "calibrate",
        &[args.model.clone(), args.corpus.clone()],
        &[buffers, model_out, variance, conformal],
    )
}

fn find_day(days: Vec<Day>, date: &str) -> CliResult<Day> {
    days.into_iter()
        .find(|d| d.date.to_string() == date)
        .ok_or_else(|| CliError::usage(format!("no activities on day {date}")))
}

pub fn solve_cmd(run: &mut Run, args: &SolveArgs) -> CliResult<()> {
    apply_solver_args(&mut run.config, &args.solver);
    run.config.seal();
    let strategy: DurationStrategy = args
        .strategy
        .parse()
        .map_err(|e: riskroute::Error| CliError::usage(e.to_string()))?;
    let mut inputs = Vec::new();
    let instance = match (&args.instance, &args.corpus, &args.day) {
        (Some(path), _, _) => {
            inputs.push(path.clone());
            read_json::<Instance>(path)?
        }
        (None, Some(corpus), Some(day)) => {
            inputs.push(corpus.clone());
            let records = load_corpus(corpus)?;
            find_day(build_days(&records, &run.config.fleet, run.config.seed)?, day)?.instance
        }
        _ => return Err(CliError::usage("solve needs --instance or --corpus with --day")),
    };
    let model = match &args.model {
        Some(p) => {
            inputs.push(p.clone());
            Some(load_model(p)?)
        }
        None => None,
    };
    let conformal = match &args.solver.conformal {
        Some(p) => {
            inputs.push(p.clone());
            Some(read_json::<ConformalTable>(p)?)
        }
        None => None,
    };
    let table = default_duration_table(&default_class_specs());
    let ctx = StrategyContext {
        default_table: &table,
        default_with_variance: run.config.compare.default_with_variance,
        model: model.as_ref(),
    };
    let estimates = resolve_durations(strategy, &instance, &ctx)?;
    let rule = buffer_rule(run.config.compare.rule, conformal)?;
    let outcome = solve(&instance, &estimates, &rule, &run.config.solver)?;

    let instance_out = run.path("instance.json");
    write_json(&instance_out, &instance)?;
    let estimates_out = run.path("estimates.json");
    write_json(&estimates_out, &estimates)?;
    let pareto_dir = run.path("pareto");
    let index = write_pareto_set(&pareto_dir, &outcome.pareto, &outcome.penalties)?;
    let convergence = run.path("convergence.csv");
    write_convergence_csv(&convergence, &outcome.log)?;

    say!(
        "pareto {} generations {} timed_out {}",
        outcome.pareto.len(),
        outcome.generations_run,
        outcome.timed_out
    );
    let mut outputs = vec![instance_out, estimates_out, convergence];
    outputs.extend(index.iter().map(|e| pareto_dir.join(&e.file)));
    outputs.push(pareto_dir.join("index.json"));
    run.finish("solve", &inputs, &outputs)
}

#[derive(Serialize)]
struct ReplayOutput<'a> {
    plan: &'a str,
    executed: riskroute::evaluate::ExecutedPlan,
    kpi: riskroute::evaluate::DayKpi,
}

pub fn replay_cmd(run: &mut Run, args: &ReplayArgs) -> CliResult<()> {
    run.config.seal();
    let instance_path = args.solution.join("instance.json");
    let instance: Instance = read_json(&instance_path)?;
    let pareto_dir = args.solution.join("pareto");
    let (plan_path, plan) = match &args.plan {
        Some(p) => (p.clone(), read_json::<Plan>(p)?),
        None => {
            let index_path = pareto_dir.join("index.json");
            if !index_path.exists() {
                return Err(CliError::missing(&index_path));
            }
            let index = read_pareto_index(&pareto_dir).map_err(|e| CliError::schema(&index_path, e))?;
            let mut plans = Vec::with_capacity(index.len());
            for e in &index {
                plans.push(read_json::<Plan>(&pareto_dir.join(&e.file))?);
            }
            let best = recommend(&plans).ok_or_else(|| CliError::schema(&index_path, "empty Pareto set"))?;
            let pos = plans.iter().position(|p| std::ptr::eq(p, best)).unwrap_or(0);
            (pareto_dir.join(&index[pos].file), best.clone())
        }
    };
    let executed = replay(&plan, &instance, &instance.true_durations())?;
    let kpi = compute_kpis(&executed, &instance)?;
    say!(
        "operators {} completion {:.4} utilization {:.4} overtime {:.2} tardiness {:.2} travel {:.2}",
        kpi.operators_used,
        kpi.completion_rate,
        kpi.utilization,
        kpi.overtime,
        kpi.tardiness,
        kpi.travel
    );
    let name = plan_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let out = run.path("replay.json");
    write_json(
        &out,
        &ReplayOutput {
            plan: &name,
            executed,
            kpi,
        },
    )?;
    run.finish("replay", &[instance_path, plan_path], &[out])
}

pub fn compare(run: &mut Run, args: &CompareArgs) -> CliResult<()> {
    if let Some(s) = &args.strategies {
        run.config.compare.strategies = parse_strategies(s).map_err(|e| CliError::usage(e.to_string()))?;
    }
    if let Some(d) = args.days {
        run.config.generator.n_days = d;
    }
    apply_solver_args(&mut run.config, &args.solver);
    run.config.seal();
    let cfg = &run.config;
    let specs = default_class_specs();
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();

    let days = if args.month == "synthetic-month" {
        synthetic_month(&cfg.generator, &specs, &cfg.fleet)?
    } else {
        let path = PathBuf::from(&args.month);
        inputs.push(path.clone());
        build_days(&load_corpus(&path)?, &cfg.fleet, cfg.seed)?
    };

    let mut conformal = match &args.solver.conformal {
        Some(p) => {
            inputs.push(p.clone());
            Some(read_json::<ConformalTable>(p)?)
        }
        None => None,
    };
    let needs_model = cfg.compare.strategies.contains(&DurationStrategy::Forecast);
    let model = match &args.model {
        Some(p) => {
            inputs.push(p.clone());
            Some(load_model(p)?)
        }
        None if needs_model => {
            let history = generate_corpus(&cfg.history, &specs)?;
            let outcome = train(&history, &cfg.train)?;
            let path = run.path("model.json");
            fs::write(&path, outcome.model.to_json()?)?;
            outputs.push(path);
            if conformal.is_none() {
                let path = run.path("conformal.json");
                write_json(&path, &outcome.conformal)?;
                outputs.push(path);
                conformal = Some(outcome.conformal);
            }
            Some(outcome.model)
        }
        None => None,
    };

    let table = default_duration_table(&specs);
    let rule = buffer_rule(cfg.compare.rule, conformal)?;
    let setup = ComparisonSetup {
        strategies: &cfg.compare.strategies,
        context: StrategyContext {
            default_table: &table,
            default_with_variance: cfg.compare.default_with_variance,
            model: model.as_ref(),
        },
        rule: &rule,
        solver: &cfg.solver,
        seed: cfg.seed,
    };
    let reports = run_comparison(&days, &setup)?;
    print_monthly(&reports);
    outputs.extend(write_reports(&run.out, &reports)?);
    let results = run.path("results.json");
    write_json(&results, &reports)?;
    outputs.push(results);
    run.finish("compare", &inputs, &outputs)
}

fn print_monthly(reports: &[StrategyReport]) {
    say!("strategy operators completion utilization overtime tardiness travel");
    for r in reports {
        let m = &r.monthly;
        say!(
            "{} {:.2} {:.4} {:.4} {:.2} {:.2} {:.2}",
            r.strategy,
            m.operators_used,
            m.completion_rate,
            m.utilization,
            m.overtime,
            m.tardiness,
            m.travel
        );
    }
}

#[derive(Serialize)]
struct ImportanceRow<'a> {
    component: String,
    feature: &'a str,
    gain: f64,
}

pub fn report(run: &mut Run, args: &ReportArgs) -> CliResult<()> {
    run.config.seal();
    let metrics = args.input.join("metrics.json");
    let results = args.input.join("results.json");
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    if metrics.exists() {
        let rows: Vec<MetricsRow> = read_json(&metrics)?;
        let path = run.path("metrics.csv");
        write_metrics_csv(&rows, fs::File::create(&path)?)?;
        inputs.push(metrics);
        outputs.push(path);
        let model_path = args.input.join("model.json");
        if model_path.exists() {
            let model = load_model(&model_path)?;
            let path = run.path("importance.csv");
            let mut w = csv::Writer::from_path(&path).map_err(riskroute::Error::from)?;
            for (role, gains) in model.gain_importance() {
                let component = serde_json::to_value(role)?.as_str().unwrap_or_default().to_string();
                for (feature, &gain) in FEATURE_NAMES.iter().zip(gains.iter()) {
                    w.serialize(ImportanceRow {
                        component: component.clone(),
                        feature,
                        gain,
                    })
                    .map_err(riskroute::Error::from)?;
                }
            }
            w.flush()?;
            inputs.push(model_path);
            outputs.push(path);
        }
    }
    if results.exists() {
        let reports: Vec<StrategyReport> = read_json(&results)?;
        print_monthly(&reports);
        outputs.extend(write_reports(&run.out, &reports)?);
        inputs.push(results);
    }
    if inputs.is_empty() {
        return Err(CliError::missing(&args.input.join("metrics.json or results.json")));
    }
    for p in &outputs {
        say!("wrote {}", p.display());
    }
    run.finish("report", &inputs, &outputs)
}
