use std::path::PathBuf;

use fwmg::benchmark::{
    run_comparison, sample_situations, sweep_augment_count, sweep_demo_count, ComparisonReport, CurvePoint, FittedModel,
    Method, PickTask,
};
use fwmg::geometry::Frame;
use fwmg::optimize::optimize_weights;
use fwmg::relevance::{uniform_grid, RelevanceProfile};
use fwmg::tpgmm::{augment_dataset, fit_tpgmm_traced, AugmentConfig, TpGmmModel};
use fwmg::trajectory::{Demonstration, Trajectory};
use fwmg::transform::{generate, select_reference};
use serde::{Deserialize, Serialize};

use crate::config::{require_inputs, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{fmt, read_json, Metadata, OutputSet};
use crate::svg::{BarChart, LinePlot, Series};

/// What every command needs besides its own inputs.
pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub methods: Vec<Method>,
}

impl Context {
    fn outputs(&self, command: &str) -> CliResult<OutputSet> {
        OutputSet::create(&self.out, Metadata::new(command, &self.config))
    }

    fn dataset(&self) -> CliResult<DatasetFile> {
        let path = self.config.dataset_path(&self.out);
        require_inputs(&[&path])?;
        read_json(&path)
    }

    fn profile(&self) -> CliResult<RelevanceProfile> {
        let path = self.config.profile_path(&self.out);
        require_inputs(&[&path])?;
        Ok(read_json::<ProfileFile>(&path)?.profile)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetFile {
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub task: PickTask,
    pub train: Vec<Demonstration>,
    #[serde(default)]
    pub validation: Vec<Demonstration>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileFile {
    pub profile: RelevanceProfile,
}

#[derive(Serialize)]
struct ModelFile<'a> {
    model: &'a TpGmmModel,
    log_likelihood: &'a [f64],
    iterations: usize,
    converged: bool,
}

#[derive(Serialize)]
struct GeneratedFile<'a> {
    references: &'a [usize],
    demonstrations: &'a [Demonstration],
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SweepFile {
    #[serde(default)]
    pub demo_count: Vec<CurvePoint>,
    #[serde(default)]
    pub augment_count: Vec<CurvePoint>,
}

pub fn gen_dataset(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    ctx.config.validate()?;
    let bench = &ctx.config.benchmark;
    let (train, validation) = bench.split_dataset()?;
    let mut out = ctx.outputs("gen-dataset")?;
    out.json(
        "dataset.json",
        &DatasetFile {
            noise: bench.noise,
            task: bench.task.clone(),
            train,
            validation,
        },
    )?;
    Ok(out.commit())
}

pub fn fit_weights(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    ctx.config.validate()?;
    let data = ctx.dataset()?;
    let bench = &ctx.config.benchmark;
    let basis = bench.basis()?;
    let report = optimize_weights(&data.train, &basis, &bench.optimizer)?;
    let profile = report.profile(&basis)?;

    let mut out = ctx.outputs("fit-weights")?;
    out.json("profile.json", &ProfileFile { profile: profile.clone() })?;
    out.json("optimize_report.json", &report)?;
    write_profile(&mut out, &profile)?;
    let written = out.commit();

    if !report.feasible {
        return Err(fwmg::Error::Infeasible(format!(
            "final weights violate the grid constraint by {:.3e}",
            report.max_violation
        ))
        .into());
    }
    if !report.converged {
        return Err(CliError::NotConverged(format!(
            "stopped after {} iterations at objective {:.6e}",
            report.iterations, report.objective_value
        )));
    }
    Ok(written)
}

fn target_situations(ctx: &Context, data: &DatasetFile) -> CliResult<Vec<Vec<Frame>>> {
    if let Some(path) = &ctx.config.situations {
        require_inputs(&[path])?;
        return read_json(path);
    }
    if !data.validation.is_empty() {
        return Ok(data.validation.iter().map(|d| d.situation().to_vec()).collect());
    }
    let mut sampler = ctx.config.benchmark.sampler.clone();
    sampler.seed = ctx.config.seed();
    Ok(sample_situations(&sampler, ctx.config.benchmark.success_trials)?)
}

pub fn generate_cmd(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let data = ctx.dataset()?;
    let profile = ctx.profile()?;
    let situations = target_situations(ctx, &data)?;
    let lambda = ctx.config.benchmark.selection_lambda;
    let mut references = Vec::with_capacity(situations.len());
    let mut generated = Vec::with_capacity(situations.len());
    for situation in situations {
        let r = select_reference(&data.train, &situation, lambda)?;
        let traj = generate(&data.train[r], &situation, &profile)?;
        references.push(r);
        generated.push(Demonstration::new(traj, situation)?);
    }
    let mut out = ctx.outputs("generate")?;
    out.json(
        "generated.json",
        &GeneratedFile {
            references: &references,
            demonstrations: &generated,
        },
    )?;
    let rows = trajectory_rows(generated.iter().enumerate().map(|(i, d)| (i.to_string(), "frame-weighted", d.trajectory())));
    out.csv("generated.csv", &trajectory_header(dim_of(&data)), &rows)?;
    Ok(out.commit())
}

pub fn augment(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    ctx.config.validate()?;
    let data = ctx.dataset()?;
    let profile = ctx.profile()?;
    let bench = &ctx.config.benchmark;
    let config = AugmentConfig {
        target_count: bench.augment_target,
        sampler: bench.sampler.clone(),
        seed: ctx.config.seed(),
        selection_lambda: bench.selection_lambda,
    };
    let augmented = augment_dataset(&data.train, &profile, &config)?;
    let mut out = ctx.outputs("augment")?;
    out.json(
        "augmented.json",
        &DatasetFile {
            train: augmented,
            ..data
        },
    )?;
    Ok(out.commit())
}

pub fn tpgmm_train(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    ctx.config.validate()?;
    let data = ctx.dataset()?;
    let bench = &ctx.config.benchmark;
    let fit = fit_tpgmm_traced(&data.train, bench.components, ctx.config.seed())?;
    let mut out = ctx.outputs("tpgmm-train")?;
    out.json(
        "tpgmm_model.json",
        &ModelFile {
            model: &fit.model,
            log_likelihood: &fit.log_likelihood,
            iterations: fit.iterations,
            converged: fit.converged,
        },
    )?;
    Ok(out.commit())
}

pub fn evaluate(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    ctx.config.validate()?;
    let data = ctx.dataset()?;
    if data.validation.is_empty() {
        return Err(CliError::Input("the dataset has no validation demonstrations".to_string()));
    }
    let bench = &ctx.config.benchmark;
    let mut out = ctx.outputs("evaluate")?;
    let report = run_comparison(&data.train, &data.validation, &ctx.methods, bench)?;
    out.json("report.json", &report)?;
    write_report_tables(&mut out, &report)?;
    write_report_figures(&mut out, &report)?;

    let mut rows = Vec::new();
    for (i, demo) in data.validation.iter().enumerate() {
        rows.extend(trajectory_rows([(i.to_string(), "truth", demo.trajectory())]));
        for (method, model) in &report.fitted {
            let traj = model.generate(demo.situation(), bench.task.points)?;
            rows.extend(trajectory_rows([(i.to_string(), method.name(), &traj)]));
        }
    }
    out.csv("overlays.csv", &trajectory_header(dim_of(&data)), &rows)?;
    let first = &data.validation[0];
    out.svg("overlay.svg", &overlay_plot(first, &report.fitted, bench.task.points)?.render())?;
    Ok(out.commit())
}

pub fn sweep(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    ctx.config.validate()?;
    let config = ctx.config.sweep_config();
    let wants = |m: Method| ctx.methods.contains(&m);
    let mut file = SweepFile::default();
    if wants(Method::FrameWeighted) || wants(Method::Tpgmm) {
        file.demo_count = sweep_demo_count(&config)?
            .into_iter()
            .filter(|p| wants(p.method))
            .collect();
    }
    if wants(Method::AugmentedTpgmm) {
        file.augment_count = sweep_augment_count(&config)?;
    }
    let mut out = ctx.outputs("sweep")?;
    out.json("sweep.json", &file)?;
    write_sweep(&mut out, &file)?;
    Ok(out.commit())
}

/// Re-renders figures from the JSON reports already in the output directory.
pub fn plot(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let report_path = ctx.out.join("report.json");
    let sweep_path = ctx.out.join("sweep.json");
    if !report_path.is_file() && !sweep_path.is_file() {
        return Err(CliError::Input(format!(
            "nothing to plot: neither {} nor {} exists",
            report_path.display(),
            sweep_path.display()
        )));
    }
    let mut out = ctx.outputs("plot")?;
    if report_path.is_file() {
        let report: ComparisonReport = read_json(&report_path)?;
        write_report_figures(&mut out, &report)?;
    }
    if sweep_path.is_file() {
        let file: SweepFile = read_json(&sweep_path)?;
        for (name, plot) in sweep_plots(&file) {
            out.svg(name, &plot.render())?;
        }
    }
    Ok(out.commit())
}

fn dim_of(data: &DatasetFile) -> usize {
    data.train.first().map_or(3, |d| d.dim())
}

fn trajectory_header(dim: usize) -> Vec<&'static str> {
    let mut header = vec!["situation", "source", "index"];
    header.extend(["x", "y", "z"].iter().take(dim));
    header
}

fn trajectory_rows<'a>(items: impl IntoIterator<Item = (String, &'a str, &'a Trajectory)>) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (situation, source, traj) in items {
        for (i, p) in traj.points().iter().enumerate() {
            let mut row = vec![situation.clone(), source.to_string(), i.to_string()];
            row.extend(p.iter().map(|&v| fmt(v)));
            rows.push(row);
        }
    }
    rows
}

fn profile_plot(profile: &RelevanceProfile) -> CliResult<(LinePlot, Vec<Vec<String>>)> {
    let grid = uniform_grid(201);
    let basis = profile.basis();
    let mut rows = Vec::with_capacity(grid.len());
    let mut curve = Vec::with_capacity(grid.len());
    let mut bumps = vec![Vec::with_capacity(grid.len()); basis.len()];
    for &d in &grid {
        let f = profile.evaluate(d)?;
        let phi = basis.rbf_vector(d)?;
        let mut row = vec![fmt(d), fmt(f)];
        for (q, &v) in phi.iter().enumerate() {
            bumps[q].push((d, v));
            row.push(fmt(v));
        }
        curve.push((d, f));
        rows.push(row);
    }
    let mut series = vec![Series::solid("f(d), frame 2", curve)];
    series.extend(
        bumps
            .into_iter()
            .enumerate()
            .map(|(q, pts)| Series::solid(format!("rbf {q}"), pts).dashed().faint()),
    );
    let plot = LinePlot {
        title: "Relevance of frame 2 with its basis functions".to_string(),
        x_label: "progress d".to_string(),
        y_label: "weight".to_string(),
        series,
    };
    Ok((plot, rows))
}

fn write_profile(out: &mut OutputSet, profile: &RelevanceProfile) -> CliResult<()> {
    let (plot, rows) = profile_plot(profile)?;
    let mut header = vec!["d".to_string(), "f".to_string()];
    header.extend((0..profile.basis().len()).map(|q| format!("rbf_{q}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv("profile.csv", &header, &rows)?;
    out.svg("profile.svg", &plot.render())?;
    Ok(())
}

fn ratio(v: Option<f64>) -> String {
    v.map_or_else(String::new, |r| format!("{r:.2}"))
}

fn write_report_tables(out: &mut OutputSet, report: &ComparisonReport) -> CliResult<()> {
    let rows: Vec<Vec<String>> = report
        .results
        .iter()
        .map(|r| {
            vec![
                r.method.name().to_string(),
                fmt(r.training_error),
                ratio(r.training_ratio),
                fmt(r.validation_error),
                ratio(r.validation_ratio),
            ]
        })
        .collect();
    out.csv(
        "table.csv",
        &["method", "training_error", "training_pct_of_tpgmm", "validation_error", "validation_pct_of_tpgmm"],
        &rows,
    )?;
    let rows: Vec<Vec<String>> = report
        .results
        .iter()
        .map(|r| vec![r.method.name().to_string(), format!("{:.1}", 100.0 * r.success_rate)])
        .collect();
    out.csv("success.csv", &["method", "success_pct"], &rows)?;
    Ok(())
}

fn write_report_figures(out: &mut OutputSet, report: &ComparisonReport) -> CliResult<()> {
    let chart = BarChart {
        title: format!("Success rate over {} situations", report.success_trials),
        y_label: "success (%)".to_string(),
        bars: report
            .results
            .iter()
            .map(|r| (r.method.name().to_string(), 100.0 * r.success_rate))
            .collect(),
        y_max: 100.0,
    };
    out.svg("success.svg", &chart.render())?;
    if let Some(profile) = &report.profile {
        write_profile(out, profile)?;
    }
    Ok(())
}

fn overlay_plot(truth: &Demonstration, fitted: &[(Method, FittedModel)], points: usize) -> CliResult<LinePlot> {
    let dim = truth.dim();
    // side view: first axis against the vertical one
    let project = |t: &Trajectory| t.points().iter().map(|p| (p[0], p[dim - 1])).collect::<Vec<_>>();
    let mut series = vec![Series::solid("truth", project(truth.trajectory())).dashed()];
    for (method, model) in fitted {
        series.push(Series::solid(method.name(), project(&model.generate(truth.situation(), points)?)));
    }
    Ok(LinePlot {
        title: "Generated trajectories, first validation situation".to_string(),
        x_label: "x".to_string(),
        y_label: if dim == 3 { "z" } else { "y" }.to_string(),
        series,
    })
}

fn curve_series(points: &[CurvePoint]) -> Vec<Series> {
    Method::ALL
        .iter()
        .filter_map(|&m| {
            let pts: Vec<(f64, f64)> = points
                .iter()
                .filter(|p| p.method == m)
                .map(|p| (p.count as f64, p.mean_error))
                .collect();
            (!pts.is_empty()).then(|| Series::solid(m.name(), pts))
        })
        .collect()
}

fn sweep_plots(file: &SweepFile) -> Vec<(&'static str, LinePlot)> {
    let mut plots = Vec::new();
    if !file.demo_count.is_empty() {
        plots.push((
            "sweep_demo_count.svg",
            LinePlot {
                title: "Validation error against training demonstrations".to_string(),
                x_label: "training demonstrations".to_string(),
                y_label: "mean validation error".to_string(),
                series: curve_series(&file.demo_count),
            },
        ));
    }
    if !file.augment_count.is_empty() {
        plots.push((
            "sweep_augment_count.svg",
            LinePlot {
                title: "Augmented TP-GMM against synthetic demonstrations".to_string(),
                x_label: "synthetic demonstrations".to_string(),
                y_label: "mean validation error".to_string(),
                series: curve_series(&file.augment_count),
            },
        ));
    }
    plots
}

fn write_sweep(out: &mut OutputSet, file: &SweepFile) -> CliResult<()> {
    for (name, points) in [
        ("sweep_demo_count.csv", &file.demo_count),
        ("sweep_augment_count.csv", &file.augment_count),
    ] {
        if points.is_empty() {
            continue;
        }
        let rows: Vec<Vec<String>> = points
            .iter()
            .map(|p| vec![p.method.name().to_string(), p.count.to_string(), fmt(p.mean_error), p.runs.to_string()])
            .collect();
        out.csv(name, &["method", "count", "mean_error", "runs"], &rows)?;
    }
    for (name, plot) in sweep_plots(file) {
        out.svg(name, &plot.render())?;
    }
    Ok(())
}
