use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};

use dyncal_core::experiments::{
    calibrate, generate_dataset, run_campaign, standard_subsets, CalibrationOptions, CampaignContext, CampaignResult,
    LegSummary, MarginalSummary, TruthConfig,
};
use dyncal_core::filtering::{run_filter, FilterSettings};
use dyncal_core::io;
use dyncal_core::{ModelComparison, ModelVariant, TmcmcConfig};

use crate::config::{CalibrateConfig, CompareConfig, DataSource, Format, GenerateConfig, ReportConfig, RunConfig};
use crate::{Cli, Command, CompareArgs, SamplerArgs};

pub const CONFIG_FILE: &str = "config.json";
pub const CAMPAIGN_FILE: &str = "campaign.json";

/// A failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub error: anyhow::Error,
    pub code: u8,
}

type CliResult<T> = Result<T, CliError>;

fn usage(error: impl Into<anyhow::Error>) -> CliError {
    CliError {
        error: error.into(),
        code: 2,
    }
}

fn runtime(error: impl Into<anyhow::Error>) -> CliError {
    CliError {
        error: error.into(),
        code: 1,
    }
}

pub fn dispatch(cli: Cli) -> CliResult<()> {
    let root = cli.output_root.clone();
    let seed = cli.seed;
    let (config, out) = match cli.command {
        Command::Generate(a) => {
            let mut truth = TruthConfig::case(a.case).map_err(usage)?.with_seed(seed);
            if let Some(dt) = a.sim_dt {
                truth.sim_dt = dt;
            }
            if let Some(s) = a.noise_std {
                truth.noise_std = s;
            }
            let default = format!("case{}-seed{seed}", a.case);
            (RunConfig::Generate(GenerateConfig { case: a.case, truth }), resolve_out(&root, a.out, &default))
        }
        Command::Calibrate(a) => {
            let mut model: ModelVariant = a.model.parse().map_err(usage)?;
            if let Some(k0) = a.init_k {
                if model.initial_stiffness.is_some() {
                    return Err(usage(anyhow!("give the initial stiffness either in --model or --init-k, not both")));
                }
                if !model.id.has_fixed_initial_stiffness() {
                    return Err(usage(anyhow!("model {} has no initial stiffness to set", model.id)));
                }
                model = ModelVariant::with_initial_stiffness(model.id, k0);
            }
            let default = format!("calibrate-{}-seed{seed}", model.label());
            let config = CalibrateConfig {
                model,
                data: absolute(&a.data),
                options: options(&a.sampler, seed),
            };
            (RunConfig::Calibrate(config), resolve_out(&root, a.out, &default))
        }
        Command::Compare(a) => {
            let default = match a.case {
                Some(c) => format!("compare-case{c}-seed{seed}"),
                None => format!("compare-seed{seed}"),
            };
            let out = resolve_out(&root, a.out.clone(), &default);
            (compare_config(a, seed)?, out)
        }
        Command::Report(a) => {
            let run = absolute(&a.run);
            let out = match a.out {
                Some(o) => resolve_out(&root, Some(o), ""),
                None => run.join("report"),
            };
            let config = ReportConfig {
                run,
                format: a.format,
                offset: a.offset,
            };
            (RunConfig::Report(config), out)
        }
        Command::Rerun(a) => {
            let path = if a.config.is_dir() { a.config.join(CONFIG_FILE) } else { a.config.clone() };
            let config: RunConfig = io::read_json(&path).map_err(usage)?;
            let out = match a.out {
                Some(o) => resolve_out(&root, Some(o), ""),
                None => path.parent().map(Path::to_path_buf).unwrap_or_default(),
            };
            (config, out)
        }
    };
    execute(&config, &out)
}

/// Validates `config`, echoes it to `out/config.json` and runs it.
pub fn execute(config: &RunConfig, out: &Path) -> CliResult<()> {
    config.validate().map_err(|e| usage(anyhow!(e)))?;
    match config {
        RunConfig::Generate(c) => generate(c, out)?,
        RunConfig::Calibrate(c) => calibrate_one(c, out)?,
        RunConfig::Compare(c) => compare(c, out)?,
        RunConfig::Report(c) => report(c, out)?,
    }
    io::write_json(&out.join(CONFIG_FILE), config).map_err(runtime)?;
    eprintln!("outputs in {}", out.display());
    Ok(())
}

fn resolve_out(root: &Option<PathBuf>, out: Option<PathBuf>, default: &str) -> PathBuf {
    let out = out.unwrap_or_else(|| PathBuf::from(default));
    match root {
        Some(r) if out.is_relative() => r.join(out),
        _ => out,
    }
}

fn absolute(p: &Path) -> PathBuf {
    std::fs::canonicalize(p).unwrap_or_else(|_| std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf()))
}

fn options(s: &SamplerArgs, seed: u64) -> CalibrationOptions {
    CalibrationOptions {
        tmcmc: TmcmcConfig {
            n_samples: s.samples,
            beta: s.beta,
            target_cov: s.target_cov,
            max_stages: s.max_stages,
            seed,
            mh_steps: s.mh_steps,
        },
        filter: FilterSettings { grid_dt: s.grid_dt },
        cj_draws: s.cj,
    }
}

fn compare_config(a: CompareArgs, seed: u64) -> CliResult<RunConfig> {
    let models = if a.all {
        ModelVariant::full_set(a.erroneous_k)
    } else {
        a.models
            .iter()
            .map(|m| m.parse::<ModelVariant>().map_err(usage))
            .collect::<CliResult<Vec<_>>>()?
    };
    let labels: Vec<String> = models.iter().map(ModelVariant::label).collect();
    let (case, source) = match (a.case, &a.data) {
        (Some(c), _) => (
            Some(c),
            DataSource::Case {
                truth: TruthConfig::case(c).map_err(usage)?.with_seed(seed),
            },
        ),
        (None, Some(dir)) => {
            let provenance = io::read_dataset(dir).map_err(usage)?.provenance;
            (provenance.case, DataSource::Directory { path: absolute(dir) })
        }
        (None, None) => return Err(usage(anyhow!("give --case or --data"))),
    };
    let subsets = if a.exclude.is_empty() {
        case.map(standard_subsets).unwrap_or_default()
    } else {
        let mut rows = Vec::new();
        for (i, list) in a.exclude.iter().enumerate() {
            let excluded: Vec<String> = list.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            if let Some(bad) = excluded.iter().find(|m| !labels.contains(m)) {
                return Err(usage(anyhow!("--exclude names `{bad}`, which is not among the compared models")));
            }
            rows.push(("*".repeat(i + 1), excluded));
        }
        rows
    };
    Ok(RunConfig::Compare(CompareConfig {
        case,
        source,
        models,
        subsets,
        options: options(&a.sampler, seed),
        format: a.format,
    }))
}

fn generate(c: &GenerateConfig, out: &Path) -> CliResult<()> {
    let ds = generate_dataset(&c.truth).map_err(usage)?;
    io::write_dataset(out, Some(c.case), &ds).map_err(runtime)?;
    let s = ds.summary();
    println!(
        "case {}: {} observations, pre-change RMS {:.3} mm, noise/response variance ratio {:.2}%",
        c.case,
        s.count,
        s.rms,
        100.0 * s.noise_ratio
    );
    Ok(())
}

fn progress(msg: &str) {
    eprintln!("{msg}");
}

fn calibrate_one(c: &CalibrateConfig, out: &Path) -> CliResult<()> {
    let loaded = io::read_dataset(&c.data).map_err(usage)?;
    let data = &loaded.observations;
    let model = c.model.build().map_err(usage)?;
    let label = c.model.label();
    progress(&format!("calibrating {label}"));
    let cal = calibrate(&model, data, &c.options)
        .with_context(|| format!("calibrating {label}"))
        .map_err(runtime)?;
    let summary = cal
        .summary(&label, data, &c.options.filter)
        .with_context(|| format!("filtering {label} at the MAP point"))
        .map_err(runtime)?;
    let innovations = run_filter(&model, &summary.map, data, &c.options.filter)
        .with_context(|| format!("filtering {label} at the MAP point"))
        .map_err(runtime)?
        .innovations;
    write_leg(out, &summary).map_err(runtime)?;
    io::write_file(&out.join("innovations.csv"), io::innovations_csv(&innovations).as_bytes()).map_err(runtime)?;
    io::write_json(&out.join("evidence.json"), &EvidenceFile::new(&summary)).map_err(runtime)?;
    print!("{}", marginal_table(&summary.marginals()));
    println!(
        "{label}: log evidence {:.4}, average data fit {:.4}, information gain {:.4}, {} stages",
        summary.report.log_evidence,
        summary.report.avg_data_fit,
        summary.report.info_gain,
        summary.stages.len() - 1
    );
    if let Some(cj) = summary.chib_jeliazkov {
        println!("{label}: Chib-Jeliazkov log evidence {cj:.4}");
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct EvidenceFile<'a> {
    model: &'a str,
    report: dyncal_core::EvidenceReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    chib_jeliazkov: Option<f64>,
    map: Vec<(&'a str, f64)>,
    marginals: Vec<MarginalSummary>,
}

impl<'a> EvidenceFile<'a> {
    fn new(s: &'a LegSummary) -> Self {
        EvidenceFile {
            model: &s.model,
            report: s.report,
            chib_jeliazkov: s.chib_jeliazkov,
            map: s.param_names.iter().map(String::as_str).zip(s.map.iter().copied()).collect(),
            marginals: s.marginals(),
        }
    }
}

fn marginal_table(rows: &[MarginalSummary]) -> String {
    let mut s = format!("{:<10} {:>12} {:>12} {:>12} {:>12}\n", "param", "mean", "std", "q0.5%", "q99.5%");
    for r in rows {
        let _ = writeln!(s, "{:<10} {:>12.5} {:>12.5} {:>12.5} {:>12.5}", r.name, r.mean, r.std, r.q005, r.q995);
    }
    s
}

/// Per-model plot data and sampler history.
fn write_leg(dir: &Path, s: &LegSummary) -> dyncal_core::Result<()> {
    io::write_file(
        &dir.join("posterior.csv"),
        io::posterior_csv(&s.param_names, &s.posterior, &s.posterior_log_liks).as_bytes(),
    )?;
    io::write_file(&dir.join("trajectory.csv"), io::band_csv(&s.trajectory).as_bytes())?;
    io::write_json(&dir.join("stages.json"), &s.stages)
}

fn compare(c: &CompareConfig, out: &Path) -> CliResult<()> {
    let (data, context) = match &c.source {
        DataSource::Case { truth } => {
            let ds = generate_dataset(truth).map_err(usage)?;
            io::write_dataset(&out.join("data"), c.case, &ds).map_err(runtime)?;
            (ds.observations.clone(), CampaignContext::of(c.case, &ds))
        }
        DataSource::Directory { path } => {
            let loaded = io::read_dataset(path).map_err(usage)?;
            let p = loaded.provenance;
            let context = CampaignContext {
                case: c.case,
                truth: Some(p.truth),
                dataset: Some(p.summary),
            };
            (loaded.observations, context)
        }
    };
    let result =
        run_campaign(&data, context, &c.models, &c.options, &c.subsets, &|m: &str| progress(m)).map_err(runtime)?;
    for leg in &result.legs {
        if let Some(s) = leg.summary() {
            write_leg(&out.join(&leg.model), s).map_err(runtime)?;
        }
    }
    io::write_json(&out.join(CAMPAIGN_FILE), &result).map_err(runtime)?;
    for (model, error) in result.failures() {
        eprintln!("warning: {model} excluded from the comparison: {error}");
    }
    let cmp = result
        .comparison
        .as_ref()
        .ok_or_else(|| runtime(anyhow!("every model failed to calibrate")))?;
    write_table(out, "comparison", cmp).map_err(runtime)?;
    print!("{}", render(cmp, c.format));
    Ok(())
}

fn write_table(dir: &Path, stem: &str, cmp: &ModelComparison) -> dyncal_core::Result<()> {
    io::write_file(&dir.join(format!("{stem}.csv")), io::comparison_csv(cmp).as_bytes())?;
    io::write_json(&dir.join(format!("{stem}.json")), cmp)
}

fn render(cmp: &ModelComparison, format: Format) -> String {
    match format {
        Format::Csv => io::comparison_csv(cmp),
        Format::Json => io::to_json(cmp),
    }
}

/// Shifts log evidence and data fit by `offset`; information gain and
/// probabilities are unaffected.
fn with_offset(cmp: &ModelComparison, offset: f64) -> ModelComparison {
    let mut shifted = cmp.clone();
    for e in &mut shifted.entries {
        e.report.log_evidence += offset;
        e.report.avg_data_fit += offset;
    }
    shifted
}

fn report(c: &ReportConfig, out: &Path) -> CliResult<()> {
    let path = c.run.join(CAMPAIGN_FILE);
    let result: CampaignResult = io::read_json(&path).map_err(usage)?;
    let cmp = result
        .comparison
        .as_ref()
        .ok_or_else(|| usage(anyhow!("{}: run has no comparison", path.display())))?;
    let table = with_offset(cmp, c.offset);
    write_table(out, "table", &table).map_err(runtime)?;
    for leg in &result.legs {
        if let Some(s) = leg.summary() {
            write_leg(&out.join(&leg.model), s).map_err(runtime)?;
        }
    }
    print!("{}", render(&table, c.format));
    Ok(())
}
