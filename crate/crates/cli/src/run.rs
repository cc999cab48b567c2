use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use fairmed_core::exact_fair::exact_pipeline;
use fairmed_core::metric::{audit_triangle, TRIANGLE_AUDIT_CAP};
use fairmed_core::pipeline::{general_pipeline, PipelineConfig};
use fairmed_core::FairnessPolicy;

use crate::ingest::load_instance;
use crate::policy_spec::parse_policy;
use crate::report::Report;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PipelineKind {
    General,
    Exact,
}

impl PipelineKind {
    fn name(self) -> &'static str {
        match self {
            PipelineKind::General => "general",
            PipelineKind::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Points CSV: `id,group,x1,...` or `id,group` with --matrix
    #[arg(long)]
    pub input: PathBuf,
    /// Headerless n×n distance matrix in point order
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Number of seed centers
    #[arg(long)]
    pub k: usize,
    /// none | exact | alphabeta:A;B | coverage:D=..;alpha=.. | explicit:P;P
    #[arg(long, default_value = "exact")]
    pub policy: String,
    #[arg(long, value_enum, default_value_t = PipelineKind::General)]
    pub pipeline: PipelineKind,
    /// Sampled trees (default grows with log n)
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Fail on triangle-inequality violations instead of warning
    #[arg(long)]
    pub strict_metric: bool,
    /// Require every opened center to receive at least one point
    #[arg(long)]
    pub forbid_empty: bool,
    /// Write the winning tree's DP table to this file
    #[arg(long)]
    pub dump_dp: Option<PathBuf>,
    /// Add wall-clock time to the result document
    #[arg(long)]
    pub timing: bool,
}

pub fn run(config: &RunConfig) -> Result<Report, CliError> {
    if config.k == 0 {
        return Err(CliError::Input("k must be at least 1".into()));
    }
    if config.trials == Some(0) {
        return Err(CliError::Input("trials must be at least 1".into()));
    }
    if config.threads == 0 {
        return Err(CliError::Input("threads must be at least 1".into()));
    }
    let data = load_instance(&config.input, config.matrix.as_deref())?;
    let instance = &data.instance;
    log::info!(
        "loaded {} points, {} groups{}",
        instance.len(),
        data.labels.len(),
        if data.virtual_map.is_some() { " (overlapping)" } else { "" }
    );

    if config.matrix.is_some() {
        match audit_triangle(instance.metric(), TRIANGLE_AUDIT_CAP) {
            Ok(v) if v.is_empty() => {}
            Ok(v) => {
                let (a, b, c) = v[0];
                let (a, b, c) = (&data.names[a], &data.names[b], &data.names[c]);
                let msg = format!(
                    "{} triangle violations, e.g. d({a},{c}) > d({a},{b}) + d({b},{c})",
                    v.len()
                );
                if config.strict_metric {
                    return Err(CliError::Input(msg));
                }
                log::warn!("{msg}");
            }
            Err(e) if config.strict_metric => return Err(e.into()),
            Err(e) => log::warn!("triangle audit skipped: {e}"),
        }
    }

    let is_exact = config.policy.trim() == "exact";
    if data.virtual_map.is_some() && (is_exact || config.pipeline == PipelineKind::Exact) {
        return Err(CliError::Input(
            "exact fairness is not defined for overlapping groups".into(),
        ));
    }
    if config.pipeline == PipelineKind::Exact && !is_exact {
        return Err(CliError::Input("the exact pipeline only accepts --policy exact".into()));
    }
    let original_sizes = original_group_sizes(&data);
    let mut policy = parse_policy(&config.policy, &original_sizes)?;
    if let Some(map) = &data.virtual_map {
        policy = FairnessPolicy::virtualized(policy, map.clone());
    }

    let pipeline_config = PipelineConfig {
        trials: config.trials,
        seed: config.seed,
        forbid_empty: config.forbid_empty,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let start = Instant::now();
    let output = pool.install(|| match config.pipeline {
        PipelineKind::General => general_pipeline(instance, config.k, &policy, &pipeline_config),
        PipelineKind::Exact => exact_pipeline(instance, config.k, &pipeline_config),
    })?;
    let elapsed = start.elapsed();

    if let Some(path) = &config.dump_dp {
        let file = File::create(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        output.dp.dump(BufWriter::new(file))?;
    }

    let mut report = Report::build(config.pipeline.name(), config.k, config.policy.trim(), config.seed, &data, &output);
    if config.timing {
        report.timing_ms = Some(elapsed.as_secs_f64() * 1e3);
    }
    Ok(report)
}

fn original_group_sizes(data: &crate::Ingested) -> Vec<usize> {
    match &data.virtual_map {
        None => data.instance.group_sizes().to_vec(),
        Some(map) => {
            let virtual_counts: Vec<i64> = data.instance.group_sizes().iter().map(|&s| s as i64).collect();
            map.original_counts(&virtual_counts).into_iter().map(|c| c as usize).collect()
        }
    }
}
