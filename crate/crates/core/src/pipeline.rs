//! Stage functions shared by the CLI subcommands, and the full run:
//! describe, synthesize, fit, MPE, report.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::config::{resolve_model, RunConfig};
use crate::data::{load_dataset, summarize, Dataset};
use crate::error::{Error, Result};
use crate::mixed::estimate_mixed;
use crate::mnl;
use crate::model::EstimationResult;
use crate::mpe::{mpe_table, ChoiceModel, MpeTable};
use crate::report::{render_report, result_to_csv};
use crate::spec::ModelSpec;
use crate::synthesis::{build_design_matrix, write_attribute_table, Attribute, DesignMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Load,
    Describe,
    Synthesize,
    Fit,
    Mpe,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Load => "load",
            Stage::Describe => "describe",
            Stage::Synthesize => "synthesize",
            Stage::Fit => "fit",
            Stage::Mpe => "mpe",
            Stage::Report => "report",
        })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("stage `{stage}` failed: {source}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

/// Process exit status for an error: 2 for unusable input (missing files,
/// bad arguments or configuration), 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } | Error::Argument(_) | Error::Config(_) | Error::Schema(_) => 2,
        _ => 1,
    }
}

/// Attributes perturbed in MPE tables: cost or profit first, then time.
pub fn mpe_attributes(spec: &ModelSpec) -> Vec<Attribute> {
    [
        Attribute::DetourCost,
        Attribute::Profit,
        Attribute::DetourTime,
    ]
    .into_iter()
    .filter(|a| !spec.modes_with(*a).is_empty())
    .collect()
}

/// One fitted model: the logit fit and, when requested, its mixture.
#[derive(Debug, Clone)]
pub struct Fitted {
    pub spec: ModelSpec,
    pub mixed_spec: Option<ModelSpec>,
    pub design: DesignMatrix,
    pub mnl: EstimationResult,
    pub mixed: Option<EstimationResult>,
}

impl Fitted {
    pub fn results(&self) -> Vec<&EstimationResult> {
        std::iter::once(&self.mnl)
            .chain(self.mixed.as_ref())
            .collect()
    }
}

/// Fits `model` (preset or spec file). A spec that already carries mixing
/// terms is fitted both without and with them; otherwise `mixture` adds
/// normally distributed time coefficients.
pub fn fit_model(d: &Dataset, cfg: &RunConfig, model: &str, mixture: bool) -> Result<Fitted> {
    let given = resolve_model(model)?;
    let (spec, mixed_spec) = if given.is_mixed() {
        (given.clone().without_mixing(), Some(given))
    } else if mixture {
        (given.clone(), Some(given.with_time_mixing()))
    } else {
        (given, None)
    };
    let design_spec = mixed_spec.as_ref().unwrap_or(&spec);
    let design = build_design_matrix(d, &cfg.network, &cfg.scaling, design_spec)?;
    log::info!("fitting {} on {} observations", spec.name, design.len());
    let mnl = mnl::estimate(&design, &spec, &cfg.optimizer)?;
    let mixed = match &mixed_spec {
        Some(m) => {
            log::info!("fitting {} with {} draws", m.name, cfg.simulation.draws);
            Some(estimate_mixed(&design, m, &cfg.optimizer, &cfg.simulation)?)
        }
        None => None,
    };
    Ok(Fitted {
        spec,
        mixed_spec,
        design,
        mnl,
        mixed,
    })
}

/// MPE tables for every result of a fitted model.
pub fn fitted_mpe(f: &Fitted, cfg: &RunConfig) -> Result<Vec<MpeTable>> {
    let mut out = Vec::new();
    let mut pairs = vec![(&f.spec, &f.mnl)];
    if let (Some(s), Some(r)) = (&f.mixed_spec, &f.mixed) {
        pairs.push((s, r));
    }
    for (spec, result) in pairs {
        let model = ChoiceModel::from_result(result, spec, Some(&cfg.simulation), f.design.len())?;
        out.push(mpe_table(
            &f.design,
            &model,
            &mpe_attributes(spec),
            &cfg.mpe_levels,
            cfg.averaging,
        )?);
    }
    Ok(out)
}

fn write(dir: &Path, name: &str, content: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// File-name form of a model name.
pub fn file_stem(model: &str) -> String {
    model
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Runs every stage, writing artifacts into `cfg.output_dir` as they are
/// produced. Files from completed stages remain if a later stage fails.
pub fn run(cfg: &RunConfig, dataset: &Path) -> std::result::Result<Vec<PathBuf>, StageError> {
    let dir = &cfg.output_dir;
    let mut written = Vec::new();
    let d = load_dataset(dataset).at(Stage::Load)?;
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::io(dir, e))
        .at(Stage::Load)?;

    let summary = summarize(&d, cfg.by_gender);
    write(dir, "summary.txt", &summary.render_text(), &mut written).at(Stage::Describe)?;
    write(dir, "summary.csv", &summary.to_csv(), &mut written).at(Stage::Describe)?;

    let mut buf = Vec::new();
    write_attribute_table(&d, &cfg.network, &cfg.scaling, &mut buf).at(Stage::Synthesize)?;
    let table = String::from_utf8(buf).expect("csv output is UTF-8");
    write(dir, "attributes.csv", &table, &mut written).at(Stage::Synthesize)?;

    let mut fits = Vec::new();
    for model in &cfg.models {
        let f = fit_model(&d, cfg, model, cfg.mixture).at(Stage::Fit)?;
        for r in f.results() {
            let name = format!("estimates_{}.csv", file_stem(&r.model));
            write(dir, &name, &result_to_csv(r), &mut written).at(Stage::Fit)?;
        }
        fits.push(f);
    }

    let mut tables = Vec::new();
    for f in &fits {
        for t in fitted_mpe(f, cfg).at(Stage::Mpe)? {
            let name = format!("mpe_{}.csv", file_stem(&t.model));
            write(dir, &name, &t.to_csv(), &mut written).at(Stage::Mpe)?;
            tables.push(t);
        }
    }

    let groups: Vec<(String, Vec<&EstimationResult>)> = fits
        .iter()
        .map(|f| (format!("Model: {}", f.spec.name), f.results()))
        .collect();
    let mut text = summary.render_text();
    text.push('\n');
    text.push_str(&render_report(&groups, &tables).at(Stage::Report)?);
    write(dir, "report.txt", &text, &mut written).at(Stage::Report)?;
    Ok(written)
}
