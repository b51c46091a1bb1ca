use std::path::{Path, PathBuf};

use anyhow::anyhow;
use genent_core::criteria::{
    classify_werner, fit_werner, ge_certify, negativity, one_copy_distillable_search, ppt_certificate, GeOptions,
};
use genent_core::eb::{projection_cascade, EbBasis};
use genent_core::io::StateFile;
use genent_core::lemma5::{self, Lemma5Params};
use genent_core::StateMatrix;
use serde_json::{json, Value};

use crate::failure::Failure;
use crate::report::{self, InputDigest, RunConfig};

/// Largest Frobenius distance from the Werner family accepted by `--werner`.
const WERNER_FIT_TOL: f64 = 1e-8;

#[derive(Debug)]
pub enum Pipeline {
    Ppt(String),
    Werner,
    Distill(String),
    Ge,
    Lemma5(PathBuf),
    Cascade(PathBuf),
}

impl Pipeline {
    fn name(&self) -> &'static str {
        match self {
            Pipeline::Ppt(_) => "ppt",
            Pipeline::Werner => "werner",
            Pipeline::Distill(_) => "distill",
            Pipeline::Ge => "ge",
            Pipeline::Lemma5(_) => "lemma5",
            Pipeline::Cascade(_) => "cascade",
        }
    }
}

fn parse_cut(cut: &str) -> Result<Vec<String>, Failure> {
    let labels: Vec<String> = cut.split(',').map(|s| s.trim().to_string()).collect();
    if labels.iter().any(String::is_empty) {
        return Err(Failure::input(anyhow!("cut `{cut}` must be comma-separated labels")));
    }
    Ok(labels)
}

fn load_state(
    config: &RunConfig,
    path: &Path,
    role: &str,
    digests: &mut Vec<InputDigest>,
) -> Result<StateMatrix, Failure> {
    let bytes = report::read_input(path)?;
    digests.push(InputDigest::new(role, &bytes));
    let file: StateFile = serde_json::from_slice(&bytes)
        .map_err(|e| Failure::input(anyhow!("invalid state file {}: {e}", path.display())))?;
    if file.dims.iter().product::<usize>() > config.dim_cap {
        return Err(Failure::loading(genent_core::Error::DimensionCap {
            dim: file.dims.iter().product(),
            cap: config.dim_cap,
        }));
    }
    file.into_state(&config.tolerances).map_err(Failure::loading)
}

fn first_label(rho: &StateMatrix) -> Vec<String> {
    vec![rho.labels()[0].clone()]
}

fn run_pipeline(
    config: &RunConfig,
    rho: Option<&StateMatrix>,
    pipeline: &Pipeline,
    digests: &mut Vec<InputDigest>,
) -> Result<Value, Failure> {
    let tol = &config.tolerances;
    let need = || rho.ok_or_else(|| Failure::input(anyhow!("--{} needs a state file", pipeline.name())));
    let result = match pipeline {
        Pipeline::Ppt(cut) => {
            let rho = need()?;
            let cut = parse_cut(cut)?;
            let certificate = ppt_certificate(rho, &cut, tol).map_err(Failure::pipeline)?;
            let negativity = negativity(rho, &cut).map_err(Failure::pipeline)?;
            json!({ "cut": cut, "negativity": negativity, "certificate": certificate })
        }
        Pipeline::Werner => {
            let rho = need()?;
            let (params, residual) = fit_werner(rho).map_err(Failure::pipeline)?;
            if residual > WERNER_FIT_TOL {
                return Err(Failure::input(anyhow!(
                    "state is not a Werner state (distance {residual:.3e} from the closest member)"
                )));
            }
            let class = classify_werner(params).map_err(Failure::pipeline)?;
            let cut = first_label(rho);
            let ppt = ppt_certificate(rho, &cut, tol).map_err(Failure::pipeline)?;
            let distill =
                one_copy_distillable_search(rho, &cut, config.restarts, config.seed, tol).map_err(Failure::pipeline)?;
            json!({
                "d": params.d,
                "p": params.p,
                "fit_residual": residual,
                "class": class,
                "ppt_certificate": ppt,
                "certificate": distill,
            })
        }
        Pipeline::Distill(cut) => {
            let rho = need()?;
            let cut = parse_cut(cut)?;
            let certificate =
                one_copy_distillable_search(rho, &cut, config.restarts, config.seed, tol).map_err(Failure::pipeline)?;
            json!({ "cut": cut, "certificate": certificate })
        }
        Pipeline::Ge => {
            let rho = need()?;
            let opts = GeOptions {
                max_iters: config.max_iters,
                seed: config.seed,
                dim_cap: config.dim_cap,
                ..GeOptions::default()
            };
            let certificate = ge_certify(rho, &opts, tol).map_err(Failure::pipeline)?;
            json!({ "certificate": certificate })
        }
        Pipeline::Lemma5(path) => {
            let bytes = report::read_input(path)?;
            digests.push(InputDigest::new("params", &bytes));
            let params: Lemma5Params = serde_json::from_slice(&bytes)
                .map_err(|e| Failure::input(anyhow!("invalid parameter file {}: {e}", path.display())))?;
            params.validate().map_err(Failure::input)?;
            let report = lemma5::analyze(&params, rho, tol.eb).map_err(Failure::pipeline)?;
            let max_marginal = report.block_00.max(report.block_11).max(report.block_01);
            json!({
                "beta_source": if rho.is_some() { "given" } else { "derived" },
                "max_marginal_residual": max_marginal,
                "report": report,
            })
        }
        Pipeline::Cascade(path) => {
            let rho = need()?;
            let bytes = report::read_input(path)?;
            digests.push(InputDigest::new("eb_basis", &bytes));
            let text = String::from_utf8(bytes).map_err(Failure::input)?;
            let basis = EbBasis::from_json(&text)
                .map_err(|e| Failure::input(anyhow!("invalid EB basis {}: {e}", path.display())))?;
            let cascade = projection_cascade(rho, &basis, tol).map_err(Failure::pipeline)?;
            json!({
                "steps": cascade.descriptors(),
                "pair": [cascade.pair.0, cascade.pair.1],
                "final_rank": cascade.final_rank,
                "min_pt_eigenvalue": cascade.min_pt_eigenvalue,
                "final_state": StateFile::from_state(&cascade.final_state),
            })
        }
    };
    Ok(result)
}

pub fn analyze(
    config: &RunConfig,
    state: Option<&Path>,
    pipeline: &Pipeline,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let mut digests = Vec::new();
    let role = if matches!(pipeline, Pipeline::Lemma5(_)) { "beta" } else { "state" };
    let rho = state.map(|p| load_state(config, p, role, &mut digests)).transpose()?;
    let mut result = run_pipeline(config, rho.as_ref(), pipeline, &mut digests)?;
    if let Value::Object(map) = &mut result {
        map.insert("pipeline".into(), Value::String(pipeline.name().into()));
    }
    let text = report::render(config, &format!("analyze {}", pipeline.name()), &digests, result)?;
    report::emit(out, &text)
}
