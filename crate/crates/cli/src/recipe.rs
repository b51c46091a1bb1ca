//! Recipe files for `genent construct`.
//!
//! ```json
//! {"kind": "theorem8", "inputs": ["alpha1.json", {"mc": [[[0.5,0],[0.5,0]],[[0.5,0],[0.5,0]]]}]}
//! ```
//!
//! An input is a state file path, `{"state": path, "eb_basis": path}` or
//! `{"mc": matrix}` for a maximally correlated state with that coefficient
//! matrix. Relative paths are resolved against the recipe's directory.

use std::path::{Path, PathBuf};

use anyhow::anyhow;
use genent_core::constructions::{
    conjecture_i_state, mc_state, ring_state, satellite_state, theorem8_chain, ChainOptions,
};
use genent_core::criteria::GeOptions;
use genent_core::eb::EbBasis;
use genent_core::hilbert::numerical_rank;
use genent_core::io::{self, StateFile};
use genent_core::linalg::CMatrix;
use genent_core::StateMatrix;
use serde::Deserialize;
use serde_json::json;

use crate::failure::Failure;
use crate::report::{self, InputDigest, RunConfig};

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Kind {
    Theorem8,
    ConjI,
    Ring,
    Satellite,
}

impl Kind {
    fn name(&self) -> &'static str {
        match self {
            Kind::Theorem8 => "theorem8",
            Kind::ConjI => "conj_i",
            Kind::Ring => "ring",
            Kind::Satellite => "satellite",
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Options {
    certify: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum InputRef {
    Path(PathBuf),
    Mc {
        #[serde(with = "genent_core::io::matrix")]
        mc: CMatrix,
    },
    State {
        state: PathBuf,
        #[serde(default)]
        eb_basis: Option<PathBuf>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Recipe {
    kind: Kind,
    inputs: Vec<InputRef>,
    #[serde(default)]
    options: Options,
}

struct Loaded {
    state: StateMatrix,
    basis: EbBasis,
}

fn load_input(
    config: &RunConfig,
    base: &Path,
    k: usize,
    input: &InputRef,
    digests: &mut Vec<InputDigest>,
) -> Result<Loaded, Failure> {
    let context = format!("input {}", k + 1);
    let read_state = |path: &Path, digests: &mut Vec<InputDigest>| -> Result<StateMatrix, Failure> {
        let bytes = report::read_input(&base.join(path))?;
        digests.push(InputDigest::new(format!("input{}", k + 1), &bytes));
        let file: StateFile = serde_json::from_slice(&bytes).map_err(Failure::input)?;
        file.into_state(&config.tolerances).map_err(Failure::loading)
    };
    let loaded = match input {
        InputRef::Mc { mc } => mc_state(mc)
            .map_err(Failure::loading)
            .map(|state| Loaded { basis: EbBasis::maximally_correlated(mc.nrows()), state }),
        InputRef::Path(path) => read_state(path, digests).map(|state| {
            let n = *state.dims().last().unwrap_or(&1);
            Loaded { state, basis: EbBasis::maximally_correlated(n) }
        }),
        InputRef::State { state, eb_basis } => {
            let state = read_state(state, digests)?;
            let basis = match eb_basis {
                Some(p) => {
                    let bytes = report::read_input(&base.join(p))?;
                    digests.push(InputDigest::new(format!("input{}_eb_basis", k + 1), &bytes));
                    let text = String::from_utf8(bytes).map_err(Failure::input)?;
                    EbBasis::from_json(&text).map_err(Failure::input)?
                }
                None => EbBasis::maximally_correlated(*state.dims().last().unwrap_or(&1)),
            };
            Ok(Loaded { state, basis })
        }
    };
    loaded.map_err(|f| f.with_context(context))
}

pub fn construct(
    config: &RunConfig,
    recipe_path: &Path,
    out: &Path,
    report_path: Option<&Path>,
) -> Result<(), Failure> {
    let bytes = report::read_input(recipe_path)?;
    let recipe: Recipe = serde_json::from_slice(&bytes)
        .map_err(|e| Failure::input(anyhow!("invalid recipe {}: {e}", recipe_path.display())))?;
    let base = recipe_path.parent().unwrap_or(Path::new("."));

    let mut digests = vec![InputDigest::new("recipe", &bytes)];
    let loaded = recipe
        .inputs
        .iter()
        .enumerate()
        .map(|(k, input)| load_input(config, base, k, input, &mut digests))
        .collect::<Result<Vec<_>, _>>()?;
    let states: Vec<StateMatrix> = loaded.iter().map(|l| l.state.clone()).collect();

    let cap = config.dim_cap;
    let (state, result) = match recipe.kind {
        Kind::Theorem8 => {
            let opts = ChainOptions {
                seed: config.seed,
                restarts: config.restarts,
                certify: recipe.options.certify.unwrap_or(true),
                dim_cap: cap,
                ge: GeOptions { max_iters: config.max_iters, seed: config.seed, dim_cap: cap, ..GeOptions::default() },
                tol: config.tolerances,
            };
            let inputs: Vec<_> = loaded.into_iter().map(|l| (l.state, l.basis)).collect();
            let chain = theorem8_chain(&inputs, &opts).map_err(Failure::loading)?;
            let result = report::to_value(&chain.to_file())?;
            (chain.state, result)
        }
        Kind::ConjI => {
            let [alpha, beta] = states.as_slice() else {
                return Err(Failure::input(anyhow!("conj_i needs exactly two inputs, got {}", states.len())));
            };
            let state = conjecture_i_state(alpha, beta, cap).map_err(Failure::loading)?;
            (state, serde_json::Value::Null)
        }
        Kind::Ring => (ring_state(&states, cap).map_err(Failure::loading)?, serde_json::Value::Null),
        Kind::Satellite => (satellite_state(&states, cap).map_err(Failure::loading)?, serde_json::Value::Null),
    };
    let result = if result.is_null() {
        let rank = numerical_rank(&state, config.tolerances.rank).map_err(Failure::operational)?;
        json!({
            "kind": recipe.kind.name(),
            "dims": state.dims(),
            "labels": state.labels(),
            "trace": state.trace(),
            "rank": rank,
        })
    } else {
        result
    };

    io::write_state(out, &state).map_err(|e| Failure::operational(anyhow!("writing {}: {e}", out.display())))?;
    let text = report::render(config, &format!("construct {}", recipe.kind.name()), &digests, result)?;
    report::emit(report_path, &text)
}
