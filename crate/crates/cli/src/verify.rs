use std::path::Path;

use anyhow::anyhow;
use genent_core::criteria::{verify_certificate, Certificate};
use genent_core::io::StateFile;
use genent_core::Tolerances;
use serde_json::{json, Value};

use crate::failure::{Failure, VERIFICATION_FAILED};
use crate::report::{self, InputDigest, RunConfig};

/// The certificate inside a bare certificate file or a report, and the
/// tolerances recorded alongside it (if any).
fn locate(doc: &Value) -> Option<(&Value, Option<&Value>)> {
    if doc.get("verdict").is_some() {
        return Some((doc, None));
    }
    let result = doc.get("result")?;
    let cert = result.get("certificate").or_else(|| result.get("bipartition_verdicts").and_then(|v| v.get("GE")))?;
    Some((cert, doc.get("tolerances")))
}

pub fn verify(config: &RunConfig, cert_path: &Path, state_path: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let cert_bytes = report::read_input(cert_path)?;
    let state_bytes = report::read_input(state_path)?;
    let doc: Value = serde_json::from_slice(&cert_bytes)
        .map_err(|e| Failure::input(anyhow!("invalid certificate file {}: {e}", cert_path.display())))?;
    let (cert_value, recorded) =
        locate(&doc).ok_or_else(|| Failure::input(anyhow!("{} holds no certificate", cert_path.display())))?;
    let cert: Certificate = serde_json::from_value(cert_value.clone()).map_err(Failure::input)?;

    // recorded tolerances apply unless overridden on the command line
    let mut tol: Tolerances = match recorded {
        Some(t) => serde_json::from_value(t.clone()).map_err(Failure::input)?,
        None => config.tolerances,
    };
    let defaults = Tolerances::default();
    let given = serde_json::to_value(config.tolerances).map_err(Failure::operational)?;
    let base = serde_json::to_value(defaults).map_err(Failure::operational)?;
    for key in Tolerances::KEYS {
        if given[key] != base[key] {
            tol.set(key, given[key].as_f64().unwrap_or_default()).map_err(Failure::input)?;
        }
    }

    let file: StateFile = serde_json::from_slice(&state_bytes)
        .map_err(|e| Failure::input(anyhow!("invalid state file {}: {e}", state_path.display())))?;
    let rho = file.into_state(&tol).map_err(Failure::loading)?;
    let check = verify_certificate(&cert, &rho, &tol);

    let digests = [InputDigest::new("certificate", &cert_bytes), InputDigest::new("state", &state_bytes)];
    let result = json!({ "verdict": cert.verdict, "passed": check.passed(), "checks": check.checks });
    let text = report::render(config, "verify", &digests, result)?;
    report::emit(out, &text)?;
    if check.passed() {
        Ok(())
    } else {
        let names: Vec<&str> = check.failures().map(|c| c.name.as_str()).collect();
        Err(Failure::new(VERIFICATION_FAILED, anyhow!("verification failed: {}", names.join(", "))))
    }
}
