//! Certificate files and their independent replay.
//!
//! A certificate is a JSON document. When its verification logs would make
//! it larger than a threshold (10 MB by default) the logs are moved into a
//! sidecar file; each midpoint then refers to its logs by SHA-256 digest and
//! the document records the digest of the sidecar itself.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rug::float::Round;
use rug::Float;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::branch::family;
use crate::certify::{recheck_log, recheck_positive, Check, Direction, VerificationTask};
use crate::chebyshev::{ChebyshevGrid, TestFunction};
use crate::decimal::parse_exact;
use crate::driver::{float_from_string, DimensionCertificate, Status};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const SIDECAR_THRESHOLD: usize = 10 * 1024 * 1024;

fn bad(msg: impl Into<String>) -> Error {
    Error::Certificate(msg.into())
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".logs.json");
    path.with_file_name(name)
}

/// The certificate as a JSON value with every log inline.
pub fn to_json(cert: &DimensionCertificate) -> Result<Value> {
    let mut v = serde_json::to_value(cert).map_err(|e| bad(e.to_string()))?;
    let obj = v.as_object_mut().expect("object");
    obj.insert("schema_version".into(), json!(SCHEMA_VERSION));
    obj.insert(
        "environment".into(),
        json!({
            "precision_bits": cert.config.precision,
            "build_id": concat!(env!("CARGO_PKG_NAME"), "-", env!("CARGO_PKG_VERSION")),
        }),
    );
    Ok(v)
}

/// Write `cert` to `path`, spilling logs to a sidecar above `threshold` bytes.
pub fn write_certificate(cert: &DimensionCertificate, path: &Path, threshold: usize) -> Result<()> {
    let mut doc = to_json(cert)?;
    let inline = serde_json::to_vec_pretty(&doc).map_err(|e| bad(e.to_string()))?;
    let side = sidecar_path(path);
    if inline.len() <= threshold {
        std::fs::write(path, inline).map_err(|e| bad(e.to_string()))?;
        // a stale sidecar from an earlier run would be misleading
        let _ = std::fs::remove_file(side);
        return Ok(());
    }
    let mut store = BTreeMap::new();
    for mp in doc["midpoints"].as_array_mut().expect("midpoints") {
        let mp = mp.as_object_mut().expect("midpoint");
        for key in ["positivity", "log"] {
            let log = mp.remove(key).expect("log field");
            let bytes = serde_json::to_vec(&log).map_err(|e| bad(e.to_string()))?;
            let digest = sha256_hex(&bytes);
            mp.insert(format!("{key}_digest"), json!(digest));
            store.insert(digest, log);
        }
    }
    let side_bytes = serde_json::to_vec(&store).map_err(|e| bad(e.to_string()))?;
    let side_name = side.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
    doc.as_object_mut().expect("object").insert(
        "sidecar".into(),
        json!({ "file": side_name, "sha256": sha256_hex(&side_bytes) }),
    );
    std::fs::write(&side, side_bytes).map_err(|e| bad(e.to_string()))?;
    std::fs::write(path, serde_json::to_vec_pretty(&doc).map_err(|e| bad(e.to_string()))?)
        .map_err(|e| bad(e.to_string()))
}

/// Read a certificate, resolving and checking its sidecar if it has one.
pub fn read_certificate(path: &Path) -> Result<DimensionCertificate> {
    let text = std::fs::read(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    let mut doc: Value = serde_json::from_slice(&text).map_err(|e| bad(e.to_string()))?;
    let obj = doc.as_object_mut().ok_or_else(|| bad("not a JSON object"))?;
    match obj.get("schema_version").and_then(Value::as_u64) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        _ => return Err(bad("unsupported schema version")),
    }
    if let Some(sc) = obj.remove("sidecar") {
        let file = sc["file"].as_str().ok_or_else(|| bad("sidecar without file"))?;
        let want = sc["sha256"].as_str().ok_or_else(|| bad("sidecar without digest"))?;
        let side = path.with_file_name(file);
        let bytes = std::fs::read(&side).map_err(|e| bad(format!("{}: {e}", side.display())))?;
        if sha256_hex(&bytes) != want {
            return Err(bad("sidecar digest mismatch"));
        }
        let store: Map<String, Value> = serde_json::from_slice(&bytes).map_err(|e| bad(e.to_string()))?;
        for mp in obj.get_mut("midpoints").and_then(Value::as_array_mut).ok_or_else(|| bad("no midpoints"))? {
            let mp = mp.as_object_mut().ok_or_else(|| bad("bad midpoint"))?;
            for key in ["positivity", "log"] {
                let d = mp
                    .remove(&format!("{key}_digest"))
                    .and_then(|d| d.as_str().map(str::to_string))
                    .ok_or_else(|| bad("missing log digest"))?;
                let log = store.get(&d).ok_or_else(|| bad("log digest not in sidecar"))?;
                if sha256_hex(&serde_json::to_vec(log).map_err(|e| bad(e.to_string()))?) != d {
                    return Err(bad("log digest mismatch"));
                }
                mp.insert(key.into(), log.clone());
            }
        }
    }
    serde_json::from_value(doc).map_err(|e| bad(e.to_string()))
}

fn parse_bound(s: &str, round: Round) -> Result<Float> {
    let p = Float::parse(s).map_err(|_| bad(format!("bad bound `{s}`")))?;
    Ok(Float::with_val_round(512, p, round).0)
}

/// Replay every verification log from scratch and check that the stated
/// bounds follow from the certified midpoints.
pub fn verify_certificate(cert: &DimensionCertificate) -> Result<()> {
    let system = family(&cert.family)?;
    if system.name != cert.family {
        return Err(bad("family name is not canonical"));
    }
    let mut lower = Float::with_val(512, 0);
    let mut upper = Float::with_val(512, 1);
    for (i, mp) in cert.midpoints.iter().enumerate() {
        let t = parse_exact(&mp.t, 512).map_err(|_| bad(format!("midpoint {i}: inexact T")))?;
        if mp.f_values.len() != mp.m {
            return Err(bad(format!("midpoint {i}: {} node values for rank {}", mp.f_values.len(), mp.m)));
        }
        let grid = Arc::new(ChebyshevGrid::new(mp.m, system.domain, mp.precision));
        let values = mp
            .f_values
            .iter()
            .map(|s| float_from_string(s, mp.precision))
            .collect::<Result<Vec<_>>>()?;
        let f = TestFunction::from_values(grid, values, t.clone());
        if !recheck_positive(&mp.positivity, &f, &system)? {
            return Err(bad(format!("midpoint {i}: positivity not verified")));
        }
        if mp.log.check != Check::from(mp.direction) {
            return Err(bad(format!("midpoint {i}: log certifies another inequality")));
        }
        let task = VerificationTask {
            system: &system,
            t: t.clone(),
            f: &f,
            direction: mp.direction,
            depth_limit: mp.log.depth_limit,
            order: mp.log.order,
            margin: mp.log.margin,
        };
        if !recheck_log(&mp.log, &task)? {
            return Err(bad(format!("midpoint {i}: inequality not verified")));
        }
        match mp.direction {
            Direction::InfAboveOne => lower = lower.max(&t),
            Direction::SupBelowOne => upper = upper.min(&t),
        }
    }
    if parse_bound(&cert.t0, Round::Up)? > lower || parse_bound(&cert.t1, Round::Down)? < upper {
        return Err(bad("stated bounds are not implied by the certified midpoints"));
    }
    if lower >= upper {
        return Err(bad("certified midpoints contradict each other"));
    }
    if cert.status == Status::Certified && Float::with_val(512, &upper - &lower) >= cert.config.epsilon {
        return Err(bad("certified width exceeds epsilon"));
    }
    Ok(())
}
