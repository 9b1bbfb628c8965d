//! Binary artifact container.
//!
//! Layout: 8-byte magic, `u64` LE header length, JSON header, named `f64` LE
//! arrays (lengths listed in the header), then the SHA-256 of everything
//! before it.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::eigen::{Mode, SpectralSolution};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"GSTLAB01";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactHeader {
    pub kind: String,
    pub meta: serde_json::Value,
    pub arrays: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub header: ArtifactHeader,
    pub arrays: Vec<Vec<f64>>,
    pub hash: String,
}

impl Artifact {
    pub fn array(&self, name: &str) -> Option<&[f64]> {
        self.header
            .arrays
            .iter()
            .position(|(n, _)| n == name)
            .map(|i| self.arrays[i].as_slice())
    }
}

/// Serializes an artifact; returns its content hash (hex).
pub fn encode(kind: &str, meta: serde_json::Value, arrays: &[(&str, &[f64])]) -> Result<(Vec<u8>, String)> {
    let header = ArtifactHeader {
        kind: kind.to_string(),
        meta,
        arrays: arrays.iter().map(|(n, a)| (n.to_string(), a.len())).collect(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut buf = Vec::with_capacity(16 + json.len() + arrays.iter().map(|a| 8 * a.1.len()).sum::<usize>() + 32);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(json.len() as u64).to_le_bytes());
    buf.extend_from_slice(&json);
    for (_, a) in arrays {
        for v in a.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    Ok((buf, hex::encode(digest)))
}

pub fn decode(bytes: &[u8]) -> Result<Artifact> {
    let bad = |m: &str| Error::Artifact(m.to_string());
    if bytes.len() < 16 + 32 || &bytes[..8] != MAGIC {
        return Err(bad("missing magic or truncated file"));
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 32);
    let digest = Sha256::digest(body);
    if digest.as_slice() != trailer {
        return Err(bad("content hash mismatch"));
    }
    let hlen = u64::from_le_bytes(body[8..16].try_into().expect("8 bytes")) as usize;
    if 16 + hlen > body.len() {
        return Err(bad("header length out of range"));
    }
    let header: ArtifactHeader = serde_json::from_slice(&body[16..16 + hlen])?;
    let mut pos = 16 + hlen;
    let mut arrays = Vec::with_capacity(header.arrays.len());
    for (_, len) in &header.arrays {
        let end = pos + 8 * len;
        if end > body.len() {
            return Err(bad("array extends past end of file"));
        }
        arrays.push(
            body[pos..end]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect(),
        );
        pos = end;
    }
    if pos != body.len() {
        return Err(bad("trailing bytes before hash"));
    }
    Ok(Artifact {
        header,
        arrays,
        hash: hex::encode(digest),
    })
}

pub fn write(path: &Path, kind: &str, meta: serde_json::Value, arrays: &[(&str, &[f64])]) -> Result<String> {
    let (bytes, hash) = encode(kind, meta, arrays)?;
    fs::write(path, bytes)?;
    Ok(hash)
}

pub fn read(path: &Path) -> Result<Artifact> {
    decode(&fs::read(path)?)
}

#[derive(Serialize, Deserialize)]
struct SolutionMeta {
    grid: super::Grid,
    lambda0: f64,
    lambda1: f64,
    model_hash: String,
    kind: crate::potentials::PotentialKind,
    mode_lambdas: Vec<f64>,
    residual: f64,
    boundary_ratio: f64,
    sign_repairs: usize,
    method: super::EigenMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<serde_json::Value>,
}

/// Writes a solution; `max_modes` bounds how many eigenvectors are stored.
pub fn save_solution(sol: &SpectralSolution, path: &Path, max_modes: usize) -> Result<String> {
    save_solution_tagged(sol, path, max_modes, None)
}

/// As [`save_solution`], embedding caller-supplied provenance (config hash,
/// seed) in the header.
pub fn save_solution_tagged(
    sol: &SpectralSolution,
    path: &Path,
    max_modes: usize,
    provenance: Option<serde_json::Value>,
) -> Result<String> {
    let keep = sol.modes.len().min(max_modes.max(1));
    let meta = SolutionMeta {
        grid: sol.grid,
        lambda0: sol.lambda0,
        lambda1: sol.lambda1,
        model_hash: sol.model_hash.clone(),
        kind: sol.kind,
        mode_lambdas: sol.modes[..keep].iter().map(|m| m.lambda).collect(),
        residual: sol.residual,
        boundary_ratio: sol.boundary_ratio,
        sign_repairs: sol.sign_repairs,
        method: sol.method,
        provenance,
    };
    let names: Vec<String> = (0..keep).map(|k| format!("mode{k}")).collect();
    let mut arrays: Vec<(&str, &[f64])> = vec![("phi0", &sol.phi0)];
    for (k, m) in sol.modes[..keep].iter().enumerate() {
        arrays.push((&names[k], &m.vector));
    }
    write(path, "spectral_solution", serde_json::to_value(meta)?, &arrays)
}

pub fn load_solution(path: &Path) -> Result<SpectralSolution> {
    let art = read(path)?;
    if art.header.kind != "spectral_solution" {
        return Err(Error::Artifact(format!("expected spectral_solution, found {}", art.header.kind)));
    }
    let meta: SolutionMeta = serde_json::from_value(art.header.meta.clone())?;
    let phi0 = art.array("phi0").ok_or_else(|| Error::Artifact("missing phi0".into()))?.to_vec();
    let mut modes = Vec::new();
    for (k, lambda) in meta.mode_lambdas.iter().enumerate() {
        let v = art
            .array(&format!("mode{k}"))
            .ok_or_else(|| Error::Artifact(format!("missing mode{k}")))?;
        modes.push(Mode {
            lambda: *lambda,
            vector: v.to_vec(),
        });
    }
    Ok(SpectralSolution {
        grid: meta.grid,
        phi0,
        lambda0: meta.lambda0,
        lambda1: meta.lambda1,
        model_hash: meta.model_hash,
        kind: meta.kind,
        modes,
        residual: meta.residual,
        boundary_ratio: meta.boundary_ratio,
        sign_repairs: meta.sign_repairs,
        method: meta.method,
    })
}
