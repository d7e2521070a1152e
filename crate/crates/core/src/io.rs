//! JSON model files, ground-truth sidecars and input digests.
//!
//! Complex matrices are stored row-major as `[re, im]` pairs.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::forge::DressedModel;
use crate::matrix::ComplexMatrix;
use crate::pencil::{Provenance, SturmianPencil};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("IoError: {path}: {source}")]
    Fs {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("MalformedFile: {path}: {message}")]
    Malformed { path: PathBuf, message: String },
}

fn fs_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Fs {
        path: path.to_path_buf(),
        source,
    }
}

fn malformed(path: &Path, message: impl ToString) -> IoError {
    IoError::Malformed {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

pub fn to_pairs(m: &ComplexMatrix) -> Vec<[f64; 2]> {
    m.as_slice().iter().map(|z| [z.re, z.im]).collect()
}

pub fn from_pairs(n: usize, pairs: &[[f64; 2]]) -> crate::Result<ComplexMatrix> {
    if pairs.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: format!("{} entries for n = {n}", n * n),
            found: format!("{}", pairs.len()),
        });
    }
    ComplexMatrix::from_row_major(
        n,
        n,
        pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ModelFile {
    pub schema_version: u32,
    pub n: usize,
    #[serde(rename = "H")]
    pub h: Vec<[f64; 2]>,
    #[serde(rename = "W")]
    pub w: Vec<[f64; 2]>,
    pub provenance: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub label: String,
}

impl ModelFile {
    pub fn from_pencil(p: &SturmianPencil, seed: Option<u64>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            n: p.n(),
            h: to_pairs(&p.h),
            w: to_pairs(&p.w),
            provenance: p.provenance.as_str().to_string(),
            seed,
            label: p.label.clone(),
        }
    }

    pub fn to_pencil(&self) -> crate::Result<SturmianPencil> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidShape(format!(
                "schemaVersion {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.n == 0 {
            return Err(Error::InvalidShape("n = 0".into()));
        }
        let provenance = Provenance::parse(&self.provenance).ok_or_else(|| {
            Error::InvalidShape(format!("unknown provenance '{}'", self.provenance))
        })?;
        SturmianPencil::new(
            from_pairs(self.n, &self.h)?,
            from_pairs(self.n, &self.w)?,
            provenance,
            self.label.clone(),
        )
    }
}

/// Ground truth written next to a dressed model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TruthFile {
    pub schema_version: u32,
    pub n: usize,
    pub seed: u64,
    pub theta_true: Vec<[f64; 2]>,
    pub omega_true: Vec<[f64; 2]>,
    pub spectrum_true: Vec<f64>,
}

impl TruthFile {
    pub fn from_model(m: &DressedModel) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            n: m.pencil.n(),
            seed: m.seed,
            theta_true: to_pairs(&m.theta_true),
            omega_true: to_pairs(&m.omega_true),
            spectrum_true: m.spectrum_true.clone(),
        }
    }

    pub fn theta(&self) -> crate::Result<ComplexMatrix> {
        from_pairs(self.n, &self.theta_true)
    }
}

/// `dir/stem.json -> dir/stem.truth.json`.
pub fn sidecar_path(model: &Path) -> PathBuf {
    let stem = model
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    model.with_file_name(format!("{stem}.truth.json"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    fs::write(path, to_json(value)).map_err(fs_err(path))
}

/// Reads a JSON file, returning the raw bytes alongside for digesting.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<(T, Vec<u8>), IoError> {
    let bytes = fs::read(path).map_err(fs_err(path))?;
    let value = serde_json::from_slice(&bytes).map_err(|e| malformed(path, e))?;
    Ok((value, bytes))
}

/// Writes a model file and, for dressed models, its truth sidecar.
pub fn write_model(
    path: &Path,
    pencil: &SturmianPencil,
    seed: Option<u64>,
    dressed: Option<&DressedModel>,
) -> Result<(), IoError> {
    write_json(path, &ModelFile::from_pencil(pencil, seed))?;
    if let Some(m) = dressed {
        write_json(&sidecar_path(path), &TruthFile::from_model(m))?;
    }
    Ok(())
}

pub struct LoadedModel {
    pub file: ModelFile,
    pub pencil: SturmianPencil,
    pub digest: String,
    pub truth: Option<TruthFile>,
}

/// Reads and validates a model file, picking up a sidecar when present.
pub fn load_model(path: &Path) -> Result<LoadedModel, IoError> {
    let (file, bytes): (ModelFile, _) = read_json(path)?;
    let pencil = file.to_pencil().map_err(|e| malformed(path, e))?;
    let side = sidecar_path(path);
    let truth = if side.exists() {
        let (t, _): (TruthFile, _) = read_json(&side)?;
        if t.n != file.n {
            return Err(malformed(
                &side,
                format!("n = {} does not match model n = {}", t.n, file.n),
            ));
        }
        t.theta().map_err(|e| malformed(&side, e))?;
        Some(t)
    } else {
        None
    };
    Ok(LoadedModel {
        file,
        pencil,
        digest: sha256_hex(&bytes),
        truth,
    })
}
