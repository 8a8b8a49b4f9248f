//! CSV/JSON export. Every file is written once, atomically (temporary file in
//! the target directory, then rename), and numbers carry 17 significant digits.

use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex;
use serde::Serialize;

use crate::error::Result;
use crate::firstorder::Kernel;
use crate::freqdomain::FreqResponse;
use crate::grid::SampledFunction;
use crate::scalar::Real;
use crate::secondorder::SpaceTimeField;
use crate::spectra::{Branch, EigenSystem, PhysicalConstants};

/// Formats a number for CSV output.
pub fn fmt_num<T: Real>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_json<S: Serialize + ?Sized>(path: &Path, value: &S) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

/// Writes a numeric table with a header row.
pub fn write_table<T: Real>(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<T>>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.into_iter().map(fmt_num))?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    atomic_write(path, &bytes)
}

/// `x,re,im` rows.
pub fn write_sampled<T: Real>(path: &Path, f: &SampledFunction<T>) -> Result<()> {
    let rows = f
        .grid()
        .points()
        .iter()
        .zip(f.values())
        .map(|(&x, v)| vec![x, v.re, v.im]);
    write_table(path, &["x", "re", "im"], rows)
}

/// `omega,re,im` rows.
pub fn write_response<T: Real>(path: &Path, r: &FreqResponse<T>) -> Result<()> {
    let rows = r.omega.iter().zip(&r.values).map(|(&w, v)| vec![w, v.re, v.im]);
    write_table(path, &["omega", "re", "im"], rows)
}

/// `t,x,re,im` rows, time-major.
pub fn write_field<T: Real>(path: &Path, field: &SpaceTimeField<T>) -> Result<()> {
    let xs = field.grid.points();
    let rows = field.times.iter().zip(&field.values).flat_map(|(&t, vals)| {
        xs.iter()
            .zip(vals)
            .map(move |(&x, v): (&T, &Complex<T>)| vec![t, x, v.re, v.im])
    });
    write_table(path, &["t", "x", "re", "im"], rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct BasisManifest {
    pub model: String,
    pub grid_kind: String,
    pub grid_points: usize,
    pub modes: usize,
    pub labels: Vec<i64>,
    pub branches: Option<Vec<Branch>>,
    pub energies: Vec<f64>,
    pub constants: PhysicalConstants<f64>,
    pub completeness_residual: f64,
    pub orthonormality_residual: f64,
    pub files: Vec<String>,
}

/// Writes `mode_NNNN.csv` per mode plus `basis.json` into `dir`.
pub fn write_basis<T: Real>(dir: &Path, basis: &EigenSystem<T>) -> Result<BasisManifest> {
    let mut files = Vec::with_capacity(basis.len());
    for (n, mode) in basis.modes().iter().enumerate() {
        let name = format!("mode_{n:04}.csv");
        write_sampled(&dir.join(&name), mode)?;
        files.push(name);
    }
    let c = basis.constants();
    let manifest = BasisManifest {
        model: basis.model().name().to_string(),
        grid_kind: serde_json::to_value(basis.grid().kind())?
            .as_str()
            .unwrap_or_default()
            .to_string(),
        grid_points: basis.grid().len(),
        modes: basis.len(),
        labels: basis.labels().to_vec(),
        branches: basis.branches().map(|b| b.to_vec()),
        energies: basis.energies().iter().map(|e| e.as_f64()).collect(),
        constants: PhysicalConstants {
            hbar: c.hbar.as_f64(),
            c: c.c.as_f64(),
            mass: c.mass.as_f64(),
            omega: c.omega.as_f64(),
            epsilon0: c.epsilon0.as_f64(),
        },
        completeness_residual: basis.completeness_residual().as_f64(),
        orthonormality_residual: basis.orthonormality_residual().as_f64(),
        files,
    };
    write_json(&dir.join("basis.json"), &manifest)?;
    Ok(manifest)
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelManifest {
    pub kind: String,
    pub convention: String,
    pub model: String,
    pub grid_points: usize,
    pub times: Vec<f64>,
    pub file: String,
}

/// Writes `kernel.csv` (`tau,x,x_prime,re,im`) and `kernel.json` into `dir`.
pub fn write_kernel<T: Real>(dir: &Path, kernel: &Kernel<T>) -> Result<PathBuf> {
    let xs = kernel.basis().grid().points();
    let n = xs.len();
    let rows = kernel
        .times()
        .iter()
        .zip(kernel.blocks())
        .flat_map(|(&tau, block)| {
            (0..n * n).map(move |idx| {
                let (i, j) = (idx / n, idx % n);
                let v = block.get(i, j);
                vec![tau, xs[i], xs[j], v.re, v.im]
            })
        });
    let csv_path = dir.join("kernel.csv");
    write_table(&csv_path, &["tau", "x", "x_prime", "re", "im"], rows)?;
    let manifest = KernelManifest {
        kind: kernel.kind().name().to_string(),
        convention: kernel.convention().name().to_string(),
        model: kernel.basis().model().name().to_string(),
        grid_points: n,
        times: kernel.times().iter().map(|t| t.as_f64()).collect(),
        file: "kernel.csv".to_string(),
    };
    write_json(&dir.join("kernel.json"), &manifest)?;
    Ok(csv_path)
}
