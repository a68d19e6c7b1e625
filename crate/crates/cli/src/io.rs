//! Text input formats.
//!
//! * Genotypes: one sample per line, whitespace-separated dosages, `NA` for
//!   a missing call. A leading line starting with `#` carries covariate
//!   names; later `#` lines are comments.
//! * Phenotypes: one value per line.
//! * Matrices and vectors for `solve`: comma-separated, `#` comments.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use icf_bvsr::linalg::DenseMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct Genotypes {
    /// Raw dosages with missing calls replaced by the column mean.
    pub x: DenseMatrix,
    pub names: Option<Vec<String>>,
    pub missing: usize,
}

fn parse_number(token: &str, path: &Path, line: usize) -> Result<f64> {
    let v: f64 = token
        .parse()
        .map_err(|_| anyhow!("{}: line {line}: `{token}` is not a number", path.display()))?;
    if !v.is_finite() {
        bail!("{}: line {line}: `{token}` is not finite", path.display());
    }
    Ok(v)
}

pub fn read_genotypes(path: &Path) -> Result<Genotypes> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_genotypes(&text, path)
}

pub fn parse_genotypes(text: &str, path: &Path) -> Result<Genotypes> {
    let mut names = None;
    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            if rows.is_empty() && names.is_none() {
                names = Some(rest.split_whitespace().map(str::to_string).collect::<Vec<_>>());
            }
            continue;
        }
        let row = trimmed
            .split_whitespace()
            .map(|t| if t == "NA" { Ok(None) } else { parse_number(t, path, line).map(Some) })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                bail!(
                    "{}: line {line}: expected {} values, found {}",
                    path.display(),
                    first.len(),
                    row.len()
                );
            }
        }
        rows.push(row);
    }
    let Some(p) = rows.first().map(Vec::len) else {
        bail!("{}: no genotype rows", path.display());
    };
    if let Some(h) = &names {
        if !h.is_empty() && h.len() != p {
            bail!("{}: header names {} covariates but rows have {p}", path.display(), h.len());
        }
    }
    let names = names.filter(|h| !h.is_empty());

    let n = rows.len();
    let mut missing = 0;
    let mut means = vec![0.0; p];
    for (j, mean) in means.iter_mut().enumerate() {
        let observed: Vec<f64> = rows.iter().filter_map(|r| r[j]).collect();
        missing += n - observed.len();
        if !observed.is_empty() {
            *mean = observed.iter().sum::<f64>() / observed.len() as f64;
        }
    }
    let x = DenseMatrix::from_fn(n, p, |i, j| rows[i][j].unwrap_or(means[j]));
    Ok(Genotypes { x, names, missing })
}

pub fn read_phenotype(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut y = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if t.split_whitespace().count() != 1 {
            bail!("{}: line {}: expected a single value", path.display(), k + 1);
        }
        if t == "NA" {
            bail!("{}: line {}: missing phenotype values are not supported", path.display(), k + 1);
        }
        y.push(parse_number(t, path, k + 1)?);
    }
    if y.is_empty() {
        bail!("{}: no phenotype values", path.display());
    }
    Ok(y)
}

/// Rows of a comma-separated numeric file.
pub fn read_csv_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| match e.position() {
            Some(pos) => anyhow!("{}: line {}: {e}", path.display(), pos.line()),
            None => anyhow!("{}: {e}", path.display()),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .map(|t| parse_number(t, path, line))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    Ok(rows)
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let rows = read_csv_rows(path)?;
    DenseMatrix::from_rows(&rows).map_err(|e| anyhow!("{}: {e}", path.display()))
}

/// A vector stored either as one column or as one row.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let rows = read_csv_rows(path)?;
    if rows.iter().all(|r| r.len() == 1) {
        Ok(rows.into_iter().map(|r| r[0]).collect())
    } else if rows.len() == 1 {
        Ok(rows.into_iter().next().unwrap_or_default())
    } else {
        bail!("{}: expected a single row or a single column", path.display())
    }
}
