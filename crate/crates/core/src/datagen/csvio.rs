//! Row-aligned CSV files: one per view plus `truth.csv`.
//!
//! Every file has a header row. The bookkeeping columns `sample`, `split` and
//! `config_hash` are recognized on input; all other columns must be numeric.

use std::fs;
use std::path::Path;

use crate::datagen::{random_split, PairedDataset, Split, Truth};
use crate::error::{Error, Result};
use crate::Mat;

const META: [&str; 3] = ["sample", "split", "config_hash"];

fn csv_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{}: {e}", path.display()))
}

/// Numeric table read from a CSV file.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub values: Mat,
    /// Contents of a `split` column, when present.
    pub split: Option<Vec<Split>>,
}

pub fn read_csv_table(path: impl AsRef<Path>) -> Result<CsvTable> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let all: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let numeric: Vec<usize> = (0..all.len()).filter(|&i| !META.contains(&all[i].as_str())).collect();
    let split_col = all.iter().position(|h| h == "split");
    let mut data = Vec::new();
    let mut split = Vec::new();
    let mut rows = 0;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        for &i in &numeric {
            let field = rec.get(i).unwrap_or("");
            let v: f64 = field.trim().parse().map_err(|_| {
                csv_err(
                    path,
                    format!("row {}: column {:?} is not a number: {field:?}", line + 2, all[i]),
                )
            })?;
            data.push(v);
        }
        if let Some(c) = split_col {
            let s = rec.get(c).unwrap_or("");
            split.push(Split::parse(s).ok_or_else(|| csv_err(path, format!("row {}: unknown split {s:?}", line + 2)))?);
        }
        rows += 1;
    }
    Ok(CsvTable {
        header: numeric.iter().map(|&i| all[i].clone()).collect(),
        values: Mat::from_vec(rows, numeric.len(), data)?,
        split: split_col.map(|_| split),
    })
}

/// Loads two row-aligned view files. The split comes from a `split` column
/// of view A when present, otherwise a seeded random `train_frac` split.
pub fn load_csv_pair(
    view_a: impl AsRef<Path>,
    view_b: impl AsRef<Path>,
    train_frac: f64,
    seed: u64,
) -> Result<PairedDataset> {
    let a = read_csv_table(view_a)?;
    let b = read_csv_table(view_b)?;
    let n = a.values.rows();
    let split = match a.split {
        Some(s) => s,
        None => random_split(n, train_frac, 0.0, seed)?,
    };
    PairedDataset::new(a.values, b.values, None, split)
}

/// Writes a CSV with a header. `rows` yields the already formatted fields.
pub fn write_csv<I, R>(path: impl AsRef<Path>, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let path = path.as_ref();
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest decimal form that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn matrix_rows<'a>(
    data: &'a PairedDataset,
    cols: Vec<Vec<f64>>,
    hash: Option<&'a str>,
) -> impl Iterator<Item = Vec<String>> + 'a {
    (0..data.len()).map(move |i| {
        let mut row = vec![i.to_string(), data.split[i].name().to_string()];
        row.extend(cols.iter().map(|c| fmt_f64(c[i])));
        if let Some(h) = hash {
            row.push(h.to_string());
        }
        row
    })
}

fn header(names: impl IntoIterator<Item = String>, hash: bool) -> Vec<String> {
    let mut h = vec!["sample".to_string(), "split".to_string()];
    h.extend(names);
    if hash {
        h.push("config_hash".into());
    }
    h
}

/// Writes `viewA.csv`, `viewB.csv` and (when truth exists) `truth.csv`.
pub fn export_dataset(data: &PairedDataset, dir: impl AsRef<Path>, config_hash: Option<&str>) -> Result<()> {
    let dir = dir.as_ref();
    for (name, prefix, m) in [("viewA.csv", "a", &data.view_a), ("viewB.csv", "b", &data.view_b)] {
        let cols: Vec<Vec<f64>> = (0..m.cols()).map(|c| m.col_vec(c)).collect();
        let names = (0..m.cols()).map(|c| format!("{prefix}{c}"));
        write_csv(
            dir.join(name),
            &header(names, config_hash.is_some()),
            matrix_rows(data, cols, config_hash),
        )?;
    }
    if let Some(t) = &data.truth {
        let (names, cols): (Vec<String>, Vec<Vec<f64>>) = t.columns().into_iter().unzip();
        write_csv(
            dir.join("truth.csv"),
            &header(names, config_hash.is_some()),
            matrix_rows(data, cols, config_hash),
        )?;
    }
    Ok(())
}

/// Inverse of [`export_dataset`], including the truth columns it writes.
pub fn import_dataset(dir: impl AsRef<Path>) -> Result<PairedDataset> {
    let dir = dir.as_ref();
    let a = read_csv_table(dir.join("viewA.csv"))?;
    let b = read_csv_table(dir.join("viewB.csv"))?;
    let split = a
        .split
        .ok_or_else(|| Error::Parse("viewA.csv has no split column".into()))?;
    let truth_path = dir.join("truth.csv");
    let truth = if truth_path.exists() {
        let t = read_csv_table(&truth_path)?;
        Some(truth_from_table(&t)?)
    } else {
        None
    };
    PairedDataset::new(a.values, b.values, truth, split)
}

fn truth_from_table(t: &CsvTable) -> Result<Truth> {
    let group = |prefix: &str| -> Option<Mat> {
        let idx: Vec<usize> = (0..)
            .map_while(|k| t.header.iter().position(|h| *h == format!("{prefix}{k}")))
            .collect();
        if idx.is_empty() {
            return None;
        }
        Some(Mat::from_fn(t.values.rows(), idx.len(), |r, c| t.values[(r, idx[c])]))
    };
    let col = |name: &str| t.header.iter().position(|h| h == name).map(|c| t.values.col_vec(c));
    let label = match col("label") {
        Some(v) => Some(
            v.into_iter()
                .map(|x| {
                    if (0.0..=255.0).contains(&x) && x.fract() == 0.0 {
                        Ok(x as u8)
                    } else {
                        Err(Error::Parse(format!("label {x} is not a byte")))
                    }
                })
                .collect::<Result<Vec<u8>>>()?,
        ),
        None => None,
    };
    Ok(Truth {
        shared: group("s"),
        private_a: group("zA"),
        private_b: group("zB"),
        theta_deg: col("theta_deg"),
        label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn export_import_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let a = Mat::from_fn(4, 3, |r, c| r as f64 * 0.1 + c as f64 / 3.0);
        let b = Mat::from_fn(4, 2, |r, c| -(r as f64) + c as f64 * 1e-17);
        let truth = Truth {
            shared: Some(Mat::from_fn(4, 2, |r, c| (r + c) as f64)),
            theta_deg: Some(vec![0.0, 90.5, 180.0, 359.9]),
            label: Some(vec![1, 2, 3, 4]),
            ..Truth::default()
        };
        let split = vec![Split::Train, Split::Test, Split::Val, Split::Train];
        let d = PairedDataset::new(a, b, Some(truth), split).unwrap();
        export_dataset(&d, dir.path(), Some("abc")).unwrap();
        let back = import_dataset(dir.path()).unwrap();
        assert_eq!(back, d);
        let text = fs::read_to_string(dir.path().join("viewA.csv")).unwrap();
        assert!(text.starts_with("sample,split,a0,a1,a2,config_hash\n"));
    }

    #[test]
    fn non_numeric_cell_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        fs::write(&p, "u,v\n1,2\n3,oops\n").unwrap();
        let err = read_csv_table(&p).unwrap_err().to_string();
        assert!(err.contains("row 3") && err.contains("oops"), "{err}");
    }
}
