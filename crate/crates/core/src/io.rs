//! Dataset files.
//!
//! JSONL: one bag per line, `{"bag_id": str, "label": -1|1, "instances": [[f64; d]; r]}`.
//! CSV: header `bag_id,label,f0,...,f{d-1}`, one instance per row; a bag is a
//! run of consecutive rows sharing `bag_id`.
//!
//! The loaded dataset takes its dimension from the first bag and its max bag
//! size from the largest bag in the file.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Bag, Instance, Label, MilDataset};
use crate::error::{MilError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatasetFormat {
    Jsonl,
    Csv,
}

impl DatasetFormat {
    /// Guesses the format from a file extension (`.csv` is CSV, anything else JSONL).
    pub fn from_path(path: &Path) -> DatasetFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => DatasetFormat::Csv,
            _ => DatasetFormat::Jsonl,
        }
    }
}

impl FromStr for DatasetFormat {
    type Err = MilError;

    fn from_str(s: &str) -> Result<DatasetFormat> {
        match s {
            "jsonl" => Ok(DatasetFormat::Jsonl),
            "csv" => Ok(DatasetFormat::Csv),
            _ => Err(MilError::invalid(format!(
                "unknown dataset format {s:?} (expected jsonl or csv)"
            ))),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonlRecord {
    bag_id: String,
    label: i64,
    instances: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct JsonlRecordRef<'a> {
    bag_id: &'a str,
    label: i64,
    instances: &'a [Instance],
}

pub fn load_dataset(path: impl AsRef<Path>, format: DatasetFormat) -> Result<MilDataset> {
    let file = File::open(path.as_ref())?;
    match format {
        DatasetFormat::Jsonl => read_jsonl(BufReader::new(file)),
        DatasetFormat::Csv => read_csv(BufReader::new(file)),
    }
}

pub fn save_dataset(
    dataset: &MilDataset,
    path: impl AsRef<Path>,
    format: DatasetFormat,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    match format {
        DatasetFormat::Jsonl => write_jsonl(dataset, &mut out)?,
        DatasetFormat::Csv => write_csv(dataset, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

/// Checks that every instance of every bag has `dimension` features.
fn check_dimension(bag_id: &str, rows: &[Vec<f64>], dimension: usize) -> Result<()> {
    match rows.iter().find(|r| r.len() != dimension) {
        Some(r) => Err(MilError::DimensionMismatch {
            bag_id: bag_id.to_string(),
            expected: dimension,
            found: r.len(),
        }),
        None => Ok(()),
    }
}

pub fn read_jsonl<R: BufRead>(reader: R) -> Result<MilDataset> {
    let mut bags = Vec::new();
    let mut dimension = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonlRecord = serde_json::from_str(&line).map_err(|e| MilError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let label = Label::try_from(rec.label)?;
        if rec.instances.is_empty() {
            return Err(MilError::Parse {
                line: line_no,
                message: format!("bag {} has no instances", rec.bag_id),
            });
        }
        let d = *dimension.get_or_insert(rec.instances[0].len());
        check_dimension(&rec.bag_id, &rec.instances, d)?;
        bags.push(Bag::from_rows(rec.bag_id, rec.instances, label)?);
    }
    if bags.is_empty() {
        return Err(MilError::NoBags);
    }
    MilDataset::from_bags(bags)
}

pub fn write_jsonl<W: Write>(dataset: &MilDataset, out: &mut W) -> Result<()> {
    for bag in dataset.bags() {
        let rec = JsonlRecordRef {
            bag_id: &bag.id,
            label: bag.label.into(),
            instances: &bag.instances,
        };
        serde_json::to_writer(&mut *out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_csv<R: Read>(reader: R) -> Result<MilDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() < 3 || &header[0] != "bag_id" || &header[1] != "label" {
        return Err(MilError::Parse {
            line: 1,
            message: "header must be bag_id,label,f0,...".into(),
        });
    }
    for (k, name) in header.iter().skip(2).enumerate() {
        if name != format!("f{k}") {
            return Err(MilError::Parse {
                line: 1,
                message: format!("expected column f{k}, found {name:?}"),
            });
        }
    }
    let dimension = header.len() - 2;

    let mut bags: Vec<Bag> = Vec::new();
    let mut current: Option<(String, Label, Vec<Vec<f64>>)> = None;
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let parse_err = |message: String| MilError::Parse { line, message };
        if record.len() != dimension + 2 {
            return Err(MilError::DimensionMismatch {
                bag_id: record.get(0).unwrap_or("").to_string(),
                expected: dimension,
                found: record.len().saturating_sub(2),
            });
        }
        let bag_id = record[0].to_string();
        let raw_label: i64 = record[1]
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("bad label {:?}", &record[1])))?;
        let label = Label::try_from(raw_label)?;
        let row = record
            .iter()
            .skip(2)
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| parse_err(format!("bad number {s:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(parse_err("non-finite feature".into()));
        }
        match &mut current {
            Some((id, l, rows)) if *id == bag_id => {
                if *l != label {
                    return Err(parse_err(format!("bag {bag_id} has inconsistent labels")));
                }
                rows.push(row);
            }
            _ => {
                if let Some((id, l, rows)) = current.take() {
                    bags.push(Bag::from_rows(id, rows, l)?);
                }
                current = Some((bag_id, label, vec![row]));
            }
        }
    }
    if let Some((id, l, rows)) = current.take() {
        bags.push(Bag::from_rows(id, rows, l)?);
    }
    if bags.is_empty() {
        return Err(MilError::NoBags);
    }
    MilDataset::from_bags(bags)
}

pub fn write_csv<W: Write>(dataset: &MilDataset, out: &mut W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec!["bag_id".to_string(), "label".to_string()];
    header.extend((0..dataset.dimension()).map(|k| format!("f{k}")));
    wtr.write_record(&header)?;
    for bag in dataset.bags() {
        for x in &bag.instances {
            let mut row = vec![bag.id.clone(), bag.label.to_string()];
            row.extend(x.features().iter().map(|v| format!("{v:?}")));
            wtr.write_record(&row)?;
        }
    }
    wtr.flush()?;
    Ok(())
}
