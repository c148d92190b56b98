//! Dataset files.
//!
//! JSON layout:
//!
//! ```json
//! {"frequencies": [0.05, 0.15], "sample_rate": 22.0,
//!  "groups": {"control": [[[1.0, 0.0], [0.5, -0.2]], ...]},
//!  "metadata": {"source": "lab A"}}
//! ```
//!
//! `sample_rate` and `metadata` are optional. Each group is a list of samples,
//! each sample a list of `[re, im]` pairs.
//!
//! CSV layout, one record per line:
//!
//! ```text
//! group,re_1,im_1,re_2,im_2
//! freq_hz,0.05,,0.15,
//! sample_rate_hz,22
//! meta:source,lab A
//! control,1.0,0.0,0.5,-0.2
//! ```
//!
//! The header names the real/imaginary column pair of each frequency. The
//! `freq_hz` row carries the frequencies in the real columns. `sample_rate_hz`
//! and `meta:<key>` rows are optional and must precede the samples. Every other
//! row is one sample of the named group.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{derive_grid, FrequencyGrid};
use crate::signal::{Frf, FrfSet};

const FREQ_ROW: &str = "freq_hz";
const RATE_ROW: &str = "sample_rate_hz";
const META_PREFIX: &str = "meta:";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// `.json` files are JSON; everything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub grid: FrequencyGrid,
    /// Sample rate as requested in the file, if any.
    pub requested_sample_rate: Option<f64>,
    pub groups: BTreeMap<String, FrfSet>,
    pub metadata: BTreeMap<String, String>,
}

impl Dataset {
    pub fn new(
        grid: FrequencyGrid,
        requested_sample_rate: Option<f64>,
        groups: BTreeMap<String, FrfSet>,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        for (name, set) in &groups {
            validate_group_name(name)?;
            if set.width() != grid.len() {
                return Err(Error::InvalidDataset(format!(
                    "group '{name}' has {} frequencies, grid has {}",
                    set.width(),
                    grid.len()
                )));
            }
        }
        Ok(Self { grid, requested_sample_rate, groups, metadata })
    }

    pub fn group(&self, name: &str) -> Result<&FrfSet> {
        self.groups.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.groups.keys().map(String::as_str).collect();
            Error::InvalidDataset(format!("no group '{name}' (available: {})", known.join(", ")))
        })
    }
}

fn validate_group_name(name: &str) -> Result<()> {
    if name.is_empty() || name == FREQ_ROW || name == RATE_ROW || name.starts_with(META_PREFIX) {
        return Err(Error::InvalidDataset(format!("invalid group name '{name}'")));
    }
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>, format: Format) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    match format {
        Format::Csv => parse_csv(&text),
        Format::Json => parse_json(&text),
    }
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let text = match format {
        Format::Csv => to_csv(dataset)?,
        Format::Json => to_json(dataset)?,
    };
    fs::write(path, text)?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonDataset {
    frequencies: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sample_rate: Option<f64>,
    groups: BTreeMap<String, Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    metadata: BTreeMap<String, String>,
}

pub fn parse_json(text: &str) -> Result<Dataset> {
    let raw: JsonDataset = serde_json::from_str(text)?;
    let grid = derive_grid(&raw.frequencies, raw.sample_rate)?;
    let mut groups = BTreeMap::new();
    for (name, samples) in raw.groups {
        let frfs = samples
            .into_iter()
            .enumerate()
            .map(|(i, pairs)| {
                if pairs.len() != grid.len() {
                    return Err(Error::InvalidDataset(format!(
                        "group '{name}' sample {i} has {} values, expected {}",
                        pairs.len(),
                        grid.len()
                    )));
                }
                Frf::new(pairs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        let set = FrfSet::new(frfs).map_err(|_| Error::InvalidDataset(format!("group '{name}' has no samples")))?;
        groups.insert(name, set);
    }
    Dataset::new(grid, raw.sample_rate, groups, raw.metadata)
}

pub fn to_json(dataset: &Dataset) -> Result<String> {
    let raw = JsonDataset {
        frequencies: dataset.grid.frequencies().to_vec(),
        sample_rate: dataset.requested_sample_rate,
        groups: dataset
            .groups
            .iter()
            .map(|(name, set)| {
                let samples = set.samples().iter().map(|s| s.values().iter().map(|v| [v.re, v.im]).collect()).collect();
                (name.clone(), samples)
            })
            .collect(),
        metadata: dataset.metadata.clone(),
    };
    Ok(serde_json::to_string_pretty(&raw)? + "\n")
}

pub fn parse_csv(text: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
    let mut records = reader.records().enumerate().map(|(i, r)| r.map(|rec| (i + 1, rec)));

    let parse_err = |row: usize, column: usize, message: String| Error::Parse { row, column, message };

    let (_, header) = records.next().ok_or_else(|| parse_err(1, 1, "missing header row".into()))??;
    if header.len() < 3 || (header.len() - 1) % 2 != 0 {
        return Err(parse_err(1, header.len(), "header must be 'group' followed by re/im column pairs".into()));
    }
    let m = (header.len() - 1) / 2;

    let number = |row: usize, column: usize, field: &str| -> Result<f64> {
        let v: f64 = field.trim().parse().map_err(|_| parse_err(row, column, format!("'{field}' is not a number")))?;
        if !v.is_finite() {
            return Err(parse_err(row, column, format!("'{field}' is not finite")));
        }
        Ok(v)
    };

    let (freq_row, freq_record) =
        records.next().ok_or_else(|| parse_err(2, 1, format!("missing '{FREQ_ROW}' row")))??;
    if freq_record.get(0) != Some(FREQ_ROW) {
        return Err(parse_err(freq_row, 1, format!("expected '{FREQ_ROW}' row after the header")));
    }
    if freq_record.len() != header.len() {
        return Err(parse_err(
            freq_row,
            freq_record.len(),
            format!("row has {} fields, header has {}", freq_record.len(), header.len()),
        ));
    }
    let frequencies =
        (0..m).map(|k| number(freq_row, 2 + 2 * k, &freq_record[1 + 2 * k])).collect::<Result<Vec<_>>>()?;

    let mut sample_rate = None;
    let mut metadata = BTreeMap::new();
    let mut samples: BTreeMap<String, Vec<Frf>> = BTreeMap::new();
    for item in records {
        let (row, record) = item?;
        let key = record.get(0).unwrap_or_default();
        if key == RATE_ROW || key.starts_with(META_PREFIX) {
            if !samples.is_empty() {
                return Err(parse_err(row, 1, format!("'{key}' must precede the samples")));
            }
            if record.len() != 2 {
                return Err(parse_err(row, record.len(), format!("'{key}' row needs exactly one value")));
            }
            if key == RATE_ROW {
                sample_rate = Some(number(row, 2, &record[1])?);
            } else {
                metadata.insert(key[META_PREFIX.len()..].to_string(), record[1].to_string());
            }
            continue;
        }
        if key.is_empty() {
            return Err(parse_err(row, 1, "empty group name".into()));
        }
        if record.len() != header.len() {
            return Err(parse_err(
                row,
                record.len(),
                format!("row has {} fields, header has {}", record.len(), header.len()),
            ));
        }
        let values = (0..m)
            .map(|k| {
                Ok(Complex64::new(
                    number(row, 2 + 2 * k, &record[1 + 2 * k])?,
                    number(row, 3 + 2 * k, &record[2 + 2 * k])?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        samples.entry(key.to_string()).or_default().push(Frf::new(values)?);
    }

    let grid = derive_grid(&frequencies, sample_rate)?;
    let groups = samples.into_iter().map(|(name, frfs)| Ok((name, FrfSet::new(frfs)?))).collect::<Result<_>>()?;
    Dataset::new(grid, sample_rate, groups, metadata)
}

pub fn to_csv(dataset: &Dataset) -> Result<String> {
    let mut writer = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    let m = dataset.grid.len();

    let mut header = vec!["group".to_string()];
    for k in 1..=m {
        header.push(format!("re_{k}"));
        header.push(format!("im_{k}"));
    }
    writer.write_record(&header)?;

    let mut freq_row = vec![FREQ_ROW.to_string()];
    for f in dataset.grid.frequencies() {
        freq_row.push(f.to_string());
        freq_row.push(String::new());
    }
    writer.write_record(&freq_row)?;

    if let Some(rate) = dataset.requested_sample_rate {
        writer.write_record([RATE_ROW.to_string(), rate.to_string()])?;
    }
    for (key, value) in &dataset.metadata {
        writer.write_record([format!("{META_PREFIX}{key}"), value.clone()])?;
    }
    for (name, set) in &dataset.groups {
        for sample in set.samples() {
            let mut row = vec![name.clone()];
            for v in sample.values() {
                row.push(v.re.to_string());
                row.push(v.im.to_string());
            }
            writer.write_record(&row)?;
        }
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_json() {
        let ds = parse_json(r#"{"frequencies":[1.0],"groups":{"a":[[[1,0]]]}}"#).unwrap();
        assert_eq!(ds.grid.len(), 1);
        assert_eq!(ds.group("a").unwrap().len(), 1);
        assert_eq!(ds.group("a").unwrap().samples()[0].values()[0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn json_wrong_width() {
        let err = parse_json(r#"{"frequencies":[1.0, 2.0],"groups":{"a":[[[1,0]]]}}"#).unwrap_err();
        assert!(matches!(err, Error::InvalidDataset(_)), "{err}");
    }

    #[test]
    fn json_grid_error_propagates() {
        let err = parse_json(r#"{"frequencies":[1.0, 2.0],"sample_rate":3.0,"groups":{}}"#).unwrap_err();
        assert!(matches!(err, Error::NyquistViolation { .. }));
    }

    #[test]
    fn csv_basic() {
        let text =
            "group,re_1,im_1,re_2,im_2\nfreq_hz,0.3,,0.5,\nmeta:note,hello\nA,1,0,0.5,-0.5\nA,2,1,0,0\nB,0,0,1,1\n";
        let ds = parse_csv(text).unwrap();
        assert_eq!(ds.grid.n_samples(), 50);
        assert_eq!(ds.group("A").unwrap().len(), 2);
        assert_eq!(ds.group("B").unwrap().len(), 1);
        assert_eq!(ds.metadata["note"], "hello");
        assert!(ds.group("C").is_err());
    }

    #[test]
    fn csv_short_row_names_row() {
        let text = "group,re_1,im_1\nfreq_hz,1.0,\nA,1,0\nA,1\n";
        match parse_csv(text).unwrap_err() {
            Error::Parse { row, .. } => assert_eq!(row, 4),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn csv_bad_number_names_cell() {
        let text = "group,re_1,im_1\nfreq_hz,1.0,\nA,1,x\n";
        match parse_csv(text).unwrap_err() {
            Error::Parse { row, column, .. } => assert_eq!((row, column), (3, 3)),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn csv_missing_freq_row() {
        assert!(matches!(parse_csv("group,re_1,im_1\nA,1,0\n"), Err(Error::Parse { row: 2, .. })));
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(Format::from_path(Path::new("x.JSON")), Format::Json);
        assert_eq!(Format::from_path(Path::new("x.csv")), Format::Csv);
        assert_eq!(Format::from_path(Path::new("x")), Format::Csv);
    }

    fn arb_dataset() -> impl Strategy<Value = Dataset> {
        let freqs = prop::sample::subsequence(vec![0.05, 0.15, 0.3, 0.4, 0.55, 0.7, 0.9, 1.1, 1.35, 1.75, 2.2], 1..11);
        freqs
            .prop_flat_map(|f| {
                let m = f.len();
                let sample = prop::collection::vec((-1e6f64..1e6, -1e6f64..1e6), m);
                let group = prop::collection::vec(sample, 1..4);
                let groups = prop::collection::btree_map("[a-z][a-z0-9_ ]{0,6}", group, 1..4);
                let metadata = prop::collection::btree_map("[a-z]{1,5}", "[ -~]{0,12}", 0..3);
                let rate = prop::option::of(Just(10.0 * f[m - 1] + 1.0));
                (Just(f), rate, groups, metadata)
            })
            .prop_map(|(f, rate, groups, metadata)| {
                let grid = derive_grid(&f, rate).unwrap();
                let groups = groups
                    .into_iter()
                    .map(|(name, samples)| {
                        let frfs = samples
                            .into_iter()
                            .map(|s| Frf::new(s.into_iter().map(|(re, im)| Complex64::new(re, im)).collect()).unwrap())
                            .collect();
                        (name, FrfSet::new(frfs).unwrap())
                    })
                    .collect();
                Dataset::new(grid, rate, groups, metadata).unwrap()
            })
    }

    proptest! {
        #[test]
        fn csv_roundtrip(ds in arb_dataset()) {
            prop_assert_eq!(parse_csv(&to_csv(&ds).unwrap()).unwrap(), ds);
        }

        #[test]
        fn json_roundtrip(ds in arb_dataset()) {
            prop_assert_eq!(parse_json(&to_json(&ds).unwrap()).unwrap(), ds);
        }
    }
}
