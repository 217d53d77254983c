//! Labelled discipline × section grids read from delimited text.
//!
//! Accepts the layout of the exported `aci.csv` / `acl.csv` tables and of
//! hand-typed appendix tables: a label column followed by the six section
//! columns in any order, with extra columns and summary rows ignored.

use std::collections::HashSet;

use serde::Deserialize;
use thiserror::Error;

use crate::metrics::SECTION_COLUMNS;
use crate::sections::SectionType;
use crate::stats::{GroupSamples, GroupSummary};

/// Row labels of the summary rows appended under exported grids.
pub const AVERAGE_ROW: &str = "Average of all records";
pub const SD_ROW: &str = "Standard Deviations";

const UNDEFINED_MARKERS: &[&str] = &["", "na", "n/a", "nan", "null", "-", "undefined"];

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid file: {0}")]
    Csv(#[from] csv::Error),
    #[error("grid malformed at line {line}: {message}")]
    Malformed { line: u64, message: String },
}

fn malformed(line: u64, message: impl Into<String>) -> GridError {
    GridError::Malformed {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub label: String,
    /// One entry per counted section type; `None` marks an undefined cell.
    pub values: [Option<f64>; SECTION_COLUMNS],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SectionGrid {
    pub rows: Vec<GridRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridOptions {
    /// Read `0` / `0.00` cells as undefined, the convention of the exported
    /// intensity and length tables.
    pub zero_is_undefined: bool,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { zero_is_undefined: true }
    }
}

fn section_of_header(cell: &str) -> Option<usize> {
    let lower = cell.to_lowercase();
    let stripped = lower
        .replace("(words)", "")
        .replace("(%)", "")
        .replace("section", "");
    let key = stripped.trim().to_uppercase();
    SectionType::COUNTED.iter().position(|t| t.label() == key)
}

fn delimiter_of(text: &str) -> u8 {
    let header = text.lines().next().unwrap_or("");
    if header.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

impl SectionGrid {
    pub fn parse(text: &str, options: GridOptions) -> Result<Self, GridError> {
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(delimiter_of(text))
            .flexible(true)
            .has_headers(true)
            .from_reader(text.as_bytes());
        let headers = reader.headers()?.clone();
        let mut columns = [usize::MAX; SECTION_COLUMNS];
        for (k, h) in headers.iter().enumerate().skip(1) {
            if let Some(col) = section_of_header(h) {
                if columns[col] != usize::MAX {
                    return Err(malformed(1, format!("section column `{h}` appears twice")));
                }
                columns[col] = k;
            }
        }
        if let Some(missing) = columns.iter().position(|&c| c == usize::MAX) {
            return Err(malformed(
                1,
                format!("no column for section {}", SectionType::COUNTED[missing]),
            ));
        }

        let mut rows = Vec::new();
        let mut labels = HashSet::new();
        for record in reader.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let label = record.get(0).unwrap_or("").trim().to_string();
            if label.is_empty() && record.iter().all(|c| c.trim().is_empty()) {
                continue;
            }
            if label.eq_ignore_ascii_case(AVERAGE_ROW) || label.eq_ignore_ascii_case(SD_ROW) {
                continue;
            }
            if label.is_empty() {
                return Err(malformed(line, "row without a label"));
            }
            if !labels.insert(label.clone()) {
                return Err(malformed(line, format!("duplicate row `{label}`")));
            }
            let mut values = [None; SECTION_COLUMNS];
            for (col, &k) in columns.iter().enumerate() {
                let raw = record
                    .get(k)
                    .ok_or_else(|| malformed(line, format!("row `{label}` is short")))?
                    .trim();
                if UNDEFINED_MARKERS.contains(&raw.to_lowercase().as_str()) {
                    continue;
                }
                let v: f64 = raw
                    .parse()
                    .map_err(|_| malformed(line, format!("`{raw}` is not a number")))?;
                if !v.is_finite() {
                    return Err(malformed(line, format!("`{raw}` is not finite")));
                }
                if !(options.zero_is_undefined && v == 0.0) {
                    values[col] = Some(v);
                }
            }
            rows.push(GridRow { label, values });
        }
        if rows.is_empty() {
            return Err(malformed(1, "grid has no data rows"));
        }
        Ok(Self { rows })
    }

    pub fn observations(&self) -> usize {
        self.rows.iter().map(|r| r.values.iter().flatten().count()).sum()
    }

    /// One group per row (discipline), holding its defined cells.
    pub fn row_groups(&self) -> Vec<GroupSamples<f64>> {
        self.rows
            .iter()
            .map(|r| GroupSamples::new(r.label.clone(), r.values.iter().flatten().copied().collect()))
            .collect()
    }

    /// One group per section column, holding the defined cells of every row.
    pub fn column_groups(&self) -> Vec<GroupSamples<f64>> {
        SectionType::COUNTED
            .iter()
            .enumerate()
            .map(|(col, t)| {
                GroupSamples::new(t.label(), self.rows.iter().filter_map(|r| r.values[col]).collect())
            })
            .collect()
    }
}

/// Group summaries `label,n,mean,sd` for tests that only have published
/// descriptive statistics.
pub fn parse_summaries(text: &str) -> Result<Vec<GroupSummary<f64>>, GridError> {
    #[derive(Deserialize)]
    struct Row {
        label: String,
        n: usize,
        mean: f64,
        sd: f64,
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter_of(text))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in reader.deserialize::<Row>() {
        let row = row?;
        if row.n == 0 || !row.mean.is_finite() || !row.sd.is_finite() || row.sd < 0.0 {
            return Err(malformed(0, format!("summary row `{}` is invalid", row.label)));
        }
        out.push(GroupSummary {
            se: row.sd / (row.n as f64).sqrt(),
            label: row.label,
            n: row.n,
            mean: row.mean,
            sd: row.sd,
        });
    }
    if out.len() < 2 {
        return Err(malformed(0, "need at least two summary rows"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "Discipline\tSection I\tSection M\tSection R\tSection D\tSection MR\tSection RD\tACI _i\tStandard Deviations
Arts\t1.31\t1.30\t1.48\t1.29\t1.50\t1.48\t1.32\t0.1027
Chemistry\t1.20\t1.27\t1.38\t1.24\t0.00\t1.39\t1.26\t0.4
Average of all records\t1.23\t1.28\t1.44\t1.29\t1.54\t1.43\t1.29\t0.11957
Standard Deviations\t0.00781\t0.01019\t0.04868\t0.01033\t0.10413\t0.01493\t0.00843\t
";

    #[test]
    fn reads_appendix_layout() {
        let g = SectionGrid::parse(SAMPLE, GridOptions::default()).unwrap();
        assert_eq!(g.rows.len(), 2);
        assert_eq!(g.rows[1].label, "Chemistry");
        assert_eq!(g.rows[1].values[4], None);
        assert_eq!(g.observations(), 11);
        assert_eq!(g.row_groups()[1].values.len(), 5);
        assert_eq!(g.column_groups()[4].values, vec![1.50]);
    }

    #[test]
    fn zero_can_be_kept() {
        let g = SectionGrid::parse(SAMPLE, GridOptions { zero_is_undefined: false }).unwrap();
        assert_eq!(g.rows[1].values[4], Some(0.0));
    }

    #[test]
    fn columns_in_any_order_with_markers() {
        let text = "label,RD,MR,D,R,M,I\nx,6,NA,4,3,2,1\ny,1,1,1,1,1,\n";
        let g = SectionGrid::parse(text, GridOptions::default()).unwrap();
        assert_eq!(g.rows[0].values, [Some(1.0), Some(2.0), Some(3.0), Some(4.0), None, Some(6.0)]);
        assert_eq!(g.rows[1].values[0], None);
    }

    #[test]
    fn malformed_grids() {
        let opts = GridOptions::default();
        assert!(SectionGrid::parse("label,I,M,R,D,MR\nx,1,1,1,1,1\n", opts).is_err());
        assert!(SectionGrid::parse("label,I,M,R,D,MR,RD\nx,1,1,abc,1,1,1\n", opts).is_err());
        assert!(SectionGrid::parse("label,I,M,R,D,MR,RD\nx,1,1,1,1,1,1\nx,1,1,1,1,1,1\n", opts).is_err());
        assert!(SectionGrid::parse("label,I,M,R,D,MR,RD\nx,1,1,1\n", opts).is_err());
        assert!(SectionGrid::parse("label,I,M,R,D,MR,RD\n", opts).is_err());
        assert!(SectionGrid::parse("label,I,I,M,R,D,MR,RD\nx,1,1,1,1,1,1,1\n", opts).is_err());
    }

    #[test]
    fn summaries() {
        let s = parse_summaries("label,n,mean,sd\nI,27,0.3819,0.0760\nM,27,0.1870,0.1158\n").unwrap();
        assert_eq!(s.len(), 2);
        assert!((s[0].se - 0.0146).abs() < 5e-5);
        assert!(parse_summaries("label,n,mean,sd\nI,0,1,1\nM,2,1,1\n").is_err());
    }
}
