//! Count tables: features in rows, samples in columns.
//!
//! ```text
//! feature,S1,S2,S3
//! otu_1,0,0,102
//! otu_2,13,0,0
//! ```
//!
//! The first header cell is a free label; the remaining header cells are
//! sample ids. Every entry must be a nonnegative integer.

use crate::data::CountVector;
use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    pub feature_ids: Vec<String>,
    pub sample_ids: Vec<String>,
    /// `counts[feature][sample]`.
    pub counts: Vec<Vec<u64>>,
}

impl CountTable {
    pub fn new(feature_ids: Vec<String>, sample_ids: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        if feature_ids.len() != counts.len() {
            return Err(Error::InvalidParameter(format!(
                "{} feature ids for {} rows",
                feature_ids.len(),
                counts.len()
            )));
        }
        if let Some(row) = counts.iter().position(|r| r.len() != sample_ids.len()) {
            return Err(Error::InvalidParameter(format!(
                "row {} has {} entries, expected {}",
                row,
                counts[row].len(),
                sample_ids.len()
            )));
        }
        Ok(CountTable {
            feature_ids,
            sample_ids,
            counts,
        })
    }

    pub fn n_features(&self) -> usize {
        self.feature_ids.len()
    }

    pub fn row(&self, index: usize) -> CountVector {
        CountVector::new(self.counts[index].clone())
    }

    pub fn find(&self, feature: &str) -> Option<usize> {
        self.feature_ids.iter().position(|f| f == feature)
    }

    pub fn parse<R: Read>(reader: R) -> Result<CountTable> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut records = rdr.records();
        let header = match records.next() {
            None => {
                return Err(Error::Parse {
                    line: 1,
                    message: "empty input: expected a header row of sample ids".into(),
                })
            }
            Some(r) => r.map_err(csv_error)?,
        };
        if header.len() < 2 {
            return Err(Error::Parse {
                line: line_of(&header),
                message: "header needs a label cell followed by at least one sample id".into(),
            });
        }
        let sample_ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut feature_ids = Vec::new();
        let mut counts = Vec::new();
        for rec in records {
            let rec = rec.map_err(csv_error)?;
            let line = line_of(&rec);
            if rec.iter().all(str::is_empty) {
                continue;
            }
            if rec.len() != header.len() {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} fields, found {}", header.len(), rec.len()),
                });
            }
            let id = rec[0].to_string();
            if id.is_empty() {
                return Err(Error::Parse {
                    line,
                    message: "missing feature id".into(),
                });
            }
            let row = rec
                .iter()
                .skip(1)
                .zip(&sample_ids)
                .map(|(cell, sample)| {
                    cell.parse::<u64>().map_err(|_| Error::Parse {
                        line,
                        message: format!("feature '{id}', sample '{sample}': '{cell}' is not a nonnegative integer"),
                    })
                })
                .collect::<Result<Vec<u64>>>()?;
            feature_ids.push(id);
            counts.push(row);
        }
        if feature_ids.is_empty() {
            return Err(Error::Parse {
                line: line_of(&header) + 1,
                message: "no feature rows".into(),
            });
        }
        Ok(CountTable {
            feature_ids,
            sample_ids,
            counts,
        })
    }

    pub fn read_path(path: &Path) -> Result<CountTable> {
        let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        CountTable::parse(std::io::BufReader::new(file))
    }

    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let header = std::iter::once("feature").chain(self.sample_ids.iter().map(String::as_str));
        w.write_record(header).map_err(csv_error)?;
        for (id, row) in self.feature_ids.iter().zip(&self.counts) {
            let cells = std::iter::once(id.clone()).chain(row.iter().map(u64::to_string));
            w.write_record(cells).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io(e.to_string()),
        _ => Error::Parse {
            line,
            message: e.to_string(),
        },
    }
}
