//! CSV and JSON output. CSV files start with one `# provenance: {...}` comment
//! line followed by a header row and one record per grid point and method.
//! JSON holds the same provenance and records. Neither contains timestamps,
//! so identical runs produce identical bytes.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{
    CoverageResult, CoverageRow, Provenance, SavingsResult, SavingsRow, SweepResult, SweepRow,
};
use crate::error::{Error, Result};

const PROVENANCE_PREFIX: &str = "# provenance: ";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Config(format!("unknown output format `{s}`"))),
        }
    }
}

/// A provenance block plus a list of records.
pub trait ResultSet: Serialize + DeserializeOwned {
    type Row: Serialize + DeserializeOwned;

    fn provenance(&self) -> &Provenance;
    fn rows(&self) -> &[Self::Row];
    fn from_parts(provenance: Provenance, rows: Vec<Self::Row>) -> Self;

    fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = out;
        let prov = serde_json::to_string(self.provenance()).map_err(ser)?;
        writeln!(out, "{PROVENANCE_PREFIX}{prov}").map_err(|e| Error::Serialize(e.to_string()))?;
        let mut w = csv::Writer::from_writer(out);
        for row in self.rows() {
            w.serialize(row).map_err(ser)?;
        }
        w.flush().map_err(|e| Error::Serialize(e.to_string()))
    }

    fn write_json<W: Write>(&self, out: W) -> Result<()> {
        let mut out = out;
        serde_json::to_writer_pretty(&mut out, self).map_err(ser)?;
        writeln!(out).map_err(|e| Error::Serialize(e.to_string()))
    }

    fn write<W: Write>(&self, format: Format, out: W) -> Result<()> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => self.write_json(out),
        }
    }

    fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = BufReader::new(input);
        let mut first = String::new();
        reader
            .read_line(&mut first)
            .map_err(|e| Error::Serialize(e.to_string()))?;
        let json = first
            .trim_end()
            .strip_prefix(PROVENANCE_PREFIX)
            .ok_or_else(|| Error::Serialize("missing provenance line".into()))?;
        let provenance: Provenance = serde_json::from_str(json).map_err(ser)?;
        let rows = csv::Reader::from_reader(reader)
            .deserialize()
            .collect::<std::result::Result<Vec<Self::Row>, _>>()
            .map_err(ser)?;
        Ok(Self::from_parts(provenance, rows))
    }

    fn read_json<R: Read>(input: R) -> Result<Self> {
        serde_json::from_reader(input).map_err(ser)
    }
}

fn ser(e: impl std::fmt::Display) -> Error {
    Error::Serialize(e.to_string())
}

macro_rules! result_set {
    ($result:ty, $row:ty) => {
        impl ResultSet for $result {
            type Row = $row;

            fn provenance(&self) -> &Provenance {
                &self.provenance
            }

            fn rows(&self) -> &[$row] {
                &self.rows
            }

            fn from_parts(provenance: Provenance, rows: Vec<$row>) -> Self {
                Self { provenance, rows }
            }
        }
    };
}

result_set!(SweepResult, SweepRow);
result_set!(CoverageResult, CoverageRow);
result_set!(SavingsResult, SavingsRow);

/// Writes `result` to `path` in `format`.
pub fn emit_results<T: ResultSet>(result: &T, format: Format, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    result.write(format, &mut out)?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Reads a CSV result file written by [`emit_results`].
pub fn read_csv_results<T: ResultSet>(path: &Path) -> Result<T> {
    T::read_csv(File::open(path).map_err(|e| Error::io(path, e))?)
}

/// Reads a JSON result file written by [`emit_results`].
pub fn read_json_results<T: ResultSet>(path: &Path) -> Result<T> {
    T::read_json(File::open(path).map_err(|e| Error::io(path, e))?)
}
