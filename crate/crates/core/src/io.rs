//! CSV interchange for paired and proxy-only score files.
//!
//! `paired.csv` has header `id,y,f`; `sim.csv` has header `id,f`. Rows are
//! numbered from 1 (the first data row after the header) in error messages.
//! Floats are written with Rust's shortest round-trip formatting, so
//! `write_paired(load_paired(p))` reproduces any file whose numbers are
//! already in that canonical form.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{PairedDataset, PairedSample, Score, SimDataset};

pub const PAIRED_HEADER: [&str; 3] = ["id", "y", "f"];
pub const SIM_HEADER: [&str; 2] = ["id", "f"];

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, path: &Path, expected: &[&str]) -> Result<()> {
    let found = rdr.headers().map_err(|e| Error::MalformedRow {
        path: path.to_path_buf(),
        row: 0,
        reason: e.to_string(),
    })?;
    if found.iter().ne(expected.iter().copied()) {
        return Err(Error::BadHeader {
            path: path.to_path_buf(),
            expected: expected.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }
    Ok(())
}

fn parse_score(field: &str, path: &Path, row: usize, column: &str) -> Result<Score> {
    let value: f64 = field.parse().map_err(|_| Error::MalformedRow {
        path: path.to_path_buf(),
        row,
        reason: format!("column `{column}`: `{field}` is not a number"),
    })?;
    if !value.is_finite() {
        return Err(Error::MalformedRow {
            path: path.to_path_buf(),
            row,
            reason: format!("column `{column}`: `{field}` is not finite"),
        });
    }
    Score::new(value).map_err(|_| Error::ScoreOutOfRange { row, value })
}

pub fn read_paired<R: Read>(input: R, path: &Path) -> Result<PairedDataset> {
    let mut rdr = reader(input);
    check_header(&mut rdr, path, &PAIRED_HEADER)?;
    let mut samples = Vec::new();
    let mut ids = HashSet::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::MalformedRow {
            path: path.to_path_buf(),
            row,
            reason: e.to_string(),
        })?;
        if record.len() != 3 {
            return Err(Error::MalformedRow {
                path: path.to_path_buf(),
                row,
                reason: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let id = record[0].to_string();
        if !ids.insert(id.clone()) {
            return Err(Error::DuplicateId { id, row });
        }
        let y = parse_score(&record[1], path, row, "y")?;
        let f = parse_score(&record[2], path, row, "f")?;
        samples.push(PairedSample { id, y, f });
    }
    PairedDataset::new(samples)
}

pub fn read_sim<R: Read>(input: R, path: &Path) -> Result<SimDataset> {
    let mut rdr = reader(input);
    check_header(&mut rdr, path, &SIM_HEADER)?;
    let mut scores = Vec::new();
    let mut ids = HashSet::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::MalformedRow {
            path: path.to_path_buf(),
            row,
            reason: e.to_string(),
        })?;
        if record.len() != 2 {
            return Err(Error::MalformedRow {
                path: path.to_path_buf(),
                row,
                reason: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let id = record[0].to_string();
        if !ids.insert(id.clone()) {
            return Err(Error::DuplicateId { id, row });
        }
        scores.push(parse_score(&record[1], path, row, "f")?);
    }
    Ok(SimDataset::new(scores))
}

pub fn load_paired_dataset(path: impl AsRef<Path>) -> Result<PairedDataset> {
    let path = path.as_ref();
    read_paired(open(path)?, path)
}

pub fn load_sim_dataset(path: impl AsRef<Path>) -> Result<SimDataset> {
    let path = path.as_ref();
    read_sim(open(path)?, path)
}

pub fn write_paired_to<W: Write>(out: W, data: &PairedDataset) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PAIRED_HEADER)?;
    for s in data.samples() {
        w.write_record([
            s.id.as_str(),
            &s.y.value().to_string(),
            &s.f.value().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sim_to<W: Write>(out: W, data: &SimDataset) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SIM_HEADER)?;
    for (i, s) in data.scores().iter().enumerate() {
        w.write_record([i.to_string(), s.value().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn csv_to_io(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e))
}

pub fn write_paired(path: impl AsRef<Path>, data: &PairedDataset) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_paired_to(file, data).map_err(|e| csv_to_io(path, e))
}

pub fn write_sim(path: impl AsRef<Path>, data: &SimDataset) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_sim_to(file, data).map_err(|e| csv_to_io(path, e))
}
