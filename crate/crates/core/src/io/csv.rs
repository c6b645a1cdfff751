//! CSV record tables.
//!
//! The main table has one row per record; couplings live in a sidecar
//! `<stem>.couplings.csv` with one row per instance index, columns
//! `index,J0,...`. Reals are written in scientific notation with 17
//! significant digits, which round-trips every binary64 value.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::hamiltonian::CouplingVector;
use crate::metrics::{InstanceRecord, RecordFlags};

pub const HEADER: [&str; 14] = [
    "index",
    "n",
    "T",
    "min_gap",
    "s_star",
    "P",
    "delta_E",
    "delta",
    "abs_J_top",
    "ground_dim",
    "norm_drift",
    "M",
    "criterion_bound",
    "flags",
];

pub fn sidecar_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.couplings.csv"))
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Streaming writer for the main table and its couplings sidecar.
pub struct RecordWriter {
    main: csv::Writer<BufWriter<File>>,
    side: csv::Writer<BufWriter<File>>,
    side_header: bool,
    seen: HashSet<u64>,
    rows: u64,
}

impl RecordWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let open = |p: &Path| -> Result<csv::Writer<BufWriter<File>>> {
            Ok(csv::WriterBuilder::new().flexible(true).from_writer(BufWriter::new(File::create(p)?)))
        };
        let mut main = open(path)?;
        main.write_record(HEADER)?;
        Ok(Self { main, side: open(&sidecar_path(path))?, side_header: false, seen: HashSet::new(), rows: 0 })
    }

    pub fn write(&mut self, r: &InstanceRecord) -> Result<()> {
        let row = [
            r.index.to_string(),
            r.n().to_string(),
            real(r.t),
            real(r.min_gap),
            real(r.s_star),
            real(r.success_prob),
            real(r.energy_error),
            real(r.avg_overlap),
            real(r.abs_j_top()),
            r.ground_subspace_dim.to_string(),
            real(r.max_norm_drift),
            real(r.matrix_element_max),
            real(r.criterion_bound),
            r.flags.to_string(),
        ];
        self.main.write_record(&row)?;
        if self.seen.insert(r.index) {
            if !self.side_header {
                let mut head = vec!["index".to_string()];
                head.extend((0..r.couplings.dim()).map(|x| format!("J{x}")));
                self.side.write_record(&head)?;
                self.side_header = true;
            }
            let mut row = vec![r.index.to_string()];
            row.extend(r.couplings.values().iter().map(|&v| real(v)));
            self.side.write_record(&row)?;
        }
        self.rows += 1;
        Ok(())
    }

    /// Flushes both files and returns the number of records written.
    pub fn finish(mut self) -> Result<u64> {
        if !self.side_header {
            self.side.write_record(["index"])?;
        }
        self.main.flush()?;
        self.side.flush()?;
        Ok(self.rows)
    }
}

pub fn write_records(records: &[InstanceRecord], path: &Path) -> Result<u64> {
    let mut w = RecordWriter::create(path)?;
    for r in records {
        w.write(r)?;
    }
    w.finish()
}

fn parse_field<T: std::str::FromStr>(row: &csv::StringRecord, col: usize, line: u64) -> Result<T> {
    let raw = row.get(col).ok_or_else(|| Error::Csv(format!("line {line}: missing column {}", HEADER[col])))?;
    raw.parse().map_err(|_| Error::Csv(format!("line {line}: column {}: cannot parse `{raw}`", HEADER[col])))
}

/// Reads a table written by [`write_records`] together with its sidecar.
pub fn read_records(path: &Path) -> Result<Vec<InstanceRecord>> {
    let mut side = csv::ReaderBuilder::new().flexible(true).from_path(sidecar_path(path))?;
    let mut couplings: HashMap<u64, Vec<f64>> = HashMap::new();
    for row in side.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |raw: &str| Error::Csv(format!("sidecar line {line}: cannot parse `{raw}`"));
        let mut it = row.iter();
        let index: u64 = it.next().map(|s| s.parse().map_err(|_| bad(s))).transpose()?.ok_or_else(|| bad(""))?;
        let values = it.map(|s| s.parse::<f64>().map_err(|_| bad(s))).collect::<Result<Vec<f64>>>()?;
        couplings.insert(index, values);
    }

    let mut main = csv::Reader::from_path(path)?;
    if main.headers()?.iter().ne(HEADER) {
        return Err(Error::Csv(format!("unexpected header in {}", path.display())));
    }
    let mut out = Vec::new();
    for row in main.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != HEADER.len() {
            return Err(Error::Csv(format!("line {line}: expected {} columns, got {}", HEADER.len(), row.len())));
        }
        let index: u64 = parse_field(&row, 0, line)?;
        let n: usize = parse_field(&row, 1, line)?;
        let values = couplings
            .get(&index)
            .ok_or_else(|| Error::Csv(format!("line {line}: no couplings for index {index}")))?;
        let cv = CouplingVector::new(n, values.clone())
            .map_err(|e| Error::Csv(format!("line {line}: {e}")))?;
        out.push(InstanceRecord {
            index,
            couplings: cv,
            t: parse_field(&row, 2, line)?,
            min_gap: parse_field(&row, 3, line)?,
            s_star: parse_field(&row, 4, line)?,
            success_prob: parse_field(&row, 5, line)?,
            energy_error: parse_field(&row, 6, line)?,
            avg_overlap: parse_field(&row, 7, line)?,
            ground_subspace_dim: parse_field(&row, 9, line)?,
            max_norm_drift: parse_field(&row, 10, line)?,
            matrix_element_max: parse_field(&row, 11, line)?,
            criterion_bound: parse_field(&row, 12, line)?,
            flags: RecordFlags::parse(&row[13]).map_err(|e| Error::Csv(format!("line {line}: {e}")))?,
        });
    }
    Ok(out)
}
