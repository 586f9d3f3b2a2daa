//! CSV files of imbalance records.
//!
//! Floats are written with 17 significant digits in scientific notation, so
//! the output is byte-identical across runs of the same configuration.

use std::io::{Read, Write};

use optimal_balance::diagnostics::{ImbalanceRecord, RecordStatus};

use crate::failure::Failure;

pub const HEADER: [&str; 10] = [
    "epsilon",
    "ramp",
    "a",
    "t1_slow",
    "imbalance",
    "residual_initial",
    "residual_rebalance",
    "iters_initial",
    "iters_rebalance",
    "status",
];

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_records<W: Write>(out: W, records: &[ImbalanceRecord]) -> Result<(), Failure> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let io = |e: csv::Error| Failure::io(e.to_string());
    w.write_record(HEADER).map_err(io)?;
    for r in records {
        w.write_record([
            fmt_float(r.eps),
            r.ramp.clone(),
            fmt_float(r.horizon),
            fmt_float(r.t1_slow),
            fmt_float(r.imbalance),
            fmt_float(r.residual_initial),
            fmt_float(r.residual_rebalance),
            r.iters_initial.to_string(),
            r.iters_rebalance.to_string(),
            r.status.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// One parsed CSV row. The status column is kept as text.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub eps: f64,
    pub ramp: String,
    pub a: f64,
    pub imbalance: f64,
    pub status: String,
}

impl Row {
    pub fn is_ok(&self) -> bool {
        self.status == RecordStatus::Ok.to_string()
    }
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<Row>, Failure> {
    let mut rd = csv::ReaderBuilder::new().from_reader(input);
    let header = rd
        .headers()
        .map_err(|e| Failure::data(e.to_string()))?
        .clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(Failure::data(format!(
            "unexpected CSV header '{}', expected '{}'",
            header.iter().collect::<Vec<_>>().join(","),
            HEADER.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, record) in rd.records().enumerate() {
        let record = record.map_err(|e| Failure::data(e.to_string()))?;
        let num = |i: usize| {
            record[i].parse::<f64>().map_err(|_| {
                Failure::data(format!(
                    "row {}: column {} is not a number: '{}'",
                    line + 2,
                    HEADER[i],
                    &record[i]
                ))
            })
        };
        rows.push(Row {
            eps: num(0)?,
            ramp: record[1].to_string(),
            a: num(2)?,
            imbalance: num(4)?,
            status: record[9].to_string(),
        });
    }
    Ok(rows)
}
