//! Iteration trace as CSV.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::solvers::IterationRecord;

pub const TRACE_HEADER: [&str; 9] = [
    "k",
    "t",
    "batch_size",
    "alpha_accepted",
    "backtracks",
    "sub_objective",
    "full_objective",
    "grad_map_norm",
    "elapsed_s",
];

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

pub fn write_trace_csv<W: Write>(out: W, trace: &[IterationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for r in trace {
        w.write_record([
            r.k.to_string(),
            r.t.to_string(),
            r.batch_size.to_string(),
            r.alpha_accepted.to_string(),
            r.backtracks.to_string(),
            r.sub_objective.to_string(),
            r.full_objective.map(|v| v.to_string()).unwrap_or_default(),
            r.grad_map_norm.to_string(),
            r.elapsed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv<R: Read>(input: R) -> Result<Vec<IterationRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.iter().ne(TRACE_HEADER.iter().copied()) {
        return Err(Error::Format(format!("unexpected trace header: {header:?}")));
    }
    let num = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::Format(format!("bad number '{s}' in trace")))
    };
    let int = |s: &str| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| Error::Format(format!("bad integer '{s}' in trace")))
    };
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != TRACE_HEADER.len() {
            return Err(Error::Format("short trace row".into()));
        }
        out.push(IterationRecord {
            k: int(&rec[0])?,
            t: int(&rec[1])?,
            batch_size: int(&rec[2])?,
            alpha_accepted: num(&rec[3])?,
            backtracks: int(&rec[4])?,
            sub_objective: num(&rec[5])?,
            full_objective: if rec[6].is_empty() { None } else { Some(num(&rec[6])?) },
            grad_map_norm: num(&rec[7])?,
            elapsed: num(&rec[8])?,
        });
    }
    Ok(out)
}
