//! CSV and JSON output. Numbers are written in shortest round-trip form so
//! repeated runs produce identical bytes.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use crate::grid::GridState;
use crate::params::SimParams;
use crate::scalar::Scalar;
use crate::simulator::{RunHistory, Snapshot};

pub const HISTORY_COLUMNS: [&str; 10] = [
    "n",
    "t",
    "tau_n",
    "h_n",
    "sup_norm",
    "u_m",
    "u_m_minus_1",
    "u_m_minus_2",
    "u_m_plus_1",
    "u_m_plus_2",
];

pub fn num<T: Scalar>(x: T) -> String {
    format!("{:e}", x)
}

fn opt<T: Scalar>(x: Option<T>) -> String {
    x.map(num).unwrap_or_default()
}

/// Writes `# <comment>` followed by a CSV table.
pub fn write_table<W: Write>(
    mut out: W,
    comment: &str,
    header: &[&str],
    rows: &[Vec<String>],
) -> io::Result<()> {
    writeln!(out, "# {comment}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()
}

pub fn params_comment<T: Scalar>(params: &SimParams<T>) -> String {
    format!("params: {}", params.describe())
}

pub fn history_rows<T: Scalar>(history: &RunHistory<T>) -> Vec<Vec<String>> {
    history
        .records
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                num(r.t),
                num(r.tau_n),
                num(r.h_n),
                num(r.sup_norm),
                num(r.u_m),
                num(r.u_m_minus_1),
                opt(r.u_m_minus_2),
                num(r.u_m_plus_1),
                opt(r.u_m_plus_2),
            ]
        })
        .collect()
}

pub fn write_history<W: Write, T: Scalar>(
    out: W,
    history: &RunHistory<T>,
    params: &SimParams<T>,
) -> io::Result<()> {
    write_table(
        out,
        &params_comment(params),
        &HISTORY_COLUMNS,
        &history_rows(history),
    )
}

pub fn write_snapshot<W: Write, T: Scalar>(
    out: W,
    snapshot: &Snapshot<T>,
    params: &SimParams<T>,
) -> io::Result<()> {
    let rows: Vec<Vec<String>> = snapshot
        .x
        .iter()
        .zip(&snapshot.u)
        .map(|(&x, &u)| vec![num(x), num(u)])
        .collect();
    let comment = format!(
        "{} n={} t={:e}",
        params_comment(params),
        snapshot.n,
        snapshot.t
    );
    write_table(out, &comment, &["x", "u"], &rows)
}

/// Profile on `grid` as a snapshot-style table.
pub fn write_profile<W: Write, T: Scalar>(
    out: W,
    grid: &GridState<T>,
    u: &[T],
    params: &SimParams<T>,
) -> io::Result<()> {
    let rows: Vec<Vec<String>> = grid
        .nodes()
        .iter()
        .zip(u)
        .map(|(&x, &v)| vec![num(x), num(v)])
        .collect();
    write_table(out, &params_comment(params), &["x", "u"], &rows)
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

/// Creates `path` and writes through `f`.
pub fn write_file(
    path: &Path,
    f: impl FnOnce(&mut io::BufWriter<fs::File>) -> io::Result<()>,
) -> io::Result<()> {
    let mut w = io::BufWriter::new(fs::File::create(path)?);
    f(&mut w)?;
    w.flush()
}
