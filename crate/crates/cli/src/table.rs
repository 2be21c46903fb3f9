//! CSV emission and parsing of sweep results.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{CliError, Result};
use crate::scenario::{Scheme, SweepParameter};
use crate::sweep::{SweepResult, SweepRow};

/// Marker for an unrequested or unavailable value.
pub const MISSING: &str = "NA";

const VALUE_COLUMNS: [&str; 9] = [
    "closed_form_rate",
    "mc_approx_mean",
    "mc_approx_stderr",
    "mc_exact_mean",
    "mc_exact_stderr",
    "sum_rate",
    "ee",
    "jfi",
    "approx_caveat",
];

pub fn header(parameter: SweepParameter) -> Vec<&'static str> {
    let mut h = vec!["scheme", "variant", "user", parameter.name()];
    h.extend(VALUE_COLUMNS);
    h
}

/// 17 significant digits.
fn fmt_num(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.16e}"),
        None => MISSING.to_string(),
    }
}

fn record(row: &SweepRow) -> Vec<String> {
    vec![
        row.scheme.name().to_string(),
        row.variant.clone(),
        row.user.to_string(),
        format!("{:.16e}", row.value),
        fmt_num(row.closed_form_rate),
        fmt_num(row.mc_approx_mean),
        fmt_num(row.mc_approx_stderr),
        fmt_num(row.mc_exact_mean),
        fmt_num(row.mc_exact_stderr),
        fmt_num(row.sum_rate),
        fmt_num(row.ee),
        fmt_num(row.jfi),
        match row.approx_caveat {
            Some(b) => b.to_string(),
            None => MISSING.to_string(),
        },
    ]
}

pub fn write_csv_to<W: Write>(result: &SweepResult, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(result.parameter))?;
    for row in &result.rows {
        w.write_record(record(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(result: &SweepResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_csv_to(result, std::io::BufWriter::new(file)).map_err(|source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_num(field: &str) -> std::result::Result<Option<f64>, String> {
    if field == MISSING {
        return Ok(None);
    }
    field.parse::<f64>().map(Some).map_err(|_| format!("`{field}` is not a number"))
}

pub fn read_csv_from<R: Read>(input: R, path: &Path) -> Result<SweepResult> {
    let malformed = |message: String| CliError::Table {
        path: path.to_path_buf(),
        message,
    };
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_reader(input);
    let head = r.headers().map_err(csv_err)?.clone();
    let parameter = head
        .get(3)
        .and_then(SweepParameter::from_name)
        .ok_or_else(|| malformed("fourth column is not a sweep parameter".into()))?;
    if head.iter().collect::<Vec<_>>() != header(parameter) {
        return Err(malformed(format!("unexpected header {head:?}")));
    }

    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 2;
        let at = |m: String| malformed(format!("row {line}: {m}"));
        let num = |k: usize| parse_num(&rec[k]).map_err(at);
        let scheme = Scheme::from_name(&rec[0]).ok_or_else(|| at(format!("unknown scheme `{}`", &rec[0])))?;
        let user = rec[2].parse::<usize>().map_err(|_| at(format!("bad user `{}`", &rec[2])))?;
        let approx_caveat = match &rec[12] {
            "true" => Some(true),
            "false" => Some(false),
            MISSING => None,
            other => return Err(at(format!("bad flag `{other}`"))),
        };
        rows.push(SweepRow {
            scheme,
            variant: rec[1].to_string(),
            user,
            value: num(3)?.ok_or_else(|| at("missing sweep value".into()))?,
            closed_form_rate: num(4)?,
            mc_approx_mean: num(5)?,
            mc_approx_stderr: num(6)?,
            mc_exact_mean: num(7)?,
            mc_exact_stderr: num(8)?,
            sum_rate: num(9)?,
            ee: num(10)?,
            jfi: num(11)?,
            approx_caveat,
        });
    }
    Ok(SweepResult { parameter, rows })
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<SweepResult> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_csv_from(file, path)
}
