//! CSV rows. Reals are written with 12 significant digits in scientific
//! notation; an asymptotic evaluation has `n_total = inf`.

use std::io::{Read, Write};

use cvmdi::finite_size::KeyRateReport;
use cvmdi::optimizer::Scenario;

use crate::CliError;

pub const RESULT_HEADER: [&str; 10] = [
    "l_ac_km",
    "l_bc_km",
    "v_snu",
    "n_total",
    "i_ab",
    "chi_be_worst",
    "delta_n",
    "k",
    "status",
    "worst_corner",
];

pub const FRONTIER_HEADER: [&str; 2] = ["l_bc_km", "l_ac_max_km"];

pub const COVERAGE_HEADER: [&str; 4] = ["parameter", "coverage", "trials", "eps_pe"];

pub fn fmt_real(x: f64) -> String {
    format!("{x:.11e}")
}

fn parse_real(field: &str, column: &str) -> Result<f64, CliError> {
    field
        .parse()
        .map_err(|_| CliError::Config(format!("column {column}: `{field}` is not a number")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub l_ac_km: f64,
    pub l_bc_km: f64,
    pub v_snu: f64,
    /// `None` for the asymptotic rate.
    pub n_total: Option<u64>,
    pub i_ab: f64,
    pub chi_be_worst: f64,
    pub delta_n: f64,
    pub k: f64,
    pub status: String,
    pub worst_corner: String,
}

impl ResultRow {
    pub fn new(scenario: &Scenario, report: &KeyRateReport) -> Self {
        Self {
            l_ac_km: scenario.protocol.l_ac,
            l_bc_km: scenario.protocol.l_bc,
            v_snu: scenario.protocol.v_a,
            n_total: scenario.finite.map(|f| f.n_total),
            i_ab: report.i_ab,
            chi_be_worst: report.chi_be_worst,
            delta_n: report.delta_n,
            k: report.k,
            status: report.status.to_string(),
            worst_corner: report.worst_corner.to_string(),
        }
    }

    pub fn to_record(&self) -> Vec<String> {
        vec![
            fmt_real(self.l_ac_km),
            fmt_real(self.l_bc_km),
            fmt_real(self.v_snu),
            self.n_total.map_or_else(|| "inf".to_string(), |n| n.to_string()),
            fmt_real(self.i_ab),
            fmt_real(self.chi_be_worst),
            fmt_real(self.delta_n),
            fmt_real(self.k),
            self.status.clone(),
            self.worst_corner.clone(),
        ]
    }

    pub fn from_record(record: &csv::StringRecord) -> Result<Self, CliError> {
        if record.len() != RESULT_HEADER.len() {
            return Err(CliError::Config(format!(
                "expected {} columns, found {}",
                RESULT_HEADER.len(),
                record.len()
            )));
        }
        let real = |i: usize| parse_real(&record[i], RESULT_HEADER[i]);
        Ok(Self {
            l_ac_km: real(0)?,
            l_bc_km: real(1)?,
            v_snu: real(2)?,
            n_total: match &record[3] {
                "inf" => None,
                n => Some(
                    n.parse()
                        .map_err(|_| CliError::Config(format!("column n_total: `{n}` is not a count")))?,
                ),
            },
            i_ab: real(4)?,
            chi_be_worst: real(5)?,
            delta_n: real(6)?,
            k: real(7)?,
            status: record[8].to_string(),
            worst_corner: record[9].to_string(),
        })
    }
}

pub fn write_rows<W: Write>(out: W, rows: &[ResultRow]) -> Result<(), CliError> {
    write_table(out, &RESULT_HEADER, rows.iter().map(ResultRow::to_record))
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<ResultRow>, CliError> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers().map_err(csv_error)?.clone();
    if header.iter().ne(RESULT_HEADER) {
        return Err(CliError::Config(format!("unexpected header {header:?}")));
    }
    reader
        .records()
        .map(|r| ResultRow::from_record(&r.map_err(csv_error)?))
        .collect()
}

pub fn write_table<W: Write>(
    out: W,
    header: &[&str],
    records: impl IntoIterator<Item = Vec<String>>,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_error)?;
    for r in records {
        w.write_record(&r).map_err(csv_error)?;
    }
    w.flush().map_err(|e| CliError::Output(e.to_string()))
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Output(e.to_string())
}
