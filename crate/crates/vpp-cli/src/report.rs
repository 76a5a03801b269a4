//! `report`: render a solved run directory as SVG charts.
//!
//! Pure presentation: the command re-reads the CSV files a solve run wrote
//! (`report.csv`, `curves.csv`, `curves_i{n}.csv`) and emits
//! `probability.svg`, `decomposition.svg`, and one step plot per curve file.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use log::info;

use crate::render::{self, CurveRow, ReportRow};
use crate::CliError;

const REPORT_HEADER: [&str; 6] = ["k", "prob_active", "rho_da", "rho_act", "rho_pas", "cost"];
const CURVE_HEADER: [&str; 4] = ["market", "k", "price", "quantity"];

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory with report.csv and curve CSVs from a solve run
    #[arg(value_name = "DIR")]
    pub solution: PathBuf,
    /// Output directory for the rendered SVGs; defaults to the solution directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

pub fn run(args: &ReportArgs) -> Result<i32, CliError> {
    let dir = &args.solution;
    let out = args.out.as_deref().unwrap_or(dir);
    crate::create_out_dir(out)?;

    let rows = read_report(&dir.join("report.csv"))?;
    crate::write_file(&out.join("probability.svg"), &render::probability_chart(&rows))?;
    crate::write_file(
        &out.join("decomposition.svg"),
        &render::decomposition_table(&rows),
    )?;

    let da_rows = read_curves(&dir.join("curves.csv"))?;
    crate::write_file(
        &out.join("curves.svg"),
        &render::curve_chart("Day-ahead offer curves", &da_rows),
    )?;

    let mut rendered = 3;
    let mut n = 1;
    loop {
        let path = dir.join(format!("curves_i{n}.csv"));
        if !path.exists() {
            break;
        }
        let curve_rows = read_curves(&path)?;
        let title = format!("Balancing offer curves for day-ahead scenario {n}");
        crate::write_file(
            &out.join(format!("curves_i{n}.svg")),
            &render::curve_chart(&title, &curve_rows),
        )?;
        rendered += 1;
        n += 1;
    }
    info!("rendered {rendered} charts to {}", out.display());
    Ok(0)
}

fn open_csv(path: &Path, expected: &[&str]) -> Result<csv::Reader<BufReader<File>>, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let headers = reader.headers().map_err(|e| parse_error(path, e))?;
    if headers.iter().ne(expected.iter().copied()) {
        return Err(CliError::Validation(format!(
            "{}: expected header {}, found {}",
            path.display(),
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(reader)
}

fn parse_error(path: &Path, err: csv::Error) -> CliError {
    CliError::Validation(format!("{}: {err}", path.display()))
}

fn field<T>(path: &Path, record: &csv::StringRecord, idx: usize, name: &str) -> Result<T, CliError>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    let line = record.position().map_or(0, |p| p.line());
    let raw = record.get(idx).ok_or_else(|| {
        CliError::Validation(format!(
            "{}: line {line}: missing field {name}",
            path.display()
        ))
    })?;
    raw.trim().parse().map_err(|e| {
        CliError::Validation(format!(
            "{}: line {line}: field {name}: {e}",
            path.display()
        ))
    })
}

fn read_report(path: &Path) -> Result<Vec<ReportRow>, CliError> {
    let mut reader = open_csv(path, &REPORT_HEADER)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| parse_error(path, e))?;
        rows.push(ReportRow {
            k: field(path, &record, 0, "k")?,
            prob_active: field(path, &record, 1, "prob_active")?,
            rho_da: field(path, &record, 2, "rho_da")?,
            rho_act: field(path, &record, 3, "rho_act")?,
            rho_pas: field(path, &record, 4, "rho_pas")?,
            cost: field(path, &record, 5, "cost")?,
        });
    }
    Ok(rows)
}

fn read_curves(path: &Path) -> Result<Vec<CurveRow>, CliError> {
    let mut reader = open_csv(path, &CURVE_HEADER)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| parse_error(path, e))?;
        rows.push(CurveRow {
            market: field(path, &record, 0, "market")?,
            k: field(path, &record, 1, "k")?,
            price: field(path, &record, 2, "price")?,
            quantity: field(path, &record, 3, "quantity")?,
        });
    }
    Ok(rows)
}
