//! `gen-scenarios`: sample correlated trajectories from quantile forecasts
//! and reduce each layer to a representative scenario set.
//!
//! The day-ahead and energy layers are sampled once; the balancing layer is
//! sampled once per kept day-ahead scenario. Every layer draws from its own
//! deterministic substream of the user seed, so adding or removing a layer
//! never perturbs the others.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write as _};
use std::path::{Path, PathBuf};

use clap::Args;
use log::info;
use serde_json::json;
use vpp_core::{
    read_forecast_csv, reduce_scenarios, sample_trajectories, write_trajectories_csv,
    ProbabilisticForecast, TrajectorySet,
};

use crate::{config, manifest, CliError};

#[derive(Debug, Args)]
pub struct GenScenariosArgs {
    /// Day-ahead price quantile forecast CSV
    #[arg(long, value_name = "PATH")]
    pub da_forecast: PathBuf,
    /// Balancing price quantile forecast CSV
    #[arg(long, value_name = "PATH")]
    pub ba_forecast: PathBuf,
    /// Delivered energy quantile forecast CSV
    #[arg(long, value_name = "PATH")]
    pub energy_forecast: PathBuf,
    /// Day-ahead trajectories to sample
    #[arg(long, value_name = "N", default_value_t = 300)]
    pub da_samples: usize,
    /// Day-ahead scenarios to keep after reduction
    #[arg(long, value_name = "N", default_value_t = 10)]
    pub da_keep: usize,
    /// Balancing trajectories to sample per day-ahead scenario
    #[arg(long, value_name = "N", default_value_t = 300)]
    pub ba_samples: usize,
    /// Balancing scenarios to keep per day-ahead scenario
    #[arg(long, value_name = "N", default_value_t = 6)]
    pub ba_keep: usize,
    /// Energy trajectories to sample
    #[arg(long, value_name = "N", default_value_t = 300)]
    pub energy_samples: usize,
    /// Energy scenarios to keep after reduction
    #[arg(long, value_name = "N", default_value_t = 5)]
    pub energy_keep: usize,
    /// Correlation length of the sampling copula, in intervals
    #[arg(long, value_name = "X", default_value_t = 5.0)]
    pub nu: f64,
    /// Day-ahead correlation length override
    #[arg(long, value_name = "X")]
    pub da_nu: Option<f64>,
    /// Balancing correlation length override
    #[arg(long, value_name = "X")]
    pub ba_nu: Option<f64>,
    /// Energy correlation length override
    #[arg(long, value_name = "X")]
    pub energy_nu: Option<f64>,
    /// Sampling seed
    #[arg(long, value_name = "N", default_value_t = 0)]
    pub seed: u64,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

pub fn run(args: &GenScenariosArgs) -> Result<i32, CliError> {
    crate::create_out_dir(&args.out)?;
    let da_forecast = read_forecast(&args.da_forecast)?;
    let ba_forecast = read_forecast(&args.ba_forecast)?;
    let energy_forecast = read_forecast(&args.energy_forecast)?;
    let horizon = da_forecast.horizon();
    if ba_forecast.horizon() != horizon || energy_forecast.horizon() != horizon {
        return Err(CliError::Validation(format!(
            "forecast horizons differ: day-ahead {horizon}, balancing {}, energy {}",
            ba_forecast.horizon(),
            energy_forecast.horizon()
        )));
    }

    let da_nu = args.da_nu.unwrap_or(args.nu);
    let ba_nu = args.ba_nu.unwrap_or(args.nu);
    let energy_nu = args.energy_nu.unwrap_or(args.nu);

    let da = layer(
        "day-ahead",
        &da_forecast,
        da_nu,
        args.da_samples,
        args.da_keep,
        sub_seed(args.seed, 0),
    )?;
    let energy = layer(
        "energy",
        &energy_forecast,
        energy_nu,
        args.energy_samples,
        args.energy_keep,
        sub_seed(args.seed, 1),
    )?;

    let mut outputs = vec!["da.csv".to_string()];
    write_set(&args.out.join("da.csv"), &da)?;
    for n in 0..da.len() {
        let set = layer(
            "balancing",
            &ba_forecast,
            ba_nu,
            args.ba_samples,
            args.ba_keep,
            sub_seed(args.seed, 2 + n as u64),
        )?;
        let name = format!("ba_i{}.csv", n + 1);
        write_set(&args.out.join(&name), &set)?;
        outputs.push(name);
    }
    write_set(&args.out.join("energy.csv"), &energy)?;
    outputs.push("energy.csv".to_string());

    manifest::write(
        &args.out,
        &json!({
            "command": "gen-scenarios",
            "correlation_length": { "ba": ba_nu, "da": da_nu, "energy": energy_nu },
            "counts": {
                "ba": { "kept": args.ba_keep, "sampled": args.ba_samples },
                "da": { "kept": da.len(), "sampled": args.da_samples },
                "energy": { "kept": energy.len(), "sampled": args.energy_samples },
            },
            "forecasts": {
                "ba": args.ba_forecast.display().to_string(),
                "da": args.da_forecast.display().to_string(),
                "energy": args.energy_forecast.display().to_string(),
            },
            "horizon": horizon,
            "out": args.out.display().to_string(),
            "outputs": outputs,
            "seed": args.seed,
            "tool": manifest::tool(),
        }),
    )?;
    info!(
        "wrote {} day-ahead, {}x{} balancing, and {} energy scenarios to {}",
        da.len(),
        da.len(),
        args.ba_keep,
        energy.len(),
        args.out.display()
    );
    Ok(0)
}

/// Derives an independent substream seed (splitmix64 of the seed xor a
/// stream tag), so each scenario layer gets its own reproducible draw.
fn sub_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn read_forecast(path: &Path) -> Result<ProbabilisticForecast, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_forecast_csv(BufReader::new(file), &path.display().to_string())
        .map_err(|e| config::scenario_error(path, e))
}

fn layer(
    label: &str,
    forecast: &ProbabilisticForecast,
    nu: f64,
    samples: usize,
    keep: usize,
    seed: u64,
) -> Result<TrajectorySet, CliError> {
    let sampled = sample_trajectories(forecast, nu, samples, seed)
        .map_err(|e| CliError::Validation(format!("{label}: {e}")))?;
    reduce_scenarios(&sampled, keep).map_err(|e| CliError::Validation(format!("{label}: {e}")))
}

fn write_set(path: &Path, set: &TrajectorySet) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut writer = BufWriter::new(file);
    write_trajectories_csv(&mut writer, set).map_err(|e| config::scenario_error(path, e))?;
    writer.flush().map_err(|e| CliError::io(path, e))
}
