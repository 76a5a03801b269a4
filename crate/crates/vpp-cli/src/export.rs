//! `export-mps`: build the offering model and write it in MPS format for
//! external solvers, reporting the model dimensions on stdout.

use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::PathBuf;

use clap::Args;
use log::info;
use serde_json::json;
use vpp_core::{build_model, eliminate_redundant_binaries};
use vpp_milp::{export_mps, MpsError};

use crate::{config, manifest, CliError};

#[derive(Debug, Args)]
pub struct ExportMpsArgs {
    /// Configuration JSON with asset parameters and a scenario tree
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Offering strategy: active-passive, active, or passive
    #[arg(long, value_name = "MODE", default_value = "active-passive")]
    pub mode: String,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

pub fn run(args: &ExportMpsArgs) -> Result<i32, CliError> {
    let mode = crate::parse_mode(&args.mode)?;
    let loaded = config::load_validated(&args.config)?;
    crate::create_out_dir(&args.out)?;

    let full = build_model(&loaded.cfg, &loaded.tree, mode).map_err(crate::map_offer_error)?;
    let model = eliminate_redundant_binaries(&loaded.cfg, &loaded.tree, mode, &full)
        .map_err(crate::map_offer_error)?;

    let path = args.out.join("model.mps");
    let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    let mut writer = BufWriter::new(file);
    export_mps(&model.milp, &mut writer).map_err(|e| match e {
        MpsError::Io(source) => CliError::io(&path, source),
        other => CliError::Numerical(format!("MPS export failed: {other}")),
    })?;
    writer.flush().map_err(|e| CliError::io(&path, e))?;

    let tree = &loaded.tree;
    manifest::write(
        &args.out,
        &json!({
            "command": "export-mps",
            "config": args.config.display().to_string(),
            "counts": {
                "ba_per_da": tree.n_ba(),
                "da": tree.n_da(),
                "energy": tree.n_energy(),
                "horizon": tree.da_prices.first().map_or(0, Vec::len),
            },
            "mode": mode.to_string(),
            "model": {
                "binaries": model.milp.num_binary_cols(),
                "commitment_modeled": model.map.has_commit(),
                "constraints": model.milp.num_rows(),
                "nonzeros": model.milp.num_nonzeros(),
                "variables": model.milp.num_cols(),
            },
            "out": args.out.display().to_string(),
            "outputs": ["model.mps"],
            "seed": null,
            "tool": manifest::tool(),
        }),
    )?;

    println!("variables: {}", model.milp.num_cols());
    println!("constraints: {}", model.milp.num_rows());
    println!("binaries: {}", model.milp.num_binary_cols());
    info!("wrote {}", path.display());
    Ok(0)
}
