use afrelay::epsilon_critical::report;
use afrelay::link_budget::build_budget;

use super::{json_text, Output};
use crate::args::ThresholdsArgs;
use crate::config::{load_file, resolve_network};
use crate::error::CliResult;

/// Phase-transition report for both protocols as pretty JSON.
pub fn thresholds(args: &ThresholdsArgs) -> CliResult<Output> {
    let file = load_file(&args.net)?;
    let cfg = resolve_network(&args.net, &file)?;
    let budget = build_budget(cfg)?;
    Ok(Output::ok(
        json_text(&report(&budget)),
        args.out.clone().or(file.out),
    ))
}
