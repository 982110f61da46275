use afrelay::epsilon_critical::threshold;
use afrelay::link_budget::build_budget;
use afrelay::outage::{outage, outage_fg_floor, small_gamma_expansion};
use afrelay::simulator::{mc_outage_sweep, Seed, SimStats};
use afrelay::Protocol;
use rayon::prelude::*;
use serde::Serialize;

use super::{csv_text, db_to_linear, json_text, linear_to_db, prob_field, Output};
use crate::args::{Format, OutageSweepArgs};
use crate::config::{load_file, resolve_network};
use crate::error::CliResult;
use crate::grid::Grid;

pub const DEFAULT_GAMMA_DB: Grid = Grid {
    start: 0.0,
    step: 0.25,
    stop: 30.0,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutageRow {
    pub gamma_th_db: f64,
    pub po_analytic: f64,
    /// High-power FG floor; absent for VG.
    pub po_floor: Option<f64>,
    /// Small-threshold expansion, where it is a probability and the exact
    /// outage is below one.
    pub po_small_gamma: Option<f64>,
    pub po_mc: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub n_trials: Option<u64>,
    pub seed: Option<u64>,
}

#[derive(Serialize)]
struct SweepDoc<'a> {
    protocol: Protocol,
    threshold_db: Option<f64>,
    rows: &'a [OutageRow],
}

const HEADER: [&str; 9] = [
    "gamma_th_db",
    "po_analytic",
    "po_floor",
    "po_small_gamma",
    "po_mc",
    "ci_low",
    "ci_high",
    "n_trials",
    "seed",
];

pub fn outage_sweep(args: &OutageSweepArgs) -> CliResult<Output> {
    let file = load_file(&args.net)?;
    let cfg = resolve_network(&args.net, &file)?;
    let protocol = args.protocol.or(file.protocol).unwrap_or(Protocol::Vg);
    let grid = args.gamma_db.or(file.gamma_db).unwrap_or(DEFAULT_GAMMA_DB);
    let trials = args.trials.or(file.trials).unwrap_or(0);
    let seed = args.seed.or(file.seed).unwrap_or(1);
    let format = args.format.or(file.format).unwrap_or(Format::Csv);

    let budget = build_budget(cfg)?;
    let gammas_db = grid.values();
    let gammas: Vec<f64> = gammas_db.iter().map(|&g| db_to_linear(g)).collect();

    let analytic = gammas
        .par_iter()
        .map(|&g| -> CliResult<(f64, Option<f64>, Option<f64>)> {
            let po = outage(protocol, g, &budget)?.p_outage;
            let floor = match protocol {
                Protocol::Fg => Some(outage_fg_floor(g, &budget)?),
                Protocol::Vg => None,
            };
            let small = small_gamma_expansion(protocol, g, &budget)
                .ok()
                .filter(|_| po < 1.0);
            Ok((po, floor, small))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mc: Option<Vec<SimStats>> = match trials {
        0 => None,
        n => Some(mc_outage_sweep(protocol, &gammas, &budget, n, Seed(seed))?),
    };

    let rows: Vec<OutageRow> = gammas_db
        .iter()
        .zip(&analytic)
        .enumerate()
        .map(|(i, (&g_db, &(po, floor, small)))| {
            let sim = mc.as_ref().map(|m| m[i]);
            OutageRow {
                gamma_th_db: g_db,
                po_analytic: po,
                po_floor: floor,
                po_small_gamma: small,
                po_mc: sim.map(|s| s.p_hat),
                ci_low: sim.map(|s| s.ci_low),
                ci_high: sim.map(|s| s.ci_high),
                n_trials: sim.map(|s| s.n_trials),
                seed: sim.map(|_| seed),
            }
        })
        .collect();

    let gc = threshold(protocol, &budget);
    let threshold_db = gc.is_finite().then(|| linear_to_db(gc));
    let out = args.out.clone().or(file.out);
    let body = match format {
        Format::Json => json_text(&SweepDoc {
            protocol,
            threshold_db,
            rows: &rows,
        }),
        Format::Csv => {
            let records: Vec<Vec<String>> = rows.iter().map(csv_record).collect();
            let mut text = csv_text(&HEADER, &records)?;
            let marker = threshold_db.map_or("none".to_string(), |t| t.to_string());
            text.push_str(&format!("# protocol={protocol} threshold_db={marker}\n"));
            text
        }
    };
    Ok(Output::ok(body, out))
}

fn csv_record(r: &OutageRow) -> Vec<String> {
    let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
    vec![
        r.gamma_th_db.to_string(),
        prob_field(Some(r.po_analytic)),
        prob_field(r.po_floor),
        prob_field(r.po_small_gamma),
        prob_field(r.po_mc),
        prob_field(r.ci_low),
        prob_field(r.ci_high),
        opt(r.n_trials),
        opt(r.seed),
    ]
}
