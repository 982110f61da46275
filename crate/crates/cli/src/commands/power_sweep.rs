use afrelay::link_budget::build_budget;
use afrelay::outage::{diversity_fit, outage, outage_asymptotic, DiversityFit};
use afrelay::Protocol;
use rayon::prelude::*;
use serde::Serialize;

use super::{csv_text, db_to_linear, json_text, prob_field, Output};
use crate::args::{Format, PowerSweepArgs};
use crate::config::{load_file, resolve_network};
use crate::error::{config_err, CliResult};
use crate::grid::Grid;

pub const DEFAULT_PS_DB: Grid = Grid {
    start: 40.0,
    step: 1.0,
    stop: 80.0,
};
pub const DEFAULT_GAMMA_DB: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerRow {
    pub ps_db: f64,
    pub po_exact: f64,
    pub po_asymptotic: Option<f64>,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct Summary {
    protocol: Protocol,
    gamma_th_db: f64,
    slope: f64,
    r_squared: f64,
    fit_ps_db: [f64; 2],
}

#[derive(Serialize)]
struct PowerDoc<'a> {
    summary: &'a Summary,
    rows: &'a [PowerRow],
}

pub fn power_sweep(args: &PowerSweepArgs) -> CliResult<Output> {
    let file = load_file(&args.net)?;
    let cfg = resolve_network(&args.net, &file)?;
    let protocol = args.protocol.or(file.protocol).unwrap_or(Protocol::Vg);
    let gamma = args
        .gamma_db
        .or(file.gamma_db)
        .unwrap_or(Grid::single(DEFAULT_GAMMA_DB));
    let grid = args.ps_db.or(file.ps_db).unwrap_or(DEFAULT_PS_DB);
    let format = args.format.or(file.format).unwrap_or(Format::Csv);
    let gamma_db = match gamma.values()[..] {
        [g] => g,
        _ => return config_err("power-sweep takes a single --gamma-db value"),
    };
    let ps_db = grid.values();
    if ps_db.last().unwrap() - ps_db[0] < 30.0 - 1e-9 {
        return config_err("power grid must span at least three decades (30 dB)");
    }

    let gamma_th = db_to_linear(gamma_db);
    let powers: Vec<f64> = ps_db.iter().map(|&p| cfg.n0 * db_to_linear(p)).collect();
    let exact = ps_db
        .par_iter()
        .map(|&p| -> CliResult<f64> {
            let budget = build_budget(cfg.with_snr_db(p))?;
            Ok(outage(protocol, gamma_th, &budget)?.p_outage)
        })
        .collect::<CliResult<Vec<f64>>>()?;
    let asym: Vec<Option<f64>> = match outage_asymptotic(protocol, gamma_th, &powers, &cfg) {
        Ok(points) => points.iter().map(|p| Some(p.p_outage)).collect(),
        Err(e) => {
            log::warn!("no high-power expansion at this threshold: {e}");
            vec![None; powers.len()]
        }
    };
    let fit: DiversityFit = diversity_fit(protocol, gamma_th, &cfg, &powers)?;
    let fit_lo = fit
        .power_grid
        .first()
        .map_or(f64::NAN, |&p| super::linear_to_db(p / cfg.n0));
    let fit_hi = fit
        .power_grid
        .last()
        .map_or(f64::NAN, |&p| super::linear_to_db(p / cfg.n0));
    let summary = Summary {
        protocol,
        gamma_th_db: gamma_db,
        slope: fit.slope,
        r_squared: fit.r_squared,
        fit_ps_db: [fit_lo, fit_hi],
    };

    let rows: Vec<PowerRow> = ps_db
        .iter()
        .zip(exact.iter().zip(&asym))
        .map(|(&ps, (&e, &a))| PowerRow {
            ps_db: ps,
            po_exact: e,
            po_asymptotic: a,
            ratio: a.filter(|&a| a > 0.0).map(|a| e / a),
        })
        .collect();

    let body = match format {
        Format::Json => json_text(&PowerDoc {
            summary: &summary,
            rows: &rows,
        }),
        Format::Csv => {
            let records: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.ps_db.to_string(),
                        prob_field(Some(r.po_exact)),
                        prob_field(r.po_asymptotic),
                        r.ratio.map(|v| format!("{v:e}")).unwrap_or_default(),
                    ]
                })
                .collect();
            let mut text = csv_text(&["ps_db", "po_exact", "po_asymptotic", "ratio"], &records)?;
            text.push_str("# ");
            text.push_str(&serde_json::to_string(&summary).expect("summary serializes"));
            text.push('\n');
            text
        }
    };
    Ok(Output::ok(body, args.out.clone().or(file.out)))
}
