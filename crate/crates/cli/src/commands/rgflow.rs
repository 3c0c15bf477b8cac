use super::{describe, finish, Report};
use crate::args::FlowModeChoice;
use crate::config::{ExperimentConfig, RgflowConfig};
use crate::error::CliError;
use crate::persist::RunDir;
use crate::record::ResultRecord;
use planarstat::rgflow::{eta_from_flow, eta_stationary, run_flow, BetaSpec, FlowOutcome};
use std::path::Path;

pub fn run(cfg: &RgflowConfig, out: &Path) -> Result<Report, CliError> {
    let spec = match cfg.mode {
        FlowModeChoice::Anchored => BetaSpec::anchored(cfg.coef, cfg.b),
        FlowModeChoice::Runaway => BetaSpec::runaway(cfg.coef, cfg.b),
    };
    let flow = run_flow(cfg.lambda0, &spec, cfg.gamma, cfg.hmin)?;
    let config = ExperimentConfig::Rgflow(cfg.clone());
    let dir = RunDir::create(out, config.kind(), &config.hash())?;
    let mut rec = ResultRecord::new(config, None);
    let rows: Vec<Vec<f64>> = flow.states.iter().map(|s| vec![s.h as f64, s.lambda, s.z]).collect();
    dir.write_plot("flow.dat", &["h", "lambda", "z"], &rows)?;
    rec.values.insert("lambda0".into(), cfg.lambda0);
    match flow.outcome {
        FlowOutcome::Converged { lambda_inf } => {
            let eta = eta_from_flow(&flow)?;
            rec.values.insert("lambda_inf".into(), lambda_inf);
            rec.values.insert("eta_flow".into(), eta);
            rec.values.insert("eta_stationary".into(), eta_stationary(lambda_inf, cfg.b, cfg.gamma));
            rec.sources.insert("lambda_inf".into(), "flow.dat: deepest lambda".into());
            rec.sources.insert("eta_flow".into(), "flow.dat: ln(Z_{h-1}/Z_h)/ln gamma at the deepest step".into());
            rec.sources.insert("eta_stationary".into(), "formula: ln(1 + b lambda_inf^2)/ln gamma".into());
            rec.notes.push("flow converged".into());
        }
        FlowOutcome::Diverged { h } => {
            rec.values.insert("diverged_at_h".into(), h as f64);
            rec.sources.insert("diverged_at_h".into(), "flow.dat: last row".into());
            rec.notes.push(format!("flow diverged at h = {h}"));
        }
        FlowOutcome::Unconverged { last_increment } => {
            rec.values.insert("last_increment".into(), last_increment);
            rec.notes.push(format!("flow reached hmin unconverged (last increment {last_increment:e})"));
        }
    }
    let summary = describe(&rec);
    finish(dir, rec, true, summary)
}
