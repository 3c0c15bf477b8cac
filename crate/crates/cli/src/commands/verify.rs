use super::{finish, Report};
use crate::config::{ExperimentConfig, VerifyConfig};
use crate::error::CliError;
use crate::persist::RunDir;
use crate::record::ResultRecord;
use planarstat::exactsol::{verify_relations_with, Estimate, RelationCheck};
use planarstat::{ExponentName, ExponentSet};
use std::collections::BTreeMap;
use std::path::Path;

/// Merges the records in order (later entries win) and checks every
/// relation whose inputs are present, plus the agreement of exponents that
/// several records provide.
pub fn run(cfg: &VerifyConfig, out: &Path) -> Result<Report, CliError> {
    let records: Vec<ResultRecord> = cfg.records.iter().map(|p| ResultRecord::load(p)).collect::<Result<_, _>>()?;
    let mut merged = ExponentSet::new();
    let mut seen: BTreeMap<ExponentName, (usize, Estimate)> = BTreeMap::new();
    let mut agreements = Vec::new();
    let mut sources = BTreeMap::new();
    for (i, rec) in records.iter().enumerate() {
        for (&name, &e) in &rec.exponents.values {
            if let Some((j, prev)) = seen.get(&name) {
                let sigma = prev.uncertainty.hypot(e.uncertainty);
                let threshold = cfg.tolerance + cfg.n_sigma * sigma;
                agreements.push(RelationCheck {
                    name: format!("{name} in records {j} and {i}"),
                    lhs: prev.value,
                    rhs: e.value,
                    residual: prev.value - e.value,
                    sigma,
                    threshold,
                    passed: (prev.value - e.value).abs() <= threshold,
                });
            }
            seen.insert(name, (i, e));
            merged.insert(name, e);
            let origin = rec.sources.get(name.as_str()).map_or("unrecorded", String::as_str);
            sources.insert(
                name.as_str().to_string(),
                format!("record {i} ({}): {origin}", cfg.records[i].display()),
            );
        }
    }
    let mut report = verify_relations_with(&merged, cfg.tolerance, cfg.n_sigma);
    agreements.append(&mut report.checks);
    report.checks = agreements;
    let passed = report.all_passed();
    let mut summary = report.to_string();
    summary.push_str(if passed { "verify: PASS\n" } else { "verify: FAIL\n" });

    let config = ExperimentConfig::Verify(cfg.clone());
    let dir = RunDir::create(out, config.kind(), &config.hash())?;
    let mut rec = ResultRecord::new(config, None);
    rec.exponents = merged;
    rec.sources = sources;
    rec.relations = Some(report);
    finish(dir, rec, passed, summary)
}
