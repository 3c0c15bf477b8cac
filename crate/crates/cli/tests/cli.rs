use planarstat::ExponentName;
use planarstat_cli::record::ResultRecord;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BETA_C: &str = "0.44068679350977147";

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_planarstat"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

/// Path printed on the `record:` line.
fn record_path(o: &Output) -> PathBuf {
    let text = String::from_utf8_lossy(&o.stdout);
    let line = text
        .lines()
        .find_map(|l| l.strip_prefix("record: "))
        .unwrap_or_else(|| panic!("no record line in {text}\n{}", String::from_utf8_lossy(&o.stderr)));
    PathBuf::from(line)
}

fn ok(out: &Path, args: &[&str]) -> ResultRecord {
    let o = run(out, args);
    assert_eq!(code(&o), 0, "{args:?}\n{}\n{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
    ResultRecord::load(&record_path(&o)).unwrap()
}

fn value(rec: &ResultRecord, name: ExponentName) -> (f64, f64) {
    let e = rec.exponents.get(name).unwrap_or_else(|| panic!("{name} missing: {:?}", rec.notes));
    (e.value, e.uncertainty)
}

#[test]
fn free_fermion_formulas_give_unit_energy_exponent() {
    let tmp = tempfile::tempdir().unwrap();
    let rec = ok(tmp.path(), &["exact", "formulas", "--lambda-tilde", "0"]);
    assert_eq!(value(&rec, ExponentName::Xe), (1.0, 0.0));
    assert_eq!(value(&rec, ExponentName::Xcr).0, 1.0);
    assert!(rec.sources["X_e"].contains("formula"));
    let rel = rec.relations.expect("relation table");
    assert!(rel.all_passed());
    assert!(rel.checks.iter().all(|c| c.residual.abs() < 1e-12));
}

#[test]
fn config_hash_survives_key_order_and_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.toml");
    let b = tmp.path().join("b.toml");
    std::fs::write(&a, "kind = \"rgflow\"\nlambda0 = 0.1\ngamma = 2.0\nmode = \"anchored\"\n").unwrap();
    std::fs::write(&b, "mode = \"anchored\"\ngamma = 2.0\nlambda0 = 0.1\nkind = \"rgflow\"\n").unwrap();
    let out = tmp.path().join("runs");
    let ra = ok(&out, &["rgflow", "--config", a.to_str().unwrap()]);
    let rb = ok(&out, &["rgflow", "--config", b.to_str().unwrap()]);
    assert_eq!(ra.meta.config_hash, rb.meta.config_hash);

    let first = run(&out, &["exact", "formulas", "--lambda-tilde", "0.2", "--lambda-inf", "-0.1"]);
    let rec = ResultRecord::load(&record_path(&first)).unwrap();
    let cfg = record_path(&first).with_file_name("config.toml");
    let again = ok(&out, &["exact", "formulas", "--config", cfg.to_str().unwrap()]);
    assert_eq!(rec.meta.config_hash, again.meta.config_hash);
    assert_eq!(rec.exponents, again.exponents);
}

#[test]
fn same_seed_reproduces_series_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["--seed", "7", "mc", "--model", "coupled-at", "--L", "8", "--beta", BETA_C, "--lambda", "0.1", "--sweeps", "400"];
    let first = run(tmp.path(), &args);
    let second = run(tmp.path(), &args);
    let (p, q) = (record_path(&first), record_path(&second));
    assert_ne!(p, q, "each run gets a fresh directory");
    let (a, b) = (ResultRecord::load(&p).unwrap(), ResultRecord::load(&q).unwrap());
    assert_eq!(a.meta.config_hash, b.meta.config_hash);
    assert_eq!(a.values, b.values);
    assert!(!a.series.is_empty());
    for s in &a.series {
        let x = std::fs::read(p.with_file_name(&s.path)).unwrap();
        let y = std::fs::read(q.with_file_name(&s.path)).unwrap();
        assert_eq!(x, y, "{}", s.name);
        let header = String::from_utf8_lossy(&x).lines().next().unwrap().to_string();
        assert_eq!(header, "r,mean,stderr,n");
    }
}

#[test]
fn two_by_two_coupled_ising_matches_enumeration() {
    let tmp = tempfile::tempdir().unwrap();
    let rec = ok(
        tmp.path(),
        &["--seed", "3", "mc", "--model", "coupled-at", "--L", "2", "--beta", "0.4", "--lambda", "0.3", "--sweeps", "40000", "--oracle-check"],
    );
    assert!(!rec.checks.is_empty());
    assert!(rec.checks.iter().all(|c| c.passed && c.pull.abs() < 3.0), "{:?}", rec.checks);
}

#[test]
fn four_by_four_dimers_match_transfer_matrix() {
    let tmp = tempfile::tempdir().unwrap();
    let rec = ok(
        tmp.path(),
        &["--seed", "5", "mc", "--model", "dimer", "--L", "4", "--lambda", "0.3", "--sweeps", "20000", "--chains", "4", "--oracle-check"],
    );
    assert!(rec.checks.len() > 5);
    assert!(rec.checks.iter().all(|c| c.passed), "{:?}", rec.checks);
}

#[test]
fn free_dimer_chain_reproduces_exact_amplitude() {
    let tmp = tempfile::tempdir().unwrap();
    let exact = ok(tmp.path(), &["exact", "dimer", "--L", "16", "--ensemble", "zero"]);
    let mc = ok(tmp.path(), &["--seed", "11", "mc", "--model", "dimer", "--L", "16", "--lambda", "0", "--sweeps", "20000", "--fit"]);
    let (a_exact, _) = value(&exact, ExponentName::A);
    let (a, da) = value(&mc, ExponentName::A);
    assert!((a - a_exact).abs() < 3.0 * da, "A = {a} +- {da}, exact {a_exact}");
    assert!((a - 1.0).abs() < 0.25, "A = {a}");
    assert!(mc.sources["A"].contains("height_variance.csv"));
}

#[test]
fn ising_point_record_passes_verify() {
    let tmp = tempfile::tempdir().unwrap();
    let mc = run(
        tmp.path(),
        &["--seed", "1", "mc", "--model", "coupled-at", "--L", "32", "--beta", BETA_C, "--lambda", "0", "--sweeps", "20000", "--fit"],
    );
    assert_eq!(code(&mc), 0);
    let p = record_path(&mc);
    let rec = ResultRecord::load(&p).unwrap();
    for name in [ExponentName::Xe, ExponentName::Xcr, ExponentName::Xp, ExponentName::Eta] {
        assert_eq!(rec.exponents.get(name).unwrap().provenance, planarstat::exactsol::Provenance::Fitted);
    }
    let v = ok(tmp.path(), &["verify", "--record", p.to_str().unwrap()]);
    let rel = v.relations.unwrap();
    assert!(rel.check("X_e * X_CR = 1").is_some_and(|c| c.passed));
    assert!(rel.check("X_P = X_e/4").is_some_and(|c| c.passed));
}

#[test]
fn exact_and_fitted_records_combine_in_verify() {
    let tmp = tempfile::tempdir().unwrap();
    let formulas = run(tmp.path(), &["exact", "formulas", "--lambda-tilde", "0"]);
    let dimer = run(tmp.path(), &["exact", "dimer", "--L", "32"]);
    let (f, d) = (record_path(&formulas), record_path(&dimer));
    let o = run(tmp.path(), &["verify", "--record", f.to_str().unwrap(), "--record", d.to_str().unwrap()]);
    let rec = ResultRecord::load(&record_path(&o)).unwrap();
    let rel = rec.relations.unwrap();
    let eta1 = rel.check("eta1 = A").expect("both dimer exponents present");
    assert!(eta1.sigma > 0.0);
    assert_eq!(code(&o), if rec.checks.iter().all(|c| c.passed) && rel.all_passed() { 0 } else { 1 });
}

#[test]
fn inconsistent_record_fails_verify() {
    let tmp = tempfile::tempdir().unwrap();
    let good = run(tmp.path(), &["exact", "formulas", "--lambda-tilde", "0.2"]);
    let mut rec = ResultRecord::load(&record_path(&good)).unwrap();
    let xe = rec.exponents.get(ExponentName::Xe).unwrap();
    rec.exponents.insert(ExponentName::Xcr, planarstat::exactsol::Estimate::exact(1.0 / xe.value + 1e-6));
    let dir = tmp.path().join("forged");
    std::fs::create_dir(&dir).unwrap();
    let forged = dir.join("record.toml");
    std::fs::write(&forged, rec.to_toml().unwrap()).unwrap();
    let o = run(tmp.path(), &["verify", "--record", forged.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("verify: FAIL"));
}

#[test]
fn configuration_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(tmp.path(), &["mc", "--L", "8"])), 2);
    assert_eq!(code(&run(tmp.path(), &["mc", "--model", "dimer", "--L", "7", "--lambda", "0"])), 2);
    assert_eq!(code(&run(tmp.path(), &["rgflow", "--lambda0", "0.7"])), 2);
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "kind = \"rgflow\"\nlambda0 = 0.1\nbogus = 1\n").unwrap();
    assert_eq!(code(&run(tmp.path(), &["rgflow", "--config", bad.to_str().unwrap()])), 2);
    let wrong = tmp.path().join("wrong.toml");
    std::fs::write(&wrong, "kind = \"mc\"\nlambda0 = 0.1\n").unwrap();
    assert_eq!(code(&run(tmp.path(), &["rgflow", "--config", wrong.to_str().unwrap()])), 2);
}

#[test]
fn missing_files_exit_with_four() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.csv");
    let o = run(tmp.path(), &["fit", "--series", missing.to_str().unwrap(), "--L", "16", "--kind", "power"]);
    assert_eq!(code(&o), 4);
    let o = run(tmp.path(), &["verify", "--record", tmp.path().join("none.toml").to_str().unwrap()]);
    assert_eq!(code(&o), 4);
    assert_eq!(code(&run(tmp.path(), &["rgflow", "--config", tmp.path().join("x.toml").to_str().unwrap()])), 4);
}

#[test]
fn fit_command_recovers_exponent_from_stored_series() {
    let tmp = tempfile::tempdir().unwrap();
    let dimer = run(tmp.path(), &["exact", "dimer", "--L", "32"]);
    let series = record_path(&dimer).with_file_name("dimer_staggered.csv");
    let rec = ok(
        tmp.path(),
        &["fit", "--series", series.to_str().unwrap(), "--L", "32", "--kind", "power", "--window", "3,10", "--as", "eta1", "--scale", "0.5"],
    );
    let (eta1, _) = value(&rec, ExponentName::Eta1);
    assert!((eta1 - 1.0).abs() < 0.1, "eta1 = {eta1}");
    assert!(rec.sources["eta1"].contains("input.csv"));
}
