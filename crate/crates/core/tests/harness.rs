use setid::harness::{
    run_missing_data_coverage, run_uniformity_study, ConfigMap, CoverageConfig, CoverageReport, UniformityConfig,
};
use setid::models::ModelTag;
use setid::Error;

fn tmp(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("setid-harness-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn single_replication_summary_equals_its_row() {
    let cfg = CoverageConfig { replications: 1, draws: 200, ..CoverageConfig::default() };
    let reports = run_missing_data_coverage(&cfg).unwrap();
    let r = &reports[0];
    assert_eq!(r.rows.len(), 1);
    let row = &r.rows[0];
    assert_eq!(r.summary.two_sided.p, f64::from(u8::from(row.covered_two_sided)));
    assert_eq!(r.summary.upper.p, f64::from(u8::from(row.covered_upper)));
    assert_eq!(r.summary.mean_q, row.q);
}

#[test]
fn reports_roundtrip_and_tampering_is_caught() {
    let cfg = CoverageConfig { replications: 20, draws: 200, ..CoverageConfig::default() };
    let reports = run_missing_data_coverage(&cfg).unwrap();
    let dir = tmp("roundtrip");
    let (rows, sum) = (dir.join("rows.csv"), dir.join("summary.csv"));
    CoverageReport::write_all(&reports, &rows, &sum).unwrap();
    let back = CoverageReport::load_all(&rows, &sum).unwrap();
    assert_eq!(back[0].summary.two_sided.p, reports[0].summary.two_sided.p);

    let text = std::fs::read_to_string(&sum).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut fields: Vec<String> = lines[1].split(',').map(String::from).collect();
    fields[6] = "0.123".into();
    lines[1] = fields.join(",");
    std::fs::write(&sum, lines.join("\n") + "\n").unwrap();
    assert!(matches!(CoverageReport::load_all(&rows, &sum), Err(Error::State(_))));
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = UniformityConfig { replications: 40, deltas: vec![0.05], ..UniformityConfig::default() };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let one = pool.install(|| run_uniformity_study(&cfg).unwrap());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let four = pool.install(|| run_uniformity_study(&cfg).unwrap());
    assert_eq!(one[0].row_records(), four[0].row_records());
}

#[test]
fn large_gap_makes_the_inner_set_nonempty() {
    // Δ = 5 at n = 100: H(√2·q − √(n/2)·Δ) is essentially zero.
    let cfg = UniformityConfig { model: ModelTag::IntervalMean, replications: 100, deltas: vec![5.0], ..UniformityConfig::default() };
    let r = run_uniformity_study(&cfg).unwrap();
    assert_eq!(r[0].summary.inner_empty.p, 0.0);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let m = ConfigMap::parse("n = 100\nreplicatons = 5\n").unwrap();
    assert!(matches!(CoverageConfig::from_map(&m), Err(Error::Config(_))));
    let m = ConfigMap::parse("tau = 1.5\n").unwrap();
    assert!(matches!(UniformityConfig::from_map(&m), Err(Error::Config(_))));
}
