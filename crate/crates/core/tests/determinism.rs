//! Outputs must not depend on the worker count.

use nds_pressure::cover::Problem;
use nds_pressure::emit::to_json;
use nds_pressure::measure::{local_pressure, DiscreteMeasure};
use nds_pressure::par::with_workers;
use nds_pressure::pressure::{relationship_report, PressureConfig};
use nds_pressure::space::PointSet;
use nds_pressure::systems::builtin::{builtin_system, SystemSpec};

fn report_json() -> String {
    let sys = builtin_system(&"circle-grid:q=24,steps=1;5;7".parse::<SystemSpec>().unwrap()).unwrap();
    let k = PointSet::all(sys.len());
    let pot = nds_pressure::systems::Potential::new(
        "cos",
        (0..24).map(|i| (i as f64 * std::f64::consts::TAU / 24.0).cos()).collect(),
    )
    .unwrap();
    let pr = Problem::new(&sys.space, &sys.maps, &k, &pot).unwrap();
    let config = PressureConfig::new(vec![0.3, 0.1], (1..=10).collect()).unwrap();
    let report = relationship_report(&pr, &config).unwrap();
    let mu = DiscreteMeasure::uniform(sys.len()).unwrap();
    let profile = local_pressure(&mu, &sys.space, &sys.maps, &pot, &k, &[0.3, 0.1], &[2, 4, 6]).unwrap();
    format!("{}\n{}", to_json(&report).unwrap(), to_json(&profile).unwrap())
}

#[test]
fn json_is_identical_across_worker_counts() {
    let one = with_workers(1, report_json).unwrap();
    let eight = with_workers(8, report_json).unwrap();
    assert_eq!(one, eight);
    assert_eq!(one, report_json());
}

#[test]
fn zero_workers_is_rejected() {
    assert!(with_workers(0, || ()).is_err());
}
