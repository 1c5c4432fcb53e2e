//! Worked examples, each checked against a brute-force enumeration or a
//! closed form computed here rather than inside the crate.

mod common;

use approx::assert_abs_diff_eq;
use common::{brute_cover, brute_packing, dedupe, shift_bowen, Toy};
use nds_pressure::cover::{
    fixed_cover_sum, open_cover_sum, packing_sum, refined_packing_sum, separated_set, spanning_set, variable_cover_sum,
    vitali_subfamily, EngineOptions, Problem,
};
use nds_pressure::error::Error;
use nds_pressure::measure::{
    ball_mass, empirical_measure, invariance_defect, local_pressure, measure_cp_pressure, measure_pressure_over_set,
    non_wandering_set, pushforward, spanning_measure_pressure, DiscreteMeasure, Side, TestFunctionFamily,
};
use nds_pressure::oracle::{exact_cover_infimum, exact_packing_supremum, OracleBudget, WeightedBall};
use nds_pressure::pressure::{
    capacity_pressure, classical_pressure, critical_value, estimate, packing_pressure, pesin_pressure, ClassicalMode,
    PressureConfig, PressureKind,
};
use nds_pressure::space::{bowen_ball, bowen_distance, MetricSpace, PointSet};
use nds_pressure::systems::builtin::{builtin_system, System, SystemSpec};
use nds_pressure::systems::{birkhoff_sum, MapSequence, Potential};

const LN2: f64 = std::f64::consts::LN_2;

fn system(descriptor: &str) -> System {
    builtin_system(&descriptor.parse::<SystemSpec>().unwrap()).unwrap()
}

fn single_point() -> System {
    system("single-point:phi=0.3")
}

fn two_point() -> System {
    system("two-point")
}

fn shift(len: usize) -> System {
    system(&format!("cyclic-shift:L={len}"))
}

fn opts() -> EngineOptions {
    EngineOptions::default()
}

#[test]
fn bowen_distances() {
    let p = single_point();
    assert_eq!(bowen_distance(&p.space, &p.maps, 5, 0, 0).unwrap(), 0.0);
    let t = two_point();
    assert_eq!(bowen_distance(&t.space, &t.maps, 3, 0, 1).unwrap(), 1.0);
    let s = shift(8);
    let y = common::word(&[1, 0, 0, 0, 0, 0, 0, 0]);
    let expected = shift_bowen(8, std::f64::consts::E, 3, 0, y);
    assert_eq!(expected, 1.0);
    assert_abs_diff_eq!(bowen_distance(&s.space, &s.maps, 3, 0, y).unwrap(), expected, epsilon = 1e-15);
    assert!(matches!(bowen_distance(&s.space, &s.maps, 0, 0, y), Err(Error::InvalidArgument(_))));
}

#[test]
fn shift_distances_match_symbolwise_evaluation() {
    let s = shift(6);
    for x in (0..64).step_by(5) {
        for y in (0..64).step_by(3) {
            for n in [1, 2, 4] {
                let expected = shift_bowen(6, std::f64::consts::E, n, x, y);
                assert_abs_diff_eq!(bowen_distance(&s.space, &s.maps, n, x, y).unwrap(), expected, epsilon = 1e-15);
            }
        }
    }
}

#[test]
fn bowen_balls() {
    let t = two_point();
    assert_eq!(bowen_ball(&t.space, &t.maps, 1, 0.5, 0, false).unwrap().members.members(), &[0]);
    assert_eq!(bowen_ball(&t.space, &t.maps, 1, 1.0, 0, true).unwrap().members.members(), &[0, 1]);
    assert!(bowen_ball(&t.space, &t.maps, 1, 0.0, 0, false).is_err());

    let s = shift(8);
    let ball = bowen_ball(&s.space, &s.maps, 3, 0.5, 0, false).unwrap();
    let prefix: Vec<usize> = (0..256).filter(|&w| common::symbols(w, 8)[..3] == [0, 0, 0]).collect();
    assert_eq!(prefix.len(), 32);
    assert_eq!(ball.members.members(), prefix.as_slice());
}

#[test]
fn compositions_and_birkhoff_sums() {
    let c = system("n-cycle:n=3");
    assert_eq!(c.maps.compose(1, 3).unwrap(), vec![0, 1, 2]);
    assert_eq!(c.maps.compose(1, 0).unwrap(), vec![0, 1, 2]);
    let phi = Potential::new("phi", vec![1.0, 2.0, 4.0]).unwrap();
    let orbit = c.maps.orbit_of(0, 3).unwrap();
    let expected: f64 = orbit.iter().map(|&x| phi.at(x)).sum();
    assert_eq!(expected, 7.0);
    assert_eq!(birkhoff_sum(&phi, &c.maps, 3, 0).unwrap(), expected);
    let p = single_point();
    assert_abs_diff_eq!(birkhoff_sum(&p.potential, &p.maps, 10, 0).unwrap(), 3.0, epsilon = 1e-12);
}

#[test]
fn spanning_and_separated_counts() {
    let p = single_point();
    let k1 = PointSet::all(1);
    let pr = Problem::new(&p.space, &p.maps, &k1, &p.potential).unwrap();
    assert_eq!(separated_set(&pr, 7, 0.1, &opts()).unwrap().cardinality, 1);

    let t = two_point();
    let k = PointSet::all(2);
    let pr = Problem::new(&t.space, &t.maps, &k, &t.potential).unwrap();
    let toy = Toy::line(&[0.0, 1.0], vec![vec![0, 1]], vec![0.0; 2]);
    for (n, eps) in [(3, 2.0), (3, 0.5), (2, 0.5)] {
        assert_eq!(spanning_set(&pr, n, eps, &opts()).unwrap().cardinality, toy.min_spanning(&[0, 1], n, eps));
        assert_eq!(separated_set(&pr, n, eps, &opts()).unwrap().cardinality, toy.max_separated(&[0, 1], n, eps));
    }
    assert_eq!(spanning_set(&pr, 3, 2.0, &opts()).unwrap().cardinality, 1);
    assert_eq!(spanning_set(&pr, 3, 0.5, &opts()).unwrap().cardinality, 2);

    // Distinct 4-prefixes sit at d_4 = 1 and each prefix class is one ball.
    let s = shift(8);
    let ks = PointSet::all(256);
    let pr = Problem::new(&s.space, &s.maps, &ks, &s.potential).unwrap();
    let mut prefixes: Vec<Vec<usize>> = (0..256).map(|w| common::symbols(w, 8)[..4].to_vec()).collect();
    prefixes.sort();
    prefixes.dedup();
    assert_eq!(spanning_set(&pr, 4, 0.5, &opts()).unwrap().cardinality, prefixes.len());
    assert_eq!(separated_set(&pr, 4, 0.5, &opts()).unwrap().cardinality, prefixes.len());
}

#[test]
fn fixed_covers() {
    let p = single_point();
    let k1 = PointSet::all(1);
    let pr = Problem::new(&p.space, &p.maps, &k1, &p.potential).unwrap();
    let sum = fixed_cover_sum(&pr, 10, 0.5, &opts()).unwrap();
    assert_abs_diff_eq!(sum.value(), 3f64.exp(), epsilon = 1e-9);
    assert_eq!(sum.witnesses.len(), 1);

    let t = two_point();
    let k = PointSet::all(2);
    let pr = Problem::new(&t.space, &t.maps, &k, &t.potential).unwrap();
    assert_abs_diff_eq!(fixed_cover_sum(&pr, 5, 0.5, &opts()).unwrap().value(), 2.0, epsilon = 1e-12);

    let coords = [0.0, 1.0, 2.0, 3.0];
    let space = MetricSpace::line(coords.to_vec()).unwrap();
    let maps = MapSequence::identity(4).unwrap();
    let zero = Potential::zero(4);
    let k = PointSet::all(4);
    let pr = Problem::new(&space, &maps, &k, &zero).unwrap();
    let toy = Toy::line(&coords, vec![vec![0, 1, 2, 3]], vec![0.0; 4]);
    let brute = brute_cover(&toy.cover_candidates(1.1, 0.0, 1, 1), &[0, 1, 2, 3]);
    assert_abs_diff_eq!(brute.exp(), 2.0, epsilon = 1e-12);
    let sum = fixed_cover_sum(&pr, 1, 1.1, &opts()).unwrap();
    assert!(sum.exact);
    assert_abs_diff_eq!(sum.log_value, brute, epsilon = 1e-12);
}

#[test]
fn variable_covers() {
    let p = single_point();
    let k1 = PointSet::all(1);
    let pr = Problem::new(&p.space, &p.maps, &k1, &p.potential).unwrap();
    for (n, n_max) in [(1, 1), (3, 9), (10, 20)] {
        assert_abs_diff_eq!(variable_cover_sum(&pr, 0.5, 0.3, n, n_max, &opts()).unwrap().value(), 1.0, epsilon = 1e-9);
    }
    // The infimum takes the longest admissible horizon when -0.2 n decreases.
    let sum = variable_cover_sum(&pr, 0.5, 0.5, 10, 20, &opts()).unwrap();
    assert_abs_diff_eq!(sum.value(), (-0.2f64 * 20.0).exp(), epsilon = 1e-12);
    assert_eq!(sum.witnesses[0].n, 20);
    assert!(variable_cover_sum(&pr, 0.5, 0.5, 5, 4, &opts()).is_err());

    let t = two_point();
    let k = PointSet::all(2);
    let pr = Problem::new(&t.space, &t.maps, &k, &t.potential).unwrap();
    let toy = Toy::line(&[0.0, 1.0], vec![vec![0, 1]], vec![0.0; 2]);
    let cands = toy.cover_candidates(0.5, 0.0, 1, 3);
    assert_eq!(cands.len(), 6);
    let brute = brute_cover(&cands, &[0, 1]);
    assert_abs_diff_eq!(brute.exp(), 2.0, epsilon = 1e-12);
    assert_abs_diff_eq!(variable_cover_sum(&pr, 0.5, 0.0, 1, 3, &opts()).unwrap().log_value, brute, epsilon = 1e-12);
}

#[test]
fn packings() {
    let t = two_point();
    let k = PointSet::all(2);
    let pr = Problem::new(&t.space, &t.maps, &k, &t.potential).unwrap();
    assert_abs_diff_eq!(packing_sum(&pr, 0.5, 0.0, 1, 1, &opts()).unwrap().value(), 2.0, epsilon = 1e-12);
    assert!(packing_sum(&pr, 0.5, 0.0, 2, 1, &opts()).is_err());

    let p = single_point();
    let k1 = PointSet::all(1);
    let pr1 = Problem::new(&p.space, &p.maps, &k1, &p.potential).unwrap();
    assert_abs_diff_eq!(packing_sum(&pr1, 0.5, 0.3, 4, 9, &opts()).unwrap().value(), 1.0, epsilon = 1e-9);

    // 256 closed balls, but only the eight 3-prefix classes as distinct sets.
    let s = shift(8);
    let ks = PointSet::all(256);
    let prs = Problem::new(&s.space, &s.maps, &ks, &s.potential).unwrap();
    let mut cands = Vec::new();
    for x in 0..256 {
        let members: Vec<usize> = (0..256).filter(|&y| shift_bowen(8, std::f64::consts::E, 3, x, y) <= 0.5).collect();
        cands.push((members, 0.0));
    }
    let distinct = dedupe(&cands, false);
    assert_eq!(distinct.len(), 8);
    let brute = brute_packing(&distinct);
    assert_abs_diff_eq!(brute.exp(), 8.0, epsilon = 1e-9);
    assert_abs_diff_eq!(packing_sum(&prs, 0.5, 0.0, 3, 3, &opts()).unwrap().log_value, brute, epsilon = 1e-9);
}

#[test]
fn packings_match_enumeration_on_a_line() {
    let coords = [0.0, 0.4, 0.9, 1.5, 1.6];
    let tables = vec![vec![1, 2, 3, 4, 0], vec![4, 3, 2, 1, 0]];
    let phi = vec![0.2, -0.5, 0.1, 0.7, -0.3];
    let toy = Toy::line(&coords, tables.clone(), phi.clone());
    let space = MetricSpace::line(coords.to_vec()).unwrap();
    let maps = MapSequence::from_tables(tables, 0).unwrap();
    let pot = Potential::new("phi", phi).unwrap();
    for k_members in [vec![0, 1, 2, 3, 4], vec![1, 3]] {
        let k = PointSet::new(5, k_members.clone()).unwrap();
        let pr = Problem::new(&space, &maps, &k, &pot).unwrap();
        for s in [-0.5, 0.0, 0.8] {
            for eps in [0.45, 0.7] {
                let brute = brute_packing(&toy.packing_candidates(&k_members, eps, s, 1, 3));
                let got = packing_sum(&pr, eps, s, 1, 3, &opts()).unwrap();
                assert!(got.exact);
                assert_abs_diff_eq!(got.log_value, brute, epsilon = 1e-9);
                let brute = brute_cover(&toy.cover_candidates(eps, s, 1, 2), &k_members);
                let got = variable_cover_sum(&pr, eps, s, 1, 2, &opts()).unwrap();
                assert!(got.exact);
                assert_abs_diff_eq!(got.log_value, brute, epsilon = 1e-9);
            }
        }
    }
}

#[test]
fn refined_packings() {
    let t = two_point();
    let k = PointSet::all(2);
    let pr = Problem::new(&t.space, &t.maps, &k, &t.potential).unwrap();
    let plain = packing_sum(&pr, 0.5, 0.0, 1, 1, &opts()).unwrap();
    let one = refined_packing_sum(&pr, 0.5, 0.0, 1, 1, 1, &opts()).unwrap();
    assert_abs_diff_eq!(one.log_value, plain.log_value, epsilon = 1e-12);
    assert_abs_diff_eq!(refined_packing_sum(&pr, 0.5, 0.0, 1, 1, 2, &opts()).unwrap().value(), 2.0, epsilon = 1e-12);

    let p = single_point();
    let k1 = PointSet::all(1);
    let pr1 = Problem::new(&p.space, &p.maps, &k1, &p.potential).unwrap();
    for parts in 1..4 {
        assert_abs_diff_eq!(refined_packing_sum(&pr1, 0.5, 0.3, 2, 6, parts, &opts()).unwrap().value(), 1.0, epsilon = 1e-9);
    }
}

#[test]
fn open_covers() {
    let t = two_point();
    let k = PointSet::all(2);
    let pr = Problem::new(&t.space, &t.maps, &k, &t.potential).unwrap();
    let singles = vec![PointSet::single(2, 0).unwrap(), PointSet::single(2, 1).unwrap()];
    assert_abs_diff_eq!(open_cover_sum(&pr, 2, &singles, &opts()).unwrap().value(), 2.0, epsilon = 1e-12);
    assert!(open_cover_sum(&pr, 2, &singles[..1], &opts()).is_err());

    let p = single_point();
    let k1 = PointSet::all(1);
    let pr1 = Problem::new(&p.space, &p.maps, &k1, &p.potential).unwrap();
    let whole = vec![PointSet::all(1)];
    assert_abs_diff_eq!(open_cover_sum(&pr1, 10, &whole, &opts()).unwrap().value(), 3f64.exp(), epsilon = 1e-9);

    let c = system("n-cycle:n=3");
    let k3 = PointSet::all(3);
    let pr3 = Problem::new(&c.space, &c.maps, &k3, &c.potential).unwrap();
    let singles: Vec<PointSet> = (0..3).map(|x| PointSet::single(3, x).unwrap()).collect();
    assert_abs_diff_eq!(open_cover_sum(&pr3, 3, &singles, &opts()).unwrap().value(), 3.0, epsilon = 1e-12);
}

#[test]
fn vitali_selection() {
    let space = MetricSpace::line(vec![0.0, 0.5, 3.0]).unwrap();
    let maps = MapSequence::identity(3).unwrap();
    let balls: Vec<_> = (0..3).map(|c| bowen_ball(&space, &maps, 1, 1.0, c, false).unwrap()).collect();
    // Direct interval check: (-1, 1) meets (-0.5, 1.5); (2, 4) meets neither.
    let kept = vitali_subfamily(&space, &maps, &balls).unwrap();
    let centers: Vec<usize> = kept.iter().map(|b| b.center).collect();
    assert_eq!(centers, vec![0, 2]);
    let single = vitali_subfamily(&space, &maps, &balls[2..]).unwrap();
    assert_eq!(single.len(), 1);
    let apart = vitali_subfamily(&space, &maps, &[balls[0].clone(), balls[2].clone()]).unwrap();
    assert_eq!(apart.len(), 2);
    assert!(vitali_subfamily(&space, &maps, &[]).is_err());
}

fn ball(center: usize, members: &[usize], w: f64) -> WeightedBall {
    WeightedBall {
        center,
        n: 1,
        members: members.to_vec(),
        log_weight: w.ln(),
    }
}

#[test]
fn oracle_examples() {
    let budget = OracleBudget::default();
    let disjoint = [ball(0, &[0], 0.7), ball(1, &[1], 1.9)];
    assert_abs_diff_eq!(exact_packing_supremum(&disjoint, &budget).unwrap().value(), 2.6, epsilon = 1e-12);
    let overlapping = [ball(0, &[0, 1], 0.7), ball(1, &[1], 1.9)];
    assert_abs_diff_eq!(exact_packing_supremum(&overlapping, &budget).unwrap().value(), 1.9, epsilon = 1e-12);

    // Two-point system, closed balls of radius 0.5 at horizons 1 and 2.
    let four = [ball(0, &[0], 1.0), ball(1, &[1], 1.0), ball(0, &[0], 1.0), ball(1, &[1], 1.0)];
    assert_abs_diff_eq!(exact_packing_supremum(&four, &budget).unwrap().value(), 2.0, epsilon = 1e-12);

    let k = PointSet::single(3, 1).unwrap();
    let cands = [ball(0, &[0, 1], 0.5), ball(1, &[1, 2], 0.2), ball(2, &[2], 0.01)];
    assert_abs_diff_eq!(exact_cover_infimum(&cands, &k, &budget).unwrap().value(), 0.2, epsilon = 1e-12);

    let line: Vec<WeightedBall> = [[0, 1], [0, 1], [1, 2], [2, 3]]
        .iter()
        .enumerate()
        .map(|(c, m)| ball(c, m, 1.0))
        .collect();
    let all = PointSet::all(4);
    assert_abs_diff_eq!(exact_cover_infimum(&line, &all, &budget).unwrap().value(), 2.0, epsilon = 1e-12);

    let tiny = OracleBudget {
        max_candidates: 2,
        ..OracleBudget::default()
    };
    assert!(matches!(exact_cover_infimum(&line, &all, &tiny), Err(Error::Capacity(_))));
}

#[test]
fn critical_values() {
    let crit = critical_value(|s| Ok((10.0 * (0.3 - s)).exp()), (-5.0, 5.0), 1e-9, 1.0).unwrap();
    assert_abs_diff_eq!(crit.s, 0.3, epsilon = 1e-8);
    assert!(matches!(critical_value(|_| Ok(0.0), (-5.0, 5.0), 1e-9, 1.0), Err(Error::NoJump { .. })));

    let p = single_point();
    let k1 = PointSet::all(1);
    let pr = Problem::new(&p.space, &p.maps, &k1, &p.potential).unwrap();
    let crit = critical_value(|s| variable_cover_sum(&pr, 0.5, s, 4, 12, &opts()).map(|v| v.value()), (-5.0, 5.0), 1e-9, 1.0).unwrap();
    assert_abs_diff_eq!(crit.s, 0.3, epsilon = 1e-6);
}

#[test]
fn single_point_pressures() {
    let p = single_point();
    let k1 = PointSet::all(1);
    let pr = Problem::new(&p.space, &p.maps, &k1, &p.potential).unwrap();
    let config = PressureConfig::new(vec![0.5, 0.1], (1..=6).collect()).unwrap();
    for kind in PressureKind::ALL {
        assert_abs_diff_eq!(estimate(&pr, &config, kind).unwrap().value, 0.3, epsilon = 1e-6);
    }
    let spanning = classical_pressure(&pr, &config, ClassicalMode::Spanning).unwrap();
    assert!(spanning.per_scale_table.iter().all(|e| (e.normalized - 0.3).abs() < 1e-12));
}

#[test]
fn two_point_pressures_decay_like_one_over_n() {
    let t = two_point();
    let k = PointSet::all(2);
    let pr = Problem::new(&t.space, &t.maps, &k, &t.potential).unwrap();
    let config = PressureConfig::new(vec![0.5], vec![10]).unwrap();
    assert_abs_diff_eq!(classical_pressure(&pr, &config, ClassicalMode::Separated).unwrap().value, LN2 / 10.0, epsilon = 1e-12);
    assert_abs_diff_eq!(capacity_pressure(&pr, &config, true).unwrap().value, LN2 / 10.0, epsilon = 1e-12);
    for n in [4, 10, 20] {
        let config = PressureConfig::new(vec![0.5], vec![n]).unwrap().with_window(n, n + 8);
        let pesin = pesin_pressure(&pr, &config).unwrap().value;
        assert!(pesin <= LN2 / n as f64 + 1e-6, "n={n}: {pesin}");
        assert!(pesin >= -1e-6);
    }
}

#[test]
fn shift_pressures_near_log_two() {
    let s = shift(12);
    let k = PointSet::all(s.len());
    let pr = Problem::new(&s.space, &s.maps, &k, &s.potential).unwrap();
    let config = PressureConfig::new(vec![0.5], (1..=8).collect()).unwrap().with_window(4, 8);
    let classical = classical_pressure(&pr, &config, ClassicalMode::Separated).unwrap();
    for e in &classical.per_scale_table {
        assert_abs_diff_eq!(e.normalized, LN2, epsilon = 1e-9);
    }
    assert_abs_diff_eq!(capacity_pressure(&pr, &config, true).unwrap().value, LN2, epsilon = 0.05);
    assert_abs_diff_eq!(pesin_pressure(&pr, &config).unwrap().value, LN2, epsilon = 0.05);
    assert_abs_diff_eq!(packing_pressure(&pr, &config.clone().with_parts(1)).unwrap().value, LN2, epsilon = 0.05);
}

#[test]
fn three_cycle_packing_vanishes_with_the_window() {
    // Three disjoint balls at every horizon: the sum 3 e^{-sN} crosses 1 at
    // s = ln 3 / N, which tends to zero.
    let c = system("n-cycle:n=3");
    let k = PointSet::all(3);
    let pr = Problem::new(&c.space, &c.maps, &k, &c.potential).unwrap();
    let mut last = f64::INFINITY;
    for n in [6, 12, 24] {
        let config = PressureConfig::new(vec![0.1], vec![n]).unwrap().with_window(n, n + 8);
        let v = packing_pressure(&pr, &config).unwrap().value;
        assert!(v >= -1e-6 && v <= 3f64.ln() / n as f64 + 1e-6, "n={n}: {v}");
        assert!(v <= last);
        last = v;
    }
}

#[test]
fn measure_examples() {
    let c = system("n-cycle:n=3");
    let mu = DiscreteMeasure::new("mu", vec![0.5, 0.25, 0.25]).unwrap();
    let table = c.maps.map(1).unwrap();
    let expected: Vec<f64> = (0..3)
        .map(|y| (0..3).filter(|&x| table[x] == y).map(|x| mu.weights()[x]).sum())
        .collect();
    assert_eq!(pushforward(&mu, &table).unwrap().weights(), expected.as_slice());
    assert_eq!(pushforward(&mu, &[0, 1, 2]).unwrap().weights(), mu.weights());
    let collapse = pushforward(&DiscreteMeasure::uniform(2).unwrap(), &[1, 1]).unwrap();
    assert_eq!(collapse.weights(), &[0.0, 1.0]);

    let family = TestFunctionFamily::standard(&c.space).unwrap();
    assert_eq!(invariance_defect(&DiscreteMeasure::uniform(3).unwrap(), &c.maps, 5, &family).unwrap(), 0.0);
    assert!(invariance_defect(&mu, &c.maps, 1, &family).unwrap() > 0.0);

    let cycle = empirical_measure(&c.maps, 0, 3).unwrap();
    for w in cycle.weights() {
        assert_abs_diff_eq!(*w, 1.0 / 3.0, epsilon = 1e-12);
    }
    let t = system("two-point:collapse=true");
    let emp = empirical_measure(&t.maps, 0, 4).unwrap();
    assert_abs_diff_eq!(emp.weights()[0], 0.25, epsilon = 1e-12);
    assert_abs_diff_eq!(emp.weights()[1], 0.75, epsilon = 1e-12);
    assert_eq!(non_wandering_set(&t.space, &t.maps, 8, 0.4).unwrap().members(), &[1]);
    assert_eq!(non_wandering_set(&c.space, &c.maps, 8, 0.4).unwrap().members(), &[0, 1, 2]);
}

#[test]
fn bernoulli_ball_masses_and_local_pressures() {
    let s = shift(8);
    let coding = s.coding.clone().unwrap();
    let half = DiscreteMeasure::bernoulli(&coding, 0.5).unwrap();
    for x in (0..256).step_by(17) {
        let b = bowen_ball(&s.space, &s.maps, 3, 0.5, x, false).unwrap();
        assert_abs_diff_eq!(ball_mass(&half, &b).unwrap(), 0.125, epsilon = 1e-12);
    }

    let s = shift(12);
    let coding = s.coding.clone().unwrap();
    let ns: Vec<usize> = (1..=8).collect();
    let half = DiscreteMeasure::bernoulli(&coding, 0.5).unwrap();
    let sample = PointSet::new(s.len(), vec![0, 5, 1234, 4095]).unwrap();
    let prof = local_pressure(&half, &s.space, &s.maps, &s.potential, &sample, &[0.5], &ns).unwrap();
    for row in &prof.per_point {
        for v in row {
            assert_abs_diff_eq!(*v, LN2, epsilon = 1e-12);
        }
    }
    // All-zeros prefix of length n has mass (3/4)^n under p(1) = 1/4.
    let quarter = DiscreteMeasure::bernoulli(&coding, 0.25).unwrap();
    let origin = PointSet::single(s.len(), 0).unwrap();
    let prof = local_pressure(&quarter, &s.space, &s.maps, &s.potential, &origin, &[0.5], &ns).unwrap();
    for (i, &n) in ns.iter().enumerate() {
        let expected = -(0.75f64.powi(n as i32)).ln() / n as f64;
        assert_abs_diff_eq!(prof.per_point[0][i], expected, epsilon = 1e-12);
    }
    assert_abs_diff_eq!(prof.upper_at(0).unwrap(), (4.0f64 / 3.0).ln(), epsilon = 1e-12);

    let all = PointSet::all(s.len());
    let prof = local_pressure(&half, &s.space, &s.maps, &s.potential, &all, &[0.5], &ns).unwrap();
    let integral = measure_pressure_over_set(&half, &all, &prof, Side::Upper).unwrap();
    assert_abs_diff_eq!(integral.value, LN2, epsilon = 1e-9);
    let dirac = DiscreteMeasure::dirac(s.len(), 7).unwrap();
    let elsewhere = PointSet::single(s.len(), 8).unwrap();
    let prof = local_pressure(&dirac, &s.space, &s.maps, &s.potential, &PointSet::single(s.len(), 7).unwrap(), &[0.5], &ns).unwrap();
    assert_eq!(measure_pressure_over_set(&dirac, &elsewhere, &prof, Side::Lower).unwrap().value, 0.0);
}

#[test]
fn measure_pressures_on_the_shift() {
    let s = shift(12);
    let coding = s.coding.clone().unwrap();
    let config = PressureConfig::new(vec![0.5], (1..=8).collect()).unwrap().with_window(4, 8);
    let half = DiscreteMeasure::bernoulli(&coding, 0.5).unwrap();
    let packing = measure_cp_pressure(&half, &s.space, &s.maps, &s.potential, PressureKind::Packing, &[0.0], &config).unwrap();
    assert_abs_diff_eq!(packing.value, LN2, epsilon = 0.05);
    let spanning = spanning_measure_pressure(&half, &s.space, &s.maps, &s.potential, &[0.0], &config).unwrap();
    assert_abs_diff_eq!(spanning.value, LN2, epsilon = 0.05);

    let dirac = DiscreteMeasure::dirac(s.len(), 0).unwrap();
    let packing = measure_cp_pressure(&dirac, &s.space, &s.maps, &s.potential, PressureKind::Packing, &[0.0], &config).unwrap();
    assert_abs_diff_eq!(packing.value, 0.0, epsilon = 1e-6);
    let spanning = spanning_measure_pressure(&dirac, &s.space, &s.maps, &s.potential, &[0.0], &config).unwrap();
    assert_abs_diff_eq!(spanning.value, 0.0, epsilon = 1e-6);
    assert!(measure_cp_pressure(&dirac, &s.space, &s.maps, &s.potential, PressureKind::Classical, &[0.0], &config).is_err());
}
