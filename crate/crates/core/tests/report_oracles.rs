use attack_bundle::prelude::*;
use attack_bundle::report::{
    linspace, make_tables, norm_curve, success_fail_curve, tables_from_matrix, wat_underestimation_report,
    write_gap_csv, write_norm_curve_csv, write_rates_csv, write_sf_curve_csv,
};

mod common;
use common::{bundle_matrix, random_dataset, random_mlp};

fn attacks(eps: f64) -> Vec<AttackConfig> {
    vec![
        AttackConfig::pgd("pgd", eps, eps / 4.0, 10, 2, true),
        AttackConfig::uniform_noise("noise", eps, 10),
        AttackConfig::fgsm("fgsm", eps / 2.0),
    ]
}

#[test]
fn success_fail_curve_matches_a_direct_recount() {
    for case in 0..5u64 {
        let model = random_mlp(3, 3, 8, case);
        let data = random_dataset(40, 3, 3, case);
        let criterion = Criterion::max_confidence(0.5).unwrap();
        let r = bundle(
            &model,
            &data,
            &attacks(0.2),
            &criterion,
            &BudgetPolicy::exhaustive(),
            case,
        )
        .unwrap();
        let grid = linspace(0.5, 0.99, 50);
        let curve = success_fail_curve(&model, &data, &r, &grid).unwrap();
        assert_eq!(curve.points.len(), 50);
        for (p, &t) in curve.points.iter().zip(&grid) {
            let mut success = 0;
            let mut failure = 0;
            for (ex, chosen) in data.examples().iter().zip(&r.chosen) {
                let clean = model.predict(&ex.features).unwrap();
                if clean.predicted_class == ex.label && clean.confidence > t {
                    success += 1;
                }
                let adv = model.predict(&chosen.candidate.adversarial_input).unwrap();
                let wrong = adv
                    .probabilities
                    .iter()
                    .enumerate()
                    .filter(|&(c, _)| c != ex.label)
                    .map(|(_, &v)| v)
                    .fold(0.0, f64::max);
                if adv.predicted_class != ex.label && wrong > t {
                    failure += 1;
                }
            }
            assert_eq!(p.threshold, t);
            assert_eq!(p.success_rate, success as f64 / 40.0);
            assert_eq!(p.failure_rate, failure as f64 / 40.0);
        }
        for w in curve.points.windows(2) {
            assert!(w[1].success_rate <= w[0].success_rate);
            assert!(w[1].failure_rate <= w[0].failure_rate);
        }
    }
}

#[test]
fn binary_failure_at_one_half_equals_bundled_error() {
    let model = random_mlp(2, 2, 6, 31);
    let data = random_dataset(60, 2, 2, 31);
    let criterion = Criterion::max_confidence(0.5).unwrap();
    let r = bundle(
        &model,
        &data,
        &attacks(0.25),
        &criterion,
        &BudgetPolicy::exhaustive(),
        0,
    )
    .unwrap();
    let curve = success_fail_curve(&model, &data, &r, &[0.5]).unwrap();
    assert_eq!(curve.points[0].failure_rate, r.bundled_error_rate);
    assert!((curve.points[0].success_rate - (1.0 - r.clean_error_rate)).abs() < 1e-12);
}

#[test]
fn success_fail_curve_rejects_bad_grids() {
    let model = random_mlp(2, 2, 4, 1);
    let data = random_dataset(10, 2, 2, 1);
    let r = bundle(
        &model,
        &data,
        &attacks(0.1),
        &Criterion::Misclassify,
        &BudgetPolicy::exhaustive(),
        0,
    )
    .unwrap();
    for grid in [vec![0.49], vec![1.0], vec![0.7, 0.6], vec![f64::NAN]] {
        assert!(success_fail_curve(&model, &data, &r, &grid).is_err(), "{grid:?}");
    }
}

#[test]
fn norm_curve_matches_sorted_norm_counts() {
    for case in 0..5u64 {
        let model = random_mlp(3, 2, 8, 40 + case);
        let data = random_dataset(50, 3, 2, 40 + case);
        // Attacks at several radii so the chosen norms spread out.
        let suite: Vec<AttackConfig> = [0.05, 0.1, 0.2, 0.3]
            .iter()
            .map(|&e| AttackConfig::pgd(format!("pgd-{e}"), e, e / 4.0, 10, 1, true))
            .collect();
        let r = bundle(
            &model,
            &data,
            &suite,
            &Criterion::MinNorm,
            &BudgetPolicy::exhaustive(),
            case,
        )
        .unwrap();
        let eps = linspace(0.0, 0.3, 31);
        let curve = norm_curve(&r, &eps).unwrap();
        for p in &curve.points {
            let count = r
                .chosen
                .iter()
                .filter(|c| c.score.misclassified && c.score.perturbation_norm <= p.epsilon + 1e-9)
                .count();
            assert_eq!(p.error_rate, count as f64 / 50.0);
        }
        assert_eq!(curve.points[0].error_rate, r.clean_error_rate);
        assert_eq!(curve.points.last().unwrap().error_rate, r.bundled_error_rate);
        for w in curve.points.windows(2) {
            assert!(w[1].error_rate >= w[0].error_rate);
        }
    }
}

#[test]
fn norm_curve_needs_a_min_norm_bundle() {
    let model = random_mlp(2, 2, 4, 2);
    let data = random_dataset(10, 2, 2, 2);
    let r = bundle(
        &model,
        &data,
        &attacks(0.1),
        &Criterion::Misclassify,
        &BudgetPolicy::exhaustive(),
        0,
    )
    .unwrap();
    assert!(norm_curve(&r, &[0.0, 0.1]).is_err());
    let r = bundle(
        &model,
        &data,
        &attacks(0.1),
        &Criterion::MinNorm,
        &BudgetPolicy::exhaustive(),
        0,
    )
    .unwrap();
    assert!(norm_curve(&r, &[0.1, 0.0]).is_err());
    assert!(norm_curve(&r, &[-0.1]).is_err());
}

#[test]
fn tables_follow_the_outcome_matrix() {
    let r = bundle_matrix(&[
        vec![true, false, false],
        vec![false, true, false],
        vec![false, true, false],
    ]);
    let t = make_tables(&r);
    let rates: Vec<f64> = t.mat.per_attack.iter().map(|a| a.error_rate).collect();
    assert_eq!(rates, vec![1.0 / 3.0, 2.0 / 3.0, 0.0]);
    assert_eq!(t.mat.wat_max, None);
    assert_eq!(t.wat.wat_max, Some(2.0 / 3.0));
    assert_eq!(t.bundled.bundled_rate, Some(1.0));
    assert!(t.bundled.to_string().contains("bundled=100.00%"));

    let mut buf = Vec::new();
    write_rates_csv(&t, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "kind,attack_id,rate");
    assert!(lines.contains(&"WAT,max,0.6666666666666666"));
    assert!(lines.contains(&"BUNDLED,bundled,1"));
    assert!(lines.contains(&"MAT,none,0"));
}

#[test]
fn incomplete_columns_are_not_reported_as_exact() {
    let matrix = wat_gap_construction(3).unwrap();
    let t = tables_from_matrix(&matrix, Some(&[true, false, true]));
    let mut buf = Vec::new();
    write_rates_csv(&t, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.contains("MAT,attack-2,NA"));
    assert!(text.contains("WAT,max,NA"));
    assert!(t.mat.to_string().contains("(incomplete)"));
}

#[test]
fn gap_report_is_exact() {
    let rows = wat_underestimation_report(&[1, 2, 10, 100, 1000]).unwrap();
    for r in &rows {
        assert_eq!(r.bundled, 1.0);
        assert_eq!(r.wat, 1.0 / r.n as f64);
        assert_eq!(r.gap, 1.0 - 1.0 / r.n as f64);
    }
    assert!(wat_underestimation_report(&[0]).is_err());
    let mut buf = Vec::new();
    write_gap_csv(&rows[..2], &mut buf).unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap(),
        "n,wat,bundled,gap\n1,1,1,0\n2,0.5,1,0.5\n"
    );
}

#[test]
fn curve_writers_emit_headers() {
    let model = random_mlp(2, 2, 4, 3);
    let data = random_dataset(10, 2, 2, 3);
    let r = bundle(
        &model,
        &data,
        &attacks(0.1),
        &Criterion::MinNorm,
        &BudgetPolicy::exhaustive(),
        0,
    )
    .unwrap();
    let mut buf = Vec::new();
    write_sf_curve_csv(
        &success_fail_curve(&model, &data, &r, &[0.5, 0.9]).unwrap(),
        &mut buf,
    )
    .unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,success_rate,failure_rate\n0.5,"));
    assert_eq!(text.lines().count(), 3);
    let mut buf = Vec::new();
    write_norm_curve_csv(&norm_curve(&r, &[0.0, 0.1]).unwrap(), &mut buf).unwrap();
    assert!(String::from_utf8(buf)
        .unwrap()
        .starts_with("epsilon,error_rate\n0,"));
}

#[test]
fn linspace_hits_both_ends() {
    let v = linspace(0.5, 0.99, 50);
    assert_eq!((v[0], v[49], v.len()), (0.5, 0.99, 50));
    assert!(v.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(linspace(0.0, 1.0, 1), vec![0.0]);
    assert!(linspace(0.0, 1.0, 0).is_empty());
}
