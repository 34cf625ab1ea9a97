use alloc::vec;
use alloc::vec::Vec;

use super::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn normal_reference_points() {
    assert!(close(normal_cdf(0.0), 0.5, 1e-15));
    assert!(close(normal_cdf(1.96), 0.975_002_104_851_779_5, 1e-12));
    assert!(close(normal_quantile(0.975), 1.959_963_984_540_054, 1e-12));
    assert!(close(normal_quantile(1e-10), -6.361_340_902_404_056, 1e-9));
    assert!(close(normal_sf(1.0) + normal_cdf(1.0), 1.0, 1e-15));
}

#[test]
fn shapiro_matches_reference() {
    let x = [2.1, 3.4, 1.9, 5.6, 4.4, 3.3, 2.8, 3.9, 4.1, 2.5];
    let r = shapiro_wilk(&x).unwrap();
    assert_eq!(r.method, Method::ShapiroWilk);
    assert!(close(r.statistic, 0.965_734_534_711_740_8, 1e-4));
    assert!(close(r.p_value, 0.848_728_710_559_711_7, 1e-3));
}

#[test]
fn shapiro_three_points_closed_form() {
    let r = shapiro_wilk(&[1.0, 2.0, 4.0]).unwrap();
    assert!(close(r.statistic, 0.964_285_714_285_714_2, 1e-9));
    assert!(close(r.p_value, 0.636_886_845_028_968_9, 1e-6));
}

#[test]
fn shapiro_rejects_gross_outlier() {
    let mut x: Vec<f64> = (1..=19).map(f64::from).collect();
    x.push(100.0);
    let r = shapiro_wilk(&x).unwrap();
    assert!(close(r.statistic, 0.482_372_852_158_615, 1e-3));
    assert!(r.p_value < 1e-5);
}

#[test]
fn shapiro_input_errors() {
    assert!(matches!(
        shapiro_wilk(&[1.0, 2.0]),
        Err(StatsError::TooFewObservations { .. })
    ));
    assert_eq!(shapiro_wilk(&[3.0; 6]), Err(StatsError::ZeroVariance));
    assert_eq!(shapiro_wilk(&[1.0, f64::NAN, 2.0]), Err(StatsError::NonFinite));
}

#[test]
fn midranks_share_ties() {
    assert_eq!(midranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
}

#[test]
fn exact_distribution_sums_to_binomial() {
    let doubled: Vec<u64> = (1..=8).map(|r| 2 * r).collect();
    let dist = exact_rank_sum_distribution(&doubled, 3);
    assert_eq!(dist.iter().sum::<u64>(), 56);
}

#[test]
fn separated_triplets_exact() {
    let r = wilcoxon_rank_sum(
        &[1.0, 2.0, 3.0],
        &[4.0, 5.0, 6.0],
        WilcoxonMode::Exact { cap: 20 },
        Alternative::TwoSided,
    )
    .unwrap();
    assert_eq!(r.method, Method::WilcoxonRankSumExact);
    assert_eq!(r.statistic, 6.0);
    assert!(close(r.p_value, 0.1, 1e-12));
}

#[test]
fn exact_reference_value() {
    let a = [1.2, 3.4, 2.2, 5.1, 0.3, 4.4, 2.9];
    let b = [6.1, 5.5, 7.2, 3.3, 8.8, 6.6];
    let r = wilcoxon_rank_sum(&a, &b, WilcoxonMode::default(), Alternative::TwoSided).unwrap();
    assert!(close(r.p_value, 0.008_158_508_158_508_158, 1e-12));
}

#[test]
fn normal_approximation_with_ties() {
    let a = [1.0, 2.0, 2.0, 3.0, 5.0];
    let b = [2.0, 4.0, 4.0, 6.0, 7.0, 8.0];
    let r = wilcoxon_rank_sum(&a, &b, WilcoxonMode::Normal, Alternative::TwoSided).unwrap();
    assert_eq!(r.method, Method::WilcoxonRankSumNormal);
    assert!(close(r.p_value, 0.079_343_683_197_715_02, 1e-9));
}

#[test]
fn one_sided_halves_two_sided() {
    let a = [1.0, 2.0, 3.0];
    let b = [4.0, 5.0, 6.0];
    let mode = WilcoxonMode::Exact { cap: 20 };
    let less = wilcoxon_rank_sum(&a, &b, mode, Alternative::Less).unwrap();
    let greater = wilcoxon_rank_sum(&a, &b, mode, Alternative::Greater).unwrap();
    assert!(close(less.p_value, 0.05, 1e-12));
    assert!(close(greater.p_value, 1.0, 1e-12));
    assert!(!less.two_sided);
}

#[test]
fn auto_mode_switches_at_cap() {
    let a: Vec<f64> = (0..11).map(f64::from).collect();
    let b: Vec<f64> = (0..10).map(|i| f64::from(i) + 0.5).collect();
    let r = wilcoxon_rank_sum(&a, &b, WilcoxonMode::Auto { cap: 20 }, Alternative::TwoSided).unwrap();
    assert_eq!(r.method, Method::WilcoxonRankSumNormal);
    assert_eq!(
        wilcoxon_rank_sum(&a, &b, WilcoxonMode::Exact { cap: 20 }, Alternative::TwoSided),
        Err(StatsError::ExactTooLarge { n: 21, cap: 20 })
    );
}

#[test]
fn all_tied_gives_p_one() {
    let r = wilcoxon_rank_sum(&[2.0; 4], &[2.0; 5], WilcoxonMode::Normal, Alternative::TwoSided)
        .unwrap();
    assert_eq!(r.p_value, 1.0);
    let r = wilcoxon_rank_sum(&[2.0; 4], &[2.0; 5], WilcoxonMode::default(), Alternative::TwoSided)
        .unwrap();
    assert_eq!(r.p_value, 1.0);
}

#[test]
fn empty_group_rejected() {
    assert!(matches!(
        wilcoxon_rank_sum(&[], &[1.0], WilcoxonMode::default(), Alternative::TwoSided),
        Err(StatsError::TooFewObservations { .. })
    ));
}

#[test]
fn hinges_include_median_for_odd_n() {
    let (q1, m, q3) = tukey_hinges(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
    assert_eq!((q1, m, q3), (2.0, 3.0, 4.0));
    let (q1, m, q3) = tukey_hinges(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!((q1, m, q3), (1.5, 2.5, 3.5));
}

#[test]
fn outlier_tiers() {
    // Hinges 2 and 4, IQR 2: mild beyond 7, extreme beyond 10.
    let x = [1.0, 2.0, 3.0, 4.0, 5.0, 8.0, 11.0];
    let (q1, _, q3) = tukey_hinges(&x).unwrap();
    let l = iqr_outliers(&x).unwrap();
    assert_eq!(l.stats.iqr, q3 - q1);
    let upper_mild = q3 + 1.5 * l.stats.iqr;
    let upper_extreme = q3 + 3.0 * l.stats.iqr;
    for (v, tag) in x.iter().zip(&l.tags) {
        let want = if *v > upper_extreme {
            OutlierTag::Extreme
        } else if *v > upper_mild {
            OutlierTag::Mild
        } else {
            OutlierTag::Inlier
        };
        assert_eq!(*tag, want, "{v}");
    }
}

#[test]
fn zero_iqr_flags_nothing() {
    let l = iqr_outliers(&[5.0, 5.0, 5.0, 5.0, 9.0]).unwrap();
    assert!(l.tags.iter().all(|t| *t == OutlierTag::Inlier));
}

#[test]
fn outliers_need_four_values() {
    assert!(iqr_outliers(&[1.0, 2.0, 3.0]).is_err());
}

#[test]
fn table_flags_missing_cells() {
    let full = CellSamples {
        group1: vec![1.0, 2.0, 3.0],
        group2: vec![4.0, 5.0, 6.0],
    };
    let samples = vec![
        full.clone(),
        CellSamples {
            group1: vec![],
            group2: vec![1.0],
        },
        CellSamples {
            group1: vec![1.0],
            group2: vec![],
        },
        CellSamples::default(),
    ];
    let t = build_pvalue_table(&samples, 2, 2, &StatsConfig::default());
    assert_eq!(t.cells.len(), 4);
    assert!(close(t.cell(1, 1).unwrap().result.unwrap().p_value, 0.1, 1e-12));
    assert_eq!(t.cell(1, 2).unwrap().flag, Some(CellFlag::MissingGroup1));
    assert_eq!(t.cell(2, 1).unwrap().flag, Some(CellFlag::MissingGroup2));
    assert_eq!(t.cell(2, 2).unwrap().flag, Some(CellFlag::MissingBoth));
    assert_eq!(t.flagged().count(), 3);
    assert!(t.cell(0, 1).is_none());
    assert!(t.cell(3, 1).is_none());
}

#[test]
fn compare_groups_can_drop_outliers() {
    let g1 = [1.0, 2.0, 3.0, 4.0, 100.0];
    let g2 = [5.0, 6.0, 7.0, 8.0, 9.0];
    let keep = compare_groups(&g1, &g2, &StatsConfig::default()).unwrap();
    let drop = compare_groups(
        &g1,
        &g2,
        &StatsConfig {
            exclude_outliers: true,
            ..StatsConfig::default()
        },
    )
    .unwrap();
    assert_eq!(keep.n1, 5);
    assert_eq!(drop.n1, 4);
    assert!(drop.p_value < keep.p_value);
}
