use coldbench_core::cost::{
    access_overhead, advise_tier, breakdown_percent, migration_cost, months_for_moveout_overhead,
    moveout_overhead_after, total_cost, CostError, CostScenario, Money, NominalLatency,
    PricingCatalog, TierPricing,
};
use proptest::prelude::*;

/// Straight arithmetic on the published rates, rounded per component.
fn oracle_cents(
    storage: f64,
    read: f64,
    per10k: f64,
    cap_gb: f64,
    months: f64,
    reads: f64,
    blob_gb: f64,
) -> i64 {
    let c = |d: f64| (d * 100.0).round() as i64;
    let objects = (cap_gb / blob_gb).ceil();
    c(storage * cap_gb * months) + c(read * cap_gb * reads) + c(per10k / 10_000.0 * objects * reads)
}

const PIB_GB: f64 = 1_048_576.0;

#[test]
fn tier_totals_match_arithmetic_oracle() {
    let cat = PricingCatalog::azure_2019();
    let s = CostScenario::one_pib_one_year_one_read();
    for (tier, st, rd, rq) in [
        ("hot", 0.0422, 0.0, 0.004),
        ("cool", 0.0334, 0.01, 0.01),
        ("archive", 0.0045, 0.02, 0.5),
    ] {
        let r = total_cost(cat.tier(tier).unwrap(), &s).unwrap();
        assert_eq!(
            r.total.cents(),
            oracle_cents(st, rd, rq, PIB_GB, 12.0, 1.0, 0.25),
            "{tier}"
        );
    }
}

#[test]
fn archive_request_charge_for_four_million_gets() {
    let cat = PricingCatalog::azure_2019();
    let r = total_cost(
        cat.tier("archive").unwrap(),
        &CostScenario::one_pib_one_year_one_read(),
    )
    .unwrap();
    assert_eq!(r.request_cost, Money(20_972));
}

#[test]
fn access_overhead_for_monthly_and_yearly_reads() {
    let cat = PricingCatalog::azure_2019();
    let archive = cat.tier("archive").unwrap();
    let yearly = access_overhead(archive, &CostScenario::one_pib_one_year_one_read()).unwrap();
    let monthly = access_overhead(archive, &CostScenario::new(PIB_GB, 12.0, 12.0, 0.25)).unwrap();
    assert!((yearly - 0.2722).abs() < 0.001, "{yearly}");
    assert!((monthly - 0.8178).abs() < 0.001, "{monthly}");
}

#[test]
fn zero_total_is_an_error() {
    let free = TierPricing::new("free", 0.0, 0.0, 0.0, NominalLatency::Millis(1.0));
    assert_eq!(
        access_overhead(&free, &CostScenario::one_pib_one_year_one_read()),
        Err(CostError::ZeroTotal)
    );
}

#[test]
fn moveout_points_from_closed_form() {
    let cat = PricingCatalog::azure_2019();
    let archive = cat.tier("archive").unwrap();
    // months m with 0.02 / (0.02 + 0.0045 m) = o
    for (pct, expected) in [(10, 40.0), (50, 4.444_444), (90, 0.493_827)] {
        let m = months_for_moveout_overhead(archive, f64::from(pct) / 100.0).unwrap();
        assert!((m - expected).abs() / expected < 1e-5, "{pct}%: {m}");
    }
    assert!(months_for_moveout_overhead(archive, 0.0).is_err());
    assert!(months_for_moveout_overhead(archive, 1.0).is_err());
}

#[test]
fn breakdown_rows() {
    let cat = PricingCatalog::azure_2019();
    let s = CostScenario::one_pib_one_year_one_read();
    let (hs, ha) = breakdown_percent(cat.tier("hot").unwrap(), &s).unwrap();
    assert!(hs > 99.99 && ha < 0.01);
    let (cs, _) = breakdown_percent(cat.tier("cool").unwrap(), &s).unwrap();
    assert!((cs - 97.56).abs() < 0.01, "{cs}");
}

#[test]
fn migration_with_and_without_egress() {
    let cat = PricingCatalog::azure_2019();
    let archive = cat.tier("archive").unwrap();
    let s = CostScenario::one_pib_one_year_one_read();
    let with = migration_cost(archive, &s, true).unwrap();
    let without = migration_cost(archive, &s, false).unwrap();
    // 0.02 + 0.05 per GB plus one GET per object
    assert_eq!(with.cost.cents(), 2_097_152 + 5_242_880 + 20_972);
    assert_eq!(without.cost.cents(), 2_097_152 + 20_972);
    assert!((with.equivalent_storage_months - 73_610.04 / 4_718.592).abs() < 1e-6);
}

#[test]
fn catalog_file_round_trip() {
    let cat = PricingCatalog::azure_2019();
    let back = PricingCatalog::from_toml_str(&cat.to_toml_string()).unwrap();
    assert_eq!(back, cat);
    let shipped = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/azure-2019.toml");
    assert_eq!(
        PricingCatalog::load(std::path::Path::new(shipped)).unwrap(),
        cat
    );
    assert!(matches!(
        PricingCatalog::from_toml_str("name = \"x\"\ntier = []"),
        Err(CostError::EmptyCatalog)
    ));
    assert!(matches!(
        cat.tier("glacier"),
        Err(CostError::UnknownTier(_))
    ));
}

#[test]
fn negative_rates_rejected() {
    let bad = TierPricing::new("bad", -1.0, 0.0, 0.0, NominalLatency::Hours);
    assert!(matches!(
        total_cost(&bad, &CostScenario::one_pib_one_year_one_read()),
        Err(CostError::InvalidPricing { .. })
    ));
}

fn arb_tier() -> impl Strategy<Value = TierPricing> {
    (0.0..0.1f64, 0.0..0.1f64, 0.0..1.0f64)
        .prop_map(|(s, r, q)| TierPricing::new("t", s, r, q, NominalLatency::Millis(1.0)))
}

proptest! {
    #[test]
    fn total_is_exact_sum_of_components(t in arb_tier(), cap in 1.0..1e6f64, m in 0.0..120.0f64, r in 0.0..20.0f64) {
        let rep = total_cost(&t, &CostScenario::new(cap, m, r, 0.25)).unwrap();
        prop_assert_eq!(
            rep.total.cents(),
            rep.storage_cost.cents() + rep.retrieval_cost.cents() + rep.request_cost.cents()
        );
    }

    #[test]
    fn storage_is_linear_in_months(t in arb_tier(), cap in 1.0..1e5f64, m in 0.0..60.0f64) {
        let one = total_cost(&t, &CostScenario::new(cap, m, 0.0, 1.0)).unwrap();
        let two = total_cost(&t, &CostScenario::new(cap, 2.0 * m, 0.0, 1.0)).unwrap();
        prop_assert!((two.storage_cost.cents() - 2 * one.storage_cost.cents()).abs() <= 1);
    }

    #[test]
    fn access_is_linear_in_reads(t in arb_tier(), cap in 1.0..1e5f64, r in 0.0..10.0f64) {
        let one = total_cost(&t, &CostScenario::new(cap, 1.0, r, 1.0)).unwrap();
        let three = total_cost(&t, &CostScenario::new(cap, 1.0, 3.0 * r, 1.0)).unwrap();
        prop_assert!((three.retrieval_cost.cents() - 3 * one.retrieval_cost.cents()).abs() <= 2);
        prop_assert!((three.request_cost.cents() - 3 * one.request_cost.cents()).abs() <= 2);
    }

    #[test]
    fn advice_is_sorted_argmin(tiers in prop::collection::vec(arb_tier(), 1..6), cap in 1.0..1e6f64, m in 0.0..60.0f64, r in 0.0..10.0f64) {
        let s = CostScenario::new(cap, m, r, 0.25);
        let ranked = advise_tier(&tiers, &s).unwrap();
        let brute = tiers.iter().map(|t| total_cost(t, &s).unwrap().total).min().unwrap();
        prop_assert_eq!(ranked[0].report.total, brute);
        prop_assert!(ranked.windows(2).all(|w| w[0].report.total <= w[1].report.total));
    }

    #[test]
    fn moveout_round_trip(st in 0.001..0.1f64, rd in 0.001..0.1f64, o in 0.01..0.99f64) {
        let t = TierPricing::new("t", st, rd, 0.0, NominalLatency::Hours);
        let m = months_for_moveout_overhead(&t, o).unwrap();
        prop_assert!((moveout_overhead_after(&t, m) - o).abs() < 1e-9);
    }
}
