//! Cloud archive cost model.
//!
//! `total = storage_rate * capacity * months + (retrieval_rate * capacity +
//! get_rate * blobs / 10_000) * full_reads`, with egress billed separately.
//! Every component is rounded to whole cents once; totals are exact sums of
//! the rounded components.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::PIB_IN_GB;

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error("invalid pricing for tier {tier:?}: {reason}")]
    InvalidPricing { tier: String, reason: String },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("cost exceeds the representable range ({0})")]
    Overflow(&'static str),
    #[error("access overhead is undefined when the total cost is zero")]
    ZeroTotal,
    #[error("overhead must lie strictly between 0 and 1, got {0}")]
    OverheadOutOfRange(f64),
    #[error("tier catalog is empty")]
    EmptyCatalog,
    #[error("unknown tier {0:?}")]
    UnknownTier(String),
    #[error("failed to read catalog {path}: {message}")]
    Io { path: String, message: String },
    #[error("failed to parse catalog: {0}")]
    Parse(String),
}

/// Whole cents.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Money(pub i64);

impl Money {
    pub const ZERO: Money = Money(0);

    /// Rounds a dollar amount to the nearest cent.
    pub fn from_dollars(dollars: f64) -> Result<Self, CostError> {
        let cents = (dollars * 100.0).round();
        if !cents.is_finite() || cents.abs() >= i64::MAX as f64 {
            return Err(CostError::Overflow("cents"));
        }
        Ok(Money(cents as i64))
    }

    pub fn cents(self) -> i64 {
        self.0
    }

    pub fn dollars(self) -> f64 {
        self.0 as f64 / 100.0
    }

    pub fn checked_add(self, other: Money) -> Result<Money, CostError> {
        self.0
            .checked_add(other.0)
            .map(Money)
            .ok_or(CostError::Overflow("sum"))
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let whole = (abs / 100).to_string();
        let mut grouped = String::with_capacity(whole.len() + whole.len() / 3);
        for (i, ch) in whole.chars().enumerate() {
            if i > 0 && (whole.len() - i).is_multiple_of(3) {
                grouped.push(',');
            }
            grouped.push(ch);
        }
        write!(f, "{sign}${grouped}.{:02}", abs % 100)
    }
}

/// Advertised access latency of a tier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NominalLatency {
    Millis(f64),
    /// Offline tier; data must be rehydrated first.
    Hours,
}

impl fmt::Display for NominalLatency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NominalLatency::Millis(ms) => write!(f, "{ms} ms"),
            NominalLatency::Hours => f.write_str("several hours"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierPricing {
    pub tier_name: String,
    /// $ per GB per month.
    pub storage_per_gb_month: f64,
    /// $ per GB read back.
    pub retrieval_per_gb: f64,
    /// $ per 10,000 GET requests.
    pub get_per_10k_requests: f64,
    pub nominal_latency: NominalLatency,
}

impl TierPricing {
    pub fn new(
        tier_name: &str,
        storage_per_gb_month: f64,
        retrieval_per_gb: f64,
        get_per_10k_requests: f64,
        nominal_latency: NominalLatency,
    ) -> Self {
        Self {
            tier_name: tier_name.to_owned(),
            storage_per_gb_month,
            retrieval_per_gb,
            get_per_10k_requests,
            nominal_latency,
        }
    }

    pub fn validate(&self) -> Result<(), CostError> {
        let rates = [
            ("storage_per_gb_month", self.storage_per_gb_month),
            ("retrieval_per_gb", self.retrieval_per_gb),
            ("get_per_10k_requests", self.get_per_10k_requests),
        ];
        for (name, rate) in rates {
            if !rate.is_finite() || rate < 0.0 {
                return Err(CostError::InvalidPricing {
                    tier: self.tier_name.clone(),
                    reason: format!("{name} must be a finite rate >= 0, got {rate}"),
                });
            }
        }
        if let NominalLatency::Millis(ms) = self.nominal_latency {
            if !ms.is_finite() || ms < 0.0 {
                return Err(CostError::InvalidPricing {
                    tier: self.tier_name.clone(),
                    reason: format!("latency must be >= 0 ms, got {ms}"),
                });
            }
        }
        Ok(())
    }

    /// Cost of one GET request in dollars.
    pub fn per_get(&self) -> f64 {
        self.get_per_10k_requests / 10_000.0
    }
}

/// A named set of tiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingCatalog {
    pub name: String,
    #[serde(rename = "tier")]
    pub tiers: Vec<TierPricing>,
}

pub const DEFAULT_CATALOG: &str = "azure-2019";

impl PricingCatalog {
    /// Azure blob storage list prices (archive, cool, hot).
    pub fn azure_2019() -> Self {
        Self {
            name: DEFAULT_CATALOG.to_owned(),
            tiers: vec![
                TierPricing::new("archive", 0.0045, 0.02, 0.5, NominalLatency::Hours),
                TierPricing::new("cool", 0.0334, 0.01, 0.01, NominalLatency::Millis(61.4)),
                TierPricing::new("hot", 0.0422, 0.0, 0.004, NominalLatency::Millis(5.3)),
            ],
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        (name == DEFAULT_CATALOG).then(Self::azure_2019)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, CostError> {
        let catalog: Self = toml::from_str(text).map_err(|e| CostError::Parse(e.to_string()))?;
        catalog.validate()?;
        Ok(catalog)
    }

    pub fn load(path: &Path) -> Result<Self, CostError> {
        let text = std::fs::read_to_string(path).map_err(|e| CostError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("catalog serializes")
    }

    pub fn validate(&self) -> Result<(), CostError> {
        if self.tiers.is_empty() {
            return Err(CostError::EmptyCatalog);
        }
        self.tiers.iter().try_for_each(TierPricing::validate)
    }

    pub fn tier(&self, name: &str) -> Result<&TierPricing, CostError> {
        self.tiers
            .iter()
            .find(|t| t.tier_name.eq_ignore_ascii_case(name))
            .ok_or_else(|| CostError::UnknownTier(name.to_owned()))
    }
}

/// Archive size, lifetime (`months`) and number of complete read-backs
/// (`full_reads`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostScenario {
    pub capacity_gb: f64,
    pub months: f64,
    pub full_reads: f64,
    pub blob_size_gb: f64,
    #[serde(default = "default_egress")]
    pub egress_per_gb: f64,
}

fn default_egress() -> f64 {
    0.05
}

impl CostScenario {
    pub fn new(capacity_gb: f64, months: f64, full_reads: f64, blob_size_gb: f64) -> Self {
        Self {
            capacity_gb,
            months,
            full_reads,
            blob_size_gb,
            egress_per_gb: default_egress(),
        }
    }

    /// 1 PiB in 256 MiB blobs, stored for a year and read back once.
    pub fn one_pib_one_year_one_read() -> Self {
        Self::new(PIB_IN_GB, 12.0, 1.0, 0.25)
    }

    pub fn validate(&self) -> Result<(), CostError> {
        let bad = |msg: String| Err(CostError::InvalidScenario(msg));
        if !(self.capacity_gb.is_finite() && self.capacity_gb > 0.0) {
            return bad(format!("capacity_gb must be > 0, got {}", self.capacity_gb));
        }
        if !(self.months.is_finite() && self.months >= 0.0) {
            return bad(format!("months must be >= 0, got {}", self.months));
        }
        if !(self.full_reads.is_finite() && self.full_reads >= 0.0) {
            return bad(format!("full_reads must be >= 0, got {}", self.full_reads));
        }
        if !(self.blob_size_gb.is_finite() && self.blob_size_gb > 0.0) {
            return bad(format!(
                "blob_size_gb must be > 0, got {}",
                self.blob_size_gb
            ));
        }
        if !(self.egress_per_gb.is_finite() && self.egress_per_gb >= 0.0) {
            return bad(format!(
                "egress_per_gb must be >= 0, got {}",
                self.egress_per_gb
            ));
        }
        Ok(())
    }

    /// Objects in the archive; a partial trailing blob is still one object.
    pub fn blob_count(&self) -> f64 {
        (self.capacity_gb / self.blob_size_gb).ceil()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostReport {
    pub storage_cost: Money,
    pub retrieval_cost: Money,
    pub request_cost: Money,
    pub egress_cost: Money,
    pub total: Money,
}

impl CostReport {
    pub fn from_components(
        storage_cost: Money,
        retrieval_cost: Money,
        request_cost: Money,
        egress_cost: Money,
    ) -> Result<Self, CostError> {
        let total = storage_cost
            .checked_add(retrieval_cost)?
            .checked_add(request_cost)?
            .checked_add(egress_cost)?;
        Ok(Self {
            storage_cost,
            retrieval_cost,
            request_cost,
            egress_cost,
            total,
        })
    }

    pub fn access_cost(&self) -> Money {
        Money(self.retrieval_cost.0 + self.request_cost.0)
    }

    /// Share of the total spent on storage; 0 when nothing was spent.
    pub fn storage_fraction(&self) -> f64 {
        if self.total.0 == 0 {
            0.0
        } else {
            self.storage_cost.0 as f64 / self.total.0 as f64
        }
    }

    /// Share of the total spent on everything but storage.
    pub fn access_fraction(&self) -> f64 {
        if self.total.0 == 0 {
            0.0
        } else {
            1.0 - self.storage_fraction()
        }
    }

    pub fn checked_sum(&self, other: &CostReport) -> Result<CostReport, CostError> {
        Self::from_components(
            self.storage_cost.checked_add(other.storage_cost)?,
            self.retrieval_cost.checked_add(other.retrieval_cost)?,
            self.request_cost.checked_add(other.request_cost)?,
            self.egress_cost.checked_add(other.egress_cost)?,
        )
    }
}

/// Itemized cost of a scenario on one tier. Egress is not included.
pub fn total_cost(pricing: &TierPricing, scenario: &CostScenario) -> Result<CostReport, CostError> {
    pricing.validate()?;
    scenario.validate()?;
    let storage = pricing.storage_per_gb_month * scenario.capacity_gb * scenario.months;
    let retrieval = pricing.retrieval_per_gb * scenario.capacity_gb * scenario.full_reads;
    let requests = pricing.per_get() * scenario.blob_count() * scenario.full_reads;
    CostReport::from_components(
        Money::from_dollars(storage)?,
        Money::from_dollars(retrieval)?,
        Money::from_dollars(requests)?,
        Money::ZERO,
    )
}

/// Fraction of the total (egress excluded) spent on reading data back.
pub fn access_overhead(pricing: &TierPricing, scenario: &CostScenario) -> Result<f64, CostError> {
    let report = total_cost(pricing, scenario)?;
    if report.total.0 == 0 {
        return Err(CostError::ZeroTotal);
    }
    Ok(report.access_cost().0 as f64 / report.total.0 as f64)
}

/// `(storage %, access %)` of the total.
pub fn breakdown_percent(
    pricing: &TierPricing,
    scenario: &CostScenario,
) -> Result<(f64, f64), CostError> {
    let report = total_cost(pricing, scenario)?;
    if report.total.0 == 0 {
        return Err(CostError::ZeroTotal);
    }
    let storage = 100.0 * report.storage_fraction();
    Ok((storage, 100.0 - storage))
}

/// Months of storage needed so that one full read-back (the cost of moving
/// out) is only `overhead` of the lifetime cost. Per-GB rates only.
pub fn months_for_moveout_overhead(pricing: &TierPricing, overhead: f64) -> Result<f64, CostError> {
    pricing.validate()?;
    if !(overhead > 0.0 && overhead < 1.0) {
        return Err(CostError::OverheadOutOfRange(overhead));
    }
    if pricing.storage_per_gb_month <= 0.0 {
        return Err(CostError::InvalidPricing {
            tier: pricing.tier_name.clone(),
            reason: "storage rate must be > 0".into(),
        });
    }
    Ok((1.0 - overhead) / overhead * pricing.retrieval_per_gb / pricing.storage_per_gb_month)
}

/// Moving-out overhead after `months` of storage; the inverse of
/// [`months_for_moveout_overhead`].
pub fn moveout_overhead_after(pricing: &TierPricing, months: f64) -> f64 {
    let read = pricing.retrieval_per_gb;
    read / (read + pricing.storage_per_gb_month * months)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MigrationCost {
    pub cost: Money,
    pub equivalent_storage_months: f64,
    pub includes_egress: bool,
}

/// One-time cost of reading the whole archive out of a tier, optionally with
/// egress, and how many months of storage that buys.
pub fn migration_cost(
    pricing: &TierPricing,
    scenario: &CostScenario,
    include_egress: bool,
) -> Result<MigrationCost, CostError> {
    let once = CostScenario {
        months: 0.0,
        full_reads: 1.0,
        ..scenario.clone()
    };
    let read_back = total_cost(pricing, &once)?;
    let egress = if include_egress {
        Money::from_dollars(scenario.egress_per_gb * scenario.capacity_gb)?
    } else {
        Money::ZERO
    };
    let cost = read_back.total.checked_add(egress)?;
    let monthly = pricing.storage_per_gb_month * scenario.capacity_gb;
    let equivalent_storage_months = if monthly > 0.0 {
        cost.dollars() / monthly
    } else {
        f64::INFINITY
    };
    Ok(MigrationCost {
        cost,
        equivalent_storage_months,
        includes_egress: include_egress,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierAdvice {
    pub tier: TierPricing,
    pub report: CostReport,
}

/// Tiers ranked by ascending total cost; ties keep catalog order.
pub fn advise_tier(
    catalog: &[TierPricing],
    scenario: &CostScenario,
) -> Result<Vec<TierAdvice>, CostError> {
    if catalog.is_empty() {
        return Err(CostError::EmptyCatalog);
    }
    let mut ranked = catalog
        .iter()
        .map(|tier| {
            total_cost(tier, scenario).map(|report| TierAdvice {
                tier: tier.clone(),
                report,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    ranked.sort_by_key(|a| a.report.total);
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tier(name: &str) -> TierPricing {
        PricingCatalog::azure_2019().tier(name).unwrap().clone()
    }

    #[test]
    fn money_display_groups_thousands() {
        assert_eq!(Money(53_100_056).to_string(), "$531,000.56");
        assert_eq!(Money(5).to_string(), "$0.05");
        assert_eq!(Money(-12_345).to_string(), "-$123.45");
    }

    #[test]
    fn zero_lifetime_costs_nothing() {
        for t in PricingCatalog::azure_2019().tiers {
            let r = total_cost(&t, &CostScenario::new(1000.0, 0.0, 0.0, 0.25)).unwrap();
            assert_eq!(r, CostReport::default());
            assert_eq!(r.storage_fraction(), 0.0);
        }
    }

    #[test]
    fn hot_single_month_is_storage_only() {
        let r = total_cost(&tier("hot"), &CostScenario::new(5000.0, 1.0, 0.0, 0.25)).unwrap();
        assert_eq!(r.total, Money::from_dollars(0.0422 * 5000.0).unwrap());
        assert_eq!(r.total, r.storage_cost);
    }

    #[test]
    fn partial_blob_counts_as_one_get() {
        let s = CostScenario::new(1.1, 0.0, 1.0, 0.5);
        assert_eq!(s.blob_count(), 3.0);
    }

    #[test]
    fn invalid_scenarios_rejected() {
        let hot = tier("hot");
        for s in [
            CostScenario::new(0.0, 1.0, 1.0, 0.25),
            CostScenario::new(1.0, -1.0, 1.0, 0.25),
            CostScenario::new(1.0, 1.0, -1.0, 0.25),
            CostScenario::new(1.0, 1.0, 1.0, 0.0),
        ] {
            assert!(matches!(
                total_cost(&hot, &s),
                Err(CostError::InvalidScenario(_))
            ));
        }
    }

    #[test]
    fn overflow_is_reported() {
        let s = CostScenario::new(1e300, 1e10, 0.0, 1.0);
        assert_eq!(
            total_cost(&tier("hot"), &s),
            Err(CostError::Overflow("cents"))
        );
    }

    #[test]
    fn overhead_undefined_for_zero_total() {
        let s = CostScenario::new(100.0, 0.0, 0.0, 0.25);
        assert_eq!(
            access_overhead(&tier("cool"), &s),
            Err(CostError::ZeroTotal)
        );
    }

    #[test]
    fn hot_tier_overhead_is_negligible() {
        let s = CostScenario::new(1000.0, 12.0, 12.0, 1000.0);
        assert!(access_overhead(&tier("hot"), &s).unwrap() < 1e-3);
    }

    #[test]
    fn moveout_rejects_degenerate_inputs() {
        let mut free = tier("archive");
        free.storage_per_gb_month = 0.0;
        assert!(matches!(
            months_for_moveout_overhead(&free, 0.1),
            Err(CostError::InvalidPricing { .. })
        ));
        for o in [0.0, 1.0, -0.5, 1.5] {
            assert_eq!(
                months_for_moveout_overhead(&tier("archive"), o),
                Err(CostError::OverheadOutOfRange(o))
            );
        }
    }

    #[test]
    fn migration_without_egress_is_one_read() {
        let m = migration_cost(
            &tier("archive"),
            &CostScenario::one_pib_one_year_one_read(),
            false,
        )
        .unwrap();
        // 0.02 * 2^20 + 0.5 * 2^22 / 1e4
        assert_eq!(m.cost, Money(2_118_124));
        assert!(!m.includes_egress);
    }

    #[test]
    fn single_tier_catalog() {
        let only = vec![tier("cool")];
        let ranked = advise_tier(&only, &CostScenario::one_pib_one_year_one_read()).unwrap();
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked[0].tier.tier_name, "cool");
        assert_eq!(
            advise_tier(&[], &CostScenario::one_pib_one_year_one_read()),
            Err(CostError::EmptyCatalog)
        );
    }

    #[test]
    fn catalog_toml_round_trip() {
        let cat = PricingCatalog::azure_2019();
        let back = PricingCatalog::from_toml_str(&cat.to_toml_string()).unwrap();
        assert_eq!(back, cat);
        assert!(matches!(
            cat.tier("glacier"),
            Err(CostError::UnknownTier(_))
        ));
    }

    #[test]
    fn negative_rates_rejected() {
        let text = r#"
name = "bad"
[[tier]]
tier_name = "x"
storage_per_gb_month = -1.0
retrieval_per_gb = 0.0
get_per_10k_requests = 0.0
nominal_latency = "hours"
"#;
        assert!(matches!(
            PricingCatalog::from_toml_str(text),
            Err(CostError::InvalidPricing { .. })
        ));
    }
}
