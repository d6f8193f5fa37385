use std::path::Path;

use anyhow::Result;
use clap::Args;
use coldbench_core::cost::{
    advise_tier, migration_cost, months_for_moveout_overhead, total_cost, CostReport, CostScenario,
    PricingCatalog, TierPricing,
};
use coldbench_core::units::CapacityGb;
use serde_json::json;

use crate::{usage, ScenarioArgs};

#[derive(Args)]
pub struct CostArgs {
    /// Tier name from the catalog (archive, cool, hot).
    #[arg(long)]
    tier: String,
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Print months of storage needed for moving-out overheads of 10%..90%.
    #[arg(long)]
    moveout_curve: bool,
    /// Print the one-time cost of reading the archive out of the tier.
    #[arg(long)]
    migrate: bool,
    /// Include network egress in --migrate.
    #[arg(long, requires = "migrate")]
    egress: bool,
}

#[derive(Args)]
pub struct AdviseArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
}

fn catalog(name: &str) -> Result<PricingCatalog> {
    if let Some(c) = PricingCatalog::builtin(name) {
        return Ok(c);
    }
    let path = Path::new(name);
    if !path.is_file() {
        return Err(usage(format!(
            "catalog {name:?} is neither built in nor an existing file"
        )));
    }
    PricingCatalog::load(path).map_err(|e| usage(e.to_string()))
}

fn scenario(a: &ScenarioArgs) -> Result<CostScenario> {
    let cap: CapacityGb = a
        .capacity
        .parse()
        .map_err(|e| usage(format!("--capacity: {e}")))?;
    let blob: CapacityGb = a.blob.parse().map_err(|e| usage(format!("--blob: {e}")))?;
    let s = CostScenario {
        egress_per_gb: a.egress_price,
        ..CostScenario::new(cap.0, a.months, a.reads, blob.0)
    };
    s.validate().map_err(|e| usage(e.to_string()))?;
    Ok(s)
}

fn echo(s: &CostScenario, catalog: &str) -> String {
    format!(
        "# catalog {catalog}, capacity {} GB, months {}, reads {}, blob {} GB ({} objects)",
        s.capacity_gb,
        s.months,
        s.full_reads,
        s.blob_size_gb,
        s.blob_count()
    )
}

fn report_lines(r: &CostReport) -> Vec<String> {
    let pct = |part: f64| {
        if r.total.cents() == 0 {
            0.0
        } else {
            100.0 * part
        }
    };
    vec![
        format!(
            "storage    {:>18}  {:>6.2}%",
            r.storage_cost.to_string(),
            pct(r.storage_fraction())
        ),
        format!("retrieval  {:>18}", r.retrieval_cost.to_string()),
        format!("requests   {:>18}", r.request_cost.to_string()),
        format!(
            "access     {:>18}  {:>6.2}%",
            r.access_cost().to_string(),
            pct(r.access_fraction())
        ),
        format!("total      {:>18}", r.total.to_string()),
    ]
}

pub fn cost(a: CostArgs) -> Result<()> {
    let cat = catalog(&a.scenario.catalog)?;
    let pricing: &TierPricing = cat.tier(&a.tier).map_err(|e| usage(e.to_string()))?;
    let s = scenario(&a.scenario)?;
    let report = total_cost(pricing, &s)?;
    let curve: Vec<(u32, f64)> = if a.moveout_curve {
        (1..=9)
            .map(|i| months_for_moveout_overhead(pricing, f64::from(i) / 10.0).map(|m| (i * 10, m)))
            .collect::<Result<_, _>>()?
    } else {
        Vec::new()
    };
    let migration = if a.migrate {
        Some(migration_cost(pricing, &s, a.egress)?)
    } else {
        None
    };

    if a.scenario.json {
        let out = json!({
            "catalog": cat.name,
            "tier": pricing,
            "scenario": s,
            "report": report,
            "moveout_curve": curve.iter().map(|(o, m)| json!({"overhead_percent": o, "months": m})).collect::<Vec<_>>(),
            "migration": migration,
        });
        out!("{}", serde_json::to_string_pretty(&out)?);
        return Ok(());
    }
    out!("{}", echo(&s, &cat.name));
    out!("tier {} ({})", pricing.tier_name, pricing.nominal_latency);
    for line in report_lines(&report) {
        out!("  {line}");
    }
    if a.moveout_curve {
        out!("moving-out overhead  months of storage");
        for (o, m) in &curve {
            out!("  {o:>3}%  {m:>10.4}");
        }
    }
    if let Some(m) = migration {
        out!(
            "migration{}: {} = {:.2} months of storage",
            if m.includes_egress {
                " with egress"
            } else {
                ""
            },
            m.cost,
            m.equivalent_storage_months
        );
    }
    Ok(())
}

pub fn advise(a: AdviseArgs) -> Result<()> {
    let cat = catalog(&a.scenario.catalog)?;
    let s = scenario(&a.scenario)?;
    let ranked = advise_tier(&cat.tiers, &s)?;
    if a.scenario.json {
        let out = json!({
            "catalog": cat.name,
            "scenario": s,
            "ranking": ranked,
        });
        out!("{}", serde_json::to_string_pretty(&out)?);
        return Ok(());
    }
    out!("{}", echo(&s, &cat.name));
    out!(
        "{:<4} {:<10} {:>18} {:>18} {:>18}",
        "rank",
        "tier",
        "storage",
        "access",
        "total"
    );
    for (i, adv) in ranked.iter().enumerate() {
        out!(
            "{:<4} {:<10} {:>18} {:>18} {:>18}",
            i + 1,
            adv.tier.tier_name,
            adv.report.storage_cost.to_string(),
            adv.report.access_cost().to_string(),
            adv.report.total.to_string()
        );
    }
    Ok(())
}
