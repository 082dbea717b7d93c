//! The machine-readable run report and its human rendering. One JSON
//! document per run; every map is ordered so identical inputs produce
//! byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analytics::MarketplaceStats;
use crate::money::Money;

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct StageCount {
    pub stage: String,
    /// NFTs still holding at least one candidate component.
    pub nfts: usize,
    pub components: usize,
    pub accounts: usize,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize, Default)]
pub struct ConfirmedSummary {
    pub activities: usize,
    pub nfts: usize,
    /// Internal-edge volume per asset, in the asset's own units.
    pub volume_native: BTreeMap<String, Money>,
    pub volume_usd: Money,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize, Default)]
pub struct OverlapTable {
    /// Exact evidence-kind combination -> confirmed activities, keys like
    /// `common_funder_external+common_exit_external`.
    pub cells: BTreeMap<String, usize>,
    pub per_kind: BTreeMap<String, usize>,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct CdfPoint {
    pub seconds: u64,
    pub count: usize,
    pub cumulative_fraction: Money,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize, Default)]
pub struct SerialSection {
    pub accounts: usize,
    pub serial_accounts: usize,
    pub only_with_serials: usize,
    pub serials_only_events: usize,
    pub collection_repeaters: usize,
    pub max_activities_by_one_account: usize,
}

/// Volume and balance distribution of one profit verdict bucket.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize, Default)]
pub struct ProfitTable {
    pub events: usize,
    pub min_volume_native: Option<Money>,
    pub max_volume_native: Option<Money>,
    pub mean_volume_native: Option<Money>,
    pub min_balance_usd: Option<Money>,
    pub max_balance_usd: Option<Money>,
    pub mean_balance_usd: Option<Money>,
    pub total_balance_usd: Money,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize, Default)]
pub struct RewardSection {
    pub successful: ProfitTable,
    pub failed: ProfitTable,
    pub no_claim_events: usize,
    /// Members whose first claim was attributed to more than one activity.
    pub shared_claim_members: usize,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize, Default)]
pub struct ResaleSection {
    pub successful: ProfitTable,
    pub failed: ProfitTable,
    pub not_resold_events: usize,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize, Default)]
pub struct ProfitSection {
    pub reward: RewardSection,
    pub resale: ResaleSection,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Report {
    pub cleaning: Vec<StageCount>,
    pub non_compliant_contracts: usize,
    pub confirmed: ConfirmedSummary,
    pub evidence_overlap: OverlapTable,
    pub exchange_funded_unconfirmed: usize,
    pub marketplaces: BTreeMap<String, MarketplaceStats>,
    pub lifetime_cdf: Vec<CdfPoint>,
    pub acquisition_latency_cdf: Vec<CdfPoint>,
    /// Confirmed events with no measurable acquisition (minted in-group).
    pub acquisition_unmeasured: usize,
    pub patterns: BTreeMap<String, usize>,
    pub serial: SerialSection,
    pub profit: ProfitSection,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn write_profit_table(out: &mut String, name: &str, table: &ProfitTable) {
    let _ = writeln!(out, "  {name}: {} events", table.events);
    if table.events == 0 {
        return;
    }
    let fmt = |v: &Option<Money>| v.as_ref().map_or("-".to_string(), Money::to_decimal_string);
    let _ = writeln!(
        out,
        "    volume (native) min/mean/max: {} / {} / {}",
        fmt(&table.min_volume_native),
        fmt(&table.mean_volume_native),
        fmt(&table.max_volume_native),
    );
    let _ = writeln!(
        out,
        "    balance (USD) min/mean/max: {} / {} / {}  total: {}",
        fmt(&table.min_balance_usd),
        fmt(&table.mean_balance_usd),
        fmt(&table.max_balance_usd),
        table.total_balance_usd,
    );
}

/// Human summary printed to standard output after a run.
pub fn render_text(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "== cleaning steps ==");
    for stage in &report.cleaning {
        let _ = writeln!(
            out,
            "  {:<24} nfts {:>8}  components {:>8}  accounts {:>8}",
            stage.stage, stage.nfts, stage.components, stage.accounts
        );
    }
    if report.non_compliant_contracts > 0 {
        let _ = writeln!(out, "  non-compliant contracts dropped: {}", report.non_compliant_contracts);
    }

    let _ = writeln!(out, "== confirmed wash trading ==");
    let _ = writeln!(
        out,
        "  activities {}  nfts {}  usd volume {}",
        report.confirmed.activities, report.confirmed.nfts, report.confirmed.volume_usd
    );
    for (asset, volume) in &report.confirmed.volume_native {
        let _ = writeln!(out, "    {asset}: {volume}");
    }

    let _ = writeln!(out, "== evidence overlap ==");
    for (cell, count) in &report.evidence_overlap.cells {
        let _ = writeln!(out, "  {cell}: {count}");
    }
    let _ = writeln!(
        out,
        "  unconfirmed exchange-funded candidates: {}",
        report.exchange_funded_unconfirmed
    );

    let _ = writeln!(out, "== marketplaces ==");
    for (name, stats) in &report.marketplaces {
        let share = stats
            .share_of_total
            .as_ref()
            .map_or("-".to_string(), |s| s.to_decimal_string());
        let _ = writeln!(
            out,
            "  {:<16} events {:>6}  usd {}  share {}",
            name, stats.events, stats.usd_volume, share
        );
    }

    let _ = writeln!(out, "== patterns ==");
    for (pattern, count) in &report.patterns {
        let _ = writeln!(out, "  {pattern}: {count}");
    }

    let _ = writeln!(out, "== temporal ==");
    if let Some(last) = report.lifetime_cdf.last() {
        let _ = writeln!(
            out,
            "  lifetime cdf: {} points, max {} seconds",
            report.lifetime_cdf.len(),
            last.seconds
        );
    }
    if let Some(last) = report.acquisition_latency_cdf.last() {
        let _ = writeln!(
            out,
            "  acquisition latency cdf: {} points, max {} seconds ({} unmeasured)",
            report.acquisition_latency_cdf.len(),
            last.seconds,
            report.acquisition_unmeasured
        );
    }

    let _ = writeln!(out, "== serial traders ==");
    let _ = writeln!(
        out,
        "  accounts {}  serial {}  exclusive {}  serial-only events {}  collection repeaters {}",
        report.serial.accounts,
        report.serial.serial_accounts,
        report.serial.only_with_serials,
        report.serial.serials_only_events,
        report.serial.collection_repeaters
    );

    let _ = writeln!(out, "== profit: reward token ==");
    write_profit_table(&mut out, "successful", &report.profit.reward.successful);
    write_profit_table(&mut out, "failed", &report.profit.reward.failed);
    let _ = writeln!(out, "  no-claim events: {}", report.profit.reward.no_claim_events);
    if report.profit.reward.shared_claim_members > 0 {
        let _ = writeln!(
            out,
            "  members with claims shared across activities: {}",
            report.profit.reward.shared_claim_members
        );
    }

    let _ = writeln!(out, "== profit: resale ==");
    write_profit_table(&mut out, "successful", &report.profit.resale.successful);
    write_profit_table(&mut out, "failed", &report.profit.resale.failed);
    let _ = writeln!(out, "  not resold: {}", report.profit.resale.not_resold_events);

    out
}
