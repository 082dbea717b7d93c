//! End-to-end orchestration: ingest, per-NFT graph building and cleaning,
//! SCC mining, confirmation, characterization, and profit accounting,
//! reduced into one deterministic report.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use crate::analytics::{
    acquisition_latency_seconds, classify_pattern, lifetime_seconds, marketplace_breakdown,
    serial_stats, usd_volume, PatternId,
};
use crate::detect::{confirm_all, TxIndex, WashTradeEvent, ZeroRiskEpsilon};
use crate::domain::{Address, Asset, NftId, TransferEvent, TxHash};
use crate::filter::{drop_zero_volume_candidates, remove_contract_accounts, remove_service_accounts};
use crate::graph::{build_graph, find_sccs, SccCandidate};
use crate::ingest::{
    check_erc721_compliance, load_labels, load_marketplace_totals, load_prices, load_transactions,
    load_transfers, ClientError, CodePresenceOracle, FixtureComplianceClient, IngestError,
    LabelRegistry, MissingPrice, PriceTable,
};
use crate::money::Money;
use crate::profit::{extract_claims, resale_balance, reward_balance, ProfitVerdict};
use crate::report::{
    CdfPoint, ConfirmedSummary, OverlapTable, ProfitSection, ProfitTable, Report, ResaleSection,
    RewardSection, SerialSection, StageCount,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    MissingPrice(#[from] MissingPrice),
    #[error("compliance check failed: {0}")]
    Compliance(#[from] ClientError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("failed to write report to {path}: {source}")]
    WriteReport {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error("graph construction failed: {0}")]
    Graph(#[from] crate::graph::GraphError),
}

/// Everything a `detect` run needs. Only the two stream files are
/// mandatory; absent registries default to empty.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub transfers: PathBuf,
    pub transactions: PathBuf,
    pub labels: Option<PathBuf>,
    pub prices: Option<PathBuf>,
    pub marketplace_totals: Option<PathBuf>,
    pub compliance: Option<PathBuf>,
    pub contracts: Option<PathBuf>,
    pub require_compliance: bool,
    pub epsilon: ZeroRiskEpsilon,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(transfers: PathBuf, transactions: PathBuf) -> Self {
        RunConfig { transfers, transactions, ..Default::default() }
    }
}

struct StageSnapshot {
    components: usize,
    accounts: BTreeSet<Address>,
}

struct NftOutcome {
    raw: StageSnapshot,
    after_service: StageSnapshot,
    after_contract: StageSnapshot,
    candidates: Vec<SccCandidate>,
}

fn snapshot(candidates: &[SccCandidate]) -> StageSnapshot {
    let mut accounts = BTreeSet::new();
    for candidate in candidates {
        accounts.extend(candidate.members.iter().copied());
    }
    StageSnapshot { components: candidates.len(), accounts }
}

fn process_nft(
    nft: NftId,
    events: &[TransferEvent],
    registry: &LabelRegistry,
    oracle: &CodePresenceOracle,
) -> Result<NftOutcome, PipelineError> {
    let graph = build_graph(nft, events)?;
    let raw = snapshot(&find_sccs(&graph));

    let cleaned = remove_service_accounts(&graph, registry);
    let after_service_sccs = find_sccs(&cleaned);
    let after_service = snapshot(&after_service_sccs);

    let cleaned = remove_contract_accounts(&cleaned, oracle);
    let after_contract_sccs = find_sccs(&cleaned);
    let after_contract = snapshot(&after_contract_sccs);

    let candidates = drop_zero_volume_candidates(after_contract_sccs);
    Ok(NftOutcome { raw, after_service, after_contract, candidates })
}

fn stage_counts(outcomes: &[NftOutcome]) -> Vec<StageCount> {
    let mut stages = vec![
        ("strongly_connected", StageSnapshot { components: 0, accounts: BTreeSet::new() }, 0usize),
        ("service_filter", StageSnapshot { components: 0, accounts: BTreeSet::new() }, 0),
        ("contract_filter", StageSnapshot { components: 0, accounts: BTreeSet::new() }, 0),
        ("zero_volume_filter", StageSnapshot { components: 0, accounts: BTreeSet::new() }, 0),
    ];
    for outcome in outcomes {
        let final_snapshot = snapshot(&outcome.candidates);
        let per_stage =
            [&outcome.raw, &outcome.after_service, &outcome.after_contract, &final_snapshot];
        for (slot, stage) in stages.iter_mut().zip(per_stage) {
            slot.1.components += stage.components;
            slot.1.accounts.extend(stage.accounts.iter().copied());
            if stage.components > 0 {
                slot.2 += 1;
            }
        }
    }
    stages
        .into_iter()
        .map(|(name, snap, nfts)| StageCount {
            stage: name.to_string(),
            nfts,
            components: snap.components,
            accounts: snap.accounts.len(),
        })
        .collect()
}

fn cdf_points(mut values: Vec<u64>) -> Vec<CdfPoint> {
    values.sort_unstable();
    let total = values.len();
    let mut points: Vec<CdfPoint> = Vec::new();
    let mut cumulative = 0usize;
    let mut i = 0;
    while i < total {
        let value = values[i];
        let mut count = 0;
        while i < total && values[i] == value {
            count += 1;
            i += 1;
        }
        cumulative += count;
        points.push(CdfPoint {
            seconds: value,
            count: cumulative,
            cumulative_fraction: Money::from_ratio(cumulative as i64, total as i64),
        });
    }
    points
}

fn profit_table(rows: &[(Money, Money)]) -> ProfitTable {
    if rows.is_empty() {
        return ProfitTable::default();
    }
    let volumes: Vec<&Money> = rows.iter().map(|(v, _)| v).collect();
    let balances: Vec<&Money> = rows.iter().map(|(_, b)| b).collect();
    let n = Money::from_int(rows.len() as i64);
    let volume_total: Money = volumes.iter().copied().sum();
    let balance_total: Money = balances.iter().copied().sum();
    ProfitTable {
        events: rows.len(),
        min_volume_native: volumes.iter().min().map(|m| (*m).clone()),
        max_volume_native: volumes.iter().max().map(|m| (*m).clone()),
        mean_volume_native: volume_total.checked_div(&n),
        min_balance_usd: balances.iter().min().map(|m| (*m).clone()),
        max_balance_usd: balances.iter().max().map(|m| (*m).clone()),
        mean_balance_usd: balance_total.checked_div(&n),
        total_balance_usd: balance_total,
    }
}

fn native_volume(event: &WashTradeEvent) -> Money {
    event.volume_native.get(&Asset::Native).cloned().unwrap_or_default()
}

fn ensure(condition: bool, message: &str) -> Result<(), PipelineError> {
    if condition {
        Ok(())
    } else {
        Err(PipelineError::Internal(message.to_string()))
    }
}

/// Run the whole pipeline and, when configured, write the JSON report.
pub fn run_pipeline(config: &RunConfig) -> Result<Report, PipelineError> {
    run_pipeline_full(config).map(|(report, _)| report)
}

/// Like [`run_pipeline`], but also hands back the confirmed events for
/// callers that need more than the aggregate report.
pub fn run_pipeline_full(
    config: &RunConfig,
) -> Result<(Report, Vec<WashTradeEvent>), PipelineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.unwrap_or(0))
        .build()
        .map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
    pool.install(|| run_inner(config))
}

fn run_inner(config: &RunConfig) -> Result<(Report, Vec<WashTradeEvent>), PipelineError> {
    let mut transfers = load_transfers(&config.transfers)?;
    let transactions = load_transactions(&config.transactions)?;
    let registry = match &config.labels {
        Some(path) => load_labels(path)?,
        None => LabelRegistry::default(),
    };
    let prices = match &config.prices {
        Some(path) => load_prices(path)?,
        None => PriceTable::default(),
    };
    let totals = match &config.marketplace_totals {
        Some(path) => load_marketplace_totals(path)?,
        None => BTreeMap::new(),
    };

    // The bytecode oracle: the explicit contracts file plus everything the
    // run itself proves is a contract (collections emit events, the labeled
    // marketplace machinery holds code).
    let mut oracle = match &config.contracts {
        Some(path) => CodePresenceOracle::from_path(path)?,
        None => CodePresenceOracle::default(),
    };
    oracle.extend(transfers.iter().map(|t| t.nft.contract));
    oracle.extend(registry.marketplaces.keys().copied());
    oracle.extend(registry.reward_distributors.keys().copied());
    oracle.extend(registry.treasuries.keys().copied());

    let mut non_compliant_contracts = 0usize;
    if config.require_compliance {
        let Some(path) = &config.compliance else {
            return Err(PipelineError::InvalidConfig(
                "--require-compliance needs a compliance fixture file".to_string(),
            ));
        };
        let client = FixtureComplianceClient::from_path(path)?;
        let contracts: BTreeSet<Address> = transfers.iter().map(|t| t.nft.contract).collect();
        let mut compliant: BTreeSet<Address> = BTreeSet::new();
        for contract in contracts {
            if check_erc721_compliance(contract, &client)? {
                compliant.insert(contract);
            } else {
                non_compliant_contracts += 1;
            }
        }
        transfers.retain(|t| compliant.contains(&t.nft.contract));
    }

    // Group per NFT; the map order is the deterministic merge order.
    let mut by_nft: BTreeMap<NftId, Vec<TransferEvent>> = BTreeMap::new();
    for event in transfers {
        by_nft.entry(event.nft).or_default().push(event);
    }

    let nft_items: Vec<(&NftId, &Vec<TransferEvent>)> = by_nft.iter().collect();
    let outcomes: Vec<NftOutcome> = nft_items
        .par_iter()
        .map(|(nft, events)| process_nft(**nft, events, &registry, &oracle))
        .collect::<Result<_, _>>()?;

    let cleaning = stage_counts(&outcomes);

    let candidates: Vec<SccCandidate> =
        outcomes.into_iter().flat_map(|o| o.candidates).collect();

    let tx_index = TxIndex::build(&transactions);
    let detection = confirm_all(&candidates, &tx_index, &registry, &oracle, &config.epsilon);
    let events = detection.events;

    // Per-event characterization, in candidate order.
    let extras: Vec<(Money, u64, Option<u64>, PatternId)> = events
        .par_iter()
        .map(|event| -> Result<_, MissingPrice> {
            let history = by_nft.get(&event.candidate.nft).map(Vec::as_slice).unwrap_or(&[]);
            Ok((
                usd_volume(event, &prices)?,
                lifetime_seconds(event),
                acquisition_latency_seconds(event, history),
                classify_pattern(&event.candidate),
            ))
        })
        .collect::<Result<_, _>>()?;

    let mut confirmed = ConfirmedSummary {
        activities: events.len(),
        nfts: events.iter().map(|e| e.candidate.nft).collect::<BTreeSet<_>>().len(),
        ..Default::default()
    };
    for event in &events {
        for (asset, amount) in &event.volume_native {
            *confirmed.volume_native.entry(asset.to_string()).or_default() += amount;
        }
    }
    confirmed.volume_usd = extras.iter().map(|(usd, ..)| usd).sum();

    let mut patterns: BTreeMap<String, usize> = BTreeMap::new();
    for (.., pattern) in &extras {
        *patterns.entry(pattern.label().to_string()).or_default() += 1;
    }

    let lifetime_cdf = cdf_points(extras.iter().map(|(_, lifetime, ..)| *lifetime).collect());
    let latencies: Vec<u64> =
        extras.iter().filter_map(|(_, _, latency, _)| *latency).collect();
    let acquisition_unmeasured = events.len() - latencies.len();
    let acquisition_latency_cdf = cdf_points(latencies);

    let marketplaces = marketplace_breakdown(&events, &registry, &totals, &prices)?;

    let serial = serial_stats(&events);
    let serial_section = SerialSection {
        accounts: serial.activity_counts.len(),
        serial_accounts: serial.serial.len(),
        only_with_serials: serial.only_with_serials.len(),
        serials_only_events: serial.serials_only_event_count,
        collection_repeaters: serial.collection_repeaters.len(),
        max_activities_by_one_account: serial.max_activities,
    };

    // Profit: activity on a reward-bearing marketplace goes through the
    // token-reward ledger, the rest through the resale ledger.
    let reward_names = registry.reward_marketplace_names();
    let is_reward_event = |event: &WashTradeEvent| {
        event.candidate.internal_edges.iter().any(|edge| {
            registry
                .marketplace_of(edge.interacted_contract)
                .is_some_and(|name| reward_names.contains(name))
        })
    };

    let mut reward_rows: BTreeMap<ProfitVerdict, Vec<(Money, Money)>> = BTreeMap::new();
    let mut claim_attribution: BTreeMap<(Address, TxHash), usize> = BTreeMap::new();
    let mut resale_successful: Vec<(Money, Money)> = Vec::new();
    let mut resale_failed: Vec<(Money, Money)> = Vec::new();
    let mut not_resold_events = 0usize;
    let mut reward_event_count = 0usize;

    for event in &events {
        if is_reward_event(event) {
            reward_event_count += 1;
            let claims = extract_claims(event, &tx_index, &registry.reward_distributors);
            for claim in &claims {
                *claim_attribution.entry((claim.account, claim.tx_hash)).or_default() += 1;
            }
            let ledger =
                reward_balance(event, &claims, &tx_index, &registry.treasuries, &prices)?;
            reward_rows
                .entry(ledger.verdict)
                .or_default()
                .push((native_volume(event), ledger.balance_usd));
        } else {
            let history = by_nft.get(&event.candidate.nft).map(Vec::as_slice).unwrap_or(&[]);
            match resale_balance(event, history, &tx_index, &registry.treasuries, &prices)? {
                Some(ledger) => {
                    let row = (native_volume(event), ledger.balance_usd.clone());
                    if ledger.balance_usd.is_positive() {
                        resale_successful.push(row);
                    } else {
                        resale_failed.push(row);
                    }
                }
                None => not_resold_events += 1,
            }
        }
    }

    let shared_claim_members = claim_attribution
        .iter()
        .filter(|(_, &count)| count > 1)
        .map(|((account, _), _)| *account)
        .collect::<BTreeSet<_>>()
        .len();

    let no_claim_events =
        reward_rows.get(&ProfitVerdict::NoClaim).map(Vec::len).unwrap_or(0);
    let reward_section = RewardSection {
        successful: profit_table(
            reward_rows.get(&ProfitVerdict::Successful).map(Vec::as_slice).unwrap_or(&[]),
        ),
        failed: profit_table(
            reward_rows.get(&ProfitVerdict::Failed).map(Vec::as_slice).unwrap_or(&[]),
        ),
        no_claim_events,
        shared_claim_members,
    };
    let resale_section = ResaleSection {
        successful: profit_table(&resale_successful),
        failed: profit_table(&resale_failed),
        not_resold_events,
    };

    let overlap = OverlapTable {
        cells: detection
            .overlap
            .cells
            .iter()
            .map(|(kinds, count)| {
                let key =
                    kinds.iter().map(|k| k.label()).collect::<Vec<_>>().join("+");
                (key, *count)
            })
            .collect(),
        per_kind: detection
            .overlap
            .per_kind
            .iter()
            .map(|(kind, count)| (kind.label().to_string(), *count))
            .collect(),
    };

    // Internal consistency gates; a violation is a bug, not an input error.
    ensure(
        patterns.values().sum::<usize>() == confirmed.activities,
        "pattern histogram must sum to the confirmed count",
    )?;
    ensure(
        overlap.cells.values().sum::<usize>() == confirmed.activities,
        "overlap cells must sum to the confirmed count",
    )?;
    ensure(
        detection.overlap.confirmed == confirmed.activities,
        "overlap total must equal the confirmed count",
    )?;
    let reward_bucketed = reward_section.successful.events
        + reward_section.failed.events
        + reward_section.no_claim_events;
    ensure(
        reward_bucketed == reward_event_count,
        "profit verdicts must partition the reward-marketplace events",
    )?;
    let marketplace_usd: Money = marketplaces.values().map(|s| &s.usd_volume).sum();
    ensure(
        marketplace_usd == confirmed.volume_usd,
        "marketplace volumes must sum to the confirmed usd volume",
    )?;
    let cleaning_monotone = cleaning.windows(2).all(|w| w[0].nfts >= w[1].nfts);
    ensure(cleaning_monotone, "cleaning-step counts must be non-increasing")?;

    let report = Report {
        cleaning,
        non_compliant_contracts,
        confirmed,
        evidence_overlap: overlap,
        exchange_funded_unconfirmed: detection.exchange_funded_unconfirmed.len(),
        marketplaces,
        lifetime_cdf,
        acquisition_latency_cdf,
        acquisition_unmeasured,
        patterns,
        serial: serial_section,
        profit: ProfitSection { reward: reward_section, resale: resale_section },
    };

    if let Some(out) = &config.out {
        std::fs::write(out, report.to_json()).map_err(|source| PipelineError::WriteReport {
            path: out.display().to_string(),
            source,
        })?;
    }

    Ok((report, events))
}
