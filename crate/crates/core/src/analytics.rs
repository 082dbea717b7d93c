//! Characterization of confirmed activity: USD volumes, lifetimes,
//! acquisition latency, shape classification against the canonical
//! pattern catalog, marketplace attribution, and serial-trader stats.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::detect::WashTradeEvent;
use crate::domain::{utc_date, Address, TransferEvent};
use crate::graph::SccCandidate;
use crate::ingest::{LabelRegistry, MissingPrice, PriceTable};
use crate::money::Money;

/// The ten canonical wash-trading shapes plus the catch-all. A shape is a
/// directed edge multiset up to node relabeling; classification ignores
/// payments and timing entirely.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum PatternId {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
    P7,
    P8,
    P9,
    P10,
    Other,
}

impl PatternId {
    pub fn label(&self) -> &'static str {
        match self {
            PatternId::P1 => "P1",
            PatternId::P2 => "P2",
            PatternId::P3 => "P3",
            PatternId::P4 => "P4",
            PatternId::P5 => "P5",
            PatternId::P6 => "P6",
            PatternId::P7 => "P7",
            PatternId::P8 => "P8",
            PatternId::P9 => "P9",
            PatternId::P10 => "P10",
            PatternId::Other => "Other",
        }
    }

    /// Node count of the canonical shape; `None` for the catch-all.
    pub fn node_count(&self) -> Option<usize> {
        match self {
            PatternId::P1 => Some(2),
            PatternId::P2 | PatternId::P3 | PatternId::P4 => Some(3),
            PatternId::P5 | PatternId::P6 | PatternId::P7 | PatternId::P8 | PatternId::P9 => {
                Some(4)
            }
            PatternId::P10 => Some(5),
            PatternId::Other => None,
        }
    }
}

/// The catalog, as (pattern, node count, edge multiset over nodes 0..n).
/// P1 is the two-node round trip; P2, P5, and P10 are the simple circular
/// shapes of 3, 4, and 5 nodes; the rest are the common compound shapes:
/// paired round trips, doubled cycles, and cycles with a pendant leg.
fn catalog() -> &'static [(PatternId, usize, Vec<(usize, usize)>)] {
    static CATALOG: OnceLock<Vec<(PatternId, usize, Vec<(usize, usize)>)>> = OnceLock::new();
    CATALOG.get_or_init(|| {
        vec![
            (PatternId::P1, 2, vec![(0, 1), (1, 0)]),
            (PatternId::P2, 3, vec![(0, 1), (1, 2), (2, 0)]),
            // round trip plus a spur round trip off one endpoint
            (PatternId::P3, 3, vec![(0, 1), (1, 0), (0, 2), (2, 0)]),
            // the 3-cycle traversed twice
            (
                PatternId::P4,
                3,
                vec![(0, 1), (1, 2), (2, 0), (0, 1), (1, 2), (2, 0)],
            ),
            (PatternId::P5, 4, vec![(0, 1), (1, 2), (2, 3), (3, 0)]),
            // hub with three round trips
            (
                PatternId::P6,
                4,
                vec![(0, 1), (1, 0), (0, 2), (2, 0), (0, 3), (3, 0)],
            ),
            // chain of three round trips
            (
                PatternId::P7,
                4,
                vec![(0, 1), (1, 0), (1, 2), (2, 1), (2, 3), (3, 2)],
            ),
            // the 4-cycle traversed twice
            (
                PatternId::P8,
                4,
                vec![(0, 1), (1, 2), (2, 3), (3, 0), (0, 1), (1, 2), (2, 3), (3, 0)],
            ),
            // 3-cycle with a pendant round trip
            (
                PatternId::P9,
                4,
                vec![(0, 1), (1, 2), (2, 0), (2, 3), (3, 2)],
            ),
            (
                PatternId::P10,
                5,
                vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)],
            ),
        ]
    })
}

/// Largest node count any cataloged shape has.
const MAX_PATTERN_NODES: usize = 5;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    fn heap(k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(current.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, current, out);
            if k % 2 == 0 {
                current.swap(i, k - 1);
            } else {
                current.swap(0, k - 1);
            }
        }
    }
    heap(n, &mut current, &mut out);
    out
}

/// Lexicographically smallest relabeled sorted edge multiset.
fn canonical_form(n: usize, edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut best: Option<Vec<(usize, usize)>> = None;
    for perm in permutations(n) {
        let mut relabeled: Vec<(usize, usize)> =
            edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        relabeled.sort_unstable();
        if best.as_ref().map_or(true, |b| relabeled < *b) {
            best = Some(relabeled);
        }
    }
    best.unwrap_or_default()
}

fn canonical_catalog() -> &'static BTreeMap<(usize, Vec<(usize, usize)>), PatternId> {
    static CANON: OnceLock<BTreeMap<(usize, Vec<(usize, usize)>), PatternId>> = OnceLock::new();
    CANON.get_or_init(|| {
        catalog()
            .iter()
            .map(|(id, n, edges)| ((*n, canonical_form(*n, edges)), *id))
            .collect()
    })
}

/// Classify the internal multigraph of a candidate against the catalog.
pub fn classify_pattern(candidate: &SccCandidate) -> PatternId {
    let n = candidate.members.len();
    if n == 0 || n > MAX_PATTERN_NODES {
        return PatternId::Other;
    }
    let index_of: BTreeMap<Address, usize> =
        candidate.members.iter().enumerate().map(|(i, a)| (*a, i)).collect();
    let edges: Vec<(usize, usize)> = candidate
        .internal_edges
        .iter()
        .map(|e| (index_of[&e.from], index_of[&e.to]))
        .collect();
    let form = canonical_form(n, &edges);
    canonical_catalog().get(&(n, form)).copied().unwrap_or(PatternId::Other)
}

/// USD value of a confirmed event: each internal edge converted at its
/// asset's price on the edge's UTC day. Zero payments contribute zero
/// without needing a price.
pub fn usd_volume(event: &WashTradeEvent, prices: &PriceTable) -> Result<Money, MissingPrice> {
    let mut total = Money::zero();
    for edge in &event.candidate.internal_edges {
        if edge.payment.amount.is_zero() {
            continue;
        }
        total += &prices.usd_value(
            &edge.payment.amount,
            edge.payment.asset,
            utc_date(edge.timestamp),
        )?;
    }
    Ok(total)
}

/// Seconds between the first and last internal transfers, in chain order.
pub fn lifetime_seconds(event: &WashTradeEvent) -> u64 {
    let edges = &event.candidate.internal_edges;
    match (edges.first(), edges.last()) {
        (Some(first), Some(last)) => last.timestamp.saturating_sub(first.timestamp),
        _ => 0,
    }
}

/// Seconds between the member group acquiring the NFT and the episode
/// start. `None` when the NFT was minted to a member or has no delivering
/// transfer before the window.
pub fn acquisition_latency_seconds(
    event: &WashTradeEvent,
    full_history: &[TransferEvent],
) -> Option<u64> {
    let candidate = &event.candidate;
    let acquiring = full_history
        .iter()
        .filter(|t| t.chain_pos() < candidate.first_move && candidate.members.contains(&t.to))
        .max_by_key(|t| t.chain_pos())?;
    if acquiring.from.is_null() {
        return None; // minted straight to a member
    }
    let first = candidate.internal_edges.first()?;
    Some(first.timestamp.saturating_sub(acquiring.timestamp))
}

pub const OFF_MARKET: &str = "off-market";

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct MarketplaceStats {
    pub events: usize,
    pub usd_volume: Money,
    /// Wash volume over the externally supplied marketplace total, when
    /// the totals file covers the marketplace.
    pub share_of_total: Option<Money>,
}

/// Attribute every internal edge to the marketplace its transaction
/// interacted with, or to the off-market bucket.
pub fn marketplace_breakdown(
    events: &[WashTradeEvent],
    registry: &LabelRegistry,
    totals: &BTreeMap<String, Money>,
    prices: &PriceTable,
) -> Result<BTreeMap<String, MarketplaceStats>, MissingPrice> {
    let mut volume: BTreeMap<String, Money> = BTreeMap::new();
    let mut event_count: BTreeMap<String, usize> = BTreeMap::new();
    for event in events {
        let mut touched: BTreeSet<String> = BTreeSet::new();
        for edge in &event.candidate.internal_edges {
            let name = registry
                .marketplace_of(edge.interacted_contract)
                .unwrap_or(OFF_MARKET)
                .to_string();
            let usd = if edge.payment.amount.is_zero() {
                Money::zero()
            } else {
                prices.usd_value(
                    &edge.payment.amount,
                    edge.payment.asset,
                    utc_date(edge.timestamp),
                )?
            };
            *volume.entry(name.clone()).or_default() += &usd;
            touched.insert(name);
        }
        for name in touched {
            *event_count.entry(name).or_default() += 1;
        }
    }

    let mut out = BTreeMap::new();
    for (name, usd_volume) in volume {
        let share_of_total = totals
            .get(&name)
            .and_then(|total| usd_volume.checked_div(total));
        let events = event_count.get(&name).copied().unwrap_or(0);
        out.insert(name, MarketplaceStats { events, usd_volume, share_of_total });
    }
    Ok(out)
}

/// Per-account participation across all confirmed events.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct SerialReport {
    pub activity_counts: BTreeMap<Address, usize>,
    /// Accounts in two or more activities.
    pub serial: BTreeSet<Address>,
    /// Serial accounts whose every activity involves only serial accounts.
    pub only_with_serials: BTreeSet<Address>,
    /// Activities whose members are all serial.
    pub serials_only_event_count: usize,
    /// Serial accounts with two or more activities on one collection.
    pub collection_repeaters: BTreeSet<Address>,
    pub max_activities: usize,
}

pub fn serial_stats(events: &[WashTradeEvent]) -> SerialReport {
    let mut report = SerialReport::default();
    let mut per_collection: BTreeMap<(Address, Address), usize> = BTreeMap::new();
    for event in events {
        for member in &event.candidate.members {
            *report.activity_counts.entry(*member).or_default() += 1;
            *per_collection.entry((*member, event.candidate.nft.contract)).or_default() += 1;
        }
    }
    report.serial = report
        .activity_counts
        .iter()
        .filter(|(_, &count)| count >= 2)
        .map(|(a, _)| *a)
        .collect();
    report.max_activities = report.activity_counts.values().copied().max().unwrap_or(0);

    let mut breaks_exclusivity: BTreeSet<Address> = BTreeSet::new();
    for event in events {
        let all_serial = event.candidate.members.iter().all(|m| report.serial.contains(m));
        if all_serial {
            report.serials_only_event_count += 1;
        } else {
            breaks_exclusivity.extend(event.candidate.members.iter().copied());
        }
    }
    report.only_with_serials =
        report.serial.difference(&breaks_exclusivity).copied().collect();

    report.collection_repeaters = per_collection
        .iter()
        .filter(|((account, _), &count)| count >= 2 && report.serial.contains(account))
        .map(|((account, _), _)| *account)
        .collect();

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::{confirm_all, TxIndex, ZeroRiskEpsilon};
    use crate::domain::{NftId, Payment, TokenId, TransactionRecord, TxHash, TxKind};
    use crate::graph::{build_graph, find_sccs};
    use crate::ingest::CodePresenceOracle;
    use chrono::NaiveDate;

    fn addr(n: u8) -> Address {
        let mut bytes = [0u8; 20];
        bytes[19] = n;
        Address::new(bytes)
    }

    fn nft(n: u64) -> NftId {
        NftId::new(addr(0xCC), TokenId::from_u64(n))
    }

    fn hash(seq: u64) -> TxHash {
        let mut bytes = [0u8; 32];
        bytes[24..].copy_from_slice(&seq.to_be_bytes());
        TxHash::new(bytes)
    }

    const DAY: u64 = 86_400;
    // 2022-01-10T00:00:00Z
    const EPOCH: u64 = 1_641_772_800;

    fn transfer_at(
        token: u64,
        seq: u64,
        ts: u64,
        from: Address,
        to: Address,
        eth: &str,
    ) -> TransferEvent {
        TransferEvent {
            nft: nft(token),
            from,
            to,
            block_number: seq,
            tx_hash: hash(seq),
            tx_index: 0,
            timestamp: ts,
            interacted_contract: addr(0xDD),
            payment: Payment::native(eth.parse().unwrap()),
        }
    }

    fn candidate_of(events: &[TransferEvent]) -> SccCandidate {
        let graph = build_graph(events[0].nft, events).unwrap();
        let mut sccs = find_sccs(&graph);
        assert_eq!(sccs.len(), 1);
        sccs.remove(0)
    }

    fn event_of(candidate: SccCandidate) -> WashTradeEvent {
        // Confirmation route does not matter for analytics; go via self-trade
        // when possible, otherwise fabricate through confirm_all with a
        // funder. Simplest: wrap directly.
        let volume = candidate.internal_edges.iter().fold(
            BTreeMap::new(),
            |mut acc: BTreeMap<crate::domain::Asset, Money>, e| {
                *acc.entry(e.payment.asset).or_default() += &e.payment.amount;
                acc
            },
        );
        WashTradeEvent {
            window: (candidate.first_move, candidate.last_move),
            volume_native: volume,
            evidence: Vec::new(),
            candidate,
        }
    }

    fn price_table(rows: &[(&str, &str)]) -> PriceTable {
        let mut table = PriceTable::default();
        for (date, usd) in rows {
            table
                .insert(
                    crate::domain::Asset::Native,
                    NaiveDate::parse_from_str(date, "%Y-%m-%d").unwrap(),
                    usd.parse().unwrap(),
                )
                .unwrap();
        }
        table
    }

    #[test]
    fn usd_volume_converts_per_edge_day() {
        let event = event_of(candidate_of(&[
            transfer_at(1, 10, EPOCH, addr(1), addr(2), "1"),
            transfer_at(1, 20, EPOCH + 100, addr(2), addr(1), "1"),
        ]));
        let prices = price_table(&[("2022-01-10", "1000")]);
        assert_eq!(usd_volume(&event, &prices).unwrap(), Money::from_int(2000));

        // Across two days at different prices.
        let event = event_of(candidate_of(&[
            transfer_at(1, 10, EPOCH, addr(1), addr(2), "1"),
            transfer_at(1, 20, EPOCH + DAY, addr(2), addr(1), "1"),
        ]));
        let prices = price_table(&[("2022-01-10", "1000"), ("2022-01-11", "2000")]);
        assert_eq!(usd_volume(&event, &prices).unwrap(), Money::from_int(3000));
    }

    #[test]
    fn zero_edges_contribute_zero_without_price() {
        let event = event_of(candidate_of(&[
            transfer_at(1, 10, EPOCH, addr(1), addr(2), "0"),
            transfer_at(1, 20, EPOCH, addr(2), addr(1), "1"),
        ]));
        let prices = price_table(&[("2022-01-10", "1000")]);
        assert_eq!(usd_volume(&event, &prices).unwrap(), Money::from_int(1000));
    }

    #[test]
    fn missing_price_is_an_error_not_a_zero() {
        let event = event_of(candidate_of(&[
            transfer_at(1, 10, EPOCH, addr(1), addr(2), "1"),
            transfer_at(1, 20, EPOCH + DAY, addr(2), addr(1), "1"),
        ]));
        let prices = price_table(&[("2022-01-10", "1000")]);
        assert!(usd_volume(&event, &prices).is_err());
    }

    #[test]
    fn lifetime_spans_first_to_last_transfer() {
        let event = event_of(candidate_of(&[
            transfer_at(1, 10, 100, addr(1), addr(2), "1"),
            transfer_at(1, 20, 250, addr(2), addr(1), "1"),
        ]));
        assert_eq!(lifetime_seconds(&event), 150);

        let single = event_of(candidate_of(&[transfer_at(1, 10, 500, addr(1), addr(1), "1")]));
        assert_eq!(lifetime_seconds(&single), 0);
    }

    #[test]
    fn acquisition_latency_measures_prior_purchase() {
        let candidate = candidate_of(&[
            transfer_at(1, 100, EPOCH + 3 * DAY, addr(1), addr(2), "1"),
            transfer_at(1, 110, EPOCH + 3 * DAY + 60, addr(2), addr(1), "1"),
        ]);
        let history = vec![
            transfer_at(1, 50, EPOCH, addr(9), addr(1), "1"),
            transfer_at(1, 100, EPOCH + 3 * DAY, addr(1), addr(2), "1"),
            transfer_at(1, 110, EPOCH + 3 * DAY + 60, addr(2), addr(1), "1"),
        ];
        let event = event_of(candidate);
        assert_eq!(acquisition_latency_seconds(&event, &history), Some(3 * DAY));
    }

    #[test]
    fn minted_to_member_has_no_latency() {
        let candidate = candidate_of(&[
            transfer_at(1, 100, EPOCH, addr(1), addr(2), "1"),
            transfer_at(1, 110, EPOCH + 60, addr(2), addr(1), "1"),
        ]);
        let history = vec![
            transfer_at(1, 50, EPOCH - DAY, Address::NULL, addr(1), "0"),
            transfer_at(1, 100, EPOCH, addr(1), addr(2), "1"),
        ];
        let event = event_of(candidate);
        assert_eq!(acquisition_latency_seconds(&event, &history), None);
    }

    #[test]
    fn same_block_earlier_index_acquisition_counts() {
        let mut acquiring = transfer_at(1, 100, EPOCH, addr(9), addr(1), "1");
        acquiring.tx_index = 0;
        let mut first_move = transfer_at(1, 100, EPOCH, addr(1), addr(2), "1");
        first_move.tx_index = 1;
        let mut back = transfer_at(1, 101, EPOCH + 60, addr(2), addr(1), "1");
        back.tx_index = 0;
        let candidate = candidate_of(&[first_move.clone(), back.clone()]);
        let history = vec![acquiring, first_move, back];
        let event = event_of(candidate);
        assert_eq!(acquisition_latency_seconds(&event, &history), Some(0));
    }

    #[test]
    fn classifies_round_trip_and_cycles() {
        let p1 = candidate_of(&[
            transfer_at(1, 10, 0, addr(1), addr(2), "1"),
            transfer_at(1, 20, 0, addr(2), addr(1), "1"),
        ]);
        assert_eq!(classify_pattern(&p1), PatternId::P1);

        let p2 = candidate_of(&[
            transfer_at(1, 10, 0, addr(1), addr(2), "1"),
            transfer_at(1, 20, 0, addr(2), addr(3), "1"),
            transfer_at(1, 30, 0, addr(3), addr(1), "1"),
        ]);
        assert_eq!(classify_pattern(&p2), PatternId::P2);

        // Same shape under a different labeling.
        let p2_relabeled = candidate_of(&[
            transfer_at(1, 10, 0, addr(9), addr(4), "1"),
            transfer_at(1, 20, 0, addr(4), addr(7), "1"),
            transfer_at(1, 30, 0, addr(7), addr(9), "1"),
        ]);
        assert_eq!(classify_pattern(&p2_relabeled), PatternId::P2);

        let p5 = candidate_of(&[
            transfer_at(1, 10, 0, addr(1), addr(2), "1"),
            transfer_at(1, 20, 0, addr(2), addr(3), "1"),
            transfer_at(1, 30, 0, addr(3), addr(4), "1"),
            transfer_at(1, 40, 0, addr(4), addr(1), "1"),
        ]);
        assert_eq!(classify_pattern(&p5), PatternId::P5);

        let p10 = candidate_of(&[
            transfer_at(1, 10, 0, addr(1), addr(2), "1"),
            transfer_at(1, 20, 0, addr(2), addr(3), "1"),
            transfer_at(1, 30, 0, addr(3), addr(4), "1"),
            transfer_at(1, 40, 0, addr(4), addr(5), "1"),
            transfer_at(1, 50, 0, addr(5), addr(1), "1"),
        ]);
        assert_eq!(classify_pattern(&p10), PatternId::P10);
    }

    #[test]
    fn unmatched_shapes_fall_through_to_other() {
        // A round trip with an extra repeat edge matches nothing exactly.
        let stray = candidate_of(&[
            transfer_at(1, 10, 0, addr(1), addr(2), "1"),
            transfer_at(1, 20, 0, addr(2), addr(1), "1"),
            transfer_at(1, 30, 0, addr(1), addr(2), "1"),
        ]);
        assert_eq!(classify_pattern(&stray), PatternId::Other);

        // Self-loop singleton is not in the catalog.
        let single = candidate_of(&[transfer_at(1, 10, 0, addr(1), addr(1), "1")]);
        assert_eq!(classify_pattern(&single), PatternId::Other);
    }

    #[test]
    fn every_catalog_entry_classifies_as_itself() {
        for (id, n, edges) in catalog() {
            let members: Vec<Address> = (0..*n as u8).map(|i| addr(i + 1)).collect();
            let events: Vec<TransferEvent> = edges
                .iter()
                .enumerate()
                .map(|(i, &(u, v))| {
                    transfer_at(1, (i as u64 + 1) * 10, 0, members[u], members[v], "1")
                })
                .collect();
            let candidate = candidate_of(&events);
            assert_eq!(classify_pattern(&candidate), *id, "catalog shape {id:?}");
        }
    }

    #[test]
    fn marketplace_attribution_and_shares() {
        let market = addr(0xA1);
        let mut registry = LabelRegistry::default();
        registry.marketplaces.insert(market, "alpha".to_string());

        let mut on_market = transfer_at(1, 10, EPOCH, addr(1), addr(2), "4");
        on_market.interacted_contract = market;
        let off_market = transfer_at(1, 20, EPOCH, addr(2), addr(1), "1");
        let event = event_of(candidate_of(&[on_market, off_market]));

        let prices = price_table(&[("2022-01-10", "1000")]);
        let totals = BTreeMap::from([("alpha".to_string(), Money::from_int(8000))]);
        let breakdown =
            marketplace_breakdown(std::slice::from_ref(&event), &registry, &totals, &prices)
                .unwrap();

        assert_eq!(breakdown["alpha"].usd_volume, Money::from_int(4000));
        assert_eq!(breakdown["alpha"].events, 1);
        assert_eq!(breakdown["alpha"].share_of_total, Some(Money::from_ratio(1, 2)));
        assert_eq!(breakdown[OFF_MARKET].usd_volume, Money::from_int(1000));
        assert_eq!(breakdown[OFF_MARKET].share_of_total, None);

        let total: Money = breakdown.values().map(|s| &s.usd_volume).sum();
        assert_eq!(total, usd_volume(&event, &prices).unwrap());
    }

    #[test]
    fn serial_stats_on_planted_cohort() {
        // 3 accounts sharing 2 events; 4 singleton accounts in 2 more events.
        let serial_members = [addr(1), addr(2), addr(3)];
        let mut events = Vec::new();
        for (token, base) in [(1u64, 10u64), (2, 100)] {
            events.push(event_of(candidate_of(&[
                transfer_at(token, base, 0, serial_members[0], serial_members[1], "1"),
                transfer_at(token, base + 1, 0, serial_members[1], serial_members[2], "1"),
                transfer_at(token, base + 2, 0, serial_members[2], serial_members[0], "1"),
            ])));
        }
        for (token, base, a, b) in [(3u64, 200u64, addr(4), addr(5)), (4, 300, addr(6), addr(7))] {
            events.push(event_of(candidate_of(&[
                transfer_at(token, base, 0, a, b, "1"),
                transfer_at(token, base + 1, 0, b, a, "1"),
            ])));
        }

        let report = serial_stats(&events);
        assert_eq!(report.serial.len(), 3);
        assert_eq!(report.serials_only_event_count, 2);
        assert_eq!(report.only_with_serials.len(), 3);
        assert_eq!(report.activity_counts[&addr(1)], 2);
        assert_eq!(report.activity_counts[&addr(4)], 1);
        assert_eq!(report.max_activities, 2);
        // Both shared events hit the same collection contract.
        assert_eq!(report.collection_repeaters.len(), 3);
    }

    #[test]
    fn single_event_has_no_serials() {
        let event = event_of(candidate_of(&[
            transfer_at(1, 10, 0, addr(1), addr(2), "1"),
            transfer_at(1, 20, 0, addr(2), addr(1), "1"),
        ]));
        let report = serial_stats(&[event]);
        assert!(report.serial.is_empty());
        assert_eq!(report.serials_only_event_count, 0);
    }

    #[test]
    fn detection_pipeline_feeds_analytics() {
        // End-to-end sanity: confirm via self-trade then classify.
        let candidate = candidate_of(&[transfer_at(1, 10, 0, addr(1), addr(1), "1")]);
        let records: Vec<TransactionRecord> = Vec::new();
        let idx = TxIndex::build(&records);
        let outcome = confirm_all(
            &[candidate],
            &idx,
            &LabelRegistry::default(),
            &CodePresenceOracle::default(),
            &ZeroRiskEpsilon::default(),
        );
        assert_eq!(outcome.events.len(), 1);
        assert_eq!(classify_pattern(&outcome.events[0].candidate), PatternId::Other);
        let _ = TxKind::ValueTransfer;
    }
}
