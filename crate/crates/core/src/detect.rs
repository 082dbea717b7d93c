//! Wash-trade confirmation on surviving candidates: zero-risk balance,
//! common funder, common exit, self-trade, and propagation from already
//! confirmed member sets, plus the evidence-overlap summary.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{Address, Asset, ChainPos, NftId, TransactionRecord, TxHash, TxKind};
use crate::graph::SccCandidate;
use crate::ingest::{CodePresenceOracle, LabelRegistry};
use crate::money::Money;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceKind {
    ZeroRisk,
    CommonFunderInternal,
    CommonFunderExternal,
    CommonExitInternal,
    CommonExitExternal,
    SelfTrade,
    Propagated,
}

impl EvidenceKind {
    pub fn label(&self) -> &'static str {
        match self {
            EvidenceKind::ZeroRisk => "zero_risk",
            EvidenceKind::CommonFunderInternal => "common_funder_internal",
            EvidenceKind::CommonFunderExternal => "common_funder_external",
            EvidenceKind::CommonExitInternal => "common_exit_internal",
            EvidenceKind::CommonExitExternal => "common_exit_external",
            EvidenceKind::SelfTrade => "self_trade",
            EvidenceKind::Propagated => "propagated",
        }
    }
}

/// One confirmation of a candidate. The witness is the funder or exit
/// account where the kind has one; supporting transactions are the records
/// the verdict can be re-derived from (empty only for propagation).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Evidence {
    pub kind: EvidenceKind,
    pub witness: Option<Address>,
    pub supporting_txs: Vec<TxHash>,
}

/// A confirmed wash-trading activity.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WashTradeEvent {
    pub candidate: SccCandidate,
    pub evidence: Vec<Evidence>,
    pub volume_native: BTreeMap<Asset, Money>,
    pub window: (ChainPos, ChainPos),
}

impl WashTradeEvent {
    pub fn evidence_kinds(&self) -> BTreeSet<EvidenceKind> {
        self.evidence.iter().map(|e| e.kind).collect()
    }
}

/// Tolerance for the zero-risk balance: a member's per-asset net must stay
/// within `max(abs, rel * turnover)` of zero.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ZeroRiskEpsilon {
    pub abs: Money,
    pub rel: Money,
}

impl Default for ZeroRiskEpsilon {
    fn default() -> Self {
        ZeroRiskEpsilon {
            abs: "0.000001".parse().expect("literal"),
            rel: "0.001".parse().expect("literal"),
        }
    }
}

impl ZeroRiskEpsilon {
    pub fn exact() -> Self {
        ZeroRiskEpsilon { abs: Money::zero(), rel: Money::zero() }
    }

    fn tolerance(&self, turnover: &Money) -> Money {
        (&self.rel * turnover).max(self.abs.clone())
    }
}

/// Immutable per-account and per-hash index over the transaction records.
pub struct TxIndex<'a> {
    records: &'a [TransactionRecord],
    by_account: BTreeMap<Address, Vec<usize>>,
    by_hash: BTreeMap<TxHash, Vec<usize>>,
}

impl<'a> TxIndex<'a> {
    pub fn build(records: &'a [TransactionRecord]) -> Self {
        let mut by_account: BTreeMap<Address, Vec<usize>> = BTreeMap::new();
        let mut by_hash: BTreeMap<TxHash, Vec<usize>> = BTreeMap::new();
        for (i, record) in records.iter().enumerate() {
            by_account.entry(record.from).or_default().push(i);
            if record.to != record.from {
                by_account.entry(record.to).or_default().push(i);
            }
            by_hash.entry(record.tx_hash).or_default().push(i);
        }
        TxIndex { records, by_account, by_hash }
    }

    pub fn record(&self, idx: usize) -> &TransactionRecord {
        &self.records[idx]
    }

    fn account_records(&self, account: Address) -> &[usize] {
        self.by_account.get(&account).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Indices of records sent by `account`, in stream order.
    pub fn sent_by(&self, account: Address) -> impl Iterator<Item = usize> + '_ {
        self.account_records(account)
            .iter()
            .copied()
            .filter(move |&i| self.records[i].from == account)
    }

    /// Gas fee of a transaction, counted once per hash.
    pub fn gas_fee_of(&self, hash: TxHash) -> Option<&Money> {
        self.by_hash.get(&hash).and_then(|v| v.first()).map(|&i| &self.records[i].gas_fee)
    }

    pub fn lookup_hash(&self, hash: TxHash) -> &[usize] {
        self.by_hash.get(&hash).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Record indices with `from` or `to` in `accounts`, deduplicated,
    /// in stream order.
    fn touching(&self, accounts: &BTreeSet<Address>) -> Vec<usize> {
        let mut seen = BTreeSet::new();
        for account in accounts {
            seen.extend(self.account_records(*account).iter().copied());
        }
        seen.into_iter().collect()
    }
}

/// A plain movement of value or tokens, as opposed to a contract call.
fn is_plain_transfer(record: &TransactionRecord) -> bool {
    matches!(record.kind, TxKind::ValueTransfer | TxKind::TokenTransfer)
}

fn sorted_hashes(idx: &TxIndex, ids: impl IntoIterator<Item = usize>) -> Vec<TxHash> {
    let mut hashes: Vec<TxHash> = ids.into_iter().map(|i| idx.record(i).tx_hash).collect();
    hashes.sort();
    hashes.dedup();
    hashes
}

/// Zero-risk position: within the episode window, every member's per-asset
/// net of member-to-member payments is zero (within tolerance), gas fees
/// left out of the balance. At least one paid internal transaction must
/// exist to ground the verdict.
pub fn check_zero_risk(
    candidate: &SccCandidate,
    txs: &TxIndex,
    epsilon: &ZeroRiskEpsilon,
) -> Option<Evidence> {
    let members = &candidate.members;
    let mut internal = Vec::new();
    for idx in txs.touching(members) {
        let r = txs.record(idx);
        let pos = r.chain_pos();
        if members.contains(&r.from)
            && members.contains(&r.to)
            && pos >= candidate.first_move
            && pos <= candidate.last_move
        {
            internal.push(idx);
        }
    }
    if internal.is_empty() {
        return None;
    }

    let mut net: BTreeMap<(Address, Asset), Money> = BTreeMap::new();
    let mut turnover: BTreeMap<(Address, Asset), Money> = BTreeMap::new();
    let mut any_paid = false;
    for &idx in &internal {
        let r = txs.record(idx);
        let amount = &r.payment.amount;
        if amount.is_positive() {
            any_paid = true;
        }
        let asset = r.payment.asset;
        *net.entry((r.to, asset)).or_default() += amount;
        *net.entry((r.from, asset)).or_default() -= amount;
        *turnover.entry((r.to, asset)).or_default() += amount;
        *turnover.entry((r.from, asset)).or_default() += amount;
    }
    if !any_paid {
        return None;
    }

    for (key, balance) in &net {
        let tolerance = epsilon.tolerance(&turnover[key]);
        if balance.abs() > tolerance {
            return None;
        }
    }

    Some(Evidence {
        kind: EvidenceKind::ZeroRisk,
        witness: None,
        supporting_txs: sorted_hashes(txs, internal),
    })
}

struct FunderScan {
    internal: Option<Evidence>,
    external: Option<Evidence>,
    /// Service-labeled account funding two or more members: excluded from
    /// confirmation, surfaced separately.
    exchange_funder: Option<Address>,
}

fn scan_funders(
    candidate: &SccCandidate,
    txs: &TxIndex,
    registry: &LabelRegistry,
    code: &CodePresenceOracle,
) -> FunderScan {
    let members = &candidate.members;
    // funder -> (distinct members funded, funding record indices)
    let mut by_funder: BTreeMap<Address, (BTreeSet<Address>, Vec<usize>)> = BTreeMap::new();
    for member in members {
        for &idx in txs.account_records(*member) {
            let r = txs.record(idx);
            if r.to == *member
                && r.from != *member
                && r.chain_pos() < candidate.first_move
                && is_plain_transfer(r)
                && r.payment.amount.is_positive()
            {
                let entry = by_funder.entry(r.from).or_default();
                entry.0.insert(*member);
                entry.1.push(idx);
            }
        }
    }

    let internal = by_funder
        .iter()
        .find(|(funder, _)| members.contains(funder))
        .map(|(funder, (_, ids))| Evidence {
            kind: EvidenceKind::CommonFunderInternal,
            witness: Some(*funder),
            supporting_txs: sorted_hashes(txs, ids.iter().copied()),
        });

    let mut exchange_funder = None;
    let mut best: Option<(&Address, &(BTreeSet<Address>, Vec<usize>))> = None;
    for (funder, entry) in &by_funder {
        if members.contains(funder) || entry.0.len() < 2 {
            continue;
        }
        if registry.is_service(*funder) {
            exchange_funder.get_or_insert(*funder);
            continue;
        }
        if code.has_bytecode(*funder) {
            continue;
        }
        match best {
            Some((_, b)) if b.0.len() >= entry.0.len() => {}
            _ => best = Some((funder, entry)),
        }
    }
    let external = best.map(|(funder, (_, ids))| Evidence {
        kind: EvidenceKind::CommonFunderExternal,
        witness: Some(*funder),
        supporting_txs: sorted_hashes(txs, ids.iter().copied()),
    });

    FunderScan { internal, external, exchange_funder }
}

/// Common funder: a plain transfer into a member strictly before the first
/// NFT move. Internal (a member funding another member) takes precedence
/// over external (an unlabeled, code-free outsider funding two or more
/// distinct members).
pub fn find_common_funder(
    candidate: &SccCandidate,
    txs: &TxIndex,
    registry: &LabelRegistry,
    code: &CodePresenceOracle,
) -> Option<Evidence> {
    let scan = scan_funders(candidate, txs, registry, code);
    scan.internal.or(scan.external)
}

struct ExitScan {
    internal: Option<Evidence>,
    external: Option<Evidence>,
}

fn scan_exits(
    candidate: &SccCandidate,
    txs: &TxIndex,
    registry: &LabelRegistry,
    code: &CodePresenceOracle,
) -> ExitScan {
    let members = &candidate.members;
    // recipient -> (distinct member senders, exit record indices)
    let mut by_exit: BTreeMap<Address, (BTreeSet<Address>, Vec<usize>)> = BTreeMap::new();
    for member in members {
        for &idx in txs.account_records(*member) {
            let r = txs.record(idx);
            if r.from == *member
                && r.to != *member
                && r.chain_pos() > candidate.last_move
                && is_plain_transfer(r)
                && r.payment.amount.is_positive()
            {
                let entry = by_exit.entry(r.to).or_default();
                entry.0.insert(*member);
                entry.1.push(idx);
            }
        }
    }

    let internal = by_exit
        .iter()
        .find(|(exit, _)| members.contains(exit))
        .map(|(exit, (_, ids))| Evidence {
            kind: EvidenceKind::CommonExitInternal,
            witness: Some(*exit),
            supporting_txs: sorted_hashes(txs, ids.iter().copied()),
        });

    let mut best: Option<(&Address, &(BTreeSet<Address>, Vec<usize>))> = None;
    for (exit, entry) in &by_exit {
        if members.contains(exit)
            || entry.0.len() < 2
            || registry.is_service(*exit)
            || code.has_bytecode(*exit)
        {
            continue;
        }
        match best {
            Some((_, b)) if b.0.len() >= entry.0.len() => {}
            _ => best = Some((exit, entry)),
        }
    }
    let external = best.map(|(exit, (_, ids))| Evidence {
        kind: EvidenceKind::CommonExitExternal,
        witness: Some(*exit),
        supporting_txs: sorted_hashes(txs, ids.iter().copied()),
    });

    ExitScan { internal, external }
}

/// Common exit: the mirror of the funder rule on plain transfers sent by
/// members strictly after the last NFT move.
pub fn find_common_exit(
    candidate: &SccCandidate,
    txs: &TxIndex,
    registry: &LabelRegistry,
    code: &CodePresenceOracle,
) -> Option<Evidence> {
    let scan = scan_exits(candidate, txs, registry, code);
    scan.internal.or(scan.external)
}

/// Self-trade: any internal edge whose seller and buyer coincide.
pub fn check_self_trade(candidate: &SccCandidate) -> Option<Evidence> {
    let mut hashes: Vec<TxHash> = candidate
        .internal_edges
        .iter()
        .filter(|e| e.is_self_loop())
        .map(|e| e.tx_hash)
        .collect();
    if hashes.is_empty() {
        return None;
    }
    hashes.sort();
    hashes.dedup();
    Some(Evidence { kind: EvidenceKind::SelfTrade, witness: None, supporting_txs: hashes })
}

/// Propagation: an unconfirmed candidate whose member set exactly equals a
/// directly confirmed member set is confirmed too. Returns, aligned with
/// the input, the propagated evidence for candidates that gain one.
pub fn propagate_confirmed(
    candidates: &[SccCandidate],
    directly_confirmed: &BTreeSet<BTreeSet<Address>>,
) -> Vec<Option<Evidence>> {
    candidates
        .iter()
        .map(|c| {
            directly_confirmed.contains(&c.members).then(|| Evidence {
                kind: EvidenceKind::Propagated,
                witness: None,
                supporting_txs: Vec::new(),
            })
        })
        .collect()
}

/// Venn-style summary: how many confirmed activities each exact combination
/// of evidence kinds accounts for.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct OverlapSummary {
    pub cells: BTreeMap<Vec<EvidenceKind>, usize>,
    pub per_kind: BTreeMap<EvidenceKind, usize>,
    pub confirmed: usize,
}

impl OverlapSummary {
    fn add(&mut self, kinds: &BTreeSet<EvidenceKind>) {
        let key: Vec<EvidenceKind> = kinds.iter().copied().collect();
        *self.cells.entry(key).or_default() += 1;
        for kind in kinds {
            *self.per_kind.entry(*kind).or_default() += 1;
        }
        self.confirmed += 1;
    }
}

/// Everything detection produces for one candidate set.
pub struct DetectionOutcome {
    pub events: Vec<WashTradeEvent>,
    pub overlap: OverlapSummary,
    /// Candidates left unconfirmed whose only would-be funder is an
    /// exchange or other labeled service.
    pub exchange_funded_unconfirmed: Vec<(NftId, BTreeSet<Address>)>,
}

fn direct_evidences(
    candidate: &SccCandidate,
    txs: &TxIndex,
    registry: &LabelRegistry,
    code: &CodePresenceOracle,
    epsilon: &ZeroRiskEpsilon,
) -> (Vec<Evidence>, Option<Address>) {
    let mut evidence = Vec::new();
    if let Some(e) = check_zero_risk(candidate, txs, epsilon) {
        evidence.push(e);
    }
    let funders = scan_funders(candidate, txs, registry, code);
    if let Some(e) = funders.internal {
        evidence.push(e);
    }
    if let Some(e) = funders.external {
        evidence.push(e);
    }
    let exits = scan_exits(candidate, txs, registry, code);
    if let Some(e) = exits.internal {
        evidence.push(e);
    }
    if let Some(e) = exits.external {
        evidence.push(e);
    }
    if let Some(e) = check_self_trade(candidate) {
        evidence.push(e);
    }
    (evidence, funders.exchange_funder)
}

fn asset_volume(candidate: &SccCandidate) -> BTreeMap<Asset, Money> {
    let mut volume: BTreeMap<Asset, Money> = BTreeMap::new();
    for edge in &candidate.internal_edges {
        *volume.entry(edge.payment.asset).or_default() += &edge.payment.amount;
    }
    volume
}

/// Run all five checks over every candidate. A candidate becomes a wash
/// trade event iff at least one evidence holds; propagation then runs as a
/// single sequential pass over the directly confirmed member sets.
pub fn confirm_all(
    candidates: &[SccCandidate],
    txs: &TxIndex,
    registry: &LabelRegistry,
    code: &CodePresenceOracle,
    epsilon: &ZeroRiskEpsilon,
) -> DetectionOutcome {
    let direct: Vec<(Vec<Evidence>, Option<Address>)> = candidates
        .par_iter()
        .map(|c| direct_evidences(c, txs, registry, code, epsilon))
        .collect();

    let directly_confirmed: BTreeSet<BTreeSet<Address>> = candidates
        .iter()
        .zip(&direct)
        .filter(|(_, (ev, _))| !ev.is_empty())
        .map(|(c, _)| c.members.clone())
        .collect();

    let mut events = Vec::new();
    let mut overlap = OverlapSummary::default();
    let mut exchange_funded_unconfirmed = Vec::new();

    for (candidate, (mut evidence, exchange_funder)) in candidates.iter().zip(direct) {
        if evidence.is_empty() {
            // One propagation pass: only directly confirmed member sets seed it.
            if directly_confirmed.contains(&candidate.members) {
                evidence.push(Evidence {
                    kind: EvidenceKind::Propagated,
                    witness: None,
                    supporting_txs: Vec::new(),
                });
            } else {
                if exchange_funder.is_some() {
                    exchange_funded_unconfirmed.push((candidate.nft, candidate.members.clone()));
                }
                continue;
            }
        }
        let event = WashTradeEvent {
            candidate: candidate.clone(),
            evidence,
            volume_native: asset_volume(candidate),
            window: (candidate.first_move, candidate.last_move),
        };
        overlap.add(&event.evidence_kinds());
        events.push(event);
    }

    DetectionOutcome { events, overlap, exchange_funded_unconfirmed }
}
