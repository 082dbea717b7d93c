//! Profitability of confirmed activity under the two observed schemes:
//! pro-rata reward-token farming and resale after artificial volume.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::{TxIndex, WashTradeEvent};
use crate::domain::{utc_date, Address, Asset, ChainPos, TransferEvent, TxHash};
use crate::ingest::{MissingPrice, PriceTable};
use crate::money::Money;

#[derive(Debug, Error)]
pub enum ProfitError {
    #[error("marketplace daily volume is zero")]
    ZeroMarketVolume,
    #[error("invalid reward query: {0}")]
    InvalidQuery(String),
    #[error(transparent)]
    MissingPrice(#[from] MissingPrice),
}

/// One day's reward question: a user trading `user_volume` out of the
/// marketplace's `market_volume` while `emission` tokens are distributed.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RewardQuery {
    user_volume: Money,
    market_volume: Money,
    emission: Money,
}

impl RewardQuery {
    pub fn new(
        user_volume: Money,
        market_volume: Money,
        emission: Money,
    ) -> Result<Self, ProfitError> {
        if market_volume.is_zero() {
            return Err(ProfitError::ZeroMarketVolume);
        }
        if market_volume.is_negative() || user_volume.is_negative() || emission.is_negative() {
            return Err(ProfitError::InvalidQuery("volumes must be non-negative".into()));
        }
        if user_volume > market_volume {
            return Err(ProfitError::InvalidQuery(
                "user volume exceeds marketplace volume".into(),
            ));
        }
        Ok(RewardQuery { user_volume, market_volume, emission })
    }
}

/// Pro-rata daily reward: `user/market * emission`, exactly.
pub fn reward_share(query: &RewardQuery) -> Money {
    &(&query.user_volume / &query.market_volume) * &query.emission
}

/// A member's first reward claim after the activity.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ClaimRecord {
    pub account: Address,
    pub distributor: Address,
    pub token: Asset,
    pub tokens: Money,
    pub claim_timestamp: u64,
    pub claim_pos: ChainPos,
    pub claim_gas_fee: Money,
    pub tx_hash: TxHash,
}

/// For each member, the earliest transaction after the episode whose
/// recipient is a reward distributor. Members that never claim are absent.
pub fn extract_claims(
    event: &WashTradeEvent,
    txs: &TxIndex,
    distributors: &BTreeMap<Address, String>,
) -> Vec<ClaimRecord> {
    let mut claims = Vec::new();
    for member in &event.candidate.members {
        let mut first: Option<ClaimRecord> = None;
        for idx in txs.sent_by(*member) {
            let r = txs.record(idx);
            if r.chain_pos() <= event.window.1 || !distributors.contains_key(&r.to) {
                continue;
            }
            let candidate = ClaimRecord {
                account: *member,
                distributor: r.to,
                token: r.payment.asset,
                tokens: r.payment.amount.clone(),
                claim_timestamp: r.timestamp,
                claim_pos: r.chain_pos(),
                claim_gas_fee: r.gas_fee.clone(),
                tx_hash: r.tx_hash,
            };
            match &first {
                Some(existing) if existing.claim_pos <= candidate.claim_pos => {}
                _ => first = Some(candidate),
            }
        }
        claims.extend(first);
    }
    claims
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfitVerdict {
    Successful,
    Failed,
    NoClaim,
}

/// Reward-scheme outcome of one activity, all in USD at the days the
/// tokens were claimed or spent.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ProfitLedger {
    pub rewards_usd: Money,
    pub nftm_fees_usd: Money,
    pub transaction_fees_usd: Money,
    pub balance_usd: Money,
    pub verdict: ProfitVerdict,
}

/// Distinct transaction hashes behind the internal edges, with a
/// representative timestamp for pricing the gas.
fn internal_edge_txs(event: &WashTradeEvent) -> Vec<(TxHash, u64)> {
    let mut seen: BTreeMap<TxHash, u64> = BTreeMap::new();
    for edge in &event.candidate.internal_edges {
        seen.entry(edge.tx_hash).or_insert(edge.timestamp);
    }
    seen.into_iter().collect()
}

fn gas_fees_usd(
    event: &WashTradeEvent,
    txs: &TxIndex,
    prices: &PriceTable,
) -> Result<Money, MissingPrice> {
    let mut total = Money::zero();
    for (hash, timestamp) in internal_edge_txs(event) {
        if let Some(gas) = txs.gas_fee_of(hash) {
            if !gas.is_zero() {
                total += &prices.usd_value(gas, Asset::Native, utc_date(timestamp))?;
            }
        }
    }
    Ok(total)
}

/// Transfers from members to treasury accounts within `[from, to]`,
/// converted to USD on their own dates.
fn treasury_fees_usd(
    event: &WashTradeEvent,
    txs: &TxIndex,
    treasuries: &BTreeMap<Address, String>,
    window: (ChainPos, ChainPos),
    prices: &PriceTable,
) -> Result<Money, MissingPrice> {
    let mut total = Money::zero();
    for member in &event.candidate.members {
        for idx in txs.sent_by(*member) {
            let r = txs.record(idx);
            let pos = r.chain_pos();
            if pos < window.0 || pos > window.1 || !treasuries.contains_key(&r.to) {
                continue;
            }
            if r.payment.amount.is_zero() {
                continue;
            }
            total += &prices.usd_value(&r.payment.amount, r.payment.asset, utc_date(r.timestamp))?;
        }
    }
    Ok(total)
}

/// Balance of the reward scheme: claimed tokens at claim-day prices, minus
/// marketplace fees observed as treasury transfers during the window, minus
/// the gas of the trading and claim transactions.
pub fn reward_balance(
    event: &WashTradeEvent,
    claims: &[ClaimRecord],
    txs: &TxIndex,
    treasuries: &BTreeMap<Address, String>,
    prices: &PriceTable,
) -> Result<ProfitLedger, MissingPrice> {
    let mut rewards_usd = Money::zero();
    let mut claim_gas_usd = Money::zero();
    for claim in claims {
        let date = utc_date(claim.claim_timestamp);
        if !claim.tokens.is_zero() {
            rewards_usd += &prices.usd_value(&claim.tokens, claim.token, date)?;
        }
        if !claim.claim_gas_fee.is_zero() {
            claim_gas_usd += &prices.usd_value(&claim.claim_gas_fee, Asset::Native, date)?;
        }
    }

    let transaction_fees_usd = gas_fees_usd(event, txs, prices)? + claim_gas_usd;
    let nftm_fees_usd = treasury_fees_usd(event, txs, treasuries, event.window, prices)?;
    let balance_usd = &rewards_usd - &(&nftm_fees_usd + &transaction_fees_usd);
    let verdict = if claims.is_empty() {
        ProfitVerdict::NoClaim
    } else if balance_usd.is_positive() {
        ProfitVerdict::Successful
    } else {
        ProfitVerdict::Failed
    };
    Ok(ProfitLedger { rewards_usd, nftm_fees_usd, transaction_fees_usd, balance_usd, verdict })
}

/// Resale outcome of one activity, in native units and in USD at the times
/// the transactions happened.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ResaleLedger {
    pub buy_price_native: Money,
    pub resell_price_native: Money,
    pub fees_native: Money,
    /// resell - buy, before any fees.
    pub gross_native: Money,
    pub balance_native: Money,
    pub buy_usd: Money,
    pub resell_usd: Money,
    pub fees_usd: Money,
    pub balance_usd: Money,
}

/// The transfer that brought the NFT to the member group: the latest
/// delivery to any member strictly before the episode.
fn acquiring_transfer<'a>(
    event: &WashTradeEvent,
    full_history: &'a [TransferEvent],
) -> Option<&'a TransferEvent> {
    full_history
        .iter()
        .filter(|t| {
            t.chain_pos() < event.candidate.first_move && event.candidate.members.contains(&t.to)
        })
        .max_by_key(|t| t.chain_pos())
}

/// First paid transfer handing the NFT from a member to an outsider after
/// the episode. `None` means the group never cashed out; zero-payment
/// transfers are internal movements, not sales.
fn resale_transfer<'a>(
    event: &WashTradeEvent,
    full_history: &'a [TransferEvent],
) -> Option<&'a TransferEvent> {
    full_history
        .iter()
        .filter(|t| {
            t.chain_pos() > event.candidate.last_move
                && event.candidate.members.contains(&t.from)
                && !event.candidate.members.contains(&t.to)
                && t.payment.amount.is_positive()
        })
        .min_by_key(|t| t.chain_pos())
}

/// Eq.-3 balance: `resell - (buy + fees)`, where fees cover the gas of the
/// internal and resale transactions plus treasury transfers up to the sale.
pub fn resale_balance(
    event: &WashTradeEvent,
    full_history: &[TransferEvent],
    txs: &TxIndex,
    treasuries: &BTreeMap<Address, String>,
    prices: &PriceTable,
) -> Result<Option<ResaleLedger>, MissingPrice> {
    let Some(resale) = resale_transfer(event, full_history) else {
        return Ok(None);
    };
    let acquiring = acquiring_transfer(event, full_history);

    let (buy_price_native, buy_usd) = match acquiring {
        Some(t) if !t.payment.amount.is_zero() => {
            let usd =
                prices.usd_value(&t.payment.amount, t.payment.asset, utc_date(t.timestamp))?;
            (t.payment.amount.clone(), usd)
        }
        _ => (Money::zero(), Money::zero()),
    };

    let resell_price_native = resale.payment.amount.clone();
    let resell_usd = prices.usd_value(
        &resale.payment.amount,
        resale.payment.asset,
        utc_date(resale.timestamp),
    )?;

    let mut fees_native = Money::zero();
    let mut fees_usd = Money::zero();
    let mut gas_legs: Vec<(TxHash, u64)> = internal_edge_txs(event);
    gas_legs.push((resale.tx_hash, resale.timestamp));
    gas_legs.sort();
    gas_legs.dedup();
    for (hash, timestamp) in gas_legs {
        if let Some(gas) = txs.gas_fee_of(hash) {
            if !gas.is_zero() {
                fees_native += gas;
                fees_usd += &prices.usd_value(gas, Asset::Native, utc_date(timestamp))?;
            }
        }
    }

    // Marketplace fees from the start of the episode through the sale.
    let fee_window = (event.candidate.first_move, resale.chain_pos());
    for member in &event.candidate.members {
        for idx in txs.sent_by(*member) {
            let r = txs.record(idx);
            let pos = r.chain_pos();
            if pos < fee_window.0 || pos > fee_window.1 || !treasuries.contains_key(&r.to) {
                continue;
            }
            if r.payment.amount.is_zero() {
                continue;
            }
            fees_native += &r.payment.amount;
            fees_usd += &prices.usd_value(&r.payment.amount, r.payment.asset, utc_date(r.timestamp))?;
        }
    }

    let gross_native = &resell_price_native - &buy_price_native;
    let balance_native = &gross_native - &fees_native;
    let balance_usd = &resell_usd - &(&buy_usd + &fees_usd);

    Ok(Some(ResaleLedger {
        buy_price_native,
        resell_price_native,
        fees_native,
        gross_native,
        balance_native,
        buy_usd,
        resell_usd,
        fees_usd,
        balance_usd,
    }))
}
