//! Batch forensics engine for NFT wash trading.
//!
//! The pipeline ingests ERC-721 transfer logs and account-level value
//! transfers, mines strongly connected components in per-NFT transaction
//! graphs, cleans out service/contract/zero-volume noise, confirms wash
//! trading through five independent checks, characterizes the confirmed
//! activity, and prices its profitability under the reward-token and
//! resale models.

pub mod domain;
pub mod graph;
pub mod analytics;
pub mod detect;
pub mod filter;
pub mod ingest;
pub mod money;
pub mod pipeline;
pub mod profit;
pub mod report;
pub mod synth;

pub use domain::{
    Address, Asset, ChainPos, NftId, Payment, RawLogRecord, TokenId, TransactionRecord,
    TransferEvent, TxHash, TxKind,
};
pub use money::Money;
