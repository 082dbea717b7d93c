//! Decoding of raw export records into typed domain objects, plus the
//! auxiliary registries: labels, prices, compliance fixtures, bytecode
//! presence, and marketplace totals.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    Address, Asset, NftId, Payment, RawLogRecord, TokenId, TransactionRecord, TransferEvent,
    TxHash, TxKind,
};
use crate::money::{literal_scale, Money};

/// keccak256 of `Transfer(address,address,uint256)`. ERC-20 transfers emit
/// the same word but with three topics; ERC-721 indexes all three arguments
/// and therefore logs four.
pub const TRANSFER_EVENT_SIGNATURE: [u8; 32] = [
    0xdd, 0xf2, 0x52, 0xad, 0x1b, 0xe2, 0xc8, 0x9b, 0x69, 0xc2, 0xb0, 0x68, 0xfc, 0x37, 0x8d,
    0xaa, 0x95, 0x2b, 0xa7, 0xf1, 0x63, 0xc4, 0xa1, 0x16, 0x28, 0xf5, 0x5a, 0x4d, 0xf5, 0x23,
    0xb3, 0xef,
];

/// ERC-721 interface id probed through `supportsInterface`.
pub const ERC721_INTERFACE_ID: [u8; 4] = [0x80, 0xac, 0x58, 0xcd];

/// ERC-165 base interface id.
pub const ERC165_INTERFACE_ID: [u8; 4] = [0x01, 0xff, 0xc9, 0xa7];

/// Wei precision: the most fractional digits a payment amount may carry.
pub const MAX_AMOUNT_SCALE: usize = 18;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LogRejection {
    #[error("topic[0] is not the ERC-721 Transfer signature")]
    WrongSignature,
    #[error("three topics: fungible (ERC-20 shaped) transfer")]
    Erc20Shape,
    #[error("malformed topics: expected 4, found {arity}")]
    MalformedTopics { arity: usize },
}

/// Decode a raw log into a transfer event.
///
/// Accepts exactly the four-topic ERC-721 layout: signature word, indexed
/// from, indexed to, indexed token id. The payment and interacted contract
/// are exporter enrichments a bare log does not carry, so they default to
/// a zero native payment and the null address.
pub fn parse_transfer_log(record: &RawLogRecord) -> Result<TransferEvent, LogRejection> {
    let Some(signature) = record.topics.first() else {
        return Err(LogRejection::MalformedTopics { arity: 0 });
    };
    if *signature != TRANSFER_EVENT_SIGNATURE {
        return Err(LogRejection::WrongSignature);
    }
    match record.topics.len() {
        4 => {}
        3 => return Err(LogRejection::Erc20Shape),
        arity => return Err(LogRejection::MalformedTopics { arity }),
    }
    Ok(TransferEvent {
        nft: NftId::new(record.contract, TokenId::from_be_bytes(record.topics[3])),
        from: Address::from_topic_word(&record.topics[1]),
        to: Address::from_topic_word(&record.topics[2]),
        block_number: record.block_number,
        tx_hash: record.tx_hash,
        tx_index: record.tx_index,
        timestamp: record.timestamp,
        interacted_contract: Address::NULL,
        payment: Payment::free(),
    })
}

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("interface query client unavailable: {0}")]
    Unavailable(String),
}

/// Source of `supportsInterface` answers: a node client or a recorded
/// fixture. Reverting contracts answer `Ok(false)`; only a client that
/// cannot be reached at all errors.
pub trait InterfaceQueryClient {
    fn supports_interface(
        &self,
        contract: Address,
        interface_id: [u8; 4],
    ) -> Result<bool, ClientError>;
}

/// True iff the contract reports support for the ERC-721 interface id.
pub fn check_erc721_compliance(
    contract: Address,
    client: &dyn InterfaceQueryClient,
) -> Result<bool, ClientError> {
    client.supports_interface(contract, ERC721_INTERFACE_ID)
}

/// Fixture-backed client: a recorded table of ERC-721 answers. Contracts
/// absent from the fixture, and any other interface id, answer false.
#[derive(Debug, Clone, Default)]
pub struct FixtureComplianceClient {
    entries: BTreeMap<Address, bool>,
}

impl FixtureComplianceClient {
    pub fn new(entries: BTreeMap<Address, bool>) -> Self {
        FixtureComplianceClient { entries }
    }

    pub fn from_path(path: &Path) -> Result<Self, IngestError> {
        let mut entries = BTreeMap::new();
        for (line_no, record) in read_csv(path, &["contract", "supports_erc721"])? {
            let contract = parse_field::<Address>(&record[0], path, line_no)?;
            let supports = match record[1].trim() {
                "true" => true,
                "false" => false,
                other => {
                    return Err(schema_error(
                        path,
                        line_no,
                        format!("expected true/false, found `{other}`"),
                    ))
                }
            };
            entries.insert(contract, supports);
        }
        Ok(FixtureComplianceClient { entries })
    }
}

impl InterfaceQueryClient for FixtureComplianceClient {
    fn supports_interface(
        &self,
        contract: Address,
        interface_id: [u8; 4],
    ) -> Result<bool, ClientError> {
        if interface_id != ERC721_INTERFACE_ID {
            return Ok(false);
        }
        Ok(self.entries.get(&contract).copied().unwrap_or(false))
    }
}

/// Address labels taken as ground truth from the labels file. The null
/// address is always a service account.
#[derive(Debug, Clone)]
pub struct LabelRegistry {
    pub service_accounts: BTreeSet<Address>,
    pub marketplaces: BTreeMap<Address, String>,
    pub reward_distributors: BTreeMap<Address, String>,
    pub treasuries: BTreeMap<Address, String>,
}

impl Default for LabelRegistry {
    fn default() -> Self {
        let mut service_accounts = BTreeSet::new();
        service_accounts.insert(Address::NULL);
        LabelRegistry {
            service_accounts,
            marketplaces: BTreeMap::new(),
            reward_distributors: BTreeMap::new(),
            treasuries: BTreeMap::new(),
        }
    }
}

impl LabelRegistry {
    pub fn is_service(&self, address: Address) -> bool {
        self.service_accounts.contains(&address)
    }

    /// Marketplace name an interacted contract belongs to, if labeled.
    pub fn marketplace_of(&self, interacted: Address) -> Option<&str> {
        self.marketplaces.get(&interacted).map(String::as_str)
    }

    /// Names of marketplaces that run a reward-token program.
    pub fn reward_marketplace_names(&self) -> BTreeSet<&str> {
        self.reward_distributors.values().map(String::as_str).collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("no price for {asset} on {date}")]
pub struct MissingPrice {
    pub asset: Asset,
    pub date: NaiveDate,
}

/// Immutable (asset, UTC date) -> USD price lookup. Exact keys only,
/// no interpolation.
#[derive(Debug, Clone, Default)]
pub struct PriceTable {
    entries: BTreeMap<(Asset, NaiveDate), Money>,
}

impl PriceTable {
    pub fn insert(&mut self, asset: Asset, date: NaiveDate, usd: Money) -> Result<(), IngestError> {
        if !usd.is_positive() {
            return Err(IngestError::NonPositivePrice { asset, date });
        }
        if self.entries.insert((asset, date), usd).is_some() {
            return Err(IngestError::DuplicatePriceEntry { asset, date });
        }
        Ok(())
    }

    pub fn price(&self, asset: Asset, date: NaiveDate) -> Option<&Money> {
        self.entries.get(&(asset, date))
    }

    pub fn usd_value(
        &self,
        amount: &Money,
        asset: Asset,
        date: NaiveDate,
    ) -> Result<Money, MissingPrice> {
        let price = self.price(asset, date).ok_or(MissingPrice { asset, date })?;
        Ok(amount * price)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Answers "does this address hold bytecode?". Unknown addresses answer
/// no, so the oracle is deterministic for a run.
#[derive(Debug, Clone, Default)]
pub struct CodePresenceOracle {
    contracts: BTreeSet<Address>,
}

impl CodePresenceOracle {
    pub fn new(contracts: BTreeSet<Address>) -> Self {
        CodePresenceOracle { contracts }
    }

    /// One address per line; blank lines and `#` comments ignored.
    pub fn from_path(path: &Path) -> Result<Self, IngestError> {
        let file = open(path)?;
        let mut contracts = BTreeSet::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| io_error(path, source))?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            contracts.insert(parse_field::<Address>(trimmed, path, idx + 1)?);
        }
        Ok(CodePresenceOracle { contracts })
    }

    pub fn insert(&mut self, address: Address) {
        self.contracts.insert(address);
    }

    pub fn extend<I: IntoIterator<Item = Address>>(&mut self, addresses: I) {
        self.contracts.extend(addresses);
    }

    pub fn has_bytecode(&self, address: Address) -> bool {
        self.contracts.contains(&address)
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}:{line}: {message}")]
    Schema { path: String, line: usize, message: String },
    #[error("duplicate price entry for {asset} on {date}")]
    DuplicatePriceEntry { asset: Asset, date: NaiveDate },
    #[error("non-positive price for {asset} on {date}")]
    NonPositivePrice { asset: Asset, date: NaiveDate },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn schema_error(path: &Path, line: usize, message: impl Into<String>) -> IngestError {
    IngestError::Schema { path: path.display().to_string(), line, message: message.into() }
}

fn io_error(path: &Path, source: std::io::Error) -> IngestError {
    IngestError::Io { path: path.display().to_string(), source }
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| io_error(path, source))
}

fn parse_field<T: std::str::FromStr>(
    raw: &str,
    path: &Path,
    line: usize,
) -> Result<T, IngestError>
where
    T::Err: std::fmt::Display,
{
    raw.trim().parse::<T>().map_err(|e| schema_error(path, line, e.to_string()))
}

/// Payment amounts and gas fees: non-negative, at most wei precision.
fn parse_amount(raw: &str, what: &str, path: &Path, line: usize) -> Result<Money, IngestError> {
    let amount = parse_field::<Money>(raw, path, line)?;
    if amount.is_negative() {
        return Err(schema_error(path, line, format!("{what} must be non-negative: `{raw}`")));
    }
    if literal_scale(raw) > MAX_AMOUNT_SCALE {
        return Err(schema_error(
            path,
            line,
            format!("{what} has more than {MAX_AMOUNT_SCALE} fractional digits: `{raw}`"),
        ));
    }
    Ok(amount)
}

/// Line format of the transfers export file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransferRow {
    pub contract: Address,
    pub token_id: TokenId,
    pub from: Address,
    pub to: Address,
    pub block: u64,
    pub tx_hash: TxHash,
    pub tx_index: u32,
    pub timestamp: u64,
    pub interacted_contract: Address,
    pub payment_asset: Asset,
    pub payment_amount: String,
}

impl TransferRow {
    pub fn from_event(event: &TransferEvent) -> Self {
        TransferRow {
            contract: event.nft.contract,
            token_id: event.nft.token_id,
            from: event.from,
            to: event.to,
            block: event.block_number,
            tx_hash: event.tx_hash,
            tx_index: event.tx_index,
            timestamp: event.timestamp,
            interacted_contract: event.interacted_contract,
            payment_asset: event.payment.asset,
            payment_amount: event.payment.amount.to_decimal_string(),
        }
    }

    fn into_event(self, path: &Path, line: usize) -> Result<TransferEvent, IngestError> {
        let amount = parse_amount(&self.payment_amount, "payment_amount", path, line)?;
        Ok(TransferEvent {
            nft: NftId::new(self.contract, self.token_id),
            from: self.from,
            to: self.to,
            block_number: self.block,
            tx_hash: self.tx_hash,
            tx_index: self.tx_index,
            timestamp: self.timestamp,
            interacted_contract: self.interacted_contract,
            payment: Payment { asset: self.payment_asset, amount },
        })
    }
}

/// Line format of the transactions export file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransactionRow {
    pub tx_hash: TxHash,
    pub block: u64,
    pub tx_index: u32,
    pub timestamp: u64,
    pub from: Address,
    pub to: Address,
    pub asset: Asset,
    pub amount: String,
    pub gas_fee: String,
    pub kind: TxKind,
}

impl TransactionRow {
    pub fn from_record(record: &TransactionRecord) -> Self {
        TransactionRow {
            tx_hash: record.tx_hash,
            block: record.block_number,
            tx_index: record.tx_index,
            timestamp: record.timestamp,
            from: record.from,
            to: record.to,
            asset: record.payment.asset,
            amount: record.payment.amount.to_decimal_string(),
            gas_fee: record.gas_fee.to_decimal_string(),
            kind: record.kind,
        }
    }

    fn into_record(self, path: &Path, line: usize) -> Result<TransactionRecord, IngestError> {
        let amount = parse_amount(&self.amount, "amount", path, line)?;
        let gas_fee = parse_amount(&self.gas_fee, "gas_fee", path, line)?;
        Ok(TransactionRecord {
            tx_hash: self.tx_hash,
            block_number: self.block,
            tx_index: self.tx_index,
            timestamp: self.timestamp,
            from: self.from,
            to: self.to,
            payment: Payment { asset: self.asset, amount },
            gas_fee,
            kind: self.kind,
        })
    }
}

fn load_ldjson<Row, Out>(
    path: &Path,
    convert: impl Fn(Row, &Path, usize) -> Result<Out, IngestError>,
) -> Result<Vec<Out>, IngestError>
where
    Row: for<'de> Deserialize<'de>,
{
    let file = open(path)?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| io_error(path, source))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(&line)
            .map_err(|e| schema_error(path, line_no, e.to_string()))?;
        out.push(convert(row, path, line_no)?);
    }
    Ok(out)
}

/// Total order over transfer streams: chain position first, then the full
/// record content so that any permutation of the same lines loads
/// identically.
pub fn transfer_cmp(a: &TransferEvent, b: &TransferEvent) -> std::cmp::Ordering {
    a.chain_pos()
        .cmp(&b.chain_pos())
        .then_with(|| a.nft.cmp(&b.nft))
        .then_with(|| a.tx_hash.cmp(&b.tx_hash))
        .then_with(|| a.from.cmp(&b.from))
        .then_with(|| a.to.cmp(&b.to))
        .then_with(|| a.timestamp.cmp(&b.timestamp))
        .then_with(|| a.interacted_contract.cmp(&b.interacted_contract))
        .then_with(|| a.payment.cmp(&b.payment))
}

pub fn transaction_cmp(a: &TransactionRecord, b: &TransactionRecord) -> std::cmp::Ordering {
    a.chain_pos()
        .cmp(&b.chain_pos())
        .then_with(|| a.tx_hash.cmp(&b.tx_hash))
        .then_with(|| a.from.cmp(&b.from))
        .then_with(|| a.to.cmp(&b.to))
        .then_with(|| a.timestamp.cmp(&b.timestamp))
        .then_with(|| a.kind.cmp(&b.kind))
        .then_with(|| a.payment.cmp(&b.payment))
        .then_with(|| a.gas_fee.cmp(&b.gas_fee))
}

fn sort_stream<T>(items: &mut [T], cmp: fn(&T, &T) -> std::cmp::Ordering, what: &str) {
    if !items.windows(2).all(|w| cmp(&w[0], &w[1]) != std::cmp::Ordering::Greater) {
        log::warn!("{what} stream not in chain order; re-sorting");
        items.sort_by(cmp);
    }
}

fn warn_on_timestamp_inversion(transfers: &[TransferEvent]) {
    for pair in transfers.windows(2) {
        if pair[1].timestamp < pair[0].timestamp {
            log::warn!(
                "timestamps not monotone with chain order near block {}",
                pair[1].block_number
            );
            return;
        }
    }
}

/// Load the transfers file, totally ordered by chain position.
pub fn load_transfers(path: &Path) -> Result<Vec<TransferEvent>, IngestError> {
    let mut events = load_ldjson(path, TransferRow::into_event)?;
    sort_stream(&mut events, transfer_cmp, "transfers");
    warn_on_timestamp_inversion(&events);
    Ok(events)
}

/// Load the transactions file, totally ordered by chain position.
pub fn load_transactions(path: &Path) -> Result<Vec<TransactionRecord>, IngestError> {
    let mut records = load_ldjson(path, TransactionRow::into_record)?;
    sort_stream(&mut records, transaction_cmp, "transactions");
    Ok(records)
}

fn read_csv(path: &Path, headers: &[&str]) -> Result<Vec<(usize, Vec<String>)>, IngestError> {
    let file = open(path)?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let found = reader.headers().map_err(|e| schema_error(path, 1, e.to_string()))?;
    let found: Vec<&str> = found.iter().collect();
    if found != headers {
        return Err(schema_error(
            path,
            1,
            format!("expected header `{}`, found `{}`", headers.join(","), found.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line_no = idx + 2;
        let record = record.map_err(|e| schema_error(path, line_no, e.to_string()))?;
        if record.len() != headers.len() {
            return Err(schema_error(
                path,
                line_no,
                format!("expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        rows.push((line_no, record.iter().map(str::to_string).collect()));
    }
    Ok(rows)
}

/// Load the labels file: CSV `address,category,name`.
pub fn load_labels(path: &Path) -> Result<LabelRegistry, IngestError> {
    let mut registry = LabelRegistry::default();
    for (line_no, record) in read_csv(path, &["address", "category", "name"])? {
        let address = parse_field::<Address>(&record[0], path, line_no)?;
        let name = record[2].clone();
        match record[1].as_str() {
            "service" => {
                registry.service_accounts.insert(address);
            }
            "marketplace" => {
                registry.marketplaces.insert(address, name);
            }
            "reward_distributor" => {
                registry.reward_distributors.insert(address, name);
            }
            "treasury" => {
                registry.treasuries.insert(address, name);
            }
            other => {
                return Err(schema_error(path, line_no, format!("unknown category `{other}`")));
            }
        }
    }
    Ok(registry)
}

/// Load the prices file: CSV `asset,date,usd` with `YYYY-MM-DD` dates.
pub fn load_prices(path: &Path) -> Result<PriceTable, IngestError> {
    let mut table = PriceTable::default();
    for (line_no, record) in read_csv(path, &["asset", "date", "usd"])? {
        let asset = parse_field::<Asset>(&record[0], path, line_no)?;
        let date = NaiveDate::parse_from_str(&record[1], "%Y-%m-%d")
            .map_err(|e| schema_error(path, line_no, e.to_string()))?;
        let usd = parse_field::<Money>(&record[2], path, line_no)?;
        table.insert(asset, date, usd)?;
    }
    Ok(table)
}

/// Load external marketplace volume totals: CSV `marketplace,total_usd_volume`.
pub fn load_marketplace_totals(path: &Path) -> Result<BTreeMap<String, Money>, IngestError> {
    let mut totals = BTreeMap::new();
    for (line_no, record) in read_csv(path, &["marketplace", "total_usd_volume"])? {
        let volume = parse_field::<Money>(&record[1], path, line_no)?;
        if totals.insert(record[0].clone(), volume).is_some() {
            return Err(schema_error(
                path,
                line_no,
                format!("duplicate marketplace `{}`", record[0]),
            ));
        }
    }
    Ok(totals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn addr(n: u8) -> Address {
        let mut bytes = [0u8; 20];
        bytes[19] = n;
        Address::new(bytes)
    }

    fn topic_of(addr: Address) -> [u8; 32] {
        let mut word = [0u8; 32];
        word[12..].copy_from_slice(addr.as_bytes());
        word
    }

    fn raw_log(topics: Vec<[u8; 32]>) -> RawLogRecord {
        RawLogRecord {
            contract: addr(0xC),
            topics,
            block_number: 10,
            tx_hash: TxHash::new([1u8; 32]),
            tx_index: 3,
            timestamp: 1_641_772_800,
        }
    }

    #[test]
    fn decodes_four_topic_transfer() {
        let mut token_word = [0u8; 32];
        token_word[31] = 7;
        let record = raw_log(vec![
            TRANSFER_EVENT_SIGNATURE,
            topic_of(addr(0xA)),
            topic_of(addr(0xB)),
            token_word,
        ]);
        let event = parse_transfer_log(&record).unwrap();
        assert_eq!(event.nft, NftId::new(addr(0xC), TokenId::from_u64(7)));
        assert_eq!(event.from, addr(0xA));
        assert_eq!(event.to, addr(0xB));
        assert_eq!(event.block_number, 10);
        assert!(event.payment.amount.is_zero());
    }

    #[test]
    fn rejects_three_topic_fungible_shape() {
        let record = raw_log(vec![
            TRANSFER_EVENT_SIGNATURE,
            topic_of(addr(0xA)),
            topic_of(addr(0xB)),
        ]);
        assert_eq!(parse_transfer_log(&record), Err(LogRejection::Erc20Shape));
    }

    #[test]
    fn rejects_wrong_signature() {
        let record = raw_log(vec![[0u8; 32], topic_of(addr(0xA)), topic_of(addr(0xB))]);
        assert_eq!(parse_transfer_log(&record), Err(LogRejection::WrongSignature));
    }

    #[test]
    fn rejects_other_arities() {
        let record = raw_log(vec![TRANSFER_EVENT_SIGNATURE, topic_of(addr(0xA))]);
        assert_eq!(parse_transfer_log(&record), Err(LogRejection::MalformedTopics { arity: 2 }));
        let empty = raw_log(vec![]);
        assert_eq!(parse_transfer_log(&empty), Err(LogRejection::MalformedTopics { arity: 0 }));
    }

    struct MapClient(BTreeMap<[u8; 4], bool>);

    impl InterfaceQueryClient for MapClient {
        fn supports_interface(
            &self,
            _contract: Address,
            interface_id: [u8; 4],
        ) -> Result<bool, ClientError> {
            Ok(self.0.get(&interface_id).copied().unwrap_or(false))
        }
    }

    struct DownClient;

    impl InterfaceQueryClient for DownClient {
        fn supports_interface(&self, _: Address, _: [u8; 4]) -> Result<bool, ClientError> {
            Err(ClientError::Unavailable("node offline".into()))
        }
    }

    #[test]
    fn compliance_checks_the_erc721_id() {
        let yes = MapClient(BTreeMap::from([(ERC721_INTERFACE_ID, true)]));
        assert!(check_erc721_compliance(addr(1), &yes).unwrap());

        // ERC-165 base support alone is not ERC-721 compliance.
        let base_only = MapClient(BTreeMap::from([(ERC165_INTERFACE_ID, true)]));
        assert!(!check_erc721_compliance(addr(1), &base_only).unwrap());

        // Reverting contracts answer false through the client contract.
        let reverts = MapClient(BTreeMap::new());
        assert!(!check_erc721_compliance(addr(1), &reverts).unwrap());

        assert!(check_erc721_compliance(addr(1), &DownClient).is_err());
    }

    fn write_lines(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        for line in lines {
            writeln!(file, "{line}").unwrap();
        }
        file
    }

    fn transfer_line(block: u64, tx_index: u32, token: u64) -> String {
        format!(
            concat!(
                r#"{{"contract":"0x00000000000000000000000000000000000000cc","token_id":"{token}","#,
                r#""from":"0x00000000000000000000000000000000000000aa","#,
                r#""to":"0x00000000000000000000000000000000000000bb","#,
                r#""block":{block},"tx_hash":"0x{hash:064x}","tx_index":{tx_index},"#,
                r#""timestamp":{ts},"interacted_contract":"0x00000000000000000000000000000000000000dd","#,
                r#""payment_asset":"native","payment_amount":"1.5"}}"#
            ),
            token = token,
            block = block,
            hash = block * 100 + tx_index as u64,
            tx_index = tx_index,
            ts = 1_600_000_000u64 + block,
        )
    }

    #[test]
    fn loads_empty_transfer_file() {
        let file = write_lines(&[]);
        assert!(load_transfers(file.path()).unwrap().is_empty());
    }

    #[test]
    fn reorders_unsorted_transfers() {
        let l1 = transfer_line(5, 3, 1);
        let l2 = transfer_line(5, 1, 2);
        let file = write_lines(&[&l1, &l2]);
        let events = load_transfers(file.path()).unwrap();
        assert_eq!(events[0].tx_index, 1);
        assert_eq!(events[1].tx_index, 3);
    }

    #[test]
    fn load_order_is_permutation_invariant() {
        let lines: Vec<String> =
            vec![transfer_line(2, 0, 9), transfer_line(1, 4, 3), transfer_line(1, 4, 1)];
        let fwd = write_lines(&lines.iter().map(String::as_str).collect::<Vec<_>>());
        let rev = write_lines(&lines.iter().rev().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(load_transfers(fwd.path()).unwrap(), load_transfers(rev.path()).unwrap());
    }

    #[test]
    fn schema_error_carries_line_number() {
        let good = transfer_line(1, 0, 1);
        let file = write_lines(&[&good, "{\"not\":\"a transfer\"}"]);
        match load_transfers(file.path()) {
            Err(IngestError::Schema { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_negative_and_overscaled_amounts() {
        let bad_scale = transfer_line(1, 0, 1)
            .replace("\"1.5\"", "\"0.0000000000000000001\"");
        let file = write_lines(&[&bad_scale]);
        assert!(matches!(load_transfers(file.path()), Err(IngestError::Schema { .. })));

        let negative = transfer_line(1, 0, 1).replace("\"1.5\"", "\"-1\"");
        let file = write_lines(&[&negative]);
        assert!(matches!(load_transfers(file.path()), Err(IngestError::Schema { .. })));
    }

    #[test]
    fn transfer_round_trips_through_export_schema() {
        let line = transfer_line(7, 2, 11);
        let file = write_lines(&[&line]);
        let events = load_transfers(file.path()).unwrap();
        let row = TransferRow::from_event(&events[0]);
        let json = serde_json::to_string(&row).unwrap();
        let reparsed: TransferRow = serde_json::from_str(&json).unwrap();
        let event2 = reparsed.into_event(Path::new("mem"), 1).unwrap();
        assert_eq!(events[0], event2);
    }

    #[test]
    fn labels_load_and_null_is_always_service() {
        let file = write_lines(&[
            "address,category,name",
            "0x00000000000000000000000000000000000000e1,service,BigExchange",
            "0x00000000000000000000000000000000000000m1,marketplace,alpha",
        ]);
        // the `m1` address is invalid hex -> schema error with line number
        match load_labels(file.path()) {
            Err(IngestError::Schema { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected schema error, got {other:?}"),
        }

        let file = write_lines(&[
            "address,category,name",
            "0x00000000000000000000000000000000000000e1,service,BigExchange",
            "0x00000000000000000000000000000000000000a1,marketplace,alpha",
            "0x00000000000000000000000000000000000000a2,reward_distributor,alpha",
            "0x00000000000000000000000000000000000000a3,treasury,alpha",
        ]);
        let registry = load_labels(file.path()).unwrap();
        assert!(registry.is_service(Address::NULL));
        assert!(registry.is_service(addr(0xe1)));
        assert_eq!(registry.marketplace_of(addr(0xa1)), Some("alpha"));
        assert_eq!(registry.reward_marketplace_names(), BTreeSet::from(["alpha"]));
    }

    #[test]
    fn duplicate_price_rows_are_rejected() {
        let file = write_lines(&[
            "asset,date,usd",
            "native,2022-01-10,1000",
            "native,2022-01-10,1001",
        ]);
        assert!(matches!(
            load_prices(file.path()),
            Err(IngestError::DuplicatePriceEntry { .. })
        ));
    }

    #[test]
    fn price_lookup_is_exact_on_date() {
        let file = write_lines(&["asset,date,usd", "native,2022-01-10,1000"]);
        let table = load_prices(file.path()).unwrap();
        let date = NaiveDate::from_ymd_opt(2022, 1, 10).unwrap();
        assert_eq!(table.price(Asset::Native, date).unwrap(), &Money::from_int(1000));
        let missing = NaiveDate::from_ymd_opt(2022, 1, 11).unwrap();
        assert!(table.price(Asset::Native, missing).is_none());
        let err = table.usd_value(&Money::from_int(1), Asset::Native, missing).unwrap_err();
        assert_eq!(err.date, missing);
    }

    #[test]
    fn code_oracle_defaults_unknown_to_no_bytecode() {
        let file = write_lines(&[
            "# known contracts",
            "0x00000000000000000000000000000000000000f1",
            "",
        ]);
        let oracle = CodePresenceOracle::from_path(file.path()).unwrap();
        assert!(oracle.has_bytecode(addr(0xf1)));
        assert!(!oracle.has_bytecode(addr(0xf2)));
    }
}
