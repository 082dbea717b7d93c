//! Core chain-domain types shared by every stage of the pipeline.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate};
use num_bigint::BigUint;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::money::Money;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomainParseError {
    #[error("invalid address `{0}`: expected 0x-prefixed 40 hex chars")]
    Address(String),
    #[error("invalid transaction hash `{0}`: expected 0x-prefixed 64 hex chars")]
    TxHash(String),
    #[error("invalid token id `{0}`")]
    TokenId(String),
    #[error("token id `{0}` exceeds 256 bits")]
    TokenIdRange(String),
    #[error("invalid asset `{0}`: expected `native` or a token address")]
    Asset(String),
}

/// A 20-byte account identifier, rendered as 0x-prefixed lowercase hex.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Address([u8; 20]);

impl Address {
    /// The all-zero address: mint source, burn sink, always a service account.
    pub const NULL: Address = Address([0u8; 20]);

    pub fn new(bytes: [u8; 20]) -> Self {
        Address(bytes)
    }

    /// Low 20 bytes of a 32-byte log topic word.
    pub fn from_topic_word(word: &[u8; 32]) -> Self {
        let mut bytes = [0u8; 20];
        bytes.copy_from_slice(&word[12..]);
        Address(bytes)
    }

    pub fn is_null(&self) -> bool {
        *self == Self::NULL
    }

    pub fn as_bytes(&self) -> &[u8; 20] {
        &self.0
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Address {
    type Err = DomainParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || DomainParseError::Address(s.to_string());
        let body = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).ok_or_else(err)?;
        if body.len() != 40 {
            return Err(err());
        }
        let raw = hex::decode(body).map_err(|_| err())?;
        let mut bytes = [0u8; 20];
        bytes.copy_from_slice(&raw);
        Ok(Address(bytes))
    }
}

/// A 32-byte transaction identifier.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TxHash([u8; 32]);

impl TxHash {
    pub fn new(bytes: [u8; 32]) -> Self {
        TxHash(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Display for TxHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl fmt::Debug for TxHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for TxHash {
    type Err = DomainParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || DomainParseError::TxHash(s.to_string());
        let body = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).ok_or_else(err)?;
        if body.len() != 64 {
            return Err(err());
        }
        let raw = hex::decode(body).map_err(|_| err())?;
        let mut bytes = [0u8; 32];
        bytes.copy_from_slice(&raw);
        Ok(TxHash(bytes))
    }
}

/// An unsigned 256-bit token id, stored big-endian, rendered in decimal.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenId([u8; 32]);

impl TokenId {
    pub fn from_u64(value: u64) -> Self {
        let mut bytes = [0u8; 32];
        bytes[24..].copy_from_slice(&value.to_be_bytes());
        TokenId(bytes)
    }

    pub fn from_be_bytes(bytes: [u8; 32]) -> Self {
        TokenId(bytes)
    }

    pub fn as_be_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", BigUint::from_bytes_be(&self.0))
    }
}

impl fmt::Debug for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for TokenId {
    type Err = DomainParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let value = if let Some(body) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
            BigUint::parse_bytes(body.as_bytes(), 16)
        } else {
            BigUint::parse_bytes(s.as_bytes(), 10)
        }
        .ok_or_else(|| DomainParseError::TokenId(s.to_string()))?;
        let raw = value.to_bytes_be();
        if raw.len() > 32 {
            return Err(DomainParseError::TokenIdRange(s.to_string()));
        }
        let mut bytes = [0u8; 32];
        bytes[32 - raw.len()..].copy_from_slice(&raw);
        Ok(TokenId(bytes))
    }
}

/// Unique key of an NFT: the managing contract plus the token id.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct NftId {
    pub contract: Address,
    pub token_id: TokenId,
}

impl NftId {
    pub fn new(contract: Address, token_id: TokenId) -> Self {
        NftId { contract, token_id }
    }
}

impl fmt::Display for NftId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.contract, self.token_id)
    }
}

/// Total chain order of a transaction: block number then intra-block index.
/// All before/after comparisons in the pipeline use this, never timestamps.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct ChainPos {
    pub block: u64,
    pub tx_index: u32,
}

impl ChainPos {
    pub fn new(block: u64, tx_index: u32) -> Self {
        ChainPos { block, tx_index }
    }
}

impl fmt::Display for ChainPos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.block, self.tx_index)
    }
}

/// What a payment is denominated in.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Asset {
    Native,
    Token(Address),
}

impl fmt::Display for Asset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Asset::Native => f.write_str("native"),
            Asset::Token(addr) => write!(f, "{addr}"),
        }
    }
}

impl FromStr for Asset {
    type Err = DomainParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("native") {
            return Ok(Asset::Native);
        }
        s.parse::<Address>()
            .map(Asset::Token)
            .map_err(|_| DomainParseError::Asset(s.to_string()))
    }
}

/// Price paid alongside a transfer. Amount is exact and non-negative.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Payment {
    pub asset: Asset,
    pub amount: Money,
}

impl Payment {
    pub fn native(amount: Money) -> Self {
        Payment { asset: Asset::Native, amount }
    }

    pub fn token(contract: Address, amount: Money) -> Self {
        Payment { asset: Asset::Token(contract), amount }
    }

    pub fn free() -> Self {
        Payment::native(Money::zero())
    }
}

/// One decoded ERC-721 transfer, enriched by the exporter with the
/// interacted contract and the settlement payment.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TransferEvent {
    pub nft: NftId,
    pub from: Address,
    pub to: Address,
    pub block_number: u64,
    pub tx_hash: TxHash,
    pub tx_index: u32,
    pub timestamp: u64,
    pub interacted_contract: Address,
    pub payment: Payment,
}

impl TransferEvent {
    pub fn chain_pos(&self) -> ChainPos {
        ChainPos::new(self.block_number, self.tx_index)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxKind {
    ValueTransfer,
    TokenTransfer,
    ContractCall,
}

/// One account-level transaction: a plain value movement, a token
/// movement, or a contract call carrying value.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TransactionRecord {
    pub tx_hash: TxHash,
    pub block_number: u64,
    pub tx_index: u32,
    pub timestamp: u64,
    pub from: Address,
    pub to: Address,
    pub payment: Payment,
    pub gas_fee: Money,
    pub kind: TxKind,
}

impl TransactionRecord {
    pub fn chain_pos(&self) -> ChainPos {
        ChainPos::new(self.block_number, self.tx_index)
    }
}

/// A raw event log as exported from a node, before decoding.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RawLogRecord {
    pub contract: Address,
    pub topics: Vec<[u8; 32]>,
    pub block_number: u64,
    pub tx_hash: TxHash,
    pub tx_index: u32,
    pub timestamp: u64,
}

/// UTC calendar day of an epoch-seconds timestamp.
pub fn utc_date(timestamp: u64) -> NaiveDate {
    let secs = i64::try_from(timestamp).unwrap_or(i64::MAX);
    DateTime::from_timestamp(secs, 0)
        .map(|dt| dt.date_naive())
        .unwrap_or(NaiveDate::MAX)
}

macro_rules! string_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(&self.to_string())
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(de::Error::custom)
            }
        }
    };
}

string_serde!(Address);
string_serde!(TxHash);
string_serde!(Asset);

impl Serialize for TokenId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TokenId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct TokenIdVisitor;

        impl de::Visitor<'_> for TokenIdVisitor {
            type Value = TokenId;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a decimal or 0x-hex token id, or an integer")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<TokenId, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<TokenId, E> {
                Ok(TokenId::from_u64(v))
            }
        }

        deserializer.deserialize_any(TokenIdVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn address_round_trip_and_canonical_case() {
        let mixed = "0xAbCdEf0123456789aBcDeF0123456789ABCDEF01";
        let addr: Address = mixed.parse().unwrap();
        assert_eq!(addr.to_string(), mixed.to_lowercase());
        let back: Address = addr.to_string().parse().unwrap();
        assert_eq!(back, addr);
    }

    #[test]
    fn address_rejects_bad_lengths() {
        assert!("0x1234".parse::<Address>().is_err());
        assert!("abcdef0123456789abcdef0123456789abcdef01".parse::<Address>().is_err());
        assert!("0xzzcdef0123456789abcdef0123456789abcdef01".parse::<Address>().is_err());
    }

    #[test]
    fn null_address_is_distinguished() {
        let null: Address = "0x0000000000000000000000000000000000000000".parse().unwrap();
        assert!(null.is_null());
        assert_eq!(null, Address::NULL);
        assert!(!"0x0000000000000000000000000000000000000001"
            .parse::<Address>()
            .unwrap()
            .is_null());
    }

    #[test]
    fn token_id_parses_decimal_hex_and_bounds() {
        assert_eq!(TokenId::from_u64(7).to_string(), "7");
        let big: TokenId =
            "115792089237316195423570985008687907853269984665640564039457584007913129639935"
                .parse()
                .unwrap(); // 2^256 - 1
        assert_eq!(big.as_be_bytes(), &[0xffu8; 32]);
        let over = "115792089237316195423570985008687907853269984665640564039457584007913129639936";
        assert!(matches!(over.parse::<TokenId>(), Err(DomainParseError::TokenIdRange(_))));
        let hexed: TokenId = "0xff".parse().unwrap();
        assert_eq!(hexed, TokenId::from_u64(255));
    }

    #[test]
    fn chain_pos_orders_by_block_then_index() {
        let a = ChainPos::new(5, 9);
        let b = ChainPos::new(6, 0);
        let c = ChainPos::new(6, 1);
        assert!(a < b && b < c);
    }

    #[test]
    fn asset_parses_native_and_token() {
        assert_eq!("native".parse::<Asset>().unwrap(), Asset::Native);
        assert_eq!("NATIVE".parse::<Asset>().unwrap(), Asset::Native);
        let token = "0x00000000000000000000000000000000000000aa".parse::<Asset>().unwrap();
        assert!(matches!(token, Asset::Token(_)));
        assert!("looks".parse::<Asset>().is_err());
    }

    #[test]
    fn utc_date_maps_epoch_seconds() {
        let date = utc_date(1_641_772_800); // 2022-01-10T00:00:00Z
        assert_eq!(date.to_string(), "2022-01-10");
        let prev = utc_date(1_641_772_799);
        assert_eq!(prev.to_string(), "2022-01-09");
    }
}
