//! Graph cleaning: service-account removal, contract-account removal,
//! and the zero-volume candidate drop.

use crate::graph::{SccCandidate, TransactionGraph};
use crate::ingest::{CodePresenceOracle, LabelRegistry};

fn remove_nodes(graph: &TransactionGraph, doomed: impl Fn(crate::domain::Address) -> bool) -> TransactionGraph {
    let nodes = graph.nodes.iter().copied().filter(|&n| !doomed(n)).collect();
    let edges = graph
        .edges
        .iter()
        .filter(|e| !doomed(e.from) && !doomed(e.to))
        .cloned()
        .collect();
    TransactionGraph { nft: graph.nft, nodes, edges }
}

/// Delete every labeled service account (the null address is always one)
/// together with its incident edges.
pub fn remove_service_accounts(
    graph: &TransactionGraph,
    registry: &LabelRegistry,
) -> TransactionGraph {
    remove_nodes(graph, |n| registry.is_service(n))
}

/// Delete every bytecode-bearing account together with its incident edges.
/// Unknown addresses are kept: only positive code presence removes.
pub fn remove_contract_accounts(
    graph: &TransactionGraph,
    oracle: &CodePresenceOracle,
) -> TransactionGraph {
    remove_nodes(graph, |n| oracle.has_bytecode(n))
}

/// Drop candidates whose internal edges all carry a zero payment. A single
/// paid edge keeps the candidate, zero-payment edges and all.
pub fn drop_zero_volume_candidates(candidates: Vec<SccCandidate>) -> Vec<SccCandidate> {
    candidates
        .into_iter()
        .filter(|c| c.internal_edges.iter().any(|e| e.payment.amount.is_positive()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Address, NftId, TokenId, TransferEvent, TxHash};
    use crate::domain::Payment;
    use crate::graph::{build_graph, find_sccs};
    use crate::money::Money;
    use std::collections::BTreeSet;

    fn addr(n: u8) -> Address {
        let mut bytes = [0u8; 20];
        bytes[19] = n;
        Address::new(bytes)
    }

    fn nft() -> NftId {
        NftId::new(addr(0xCC), TokenId::from_u64(1))
    }

    fn event(seq: u64, from: Address, to: Address, eth: i64) -> TransferEvent {
        let mut hash = [0u8; 32];
        hash[24..].copy_from_slice(&seq.to_be_bytes());
        TransferEvent {
            nft: nft(),
            from,
            to,
            block_number: seq,
            tx_hash: TxHash::new(hash),
            tx_index: 0,
            timestamp: seq * 13,
            interacted_contract: addr(0xDD),
            payment: Payment::native(Money::from_int(eth)),
        }
    }

    fn graph_of(events: &[TransferEvent]) -> TransactionGraph {
        build_graph(nft(), events).unwrap()
    }

    #[test]
    fn service_filter_deletes_node_and_incident_edges() {
        let exchange = addr(0xE1);
        let graph = graph_of(&[
            event(1, addr(1), exchange, 1),
            event(2, exchange, addr(2), 1),
            event(3, addr(1), addr(2), 1),
        ]);
        let mut registry = LabelRegistry::default();
        registry.service_accounts.insert(exchange);
        let cleaned = remove_service_accounts(&graph, &registry);
        assert_eq!(cleaned.nodes, BTreeSet::from([addr(1), addr(2)]));
        assert_eq!(cleaned.edge_count(), 1);
        assert_eq!(cleaned.edges[0].from, addr(1));
    }

    #[test]
    fn mint_edges_from_null_are_removed_by_default_registry() {
        let graph = graph_of(&[event(1, Address::NULL, addr(1), 0), event(2, addr(1), addr(2), 1)]);
        let cleaned = remove_service_accounts(&graph, &LabelRegistry::default());
        assert!(!cleaned.nodes.contains(&Address::NULL));
        assert_eq!(cleaned.edge_count(), 1);
    }

    #[test]
    fn empty_registry_is_identity_on_clean_graphs() {
        let graph = graph_of(&[event(1, addr(1), addr(2), 1)]);
        let cleaned = remove_service_accounts(&graph, &LabelRegistry::default());
        assert_eq!(cleaned, graph);
    }

    #[test]
    fn contract_filter_removes_flagged_nodes_only() {
        let contract = addr(0xF1);
        let graph = graph_of(&[
            event(1, addr(1), contract, 1),
            event(2, contract, addr(1), 1),
            event(3, addr(1), addr(2), 1),
        ]);
        let mut oracle = CodePresenceOracle::default();
        oracle.insert(contract);
        let cleaned = remove_contract_accounts(&graph, &oracle);
        assert_eq!(cleaned.nodes, BTreeSet::from([addr(1), addr(2)]));
        assert_eq!(cleaned.edge_count(), 1);

        // Unknown addresses are EOAs until proven otherwise.
        let untouched = remove_contract_accounts(&cleaned, &CodePresenceOracle::default());
        assert_eq!(untouched, cleaned);
    }

    #[test]
    fn zero_volume_candidates_are_dropped_paid_ones_kept_intact() {
        let all_zero = graph_of(&[event(1, addr(1), addr(2), 0), event(2, addr(2), addr(1), 0)]);
        let mixed = graph_of(&[event(3, addr(3), addr(4), 0), event(4, addr(4), addr(3), 1)]);
        let mut candidates = find_sccs(&all_zero);
        candidates.extend(find_sccs(&mixed));
        assert_eq!(candidates.len(), 2);
        let kept = drop_zero_volume_candidates(candidates);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].members, BTreeSet::from([addr(3), addr(4)]));
        // The zero-payment edge survives inside the kept candidate.
        assert_eq!(kept[0].internal_edges.len(), 2);
        assert!(drop_zero_volume_candidates(Vec::new()).is_empty());
    }

    #[test]
    fn filters_are_idempotent_and_commute() {
        let exchange = addr(0xE1);
        let contract = addr(0xF1);
        let graph = graph_of(&[
            event(1, addr(1), exchange, 1),
            event(2, exchange, contract, 1),
            event(3, contract, addr(1), 1),
            event(4, addr(1), addr(2), 1),
            event(5, addr(2), addr(1), 1),
        ]);
        let mut registry = LabelRegistry::default();
        registry.service_accounts.insert(exchange);
        let mut oracle = CodePresenceOracle::default();
        oracle.insert(contract);

        let s = remove_service_accounts(&graph, &registry);
        assert_eq!(remove_service_accounts(&s, &registry), s);
        let c = remove_contract_accounts(&graph, &oracle);
        assert_eq!(remove_contract_accounts(&c, &oracle), c);

        let sc = remove_contract_accounts(&s, &oracle);
        let cs = remove_service_accounts(&c, &registry);
        assert_eq!(sc, cs);
    }
}
