//! Per-NFT transaction multigraph and strongly-connected-component mining.
//!
//! Components of at least two nodes count, and so do single nodes carrying
//! a self-loop edge: both shapes show the asset cycling among the same
//! accounts.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::domain::{Address, ChainPos, NftId, Payment, TransferEvent, TxHash};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("event for {found} mixed into the graph of {expected}")]
    MixedNft { expected: NftId, found: NftId },
}

/// One sale edge: seller -> buyer, annotated with the transaction's
/// timestamp, hash, interacted contract, and payment.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TransferEdge {
    pub from: Address,
    pub to: Address,
    pub timestamp: u64,
    pub tx_hash: TxHash,
    pub interacted_contract: Address,
    pub payment: Payment,
    pub block_number: u64,
    pub tx_index: u32,
}

impl TransferEdge {
    pub fn from_event(event: &TransferEvent) -> Self {
        TransferEdge {
            from: event.from,
            to: event.to,
            timestamp: event.timestamp,
            tx_hash: event.tx_hash,
            interacted_contract: event.interacted_contract,
            payment: event.payment.clone(),
            block_number: event.block_number,
            tx_index: event.tx_index,
        }
    }

    pub fn chain_pos(&self) -> ChainPos {
        ChainPos::new(self.block_number, self.tx_index)
    }

    pub fn is_self_loop(&self) -> bool {
        self.from == self.to
    }
}

/// Directed multigraph of one NFT's transfers. Edges keep stream order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TransactionGraph {
    pub nft: NftId,
    pub nodes: BTreeSet<Address>,
    pub edges: Vec<TransferEdge>,
}

impl TransactionGraph {
    pub fn empty(nft: NftId) -> Self {
        TransactionGraph { nft, nodes: BTreeSet::new(), edges: Vec::new() }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

/// Build the transaction graph for one NFT from its event stream.
/// One node per distinct account, one edge per event, order preserved.
pub fn build_graph<'a, I>(nft: NftId, events: I) -> Result<TransactionGraph, GraphError>
where
    I: IntoIterator<Item = &'a TransferEvent>,
{
    let mut graph = TransactionGraph::empty(nft);
    for event in events {
        if event.nft != nft {
            return Err(GraphError::MixedNft { expected: nft, found: event.nft });
        }
        graph.nodes.insert(event.from);
        graph.nodes.insert(event.to);
        graph.edges.push(TransferEdge::from_event(event));
    }
    Ok(graph)
}

/// A strongly connected component under scrutiny: its member accounts,
/// every edge internal to them, and the chain-order episode window.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SccCandidate {
    pub nft: NftId,
    pub members: BTreeSet<Address>,
    pub internal_edges: Vec<TransferEdge>,
    pub first_move: ChainPos,
    pub last_move: ChainPos,
}

impl SccCandidate {
    pub fn contains(&self, address: Address) -> bool {
        self.members.contains(&address)
    }
}

/// Mine every maximal SCC with at least two nodes, plus every single node
/// bearing a self-loop. Output is sorted by episode start.
pub fn find_sccs(graph: &TransactionGraph) -> Vec<SccCandidate> {
    let nodes: Vec<Address> = graph.nodes.iter().copied().collect();
    let index_of: BTreeMap<Address, usize> =
        nodes.iter().enumerate().map(|(i, a)| (*a, i)).collect();

    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    let mut has_self_loop = vec![false; nodes.len()];
    for edge in &graph.edges {
        let u = index_of[&edge.from];
        let v = index_of[&edge.to];
        if u == v {
            has_self_loop[u] = true;
        } else {
            adjacency[u].push(v);
        }
    }
    // Parallel edges only matter once for reachability.
    for targets in &mut adjacency {
        targets.sort_unstable();
        targets.dedup();
    }

    let components = tarjan_components(&adjacency);

    let mut candidates = Vec::new();
    for component in components {
        if component.len() < 2 && !has_self_loop[component[0]] {
            continue;
        }
        let members: BTreeSet<Address> = component.iter().map(|&i| nodes[i]).collect();
        let internal_edges: Vec<TransferEdge> = graph
            .edges
            .iter()
            .filter(|e| members.contains(&e.from) && members.contains(&e.to))
            .cloned()
            .collect();
        debug_assert!(!internal_edges.is_empty());
        let first_move = internal_edges.iter().map(TransferEdge::chain_pos).min().unwrap();
        let last_move = internal_edges.iter().map(TransferEdge::chain_pos).max().unwrap();
        candidates.push(SccCandidate {
            nft: graph.nft,
            members,
            internal_edges,
            first_move,
            last_move,
        });
    }

    candidates.sort_by(|a, b| {
        a.first_move
            .cmp(&b.first_move)
            .then_with(|| a.last_move.cmp(&b.last_move))
            .then_with(|| a.members.cmp(&b.members))
    });
    candidates
}

/// Iterative Tarjan over a deduplicated adjacency list. Returns every
/// maximal SCC as a vector of node indices (trivial ones included; the
/// caller applies the self-loop rule).
fn tarjan_components(adjacency: &[Vec<usize>]) -> Vec<Vec<usize>> {
    const UNVISITED: usize = usize::MAX;
    let n = adjacency.len();
    let mut index = vec![UNVISITED; n];
    let mut low_link = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut components = Vec::new();

    // Explicit DFS frames: (node, next child offset).
    let mut frames: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        frames.push((root, 0));
        while let Some(&(v, child)) = frames.last() {
            if child == 0 {
                index[v] = next_index;
                low_link[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if let Some(&w) = adjacency[v].get(child) {
                frames.last_mut().expect("frame present").1 = child + 1;
                if index[w] == UNVISITED {
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low_link[v] = low_link[v].min(index[w]);
                }
            } else {
                frames.pop();
                if let Some(&(parent, _)) = frames.last() {
                    low_link[parent] = low_link[parent].min(low_link[v]);
                }
                if low_link[v] == index[v] {
                    let mut component = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        component.push(w);
                        if w == v {
                            break;
                        }
                    }
                    components.push(component);
                }
            }
        }
    }
    components
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Payment, TokenId};
    use crate::money::Money;

    pub(crate) fn addr(n: u8) -> Address {
        let mut bytes = [0u8; 20];
        bytes[19] = n;
        Address::new(bytes)
    }

    fn nft() -> NftId {
        NftId::new(addr(0xCC), TokenId::from_u64(1))
    }

    pub(crate) fn event(seq: u64, from: Address, to: Address, eth: i64) -> TransferEvent {
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

    #[test]
    fn builds_nodes_and_parallel_edges() {
        let events = vec![event(1, addr(1), addr(2), 1), event(2, addr(1), addr(2), 1)];
        let graph = build_graph(nft(), &events).unwrap();
        assert_eq!(graph.node_count(), 2);
        assert_eq!(graph.edge_count(), 2, "multigraph keeps parallel edges");
    }

    #[test]
    fn self_loop_makes_single_node_graph() {
        let events = vec![event(1, addr(1), addr(1), 1)];
        let graph = build_graph(nft(), &events).unwrap();
        assert_eq!(graph.node_count(), 1);
        assert_eq!(graph.edge_count(), 1);
    }

    #[test]
    fn rejects_mixed_nft_streams() {
        let mut other = event(2, addr(1), addr(2), 1);
        other.nft = NftId::new(addr(0xCC), TokenId::from_u64(2));
        let events = vec![event(1, addr(1), addr(2), 1), other];
        assert!(matches!(build_graph(nft(), &events), Err(GraphError::MixedNft { .. })));
    }

    #[test]
    fn two_node_cycle_is_one_candidate() {
        let events = vec![event(1, addr(1), addr(2), 1), event(2, addr(2), addr(1), 1)];
        let graph = build_graph(nft(), &events).unwrap();
        let sccs = find_sccs(&graph);
        assert_eq!(sccs.len(), 1);
        assert_eq!(sccs[0].members, BTreeSet::from([addr(1), addr(2)]));
        assert_eq!(sccs[0].internal_edges.len(), 2);
        assert_eq!(sccs[0].first_move, ChainPos::new(1, 0));
        assert_eq!(sccs[0].last_move, ChainPos::new(2, 0));
    }

    #[test]
    fn acyclic_chain_yields_nothing() {
        let events = vec![event(1, addr(1), addr(2), 1), event(2, addr(2), addr(3), 1)];
        let graph = build_graph(nft(), &events).unwrap();
        assert!(find_sccs(&graph).is_empty());
    }

    #[test]
    fn self_loop_singleton_is_included() {
        let events = vec![event(1, addr(1), addr(1), 1)];
        let graph = build_graph(nft(), &events).unwrap();
        let sccs = find_sccs(&graph);
        assert_eq!(sccs.len(), 1);
        assert_eq!(sccs[0].members, BTreeSet::from([addr(1)]));
    }

    #[test]
    fn plain_singleton_is_excluded() {
        let events = vec![event(1, addr(1), addr(2), 1)];
        let graph = build_graph(nft(), &events).unwrap();
        assert!(find_sccs(&graph).is_empty());
    }

    #[test]
    fn disjoint_components_are_separate_and_sorted_by_start() {
        let events = vec![
            event(5, addr(3), addr(4), 1),
            event(6, addr(4), addr(3), 1),
            event(1, addr(1), addr(2), 1),
            event(2, addr(2), addr(1), 1),
        ];
        let graph = build_graph(nft(), &events).unwrap();
        let sccs = find_sccs(&graph);
        assert_eq!(sccs.len(), 2);
        assert_eq!(sccs[0].members, BTreeSet::from([addr(1), addr(2)]));
        assert_eq!(sccs[1].members, BTreeSet::from([addr(3), addr(4)]));
    }

    #[test]
    fn internal_edges_collect_all_edges_inside_members() {
        // 3-cycle plus an excursion to an outside node.
        let events = vec![
            event(1, addr(1), addr(2), 1),
            event(2, addr(2), addr(3), 1),
            event(3, addr(3), addr(1), 1),
            event(4, addr(1), addr(9), 0),
        ];
        let graph = build_graph(nft(), &events).unwrap();
        let sccs = find_sccs(&graph);
        assert_eq!(sccs.len(), 1);
        assert_eq!(sccs[0].internal_edges.len(), 3);
        let total_edges: usize = sccs.iter().map(|c| c.internal_edges.len()).sum();
        assert!(total_edges <= graph.edge_count());
    }

    #[test]
    fn deep_path_does_not_overflow() {
        // A long cycle exercises the iterative DFS.
        let n = 50_000u64;
        let mut events = Vec::new();
        for i in 0..n {
            events.push(event(i + 1, addr128(i), addr128((i + 1) % n), 1));
        }
        let graph = build_graph(nft(), &events).unwrap();
        let sccs = find_sccs(&graph);
        assert_eq!(sccs.len(), 1);
        assert_eq!(sccs[0].members.len(), n as usize);
    }

    fn addr128(n: u64) -> Address {
        let mut bytes = [0u8; 20];
        bytes[12..].copy_from_slice(&n.to_be_bytes());
        Address::new(bytes)
    }
}
