use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use super::{LookupError, RoadNetwork};

#[derive(PartialEq)]
struct Entry<'a> {
    cost: f64,
    edge: &'a str,
}

impl Eq for Entry<'_> {}

impl Ord for Entry<'_> {
    // min-heap on (cost, edge id)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.edge.cmp(self.edge))
    }
}

impl PartialOrd for Entry<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl RoadNetwork {
    /// Free-flow travel time of an edge.
    pub fn travel_time(&self, edge: &str) -> Option<f64> {
        let e = self.edge(edge)?;
        Some(self.edge_length(e) / e.speed_limit)
    }

    /// Edges reachable from `edge` through a single junction, sorted by id.
    pub fn successor_edges(&self, edge: &str) -> Vec<&str> {
        let Some(e) = self.edge(edge) else {
            return Vec::new();
        };
        let mut out = BTreeSet::new();
        for &lane in &e.lanes {
            for &c in self.outgoing(lane) {
                if let Some(to) = self.lane(self.connection(c).to_lane).edge.as_deref() {
                    out.insert(to);
                }
            }
        }
        out.into_iter().collect()
    }

    /// Minimum free-flow travel time route (both end edges included). Equal
    /// costs resolve toward the lexicographically smaller predecessor.
    pub fn route(&self, from_edge: &str, to_edge: &str) -> Result<Vec<String>, LookupError> {
        for e in [from_edge, to_edge] {
            if self.edge(e).is_none() {
                return Err(LookupError::UnknownEdge(e.to_string()));
            }
        }
        let mut best: BTreeMap<&str, f64> = BTreeMap::new();
        let mut pred: BTreeMap<&str, &str> = BTreeMap::new();
        let mut done: BTreeSet<&str> = BTreeSet::new();
        let mut heap = BinaryHeap::new();
        let start_cost = self.travel_time(from_edge).expect("checked");
        let (from_key, _) = self.edges().get_key_value(from_edge).expect("checked");
        best.insert(from_key.as_str(), start_cost);
        heap.push(Entry {
            cost: start_cost,
            edge: from_key.as_str(),
        });
        while let Some(Entry { cost, edge }) = heap.pop() {
            if !done.insert(edge) {
                continue;
            }
            if edge == to_edge {
                let mut path = vec![edge.to_string()];
                let mut cur = edge;
                while let Some(&p) = pred.get(cur) {
                    path.push(p.to_string());
                    cur = p;
                }
                path.reverse();
                return Ok(path);
            }
            for next in self.successor_edges(edge) {
                if done.contains(next) {
                    continue;
                }
                let c = cost + self.travel_time(next).expect("successor exists");
                let better = match best.get(next) {
                    None => true,
                    Some(&old) => c < old || (c == old && pred.get(next).is_some_and(|&p| edge < p)),
                };
                if better {
                    best.insert(next, c);
                    pred.insert(next, edge);
                    heap.push(Entry { cost: c, edge: next });
                }
            }
        }
        Err(LookupError::NoPath {
            from: from_edge.to_string(),
            to: to_edge.to_string(),
        })
    }
}
