//! Problem instances, the star metric and assignment evaluation.

mod generate;

use alloc::vec::Vec;
use thiserror::Error;

pub use generate::{generate_random, generate_ring, GeneratorConfig, RingConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceError {
    #[error("instance needs at least one hub")]
    NoHubs,
    #[error("instance needs at least one non-hub")]
    NoNonHubs,
    #[error("{matrix}: expected {expected_rows}x{expected_cols}, row {row} has {found} entries")]
    RowLength {
        matrix: &'static str,
        expected_rows: usize,
        expected_cols: usize,
        row: usize,
        found: usize,
    },
    #[error("{matrix}: expected {expected} rows, found {found}")]
    RowCount {
        matrix: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{matrix}[{row}][{col}] = {value} must be finite and non-negative")]
    BadEntry {
        matrix: &'static str,
        row: usize,
        col: usize,
        value: f64,
    },
    #[error("w[{0}][{0}] must be zero (no self-demand)")]
    SelfDemand(usize),
    #[error("hub_ids must be a permutation of 0..{0}")]
    BadHubIds(usize),
    #[error("assignment covers {found} non-hubs, instance has {expected}")]
    AssignmentLength { expected: usize, found: usize },
    #[error("non-hub {nonhub} assigned to hub {hub}, but only {hubs} hubs exist")]
    HubOutOfRange {
        nonhub: usize,
        hub: usize,
        hubs: usize,
    },
}

/// A star-star hub-and-spoke instance.
///
/// Hubs are stored in canonical order (non-decreasing spoke length). The
/// permutation applied when canonicalizing is kept in `hub_ids`, so that
/// `hub_ids[k]` is the caller's label for canonical hub `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    spoke_lengths: Vec<u64>,
    collection: Vec<Vec<f64>>,
    flows: Vec<Vec<f64>>,
    hub_ids: Vec<usize>,
}

impl Instance {
    /// Builds an instance, sorting hubs by spoke length (stable) and
    /// permuting the columns of `collection` accordingly.
    pub fn new(
        spoke_lengths: Vec<u64>,
        collection: Vec<Vec<f64>>,
        flows: Vec<Vec<f64>>,
    ) -> Result<Self, InstanceError> {
        let ids = (0..spoke_lengths.len()).collect();
        Self::with_hub_ids(spoke_lengths, collection, flows, ids)
    }

    /// Like [`Instance::new`], but with caller-supplied external hub labels
    /// aligned with the given (possibly unsorted) hub order.
    pub fn with_hub_ids(
        spoke_lengths: Vec<u64>,
        collection: Vec<Vec<f64>>,
        flows: Vec<Vec<f64>>,
        hub_ids: Vec<usize>,
    ) -> Result<Self, InstanceError> {
        let h = spoke_lengths.len();
        if h == 0 {
            return Err(InstanceError::NoHubs);
        }
        let n = collection.len();
        if n == 0 {
            return Err(InstanceError::NoNonHubs);
        }
        check_matrix("c", &collection, n, h)?;
        check_matrix("w", &flows, n, n)?;
        for (p, row) in flows.iter().enumerate() {
            if row[p] != 0.0 {
                return Err(InstanceError::SelfDemand(p));
            }
        }
        let mut seen = alloc::vec![false; h];
        if hub_ids.len() != h {
            return Err(InstanceError::BadHubIds(h));
        }
        for &id in &hub_ids {
            if id >= h || seen[id] {
                return Err(InstanceError::BadHubIds(h));
            }
            seen[id] = true;
        }

        let mut order: Vec<usize> = (0..h).collect();
        order.sort_by_key(|&i| spoke_lengths[i]);
        let spoke_lengths = order.iter().map(|&i| spoke_lengths[i]).collect();
        let hub_ids = order.iter().map(|&i| hub_ids[i]).collect();
        let collection = collection
            .iter()
            .map(|row| order.iter().map(|&i| row[i]).collect())
            .collect();
        Ok(Self {
            spoke_lengths,
            collection,
            flows,
            hub_ids,
        })
    }

    pub fn hub_count(&self) -> usize {
        self.spoke_lengths.len()
    }

    pub fn nonhub_count(&self) -> usize {
        self.collection.len()
    }

    pub fn spoke_lengths(&self) -> &[u64] {
        &self.spoke_lengths
    }

    pub fn spoke_length(&self, hub: usize) -> f64 {
        self.spoke_lengths[hub] as f64
    }

    pub fn collection_cost(&self, nonhub: usize, hub: usize) -> f64 {
        self.collection[nonhub][hub]
    }

    pub fn collection_costs(&self) -> &[Vec<f64>] {
        &self.collection
    }

    pub fn flow(&self, from: usize, to: usize) -> f64 {
        self.flows[from][to]
    }

    pub fn flows(&self) -> &[Vec<f64>] {
        &self.flows
    }

    /// External label of canonical hub `hub`.
    pub fn hub_id(&self, hub: usize) -> usize {
        self.hub_ids[hub]
    }

    pub fn hub_ids(&self) -> &[usize] {
        &self.hub_ids
    }

    /// Canonical index of the hub carrying external label `id`.
    pub fn hub_by_id(&self, id: usize) -> Option<usize> {
        self.hub_ids.iter().position(|&x| x == id)
    }

    pub fn metric(&self) -> StarMetric<'_> {
        StarMetric {
            spoke_lengths: &self.spoke_lengths,
        }
    }

    /// Total outgoing plus incoming demand of a non-hub. Each unit of it
    /// crosses the non-hub's collection edge once.
    pub fn throughput(&self, nonhub: usize) -> f64 {
        let n = self.nonhub_count();
        (0..n)
            .map(|q| self.flows[nonhub][q] + self.flows[q][nonhub])
            .sum()
    }

    /// Combined demand `w[p][q] + w[q][p]` of an unordered non-hub pair.
    pub fn pair_weight(&self, p: usize, q: usize) -> f64 {
        self.flows[p][q] + self.flows[q][p]
    }
}

fn check_matrix(
    name: &'static str,
    m: &[Vec<f64>],
    rows: usize,
    cols: usize,
) -> Result<(), InstanceError> {
    if m.len() != rows {
        return Err(InstanceError::RowCount {
            matrix: name,
            expected: rows,
            found: m.len(),
        });
    }
    for (r, row) in m.iter().enumerate() {
        if row.len() != cols {
            return Err(InstanceError::RowLength {
                matrix: name,
                expected_rows: rows,
                expected_cols: cols,
                row: r,
                found: row.len(),
            });
        }
        for (c, &v) in row.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(InstanceError::BadEntry {
                    matrix: name,
                    row: r,
                    col: c,
                    value: v,
                });
            }
        }
    }
    Ok(())
}

/// Hub-to-hub cost through the central depot: `l_i + l_j` off the diagonal,
/// zero on it.
#[derive(Debug, Clone, Copy)]
pub struct StarMetric<'a> {
    spoke_lengths: &'a [u64],
}

impl<'a> StarMetric<'a> {
    pub fn new(spoke_lengths: &'a [u64]) -> Self {
        Self { spoke_lengths }
    }

    pub fn len(&self) -> usize {
        self.spoke_lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spoke_lengths.is_empty()
    }

    #[inline]
    pub fn cost(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            (self.spoke_lengths[i] + self.spoke_lengths[j]) as f64
        }
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let h = self.len();
        (0..h)
            .map(|i| (0..h).map(|j| self.cost(i, j)).collect())
            .collect()
    }
}

/// A total map from non-hubs to (canonical) hub indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment(pub Vec<usize>);

impl Assignment {
    pub fn hub_of(&self, nonhub: usize) -> usize {
        self.0[nonhub]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn validate(&self, inst: &Instance) -> Result<(), InstanceError> {
        if self.0.len() != inst.nonhub_count() {
            return Err(InstanceError::AssignmentLength {
                expected: inst.nonhub_count(),
                found: self.0.len(),
            });
        }
        for (p, &i) in self.0.iter().enumerate() {
            if i >= inst.hub_count() {
                return Err(InstanceError::HubOutOfRange {
                    nonhub: p,
                    hub: i,
                    hubs: inst.hub_count(),
                });
            }
        }
        Ok(())
    }
}

/// Total transportation cost of an integral assignment:
/// `sum_{p != q} w_pq (c_{p f(p)} + c_{q f(q)} + c_{f(p) f(q)})`.
pub fn evaluate_cost(inst: &Instance, assignment: &Assignment) -> Result<f64, InstanceError> {
    assignment.validate(inst)?;
    let metric = inst.metric();
    let f = assignment.as_slice();
    let n = inst.nonhub_count();
    let mut total = 0.0;
    for p in 0..n {
        for q in 0..n {
            let w = inst.flows[p][q];
            if p == q || w == 0.0 {
                continue;
            }
            total += w
                * (inst.collection[p][f[p]] + inst.collection[q][f[q]] + metric.cost(f[p], f[q]));
        }
    }
    Ok(total)
}
