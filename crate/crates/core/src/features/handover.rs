use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{CellId, FeatureSeries};
use crate::error::{Error, Result};
use crate::handover::{Direction, HandoverMatrix};

/// Handover cluster of one target cell with rates renormalized to sum to one per direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HandoverWeights {
    pub target: CellId,
    pub incoming: Vec<(CellId, f64)>,
    pub outgoing: Vec<(CellId, f64)>,
}

impl HandoverWeights {
    pub fn direction(&self, d: Direction) -> &[(CellId, f64)] {
        match d {
            Direction::In => &self.incoming,
            Direction::Out => &self.outgoing,
        }
    }

    pub fn neighbors(&self) -> impl Iterator<Item = CellId> + '_ {
        let mut cells: Vec<CellId> = self.incoming.iter().chain(&self.outgoing).map(|(c, _)| *c).collect();
        cells.sort();
        cells.dedup();
        cells.into_iter()
    }

    /// Weighted average of neighbor values at one instant.
    pub fn mix(&self, d: Direction, value_of: impl Fn(CellId) -> f64) -> f64 {
        self.direction(d).iter().map(|(c, w)| w * value_of(*c)).sum()
    }
}

pub fn handover_weights(target: CellId, ho: &HandoverMatrix) -> Result<HandoverWeights> {
    let rates = ho.neighbors(target);
    let norm = |d: Direction| -> Result<Vec<(CellId, f64)>> {
        let list = rates.map(|r| r.direction(d)).unwrap_or_default();
        let total: f64 = list.iter().map(|(_, r)| r).sum();
        if list.is_empty() || total <= 0.0 {
            return Err(Error::EmptyCluster {
                cell: target.to_string(),
                direction: d.to_string(),
            });
        }
        Ok(list.iter().map(|(c, r)| (*c, r / total)).collect())
    };
    Ok(HandoverWeights {
        target,
        incoming: norm(Direction::In)?,
        outgoing: norm(Direction::Out)?,
    })
}

/// Incoming and outgoing handover-weighted averages of the neighbors' DL volume.
pub fn handover_features(
    target: CellId,
    neighbors: &BTreeMap<CellId, Vec<f64>>,
    ho: &HandoverMatrix,
) -> Result<(FeatureSeries, FeatureSeries)> {
    let weights = handover_weights(target, ho)?;
    let mut len = None;
    for c in weights.neighbors() {
        let s = neighbors
            .get(&c)
            .ok_or_else(|| Error::MissingNeighborSeries(c.to_string()))?;
        match len {
            None => len = Some(s.len()),
            Some(l) if l != s.len() => return Err(Error::LengthMismatch(l, s.len())),
            _ => {}
        }
    }
    let len = len.unwrap_or(0);
    let series = |d: Direction, name: &str| {
        let values = (0..len).map(|t| weights.mix(d, |c| neighbors[&c][t])).collect();
        FeatureSeries::new(name, values)
    };
    Ok((series(Direction::In, "handover_in"), series(Direction::Out, "handover_out")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::handover::{table2_handover_matrix, NeighborRates};
    use proptest::prelude::*;

    fn id(s: &str) -> CellId {
        s.parse().unwrap()
    }

    fn matrix(incoming: Vec<(&str, f64)>, outgoing: Vec<(&str, f64)>) -> HandoverMatrix {
        let conv = |v: Vec<(&str, f64)>| v.into_iter().map(|(c, r)| (id(c), r)).collect();
        let mut m = BTreeMap::new();
        m.insert(
            id("GU14"),
            NeighborRates {
                incoming: conv(incoming),
                outgoing: conv(outgoing),
            },
        );
        HandoverMatrix::new(m).unwrap()
    }

    #[test]
    fn two_neighbor_weighted_mean() {
        let ho = matrix(vec![("AA11", 60.0), ("BB11", 40.0)], vec![("AA11", 10.0)]);
        let mut n = BTreeMap::new();
        n.insert(id("AA11"), vec![10.0]);
        n.insert(id("BB11"), vec![20.0]);
        let (inc, out) = handover_features(id("GU14"), &n, &ho).unwrap();
        assert!((inc.values[0] - 14.0).abs() < 1e-12);
        // Single-neighbor cluster reproduces that neighbor.
        assert_eq!(out.values, vec![10.0]);
    }

    #[test]
    fn table_weights() {
        let w = handover_weights(id("GU14"), &table2_handover_matrix()).unwrap();
        let gu12 = w.incoming.iter().find(|(c, _)| *c == id("GU12")).unwrap().1;
        let column_sum = 66.79 + 6.08 + 5.69 + 4.68 + 4.45 + 3.36 + 2.05 + 1.99 + 1.49 + 1.15;
        assert!((gu12 - 66.79 / column_sum).abs() < 1e-12);
        assert!((gu12 - 0.6834).abs() < 1e-4);
        for d in [Direction::In, Direction::Out] {
            let s: f64 = w.direction(d).iter().map(|(_, x)| x).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_and_empty() {
        let ho = table2_handover_matrix();
        assert!(matches!(
            handover_features(id("GU14"), &BTreeMap::new(), &ho),
            Err(Error::MissingNeighborSeries(_))
        ));
        assert!(matches!(
            handover_weights(id("GU12"), &ho),
            Err(Error::EmptyCluster { .. })
        ));
    }

    proptest! {
        #[test]
        fn identical_neighbors_reproduce_series(vals in prop::collection::vec(0f64..100.0, 1..50)) {
            let ho = table2_handover_matrix();
            let w = handover_weights(id("GU14"), &ho).unwrap();
            let n: BTreeMap<CellId, Vec<f64>> = w.neighbors().map(|c| (c, vals.clone())).collect();
            let (inc, out) = handover_features(id("GU14"), &n, &ho).unwrap();
            for ((a, b), v) in inc.values.iter().zip(&out.values).zip(&vals) {
                prop_assert!((a - v).abs() <= 1e-12 * v.abs().max(1.0));
                prop_assert!((b - v).abs() <= 1e-12 * v.abs().max(1.0));
            }
        }
    }
}
