//! Incoming/outgoing handover rate tables between cells.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::CellId;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    Out,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::In => "in",
            Direction::Out => "out",
        })
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in" => Ok(Direction::In),
            "out" => Ok(Direction::Out),
            other => Err(Error::InconsistentHandover(format!("unknown direction '{other}'"))),
        }
    }
}

/// Listed neighbors of one target cell, in table order, with rates in percent.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NeighborRates {
    pub incoming: Vec<(CellId, f64)>,
    pub outgoing: Vec<(CellId, f64)>,
}

impl NeighborRates {
    pub fn direction(&self, d: Direction) -> &[(CellId, f64)] {
        match d {
            Direction::In => &self.incoming,
            Direction::Out => &self.outgoing,
        }
    }
}

/// Handover rates keyed by target cell.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HandoverMatrix {
    targets: BTreeMap<CellId, NeighborRates>,
}

impl HandoverMatrix {
    pub fn new(targets: BTreeMap<CellId, NeighborRates>) -> Result<Self> {
        let m = Self { targets };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (target, rates) in &self.targets {
            for d in [Direction::In, Direction::Out] {
                let list = rates.direction(d);
                let mut seen = BTreeSet::new();
                for (n, r) in list {
                    if !r.is_finite() || *r < 0.0 {
                        return Err(Error::InconsistentHandover(format!("{target} {d} {n}: rate {r}")));
                    }
                    if n == target {
                        return Err(Error::InconsistentHandover(format!("{target} lists itself")));
                    }
                    if !seen.insert(*n) {
                        return Err(Error::InconsistentHandover(format!("{target} {d} lists {n} twice")));
                    }
                }
                let sum: f64 = list.iter().map(|(_, r)| r).sum();
                if sum > 100.0 + 1e-9 {
                    return Err(Error::InconsistentHandover(format!(
                        "{target} {d} rates sum to {sum:.2}%"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn targets(&self) -> impl Iterator<Item = (&CellId, &NeighborRates)> {
        self.targets.iter()
    }

    pub fn neighbors(&self, target: CellId) -> Option<&NeighborRates> {
        self.targets.get(&target)
    }

    pub fn rate(&self, target: CellId, neighbor: CellId, d: Direction) -> Option<f64> {
        self.neighbors(target)?
            .direction(d)
            .iter()
            .find(|(n, _)| *n == neighbor)
            .map(|(_, r)| *r)
    }

    /// Every cell mentioned as target or neighbor.
    pub fn cells(&self) -> BTreeSet<CellId> {
        let mut out = BTreeSet::new();
        for (t, r) in &self.targets {
            out.insert(*t);
            out.extend(r.incoming.iter().map(|(c, _)| *c));
            out.extend(r.outgoing.iter().map(|(c, _)| *c));
        }
        out
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header != ["target", "neighbor", "direction", "rate_percent"] {
            return Err(Error::MalformedRow {
                line: 1,
                reason: format!("unexpected handover header {header:?}"),
            });
        }
        let mut targets: BTreeMap<CellId, NeighborRates> = BTreeMap::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let bad = |reason: String| Error::MalformedRow { line, reason };
            if rec.len() != 4 {
                return Err(bad(format!("expected 4 fields, got {}", rec.len())));
            }
            let target: CellId = rec[0].parse()?;
            let neighbor: CellId = rec[1].parse()?;
            let dir: Direction = rec[2].parse()?;
            let rate: f64 = rec[3].parse().map_err(|_| bad(format!("bad rate '{}'", &rec[3])))?;
            let entry = targets.entry(target).or_default();
            match dir {
                Direction::In => entry.incoming.push((neighbor, rate)),
                Direction::Out => entry.outgoing.push((neighbor, rate)),
            }
        }
        Self::new(targets)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["target", "neighbor", "direction", "rate_percent"])?;
        for (t, rates) in &self.targets {
            for d in [Direction::In, Direction::Out] {
                for (n, r) in rates.direction(d) {
                    w.write_record([t.to_string(), n.to_string(), d.to_string(), r.to_string()])?;
                }
            }
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// The measured GU14 neighborhood: ten incoming and ten outgoing neighbors.
pub fn table2_handover_matrix() -> HandoverMatrix {
    const INCOMING: [(&str, f64); 10] = [
        ("GU12", 66.79),
        ("MS34", 6.08),
        ("VO14", 5.69),
        ("SY24", 4.68),
        ("VO12", 4.45),
        ("GU24", 3.36),
        ("MS37", 2.05),
        ("SY22", 1.99),
        ("GU13", 1.49),
        ("GU22", 1.15),
    ];
    const OUTGOING: [(&str, f64); 10] = [
        ("GU12", 26.86),
        ("SY24", 17.24),
        ("VO14", 12.48),
        ("GU17", 8.72),
        ("MS34", 8.31),
        ("GU24", 4.54),
        ("GU13", 3.96),
        ("VO12", 1.88),
        ("VO13", 1.88),
        ("RE37", 1.55),
    ];
    let parse = |list: &[(&str, f64)]| -> Vec<(CellId, f64)> {
        list.iter().map(|(c, r)| (c.parse().unwrap(), *r)).collect()
    };
    let mut targets = BTreeMap::new();
    targets.insert(
        "GU14".parse().unwrap(),
        NeighborRates {
            incoming: parse(&INCOMING),
            outgoing: parse(&OUTGOING),
        },
    );
    HandoverMatrix::new(targets).expect("static table is consistent")
}
