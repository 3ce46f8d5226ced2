use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::HOURS_PER_WEEK;
use crate::error::{Error, Result};

pub const DEFAULT_FOLDS: usize = 6;

/// Fold shift: 8 weeks.
pub const TWO_MONTHS_HOURS: usize = 8 * HOURS_PER_WEEK;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Range<usize>,
    pub val: Range<usize>,
}

/// Sliding-window cross-validation folds.
///
/// Every fold trains on `train_len = len - k * shift` hours and validates on
/// the following `shift` hours; fold `i` is fold 0 moved forward by `i * shift`.
/// The last fold's validation window ends exactly at the end of the grid.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub shift: usize,
    pub train_len: usize,
    pub folds: Vec<Fold>,
}

pub fn make_folds(len: usize, k: usize, shift: usize) -> Result<FoldPlan> {
    if k == 0 || shift == 0 {
        return Err(Error::InfeasiblePlan(format!("k={k} and shift={shift} must be positive")));
    }
    let needed = k * shift;
    if len <= needed {
        return Err(Error::InfeasiblePlan(format!(
            "{k} folds shifted by {shift} hours need more than {needed} hours, grid has {len}"
        )));
    }
    let train_len = len - needed;
    let folds = (0..k)
        .map(|i| {
            let s = i * shift;
            Fold {
                train: s..s + train_len,
                val: s + train_len..s + train_len + shift,
            }
        })
        .collect();
    Ok(FoldPlan {
        k,
        shift,
        train_len,
        folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SplitSpec;
    use proptest::prelude::*;

    #[test]
    fn paper_year_six_folds() {
        let plan = make_folds(8736, 6, TWO_MONTHS_HOURS).unwrap();
        assert_eq!(plan.folds.len(), 6);
        assert_eq!(plan.train_len, 672);
        for (i, f) in plan.folds.iter().enumerate() {
            assert_eq!(f.val, i * 1344 + 672..i * 1344 + 672 + 1344);
            assert_eq!(f.train.end, f.val.start);
        }
        // Enumerate every pair: validation windows never overlap.
        for i in 0..6 {
            for j in i + 1..6 {
                let (a, b) = (&plan.folds[i].val, &plan.folds[j].val);
                assert!(a.end <= b.start || b.end <= a.start);
            }
        }
        assert_eq!(plan.folds[5].val.end, 8736);
    }

    #[test]
    fn single_fold_matches_split() {
        let spec = SplitSpec::default();
        let [train, val, _] = spec.ranges(8736).unwrap();
        let plan = make_folds(val.end, 1, TWO_MONTHS_HOURS).unwrap();
        assert_eq!(plan.folds[0].train, train);
        assert_eq!(plan.folds[0].val, val);
    }

    #[test]
    fn too_short_is_infeasible() {
        assert!(matches!(make_folds(2000, 6, 1344), Err(Error::InfeasiblePlan(_))));
        assert!(make_folds(2000, 0, 1344).is_err());
    }

    proptest! {
        #[test]
        fn folds_tile_and_shift(k in 1usize..8, shift in 1usize..300, extra in 1usize..500) {
            let len = k * shift + extra;
            let plan = make_folds(len, k, shift).unwrap();
            for w in plan.folds.windows(2) {
                prop_assert_eq!(w[1].train.start - w[0].train.start, shift);
                prop_assert_eq!(w[1].val.start - w[0].val.start, shift);
            }
            for f in &plan.folds {
                prop_assert!(f.train.end <= f.val.start);
                prop_assert_eq!(f.val.len(), shift);
                prop_assert!(f.val.end <= len);
            }
        }
    }
}
