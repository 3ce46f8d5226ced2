use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::train::{evaluate, ModelData};
use super::{train_network, LossConfig, TrainConfig, Workspace};
use crate::data::FoldPlan;
use crate::error::{Error, Result};
use crate::features::{FeatureRecipe, InputMatrix};

/// One hyperparameter combination.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub hidden: usize,
    pub layers: usize,
    pub train: TrainConfig,
}

impl GridPoint {
    /// Canonical encoding; ties in validation loss go to the smallest.
    pub fn encode(&self) -> String {
        format!(
            "h{:05}-l{:02}-lr{:.6e}-e{:05}-l2{:.6e}-b{:05}-s{}",
            self.hidden,
            self.layers,
            self.train.learning_rate,
            self.train.epochs,
            self.train.l2,
            self.train.batch_size,
            self.train.seed
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: GridPoint,
    pub best_loss: f64,
    /// Mean validation loss across folds per point; `None` if any fold diverged.
    pub scores: Vec<(GridPoint, Option<f64>)>,
}

/// Cross-validated grid search: each point is trained on every fold's
/// training window and scored by mean validation loss across folds.
pub fn grid_search(
    grid: &[GridPoint],
    recipe: &FeatureRecipe,
    matrix: &InputMatrix,
    plan: &FoldPlan,
    loss: &LossConfig,
) -> Result<GridSearchResult> {
    if grid.is_empty() {
        return Err(Error::EmptySearchRange);
    }
    let folds = plan
        .folds
        .iter()
        .map(|f| ModelData::new(recipe, matrix, f.train.clone(), f.val.clone()))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|p| (0..folds.len()).map(move |f| (p, f)))
        .collect();
    let fold_losses: Vec<Result<Option<f64>>> = jobs
        .par_iter()
        .map(|&(p, f)| {
            let point = &grid[p];
            let data = &folds[f];
            let spec = data.spec(point.hidden, point.layers)?;
            match train_network(&spec, &data.train, None, &point.train, loss) {
                Ok(net) => {
                    let v = evaluate(&mut Workspace::new(&spec), &net.params, &data.val, loss.w);
                    Ok(v.is_finite().then_some(v))
                }
                Err(Error::Divergence { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let fold_losses = fold_losses.into_iter().collect::<Result<Vec<_>>>()?;

    let scores: Vec<(GridPoint, Option<f64>)> = grid
        .iter()
        .enumerate()
        .map(|(p, point)| {
            let per_fold = &fold_losses[p * folds.len()..(p + 1) * folds.len()];
            let mean = per_fold
                .iter()
                .copied()
                .collect::<Option<Vec<f64>>>()
                .map(|v| v.iter().sum::<f64>() / v.len() as f64);
            (*point, mean)
        })
        .collect();
    let (best, best_loss) = scores
        .iter()
        .filter_map(|(p, s)| s.map(|s| (*p, s)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.encode().cmp(&b.0.encode())))
        .ok_or(Error::AllDiverged)?;
    Ok(GridSearchResult {
        best,
        best_loss,
        scores,
    })
}
