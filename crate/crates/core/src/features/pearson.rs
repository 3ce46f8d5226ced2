use serde::{Deserialize, Serialize};

use crate::data::{CellDataset, FeatureLabel, MIN_STD};
use crate::error::{Error, Result};

pub const DEFAULT_CORRELATION_THRESHOLD: f64 = 0.90;

/// Product-moment correlation of two equally long, non-constant vectors.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(Error::TooShortSeries {
            required: 2,
            actual: a.len(),
        });
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if (saa / n).sqrt() < MIN_STD || (sbb / n).sqrt() < MIN_STD {
        return Err(Error::ConstantInput);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Labels other than F10 whose absolute correlation with F10 on the training
/// slice reaches `threshold`, in label order. Constant counters are skipped.
pub fn select_ran_features(train: &CellDataset, threshold: f64) -> Result<Vec<FeatureLabel>> {
    let target = train.dl_volume();
    let mut out = Vec::new();
    for label in train.labels().filter(|l| *l != FeatureLabel::DL_VOLUME) {
        match pearson(target, train.get(label)?) {
            Ok(r) if r.abs() >= threshold => out.push(label),
            Ok(_) => {}
            Err(Error::ConstantInput) => log::warn!("{label} is constant on the training slice; skipped"),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Pairwise correlations of every counter in a dataset; `None` where a counter is constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTable {
    pub labels: Vec<FeatureLabel>,
    pub values: Vec<Vec<Option<f64>>>,
}

pub fn correlation_table(ds: &CellDataset) -> Result<CorrelationTable> {
    let labels: Vec<FeatureLabel> = ds.labels().collect();
    let mut values = vec![vec![None; labels.len()]; labels.len()];
    for (i, a) in labels.iter().enumerate() {
        for (j, b) in labels.iter().enumerate().skip(i) {
            let r = match pearson(ds.get(*a)?, ds.get(*b)?) {
                Ok(r) => Some(r),
                Err(Error::ConstantInput) => None,
                Err(e) => return Err(e),
            };
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationTable { labels, values })
}

impl CorrelationTable {
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["feature".to_string()];
        header.extend(self.labels.iter().map(|l| l.to_string()));
        w.write_record(&header)?;
        for (label, row) in self.labels.iter().zip(&self.values) {
            let mut rec = vec![label.to_string()];
            rec.extend(row.iter().map(|v| v.map(|r| format!("{r:.6}")).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{CellId, TimeGrid};
    use chrono::NaiveDate;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    /// Textbook two-pass definition, kept separate from the implementation.
    fn reference(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma: f64 = a.iter().sum::<f64>() / n;
        let mb: f64 = b.iter().sum::<f64>() / n;
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / n;
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum::<f64>() / n;
        cov / (va * vb).sqrt()
    }

    #[test]
    fn known_values() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [1.0, 2.0, 3.0, 10.0];
        // By hand: sum of cross deviations 14, squared deviations 5 and 50 -> 14 / sqrt(250).
        assert!((reference(&a, &b) - 0.885_437_744_847_146_2).abs() < 1e-12);
        assert!((pearson(&a, &b).unwrap() - reference(&a, &b)).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(pearson(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::ConstantInput)));
        assert!(matches!(pearson(&[1.0, 2.0], &[1.0]), Err(Error::LengthMismatch(2, 1))));
        assert!(pearson(&[1.0], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_and_affine_invariant(
            pairs in prop::collection::vec((-100f64..100.0, -100f64..100.0), 3..60),
        ) {
            let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            prop_assume!(pearson(&a, &b).is_ok());
            let r = pearson(&a, &b).unwrap();
            prop_assert!((r - pearson(&b, &a).unwrap()).abs() < 1e-12);
            let scaled: Vec<f64> = a.iter().map(|x| 2.0 * x + 3.0).collect();
            prop_assert!((r - pearson(&scaled, &b).unwrap()).abs() < 1e-12);
            prop_assert!((r - reference(&a, &b)).abs() < 1e-9);
        }
    }

    fn dataset() -> CellDataset {
        let start = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let f10: Vec<f64> = (0..50).map(|i| ((i * 7) % 13) as f64).collect();
        let mut m = BTreeMap::new();
        m.insert(FeatureLabel::new(16).unwrap(), f10.iter().map(|v| 2.0 * v + 1.0).collect());
        m.insert(FeatureLabel::new(13).unwrap(), f10.iter().map(|v| -v).collect());
        m.insert(FeatureLabel::new(3).unwrap(), (0..50).map(|i| (i % 3) as f64).collect());
        m.insert(FeatureLabel::new(5).unwrap(), vec![4.0; 50]);
        m.insert(FeatureLabel::DL_VOLUME, f10);
        CellDataset::new("GU14".parse::<CellId>().unwrap(), TimeGrid::new(start, 50).unwrap(), m).unwrap()
    }

    #[test]
    fn selection_thresholds() {
        let d = dataset();
        let f = |i| FeatureLabel::new(i).unwrap();
        assert_eq!(select_ran_features(&d, 0.9).unwrap(), vec![f(13), f(16)]);
        assert!(select_ran_features(&d, 1.01).unwrap().is_empty());
        assert_eq!(select_ran_features(&d, 0.0).unwrap(), vec![f(3), f(13), f(16)]);
    }

    #[test]
    fn table_marks_constant() {
        let t = correlation_table(&dataset()).unwrap();
        assert_eq!(t.labels.len(), 5);
        let i5 = t.labels.iter().position(|l| l.index() == 5).unwrap();
        assert!(t.values[i5].iter().all(Option::is_none));
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("feature,F3,F5,F10,F13,F16\n"));
    }
}
