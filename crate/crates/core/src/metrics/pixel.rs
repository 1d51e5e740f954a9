use serde::{Deserialize, Serialize};

use super::raster::LabelGrid;
use crate::error::{Error, Result};
use crate::region::RegionType;

/// `n[i][j]`: pixels of reference class `i` predicted as class `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionTally {
    pub classes: usize,
    pub counts: Vec<u64>,
}

impl ConfusionTally {
    pub fn new(classes: usize) -> Self {
        ConfusionTally {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn from_matrix(rows: &[Vec<u64>]) -> Self {
        let k = rows.len();
        let mut t = Self::new(k);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), k, "square confusion matrix");
            t.counts[i * k..(i + 1) * k].copy_from_slice(r);
        }
        t
    }

    pub fn n(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.classes + j]
    }

    pub fn add(&mut self, reference: u8, predicted: u8, count: u64) {
        let k = self.classes;
        self.counts[reference as usize * k + predicted as usize] += count;
    }

    /// Tally every pixel of a reference/prediction grid pair.
    pub fn add_grids(&mut self, reference: &LabelGrid, predicted: &LabelGrid) -> Result<()> {
        if (reference.width, reference.height) != (predicted.width, predicted.height) {
            return Err(Error::InvalidInput(format!(
                "label grids differ in size: {}x{} vs {}x{}",
                reference.width, reference.height, predicted.width, predicted.height
            )));
        }
        let k = self.classes;
        for (&r, &p) in reference.labels.iter().zip(&predicted.labels) {
            if r as usize >= k || p as usize >= k {
                return Err(Error::InvalidInput(format!("label {} outside {k} classes", r.max(p))));
            }
            self.counts[r as usize * k + p as usize] += 1;
        }
        Ok(())
    }

    /// Elementwise sum.
    pub fn merge(mut self, other: &ConfusionTally) -> Self {
        assert_eq!(self.classes, other.classes, "tallies over different class sets");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Reference pixels of class `i`.
    pub fn t(&self, i: usize) -> u64 {
        (0..self.classes).map(|j| self.n(i, j)).sum()
    }

    /// Predicted pixels of class `j`.
    pub fn predicted(&self, j: usize) -> u64 {
        (0..self.classes).map(|i| self.n(i, j)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassPixelMetrics {
    pub class: usize,
    /// Region type name, or `background` for class 0.
    pub name: String,
    pub pixels: u64,
    pub acc: f64,
    pub iu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelMetrics {
    pub p_acc: f64,
    pub m_acc: f64,
    pub m_iu: f64,
    pub f_iu: f64,
    /// Classes with reference pixels only.
    pub per_class: Vec<ClassPixelMetrics>,
}

impl PixelMetrics {
    pub fn iu(&self, class: usize) -> Option<f64> {
        self.per_class.iter().find(|c| c.class == class).map(|c| c.iu)
    }
}

pub fn class_name(class: usize) -> String {
    u8::try_from(class)
        .ok()
        .and_then(RegionType::from_label)
        .map_or_else(|| if class == 0 { "background".into() } else { format!("class{class}") }, |t| t.to_string())
}

/// Pixel accuracy, mean accuracy, mean IU and frequency-weighted IU. Means
/// run over classes with reference pixels; `exclude_background` drops class 0
/// from every sum and mean (its pixels still count as false positives of
/// the classes they were predicted as).
pub fn pixel_metrics(tally: &ConfusionTally, exclude_background: bool) -> Result<PixelMetrics> {
    let first = usize::from(exclude_background);
    let classes: Vec<usize> = (first..tally.classes).filter(|&i| tally.t(i) > 0).collect();
    if classes.is_empty() {
        return Err(Error::InvalidInput("confusion tally holds no reference pixels".into()));
    }
    let per_class: Vec<ClassPixelMetrics> = classes
        .iter()
        .map(|&i| {
            let (nii, t) = (tally.n(i, i) as f64, tally.t(i) as f64);
            ClassPixelMetrics {
                class: i,
                name: class_name(i),
                pixels: tally.t(i),
                acc: nii / t,
                iu: nii / (t + tally.predicted(i) as f64 - nii),
            }
        })
        .collect();
    let k = per_class.len() as f64;
    let t_sum: f64 = per_class.iter().map(|c| c.pixels as f64).sum();
    let diag: f64 = classes.iter().map(|&i| tally.n(i, i) as f64).sum();
    Ok(PixelMetrics {
        p_acc: diag / t_sum,
        m_acc: per_class.iter().map(|c| c.acc).sum::<f64>() / k,
        m_iu: per_class.iter().map(|c| c.iu).sum::<f64>() / k,
        f_iu: per_class.iter().map(|c| c.pixels as f64 * c.iu).sum::<f64>() / t_sum,
        per_class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_prediction() {
        let t = ConfusionTally::from_matrix(&[vec![5, 0, 0], vec![0, 3, 0], vec![0, 0, 0]]);
        let m = pixel_metrics(&t, false).unwrap();
        assert_eq!((m.p_acc, m.m_acc, m.m_iu, m.f_iu), (1.0, 1.0, 1.0, 1.0));
        assert_eq!(m.per_class.len(), 2);
    }

    #[test]
    fn two_class_worked_example() {
        let t = ConfusionTally::from_matrix(&[vec![6, 2], vec![1, 7]]);
        let m = pixel_metrics(&t, false).unwrap();
        assert_eq!(m.p_acc, 13.0 / 16.0);
        assert_eq!(m.iu(0), Some(6.0 / 9.0));
        assert_eq!(m.iu(1), Some(7.0 / 10.0));
        assert_eq!(m.m_iu, (6.0 / 9.0 + 7.0 / 10.0) / 2.0);
        assert_eq!(m.m_acc, (6.0 / 8.0 + 7.0 / 8.0) / 2.0);
        assert_eq!(m.f_iu, (8.0 * 6.0 / 9.0 + 8.0 * 7.0 / 10.0) / 16.0);
    }

    #[test]
    fn background_exclusion() {
        let t = ConfusionTally::from_matrix(&[vec![6, 2], vec![1, 7]]);
        let m = pixel_metrics(&t, true).unwrap();
        assert_eq!(m.p_acc, 7.0 / 8.0);
        assert_eq!(m.m_iu, 7.0 / 10.0);
        assert_eq!(m.per_class[0].name, "body");
    }

    #[test]
    fn empty_tally_is_an_error() {
        assert!(pixel_metrics(&ConfusionTally::new(3), false).is_err());
    }

    fn tally() -> impl Strategy<Value = ConfusionTally> {
        proptest::collection::vec(0u64..50, 16).prop_map(|v| ConfusionTally { classes: 4, counts: v })
    }

    proptest! {
        #[test]
        fn merge_is_commutative_and_associative(a in tally(), b in tally(), c in tally()) {
            prop_assert_eq!(a.clone().merge(&b), b.clone().merge(&a));
            prop_assert_eq!(a.clone().merge(&b).merge(&c), a.clone().merge(&b.clone().merge(&c)));
            prop_assert_eq!(a.clone().merge(&b).total(), a.total() + b.total());
        }

        #[test]
        fn metrics_bounded_and_iu_below_acc(t in tally()) {
            if let Ok(m) = pixel_metrics(&t, false) {
                for v in [m.p_acc, m.m_acc, m.m_iu, m.f_iu] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
                prop_assert!(m.m_iu <= m.m_acc + 1e-12);
            }
        }
    }
}
