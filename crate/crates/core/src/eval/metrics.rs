use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::model::ClassLabel;

/// 7×7 counts; rows are true classes, columns predicted classes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; ClassLabel::COUNT]; ClassLabel::COUNT],
}

impl ConfusionMatrix {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (ClassLabel, ClassLabel)>) -> Self {
        let mut m = Self::default();
        for (t, p) in pairs {
            m.record(t, p);
        }
        m
    }

    pub fn record(&mut self, truth: ClassLabel, predicted: ClassLabel) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..ClassLabel::COUNT).map(|i| self.counts[i][i]).sum()
    }

    /// `100 · trace / total`; zero for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => 100.0 * self.trace() as f64 / n as f64,
        }
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (r, o) in self.counts.iter_mut().zip(&other.counts) {
            for (a, b) in r.iter_mut().zip(o) {
                *a += b;
            }
        }
    }

    /// CSV with a header row and one labelled row per true class.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for c in ClassLabel::ALL {
            out.push(',');
            out.push_str(c.name());
        }
        out.push('\n');
        for c in ClassLabel::ALL {
            out.push_str(c.name());
            for v in self.counts[c.index()] {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Index of the largest probability; ties go to the lowest index.
pub fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// Mean and Student-t 95% half-width `t(0.975, n−1) · s / √n`, with `s`
/// the sample standard deviation.
pub fn confidence_interval(values: &[f64]) -> Result<(f64, f64)> {
    let n = values.len();
    if n < 2 {
        return Err(Error::EmptyData(format!(
            "confidence interval needs at least 2 values, got {n}"
        )));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("positive degrees of freedom");
    let t = dist.inverse_cdf(0.975);
    Ok((mean, t * var.sqrt() / (n as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_prediction_list() {
        let m = ConfusionMatrix::from_pairs([
            (ClassLabel::Healthy, ClassLabel::Healthy),
            (ClassLabel::Anterior, ClassLabel::Healthy),
        ]);
        assert_eq!(m.accuracy(), 50.0);
        assert_eq!(m.counts[1][0], 1);
        assert_eq!(m.total(), 2);
    }

    #[test]
    fn all_correct_is_diagonal() {
        let m = ConfusionMatrix::from_pairs(ClassLabel::ALL.iter().map(|&c| (c, c)));
        assert_eq!(m.accuracy(), 100.0);
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(m.counts[i][j], (i == j) as u64);
            }
        }
    }

    #[test]
    fn argmax_ties_take_lowest() {
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[1.0 / 7.0; 7]), 0);
    }

    #[test]
    fn t_interval_on_table_values() {
        let (mean, half) = confidence_interval(&[100.0, 99.97, 99.97, 100.0, 100.0]).unwrap();
        assert!((mean - 99.988).abs() < 1e-9);
        // Σ(x − mean)² = 3·0.012² + 2·0.018² = 0.00108; t(0.975, 4) = 2.7764451
        let s = (0.00108f64 / 4.0).sqrt();
        assert!((half - 2.776_445_105_197_799 * s / 5f64.sqrt()).abs() < 1e-9);
        assert!((half - 0.0204).abs() < 0.0005);
    }

    #[test]
    fn identical_values_zero_width() {
        let (mean, half) = confidence_interval(&[97.5; 5]).unwrap();
        assert_eq!((mean, half), (97.5, 0.0));
        assert!(confidence_interval(&[1.0]).is_err());
    }

    #[test]
    fn csv_layout() {
        let csv = ConfusionMatrix::default().to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 8);
        assert!(lines[0].ends_with(",infero-postero-lateral"));
        assert_eq!(lines[1], "healthy,0,0,0,0,0,0,0");
    }
}
