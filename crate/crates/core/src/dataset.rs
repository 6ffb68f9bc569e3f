use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Scores {
    /// Positive-class score `a1` per row.
    Binary(Vec<f64>),
    /// Row-major score vectors of width `n_classes`.
    Multi(Vec<f64>),
}

/// Rows of (confidence scores, integer label); the empirical score/label joint.
///
/// Binary datasets store the scalar positive-class score only. Multi-class
/// datasets store one confidence per class; these need not sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDataset {
    n_classes: usize,
    scores: Scores,
    labels: Vec<usize>,
}

fn check_score(row: usize, a: f64) -> Result<()> {
    if (0.0..=1.0).contains(&a) {
        Ok(())
    } else {
        Err(domain(format!("row {row}: score {a} outside [0, 1]")))
    }
}

fn check_labels(labels: &[usize], n_classes: usize) -> Result<()> {
    if let Some((row, y)) = labels.iter().enumerate().find(|(_, y)| **y >= n_classes) {
        return Err(domain(format!(
            "row {row}: label {y} outside [0, {n_classes})"
        )));
    }
    Ok(())
}

impl ScoredDataset {
    pub fn binary(scores: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if scores.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: scores.len(),
                actual: labels.len(),
            });
        }
        for (row, &a) in scores.iter().enumerate() {
            check_score(row, a)?;
        }
        check_labels(&labels, 2)?;
        Ok(Self {
            n_classes: 2,
            scores: Scores::Binary(scores),
            labels,
        })
    }

    /// Multi-class dataset from row-major scores of width `n_classes`.
    pub fn multi_flat(n_classes: usize, scores: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        if n_classes < 2 {
            return Err(domain(format!("need at least two classes, got {n_classes}")));
        }
        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if scores.len() != n_classes * labels.len() {
            return Err(Error::DimensionMismatch {
                expected: n_classes * labels.len(),
                actual: scores.len(),
            });
        }
        for (i, &a) in scores.iter().enumerate() {
            check_score(i / n_classes, a)?;
        }
        check_labels(&labels, n_classes)?;
        Ok(Self {
            n_classes,
            scores: Scores::Multi(scores),
            labels,
        })
    }

    pub fn multi(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        let n = rows.first().map(Vec::len).ok_or(Error::EmptyDataset)?;
        let mut flat = Vec::with_capacity(n * rows.len());
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: row.len(),
                });
            }
            flat.extend(row);
        }
        Self::multi_flat(n, flat, labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn is_binary(&self) -> bool {
        matches!(self.scores, Scores::Binary(_))
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Positive-class scores of a binary dataset.
    pub fn binary_scores(&self) -> Option<&[f64]> {
        match &self.scores {
            Scores::Binary(s) => Some(s),
            Scores::Multi(_) => None,
        }
    }

    /// Score vector of a multi-class row.
    pub fn score_vector(&self, row: usize) -> Option<&[f64]> {
        match &self.scores {
            Scores::Binary(_) => None,
            Scores::Multi(s) => Some(&s[row * self.n_classes..(row + 1) * self.n_classes]),
        }
    }

    /// Confidence for `class` on `row`; binary rows report `1 - a1` for class 0.
    pub fn class_score(&self, row: usize, class: usize) -> f64 {
        match &self.scores {
            Scores::Binary(s) if class == 1 => s[row],
            Scores::Binary(s) => 1.0 - s[row],
            Scores::Multi(s) => s[row * self.n_classes + class],
        }
    }

    /// One-vs-rest column of scores for `class`.
    pub fn class_column(&self, class: usize) -> Result<Vec<f64>> {
        if class >= self.n_classes {
            return Err(domain(format!(
                "class {class} outside [0, {})",
                self.n_classes
            )));
        }
        Ok((0..self.len()).map(|r| self.class_score(r, class)).collect())
    }

    /// Label counts over all rows.
    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Same labels with replacement binary scores.
    pub fn with_binary_scores(&self, scores: Vec<f64>) -> Result<Self> {
        Self::binary(scores, self.labels.clone())
    }
}
