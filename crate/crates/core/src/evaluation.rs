//! Prequential (test-then-train) evaluation with a fading confusion matrix.

use crate::error::{Error, Result};
use crate::forest::{ForestState, LabeledPoint};

/// Default fading applied to the confusion matrix before each update.
pub const DEFAULT_EVAL_FADING: f64 = 0.999;

/// Label x label confusion matrix, rows = truth, columns = prediction.
#[derive(Clone, Debug, PartialEq)]
pub struct FadingConfusion {
    labels: usize,
    fading: f64,
    matrix: Vec<f64>,
}

impl FadingConfusion {
    pub fn new(labels: usize, fading: f64) -> Result<Self> {
        if !(fading > 0.0 && fading <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "evaluation fading must lie in (0, 1], got {fading}"
            )));
        }
        Ok(FadingConfusion {
            labels,
            fading,
            matrix: vec![0.0; labels * labels],
        })
    }

    /// Builds a matrix from explicit rows (truth-major).
    pub fn from_rows(rows: &[Vec<f64>], fading: f64) -> Result<Self> {
        let mut cm = FadingConfusion::new(rows.len(), fading)?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != rows.len() {
                return Err(Error::InvalidConfig(
                    "confusion matrix must be square".into(),
                ));
            }
            cm.matrix[i * rows.len()..(i + 1) * rows.len()].copy_from_slice(row);
        }
        Ok(cm)
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    pub fn get(&self, truth: usize, predicted: usize) -> f64 {
        self.matrix[truth * self.labels + predicted]
    }

    /// Fades every cell, then counts one `(truth, predicted)` pair.
    pub fn update(&mut self, truth: usize, predicted: usize) -> Result<()> {
        for label in [truth, predicted] {
            if label >= self.labels {
                return Err(Error::LabelOutOfRange {
                    label,
                    label_count: self.labels,
                });
            }
        }
        if self.fading != 1.0 {
            self.matrix.iter_mut().for_each(|v| *v *= self.fading);
        }
        self.matrix[truth * self.labels + predicted] += 1.0;
        Ok(())
    }

    /// Mean per-label F1 over the labels that were either seen or predicted.
    /// A label with zero precision and recall scores 0; an empty matrix scores 0.
    pub fn macro_f1(&self) -> f64 {
        let n = self.labels;
        let mut sum = 0.0;
        let mut included = 0usize;
        for k in 0..n {
            let tp = self.get(k, k);
            let row: f64 = (0..n).map(|j| self.get(k, j)).sum();
            let col: f64 = (0..n).map(|i| self.get(i, k)).sum();
            if row == 0.0 && col == 0.0 {
                continue;
            }
            included += 1;
            let precision = if col > 0.0 { tp / col } else { 0.0 };
            let recall = if row > 0.0 { tp / row } else { 0.0 };
            if precision + recall > 0.0 {
                sum += 2.0 * precision * recall / (precision + recall);
            }
        }
        if included == 0 {
            0.0
        } else {
            sum / included as f64
        }
    }
}

/// Outcome of one test-then-train step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    /// `None` while the forest was still empty.
    pub predicted: Option<usize>,
    pub truth: usize,
    pub f1: f64,
}

/// Incremental prequential evaluator.
#[derive(Clone, Debug)]
pub struct Prequential {
    confusion: FadingConfusion,
    seen: u64,
}

impl Prequential {
    pub fn new(labels: usize, eval_fading: f64) -> Result<Self> {
        Ok(Prequential {
            confusion: FadingConfusion::new(labels, eval_fading)?,
            seen: 0,
        })
    }

    pub fn confusion(&self) -> &FadingConfusion {
        &self.confusion
    }

    pub fn seen(&self) -> u64 {
        self.seen
    }

    /// Predicts `point`, scores the prediction, then trains on the point.
    pub fn step(&mut self, forest: &mut ForestState, point: &LabeledPoint) -> Result<StepOutcome> {
        forest.check_point(point)?;
        let predicted = if forest.is_empty() {
            None
        } else {
            let (label, _) = forest.predict(&point.features)?;
            self.confusion.update(point.label, label)?;
            Some(label)
        };
        forest.train_point(point)?;
        self.seen += 1;
        Ok(StepOutcome {
            predicted,
            truth: point.label,
            f1: self.confusion.macro_f1(),
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PrequentialReport {
    /// `(points processed, macro F1)` rows.
    pub series: Vec<(u64, f64)>,
    pub final_f1: f64,
    pub points: u64,
    /// `(truth, prediction)` for every scored point, when requested.
    pub log: Vec<(usize, usize)>,
}

/// Test-then-train over `stream`, reporting every `report_every` points and
/// at the end of the stream.
pub fn run_prequential<I>(
    stream: I,
    forest: &mut ForestState,
    eval_fading: f64,
    report_every: u64,
    keep_log: bool,
) -> Result<PrequentialReport>
where
    I: IntoIterator<Item = Result<LabeledPoint>>,
{
    if report_every == 0 {
        return Err(Error::InvalidConfig(
            "report interval must be positive".into(),
        ));
    }
    let mut eval = Prequential::new(forest.config().label_count, eval_fading)?;
    let mut report = PrequentialReport::default();
    let mut last_f1 = 0.0;
    for point in stream {
        let out = eval.step(forest, &point?)?;
        last_f1 = out.f1;
        if keep_log {
            if let Some(p) = out.predicted {
                report.log.push((out.truth, p));
            }
        }
        if eval.seen() % report_every == 0 {
            report.series.push((eval.seen(), out.f1));
        }
    }
    if eval.seen() % report_every != 0 {
        report.series.push((eval.seen(), last_f1));
    }
    report.points = eval.seen();
    report.final_f1 = last_f1;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ForestConfig;

    #[test]
    fn exact_counting_without_fading() {
        let mut cm = FadingConfusion::new(2, 1.0).unwrap();
        cm.update(0, 0).unwrap();
        cm.update(1, 1).unwrap();
        cm.update(0, 1).unwrap();
        assert_eq!(
            cm,
            FadingConfusion::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]], 1.0).unwrap()
        );
        assert!((cm.macro_f1() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn fading_examples() {
        let mut cm = FadingConfusion::new(2, 0.5).unwrap();
        cm.update(0, 0).unwrap();
        cm.update(0, 0).unwrap();
        assert_eq!(cm.get(0, 0), 1.5);

        let mut cm = FadingConfusion::new(2, 0.5).unwrap();
        cm.update(0, 0).unwrap();
        for _ in 0..10 {
            cm.update(1, 1).unwrap();
        }
        assert!((cm.get(0, 0) - 0.5f64.powi(10)).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_labels_rejected() {
        let mut cm = FadingConfusion::new(2, 1.0).unwrap();
        assert!(cm.update(2, 0).is_err());
        assert!(cm.update(0, 5).is_err());
        assert!(FadingConfusion::new(2, 0.0).is_err());
    }

    #[test]
    fn macro_f1_edge_cases() {
        let perfect = FadingConfusion::from_rows(&[vec![3.0, 0.0], vec![0.0, 2.0]], 1.0).unwrap();
        assert_eq!(perfect.macro_f1(), 1.0);
        let empty = FadingConfusion::new(3, 1.0).unwrap();
        assert_eq!(empty.macro_f1(), 0.0);
        // Label 2 never seen nor predicted.
        let partial = FadingConfusion::from_rows(
            &[
                vec![1.0, 1.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 0.0],
            ],
            1.0,
        )
        .unwrap();
        assert!((partial.macro_f1() - 2.0 / 3.0).abs() < 1e-12);
        // Seen but never predicted correctly: counts as zero.
        let miss = FadingConfusion::from_rows(&[vec![0.0, 2.0], vec![0.0, 2.0]], 1.0).unwrap();
        assert!((miss.macro_f1() - (0.0 + 2.0 * 0.5 / 1.5) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn report_cadence() {
        let mut cfg = ForestConfig::new(1, 2);
        cfg.tree_count = 1;
        let mut forest = ForestState::new(cfg).unwrap();
        let stream = (0..1000).map(|i| Ok(LabeledPoint::new(vec![i as f64 % 7.0], i % 2)));
        let report = run_prequential(stream, &mut forest, 1.0, 100, false).unwrap();
        assert_eq!(report.series.len(), 10);
        assert_eq!(report.series.last().unwrap().0, 1000);

        let mut forest = ForestState::new(forest.config().clone()).unwrap();
        let stream = (0..250).map(|i| Ok(LabeledPoint::new(vec![i as f64], 0)));
        let report = run_prequential(stream, &mut forest, 1.0, 100, true).unwrap();
        let idx: Vec<u64> = report.series.iter().map(|r| r.0).collect();
        assert_eq!(idx, vec![100, 200, 250]);
        // The very first point is train-only.
        assert_eq!(report.log.len(), 249);
    }

    #[test]
    fn constant_label_stream_scores_one() {
        let mut forest = ForestState::new(ForestConfig::new(2, 3)).unwrap();
        let stream =
            (0..500).map(|i| Ok(LabeledPoint::new(vec![(i % 13) as f64, (i % 5) as f64], 1)));
        let report = run_prequential(stream, &mut forest, 0.999, 50, false).unwrap();
        assert_eq!(report.final_f1, 1.0);
    }

    #[test]
    fn stream_errors_propagate() {
        let mut forest = ForestState::new(ForestConfig::new(1, 2)).unwrap();
        let stream = vec![
            Ok(LabeledPoint::new(vec![0.0], 0)),
            Err(Error::Parse {
                row: 2,
                message: "bad".into(),
            }),
        ];
        assert_eq!(
            run_prequential(stream, &mut forest, 1.0, 10, false).unwrap_err(),
            Error::Parse {
                row: 2,
                message: "bad".into()
            }
        );
    }
}
