//! Metric aggregation. Success is ground-truth goal satisfaction; backend
//! failures are excluded from rate denominators and reported in their own
//! column.

use serde::{Deserialize, Serialize};

use crate::engine::EpisodeRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    pub task_id: u32,
    pub episodes: u32,
    pub successes: u32,
    pub success_rate: f64,
    pub mean_steps: f64,
    pub injected: u32,
    pub detected: u32,
    pub corrected: u32,
    pub detection_rate: f64,
    pub correction_rate: f64,
    pub backend_failures: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub rows: Vec<TaskMetrics>,
}

impl MetricsTable {
    pub fn from_records(records: &[EpisodeRecord]) -> MetricsTable {
        let mut task_ids: Vec<u32> = records.iter().map(|r| r.task_id).collect();
        task_ids.sort_unstable();
        task_ids.dedup();

        let rows = task_ids
            .into_iter()
            .map(|task_id| {
                let of_task: Vec<&EpisodeRecord> =
                    records.iter().filter(|r| r.task_id == task_id).collect();
                let backend_failures =
                    of_task.iter().filter(|r| r.is_backend_failure()).count() as u32;
                let counted: Vec<&&EpisodeRecord> = of_task
                    .iter()
                    .filter(|r| !r.is_backend_failure())
                    .collect();
                let episodes = counted.len() as u32;
                let successes = counted.iter().filter(|r| r.goal_met).count() as u32;
                let injected = counted.iter().filter(|r| r.failure_injected).count() as u32;
                let detected = counted.iter().filter(|r| r.failure_detected).count() as u32;
                let corrected = counted.iter().filter(|r| r.failure_corrected).count() as u32;
                let mean_steps = if episodes > 0 {
                    counted.iter().map(|r| r.total_steps as f64).sum::<f64>() / episodes as f64
                } else {
                    0.0
                };
                TaskMetrics {
                    task_id,
                    episodes,
                    successes,
                    success_rate: rate(successes, episodes),
                    mean_steps,
                    injected,
                    detected,
                    corrected,
                    detection_rate: rate(detected, injected),
                    correction_rate: rate(corrected, injected),
                    backend_failures,
                }
            })
            .collect();
        MetricsTable { rows }
    }

    /// Unweighted arithmetic mean of the per-task rates; counts are summed.
    pub fn average(&self) -> TaskMetrics {
        let n = self.rows.len().max(1) as f64;
        let mean = |f: fn(&TaskMetrics) -> f64| self.rows.iter().map(f).sum::<f64>() / n;
        TaskMetrics {
            task_id: 0,
            episodes: self.rows.iter().map(|r| r.episodes).sum(),
            successes: self.rows.iter().map(|r| r.successes).sum(),
            success_rate: mean(|r| r.success_rate),
            mean_steps: mean(|r| r.mean_steps),
            injected: self.rows.iter().map(|r| r.injected).sum(),
            detected: self.rows.iter().map(|r| r.detected).sum(),
            corrected: self.rows.iter().map(|r| r.corrected).sum(),
            detection_rate: mean(|r| r.detection_rate),
            correction_rate: mean(|r| r.correction_rate),
            backend_failures: self.rows.iter().map(|r| r.backend_failures).sum(),
        }
    }

    pub fn task(&self, task_id: u32) -> Option<&TaskMetrics> {
        self.rows.iter().find(|r| r.task_id == task_id)
    }

    pub fn has_injections(&self) -> bool {
        self.rows.iter().any(|r| r.injected > 0)
    }
}

fn rate(numerator: u32, denominator: u32) -> f64 {
    if denominator == 0 {
        0.0
    } else {
        f64::from(numerator) / f64::from(denominator)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{EpisodeOutcome, EpisodeRecord};
    use crate::gateway::Transcript;

    fn record(task_id: u32, goal_met: bool, steps: u64) -> EpisodeRecord {
        EpisodeRecord {
            task_id,
            seed: 0,
            outcome: if goal_met {
                EpisodeOutcome::Success
            } else {
                EpisodeOutcome::OuterExhausted
            },
            goal_met,
            total_steps: steps,
            rounds: Vec::new(),
            transcript: Transcript::default(),
            failure_injected: false,
            failure_detected: false,
            failure_corrected: false,
        }
    }

    #[test]
    fn average_row_is_the_unweighted_mean_of_task_rates() {
        let records = vec![
            record(1, true, 6),
            record(1, true, 6),
            record(2, true, 21),
            record(2, false, 40),
        ];
        let table = MetricsTable::from_records(&records);
        let avg = table.average();
        assert_eq!(table.task(1).unwrap().success_rate, 1.0);
        assert_eq!(table.task(2).unwrap().success_rate, 0.5);
        assert!((avg.success_rate - 0.75).abs() < 1e-12);
    }

    #[test]
    fn backend_failures_leave_the_denominator() {
        let mut failed = record(1, false, 0);
        failed.outcome = EpisodeOutcome::BackendFailure {
            message: "x".to_string(),
        };
        let records = vec![record(1, true, 6), failed];
        let table = MetricsTable::from_records(&records);
        let row = table.task(1).unwrap();
        assert_eq!(row.episodes, 1);
        assert_eq!(row.success_rate, 1.0);
        assert_eq!(row.backend_failures, 1);
    }

    #[test]
    fn correction_never_exceeds_detection() {
        let mut r = record(3, true, 30);
        r.failure_injected = true;
        r.failure_detected = true;
        r.failure_corrected = true;
        let table = MetricsTable::from_records(&[r]);
        let row = table.task(3).unwrap();
        assert!(row.correction_rate <= row.detection_rate);
        assert!(row.detection_rate <= 1.0);
    }
}
