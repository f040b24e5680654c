//! Streaming ratio estimator `Σ w·1[separable] / Σ w` with batch-means
//! standard errors.
//!
//! Accumulators are filled by a single worker and combined with
//! [`EstimatorAccumulator::merge`]. Merging in chunk order yields the same
//! batch list as one sequential pass whenever chunk boundaries fall on batch
//! boundaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qes::{WeightedSample, BLOCH_BALL_VOLUME, SEPARABLE_VOLUME_BOUND};

/// Slack above `4π/81` before a separable sample counts as a violation of
/// the volume bound.
pub const VIOLATION_TOL: f64 = 1e-12;

/// Sums over one batch of consecutive samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub n_samples: u64,
    pub n_excluded: u64,
    pub weight_sum: f64,
    pub sep_weight_sum: f64,
    pub above_weight_sum: f64,
}

impl BatchRecord {
    pub fn estimate(&self) -> Option<f64> {
        (self.weight_sum > 0.0).then(|| self.sep_weight_sum / self.weight_sum)
    }

    pub fn p_above_threshold(&self) -> Option<f64> {
        (self.weight_sum > 0.0).then(|| self.above_weight_sum / self.weight_sum)
    }

    fn is_empty(&self) -> bool {
        self.n_samples == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorAccumulator {
    batch_size: u64,
    pub n_total: u64,
    pub n_excluded: u64,
    pub sum_w: f64,
    pub sum_w_sep: f64,
    pub sum_w_above_threshold: f64,
    pub sum_w_below_threshold: f64,
    pub sum_w_sep_below_threshold: f64,
    pub sum_v_a: f64,
    // unweighted tallies over every sample, excluded or not
    pub n_separable: u64,
    pub n_above_threshold: u64,
    pub n_sep_below_threshold: u64,
    pub n_threshold_violations: u64,
    batches: Vec<BatchRecord>,
    open: BatchRecord,
}

impl EstimatorAccumulator {
    pub fn new(batch_size: u64) -> Self {
        assert!(batch_size > 0, "batch size must be positive");
        Self {
            batch_size,
            n_total: 0,
            n_excluded: 0,
            sum_w: 0.0,
            sum_w_sep: 0.0,
            sum_w_above_threshold: 0.0,
            sum_w_below_threshold: 0.0,
            sum_w_sep_below_threshold: 0.0,
            sum_v_a: 0.0,
            n_separable: 0,
            n_above_threshold: 0,
            n_sep_below_threshold: 0,
            n_threshold_violations: 0,
            batches: Vec::new(),
            open: BatchRecord::default(),
        }
    }

    pub fn batch_size(&self) -> u64 {
        self.batch_size
    }

    pub fn accumulate(&mut self, s: &WeightedSample) {
        self.n_total += 1;
        self.open.n_samples += 1;

        let above = s.v_a > SEPARABLE_VOLUME_BOUND;
        if s.separable {
            self.n_separable += 1;
            if !above {
                self.n_sep_below_threshold += 1;
            }
            if s.v_a > SEPARABLE_VOLUME_BOUND + VIOLATION_TOL {
                self.n_threshold_violations += 1;
            }
        }
        if above {
            self.n_above_threshold += 1;
        }

        match s.weight {
            Some(w) if w.is_finite() && w >= 0.0 => {
                self.sum_w += w;
                self.sum_v_a += s.v_a;
                self.open.weight_sum += w;
                if s.separable {
                    self.sum_w_sep += w;
                    self.open.sep_weight_sum += w;
                }
                if above {
                    self.sum_w_above_threshold += w;
                    self.open.above_weight_sum += w;
                } else {
                    self.sum_w_below_threshold += w;
                    if s.separable {
                        self.sum_w_sep_below_threshold += w;
                    }
                }
            }
            _ => {
                self.n_excluded += 1;
                self.open.n_excluded += 1;
            }
        }

        if self.open.n_samples == self.batch_size {
            self.close_batch();
        }
    }

    /// Closes a partially filled batch so that it is reported on its own.
    pub fn close_batch(&mut self) {
        if !self.open.is_empty() {
            self.batches.push(std::mem::take(&mut self.open));
        }
    }

    /// Closed batches followed by the open one, if it holds samples.
    pub fn batches(&self) -> impl Iterator<Item = &BatchRecord> {
        self.batches
            .iter()
            .chain(std::iter::once(&self.open).filter(|b| !b.is_empty()))
    }

    /// `(batch size, estimate)` for every batch carrying weight.
    pub fn batch_estimates(&self) -> Vec<(u64, f64)> {
        self.batches()
            .filter_map(|b| b.estimate().map(|e| (b.n_samples, e)))
            .collect()
    }

    /// Field-wise sums; `other`'s batches follow `self`'s.
    pub fn merge(mut self, other: Self) -> Result<Self> {
        if self.batch_size != other.batch_size {
            return Err(Error::ConfigMismatch(format!(
                "batch sizes {} and {} differ",
                self.batch_size, other.batch_size
            )));
        }
        if other.n_total == 0 {
            return Ok(self);
        }
        self.close_batch();
        self.n_total += other.n_total;
        self.n_excluded += other.n_excluded;
        self.sum_w += other.sum_w;
        self.sum_w_sep += other.sum_w_sep;
        self.sum_w_above_threshold += other.sum_w_above_threshold;
        self.sum_w_below_threshold += other.sum_w_below_threshold;
        self.sum_w_sep_below_threshold += other.sum_w_sep_below_threshold;
        self.sum_v_a += other.sum_v_a;
        self.n_separable += other.n_separable;
        self.n_above_threshold += other.n_above_threshold;
        self.n_sep_below_threshold += other.n_sep_below_threshold;
        self.n_threshold_violations += other.n_threshold_violations;
        self.batches.extend(other.batches);
        self.open = other.open;
        Ok(self)
    }

    pub fn summarize(&self) -> Result<EstimateSummary> {
        if !(self.sum_w > 0.0) {
            return Err(Error::EmptyAccumulator);
        }
        let estimates: Vec<f64> = self.batch_estimates().into_iter().map(|(_, e)| e).collect();
        let stats = BatchStats::of(&estimates);
        let n_counted = self.n_total - self.n_excluded;

        let below = self.sum_w_below_threshold;
        let entangled_below = (below - self.sum_w_sep_below_threshold).max(0.0);
        let n = self.n_total as f64;
        let n_below = self.n_total - self.n_above_threshold;

        Ok(EstimateSummary {
            estimate: clamp_probability(self.sum_w_sep / self.sum_w),
            std_error: stats.std_error,
            std_error_defined: stats.defined,
            p_above_threshold: clamp_probability(self.sum_w_above_threshold / self.sum_w),
            entangled_fraction_below_threshold: clamp_probability(entangled_below / self.sum_w),
            mean_v_a_relative: if n_counted > 0 {
                self.sum_v_a / n_counted as f64 / BLOCH_BALL_VOLUME
            } else {
                0.0
            },
            n_total: self.n_total,
            n_excluded: self.n_excluded,
            n_batches: estimates.len() as u64,
            batch_median: stats.median,
            batch_mean: stats.mean,
            batch_variance: stats.variance,
            batch_min: stats.min,
            batch_max: stats.max,
            entangled_share_below_threshold: (below > 0.0)
                .then(|| clamp_probability(entangled_below / below)),
            unweighted: UnweightedStats {
                separable_fraction: self.n_separable as f64 / n,
                p_above_threshold: self.n_above_threshold as f64 / n,
                entangled_fraction_below_threshold: (n_below - self.n_sep_below_threshold) as f64
                    / n,
                threshold_violations: self.n_threshold_violations,
            },
        })
    }
}

fn clamp_probability(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

/// Order statistics and moments of the per-batch estimates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchStats {
    pub median: f64,
    pub mean: f64,
    /// Sample variance (n - 1 denominator); 0 when fewer than two batches.
    pub variance: f64,
    pub std_error: f64,
    pub defined: bool,
    pub min: f64,
    pub max: f64,
}

impl BatchStats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                median: f64::NAN,
                mean: f64::NAN,
                variance: 0.0,
                std_error: 0.0,
                defined: false,
                min: f64::NAN,
                max: f64::NAN,
            };
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        let mean = values.iter().sum::<f64>() / n as f64;
        let (variance, std_error, defined) = if n >= 2 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var, (var / n as f64).sqrt(), true)
        } else {
            (0.0, 0.0, false)
        };
        Self {
            median,
            mean,
            variance,
            std_error,
            defined,
            min: sorted[0],
            max: sorted[n - 1],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnweightedStats {
    pub separable_fraction: f64,
    pub p_above_threshold: f64,
    pub entangled_fraction_below_threshold: f64,
    /// Separable samples with `V_A > 4π/81`; zero for a correct pipeline.
    pub threshold_violations: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateSummary {
    pub estimate: f64,
    pub std_error: f64,
    /// False when fewer than two batches carry weight; `std_error` is then 0.
    pub std_error_defined: bool,
    /// Weighted probability that `V_A > 4π/81`.
    pub p_above_threshold: f64,
    /// Weighted probability of being entangled with `V_A ≤ 4π/81`.
    pub entangled_fraction_below_threshold: f64,
    /// Mean `V_A` over counted samples, in units of the Bloch-ball volume.
    pub mean_v_a_relative: f64,
    pub n_total: u64,
    pub n_excluded: u64,
    pub n_batches: u64,
    pub batch_median: f64,
    pub batch_mean: f64,
    pub batch_variance: f64,
    pub batch_min: f64,
    pub batch_max: f64,
    /// Entangled weight as a share of the weight below the threshold.
    pub entangled_share_below_threshold: Option<f64>,
    pub unweighted: UnweightedStats,
}
