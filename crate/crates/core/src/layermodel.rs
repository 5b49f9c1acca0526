//! The `(r0, r1, r2, alpha)` layer model of support patterns.
//!
//! Under the model a cell in layer `m` (anti-diagonal `i + j - 1 = m`) is
//! nonzero independently with probability
//!
//! ```text
//! 0                       m <= r0
//! 1                       r0 < m <= r1
//! exp(-alpha (m - r0))    r1 < m <= r2
//! 0                       m > r2
//! ```
//!
//! This module samples the model, evaluates the closed-form lower bound on
//! the probability that the zigzag permutation strictly lowers the largest
//! column count, and provides simulation and exact-enumeration references
//! for that probability.

use std::ops::RangeInclusive;

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::permute::zigzag_permutation;
use crate::rng::Stream;
use crate::signal::{layer_count, layer_sizes, Cell, SupportSet};

/// Exponent offset used in the decaying region.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ProbabilityConvention {
    /// `p_m = exp(-alpha (m - r0))`.
    #[default]
    Standard,
    /// `p_m = exp(-alpha (m - r0 - 1))`, the form whose odds ratios are
    /// `1 / (exp(alpha (m - 1 - r0)) - 1)`.
    Shifted,
}

impl ProbabilityConvention {
    fn offset(self) -> f64 {
        match self {
            Self::Standard => 0.0,
            Self::Shifted => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayerModelParams {
    pub r0: usize,
    pub r1: usize,
    pub r2: usize,
    pub alpha: f64,
    pub rows: usize,
    pub cols: usize,
    pub convention: ProbabilityConvention,
}

impl LayerModelParams {
    /// Validates `0 <= r0 < r1 < r2 <= min(rows, cols)` and `alpha > 0`.
    pub fn new(r0: usize, r1: usize, r2: usize, alpha: f64, rows: usize, cols: usize) -> Result<Self> {
        if !(r0 < r1 && r1 < r2 && r2 <= rows.min(cols)) {
            return domain(format!(
                "layer indices must satisfy r0 < r1 < r2 <= min(M, N); got ({r0}, {r1}, {r2}) on {rows}x{cols}"
            ));
        }
        if alpha.is_nan() || alpha <= 0.0 {
            return domain(format!("decay factor {alpha} must be positive"));
        }
        Ok(Self {
            r0,
            r1,
            r2,
            alpha,
            rows,
            cols,
            convention: ProbabilityConvention::Standard,
        })
    }

    pub fn with_convention(mut self, convention: ProbabilityConvention) -> Self {
        self.convention = convention;
        self
    }

    /// Nonzero probability of a cell in layer `m`.
    pub fn layer_probability(&self, m: usize) -> f64 {
        if m <= self.r0 || m > self.r2 {
            0.0
        } else if m <= self.r1 {
            1.0
        } else {
            let d = (m - self.r0) as f64 - self.convention.offset();
            (-self.alpha * d).exp()
        }
    }

    /// Odds `p_m / (1 - p_m)` in the decaying region, `1 / expm1(alpha d)`.
    fn odds(&self, m: usize) -> f64 {
        let d = (m - self.r0) as f64 - self.convention.offset();
        1.0 / (self.alpha * d).exp_m1()
    }

    /// Whether the extra bound hypothesis `r2 >= 2 r1 - 3 r0 - 1` holds.
    pub fn satisfies_bound_hypothesis(&self) -> bool {
        self.r2 as i64 >= 2 * self.r1 as i64 - 3 * self.r0 as i64 - 1
    }
}

/// Per-layer nonzero probabilities, index 0 holding layer 1.
pub fn model_profile(params: &LayerModelParams) -> Vec<f64> {
    (1..=layer_count(params.rows, params.cols))
        .map(|m| params.layer_probability(m))
        .collect()
}

/// Cells of layers `r0+1 ..= r2`, split into always-on and random ones.
///
/// Random cells are kept in row-major order, which fixes the order in which
/// random draws are consumed.
struct ActiveCells {
    fixed: Vec<Cell>,
    random: Vec<(Cell, f64)>,
}

impl ActiveCells {
    fn new(params: &LayerModelParams) -> Self {
        let mut fixed = Vec::new();
        let mut random = Vec::new();
        for i in 1..=params.rows {
            for j in 1..=params.cols {
                let c = Cell::new(i, j);
                let p = params.layer_probability(c.layer());
                if p >= 1.0 {
                    fixed.push(c);
                } else if p > 0.0 {
                    random.push((c, p));
                }
            }
        }
        Self { fixed, random }
    }
}

fn sample_cells<'a>(active: &'a ActiveCells, rng: &'a mut Stream) -> impl Iterator<Item = Cell> + 'a {
    let draws: Vec<bool> = active.random.iter().map(|&(_, p)| rng.bernoulli(p)).collect();
    active.fixed.iter().copied().chain(
        active
            .random
            .iter()
            .zip(draws)
            .filter(|(_, on)| *on)
            .map(|((c, _), _)| *c),
    )
}

/// Draws one support from the model using stream 0 of `seed`.
///
/// Only cells with `0 < p < 1` consume random draws, in row-major order.
pub fn sample_support(params: &LayerModelParams, seed: u64) -> SupportSet {
    sample_support_stream(params, &mut Stream::new(seed, 0))
}

pub fn sample_support_stream(params: &LayerModelParams, rng: &mut Stream) -> SupportSet {
    let active = ActiveCells::new(params);
    SupportSet::new(params.rows, params.cols, sample_cells(&active, rng))
        .expect("sampled cells lie on the grid")
}

/// Fraction of occupied cells in every layer, index 0 holding layer 1.
pub fn empirical_layer_profile(support: &SupportSet) -> Vec<f64> {
    let (rows, cols) = support.shape();
    let sizes = layer_sizes(rows, cols);
    let mut hits = vec![0usize; sizes.len()];
    for c in support.iter() {
        hits[c.layer() - 1] += 1;
    }
    hits.iter()
        .zip(&sizes)
        .map(|(&h, &s)| h as f64 / s as f64)
        .collect()
}

/// Auxiliary quantities of the acceptance bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundAuxiliaries {
    /// Cap on the largest column count after the zigzag permutation.
    pub u: usize,
    /// `ceil((r0 + r2 + 1) / 2)`.
    pub l: usize,
    /// Always-on cells per column, index 0 holding column 1.
    pub k: Vec<usize>,
    /// First decaying layer met by each column, `max(r1 + 1, j)`.
    pub m: Vec<usize>,
    r2: usize,
}

impl BoundAuxiliaries {
    /// Decaying layers crossed by column `j` (1-based).
    pub fn decay_layers(&self, j: usize) -> RangeInclusive<usize> {
        self.m[j - 1]..=self.r2
    }

    pub fn k_of(&self, j: usize) -> usize {
        self.k[j - 1]
    }

    pub fn m_of(&self, j: usize) -> usize {
        self.m[j - 1]
    }
}

pub fn bound_auxiliaries(params: &LayerModelParams) -> Result<BoundAuxiliaries> {
    let LayerModelParams { r0, r1, r2, cols, .. } = *params;
    if !(r0 < r1 && r1 < r2 && r2 <= params.rows.min(cols)) {
        return domain("layer indices violate r0 < r1 < r2 <= min(M, N)");
    }
    if !params.satisfies_bound_hypothesis() {
        return domain(format!("bound requires r2 >= 2 r1 - 3 r0 - 1; got ({r0}, {r1}, {r2})"));
    }
    let u = ((r0 + r2 + 1) * (r2 - r0)).div_ceil(2 * cols);
    let l = (r0 + r2 + 1).div_ceil(2);
    let k = (1..=r2)
        .map(|j| {
            if j <= r0 {
                r1 - r0
            } else if j <= r1 {
                r1 - j + 1
            } else {
                0
            }
        })
        .collect();
    let m = (1..=r2).map(|j| (r1 + 1).max(j)).collect();
    Ok(BoundAuxiliaries { u, l, k, m, r2 })
}

/// Elementary symmetric polynomials `e_0 ..= e_max_degree` of `weights`.
pub fn elementary_symmetric(weights: &[f64], max_degree: usize) -> Vec<f64> {
    let mut e = vec![0.0; max_degree + 1];
    e[0] = 1.0;
    for (n, &w) in weights.iter().enumerate() {
        for t in (1..=max_degree.min(n + 1)).rev() {
            e[t] += e[t - 1] * w;
        }
    }
    e
}

/// Per-column factors `1 + sum_t e_t(w_{m_j..r2})` of the bound, where `t`
/// runs to `min(l, r2 - r0, r2 - j + 1) - k_j`.
pub fn bound_column_factors(params: &LayerModelParams) -> Result<Vec<f64>> {
    let aux = bound_auxiliaries(params)?;
    let LayerModelParams { r0, r2, .. } = *params;
    (1..=r2)
        .map(|j| {
            let weights: Vec<f64> = aux.decay_layers(j).map(|a| params.odds(a)).collect();
            if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return domain(format!(
                    "decay factor {} gives a nonzero probability of at least one",
                    params.alpha
                ));
            }
            let top = aux.l.min(r2 - r0).min(r2 - j + 1);
            let kj = aux.k_of(j);
            if top <= kj {
                return Ok(1.0);
            }
            let e = elementary_symmetric(&weights, top - kj);
            Ok(e.iter().sum())
        })
        .collect()
}

/// Closed-form lower bound on `Pr{ zigzag lowers the largest column count }`.
///
/// The odds-ratio weights follow the convention selected in `params`, so the
/// bound always refers to the same distribution that [`sample_support`]
/// draws from. The result may be negative when the bound is vacuous.
pub fn acceptance_lower_bound(params: &LayerModelParams) -> Result<f64> {
    let factors = bound_column_factors(params)?;
    let mut log_prod = 0.0;
    for m in params.r1 + 1..=params.r2 {
        let p = params.layer_probability(m);
        if p >= 1.0 {
            return domain(format!("layer {m} has nonzero probability {p}"));
        }
        log_prod += m as f64 * (-p).ln_1p();
    }
    log_prod += factors.iter().map(|f| f.ln()).sum::<f64>();
    Ok(1.0 - log_prod.exp())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: u64,
}

/// Column counts before and after the zigzag permutation, for the cells of
/// the model's active region.
struct ColumnTracker {
    cols: usize,
    before_col: Vec<usize>,
    after_col: Vec<usize>,
    base_before: Vec<u32>,
    base_after: Vec<u32>,
    probs: Vec<f64>,
}

impl ColumnTracker {
    fn new(params: &LayerModelParams) -> Self {
        let active = ActiveCells::new(params);
        let zz = zigzag_permutation(params.rows, params.cols);
        let cols = params.cols;
        let mut base_before = vec![0u32; cols];
        let mut base_after = vec![0u32; cols];
        for &c in &active.fixed {
            base_before[c.col - 1] += 1;
            base_after[zz.dest_of(c).col - 1] += 1;
        }
        Self {
            cols,
            before_col: active.random.iter().map(|(c, _)| c.col - 1).collect(),
            after_col: active.random.iter().map(|(c, _)| zz.dest_of(*c).col - 1).collect(),
            base_before,
            base_after,
            probs: active.random.iter().map(|&(_, p)| p).collect(),
        }
    }

    fn trial(&self, rng: &mut Stream, before: &mut [u32], after: &mut [u32]) -> bool {
        before.copy_from_slice(&self.base_before);
        after.copy_from_slice(&self.base_after);
        for (k, &p) in self.probs.iter().enumerate() {
            if rng.bernoulli(p) {
                before[self.before_col[k]] += 1;
                after[self.after_col[k]] += 1;
            }
        }
        max_of(after) < max_of(before)
    }
}

fn max_of(v: &[u32]) -> u32 {
    v.iter().copied().max().unwrap_or(0)
}

/// Simulated probability that the zigzag permutation strictly lowers the
/// largest column count. Trial `t` draws from stream `t` of `seed`, so the
/// result does not depend on how trials are scheduled.
pub fn monte_carlo_acceptance(params: &LayerModelParams, trials: u64, seed: u64) -> Result<MonteCarloEstimate> {
    if trials == 0 {
        return domain("at least one trial is required");
    }
    let tracker = ColumnTracker::new(params);
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map_init(
            || (vec![0u32; tracker.cols], vec![0u32; tracker.cols]),
            |(before, after), t| {
                let mut rng = Stream::new(seed, t);
                u64::from(tracker.trial(&mut rng, before, after))
            },
        )
        .sum();
    let p = hits as f64 / trials as f64;
    Ok(MonteCarloEstimate {
        estimate: p,
        std_error: (p * (1.0 - p) / trials as f64).sqrt(),
        trials,
    })
}

/// Largest number of random cells [`exact_acceptance_small`] enumerates.
pub const MAX_ENUMERATED_CELLS: usize = 20;

/// Product weights of all bit patterns of `probs`, indexed by pattern.
fn pattern_weights(probs: &[f64]) -> Vec<f64> {
    let mut w = vec![1.0];
    for &p in probs {
        let mut next = Vec::with_capacity(w.len() * 2);
        next.extend(w.iter().map(|v| v * (1.0 - p)));
        next.extend(w.iter().map(|v| v * p));
        w = next;
    }
    w
}

/// Visits every subset of `n` bits in Gray-code order, reporting the flipped
/// bit (or `None` for the empty start) and the current pattern.
fn gray_walk(n: usize, mut visit: impl FnMut(Option<(usize, bool)>, u64)) {
    let mut pattern = 0u64;
    visit(None, pattern);
    for i in 1..(1u64 << n) {
        let bit = i.trailing_zeros() as usize;
        pattern ^= 1 << bit;
        visit(Some((bit, pattern >> bit & 1 == 1)), pattern);
    }
}

/// Exact `Pr{ zigzag lowers the largest column count }` by enumerating every
/// configuration of the random cells, weighted by its probability.
pub fn exact_acceptance_small(params: &LayerModelParams) -> Result<f64> {
    let tracker = ColumnTracker::new(params);
    let n = tracker.probs.len();
    if n > MAX_ENUMERATED_CELLS {
        return domain(format!(
            "{n} random cells exceed the enumeration limit of {MAX_ENUMERATED_CELLS}"
        ));
    }
    let lo_bits = n / 2;
    let lo = pattern_weights(&tracker.probs[..lo_bits]);
    let hi = pattern_weights(&tracker.probs[lo_bits..]);
    let lo_mask = (1u64 << lo_bits) - 1;
    let mut before = tracker.base_before.clone();
    let mut after = tracker.base_after.clone();
    let mut total = 0.0;
    gray_walk(n, |flip, pattern| {
        if let Some((bit, on)) = flip {
            let (b, a) = (tracker.before_col[bit], tracker.after_col[bit]);
            if on {
                before[b] += 1;
                after[a] += 1;
            } else {
                before[b] -= 1;
                after[a] -= 1;
            }
        }
        if max_of(&after) < max_of(&before) {
            total += lo[(pattern & lo_mask) as usize] * hi[(pattern >> lo_bits) as usize];
        }
    });
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RowIidStatistics {
    /// `E{ max_j s_j - min_j s_j }`.
    pub expected_gap: f64,
    /// `Pr{ max_j s_j - min_j s_j <= 1 }`.
    pub prob_gap_at_most_one: f64,
}

/// Largest grid [`row_iid_statistics`] enumerates.
pub const MAX_ROW_IID_CELLS: usize = 24;

/// Column-count spread when every cell of row `i` is nonzero independently
/// with probability `row_probs[i]`, by exhaustive enumeration of the grid.
pub fn row_iid_statistics(row_probs: &[f64], cols: usize) -> Result<RowIidStatistics> {
    if let Some(p) = row_probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return domain(format!("row probability {p} outside [0, 1]"));
    }
    let rows = row_probs.len();
    let n = rows * cols;
    if rows == 0 || cols == 0 {
        return domain("empty grid");
    }
    if n > MAX_ROW_IID_CELLS {
        return domain(format!("{rows}x{cols} grid exceeds {MAX_ROW_IID_CELLS} cells"));
    }
    // bit k is cell (k / cols, k % cols)
    let probs: Vec<f64> = (0..n).map(|k| row_probs[k / cols]).collect();
    let lo_bits = n / 2;
    let lo = pattern_weights(&probs[..lo_bits]);
    let hi = pattern_weights(&probs[lo_bits..]);
    let lo_mask = (1u64 << lo_bits) - 1;
    let mut counts = vec![0u32; cols];
    let (mut gap_sum, mut tight) = (0.0, 0.0);
    gray_walk(n, |flip, pattern| {
        if let Some((bit, on)) = flip {
            if on {
                counts[bit % cols] += 1;
            } else {
                counts[bit % cols] -= 1;
            }
        }
        let w = lo[(pattern & lo_mask) as usize] * hi[(pattern >> lo_bits) as usize];
        let max = counts.iter().max().copied().unwrap_or(0);
        let min = counts.iter().min().copied().unwrap_or(0);
        let gap = max - min;
        gap_sum += w * f64::from(gap);
        if gap <= 1 {
            tight += w;
        }
    });
    Ok(RowIidStatistics {
        expected_gap: gap_sum,
        prob_gap_at_most_one: tight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::sparsity_vector;

    fn params(r0: usize, r1: usize, r2: usize, alpha: f64, n: usize) -> LayerModelParams {
        LayerModelParams::new(r0, r1, r2, alpha, n, n).unwrap()
    }

    #[test]
    fn validation() {
        assert!(LayerModelParams::new(1, 1, 3, 0.5, 4, 4).is_err());
        assert!(LayerModelParams::new(0, 2, 5, 0.5, 4, 8).is_err());
        assert!(LayerModelParams::new(0, 1, 3, 0.0, 4, 4).is_err());
        assert!(LayerModelParams::new(0, 1, 3, f64::NAN, 4, 4).is_err());
        assert!(LayerModelParams::new(0, 1, 3, f64::INFINITY, 4, 4).is_ok());
    }

    #[test]
    fn layer_probability_cases() {
        let p = params(2, 5, 12, 0.3, 16);
        assert_eq!(p.layer_probability(2), 0.0);
        assert_eq!(p.layer_probability(3), 1.0);
        assert_eq!(p.layer_probability(5), 1.0);
        assert_eq!(p.layer_probability(13), 0.0);

        let q = params(0, 4, 20, 0.15, 24);
        assert!((q.layer_probability(10) - 0.22313016014842982).abs() < 1e-15);
        let shifted = q.with_convention(ProbabilityConvention::Shifted);
        assert!((shifted.layer_probability(10) - (-0.15f64 * 9.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_samples() {
        let p = params(2, 3, 6, f64::INFINITY, 8);
        let sup = sample_support(&p, 1);
        assert!(sup.iter().all(|c| c.layer() == 3));
        assert_eq!(sup.len(), 3);

        let p = params(0, 5, 7, f64::INFINITY, 8);
        assert_eq!(sample_support(&p, 9).len(), 15);
    }

    #[test]
    fn sampling_is_seeded() {
        let p = params(0, 2, 10, 0.2, 12);
        assert_eq!(sample_support(&p, 4), sample_support(&p, 4));
    }

    #[test]
    fn layer_frequencies_converge() {
        let p = params(0, 1, 6, 0.3, 6);
        let trials = 100_000u64;
        let mut hits = vec![0u64; 11];
        for t in 0..trials {
            let sup = sample_support_stream(&p, &mut Stream::new(77, t));
            // cell (1, m) sits in layer m
            for m in 1..=6 {
                if sup.contains(Cell::new(1, m)) {
                    hits[m - 1] += 1;
                }
            }
        }
        for m in 1..=6 {
            let pm = p.layer_probability(m);
            let freq = hits[m - 1] as f64 / trials as f64;
            let sigma = (pm * (1.0 - pm) / trials as f64).sqrt();
            assert!((freq - pm).abs() <= 3.0 * sigma + 1e-12, "layer {m}: {freq} vs {pm}");
        }
    }

    #[test]
    fn profiles() {
        assert!(empirical_layer_profile(&SupportSet::full(5, 3)).iter().all(|&f| f == 1.0));
        assert!(empirical_layer_profile(&SupportSet::empty(5, 3)).iter().all(|&f| f == 0.0));
        let sup = SupportSet::new(3, 3, [Cell::new(1, 2)]).unwrap();
        assert_eq!(empirical_layer_profile(&sup), vec![0.0, 0.5, 0.0, 0.0, 0.0]);
        let m = model_profile(&params(0, 3, 32, 0.15, 64));
        assert_eq!(m[0], 1.0);
        assert_eq!(m[32], 0.0);
    }

    #[test]
    fn auxiliaries_examples() {
        let aux = bound_auxiliaries(&params(3, 5, 8, 0.5, 8)).unwrap();
        assert_eq!(aux.k_of(2), 2);
        assert_eq!(aux.k_of(4), 2);
        assert_eq!(aux.k_of(6), 0);
        assert_eq!(aux.m_of(3), 6);
        assert_eq!(aux.m_of(7), 7);

        let aux = bound_auxiliaries(&params(0, 1, 4, 0.5, 4)).unwrap();
        assert_eq!(aux.u, 3);
        assert_eq!(aux.l, 3);
        assert!(aux.l >= aux.u && aux.l >= 1);

        // r2 >= 2 r1 - 3 r0 - 1 fails for (0, 5, 8)
        assert!(bound_auxiliaries(&params(0, 5, 8, 0.5, 8)).is_err());
    }

    #[test]
    fn elementary_symmetric_small() {
        let e = elementary_symmetric(&[1.0, 2.0, 3.0], 3);
        assert_eq!(e, vec![1.0, 6.0, 11.0, 6.0]);
        let e = elementary_symmetric(&[1.0, 2.0, 3.0], 1);
        assert_eq!(e, vec![1.0, 6.0]);
    }

    #[test]
    fn bound_is_at_most_one() {
        for alpha in [0.05, 0.2, 0.5, 1.0, 3.0] {
            for r2 in 2..=16 {
                let b = acceptance_lower_bound(&params(0, 1, r2, alpha, 16)).unwrap();
                assert!(b <= 1.0);
            }
        }
    }

    #[test]
    fn sampled_supports_respect_caps() {
        for (r0, r1, r2, alpha) in [(0, 1, 10, 0.1), (0, 2, 12, 0.3), (3, 5, 12, 0.2)] {
            let p = params(r0, r1, r2, alpha, 12);
            let aux = bound_auxiliaries(&p).unwrap();
            let zz = zigzag_permutation(12, 12);
            for seed in 0..200 {
                let sup = sample_support(&p, seed);
                let before = sparsity_vector(&sup).chebyshev();
                let after = sparsity_vector(&zz.apply_support(&sup).unwrap()).chebyshev();
                assert!(before <= r2 - r0);
                assert!(after <= aux.u, "u = {} < {after}", aux.u);
            }
        }
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let p = params(0, 1, 6, 0.4, 8);
        let a = monte_carlo_acceptance(&p, 5_000, 3).unwrap();
        let b = monte_carlo_acceptance(&p, 5_000, 3).unwrap();
        assert_eq!(a, b);
        assert!(monte_carlo_acceptance(&p, 0, 3).is_err());
    }

    #[test]
    fn empty_model_never_accepts() {
        // bypasses validation to switch every layer off
        let p = LayerModelParams {
            r0: 0,
            r1: 0,
            r2: 3,
            alpha: f64::INFINITY,
            rows: 3,
            cols: 3,
            convention: ProbabilityConvention::Standard,
        };
        assert_eq!(monte_carlo_acceptance(&p, 100, 1).unwrap().estimate, 0.0);
        assert_eq!(exact_acceptance_small(&p).unwrap(), 0.0);

        // a single always-on cell stays in column 1: both norms equal one
        let q = LayerModelParams::new(0, 1, 3, f64::INFINITY, 3, 3).unwrap();
        assert_eq!(exact_acceptance_small(&q).unwrap(), 0.0);
    }

    #[test]
    fn exact_matches_monte_carlo() {
        let p = params(0, 1, 5, 0.3, 6);
        let exact = exact_acceptance_small(&p).unwrap();
        let mc = monte_carlo_acceptance(&p, 100_000, 21).unwrap();
        assert!((exact - mc.estimate).abs() <= 4.0 * mc.std_error, "{exact} vs {mc:?}");
    }

    #[test]
    fn exact_rejects_large_instances() {
        let p = params(0, 1, 8, 0.3, 8);
        assert!(exact_acceptance_small(&p).is_err());
    }

    #[test]
    fn row_iid_worked_example() {
        let st = row_iid_statistics(&[0.9, 0.3, 0.2, 0.1], 4).unwrap();
        assert!((st.expected_gap - 1.3881).abs() <= 5e-5, "{st:?}");
        assert!((st.prob_gap_at_most_one - 0.6003).abs() <= 5e-5, "{st:?}");
    }

    #[test]
    fn row_iid_degenerate() {
        for p in [0.0, 1.0] {
            let st = row_iid_statistics(&[p; 3], 5).unwrap();
            assert_eq!(st.expected_gap, 0.0);
            assert_eq!(st.prob_gap_at_most_one, 1.0);
        }
        assert!(row_iid_statistics(&[0.5; 5], 5).is_err());
        assert!(row_iid_statistics(&[1.5], 2).is_err());
    }
}
