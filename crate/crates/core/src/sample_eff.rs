//! Sample-efficiency estimation: early stopping, a Gaussian-process model of
//! success rate against log2 demonstration count, the posterior over the
//! minimum count reaching 99%, and credible and t-test intervals.

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

pub const THRESHOLD: f64 = 99.0;
pub const FILTER_BELOW: f64 = 95.0;
pub const GRID_POINTS: usize = 256;
pub const MC_DRAWS: usize = 100_000;
pub const JITTER: f64 = 1e-8;
const SHARD: usize = 4096;

pub const LENGTH_BOUNDS: (f64, f64) = (0.1, 10.0);
pub const SIGNAL_BOUNDS: (f64, f64) = (0.1, 100.0);
pub const NOISE_BOUNDS: (f64, f64) = (1e-3, 10.0);
const START_GRID: usize = 6;
const REFINE_STARTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("curve {0} never exceeds the threshold")]
    NeverSolved(usize),
    #[error("no curves given")]
    NoCurves,
    #[error("early-stopping window is empty")]
    EmptyWindow,
    #[error("{0} points left after filtering, need at least 3")]
    InsufficientData(usize),
    #[error("posterior has no crossing mass in range")]
    NoCrossing,
    #[error("need at least 2 values, got {0}")]
    TooFewValues(usize),
    #[error("covariance is not positive definite")]
    NotPositiveDefinite,
    #[error("invalid argument: {0}")]
    Invalid(&'static str),
}

fn c<F: Float>(x: f64) -> F {
    F::from(x).expect("representable constant")
}

/// Mean over curves of the first 1-based index whose value exceeds 99.
pub fn normal_time<F: Float, C: AsRef<[F]>>(curves: &[C]) -> Result<F, EstimatorError> {
    if curves.is_empty() {
        return Err(EstimatorError::NoCurves);
    }
    let mut sum = F::zero();
    for (i, curve) in curves.iter().enumerate() {
        let t = curve
            .as_ref()
            .iter()
            .position(|&v| v > c(THRESHOLD))
            .ok_or(EstimatorError::NeverSolved(i))?;
        sum = sum + c(t as f64 + 1.0);
    }
    Ok(sum / c(curves.len() as f64))
}

/// Maximum of `curve` over 1-based indices `t < 2T`.
pub fn early_stopped_score<F: Float>(curve: &[F], normal_time: F) -> Result<F, EstimatorError> {
    let limit = (normal_time + normal_time).ceil().to_usize().unwrap_or(0).saturating_sub(1);
    curve[..limit.min(curve.len())]
        .iter()
        .copied()
        .reduce(F::max)
        .ok_or(EstimatorError::EmptyWindow)
}

/// Lower-triangular Cholesky factor, row-major.
fn cholesky<F: Float>(a: &[Vec<F>]) -> Option<Vec<Vec<F>>> {
    let n = a.len();
    let mut l = vec![vec![F::zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s = (0..j).fold(a[i][j], |s, k| s - l[i][k] * l[j][k]);
            if i == j {
                if s <= F::zero() || !s.is_finite() {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

fn forward_solve<F: Float>(l: &[Vec<F>], b: &[F]) -> Vec<F> {
    let mut x = b.to_vec();
    for i in 0..l.len() {
        for k in 0..i {
            x[i] = x[i] - l[i][k] * x[k];
        }
        x[i] = x[i] / l[i][i];
    }
    x
}

fn backward_solve<F: Float>(l: &[Vec<F>], b: &[F]) -> Vec<F> {
    let n = l.len();
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        for k in i + 1..n {
            x[i] = x[i] - l[k][i] * x[k];
        }
        x[i] = x[i] / l[i][i];
    }
    x
}

/// Low-rank factor `a ≈ L Lᵀ` by diagonal pivoting; stops once the
/// largest remaining diagonal falls to `tol`. Rows follow the input order.
pub fn pivoted_cholesky<F: Float>(a: &[Vec<F>], tol: F) -> Vec<Vec<F>> {
    let n = a.len();
    let mut diag: Vec<F> = (0..n).map(|i| a[i][i]).collect();
    let mut cols: Vec<Vec<F>> = Vec::new();
    let mut used = vec![false; n];
    while cols.len() < n {
        let (p, &dp) = diag
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .max_by(|x, y| x.1.partial_cmp(y.1).unwrap_or(std::cmp::Ordering::Equal))
            .expect("unused index remains");
        if dp <= tol {
            break;
        }
        used[p] = true;
        let root = dp.sqrt();
        let mut col = vec![F::zero(); n];
        for i in 0..n {
            if used[i] && i != p {
                continue;
            }
            let mut s = a[i][p];
            for prev in &cols {
                s = s - prev[i] * prev[p];
            }
            col[i] = s / root;
        }
        for i in 0..n {
            if !used[i] {
                diag[i] = diag[i] - col[i] * col[i];
            }
        }
        diag[p] = F::zero();
        cols.push(col);
    }
    (0..n).map(|i| cols.iter().map(|col| col[i]).collect()).collect()
}

fn rbf<F: Float>(a: F, b: F, l: F, sf: F) -> F {
    let d = (a - b) / l;
    sf * sf * (-(d * d) / c(2.0)).exp()
}

/// Hyperparameters of the success-rate model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyper<F> {
    pub length_scale: F,
    pub signal_scale: F,
    pub noise_scale: F,
}

/// Log marginal likelihood of targets `y` at inputs `x`.
pub fn log_marginal_likelihood<F: Float>(x: &[F], y: &[F], h: Hyper<F>) -> Option<F> {
    let n = x.len();
    let k = kernel_matrix(x, h);
    let l = cholesky(&k)?;
    let alpha = backward_solve(&l, &forward_solve(&l, y));
    let fit = y.iter().zip(&alpha).fold(F::zero(), |s, (&a, &b)| s + a * b);
    let logdet = (0..n).fold(F::zero(), |s, i| s + l[i][i].ln());
    let two_pi: F = c(2.0 * std::f64::consts::PI);
    Some(-fit / c(2.0) - logdet - c::<F>(n as f64 / 2.0) * two_pi.ln())
}

fn kernel_matrix<F: Float>(x: &[F], h: Hyper<F>) -> Vec<Vec<F>> {
    let n = x.len();
    let mut k = vec![vec![F::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            k[i][j] = rbf(x[i], x[j], h.length_scale, h.signal_scale);
        }
        k[i][i] = k[i][i] + h.noise_scale * h.noise_scale;
    }
    k
}

/// A fitted model: `s(k) - 99` is a zero-mean GP in `log2 k` with an RBF
/// kernel plus observation noise.
#[derive(Debug, Clone, PartialEq)]
pub struct GpModel<F> {
    pub hyper: Hyper<F>,
    /// Training inputs, `log2 k`.
    pub x: Vec<F>,
    /// Training targets, `s - 99`.
    pub y: Vec<F>,
    pub log_likelihood: F,
    chol: Vec<Vec<F>>,
    alpha: Vec<F>,
}

impl<F: Float> GpModel<F> {
    /// Conditions on `(log2 k, s - 99)` pairs at fixed hyperparameters.
    pub fn new(x: Vec<F>, y: Vec<F>, hyper: Hyper<F>) -> Result<Self, EstimatorError> {
        if x.len() != y.len() {
            return Err(EstimatorError::Invalid("inputs and targets differ in length"));
        }
        let chol = cholesky(&kernel_matrix(&x, hyper)).ok_or(EstimatorError::NotPositiveDefinite)?;
        let alpha = backward_solve(&chol, &forward_solve(&chol, &y));
        let log_likelihood = log_marginal_likelihood(&x, &y, hyper).ok_or(EstimatorError::NotPositiveDefinite)?;
        Ok(Self { hyper, x, y, log_likelihood, chol, alpha })
    }

    /// Posterior mean and covariance of the noise-free `s̃ - 99` at `xs`.
    pub fn posterior(&self, xs: &[F]) -> (Vec<F>, Vec<Vec<F>>) {
        let h = self.hyper;
        let kstar: Vec<Vec<F>> =
            xs.iter().map(|&a| self.x.iter().map(|&b| rbf(a, b, h.length_scale, h.signal_scale)).collect()).collect();
        let mean = kstar.iter().map(|row| row.iter().zip(&self.alpha).fold(F::zero(), |s, (&a, &b)| s + a * b)).collect();
        let v: Vec<Vec<F>> = kstar.iter().map(|row| forward_solve(&self.chol, row)).collect();
        let m = xs.len();
        let mut cov = vec![vec![F::zero(); m]; m];
        for i in 0..m {
            for j in 0..=i {
                let dot = v[i].iter().zip(&v[j]).fold(F::zero(), |s, (&a, &b)| s + a * b);
                let cij = rbf(xs[i], xs[j], h.length_scale, h.signal_scale) - dot;
                cov[i][j] = cij;
                cov[j][i] = cij;
            }
        }
        (mean, cov)
    }

    /// Posterior mean of `s̃` (in percent) at `k`.
    pub fn mean_success(&self, k: F) -> F {
        self.posterior(&[k.log2()]).0[0] + c(THRESHOLD)
    }
}

/// Keeps records with `s >= 95` as `(log2 k, s - 99)`.
pub fn filter_records<F: Float>(records: &[(F, F)]) -> (Vec<F>, Vec<F>) {
    records.iter().filter(|(_, s)| *s >= c(FILTER_BELOW)).map(|&(k, s)| (k.log2(), s - c(THRESHOLD))).unzip()
}

/// Fits hyperparameters by maximum likelihood: a log-spaced multi-start
/// grid inside the bounds, then coordinate descent in log space.
pub fn fit_gp<F: Float>(records: &[(F, F)]) -> Result<GpModel<F>, EstimatorError> {
    let (x, y) = filter_records(records);
    if x.len() < 3 {
        return Err(EstimatorError::InsufficientData(x.len()));
    }
    let bounds = [LENGTH_BOUNDS, SIGNAL_BOUNDS, NOISE_BOUNDS].map(|(a, b)| (a.ln(), b.ln()));
    let to_hyper = |p: [f64; 3]| Hyper {
        length_scale: c::<F>(p[0].exp()),
        signal_scale: c::<F>(p[1].exp()),
        noise_scale: c::<F>(p[2].exp()),
    };
    let score = |p: [f64; 3]| {
        log_marginal_likelihood(&x, &y, to_hyper(p)).and_then(|v| v.to_f64()).filter(|v| v.is_finite()).unwrap_or(f64::NEG_INFINITY)
    };
    let axis = |d: usize, i: usize| {
        let (lo, hi) = bounds[d];
        lo + (hi - lo) * i as f64 / (START_GRID - 1) as f64
    };
    let mut starts = Vec::new();
    for i in 0..START_GRID {
        for j in 0..START_GRID {
            for k in 0..START_GRID {
                let p = [axis(0, i), axis(1, j), axis(2, k)];
                starts.push((score(p), p));
            }
        }
    }
    starts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = starts[0];
    for &(mut val, mut p) in starts.iter().take(REFINE_STARTS) {
        let mut step = [0, 1, 2].map(|d| (bounds[d].1 - bounds[d].0) / (START_GRID - 1) as f64 / 2.0);
        while step.iter().any(|&s| s > 1e-6) {
            for d in 0..3 {
                let mut improved = false;
                for dir in [1.0, -1.0] {
                    let mut q = p;
                    q[d] = (q[d] + dir * step[d]).clamp(bounds[d].0, bounds[d].1);
                    let v = score(q);
                    if v > val {
                        (val, p) = (v, q);
                        improved = true;
                        break;
                    }
                }
                if !improved {
                    step[d] /= 2.0;
                }
            }
        }
        if val > best.0 {
            best = (val, p);
        }
    }
    GpModel::new(x, y, to_hyper(best.1))
}

/// Discrete posterior over `k_min` on a log-spaced grid. `weights[i]` is the
/// fraction of sample paths whose first up-crossing of 99 is at `grid[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KminPosterior<F> {
    pub grid: Vec<F>,
    pub weights: Vec<F>,
    /// Fraction of paths that never cross inside the range.
    pub residual: F,
    pub draws: usize,
}

impl<F: Float> KminPosterior<F> {
    /// Monte Carlo standard error of `weights[i]`.
    pub fn standard_error(&self, i: usize) -> F {
        let p = self.weights[i];
        (p * (F::one() - p) / c(self.draws as f64)).sqrt()
    }
}

pub fn log_grid<F: Float>(lo: F, hi: F, m: usize) -> Vec<F> {
    let (a, b) = (lo.log2(), hi.log2());
    (0..m)
        .map(|i| {
            if m == 1 {
                lo
            } else {
                let t: F = c(i as f64 / (m - 1) as f64);
                (a + (b - a) * t).exp2()
            }
        })
        .collect()
}

/// Counts first up-crossings of zero over joint Gaussian draws with the
/// given mean and covariance. Returns per-index counts and the residual.
pub fn first_crossing_counts<F: Float + Send + Sync>(
    mean: &[F],
    cov: &[Vec<F>],
    draws: usize,
    seed: u64,
) -> (Vec<u64>, u64) {
    let m = mean.len();
    let mut a = cov.to_vec();
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = row[i] + c(JITTER);
    }
    let tol = c::<F>(JITTER) * c(1e-4);
    let l = pivoted_cholesky(&a, tol);
    let rank = l.first().map_or(0, Vec::len);
    let shards = draws.div_ceil(SHARD);
    let partial: Vec<(Vec<u64>, u64)> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let n = SHARD.min(draws - s * SHARD);
            let mut counts = vec![0u64; m];
            let mut residual = 0u64;
            let mut z = vec![F::zero(); rank];
            for _ in 0..n {
                for zi in z.iter_mut() {
                    *zi = c(rng.sample::<f64, _>(StandardNormal));
                }
                let hit = (0..m).find(|&i| {
                    let f = l[i].iter().zip(&z).fold(mean[i], |acc, (&lij, &zj)| acc + lij * zj);
                    f > F::zero()
                });
                match hit {
                    Some(i) => counts[i] += 1,
                    None => residual += 1,
                }
            }
            (counts, residual)
        })
        .collect();
    let mut counts = vec![0u64; m];
    let mut residual = 0;
    for (cs, r) in partial {
        for (a, b) in counts.iter_mut().zip(cs) {
            *a += b;
        }
        residual += r;
    }
    (counts, residual)
}

/// Posterior over `k_min` in `[k_lo, k_hi]` on `grid_size` log-spaced points.
pub fn kmin_posterior<F: Float + Send + Sync>(
    model: &GpModel<F>,
    k_lo: F,
    k_hi: F,
    grid_size: usize,
    draws: usize,
    seed: u64,
) -> KminPosterior<F> {
    let grid = log_grid(k_lo, k_hi, grid_size);
    let xs: Vec<F> = grid.iter().map(|k| k.log2()).collect();
    let (mean, cov) = model.posterior(&xs);
    let (counts, residual) = first_crossing_counts(&mean, &cov, draws, seed);
    let n: F = c(draws as f64);
    KminPosterior {
        grid,
        weights: counts.iter().map(|&k| c::<F>(k as f64) / n).collect(),
        residual: c::<F>(residual as f64) / n,
        draws,
    }
}

/// A window of consecutive buckets `lo..=hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CredibleInterval<F> {
    pub lo: usize,
    pub hi: usize,
    pub k_lo: F,
    pub k_hi: F,
    /// Renormalized mass inside the window.
    pub mass: F,
}

impl<F: Float> CredibleInterval<F> {
    /// Bucket `i` stands for crossings in `(grid[i-1], grid[i]]`, so the
    /// window covers `k` when `grid[lo-1] < k <= grid[hi]`.
    pub fn covers(&self, grid: &[F], k: F) -> bool {
        let above = self.lo == 0 || k > grid[self.lo - 1];
        above && k <= grid[self.hi]
    }
}

/// Shortest bucket window holding at least `level` of the crossing mass.
/// Ties go to the larger mass, then to the most balanced tails, then left.
pub fn credible_interval<F: Float>(post: &KminPosterior<F>, level: F) -> Result<CredibleInterval<F>, EstimatorError> {
    let total = post.weights.iter().fold(F::zero(), |s, &w| s + w);
    if total <= F::zero() {
        return Err(EstimatorError::NoCrossing);
    }
    let w: Vec<F> = post.weights.iter().map(|&x| x / total).collect();
    let mut prefix = vec![F::zero()];
    for &x in &w {
        prefix.push(*prefix.last().unwrap() + x);
    }
    let need = level - c(1e-12);
    let m = w.len();
    let mut best: Option<(usize, F, F, usize, usize)> = None;
    for lo in 0..m {
        for hi in lo..m {
            let mass = prefix[hi + 1] - prefix[lo];
            if mass < need {
                continue;
            }
            let imbalance = (prefix[lo] - (F::one() - prefix[hi + 1])).abs();
            let cand = (hi - lo, mass, imbalance, lo, hi);
            let better = match best {
                None => true,
                Some((len, bm, bi, _, _)) => {
                    cand.0 < len || (cand.0 == len && (mass > bm + c(1e-12) || ((mass - bm).abs() <= c(1e-12) && imbalance < bi - c(1e-12))))
                }
            };
            if better {
                best = Some(cand);
            }
            break;
        }
    }
    let (_, mass, _, lo, hi) = best.ok_or(EstimatorError::NoCrossing)?;
    Ok(CredibleInterval { lo, hi, k_lo: post.grid[lo], k_hi: post.grid[hi], mass })
}

/// Full pipeline result for one level.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate<F> {
    pub model: GpModel<F>,
    pub posterior: KminPosterior<F>,
    pub interval: CredibleInterval<F>,
}

/// Fits the model and derives the `k_min` interval over the range spanned
/// by the records that survive filtering.
pub fn estimate_kmin<F: Float + Send + Sync>(
    records: &[(F, F)],
    level: F,
    grid_size: usize,
    draws: usize,
    seed: u64,
) -> Result<Estimate<F>, EstimatorError> {
    let model = fit_gp(records)?;
    let lo = model.x.iter().copied().fold(F::infinity(), F::min).exp2();
    let hi = model.x.iter().copied().fold(F::neg_infinity(), F::max).exp2();
    let posterior = kmin_posterior(&model, lo, hi, grid_size, draws, seed);
    let interval = credible_interval(&posterior, level)?;
    Ok(Estimate { model, posterior, interval })
}

/// Two-sided t-test interval `mean ± t(1-(1-level)/2, n-1) * sd / sqrt(n)`.
pub fn rl_confidence_interval<F: Float>(values: &[F], level: f64) -> Result<(F, F), EstimatorError> {
    let n = values.len();
    if n < 2 {
        return Err(EstimatorError::TooFewValues(n));
    }
    let nf: F = c(n as f64);
    let mean = values.iter().fold(F::zero(), |s, &v| s + v) / nf;
    let var = values.iter().fold(F::zero(), |s, &v| s + (v - mean) * (v - mean)) / (nf - F::one());
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .map_err(|_| EstimatorError::Invalid("degrees of freedom"))?
        .inverse_cdf(1.0 - (1.0 - level) / 2.0);
    let half = c::<F>(t) * (var / nf).sqrt();
    Ok((mean - half, mean + half))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_time_examples() {
        let curve = |t: usize| (1..=40).map(|i| if i >= t { 100.0 } else { 50.0 }).collect::<Vec<f64>>();
        assert_eq!(normal_time(&[curve(10), curve(20), curve(30)]).unwrap(), 20.0);
        assert_eq!(normal_time(&[vec![100.0f32; 5], vec![100.0; 5], vec![100.0; 5]]).unwrap(), 1.0);
        assert_eq!(normal_time(&[vec![99.0f64; 5]]), Err(EstimatorError::NeverSolved(0)));
    }

    #[test]
    fn early_stopping_window() {
        let mono: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(early_stopped_score(&mono, 20.0).unwrap(), 39.0);
        let peak = [1.0, 5.0, 3.0, 2.0, 9.0];
        assert_eq!(early_stopped_score(&peak, 2.0).unwrap(), 5.0);
        assert_eq!(early_stopped_score(&peak, 0.5), Err(EstimatorError::EmptyWindow));
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = vec![vec![4.0, 2.0, 0.6], vec![2.0, 5.0, 1.0], vec![0.6, 1.0, 3.0]];
        for l in [cholesky(&a).unwrap(), pivoted_cholesky(&a, 0.0)] {
            for i in 0..3 {
                for j in 0..3 {
                    let s: f64 = l[i].iter().zip(&l[j]).map(|(x, y)| x * y).sum();
                    assert!((s - a[i][j]).abs() < 1e-12);
                }
            }
        }
        let singular = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(cholesky(&singular).is_none());
        assert_eq!(pivoted_cholesky(&singular, 1e-12)[0].len(), 1);
    }

    #[test]
    fn lml_matches_closed_form_single_point() {
        let h = Hyper { length_scale: 1.0, signal_scale: 2.0, noise_scale: 0.5 };
        let var = 4.0 + 0.25;
        let y = 1.5f64;
        let expect = -0.5 * y * y / var - 0.5 * var.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((log_marginal_likelihood(&[0.0], &[y], h).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn flat_targets_pin_signal_to_bound() {
        let recs: Vec<(f64, f64)> = (8..14).map(|e| ((1u64 << e) as f64, 99.0)).collect();
        let m = fit_gp(&recs).unwrap();
        assert!((m.hyper.signal_scale - SIGNAL_BOUNDS.0).abs() < 1e-3);
        assert!((m.mean_success(3000.0) - 99.0).abs() < 1e-9);
    }

    #[test]
    fn conflicting_duplicates_keep_noise() {
        let recs = [(1024.0f64, 96.0), (1024.0, 100.0), (2048.0, 97.0), (2048.0, 100.0)];
        let m = fit_gp(&recs).unwrap();
        assert!(m.hyper.noise_scale > 0.5);
        assert_eq!(fit_gp(&[(1.0f64, 99.0), (2.0, 99.0), (4.0, 50.0)]), Err(EstimatorError::InsufficientData(2)));
    }

    #[test]
    fn degenerate_posteriors() {
        let (m, cov) = (vec![50.0f64; 4], vec![vec![1e-6; 4]; 4]);
        let (counts, residual) = first_crossing_counts(&m, &cov, 1000, 1);
        assert_eq!((counts[0], residual), (1000, 0));
        let (counts, residual) = first_crossing_counts(&[-50.0f64; 4], &cov, 1000, 1);
        assert_eq!((counts.iter().sum::<u64>(), residual), (0, 1000));
    }

    fn post(weights: Vec<f64>) -> KminPosterior<f64> {
        let grid = (0..weights.len()).map(|i| (i + 1) as f64).collect();
        KminPosterior { grid, weights, residual: 0.0, draws: 1 }
    }

    #[test]
    fn interval_cases() {
        let mut w = vec![0.0; 10];
        w[4] = 0.7;
        let ci = credible_interval(&post(w), 0.99).unwrap();
        assert_eq!((ci.lo, ci.hi), (4, 4));
        assert!(ci.covers(&post(vec![0.0; 10]).grid, 4.5) && !ci.covers(&post(vec![0.0; 10]).grid, 4.0));
        let ci = credible_interval(&post(vec![1.0 / 200.0; 200]), 0.99).unwrap();
        assert_eq!((ci.lo, ci.hi), (1, 198));
        assert_eq!(credible_interval(&post(vec![0.0; 3]), 0.99), Err(EstimatorError::NoCrossing));
    }

    #[test]
    fn t_interval_examples() {
        let (lo, hi) = rl_confidence_interval(&[10.0f64, 20.0], 0.99).unwrap();
        assert!(((lo + hi) / 2.0 - 15.0).abs() < 1e-12);
        // t(0.995, 1) = 63.657 from published tables
        assert!(((hi - lo) / 2.0 - 63.657 * 50f64.sqrt() / 2f64.sqrt()).abs() < 0.01);
        assert_eq!(rl_confidence_interval(&[7.0f32; 10], 0.99).unwrap(), (7.0, 7.0));
        assert_eq!(rl_confidence_interval(&[1.0f64], 0.99), Err(EstimatorError::TooFewValues(1)));
    }
}
