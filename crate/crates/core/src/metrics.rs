//! Reconstruction quality metrics.
//!
//! Frequencies are estimated by zero-padded N-D DFT peak picking with
//! per-axis parabolic refinement of the log-magnitude. Component matching in
//! [`factor_success`] and [`freq_rmse`] is greedy best-first, not an optimal
//! assignment.

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{increment, ComplexTensor, CpFactors, C64};

/// `‖x − y‖_F / ‖y‖_F`.
pub fn rlne(x: &ComplexTensor, y: &ComplexTensor) -> Result<f64> {
    let denom = y.frobenius_norm();
    if denom == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(x.sub(y)?.frobenius_norm() / denom)
}

/// RLNE clipped to 1.
pub fn clip_rlne(rlne: f64) -> f64 {
    rlne.min(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub rlne: f64,
    pub clipped_rlne: f64,
    pub success: Option<bool>,
    pub freq_rmse: Option<f64>,
    pub wall_time: f64,
}

impl MetricsRecord {
    pub fn new(rlne: f64) -> Self {
        Self { rlne, clipped_rlne: clip_rlne(rlne), success: None, freq_rmse: None, wall_time: 0.0 }
    }
}

/// Success threshold on the product-of-cosines score for an order-`N` model.
pub fn success_threshold(order: usize) -> f64 {
    0.99f64.powi(order as i32)
}

fn cosine(a: nalgebra::DVectorView<'_, C64>, b: nalgebra::DVectorView<'_, C64>) -> f64 {
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.dotc(&b).norm() / (na * nb)
}

/// Greedy unique matching of true components to estimated columns; returns the
/// matched `∏_n |a_nᴴ â_n| / (‖a_n‖‖â_n‖)` score of every true component.
pub fn factor_similarity(truth: &CpFactors, est: &CpFactors) -> Result<Vec<f64>> {
    if truth.order() != est.order() {
        return Err(Error::Shape(format!("orders {} and {} differ", truth.order(), est.order())));
    }
    if truth.dims() != est.dims() {
        return Err(Error::DimMismatch { expected: truth.dims(), found: est.dims() });
    }
    if est.rank() < truth.rank() {
        return Err(Error::Shape(format!(
            "estimated rank {} is below true rank {}",
            est.rank(),
            truth.rank()
        )));
    }
    let mut pairs = Vec::with_capacity(truth.rank() * est.rank());
    for r in 0..truth.rank() {
        for c in 0..est.rank() {
            let score: f64 = truth
                .factors()
                .iter()
                .zip(est.factors())
                .map(|(a, b)| cosine(a.column(r), b.column(c)))
                .product();
            pairs.push((score, r, c));
        }
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut scores = vec![None; truth.rank()];
    let mut used = vec![false; est.rank()];
    for (s, r, c) in pairs {
        if scores[r].is_none() && !used[c] {
            scores[r] = Some(s);
            used[c] = true;
        }
    }
    Ok(scores.into_iter().map(|s| s.unwrap_or(0.0)).collect())
}

/// Every true component is matched with score above `0.99^N`.
pub fn factor_success(truth: &CpFactors, est: &CpFactors) -> Result<bool> {
    let threshold = success_threshold(truth.order());
    Ok(factor_similarity(truth, est)?.iter().all(|&s| s > threshold))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyEstimate {
    /// Frequency tuples in `[0, 1)^N`, strongest peak first.
    pub peaks: Vec<Vec<f64>>,
    /// Fewer local maxima than requested were found.
    pub short: bool,
}

/// N-D DFT of `x` zero-padded to `zero_pad · I_n` samples per mode.
pub fn padded_spectrum(x: &ComplexTensor, zero_pad: usize) -> Result<ComplexTensor> {
    if zero_pad == 0 {
        return Err(Error::param("zero_pad", "padding factor must be at least 1"));
    }
    let dims: Vec<usize> = x.dims().iter().map(|&d| d * zero_pad).collect();
    let mut buf = ComplexTensor::zeros(&dims)?;
    {
        let mut idx = vec![0usize; x.order()];
        let data = buf.data_mut();
        for &v in x.data() {
            let lin = idx.iter().zip(&dims).rev().fold(0usize, |acc, (&i, &d)| acc * d + i);
            data[lin] = v;
            increment(&mut idx, x.dims());
        }
    }
    let mut planner = FftPlanner::<f64>::new();
    let total = buf.len();
    let data = buf.data_mut();
    let mut stride = 1usize;
    for &len in &dims {
        let fft = planner.plan_fft_forward(len);
        let mut line = vec![C64::new(0.0, 0.0); len];
        let block = stride * len;
        for start in (0..total).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (k, v) in line.iter_mut().enumerate() {
                    *v = data[base + k * stride];
                }
                fft.process(&mut line);
                for (k, v) in line.iter().enumerate() {
                    data[base + k * stride] = *v;
                }
            }
        }
        stride = block;
    }
    Ok(buf)
}

/// Locates the `count` largest strict local maxima (over the full `3^N − 1`
/// circular neighbourhood) of the zero-padded magnitude spectrum and refines
/// each coordinate by parabolic interpolation of the log-magnitude.
pub fn estimate_frequencies(x: &ComplexTensor, count: usize, zero_pad: usize) -> Result<FrequencyEstimate> {
    if count == 0 {
        return Err(Error::param("R", "number of peaks must be at least 1"));
    }
    let spec = padded_spectrum(x, zero_pad)?;
    let dims = spec.dims().to_vec();
    let order = dims.len();
    let mag: Vec<f64> = spec.data().iter().map(|z| z.norm()).collect();
    let strides: Vec<usize> = dims
        .iter()
        .scan(1usize, |acc, &d| {
            let s = *acc;
            *acc *= d;
            Some(s)
        })
        .collect();

    // Neighbour offsets in {-1, 0, 1}^N without the origin.
    let mut offsets: Vec<Vec<isize>> = Vec::new();
    let mut o = vec![0usize; order];
    for _ in 0..3usize.pow(order as u32) {
        let off: Vec<isize> = o.iter().map(|&v| v as isize - 1).collect();
        if off.iter().any(|&v| v != 0) {
            offsets.push(off);
        }
        increment(&mut o, &vec![3; order]);
    }

    let shift = |idx: &[usize], n: usize, delta: isize| -> usize {
        let d = dims[n] as isize;
        (((idx[n] as isize + delta) % d + d) % d) as usize
    };
    let mut maxima: Vec<(f64, usize)> = Vec::new();
    let mut idx = vec![0usize; order];
    for lin in 0..mag.len() {
        let c = mag[lin];
        let is_max = c > 0.0
            && offsets.iter().all(|off| {
                let nb: usize =
                    (0..order).map(|n| if dims[n] == 1 { idx[n] } else { shift(&idx, n, off[n]) } * strides[n]).sum();
                nb == lin || c > mag[nb]
            });
        // Axes of length one have no neighbours; a self-comparison is not a tie.
        if is_max {
            maxima.push((c, lin));
        }
        increment(&mut idx, &dims);
    }
    maxima.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let short = maxima.len() < count;
    maxima.truncate(count);

    let peaks = maxima
        .iter()
        .map(|&(c, lin)| {
            let mut rest = lin;
            let pos: Vec<usize> = dims
                .iter()
                .map(|&d| {
                    let i = rest % d;
                    rest /= d;
                    i
                })
                .collect();
            (0..order)
                .map(|n| {
                    let len = dims[n];
                    let mut delta = 0.0;
                    if len >= 3 {
                        let at = |k: usize| -> f64 {
                            let l: usize = (0..order).map(|m| if m == n { k } else { pos[m] } * strides[m]).sum();
                            mag[l].max(f64::MIN_POSITIVE).ln()
                        };
                        let left = at(shift(&pos, n, -1));
                        let right = at(shift(&pos, n, 1));
                        let centre = c.ln();
                        let denom = left - 2.0 * centre + right;
                        if denom < 0.0 {
                            delta = (0.5 * (left - right) / denom).clamp(-0.5, 0.5);
                        }
                    }
                    ((pos[n] as f64 + delta) / len as f64).rem_euclid(1.0)
                })
                .collect()
        })
        .collect();
    Ok(FrequencyEstimate { peaks, short })
}

/// Distance on the unit circle of frequencies.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Greedy best-first matching of estimated to true frequency tuples by total
/// squared circular distance; returns `(true, est)` index pairs.
pub fn match_frequencies(truth: &[Vec<f64>], est: &[Vec<f64>]) -> Result<Vec<(usize, usize)>> {
    if truth.len() != est.len() {
        return Err(Error::Shape(format!("{} true and {} estimated frequencies", truth.len(), est.len())));
    }
    if truth.iter().chain(est).any(|f| f.len() != truth[0].len()) {
        return Err(Error::Shape("frequency tuples have different orders".into()));
    }
    let mut pairs = Vec::with_capacity(truth.len() * est.len());
    for (t, ft) in truth.iter().enumerate() {
        for (e, fe) in est.iter().enumerate() {
            let d: f64 = ft.iter().zip(fe).map(|(a, b)| circular_distance(*a, *b).powi(2)).sum();
            pairs.push((d, t, e));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut taken_t = vec![false; truth.len()];
    let mut taken_e = vec![false; est.len()];
    let mut out = Vec::with_capacity(truth.len());
    for (_, t, e) in pairs {
        if !taken_t[t] && !taken_e[e] {
            taken_t[t] = true;
            taken_e[e] = true;
            out.push((t, e));
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Per-component, per-mode circular errors after matching.
pub fn matched_errors(truth: &[Vec<f64>], est: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    Ok(match_frequencies(truth, est)?
        .into_iter()
        .map(|(t, e)| truth[t].iter().zip(&est[e]).map(|(a, b)| circular_distance(*a, *b)).collect())
        .collect())
}

/// `sqrt((1/R) Σ_r Σ_n d(f_{n,r}, f̂_{n,r})²)` after matching.
pub fn freq_rmse(truth: &[Vec<f64>], est: &[Vec<f64>]) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::Shape("no frequencies to compare".into()));
    }
    let errs = matched_errors(truth, est)?;
    let sum: f64 = errs.iter().flatten().map(|e| e * e).sum();
    Ok((sum / truth.len() as f64).sqrt())
}

/// Monte Carlo summary of a set of trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub trials: usize,
    pub mean_rlne: f64,
    pub mean_clipped_rlne: f64,
    /// Sample standard deviation of the clipped RLNE (zero for one trial).
    pub std_clipped_rlne: f64,
    pub success_rate: Option<f64>,
    pub mean_freq_rmse: Option<f64>,
    pub mean_wall_time: f64,
}

pub fn monte_carlo_average(records: &[MetricsRecord]) -> Result<Aggregate> {
    if records.is_empty() {
        return Err(Error::param("records", "cannot average an empty set of trials"));
    }
    let n = records.len() as f64;
    let mean = |f: &dyn Fn(&MetricsRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
    let mean_clipped = mean(&|r| clip_rlne(r.rlne));
    let std = if records.len() > 1 {
        (records.iter().map(|r| (clip_rlne(r.rlne) - mean_clipped).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let successes: Vec<bool> = records.iter().filter_map(|r| r.success).collect();
    let rmses: Vec<f64> = records.iter().filter_map(|r| r.freq_rmse).collect();
    Ok(Aggregate {
        trials: records.len(),
        mean_rlne: mean(&|r| r.rlne),
        mean_clipped_rlne: mean_clipped,
        std_clipped_rlne: std,
        success_rate: (!successes.is_empty())
            .then(|| successes.iter().filter(|&&s| s).count() as f64 / successes.len() as f64),
        mean_freq_rmse: (!rmses.is_empty()).then(|| rmses.iter().sum::<f64>() / rmses.len() as f64),
        mean_wall_time: mean(&|r| r.wall_time),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::CMatrix;

    #[test]
    fn rlne_basics() {
        let y = ComplexTensor::from_fn(&[3, 3], |i| C64::new(i[0] as f64 + 1.0, i[1] as f64)).unwrap();
        assert_eq!(rlne(&y, &y).unwrap(), 0.0);
        assert_eq!(rlne(&ComplexTensor::zeros(&[3, 3]).unwrap(), &y).unwrap(), 1.0);
        let e = y.scaled(C64::new(0.0, 0.05));
        assert!((rlne(&y.add(&e).unwrap(), &y).unwrap() - 0.05).abs() < 1e-15);
        assert!(matches!(rlne(&y, &ComplexTensor::zeros(&[3, 3]).unwrap()), Err(Error::ZeroReference)));
    }

    #[test]
    fn rmse_cases() {
        let t = vec![vec![0.3, 0.7]];
        assert_eq!(freq_rmse(&t, &t).unwrap(), 0.0);
        assert!((freq_rmse(&[vec![0.2]], &[vec![0.201]]).unwrap() - 0.001).abs() < 1e-12);
        assert!((freq_rmse(&[vec![0.999]], &[vec![0.001]]).unwrap() - 0.002).abs() < 1e-12);
        assert!(freq_rmse(&[vec![0.1]], &[vec![0.1], vec![0.2]]).is_err());
    }

    #[test]
    fn rmse_matching_permutation() {
        let t = vec![vec![0.1, 0.2], vec![0.6, 0.9]];
        let e = vec![vec![0.6, 0.9], vec![0.1, 0.2]];
        assert_eq!(freq_rmse(&t, &e).unwrap(), 0.0);
    }

    #[test]
    fn averaging() {
        let recs = vec![MetricsRecord::new(0.5), MetricsRecord::new(3.0)];
        let a = monte_carlo_average(&recs).unwrap();
        assert_eq!(a.mean_clipped_rlne, 0.75);
        assert_eq!(a.mean_rlne, 1.75);
        let same = vec![MetricsRecord::new(0.2); 4];
        let a = monte_carlo_average(&same).unwrap();
        assert_eq!((a.mean_clipped_rlne, a.std_clipped_rlne), (0.2, 0.0));
        assert!(a.success_rate.is_none());
        assert!(monte_carlo_average(&[]).is_err());
    }

    #[test]
    fn factor_success_identity_and_scaling() {
        let a = CMatrix::from_fn(4, 2, |i, r| C64::new((i + 1) as f64, r as f64).powu(r as u32 + 1));
        let b = CMatrix::from_fn(3, 2, |i, r| C64::new(r as f64 - 1.0, i as f64 + 0.5));
        let truth = CpFactors::new(vec![a.clone(), b.clone()]).unwrap();
        assert!(factor_success(&truth, &truth).unwrap());
        let mut a2 = a.clone();
        a2.column_mut(0).scale_mut(-3.0);
        let mut b2 = b.clone();
        for v in b2.column_mut(1).iter_mut() {
            *v *= C64::new(0.0, 2.0);
        }
        let scaled = CpFactors::new(vec![a2, b2]).unwrap();
        assert!(factor_success(&truth, &scaled).unwrap());
        let small = CpFactors::new(vec![a.columns(0, 1).into(), b.columns(0, 1).into()]).unwrap();
        assert!(factor_similarity(&truth, &small).is_err());
    }

    #[test]
    fn constant_tensor_single_peak() {
        let x = ComplexTensor::from_fn(&[5, 6], |_| C64::new(1.0, 0.0)).unwrap();
        let est = estimate_frequencies(&x, 1, 4).unwrap();
        assert!(!est.short);
        for f in &est.peaks[0] {
            assert!(circular_distance(*f, 0.0) < 1e-12);
        }
    }

    #[test]
    fn short_count_flag() {
        let x = ComplexTensor::from_fn(&[4], |i| C64::new(0.0, 2.0 * std::f64::consts::PI * 0.25 * i[0] as f64).exp())
            .unwrap();
        let est = estimate_frequencies(&x, 3, 1).unwrap();
        assert!(est.short);
        assert_eq!(est.peaks.len(), 1);
        assert!((est.peaks[0][0] - 0.25).abs() < 1e-12);
    }
}
