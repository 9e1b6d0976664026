//! Peak location, finite-size extrapolation and regime labels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::qr_positive;
use crate::tensor::Tensor;

/// Points used by the peak fit, centred on the sample maximum.
pub const PEAK_WINDOW: usize = 9;
/// Window used for the single retry when the first maximizer sits on an edge.
pub const WIDE_PEAK_WINDOW: usize = 13;
pub const PEAK_DEGREE: usize = 6;

/// Least-squares polynomial in the rescaled variable `t = (x − shift) / scale`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    pub coefficients: Vec<f64>,
    pub shift: f64,
    pub scale: f64,
}

impl Polynomial {
    pub fn fit(points: &[(f64, f64)], degree: usize) -> Result<Self> {
        if points.len() <= degree {
            return Err(Error::Fit(format!("degree {degree} needs more than {} points", points.len())));
        }
        let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
        if !(hi > lo) {
            return Err(Error::Fit("all abscissae coincide".into()));
        }
        let shift = 0.5 * (lo + hi);
        let scale = 0.5 * (hi - lo);
        let n = points.len();
        let k = degree + 1;
        let v = Tensor::from_fn(&[n, k], |i| ((points[i[0]].0 - shift) / scale).powi(i[1] as i32));
        let (q, r) = qr_positive(&v)?;
        // c = R⁻¹ Qᵀ y by back substitution
        let qty: Vec<f64> = (0..k).map(|c| (0..n).map(|i| q.get(&[i, c]) * points[i].1).sum()).collect();
        let mut c = vec![0.0; k];
        for row in (0..k).rev() {
            let diag = r.get(&[row, row]);
            if diag.abs() < 1e-12 {
                return Err(Error::Fit("rank-deficient design matrix".into()));
            }
            let tail: f64 = (row + 1..k).map(|col| r.get(&[row, col]) * c[col]).sum();
            c[row] = (qty[row] - tail) / diag;
        }
        Ok(Self { coefficients: c, shift, scale })
    }

    fn horner(c: &[f64], t: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, a| acc * t + a)
    }

    pub fn eval(&self, x: f64) -> f64 {
        Self::horner(&self.coefficients, (x - self.shift) / self.scale)
    }

    fn derivative_coefficients(c: &[f64]) -> Vec<f64> {
        c.iter().enumerate().skip(1).map(|(i, a)| i as f64 * a).collect()
    }

    /// Maximizer over `[lo, hi]`: a dense scan followed by Newton steps on
    /// the derivative.
    pub fn argmax(&self, lo: f64, hi: f64) -> f64 {
        const SCAN: usize = 4000;
        let mut best = (lo, self.eval(lo));
        for i in 1..=SCAN {
            let x = lo + (hi - lo) * i as f64 / SCAN as f64;
            let y = self.eval(x);
            if y > best.1 {
                best = (x, y);
            }
        }
        let d1 = Self::derivative_coefficients(&self.coefficients);
        let d2 = Self::derivative_coefficients(&d1);
        let mut t = (best.0 - self.shift) / self.scale;
        let (tlo, thi) = ((lo - self.shift) / self.scale, (hi - self.shift) / self.scale);
        for _ in 0..50 {
            let g = Self::horner(&d1, t);
            let h = Self::horner(&d2, t);
            if !(h < 0.0) {
                break;
            }
            let next = (t - g / h).clamp(tlo, thi);
            let done = (next - t).abs() < 1e-15;
            t = next;
            if done {
                break;
            }
        }
        let x = self.shift + self.scale * t;
        if self.eval(x) >= best.1 {
            x
        } else {
            best.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakFit {
    pub p_peak: f64,
    pub window: (f64, f64),
    pub points_used: usize,
    pub widened: bool,
}

fn fit_in_window(curve: &[(f64, f64)], centre: usize, width: usize) -> Result<(PeakFit, bool)> {
    let width = width.min(curve.len());
    let start = centre.saturating_sub(width / 2).min(curve.len() - width);
    let window = &curve[start..start + width];
    let poly = Polynomial::fit(window, PEAK_DEGREE)?;
    let (lo, hi) = (window[0].0, window[width - 1].0);
    let x = poly.argmax(lo, hi);
    let edge = 1e-9 * (hi - lo);
    let interior = x - lo > edge && hi - x > edge;
    Ok((PeakFit { p_peak: x, window: (lo, hi), points_used: width, widened: false }, interior))
}

/// Maximizer of a degree-6 least-squares fit over a window centred on the
/// sample maximum. A maximizer on the window edge triggers one retry with a
/// wider window; a second edge hit is a fit error.
pub fn find_peak(curve: &[(f64, f64)]) -> Result<PeakFit> {
    if curve.len() < 8 {
        return Err(Error::Fit(format!("peak search needs at least 8 points, got {}", curve.len())));
    }
    if curve.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::Fit("curve contains non-finite values".into()));
    }
    if curve.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::Fit("curve abscissae must be strictly increasing".into()));
    }
    let centre = curve
        .iter()
        .enumerate()
        .fold(0, |best, (i, p)| if p.1 > curve[best].1 { i } else { best });
    let (fit, interior) = fit_in_window(curve, centre, PEAK_WINDOW)?;
    if interior {
        return Ok(fit);
    }
    let (mut fit, interior) = fit_in_window(curve, centre, WIDE_PEAK_WINDOW)?;
    fit.widened = true;
    if interior {
        Ok(fit)
    } else {
        Err(Error::Fit(format!("maximizer {} lies on the window edge", fit.p_peak)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub a: f64,
    pub p_c: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
}

/// Least-squares `p_peak = a/L + p_c`.
pub fn extrapolate_pc(peaks: &[(usize, f64)]) -> Result<Extrapolation> {
    let mut sizes: Vec<usize> = peaks.iter().map(|p| p.0).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 3 {
        return Err(Error::Fit(format!("extrapolation needs 3 distinct sizes, got {}", sizes.len())));
    }
    if sizes[0] == 0 {
        return Err(Error::Fit("size 0 in extrapolation".into()));
    }
    let pts: Vec<(f64, f64)> = peaks.iter().map(|&(l, p)| (1.0 / l as f64, p)).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let a = sxy / sxx;
    let p_c = my - a * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - a * p.0 - p_c).powi(2)).sum();
    Ok(Extrapolation { a, p_c, residual: (rss / n).sqrt() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// Paramagnetic, no order of either kind.
    I,
    /// Strong-to-weak symmetry breaking: only the Rényi-2 order survives.
    II,
    /// Strong-to-trivial: all three orders.
    III,
    Crossover,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::I => "I",
            Regime::II => "II",
            Regime::III => "III",
            Regime::Crossover => "crossover",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub low: f64,
    pub high: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { low: 0.1, high: 0.4 }
    }
}

impl Thresholds {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(low < high) {
            return Err(Error::Input(format!("thresholds need low < high, got ({low}, {high})")));
        }
        Ok(Self { low, high })
    }
}

pub fn classify_regime(chi_ii: f64, chi_st: f64, chi_u: f64, t: &Thresholds) -> Regime {
    let (lo, hi) = (t.low, t.high);
    if chi_ii < lo && chi_st < lo && chi_u < lo {
        Regime::I
    } else if chi_ii >= hi && chi_st < lo && chi_u < lo {
        Regime::II
    } else if chi_ii >= hi && chi_st >= hi && chi_u >= hi {
        Regime::III
    } else {
        Regime::Crossover
    }
}
