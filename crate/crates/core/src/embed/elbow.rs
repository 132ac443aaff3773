use super::SpectrumInfo;
use crate::error::{Error, Result};

/// Profile-likelihood elbow of a scree sequence.
///
/// The sorted magnitudes are split into a leading segment of length `q` and
/// a trailing segment, each modelled as Gaussian with its own mean and a
/// pooled variance. The `q` with the highest log-likelihood is returned;
/// ties (including an all-constant spectrum, where every split fits
/// perfectly) go to the smallest `q`.
pub fn select_dimension_elbow(spectrum: &SpectrumInfo) -> Result<usize> {
    let mut x: Vec<f64> = spectrum.values.iter().map(|v| v.abs()).collect();
    if x.len() < 3 {
        return Err(Error::invalid("elbow selection needs at least 3 spectrum values"));
    }
    x.sort_by(|a, b| b.total_cmp(a));
    let p = x.len();
    let scale = x[0].max(f64::MIN_POSITIVE);
    let mut best = (1, f64::NEG_INFINITY);
    for q in 1..p {
        let ll = profile_log_likelihood(&x, q, scale);
        if ll > best.1 {
            best = (q, ll);
        }
    }
    Ok(best.0)
}

fn segment_ss(xs: &[f64]) -> f64 {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|v| (v - mean).powi(2)).sum()
}

fn profile_log_likelihood(x: &[f64], q: usize, scale: f64) -> f64 {
    let p = x.len();
    let ss = segment_ss(&x[..q]) + segment_ss(&x[q..]);
    let var = ss / (p - 2).max(1) as f64;
    if var <= (1e-15 * scale).powi(2) {
        return f64::INFINITY;
    }
    -0.5 * p as f64 * (2.0 * std::f64::consts::PI * var).ln() - ss / (2.0 * var)
}
