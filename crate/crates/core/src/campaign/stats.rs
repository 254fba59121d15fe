//! Order statistics for boxplots.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxStats {
    pub n: usize,
    pub min: f64,
    pub whisker_low: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_high: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    quantile(&s, 0.5)
}

/// Quartiles plus whiskers at the most extreme points within 1.5 IQR of the box.
pub fn boxplot(xs: &[f64]) -> Option<BoxStats> {
    if xs.is_empty() {
        return None;
    }
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let (q1, median, q3) = (quantile(&s, 0.25), quantile(&s, 0.5), quantile(&s, 0.75));
    let iqr = q3 - q1;
    let whisker_low = s.iter().copied().find(|&x| x >= q1 - 1.5 * iqr).unwrap_or(s[0]);
    let whisker_high = s.iter().rev().copied().find(|&x| x <= q3 + 1.5 * iqr).unwrap_or(s[s.len() - 1]);
    Some(BoxStats { n: s.len(), min: s[0], whisker_low, q1, median, q3, whisker_high, max: s[s.len() - 1] })
}
