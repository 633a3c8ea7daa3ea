//! Least-squares lines and automatic scaling-region selection shared by the
//! correlation-dimension and Lyapunov estimators.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; 0 when `y` is constant.
    pub r_squared: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r_squared = if sxx > 0.0 && syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 0.0 };
    LineFit { slope, intercept, r_squared }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRegion {
    pub start: usize,
    pub len: usize,
    pub fit: LineFit,
    /// 1 = linear and slope-stable, 2 = R² ≥ 0.98 only, 3 = R² ≥ 0.9 only.
    pub tier: u8,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRule {
    pub min_len: usize,
    pub r2_strict: f64,
    pub r2_loose: f64,
    /// Every local slope inside the window must lie within this fraction of
    /// the window's fitted slope for a tier-1 region.
    pub slope_band: f64,
}

impl Default for ScalingRule {
    fn default() -> Self {
        Self { min_len: 6, r2_strict: 0.98, r2_loose: 0.9, slope_band: 0.03 }
    }
}

fn window_ok(x: &[f64], y: &[f64], fit: &LineFit, band: f64) -> bool {
    let tol = band * fit.slope.abs();
    x.windows(2).zip(y.windows(2)).all(|(a, b)| {
        let local = (b[1] - b[0]) / (a[1] - a[0]);
        (local - fit.slope).abs() <= tol
    })
}

/// Longest window of at least `min_len` consecutive points meeting the tier
/// criteria, trying the strict tier first. Ties go to the higher R², then the
/// earlier start.
pub fn select_scaling_region(x: &[f64], y: &[f64], rule: &ScalingRule) -> Option<ScalingRegion> {
    let n = x.len().min(y.len());
    if n < rule.min_len {
        return None;
    }
    for tier in 1u8..=3 {
        for len in (rule.min_len..=n).rev() {
            let mut best: Option<ScalingRegion> = None;
            for start in 0..=n - len {
                let (xs, ys) = (&x[start..start + len], &y[start..start + len]);
                let fit = fit_line(xs, ys);
                let ok = match tier {
                    1 => fit.r_squared >= rule.r2_strict && window_ok(xs, ys, &fit, rule.slope_band),
                    2 => fit.r_squared >= rule.r2_strict,
                    _ => fit.r_squared >= rule.r2_loose,
                };
                if ok && best.map_or(true, |b| fit.r_squared > b.fit.r_squared) {
                    best = Some(ScalingRegion { start, len, fit, tier });
                }
            }
            if best.is_some() {
                return best;
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let f = fit_line(&x, &y);
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let r = select_scaling_region(&x, &y, &ScalingRule::default()).unwrap();
        assert_eq!((r.start, r.len, r.tier), (0, 10, 1));
    }

    #[test]
    fn prefers_linear_segment_before_saturation() {
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&v| if v < 20.0 { v } else { 20.0 + 0.1 * (v - 20.0) }).collect();
        let r = select_scaling_region(&x, &y, &ScalingRule::default()).unwrap();
        assert!((r.fit.slope - 1.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn noise_has_no_region() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y = [0.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 0.0];
        assert!(select_scaling_region(&x, &y, &ScalingRule::default()).is_none());
    }
}
