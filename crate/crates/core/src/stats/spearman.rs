use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::ranks::midranks;
use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub rho: f64,
    pub p_value: f64,
}

/// Pearson correlation of midranks, with a two-sided p-value from the
/// t distribution on `n - 2` degrees of freedom.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<Correlation, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::TooFewPoints(x.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let (rx, ry) = (midranks(x), midranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let rho = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = n - 2.0;
    let p_value = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
        (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
    };
    Ok(Correlation { rho, p_value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_agreement_and_disagreement() {
        let x = [3.0, 1.0, 4.0, 1.5, 9.0, 2.6];
        assert!((spearman_rho(&x, &x).unwrap().rho - 1.0).abs() < 1e-12);
        let rev: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((spearman_rho(&x, &rev).unwrap().rho + 1.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert_eq!(spearman_rho(&[1.0, 2.0, 3.0], &[1.0, 2.0]), Err(StatsError::LengthMismatch(3, 2)));
        assert_eq!(spearman_rho(&[1.0, 2.0], &[1.0, 2.0]), Err(StatsError::TooFewPoints(2)));
        assert_eq!(spearman_rho(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(StatsError::ZeroVariance));
    }

    #[test]
    fn textbook_value() {
        // Ranks differ by d = (0, 0, 1, -1, 0): rho = 1 - 6*2/(5*24) = 0.9.
        let r = spearman_rho(&[1.0, 2.0, 3.0, 4.0, 5.0], &[10.0, 20.0, 40.0, 30.0, 50.0]).unwrap();
        assert!((r.rho - 0.9).abs() < 1e-12);
        assert!(r.p_value > 0.0 && r.p_value < 0.1);
    }
}
