use serde::Serialize;

use super::data::MetaDataset;

/// Cochran's Q, I² and the DerSimonian–Laird moment estimates of τ².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeterogeneityStats {
    pub q: f64,
    pub i2: f64,
    /// Untruncated DL estimate; negative when Q < K - 1.
    pub tau2_udl: f64,
    pub tau2_dl: f64,
}

/// Fixed-effect dispersion statistics of `d`.
pub fn cochran_q(d: &MetaDataset) -> HeterogeneityStats {
    let k = d.k();
    let w: Vec<f64> = d.variances().iter().map(|v| 1.0 / v).collect();
    let s1: f64 = w.iter().sum();
    let s2: f64 = w.iter().map(|x| x * x).sum();
    // centred at the first effect so identical effects give an exact zero
    let y0 = d.effects()[0];
    let mean = y0
        + w.iter()
            .zip(d.effects())
            .map(|(w, y)| w * (y - y0))
            .sum::<f64>()
            / s1;
    let q: f64 = w
        .iter()
        .zip(d.effects())
        .map(|(w, y)| w * (y - mean).powi(2))
        .sum();
    let df = (k - 1) as f64;
    let tau2_udl = (q - df) / (s1 - s2 / s1);
    let i2 = if q > 0.0 {
        ((q - df) / q).max(0.0)
    } else {
        0.0
    };
    HeterogeneityStats {
        q,
        i2,
        tau2_udl,
        tau2_dl: tau2_udl.max(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(y: &[f64], v: &[f64]) -> MetaDataset {
        MetaDataset::from_effects(y.to_vec(), v.to_vec()).unwrap()
    }

    #[test]
    fn homogeneous_hand_example() {
        let h = cochran_q(&ds(&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0]));
        assert_eq!(h.q, 0.0);
        assert_eq!(h.i2, 0.0);
        assert_eq!(h.tau2_udl, -1.0);
        assert_eq!(h.tau2_dl, 0.0);
    }

    #[test]
    fn spread_hand_example() {
        let h = cochran_q(&ds(&[0.0, 2.0, 4.0], &[1.0, 1.0, 1.0]));
        assert!((h.q - 8.0).abs() < 1e-12);
        assert!((h.i2 - 0.75).abs() < 1e-12);
        assert!((h.tau2_udl - 3.0).abs() < 1e-12);
        assert!((h.tau2_dl - 3.0).abs() < 1e-12);
    }

    #[test]
    fn equal_effects_give_zero_q() {
        let h = cochran_q(&ds(&[-0.3; 4], &[0.1, 2.0, 0.7, 5.0]));
        assert_eq!(h.q, 0.0);
        assert_eq!(h.i2, 0.0);
    }
}
