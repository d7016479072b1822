//! Discrete filter kernels: Laplacian of Gaussian and Gaussian.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// One rank-1 piece of a kernel: `tap(i, j) = vertical[i] * horizontal[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableTerm {
    pub vertical: Vec<f64>,
    pub horizontal: Vec<f64>,
}

/// Square kernel with an odd number of taps per side.
///
/// A kernel may also carry an exact sum of rank-1 terms, which lets
/// [`convolve`](super::convolve::convolve) run it as a sequence of 1-D passes.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    size: usize,
    taps: Vec<f64>,
    terms: Vec<SeparableTerm>,
}

impl Kernel2D {
    pub fn new(size: usize, taps: Vec<f64>) -> Result<Self> {
        if size.is_multiple_of(2) {
            return Err(Error::param("size", format!("kernel size {size} is not odd")));
        }
        if taps.len() != size * size {
            return Err(Error::param(
                "taps",
                format!("{} taps for a {size}x{size} kernel", taps.len()),
            ));
        }
        Ok(Kernel2D {
            size,
            taps,
            terms: Vec::new(),
        })
    }

    /// Single tap of weight 1.
    pub fn identity() -> Self {
        Kernel2D {
            size: 1,
            taps: vec![1.0],
            terms: Vec::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn radius(&self) -> usize {
        self.size / 2
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    #[inline]
    pub fn tap(&self, row: usize, col: usize) -> f64 {
        self.taps[row * self.size + col]
    }

    pub fn sum(&self) -> f64 {
        self.taps.iter().sum()
    }

    pub fn separable_terms(&self) -> &[SeparableTerm] {
        &self.terms
    }
}

/// Taps per side for a Gaussian-family filter at scale `sigma`:
/// `floor(3 sigma) * 2 + 1`.
pub fn filter_size(sigma: f64) -> usize {
    (3.0 * sigma).floor() as usize * 2 + 1
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param("sigma", format!("must be positive, got {sigma}")));
    }
    Ok(())
}

/// LoG taps sampled at integer offsets from the center, without DC correction.
///
/// `h(x, y) = -1/(pi sigma^4) (1 - r^2/(2 sigma^2)) exp(-r^2/(2 sigma^2))`,
/// multiplied by `sigma^2` when `scale_normalized`.
pub fn log_taps(sigma: f64, scale_normalized: bool) -> Result<Vec<f64>> {
    check_sigma(sigma)?;
    let n = filter_size(sigma);
    let c = (n / 2) as f64;
    let s2 = sigma * sigma;
    let mut taps = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let (y, x) = (i as f64 - c, j as f64 - c);
            let q = (x * x + y * y) / (2.0 * s2);
            let h = -1.0 / (PI * s2 * s2) * (1.0 - q) * (-q).exp();
            taps.push(if scale_normalized { h * s2 } else { h });
        }
    }
    Ok(taps)
}

/// Laplacian of Gaussian kernel, DC-corrected so the taps sum to zero.
pub fn log_kernel(sigma: f64, scale_normalized: bool) -> Result<Kernel2D> {
    let mut taps = log_taps(sigma, false)?;
    let n = filter_size(sigma);
    let s2 = sigma * sigma;
    let mean = taps.iter().sum::<f64>() / taps.len() as f64;
    for t in &mut taps {
        *t -= mean;
        if scale_normalized {
            *t *= s2;
        }
    }

    // h = k * (a(x) b(y) + b(x) a(y)) with a(t) = (t^2 - s^2) g(t), b(t) = g(t)
    let mut k = 1.0 / (2.0 * PI * s2 * s2 * s2);
    let mut dc = mean;
    if scale_normalized {
        k *= s2;
        dc *= s2;
    }
    let c = (n / 2) as f64;
    let g: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 - c;
            (-t * t / (2.0 * s2)).exp()
        })
        .collect();
    let a: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 - c;
            (t * t - s2) * g[i]
        })
        .collect();
    let scaled = |v: &[f64]| v.iter().map(|x| x * k).collect::<Vec<_>>();
    let terms = vec![
        SeparableTerm {
            vertical: scaled(&a),
            horizontal: g.clone(),
        },
        SeparableTerm {
            vertical: scaled(&g),
            horizontal: a,
        },
        SeparableTerm {
            vertical: vec![-dc; n],
            horizontal: vec![1.0; n],
        },
    ];
    Ok(Kernel2D {
        size: n,
        taps,
        terms,
    })
}

/// Normalized 1-D Gaussian of `filter_size(sigma)` taps summing to 1.
pub fn gaussian_taps(sigma: f64) -> Result<Vec<f64>> {
    check_sigma(sigma)?;
    let n = filter_size(sigma);
    let c = (n / 2) as f64;
    let mut g: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 - c;
            (-t * t / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = g.iter().sum();
    g.iter_mut().for_each(|v| *v /= total);
    Ok(g)
}

/// 2-D Gaussian as the outer product of [`gaussian_taps`].
pub fn gaussian_kernel(sigma: f64) -> Result<Kernel2D> {
    let g = gaussian_taps(sigma)?;
    let n = g.len();
    let taps = (0..n * n).map(|idx| g[idx / n] * g[idx % n]).collect();
    Ok(Kernel2D {
        size: n,
        taps,
        terms: vec![SeparableTerm {
            vertical: g.clone(),
            horizontal: g,
        }],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_rule() {
        assert_eq!(filter_size(2.0), 13);
        assert_eq!(log_kernel(2.0, false).unwrap().size(), 13);
        assert_eq!(filter_size(25.0), 151);
        assert_eq!(filter_size(0.4), 3);
    }

    #[test]
    fn center_tap_before_correction() {
        for sigma in [1.0, 2.0, 3.5] {
            let taps = log_taps(sigma, false).unwrap();
            let n = filter_size(sigma);
            let center = taps[(n / 2) * n + n / 2];
            assert!((center + 1.0 / (PI * sigma.powi(4))).abs() < 1e-15);
        }
    }

    #[test]
    fn sign_change_on_critical_circle() {
        // 2 sigma^2 = 8 puts (2, 2) exactly on the zero circle for sigma = 2
        let sigma: f64 = 2.0;
        let taps = log_taps(sigma, false).unwrap();
        let n = filter_size(sigma);
        let c = n / 2;
        assert!(taps[(c + 2) * n + c + 2].abs() < 1e-18);
        assert!(taps[(c + 1) * n + c + 2] < 0.0);
        assert!(taps[(c + 3) * n + c + 2] > 0.0);
    }

    #[test]
    fn dc_corrected_and_symmetric() {
        for sigma in [0.7, 1.0, 2.0, 4.3, 10.0, 25.0] {
            for norm in [false, true] {
                let k = log_kernel(sigma, norm).unwrap();
                assert!(k.sum().abs() < 1e-12, "sigma {sigma} sum {}", k.sum());
                let n = k.size();
                let min = k.taps().iter().cloned().fold(f64::INFINITY, f64::min);
                assert_eq!(k.tap(n / 2, n / 2), min);
                for i in 0..n {
                    for j in 0..n {
                        assert_eq!(k.tap(i, j), k.tap(n - 1 - i, n - 1 - j));
                    }
                }
            }
        }
    }

    #[test]
    fn normalized_taps_are_sigma_squared_multiples() {
        for sigma in [0.5, 2.0, 3.3, 20.0] {
            let raw = log_taps(sigma, false).unwrap();
            let sn = log_taps(sigma, true).unwrap();
            for (a, b) in raw.iter().zip(&sn) {
                assert_eq!(*b, a * (sigma * sigma));
            }
            let (plain, scaled) = (log_kernel(sigma, false).unwrap(), log_kernel(sigma, true).unwrap());
            for (a, b) in plain.taps().iter().zip(scaled.taps()) {
                assert_eq!(*b, a * (sigma * sigma));
            }
        }
    }

    #[test]
    fn separable_terms_reproduce_taps() {
        for sigma in [1.0, 2.0, 6.5] {
            for norm in [false, true] {
                let k = log_kernel(sigma, norm).unwrap();
                let n = k.size();
                let scale = k.taps().iter().fold(0.0f64, |m, t| m.max(t.abs()));
                for i in 0..n {
                    for j in 0..n {
                        let v: f64 = k
                            .separable_terms()
                            .iter()
                            .map(|t| t.vertical[i] * t.horizontal[j])
                            .sum();
                        assert!((v - k.tap(i, j)).abs() < 1e-12 * scale);
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_sigma() {
        assert!(log_kernel(0.0, false).is_err());
        assert!(log_kernel(-1.0, true).is_err());
        assert!(gaussian_taps(f64::NAN).is_err());
    }

    #[test]
    fn gaussian_sums_to_one() {
        let g = gaussian_taps(2.0).unwrap();
        assert_eq!(g.len(), 13);
        assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }
}
