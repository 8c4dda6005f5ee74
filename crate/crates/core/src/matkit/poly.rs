use super::{C64, ONE, ZERO};
use crate::error::{Error, Result};

const DK_MAX_ITER: usize = 500;
const DK_STEP_TOL: f64 = 1e-13;

/// Polynomial with complex coefficients, ascending degree. Trailing
/// coefficients below `1e-12 · max|c|` are trimmed; the zero polynomial has
/// no coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<C64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        let max = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let cut = 1e-12 * max;
        while coeffs.last().is_some_and(|c| c.norm() <= cut) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    /// `Π (t − r_k)`.
    pub fn from_roots(roots: &[C64]) -> Self {
        let mut c = vec![ONE];
        for r in roots {
            let mut next = vec![ZERO; c.len() + 1];
            for (k, ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= ck * r;
            }
            c = next;
        }
        Self { coeffs: c }
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// True when every coefficient is at most `tol · scale`.
    pub fn is_negligible(&self, tol: f64, scale: f64) -> bool {
        self.max_coeff() <= tol * scale
    }

    pub fn eval(&self, t: C64) -> C64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, c| acc * t + c)
    }

    pub fn monic(&self) -> Option<Self> {
        let lead = *self.coeffs.last()?;
        Some(Self { coeffs: self.coeffs.iter().map(|c| c / lead).collect() })
    }

    /// Interpolates a polynomial of degree at most `degree` from a sampler,
    /// using the `degree + 1` roots of unity (an inverse DFT).
    pub fn interpolate<F: FnMut(C64) -> C64>(degree: usize, mut f: F) -> Self {
        let n = degree + 1;
        let nodes: Vec<C64> = (0..n)
            .map(|k| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64))
            .collect();
        let values: Vec<C64> = nodes.iter().map(|&t| f(t)).collect();
        let coeffs = (0..n)
            .map(|j| {
                let s: C64 = values.iter().zip(&nodes).map(|(v, w)| v * w.powu(j as u32).conj()).sum();
                s / n as f64
            })
            .collect();
        // do not trim here: callers decide what "identically zero" means
        Self { coeffs }
    }

    /// Drops trailing coefficients at or below `abs_tol`.
    pub fn trimmed_abs(&self, abs_tol: f64) -> Self {
        let mut c = self.coeffs.clone();
        while c.last().is_some_and(|x| x.norm() <= abs_tol) {
            c.pop();
        }
        Self { coeffs: c }
    }
}

/// All roots of `p` (with multiplicity) by Durand-Kerner iteration.
pub fn poly_roots(p: &Polynomial) -> Result<Vec<C64>> {
    let deg = match p.degree() {
        None => return Err(Error::Domain("roots of the zero polynomial".into())),
        Some(0) => return Err(Error::Domain("roots of a constant polynomial".into())),
        Some(d) => d,
    };
    let monic = p.monic().expect("nonzero");
    let c = monic.coeffs();
    if deg == 1 {
        return Ok(vec![-c[0]]);
    }

    // Cauchy bound for the initial circle
    let radius = 1.0 + c[..deg].iter().map(|z| z.norm()).fold(0.0, f64::max);
    let seed = C64::new(0.4, 0.9);
    let mut z: Vec<C64> = (0..deg).map(|k| seed.powu(k as u32) * radius.min(10.0)).collect();
    // keep the starting points distinct and nonzero
    for (k, zk) in z.iter_mut().enumerate() {
        if zk.norm() < 1e-3 {
            *zk = C64::from_polar(radius * 0.5, k as f64 + 0.3);
        }
    }

    for _ in 0..DK_MAX_ITER {
        let mut moved = 0.0f64;
        for i in 0..deg {
            let mut denom = ONE;
            for j in 0..deg {
                if i != j {
                    let d = z[i] - z[j];
                    denom *= if d.norm() == 0.0 { C64::new(1e-300, 0.0) } else { d };
                }
            }
            let step = monic.eval(z[i]) / denom;
            if step.is_finite() {
                z[i] -= step;
                moved = moved.max(step.norm() / z[i].norm().max(1.0));
            }
        }
        if moved < DK_STEP_TOL {
            break;
        }
    }
    Ok(z)
}
