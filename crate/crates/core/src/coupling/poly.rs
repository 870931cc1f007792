//! Complex polynomials and their roots.
//!
//! Coefficients are stored in ascending order: `c[0] + c[1] x + ...`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<Complex64>);

impl Poly {
    pub fn constant(c: Complex64) -> Self {
        Poly(vec![c])
    }

    /// Π (x − r).
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut p = Poly::constant(Complex64::new(1.0, 0.0));
        for &r in roots {
            p = p.mul_linear(r);
        }
        p
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    /// self · (x − r)
    pub fn mul_linear(&self, r: Complex64) -> Self {
        let mut out = vec![Complex64::new(0.0, 0.0); self.0.len() + 1];
        for (k, &c) in self.0.iter().enumerate() {
            out[k + 1] += c;
            out[k] -= c * r;
        }
        Poly(out)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Poly(self.0.iter().map(|&c| c * s).collect())
    }

    pub fn add(&self, other: &Poly) -> Self {
        let n = self.0.len().max(other.0.len());
        let zero = Complex64::new(0.0, 0.0);
        Poly(
            (0..n)
                .map(|k| *self.0.get(k).unwrap_or(&zero) + *other.0.get(k).unwrap_or(&zero))
                .collect(),
        )
    }

    /// Value and derivative by Horner's rule.
    pub fn eval_with_derivative(&self, x: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in self.0.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.eval_with_derivative(x).0
    }

    /// |p(z)| / Σ|c_k||z|^k: relative size of the perturbation of the
    /// coefficients that would make `z` an exact root.
    pub fn backward_error(&self, z: Complex64) -> f64 {
        let r = z.norm();
        let bound = self.0.iter().rev().fold(0.0, |acc, c| acc * r + c.norm());
        if bound == 0.0 {
            0.0
        } else {
            self.eval(z).norm() / bound
        }
    }

    fn monic(&self) -> Result<Vec<Complex64>> {
        let lead = *self
            .0
            .last()
            .ok_or_else(|| Error::Numerical("empty polynomial".into()))?;
        if lead.norm() == 0.0 {
            return Err(Error::Numerical("leading coefficient is zero".into()));
        }
        Ok(self.0.iter().map(|&c| c / lead).collect())
    }
}

/// Roots via the eigenvalues of the companion matrix, each polished with a
/// few Newton steps on the polynomial itself.
pub fn companion_roots(p: &Poly) -> Result<Vec<Complex64>> {
    let n = p.degree();
    if n == 0 {
        return Ok(Vec::new());
    }
    let a = p.monic()?;
    if n == 1 {
        return Ok(vec![-a[0]]);
    }
    let mut comp = DMatrix::<Complex64>::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        comp[(i, n - 1)] = -a[i];
    }
    let schur = comp
        .try_schur(1e-15, 10_000)
        .ok_or_else(|| Error::Numerical("companion Schur iteration did not converge".into()))?;
    let eig = schur
        .eigenvalues()
        .ok_or_else(|| Error::Numerical("companion Schur form is not triangular".into()))?;
    let monic = Poly(a);
    Ok(eig.iter().map(|&z| newton_polish(&monic, z)).collect())
}

fn newton_polish(p: &Poly, mut z: Complex64) -> Complex64 {
    let mut best = p.eval(z).norm();
    for _ in 0..4 {
        let (v, dv) = p.eval_with_derivative(z);
        if dv.norm() == 0.0 || v.norm() == 0.0 {
            break;
        }
        let cand = z - v / dv;
        let r = p.eval(cand).norm();
        if !(r < best) {
            break;
        }
        best = r;
        z = cand;
    }
    z
}

/// Weierstrass / Durand–Kerner simultaneous iteration.
pub fn durand_kerner(p: &Poly, tol: f64, max_iter: usize) -> Result<Vec<Complex64>> {
    let n = p.degree();
    let a = Poly(p.monic()?);
    // Cauchy bound sets the radius of the starting circle.
    let radius = 1.0 + a.0[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            Complex64::from_polar(0.9 * radius, angle)
        })
        .collect();
    for _ in 0..max_iter {
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom *= z[i] - z[j];
                }
            }
            if denom.norm() == 0.0 {
                denom = Complex64::new(f64::EPSILON, 0.0);
            }
            let step = a.eval(z[i]) / denom;
            z[i] -= step;
            delta = delta.max(step.norm() / z[i].norm().max(1e-300));
        }
        if delta < tol || z.iter().all(|&zi| a.backward_error(zi) < tol) {
            return Ok(z);
        }
    }
    Err(Error::Numerical(format!(
        "Durand–Kerner did not converge in {max_iter} iterations"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn matched(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        let mut used = vec![false; b.len()];
        a.iter().all(|x| {
            let best = b
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .min_by(|p, q| (p.1 - x).norm().partial_cmp(&(q.1 - x).norm()).unwrap());
            match best {
                Some((i, y)) if (y - x).norm() <= tol * x.norm().max(1.0) => {
                    used[i] = true;
                    true
                }
                _ => false,
            }
        })
    }

    #[test]
    fn recovers_known_roots() {
        let roots = [c(1.0, -0.01), c(0.8, -0.002), c(1.3, 0.0), c(0.5, 0.3)];
        let p = Poly::from_roots(&roots);
        let found = companion_roots(&p).unwrap();
        assert!(matched(&roots, &found, 1e-13), "{found:?}");
        let dk = durand_kerner(&p, 1e-13, 5000).unwrap();
        assert!(matched(&roots, &dk, 1e-12), "{dk:?}");
    }

    #[test]
    fn near_double_root() {
        let roots = [c(1.0, -3e-4), c(1.0, -2e-3), c(0.7, -1e-3)];
        let p = Poly::from_roots(&roots);
        let found = companion_roots(&p).unwrap();
        assert!(matched(&roots, &found, 1e-12), "{found:?}");
    }

    #[test]
    fn horner_derivative() {
        // (x − 2)(x + 1) = x² − x − 2
        let p = Poly::from_roots(&[c(2.0, 0.0), c(-1.0, 0.0)]);
        let (v, dv) = p.eval_with_derivative(c(3.0, 0.0));
        assert_eq!(v, c(4.0, 0.0));
        assert_eq!(dv, c(5.0, 0.0));
    }

    #[test]
    fn degenerate_inputs() {
        assert!(companion_roots(&Poly(vec![c(1.0, 0.0), c(0.0, 0.0)])).is_err());
        assert!(companion_roots(&Poly::constant(c(2.0, 0.0)))
            .unwrap()
            .is_empty());
        let lin = companion_roots(&Poly(vec![c(-3.0, 0.0), c(2.0, 0.0)])).unwrap();
        assert_eq!(lin, vec![c(1.5, 0.0)]);
    }
}
