//! Real-root extraction for low-degree polynomials via companion-matrix
//! eigenvalues with Newton polish.

use nalgebra::{Complex, DMatrix};

type Complex64 = Complex<f64>;

/// Roots of c[0] + c[1] x + ... + c[n] x^n (complex, with multiplicity).
/// Leading zeros are trimmed; constant polynomials have no roots.
pub fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let mut c: Vec<f64> = coeffs.to_vec();
    while c.last().is_some_and(|l| l.abs() < 1e-300) {
        c.pop();
    }
    let n = c.len().saturating_sub(1);
    if n == 0 {
        return vec![];
    }
    if n == 1 {
        return vec![Complex64::new(-c[0] / c[1], 0.0)];
    }
    let lead = c[n];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        m[(i, n - 1)] = -c[i] / lead;
    }
    let eig = m.complex_eigenvalues();
    let mut roots: Vec<Complex64> = eig.iter().copied().collect();
    for r in roots.iter_mut() {
        *r = polish(&c, *r);
    }
    roots
}

/// A few complex Newton steps; converges to ~1e-14 for well-separated roots.
fn polish(c: &[f64], mut z: Complex64) -> Complex64 {
    for _ in 0..8 {
        let (mut p, mut dp) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for &ck in c.iter().rev() {
            dp = dp * z + p;
            p = p * z + Complex64::new(ck, 0.0);
        }
        if dp.norm() < 1e-300 {
            break;
        }
        let step = p / dp;
        z -= step;
        if step.norm() < 1e-15 * z.norm().max(1.0) {
            break;
        }
    }
    z
}

/// Real roots (imaginary part below a scaled threshold), deduplicated.
pub fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let scale: f64 = coeffs.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1.0);
    let mut out: Vec<f64> = polynomial_roots(coeffs)
        .into_iter()
        .filter(|z| z.im.abs() <= 1e-9 * scale.max(z.norm()))
        .map(|z| z.re)
        .collect();
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * a.abs().max(1.0));
    out
}

/// |p(x)| relative to the sum of term magnitudes.
pub fn residual_at(coeffs: &[f64], x: f64) -> f64 {
    let mut p = 0.0;
    let mut scale = 0.0;
    let mut xp = 1.0;
    for &c in coeffs {
        p += c * xp;
        scale += (c * xp).abs();
        xp *= x;
    }
    p.abs() / scale.max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartic_known_roots() {
        // (x-1)(x+2)(x-3)(x+4) = x^4 + 2x^3 - 13x^2 - 14x + 24
        let c = [24.0, -14.0, -13.0, 2.0, 1.0];
        let r = real_roots(&c);
        assert_eq!(r.len(), 4);
        for (got, want) in r.iter().zip([-4.0, -2.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn complex_pair_filtered() {
        // x^4 - 1: real roots ±1
        let r = real_roots(&[-1.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(r, vec![-1.0, 1.0]);
    }

    #[test]
    fn degenerate_degrees() {
        // linear: 2x - 1
        assert_eq!(real_roots(&[-1.0, 2.0]), vec![0.5]);
        // quadratic reduced from quartic with zero leading coefficients
        let r = real_roots(&[-6.0, 1.0, 1.0, 0.0, 0.0]);
        assert_eq!(r.len(), 2);
        assert!((r[0] + 3.0).abs() < 1e-12 && (r[1] - 2.0).abs() < 1e-12);
    }
}
