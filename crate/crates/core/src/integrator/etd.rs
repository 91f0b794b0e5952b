//! Modewise coefficients of the fourth-order exponential time-differencing
//! Runge-Kutta scheme and of the linearly implicit Euler scheme.

/// `φ₁, φ₂, φ₃` at `z`, where `φ_k(z) = Σ_{n≥0} zⁿ/(n+k)!`.
pub(crate) fn phi123(z: f64) -> (f64, f64, f64) {
    if z.abs() < 0.5 {
        // Taylor series; 20 terms reach machine precision for |z| < 0.5
        let mut p = [0.0; 3];
        for (k, slot) in p.iter_mut().enumerate() {
            let mut term = 1.0;
            for j in 1..=(k + 1) {
                term /= j as f64;
            }
            let mut sum = 0.0;
            for n in 0..20 {
                sum += term;
                term *= z / (n + k + 2) as f64;
            }
            *slot = sum;
        }
        (p[0], p[1], p[2])
    } else {
        let em1 = z.exp_m1();
        let p1 = em1 / z;
        let p2 = (em1 - z) / (z * z);
        let p3 = (em1 - z - 0.5 * z * z) / (z * z * z);
        (p1, p2, p3)
    }
}

/// Per-mode constants for one step of size `h` with linear rate `c`
/// (`u' = c u + N`).
#[derive(Debug, Clone)]
pub(crate) struct EtdCoefficients {
    pub e: Vec<f64>,
    pub e2: Vec<f64>,
    pub q: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub f3: Vec<f64>,
}

impl EtdCoefficients {
    pub(crate) fn new(rates: &[f64], h: f64) -> Self {
        let n = rates.len();
        let mut out = Self {
            e: Vec::with_capacity(n),
            e2: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            f1: Vec::with_capacity(n),
            f2: Vec::with_capacity(n),
            f3: Vec::with_capacity(n),
        };
        for &c in rates {
            let z = c * h;
            let (p1, p2, p3) = phi123(z);
            let (half1, _, _) = phi123(0.5 * z);
            out.e.push(z.exp());
            out.e2.push((0.5 * z).exp());
            out.q.push(0.5 * h * half1);
            out.f1.push(h * (p1 - 3.0 * p2 + 4.0 * p3));
            out.f2.push(h * (p2 - 2.0 * p3));
            out.f3.push(h * (4.0 * p3 - p2));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(z: f64) -> (f64, f64, f64) {
        let e = z.exp();
        (
            (e - 1.0) / z,
            (e - 1.0 - z) / (z * z),
            (e - 1.0 - z - z * z / 2.0) / (z * z * z),
        )
    }

    #[test]
    fn series_and_direct_branches_meet() {
        // inside the series branch the direct formula is still accurate to
        // ~1e-12 for φ₃, so both must agree there
        for z in [-0.49, -0.2, 0.3, 0.49] {
            let (a, b) = (phi123(z), direct(z));
            assert!((a.0 - b.0).abs() < 1e-14);
            assert!((a.1 - b.1).abs() < 1e-13);
            assert!((a.2 - b.2).abs() < 1e-12);
        }
        assert_eq!(phi123(0.0), (1.0, 0.5, 1.0 / 6.0));
        for z in [-40.0, -3.0, -0.7, 0.8, 2.5] {
            let (a, b) = (phi123(z), direct(z));
            assert!((a.0 - b.0).abs() < 1e-13 * b.0.abs().max(1.0));
            assert!((a.1 - b.1).abs() < 1e-12 * b.1.abs().max(1.0));
            assert!((a.2 - b.2).abs() < 1e-11 * b.2.abs().max(1.0));
        }
    }

    #[test]
    fn small_argument_is_stable() {
        // The direct formula loses all digits here; the series must not.
        let (p1, p2, p3) = phi123(1e-9);
        assert!((p1 - 1.0).abs() < 1e-8);
        assert!((p2 - 0.5).abs() < 1e-8);
        assert!((p3 - 1.0 / 6.0).abs() < 1e-8);
    }

    #[test]
    fn zero_rate_gives_classical_weights() {
        // c = 0 reduces to classical RK4: f1 = f3 = h/6, 2 f2 = h/3.
        let k = EtdCoefficients::new(&[0.0], 0.1);
        assert_eq!(k.e[0], 1.0);
        assert!((k.f1[0] - 0.1 / 6.0).abs() < 1e-17);
        assert!((2.0 * k.f2[0] - 0.1 / 3.0).abs() < 1e-17);
        assert!((k.f3[0] - 0.1 / 6.0).abs() < 1e-17);
        assert!((k.q[0] - 0.05).abs() < 1e-17);
    }
}
