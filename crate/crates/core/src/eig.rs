//! Eigenvalues of complex matrices of order at most three via their
//! characteristic polynomials.

use num_complex::Complex64;

/// Dense complex matrix of order 1, 2 or 3 (row-major, fixed storage).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallMatrix {
    n: usize,
    a: [[Complex64; 3]; 3],
}

impl SmallMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!((1..=3).contains(&n), "order must be 1, 2 or 3");
        Self {
            n,
            a: [[Complex64::default(); 3]; 3],
        }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.a[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.a[i][j] = v;
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self.a[i][i]).sum()
    }

    pub fn determinant(&self) -> Complex64 {
        let a = &self.a;
        match self.n {
            1 => a[0][0],
            2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
            _ => {
                a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                    - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                    + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
            }
        }
    }

    fn principal_minors_2(&self) -> Complex64 {
        let a = &self.a;
        a[0][0] * a[1][1] - a[0][1] * a[1][0] + a[0][0] * a[2][2] - a[0][2] * a[2][0]
            + a[1][1] * a[2][2]
            - a[1][2] * a[2][1]
    }

    /// Eigenvalues with algebraic multiplicity.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        match self.n {
            1 => vec![self.a[0][0]],
            2 => {
                // centred form avoids cancellation for nearly equal roots
                let a = &self.a;
                let half = (a[0][0] + a[1][1]) * 0.5;
                let d = (a[0][0] - a[1][1]) * 0.5;
                let disc = (d * d + a[0][1] * a[1][0]).sqrt();
                vec![half + disc, half - disc]
            }
            _ => {
                let a = -self.trace();
                let b = self.principal_minors_2();
                let c = -self.determinant();
                cubic_roots(a, b, c).to_vec()
            }
        }
    }
}

/// Roots of `x³ + a x² + b x + c` (Cardano, then Newton polish).
fn cubic_roots(a: Complex64, b: Complex64, c: Complex64) -> [Complex64; 3] {
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = a * a * a * (2.0 / 27.0) - a * b / 3.0 + c;
    let disc = (q * q * 0.25 + p * p * p / 27.0).sqrt();
    let w1 = -q * 0.5 + disc;
    let w2 = -q * 0.5 - disc;
    let w = if w1.norm() >= w2.norm() { w1 } else { w2 };
    let omega = Complex64::new(-0.5, 3f64.sqrt() / 2.0);
    let mut roots = [Complex64::default(); 3];
    if w.norm() == 0.0 {
        // p = q = 0: triple root
        roots = [-shift; 3];
    } else {
        let u = w.powf(1.0 / 3.0);
        let mut uk = u;
        for r in roots.iter_mut() {
            let v = -p / (uk * 3.0);
            *r = uk + v - shift;
            uk *= omega;
        }
    }
    let poly = |x: Complex64| ((x + a) * x + b) * x + c;
    let dpoly = |x: Complex64| (x * 3.0 + a * 2.0) * x + b;
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let d = dpoly(*r);
            if d.norm() == 0.0 {
                break;
            }
            let step = poly(*r) / d;
            if !(step.re.is_finite() && step.im.is_finite()) {
                break;
            }
            let next = *r - step;
            if poly(next).norm() < poly(*r).norm() {
                *r = next;
            } else {
                break;
            }
        }
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn residual(m: &SmallMatrix, lambda: Complex64) -> f64 {
        let mut shifted = *m;
        for i in 0..m.order() {
            shifted.set(i, i, m.get(i, i) - lambda);
        }
        shifted.determinant().norm()
    }

    #[test]
    fn diagonal_and_triangular() {
        let mut m = SmallMatrix::zeros(3);
        m.set(0, 0, c(1.0, 0.0));
        m.set(1, 1, c(-2.0, 0.5));
        m.set(2, 2, c(3.0, 0.0));
        m.set(0, 2, c(7.0, 1.0));
        let mut e = m.eigenvalues();
        e.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap());
        assert!((e[0] - c(-2.0, 0.5)).norm() < 1e-12);
        assert!((e[1] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((e[2] - c(3.0, 0.0)).norm() < 1e-12);

        let m = SmallMatrix::zeros(3);
        assert!(m.eigenvalues().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn repeated_root() {
        let mut m = SmallMatrix::zeros(3);
        for i in 0..3 {
            m.set(i, i, c(0.25, 0.0));
        }
        for z in m.eigenvalues() {
            assert!((z - c(0.25, 0.0)).norm() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn roots_satisfy_invariants(
            n in 1usize..=3,
            vals in proptest::collection::vec(-3.0f64..3.0, 18),
        ) {
            let mut m = SmallMatrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    m.set(i, j, c(vals[2 * (3 * i + j)], vals[2 * (3 * i + j) + 1]));
                }
            }
            let e = m.eigenvalues();
            prop_assert_eq!(e.len(), n);
            let sum: Complex64 = e.iter().sum();
            let prod: Complex64 = e.iter().product();
            prop_assert!((sum - m.trace()).norm() < 1e-9);
            prop_assert!((prod - m.determinant()).norm() < 1e-8);
            for z in e {
                prop_assert!(residual(&m, z) < 1e-8);
            }
        }
    }
}
