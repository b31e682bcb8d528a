/// Gauss–Hermite rule for `∫ e^{-x²} f(x) dx`.
///
/// Nodes come from Newton iteration on the orthonormal Hermite recurrence,
/// seeded with the usual asymptotic guesses for the largest roots.
#[derive(Clone, Debug)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Hermite order must be positive");
        const PI_M4: f64 = 0.751_125_544_464_942_5; // π^(-1/4)
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let nf = n as f64;
        let m = n.div_ceil(2);
        let mut z = 0.0_f64;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = PI_M4;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        if n % 2 == 1 {
            x[n / 2] = 0.0;
        }
        GaussHermite { nodes: x, weights: w }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn weights_sum_to_sqrt_pi() {
        for n in [2, 3, 5, 20, 64, 100] {
            let r = GaussHermite::new(n);
            let s: f64 = r.weights().iter().sum();
            assert!((s - PI.sqrt()).abs() < 1e-13, "n={n}: {s}");
        }
    }

    #[test]
    fn two_point_rule_is_textbook() {
        let r = GaussHermite::new(2);
        let x = 0.5_f64.sqrt();
        assert!((r.nodes()[0] - x).abs() < 1e-15);
        assert!((r.nodes()[1] + x).abs() < 1e-15);
        assert!((r.weights()[0] - PI.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn polynomial_moments_are_exact() {
        // ∫ x^{2k} e^{-x²} = Γ(k + 1/2)
        let r = GaussHermite::new(64);
        let mut gamma_half = PI.sqrt();
        for k in 0..20 {
            let q = r.integrate(|x| x.powi(2 * k));
            assert!((q / gamma_half - 1.0).abs() < 1e-11, "k={k}");
            assert!(r.integrate(|x| x.powi(2 * k + 1)).abs() < 1e-9 * gamma_half.max(1.0));
            gamma_half *= k as f64 + 0.5;
        }
    }

    #[test]
    fn cosine_integral() {
        let r = GaussHermite::new(20);
        let q = r.integrate(f64::cos);
        assert!((q - PI.sqrt() * (-0.25_f64).exp()).abs() < 1e-14);
    }
}
