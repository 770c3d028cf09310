//! Quadrature rules and special functions.

use nalgebra::DMatrix;
use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..(n + 1) / 2 {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Composite rule over `panels` equal sub-intervals.
    pub fn integrate_composite<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: F,
    ) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let lo = a + p as f64 * h;
                self.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

pub fn beta(a: f64, b: f64) -> f64 {
    // Valid for any non-integer-pole arguments, including negative ones.
    gamma(a) * gamma(b) / gamma(a + b)
}

/// Riemann zeta for real `s != 1` with `s > -1`, via Euler–Maclaurin summation.
pub fn zeta(s: f64) -> f64 {
    assert!(s != 1.0 && s > -1.0, "zeta evaluated outside supported range");
    const N: usize = 20;
    // B_{2j}/(2j)!
    const B: [f64; 6] = [
        1.0 / 6.0 / 2.0,
        -1.0 / 30.0 / 24.0,
        1.0 / 42.0 / 720.0,
        -1.0 / 30.0 / 40320.0,
        5.0 / 66.0 / 3628800.0,
        -691.0 / 2730.0 / 479001600.0,
    ];
    let n = N as f64;
    let mut sum: f64 = (1..N).map(|k| (k as f64).powf(-s)).sum();
    sum += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    // rising product s(s+1)...(s+2j-2) times N^{-s-2j+1}
    let mut rising = s;
    for (j, b) in B.iter().enumerate() {
        let order = 2 * j + 1;
        sum += b * rising * n.powf(-s - order as f64);
        rising *= (s + order as f64) * (s + order as f64 + 1.0);
    }
    sum
}

/// Constant `C` with `∫_R e^{i p x} |x|^{α-1} dx = C |p|^{-α}` for `0 < α < 1`.
/// `∫_{R^ν} e^{i(p,x)} |x|^{α−ν} dx = C |p|^{-α}` with
/// `C = π^{ν/2} 2^α Γ(α/2) / Γ((ν−α)/2)`.
pub fn radial_fourier_constant(alpha: f64, nu: usize) -> f64 {
    let nu = nu as f64;
    PI.powf(nu / 2.0) * 2f64.powf(alpha) * gamma(alpha / 2.0) / gamma((nu - alpha) / 2.0)
}

/// Gauss–Hermite rule for the standard normal law (weights sum to one),
/// from the eigenvalues of the Jacobi matrix of the probabilists' polynomials.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let jacobi = DMatrix::from_fn(n, n, |i, j| if i.abs_diff(j) == 1 { (i.max(j) as f64).sqrt() } else { 0.0 });
        let eig = jacobi.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> =
            (0..n).map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2))).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        GaussHermite { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1).collect() }
    }

    /// `E f(X, Y)` for standard normals with correlation `r`.
    pub fn expect_pair<F: FnMut(f64, f64) -> f64>(&self, r: f64, mut f: F) -> f64 {
        let s = (1.0 - r * r).max(0.0).sqrt();
        let mut acc = 0.0;
        for (&z1, &w1) in self.nodes.iter().zip(&self.weights) {
            for (&z2, &w2) in self.nodes.iter().zip(&self.weights) {
                acc += w1 * w2 * f(z1, r * z1 + s * z2);
            }
        }
        acc
    }
}

/// The `ν = 1` case in the form `2Γ(α) cos(πα/2)`.
pub fn power_law_fourier_constant(alpha: f64) -> f64 {
    2.0 * gamma(alpha) * (PI * alpha / 2.0).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(8);
        let v = gl.integrate(0.0, 2.0, |x| x.powi(15) + 3.0 * x * x);
        assert_relative_eq!(v, 2f64.powi(16) / 16.0 + 8.0, max_relative = 1e-13);
        assert_relative_eq!(gl.weights.iter().sum::<f64>(), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn gauss_hermite_moments() {
        let gh = GaussHermite::new(12);
        let m = |k: i32| gh.nodes.iter().zip(&gh.weights).map(|(x, w)| w * x.powi(k)).sum::<f64>();
        assert_relative_eq!(m(0), 1.0, max_relative = 1e-13);
        assert_relative_eq!(m(2), 1.0, max_relative = 1e-12);
        assert_relative_eq!(m(6), 15.0, max_relative = 1e-12);
        assert_relative_eq!(gh.expect_pair(0.3, |x, y| x * y), 0.3, max_relative = 1e-12);
    }

    #[test]
    fn zeta_known_values() {
        assert_relative_eq!(zeta(2.0), PI * PI / 6.0, max_relative = 1e-12);
        assert_relative_eq!(zeta(0.5), -1.4603545088095868, max_relative = 1e-10);
        assert_relative_eq!(zeta(0.0), -0.5, max_relative = 1e-10);
    }

    #[test]
    fn zeta_matches_direct_partial_sums_oracle() {
        // zeta(s) = lim (sum_{n<K} n^{-s} - K^{1-s}/(1-s)) for 0<s<1, with a K^{-s}/2 midpoint correction
        let s = 0.8;
        let k = 2_000_000usize;
        let partial: f64 = (1..k).map(|n| (n as f64).powf(-s)).sum();
        let approx = partial + (k as f64).powf(1.0 - s) / (s - 1.0) + 0.5 * (k as f64).powf(-s);
        assert_relative_eq!(zeta(s), approx, max_relative = 1e-9);
    }

    #[test]
    fn fourier_constant_matches_gauss_legendre_oracle() {
        // ∫_R e^{ix}|x|^{α-1}dx = 2∫_0^∞ cos(x) x^{α-1} dx; substitute x = u^{1/α}, damp the tail analytically.
        let alpha = 0.4;
        let gl = GaussLegendre::new(40);
        // ∫_0^X cos(x) x^{α-1} dx with X = 2000π, plus tail ~ -sin(X)X^{α-1}... = 0 at multiples of π, next term
        let xmax = 2000.0 * PI;
        let head = gl.integrate_composite(0.0, xmax.powf(alpha), 4000, |u| {
            (u.powf(1.0 / alpha)).cos() / alpha
        });
        // tail: ∫_X^∞ cos x x^{a-1} = -sin X X^{a-1} + (a-1)∫ ... ≈ (1-α) X^{α-2} cos X (leading), sin X = 0
        let tail = -(1.0 - alpha) * xmax.powf(alpha - 2.0);
        assert_relative_eq!(2.0 * (head + tail), power_law_fourier_constant(alpha), max_relative = 1e-6);
    }

    #[test]
    fn radial_constant_reduces_to_line_formula() {
        for a in [0.1, 0.4, 0.7] {
            let (x, y) = (radial_fourier_constant(a, 1), power_law_fourier_constant(a));
            assert!((x - y).abs() < 1e-12 * y, "{x} {y}");
        }
    }
}
