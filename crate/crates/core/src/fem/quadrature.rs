use crate::{Error, Result};

/// Polynomial degree used for cell integrals during assembly.
pub const DEFAULT_DEGREE: usize = 4;

/// Points in reference coordinates and weights in reference measure
/// (tetrahedron volume 1/6, triangle area 1/2).
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&[f64; 3]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }
}

/// All distinct permutations of barycentric coordinates `b`, converted to
/// reference coordinates (dropping the first barycentric entry).
fn orbit(b: [f64; 4], weight: f64, rule: &mut QuadratureRule) {
    let mut seen: Vec<[u64; 4]> = Vec::new();
    let idx = [0usize, 1, 2, 3];
    for a in idx {
        for c in idx {
            for d in idx {
                for e in idx {
                    let perm = [a, c, d, e];
                    let mut used = [false; 4];
                    if perm.iter().any(|&k| std::mem::replace(&mut used[k], true)) {
                        continue;
                    }
                    let p = perm.map(|k| b[k]);
                    let key = p.map(f64::to_bits);
                    if seen.contains(&key) {
                        continue;
                    }
                    seen.push(key);
                    rule.points.push([p[1], p[2], p[3]]);
                    rule.weights.push(weight);
                }
            }
        }
    }
}

/// Symmetric rule on the reference tetrahedron exact for polynomials of total
/// degree `degree` (1 to 6). Degrees 3–5 share a 14-point degree-5 rule; degree
/// 6 uses a 24-point rule. All weights are positive.
pub fn quadrature_tet(degree: usize) -> Result<QuadratureRule> {
    let mut r = QuadratureRule {
        points: Vec::new(),
        weights: Vec::new(),
    };
    match degree {
        1 => orbit([0.25; 4], 1.0 / 6.0, &mut r),
        2 => {
            let a = 0.138_196_601_125_010_5;
            orbit([a, a, a, 1.0 - 3.0 * a], 1.0 / 24.0, &mut r);
        }
        3..=5 => {
            let a1 = 0.092_735_250_310_891_2;
            let a2 = 0.310_885_919_263_300_6;
            let b = 0.045_503_704_125_649_6;
            orbit([a1, a1, a1, 1.0 - 3.0 * a1], 0.012_248_840_519_393_66, &mut r);
            orbit([a2, a2, a2, 1.0 - 3.0 * a2], 0.018_781_320_953_002_64, &mut r);
            orbit([b, b, 0.5 - b, 0.5 - b], 0.007_091_003_462_846_911, &mut r);
        }
        6 => {
            for (a, w) in [
                (0.214_602_871_259_151_7, 0.006_653_791_709_694_645),
                (0.040_673_958_534_611_35, 0.001_679_535_175_886_776),
                (0.322_337_890_142_275_7, 0.009_226_196_923_942_399),
            ] {
                orbit([a, a, a, 1.0 - 3.0 * a], w, &mut r);
            }
            let b = 0.063_661_001_875_017_5;
            let c = 0.269_672_331_458_315_9;
            orbit([b, b, c, 1.0 - 2.0 * b - c], 27.0 / 3360.0, &mut r);
        }
        _ => {
            return Err(Error::invalid(format!(
                "tetrahedron quadrature degree must be in 1..=6, got {degree}"
            )))
        }
    }
    Ok(r)
}

/// Six-point degree-4 rule on the reference triangle `(0,0),(1,0),(0,1)`;
/// the third coordinate of each point is zero.
pub fn quadrature_triangle() -> QuadratureRule {
    let mut r = QuadratureRule {
        points: Vec::new(),
        weights: Vec::new(),
    };
    for (a, w) in [
        (0.445_948_490_915_965, 0.223_381_589_678_011),
        (0.091_576_213_509_771, 0.109_951_743_655_322),
    ] {
        let b = 1.0 - 2.0 * a;
        for p in [[a, a], [a, b], [b, a]] {
            r.points.push([p[0], p[1], 0.0]);
            r.weights.push(0.5 * w);
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// ∫ x^i y^j z^k over the reference tetrahedron.
    fn monomial_integral(i: u32, j: u32, k: u32) -> f64 {
        factorial(i) * factorial(j) * factorial(k) / factorial(i + j + k + 3)
    }

    #[test]
    fn exact_for_all_monomials() {
        for degree in 1..=6 {
            let rule = quadrature_tet(degree).unwrap();
            for i in 0..=degree as u32 {
                for j in 0..=(degree as u32 - i) {
                    for k in 0..=(degree as u32 - i - j) {
                        let q = rule.integrate(|p| p[0].powi(i as i32) * p[1].powi(j as i32) * p[2].powi(k as i32));
                        let exact = monomial_integral(i, j, k);
                        assert!((q - exact).abs() < 1e-14, "deg {degree} x^{i}y^{j}z^{k}: {q} vs {exact}");
                    }
                }
            }
        }
    }

    #[test]
    fn weights_and_points() {
        for degree in 1..=6 {
            let rule = quadrature_tet(degree).unwrap();
            let sum: f64 = rule.weights.iter().sum();
            assert!((sum - 1.0 / 6.0).abs() < 1e-15);
            for p in &rule.points {
                assert!(p.iter().all(|&c| c >= 0.0) && p.iter().sum::<f64>() <= 1.0 + 1e-15);
            }
        }
        let r = quadrature_tet(1).unwrap();
        assert_eq!(r.points, vec![[0.25; 3]]);
        assert_eq!(r.weights, vec![1.0 / 6.0]);
        assert_eq!(quadrature_tet(4).unwrap().len(), 14);
    }

    #[test]
    fn x_squared() {
        let r = quadrature_tet(2).unwrap();
        assert!((r.integrate(|p| p[0] * p[0]) - 1.0 / 60.0).abs() < 1e-14);
    }

    #[test]
    fn degree_out_of_range() {
        assert!(quadrature_tet(0).is_err());
        assert!(quadrature_tet(7).is_err());
    }

    #[test]
    fn triangle_rule_degree_four() {
        let r = quadrature_triangle();
        for i in 0..=4u32 {
            for j in 0..=(4 - i) {
                let q = r.integrate(|p| p[0].powi(i as i32) * p[1].powi(j as i32));
                let exact = factorial(i) * factorial(j) / factorial(i + j + 2);
                assert!((q - exact).abs() < 1e-14, "x^{i} y^{j}");
            }
        }
    }
}
