use crate::{Error, Result};

/// Local edge numbering of the tetrahedron; P2 edge node `4 + e` sits on `TET_EDGES[e]`.
pub const TET_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];
/// Local edge numbering of the triangle; P2 edge node `3 + e` sits on `TRI_EDGES[e]`.
pub const TRI_EDGES: [[usize; 2]; 3] = [[0, 1], [1, 2], [0, 2]];

/// Basis values and reference gradients, indexed `[point][basis]`.
#[derive(Clone, Debug)]
pub struct Tabulation {
    pub values: Vec<Vec<f64>>,
    pub gradients: Vec<Vec<[f64; 3]>>,
}

impl Tabulation {
    pub fn num_basis(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }
}

const BARY_GRAD: [[f64; 3]; 4] = [
    [-1.0, -1.0, -1.0],
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
];

/// Lagrange basis of degree 1 (4 functions) or 2 (10 functions) on the reference
/// tetrahedron, evaluated at `points`.
pub fn tabulate_basis(degree: usize, points: &[[f64; 3]]) -> Result<Tabulation> {
    if degree != 1 && degree != 2 {
        return Err(Error::invalid(format!("Lagrange degree must be 1 or 2, got {degree}")));
    }
    let mut values = Vec::with_capacity(points.len());
    let mut gradients = Vec::with_capacity(points.len());
    for p in points {
        let l = [1.0 - p[0] - p[1] - p[2], p[0], p[1], p[2]];
        let (v, g) = if degree == 1 {
            (l.to_vec(), BARY_GRAD.to_vec())
        } else {
            let mut v = Vec::with_capacity(10);
            let mut g = Vec::with_capacity(10);
            for i in 0..4 {
                v.push(l[i] * (2.0 * l[i] - 1.0));
                g.push(BARY_GRAD[i].map(|d| (4.0 * l[i] - 1.0) * d));
            }
            for [i, j] in TET_EDGES {
                v.push(4.0 * l[i] * l[j]);
                g.push(std::array::from_fn(|k| 4.0 * (l[j] * BARY_GRAD[i][k] + l[i] * BARY_GRAD[j][k])));
            }
            (v, g)
        };
        values.push(v);
        gradients.push(g);
    }
    Ok(Tabulation { values, gradients })
}

/// Lagrange basis values on the reference triangle (degree 1: 3, degree 2: 6).
pub fn tabulate_triangle_basis(degree: usize, points: &[[f64; 3]]) -> Result<Vec<Vec<f64>>> {
    if degree != 1 && degree != 2 {
        return Err(Error::invalid(format!("Lagrange degree must be 1 or 2, got {degree}")));
    }
    Ok(points
        .iter()
        .map(|p| {
            let l = [1.0 - p[0] - p[1], p[0], p[1]];
            if degree == 1 {
                l.to_vec()
            } else {
                let mut v: Vec<f64> = l.iter().map(|&li| li * (2.0 * li - 1.0)).collect();
                v.extend(TRI_EDGES.iter().map(|&[i, j]| 4.0 * l[i] * l[j]));
                v
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, seed: u64) -> Vec<[f64; 3]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| loop {
                let p: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
                if p.iter().sum::<f64>() <= 1.0 {
                    break p;
                }
            })
            .collect()
    }

    fn nodes(degree: usize) -> Vec<[f64; 3]> {
        let v = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let mut n = v.to_vec();
        if degree == 2 {
            for [i, j] in TET_EDGES {
                n.push(std::array::from_fn(|k| 0.5 * (v[i][k] + v[j][k])));
            }
        }
        n
    }

    #[test]
    fn p1_centroid() {
        let t = tabulate_basis(1, &[[0.25; 3]]).unwrap();
        assert_eq!(t.values[0], vec![0.25; 4]);
    }

    #[test]
    fn kronecker_property() {
        for degree in [1, 2] {
            let n = nodes(degree);
            let t = tabulate_basis(degree, &n).unwrap();
            for (a, row) in t.values.iter().enumerate() {
                for (b, v) in row.iter().enumerate() {
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!((v - expect).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        let pts = random_points(100, 7);
        for degree in [1, 2] {
            let t = tabulate_basis(degree, &pts).unwrap();
            for (v, g) in t.values.iter().zip(&t.gradients) {
                assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-14);
                for k in 0..3 {
                    assert!(g.iter().map(|gi| gi[k]).sum::<f64>().abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let pts = random_points(10, 3);
        let h = 1e-6;
        for degree in [1, 2] {
            let t = tabulate_basis(degree, &pts).unwrap();
            for (ip, p) in pts.iter().enumerate() {
                for k in 0..3 {
                    let mut pp = *p;
                    let mut pm = *p;
                    pp[k] += h;
                    pm[k] -= h;
                    let vp = tabulate_basis(degree, &[pp]).unwrap();
                    let vm = tabulate_basis(degree, &[pm]).unwrap();
                    for a in 0..t.num_basis() {
                        let fd = (vp.values[0][a] - vm.values[0][a]) / (2.0 * h);
                        assert!((fd - t.gradients[ip][a][k]).abs() < 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn p2_reproduces_quadratics() {
        let q = |p: &[f64; 3]| p[0] * p[0] + p[1] * p[2];
        let coeffs: Vec<f64> = nodes(2).iter().map(q).collect();
        let pts = random_points(20, 11);
        let t = tabulate_basis(2, &pts).unwrap();
        for (p, v) in pts.iter().zip(&t.values) {
            let interp: f64 = v.iter().zip(&coeffs).map(|(a, b)| a * b).sum();
            assert!((interp - q(p)).abs() < 1e-13);
        }
    }

    #[test]
    fn p1_reproduces_linears() {
        let f = |p: &[f64; 3]| 0.3 - 2.0 * p[0] + p[1] + 5.0 * p[2];
        let coeffs: Vec<f64> = nodes(1).iter().map(f).collect();
        let pts = random_points(20, 5);
        let t = tabulate_basis(1, &pts).unwrap();
        for (p, v) in pts.iter().zip(&t.values) {
            let interp: f64 = v.iter().zip(&coeffs).map(|(a, b)| a * b).sum();
            assert!((interp - f(p)).abs() < 1e-13);
        }
    }

    #[test]
    fn triangle_basis_unity() {
        for degree in [1, 2] {
            let v = tabulate_triangle_basis(degree, &[[0.2, 0.3, 0.0], [0.0, 0.0, 0.0]]).unwrap();
            for row in v {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            }
        }
        assert!(tabulate_basis(3, &[[0.0; 3]]).is_err());
    }
}
