//! Closed-form energy and Cauchy stress for simple and generalized shear of a
//! Mooney–Rivlin unit cube.
//!
//! Written independently of [`crate::materials`] so that comparisons against the
//! finite element solution check two separate derivations.

use serde::{Deserialize, Serialize};

use crate::linalg::Mat3;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShearKind {
    /// `u = (k y, 0, 0)`.
    Simple,
    /// `u = (k y², 0, 0)`.
    Generalized,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShearOracle {
    pub k: f64,
    pub c1: f64,
    pub c2: f64,
    pub kind: ShearKind,
}

impl ShearOracle {
    pub fn new(kind: ShearKind, k: f64, c1: f64, c2: f64) -> Self {
        ShearOracle { k, c1, c2, kind }
    }

    /// Local shear amount: `k` for simple shear, `2ky` for generalized shear.
    pub fn local_shear(&self, y: f64) -> f64 {
        match self.kind {
            ShearKind::Simple => self.k,
            ShearKind::Generalized => 2.0 * self.k * y,
        }
    }

    /// Displacement expressions `(u_x, u_y, u_z)` for the boundary condition.
    pub fn displacement_exprs(&self, sign: f64) -> [String; 3] {
        let ux = match self.kind {
            ShearKind::Simple => format!("y*{:?}", sign * self.k),
            ShearKind::Generalized => format!("y^2*{:?}", sign * self.k),
        };
        [ux, "0".into(), "0".into()]
    }

    pub fn displacement(&self, p: &[f64; 3]) -> [f64; 3] {
        match self.kind {
            ShearKind::Simple => [self.k * p[1], 0.0, 0.0],
            ShearKind::Generalized => [self.k * p[1] * p[1], 0.0, 0.0],
        }
    }
}

fn simple_energy(k: f64, c1: f64, c2: f64) -> f64 {
    k * k * (c1 + c2)
}

fn simple_cauchy(k: f64, c1: f64, c2: f64) -> Mat3 {
    let k2 = k * k;
    let mut s = Mat3::zeros();
    s.0[0][0] = k2 * (2.0 * c2 + 4.0 * c1) / 3.0;
    s.0[1][1] = -k2 * (4.0 * c2 + 2.0 * c1) / 3.0;
    s.0[2][2] = k2 * (2.0 * c2 - 2.0 * c1) / 3.0;
    s.0[0][1] = k * (2.0 * c2 + 2.0 * c1);
    s.0[1][0] = s.0[0][1];
    s
}

/// Energy density: the uniform value for simple shear, the unit-cube average
/// for generalized shear.
pub fn oracle_energy(o: &ShearOracle) -> f64 {
    match o.kind {
        ShearKind::Simple => simple_energy(o.k, o.c1, o.c2),
        ShearKind::Generalized => 4.0 * o.k * o.k * (o.c1 + o.c2) / 3.0,
    }
}

/// Energy density at height `y` (independent of `y` for simple shear).
pub fn oracle_energy_at(o: &ShearOracle, y: f64) -> f64 {
    simple_energy(o.local_shear(y), o.c1, o.c2)
}

/// Cauchy stress. For generalized shear, `Some(y)` gives the pointwise value and
/// `None` the unit-cube average.
pub fn oracle_cauchy(o: &ShearOracle, y: Option<f64>) -> Mat3 {
    match (o.kind, y) {
        (ShearKind::Simple, _) => simple_cauchy(o.k, o.c1, o.c2),
        (ShearKind::Generalized, Some(y)) => simple_cauchy(o.local_shear(y), o.c1, o.c2),
        (ShearKind::Generalized, None) => {
            let (k, c1, c2) = (o.k, o.c1, o.c2);
            let k2 = k * k;
            let mut s = Mat3::zeros();
            s.0[0][0] = k2 * (8.0 * c2 + 16.0 * c1) / 9.0;
            s.0[1][1] = -k2 * (16.0 * c2 + 8.0 * c1) / 9.0;
            s.0[2][2] = k2 * (8.0 * c2 - 8.0 * c1) / 9.0;
            s.0[0][1] = k * (2.0 * c2 + 2.0 * c1);
            s.0[1][0] = s.0[0][1];
            s
        }
    }
}

/// Result of [`field_relative_error`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldError {
    pub value: f64,
    /// False when the oracle norm vanished and `value` is the absolute error.
    pub relative: bool,
}

/// `‖fe − oracle‖_L² / ‖oracle‖_L²` from samples carrying `components` values
/// each, with one quadrature weight per sample.
pub fn field_relative_error(fe: &[f64], oracle: &[f64], weights: &[f64], components: usize) -> Result<FieldError> {
    if fe.len() != oracle.len() || components == 0 || fe.len() != weights.len() * components {
        return Err(Error::invalid("sample arrays do not match"));
    }
    let mut diff = 0.0;
    let mut norm = 0.0;
    for (i, (a, b)) in fe.iter().zip(oracle).enumerate() {
        let w = weights[i / components];
        diff += w * (a - b) * (a - b);
        norm += w * b * b;
    }
    if norm == 0.0 {
        return Ok(FieldError {
            value: diff.sqrt(),
            relative: false,
        });
    }
    Ok(FieldError {
        value: (diff / norm).sqrt(),
        relative: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let s = ShearOracle::new(ShearKind::Simple, 0.5, 1.0, 1.0);
        assert_eq!(oracle_energy(&s), 0.5);
        let sig = oracle_cauchy(&s, None);
        assert!((sig.0[0][0] - 0.5).abs() < 1e-15);
        assert!((sig.0[1][1] + 0.5).abs() < 1e-15);
        assert_eq!(sig.0[2][2], 0.0);
        assert_eq!(sig.0[0][1], 2.0);
        assert_eq!(oracle_energy(&ShearOracle::new(ShearKind::Simple, 0.0, 1.0, 1.0)), 0.0);

        let g = ShearOracle::new(ShearKind::Generalized, 0.5, 1.0, 1.0);
        assert!((oracle_energy(&g) - 2.0 / 3.0).abs() < 1e-15);
        let sig = oracle_cauchy(&g, None);
        assert!((sig.0[0][0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((sig.0[1][1] + 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(sig.0[2][2], 0.0);
        assert_eq!(sig.0[0][1], 2.0);
        for kind in [ShearKind::Simple, ShearKind::Generalized] {
            let z = ShearOracle::new(kind, 0.0, 1.3, 0.2);
            assert_eq!(oracle_cauchy(&z, Some(0.4)).norm(), 0.0);
            assert_eq!(oracle_cauchy(&z, None).norm(), 0.0);
        }
    }

    #[test]
    fn averages_of_pointwise_values() {
        // Simpson's rule is exact for the quadratic-in-y integrands
        let g = ShearOracle::new(ShearKind::Generalized, 0.7, 0.9, 0.4);
        let avg = |f: &dyn Fn(f64) -> f64| (f(0.0) + 4.0 * f(0.5) + f(1.0)) / 6.0;
        assert!((avg(&|y| oracle_energy_at(&g, y)) - oracle_energy(&g)).abs() < 1e-14);
        let mean = oracle_cauchy(&g, None);
        for i in 0..3 {
            for j in 0..3 {
                let a = avg(&|y| oracle_cauchy(&g, Some(y)).0[i][j]);
                assert!((a - mean.0[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn relative_error() {
        let o = [1.0, -2.0, 3.0, 0.5];
        let w = [0.2, 0.3, 0.1, 0.4];
        assert_eq!(field_relative_error(&o, &o, &w, 1).unwrap().value, 0.0);
        let fe: Vec<f64> = o.iter().map(|v| 1.01 * v).collect();
        let e = field_relative_error(&fe, &o, &w, 1).unwrap();
        assert!(e.relative && (e.value - 0.01).abs() < 1e-12);
        let e = field_relative_error(&[0.1, 0.2], &[0.0, 0.0], &[1.0], 2).unwrap();
        assert!(!e.relative);
        assert!(field_relative_error(&[1.0], &[1.0, 2.0], &[1.0], 1).is_err());
    }

    proptest! {
        #[test]
        fn simple_trace_vanishes(k in -2.0f64..2.0, c1 in 0.0f64..5.0, c2 in 0.0f64..5.0) {
            let s = oracle_cauchy(&ShearOracle::new(ShearKind::Simple, k, c1, c2), None);
            prop_assert!(s.trace().abs() < 1e-12 * (1.0 + k * k * (c1 + c2)));
            prop_assert_eq!(s.0[0][2], 0.0);
            prop_assert_eq!(s.0[1][2], 0.0);
        }

        #[test]
        fn generalized_is_local_simple(k in -2.0f64..2.0, y in 0.0f64..1.0, c1 in 0.0f64..5.0, c2 in 0.0f64..5.0) {
            let g = ShearOracle::new(ShearKind::Generalized, k, c1, c2);
            let s = ShearOracle::new(ShearKind::Simple, 2.0 * k * y, c1, c2);
            prop_assert_eq!(oracle_cauchy(&g, Some(y)), oracle_cauchy(&s, None));
            prop_assert_eq!(oracle_energy_at(&g, y), oracle_energy(&s));
        }
    }
}
