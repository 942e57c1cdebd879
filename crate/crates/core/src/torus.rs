//! Geometry of the flat torus T^d = R^d/Z^d for d ∈ {1, 2}: points, covectors,
//! lifts, and minimal-lift displacements.
//!
//! Everything downstream works in lifted coordinates and reduces mod Z^d only
//! where a canonical representative is needed (binning, export, distances).

use serde::{Deserialize, Serialize};

/// Largest supported base dimension.
pub const MAX_DIM: usize = 2;

/// A d-vector with d ∈ {1, 2}, stored inline. Unused slots are zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VecD {
    vals: [f64; MAX_DIM],
    dim: usize,
}

impl VecD {
    pub fn new(coords: &[f64]) -> Self {
        assert!(
            (1..=MAX_DIM).contains(&coords.len()),
            "dimension must be 1 or 2, got {}",
            coords.len()
        );
        let mut vals = [0.0; MAX_DIM];
        vals[..coords.len()].copy_from_slice(coords);
        VecD {
            vals,
            dim: coords.len(),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(&[0.0; MAX_DIM][..dim])
    }

    pub fn scalar(x: f64) -> Self {
        Self::new(&[x])
    }

    pub fn pair(x: f64, y: f64) -> Self {
        Self::new(&[x, y])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.vals[..self.dim]
    }

    pub fn get(&self, i: usize) -> f64 {
        debug_assert!(i < self.dim);
        self.vals[i]
    }

    pub fn set(&mut self, i: usize, v: f64) {
        debug_assert!(i < self.dim);
        self.vals[i] = v;
    }

    pub fn dot(&self, other: &VecD) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let mut s = 0.0;
        for i in 0..self.dim {
            s += self.vals[i] * other.vals[i];
        }
        s
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn inf_norm(&self) -> f64 {
        self.as_slice().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn add(&self, other: &VecD) -> VecD {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for i in 0..self.dim {
            out.vals[i] += other.vals[i];
        }
        out
    }

    pub fn sub(&self, other: &VecD) -> VecD {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for i in 0..self.dim {
            out.vals[i] -= other.vals[i];
        }
        out
    }

    pub fn scale(&self, s: f64) -> VecD {
        let mut out = *self;
        for i in 0..self.dim {
            out.vals[i] *= s;
        }
        out
    }

    /// self + s * other
    pub fn add_scaled(&self, s: f64, other: &VecD) -> VecD {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for i in 0..self.dim {
            out.vals[i] += s * other.vals[i];
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|v| v.is_finite())
    }
}

impl std::fmt::Display for VecD {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.as_slice().iter().map(|v| format!("{v}")).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// Symmetric d×d matrix, d ∈ {1, 2}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatD {
    m: [[f64; MAX_DIM]; MAX_DIM],
    dim: usize,
}

impl MatD {
    pub fn zero(dim: usize) -> Self {
        MatD {
            m: [[0.0; MAX_DIM]; MAX_DIM],
            dim,
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut out = Self::zero(dim);
        for i in 0..dim {
            out.m[i][i] = 1.0;
        }
        out
    }

    pub fn from_rows(dim: usize, rows: &[[f64; MAX_DIM]]) -> Self {
        let mut out = Self::zero(dim);
        for (i, r) in rows.iter().take(dim).enumerate() {
            out.m[i][..dim].copy_from_slice(&r[..dim]);
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.dim && j < self.dim);
        self.m[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.dim && j < self.dim);
        self.m[i][j] = v;
    }

    pub fn mat_vec(&self, v: &VecD) -> VecD {
        debug_assert_eq!(self.dim, v.dim());
        let mut out = VecD::zero(self.dim);
        for i in 0..self.dim {
            let mut s = 0.0;
            for j in 0..self.dim {
                s += self.m[i][j] * v.get(j);
            }
            out.set(i, s);
        }
        out
    }

    /// Quadratic form v^T M v.
    pub fn quad(&self, v: &VecD) -> f64 {
        self.mat_vec(v).dot(v)
    }

    /// Eigenvalues of the symmetric matrix, ascending. Closed form for d ≤ 2.
    pub fn sym_eigenvalues(&self) -> (f64, f64) {
        if self.dim == 1 {
            (self.m[0][0], self.m[0][0])
        } else {
            let a = self.m[0][0];
            let b = 0.5 * (self.m[0][1] + self.m[1][0]);
            let c = self.m[1][1];
            let mid = 0.5 * (a + c);
            let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            (mid - rad, mid + rad)
        }
    }

    /// Solve M x = rhs for symmetric positive definite M (direct 1×1/2×2).
    pub fn solve_spd(&self, rhs: &VecD) -> Option<VecD> {
        if self.dim == 1 {
            let a = self.m[0][0];
            if a.abs() < 1e-300 {
                return None;
            }
            Some(VecD::scalar(rhs.get(0) / a))
        } else {
            let (a, b, c, d) = (self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]);
            let det = a * d - b * c;
            if det.abs() < 1e-300 {
                return None;
            }
            let x = (d * rhs.get(0) - b * rhs.get(1)) / det;
            let y = (-c * rhs.get(0) + a * rhs.get(1)) / det;
            Some(VecD::pair(x, y))
        }
    }
}

/// Reduce a coordinate to its canonical representative in [0, 1).
pub fn wrap01(x: f64) -> f64 {
    let r = x - x.floor();
    // x slightly below an integer can round the fractional part up to 1.0.
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Wrap a displacement to the minimal lift in [-0.5, 0.5).
pub fn wrap_half(x: f64) -> f64 {
    wrap01(x + 0.5) - 0.5
}

/// A point of the torus, stored by its canonical representative in [0, 1)^d.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    rep: VecD,
}

impl TorusPoint {
    /// Builds a torus point from arbitrary real coordinates (reduced mod Z^d).
    pub fn new(coords: &[f64]) -> Self {
        let mut rep = VecD::new(coords);
        for i in 0..rep.dim() {
            rep.set(i, wrap01(rep.get(i)));
        }
        TorusPoint { rep }
    }

    pub fn from_vec(v: &VecD) -> Self {
        Self::new(v.as_slice())
    }

    pub fn scalar(q: f64) -> Self {
        Self::new(&[q])
    }

    pub fn dim(&self) -> usize {
        self.rep.dim()
    }

    /// Canonical representative in [0, 1)^d.
    pub fn rep(&self) -> VecD {
        self.rep
    }

    pub fn coords(&self) -> &[f64] {
        self.rep.as_slice()
    }

    /// Minimal-lift displacement from `self` to `other`, componentwise in [-0.5, 0.5).
    pub fn min_lift_delta(&self, other: &TorusPoint) -> VecD {
        let mut out = VecD::zero(self.dim());
        for i in 0..self.dim() {
            out.set(i, wrap_half(other.rep.get(i) - self.rep.get(i)));
        }
        out
    }

    /// Torus distance: Euclidean norm of the minimal-lift displacement.
    pub fn dist(&self, other: &TorusPoint) -> f64 {
        self.min_lift_delta(other).norm()
    }
}

/// A cotangent vector (momentum); components are unconstrained reals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Covector {
    comps: VecD,
}

impl Covector {
    pub fn new(comps: &[f64]) -> Self {
        let c = VecD::new(comps);
        Covector { comps: c }
    }

    pub fn from_vec(v: &VecD) -> Self {
        Covector { comps: *v }
    }

    pub fn scalar(p: f64) -> Self {
        Self::new(&[p])
    }

    pub fn dim(&self) -> usize {
        self.comps.dim()
    }

    pub fn comps(&self) -> VecD {
        self.comps
    }

    pub fn as_slice(&self) -> &[f64] {
        self.comps.as_slice()
    }
}
