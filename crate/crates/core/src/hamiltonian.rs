//! Tonelli Hamiltonians on T*T^d as bundles of closed-form callables:
//! value, first derivatives, and the fiber Hessian. A small catalog covers
//! the free, pendulum, and quartically perturbed kinetic Hamiltonians.

use crate::error::{Error, Result};
use crate::flow::{self, FlowConfig};
use crate::torus::{MatD, TorusPoint, VecD};
use rayon::prelude::*;

type ScalarFn = Box<dyn Fn(&VecD, &VecD) -> f64 + Send + Sync>;
type VectorFn = Box<dyn Fn(&VecD, &VecD) -> VecD + Send + Sync>;
type MatrixFn = Box<dyn Fn(&VecD, &VecD) -> MatD + Send + Sync>;

/// Hamiltonian given by explicit derivative callables. All callables accept
/// lifted base coordinates (they must be 1-periodic in each q component).
pub struct TonelliHamiltonian {
    name: String,
    params: Vec<f64>,
    dim: usize,
    value: ScalarFn,
    grad_q: VectorFn,
    grad_p: VectorFn,
    hess_pp: MatrixFn,
    // Mixed/base second derivatives for the variational equations. When absent
    // they are approximated by central differences of the gradients.
    hess_qq: Option<MatrixFn>,
    hess_pq: Option<MatrixFn>,
}

impl TonelliHamiltonian {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn value(&self, q: &VecD, p: &VecD) -> f64 {
        (self.value)(q, p)
    }

    pub fn grad_q(&self, q: &VecD, p: &VecD) -> VecD {
        (self.grad_q)(q, p)
    }

    pub fn grad_p(&self, q: &VecD, p: &VecD) -> VecD {
        (self.grad_p)(q, p)
    }

    pub fn hess_pp(&self, q: &VecD, p: &VecD) -> MatD {
        (self.hess_pp)(q, p)
    }

    /// d²H/dq², analytic when supplied, else central differences of grad_q.
    pub fn hess_qq(&self, q: &VecD, p: &VecD) -> MatD {
        match &self.hess_qq {
            Some(f) => f(q, p),
            None => fd_jacobian(self.dim, |dq| self.grad_q(&q.add(&dq), p)),
        }
    }

    /// d²H/dp dq (rows: dq index of grad_p), analytic when supplied.
    pub fn hess_pq(&self, q: &VecD, p: &VecD) -> MatD {
        match &self.hess_pq {
            Some(f) => f(q, p),
            None => fd_jacobian(self.dim, |dq| self.grad_p(&q.add(&dq), p)),
        }
    }

    /// Catalog lookup by name and parameter list.
    ///
    /// * `free` — H = |p|²/2
    /// * `pendulum(a)` — H = |p|²/2 + a·Σ cos(2π qᵢ), default a = 1
    /// * `quartic(eps)` — H = |p|²/2 + eps·|p|⁴, default eps = 0.1
    pub fn from_spec(name: &str, params: &[f64], dim: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Config(format!("unsupported dimension {dim}")));
        }
        match name {
            "free" => Ok(Self::free(dim)),
            "pendulum" => {
                let a = params.first().copied().unwrap_or(1.0);
                Ok(Self::pendulum(dim, a))
            }
            "quartic" => {
                let eps = params.first().copied().unwrap_or(0.1);
                if eps < 0.0 {
                    return Err(Error::Config(format!(
                        "quartic coefficient must be nonnegative, got {eps}"
                    )));
                }
                Ok(Self::quartic(dim, eps))
            }
            other => Err(Error::Config(format!("unknown hamiltonian '{other}'"))),
        }
    }

    pub fn free(dim: usize) -> Self {
        TonelliHamiltonian {
            name: "free".into(),
            params: vec![],
            dim,
            value: Box::new(|_q, p| 0.5 * p.norm_sq()),
            grad_q: Box::new(move |_q, p| VecD::zero(p.dim())),
            grad_p: Box::new(|_q, p| *p),
            hess_pp: Box::new(move |_q, p| MatD::identity(p.dim())),
            hess_qq: Some(Box::new(move |q, _p| MatD::zero(q.dim()))),
            hess_pq: Some(Box::new(move |q, _p| MatD::zero(q.dim()))),
        }
    }

    /// Kinetic energy plus the cosine potential a·Σ cos(2π qᵢ).
    pub fn pendulum(dim: usize, a: f64) -> Self {
        const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
        TonelliHamiltonian {
            name: "pendulum".into(),
            params: vec![a],
            dim,
            value: Box::new(move |q, p| {
                let pot: f64 = q.as_slice().iter().map(|&x| (TWO_PI * x).cos()).sum();
                0.5 * p.norm_sq() + a * pot
            }),
            grad_q: Box::new(move |q, _p| {
                let mut g = VecD::zero(q.dim());
                for i in 0..q.dim() {
                    g.set(i, -a * TWO_PI * (TWO_PI * q.get(i)).sin());
                }
                g
            }),
            grad_p: Box::new(|_q, p| *p),
            hess_pp: Box::new(move |q, _p| MatD::identity(q.dim())),
            hess_qq: Some(Box::new(move |q, _p| {
                let mut m = MatD::zero(q.dim());
                for i in 0..q.dim() {
                    m.set(i, i, -a * TWO_PI * TWO_PI * (TWO_PI * q.get(i)).cos());
                }
                m
            })),
            hess_pq: Some(Box::new(move |q, _p| MatD::zero(q.dim()))),
        }
    }

    /// Kinetic energy plus eps·|p|⁴; fiber Hessian (1 + 4 eps |p|²) I + 8 eps p pᵀ.
    pub fn quartic(dim: usize, eps: f64) -> Self {
        TonelliHamiltonian {
            name: "quartic".into(),
            params: vec![eps],
            dim,
            value: Box::new(move |_q, p| {
                let n2 = p.norm_sq();
                0.5 * n2 + eps * n2 * n2
            }),
            grad_q: Box::new(move |q, _p| VecD::zero(q.dim())),
            grad_p: Box::new(move |_q, p| p.scale(1.0 + 4.0 * eps * p.norm_sq())),
            hess_pp: Box::new(move |_q, p| {
                let n2 = p.norm_sq();
                let mut m = MatD::zero(p.dim());
                for i in 0..p.dim() {
                    for j in 0..p.dim() {
                        let mut v = 8.0 * eps * p.get(i) * p.get(j);
                        if i == j {
                            v += 1.0 + 4.0 * eps * n2;
                        }
                        m.set(i, j, v);
                    }
                }
                m
            }),
            hess_qq: Some(Box::new(move |q, _p| MatD::zero(q.dim()))),
            hess_pq: Some(Box::new(move |q, _p| MatD::zero(q.dim()))),
        }
    }

    /// Max relative error between `hess_pp` and a central finite-difference
    /// Hessian of `value` in p, over a sample set. Consistency audit for the
    /// supplied derivative bundle.
    pub fn derivative_consistency(&self, samples: &[(VecD, VecD)]) -> f64 {
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for (q, p) in samples {
            let analytic = self.hess_pp(q, p);
            for i in 0..self.dim {
                for j in 0..self.dim {
                    let mut pp = *p;
                    pp.set(i, p.get(i) + h);
                    pp.set(j, pp.get(j) + h);
                    let fpp = self.value(q, &pp);
                    let mut pm = *p;
                    pm.set(i, p.get(i) + h);
                    pm.set(j, pm.get(j) - h);
                    let fpm = self.value(q, &pm);
                    let mut mp = *p;
                    mp.set(i, p.get(i) - h);
                    mp.set(j, mp.get(j) + h);
                    let fmp = self.value(q, &mp);
                    let mut mm = *p;
                    mm.set(i, p.get(i) - h);
                    mm.set(j, mm.get(j) - h);
                    let fmm = self.value(q, &mm);
                    let fd = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
                    let denom = analytic.get(i, j).abs().max(1.0);
                    worst = worst.max((fd - analytic.get(i, j)).abs() / denom);
                }
            }
            // First derivatives against central differences as well.
            for i in 0..self.dim {
                let mut pp = *p;
                pp.set(i, p.get(i) + h);
                let mut pm = *p;
                pm.set(i, p.get(i) - h);
                let fd = (self.value(q, &pp) - self.value(q, &pm)) / (2.0 * h);
                let denom = self.grad_p(q, p).get(i).abs().max(1.0);
                worst = worst.max((fd - self.grad_p(q, p).get(i)).abs() / denom);

                let mut qp = *q;
                qp.set(i, q.get(i) + h);
                let mut qm = *q;
                qm.set(i, q.get(i) - h);
                let fd = (self.value(&qp, p) - self.value(&qm, p)) / (2.0 * h);
                let denom = self.grad_q(q, p).get(i).abs().max(1.0);
                worst = worst.max((fd - self.grad_q(q, p).get(i)).abs() / denom);
            }
        }
        worst
    }
}

fn fd_jacobian<F: Fn(VecD) -> VecD>(dim: usize, f: F) -> MatD {
    let h = 1e-6;
    let mut m = MatD::zero(dim);
    for j in 0..dim {
        let mut dq = VecD::zero(dim);
        dq.set(j, h);
        let fp = f(dq);
        dq.set(j, -h);
        let fm = f(dq);
        for i in 0..dim {
            m.set(i, j, (fp.get(i) - fm.get(i)) / (2.0 * h));
        }
    }
    m
}

/// Fiber tube over the whole torus: { (q, p) : |p| ≤ fiber_radius }.
/// Compact and convex in the fiber by construction.
#[derive(Clone, Copy, Debug)]
pub struct CompactTube {
    pub fiber_radius: f64,
}

impl CompactTube {
    pub fn new(fiber_radius: f64) -> Result<Self> {
        if fiber_radius <= 0.0 {
            return Err(Error::Config(format!(
                "tube radius must be positive, got {fiber_radius}"
            )));
        }
        Ok(CompactTube { fiber_radius })
    }
}

/// Hamilton equation q̇ = ∂H/∂p evaluated at (q, p).
pub fn velocity(h: &TonelliHamiltonian, q: &TorusPoint, p: &VecD) -> VecD {
    h.grad_p(&q.rep(), p)
}

/// Result of a Legendre transform solve: the value L(q, v) and the maximizing
/// momentum p* with ∇_p H(q, p*) = v.
#[derive(Clone, Copy, Debug)]
pub struct LegendreResult {
    pub value: f64,
    pub momentum: VecD,
}

/// Lagrangian dual L(q, v) = sup_p [p·v − H(q, p)] by damped Newton on
/// ∇_p H(q, p) = v starting from p = 0.
pub fn lagrangian_value(h: &TonelliHamiltonian, q: &TorusPoint, v: &VecD) -> Result<LegendreResult> {
    lagrangian_value_at_lift(h, &q.rep(), v)
}

/// Same as [`lagrangian_value`] but takes lifted base coordinates directly,
/// for callers that track lifts themselves.
pub fn lagrangian_value_at_lift(
    h: &TonelliHamiltonian,
    q: &VecD,
    v: &VecD,
) -> Result<LegendreResult> {
    let max_iter = 60;
    let tol = 1e-12 * (1.0 + v.norm());
    let mut p = VecD::zero(v.dim());
    for _ in 0..max_iter {
        let g = h.grad_p(q, &p).sub(v);
        if g.norm() <= tol {
            let value = p.dot(v) - h.value(q, &p);
            return Ok(LegendreResult { value, momentum: p });
        }
        let hess = h.hess_pp(q, &p);
        let (eig_lo, _) = hess.sym_eigenvalues();
        if eig_lo <= 0.0 {
            return Err(Error::LegendreNoConvergence {
                q: q.as_slice().to_vec(),
                v: v.as_slice().to_vec(),
                iters: max_iter,
            });
        }
        let step = hess.solve_spd(&g).ok_or(Error::LegendreNoConvergence {
            q: q.as_slice().to_vec(),
            v: v.as_slice().to_vec(),
            iters: max_iter,
        })?;
        // Damping: halve until the residual decreases.
        let mut alpha = 1.0;
        let base_res = g.norm();
        let mut accepted = false;
        for _ in 0..30 {
            let cand = p.add_scaled(-alpha, &step);
            let res = h.grad_p(q, &cand).sub(v).norm();
            if res < base_res {
                p = cand;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    // Final residual check.
    let g = h.grad_p(q, &p).sub(v);
    if g.norm() <= 1e-9 * (1.0 + v.norm()) {
        let value = p.dot(v) - h.value(q, &p);
        return Ok(LegendreResult { value, momentum: p });
    }
    Err(Error::LegendreNoConvergence {
        q: q.as_slice().to_vec(),
        v: v.as_slice().to_vec(),
        iters: max_iter,
    })
}

/// Extremal fiber-Hessian eigenvalue bounds (c, C) over the flowed tube:
/// eigenvalues of H_pp sampled at φ_τ(x) for x on a tube grid and τ on a grid
/// of [-1, 1]. Errors with `NonConvexHamiltonian` on a nonpositive eigenvalue.
pub fn hessian_bounds(
    h: &TonelliHamiltonian,
    tube: &CompactTube,
    flow_cfg: &FlowConfig,
    sample_density: usize,
) -> Result<(f64, f64)> {
    if sample_density < 8 {
        return Err(Error::Config(format!(
            "sample density must be at least 8 per unit per dimension, got {sample_density}"
        )));
    }
    let tau_step = 0.05;
    let seeds = tube_grid(h.dim(), tube.fiber_radius, sample_density);

    let reduce = seeds
        .par_iter()
        .map(|&(q, p)| scan_orbit(h, q, p, tau_step, flow_cfg))
        .try_reduce(
            || (f64::INFINITY, f64::NEG_INFINITY),
            |a, b| Ok((a.0.min(b.0), a.1.max(b.1))),
        )?;

    let (c, big_c) = reduce;
    if c <= 0.0 {
        return Err(Error::NonConvexHamiltonian {
            q: vec![],
            p: vec![],
            eig: c,
        });
    }
    Ok((c, big_c))
}

/// Min/max fiber-Hessian eigenvalues along {φ_τ(q, p) : τ ∈ [-1, 1] grid}.
/// The orbit is integrated chain-wise, one τ knot to the next.
fn scan_orbit(
    h: &TonelliHamiltonian,
    q: VecD,
    p: VecD,
    tau_step: f64,
    flow_cfg: &FlowConfig,
) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut record = |q: &VecD, p: &VecD| -> Result<()> {
        let (e_lo, e_hi) = h.hess_pp(q, p).sym_eigenvalues();
        if e_lo <= 0.0 {
            return Err(Error::NonConvexHamiltonian {
                q: q.as_slice().to_vec(),
                p: p.as_slice().to_vec(),
                eig: e_lo,
            });
        }
        lo = lo.min(e_lo);
        hi = hi.max(e_hi);
        Ok(())
    };

    record(&q, &p)?;
    for dir in [1.0, -1.0] {
        let (mut cq, mut cp) = (q, p);
        let steps = (1.0 / tau_step).round() as usize;
        for _ in 0..steps {
            let (nq, np) = flow::flow_lifted(h, &cq, &cp, dir * tau_step, flow_cfg)
                .map_err(|e| Error::FlowDivergence(format!("tube sampling: {e}")))?;
            record(&nq, &np)?;
            cq = nq;
            cp = np;
        }
    }
    Ok((lo, hi))
}

/// Grid of seed points (q, p) covering the tube: base grid with `density`
/// points per unit per dimension, fiber grid over the momentum ball of the
/// same linear density (endpoints and the origin included).
fn tube_grid(dim: usize, radius: f64, density: usize) -> Vec<(VecD, VecD)> {
    let nq = density;
    let np_half = ((radius * density as f64).ceil() as usize).max(4);
    let mut ps: Vec<f64> = Vec::with_capacity(2 * np_half + 1);
    for k in -(np_half as i64)..=(np_half as i64) {
        ps.push(radius * k as f64 / np_half as f64);
    }

    let mut out = Vec::new();
    match dim {
        1 => {
            for iq in 0..nq {
                let q = VecD::scalar(iq as f64 / nq as f64);
                for &p in &ps {
                    out.push((q, VecD::scalar(p)));
                }
            }
        }
        2 => {
            for iq in 0..nq {
                for jq in 0..nq {
                    let q = VecD::pair(iq as f64 / nq as f64, jq as f64 / nq as f64);
                    for &p1 in &ps {
                        for &p2 in &ps {
                            if p1 * p1 + p2 * p2 <= radius * radius + 1e-12 {
                                out.push((q, VecD::pair(p1, p2)));
                            }
                        }
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::FlowConfig;

    fn tp(q: f64) -> TorusPoint {
        TorusPoint::scalar(q)
    }

    #[test]
    fn free_hessian_bounds_are_unit() {
        let h = TonelliHamiltonian::free(1);
        let tube = CompactTube::new(1.5).unwrap();
        let (c, cc) = hessian_bounds(&h, &tube, &FlowConfig::default(), 8).unwrap();
        assert_eq!(c, 1.0);
        assert_eq!(cc, 1.0);
    }

    #[test]
    fn pendulum_hessian_bounds_are_unit() {
        let h = TonelliHamiltonian::pendulum(1, 1.0);
        let tube = CompactTube::new(2.0).unwrap();
        let (c, cc) = hessian_bounds(&h, &tube, &FlowConfig::default(), 8).unwrap();
        assert!((c - 1.0).abs() < 1e-12);
        assert!((cc - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quartic_hessian_bounds_match_conserved_momentum() {
        // p is conserved (no q dependence), so the flowed tube has |p| <= R and
        // H_pp = 1 + 12 eps p² in d = 1 gives C = 1 + 1.2 R², c = 1.
        let eps = 0.1;
        let h = TonelliHamiltonian::quartic(1, eps);
        let tube = CompactTube::new(1.0).unwrap();
        let (c, cc) = hessian_bounds(&h, &tube, &FlowConfig::default(), 8).unwrap();
        assert!((c - 1.0).abs() < 1e-10, "c = {c}");
        assert!((cc - (1.0 + 12.0 * eps)).abs() < 1e-10, "C = {cc}");
    }

    #[test]
    fn hessian_bounds_monotone_in_radius() {
        let h = TonelliHamiltonian::quartic(1, 0.1);
        let cfg = FlowConfig::default();
        let (c1, cc1) =
            hessian_bounds(&h, &CompactTube::new(0.5).unwrap(), &cfg, 8).unwrap();
        let (c2, cc2) =
            hessian_bounds(&h, &CompactTube::new(1.5).unwrap(), &cfg, 8).unwrap();
        assert!(c2 <= c1 + 1e-15);
        assert!(cc2 >= cc1 - 1e-15);
    }

    #[test]
    fn velocity_matches_examples() {
        let h = TonelliHamiltonian::free(1);
        let v = velocity(&h, &tp(0.1), &VecD::scalar(0.3));
        assert_eq!(v.get(0), 0.3);

        let h = TonelliHamiltonian::pendulum(1, 1.0);
        let v = velocity(&h, &tp(0.4), &VecD::scalar(-1.0));
        assert_eq!(v.get(0), -1.0);

        // Finite-difference oracle for the quartic case.
        let h = TonelliHamiltonian::quartic(1, 0.1);
        let v = velocity(&h, &tp(0.0), &VecD::scalar(1.0));
        let fd = {
            let step = 1e-6;
            let f =
                |p: f64| h.value(&VecD::scalar(0.0), &VecD::scalar(p));
            (f(1.0 + step) - f(1.0 - step)) / (2.0 * step)
        };
        assert!((v.get(0) - 1.4).abs() < 1e-12);
        assert!((v.get(0) - fd).abs() < 1e-8);
    }

    #[test]
    fn legendre_free_is_self_dual() {
        let h = TonelliHamiltonian::free(1);
        let r = lagrangian_value(&h, &tp(0.3), &VecD::scalar(0.8)).unwrap();
        assert!((r.value - 0.32).abs() < 1e-12);
        assert!((r.momentum.get(0) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn legendre_pendulum_is_kinetic_minus_potential() {
        let h = TonelliHamiltonian::pendulum(1, 1.0);
        let q = 0.15;
        let v = -0.6;
        let r = lagrangian_value(&h, &tp(q), &VecD::scalar(v)).unwrap();
        let expected = 0.5 * v * v - (2.0 * std::f64::consts::PI * q).cos();
        assert!((r.value - expected).abs() < 1e-10);
    }

    #[test]
    fn legendre_quartic_matches_bisection_oracle() {
        // Oracle: solve p + 0.4 p³ = 1 by bisection, then L = p*v - H(q, p*).
        let h = TonelliHamiltonian::quartic(1, 0.1);
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid + 0.4 * mid * mid * mid < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let p_star = 0.5 * (lo + hi);
        let l_star = p_star - (0.5 * p_star * p_star + 0.1 * p_star.powi(4));
        // Frozen values from the oracle above.
        assert!((p_star - 0.797282).abs() < 1e-5);
        assert!((l_star - 0.439046).abs() < 1e-5);

        let r = lagrangian_value(&h, &tp(0.0), &VecD::scalar(1.0)).unwrap();
        assert!((r.momentum.get(0) - p_star).abs() < 1e-9);
        assert!((r.value - l_star).abs() < 1e-10);
    }

    #[test]
    fn legendre_biconjugacy() {
        // H(q, p) = p·v - L(q, v) at v = ∇_p H(q, p).
        for h in [
            TonelliHamiltonian::free(1),
            TonelliHamiltonian::pendulum(1, 1.0),
            TonelliHamiltonian::quartic(1, 0.1),
        ] {
            for (q, p) in [(0.1, 0.7), (0.6, -1.2), (0.35, 0.0)] {
                let q = tp(q);
                let p = VecD::scalar(p);
                let v = velocity(&h, &q, &p);
                let r = lagrangian_value(&h, &q, &v).unwrap();
                let back = p.dot(&v) - r.value;
                assert!(
                    (back - h.value(&q.rep(), &p)).abs() < 1e-8,
                    "biconjugacy broken for {}",
                    h.name()
                );
            }
        }
    }

    #[test]
    fn derivative_bundles_consistent() {
        let samples: Vec<(VecD, VecD)> = (0..12)
            .map(|i| {
                (
                    VecD::scalar(i as f64 / 12.0),
                    VecD::scalar(-1.0 + i as f64 / 6.0),
                )
            })
            .collect();
        for h in [
            TonelliHamiltonian::free(1),
            TonelliHamiltonian::pendulum(1, 1.0),
            TonelliHamiltonian::quartic(1, 0.1),
        ] {
            assert!(h.derivative_consistency(&samples) < 1e-5);
        }
        let samples2: Vec<(VecD, VecD)> = (0..8)
            .map(|i| {
                (
                    VecD::pair(i as f64 / 8.0, (3 * i % 8) as f64 / 8.0),
                    VecD::pair(0.4 - i as f64 / 8.0, 0.2),
                )
            })
            .collect();
        for h in [
            TonelliHamiltonian::free(2),
            TonelliHamiltonian::pendulum(2, 0.5),
            TonelliHamiltonian::quartic(2, 0.1),
        ] {
            assert!(h.derivative_consistency(&samples2) < 1e-5);
        }
    }

    #[test]
    fn value_is_periodic() {
        let h = TonelliHamiltonian::pendulum(1, 0.7);
        for i in 0..32 {
            let q = i as f64 / 32.0;
            let p = VecD::scalar(0.3);
            let a = h.value(&VecD::scalar(q), &p);
            let b = h.value(&VecD::scalar(q + 3.0), &p);
            assert!((a - b).abs() < 1e-12);
        }
    }
}
