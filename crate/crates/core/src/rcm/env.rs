use serde::{Deserialize, Serialize};

use crate::environments::ScalarField;
use crate::error::{Error, Result};
use crate::lattice::LatticeBox;
use crate::solver::{Exterior, LatticeOperator};

/// Largest `|β φ|` accepted before exponentiating.
pub const EXP_CLAMP: f64 = 40.0;

/// Conductances, speed measure and killing on a finite box with absorbing exterior.
#[derive(Debug, Clone)]
pub struct ConductanceEnvironment {
    pub lattice: LatticeBox,
    /// `a(e)` per in-box edge.
    pub conductance: Vec<f64>,
    /// Total conductance from each vertex to absorbed sites outside the box.
    pub exterior: Vec<f64>,
    /// Speed measure `θ(x) > 0`.
    pub theta: Vec<f64>,
    /// Killing weights `κ(x) > 0`.
    pub kappa: Vec<f64>,
    /// Killing scalar in `[0, 1]`.
    pub h: f64,
    /// `μ(x) = Σ a(x,y)` over in-box neighbours.
    pub mu: Vec<f64>,
    /// `ν(x) = Σ 1/a(x,y)` over in-box neighbours with `a > 0`.
    pub nu: Vec<f64>,
}

fn check_positive(name: &str, v: &[f64]) -> Result<()> {
    if let Some(bad) = v.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidParameter(format!("{name} must be positive and finite, found {bad}")));
    }
    Ok(())
}

impl ConductanceEnvironment {
    pub fn new(
        lattice: LatticeBox,
        conductance: Vec<f64>,
        exterior: Vec<f64>,
        theta: Vec<f64>,
        kappa: Vec<f64>,
        h: f64,
    ) -> Result<Self> {
        let (ne, nv) = (lattice.num_edges(), lattice.num_vertices());
        if conductance.len() != ne {
            return Err(Error::LengthMismatch { expected: ne, got: conductance.len() });
        }
        for v in [&exterior, &theta, &kappa] {
            if v.len() != nv {
                return Err(Error::LengthMismatch { expected: nv, got: v.len() });
            }
        }
        if conductance.iter().chain(&exterior).any(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(Error::InvalidParameter("conductances must be finite and >= 0".into()));
        }
        check_positive("theta", &theta)?;
        check_positive("kappa", &kappa)?;
        check_h(h)?;
        let mut mu = vec![0.0; nv];
        let mut nu = vec![0.0; nv];
        for (e, &a) in conductance.iter().enumerate() {
            let (x, y) = lattice.edge_endpoints(e);
            mu[x] += a;
            mu[y] += a;
            if a > 0.0 {
                nu[x] += 1.0 / a;
                nu[y] += 1.0 / a;
            }
        }
        Ok(Self { lattice, conductance, exterior, theta, kappa, h, mu, nu })
    }

    /// `a ≡ a0` inside and towards the exterior, `θ ≡ 1`, `κ ≡ κ0`.
    pub fn homogeneous(lattice: &LatticeBox, a0: f64, kappa0: f64, h: f64) -> Result<Self> {
        let exterior = (0..lattice.num_vertices()).map(|v| a0 * lattice.exterior_degree(v) as f64).collect();
        Self::new(
            lattice.clone(),
            vec![a0; lattice.num_edges()],
            exterior,
            vec![1.0; lattice.num_vertices()],
            vec![kappa0; lattice.num_vertices()],
            h,
        )
    }

    pub fn with_h(&self, h: f64) -> Result<Self> {
        check_h(h)?;
        Ok(Self { h, ..self.clone() })
    }

    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        Self::new(self.lattice.clone(), self.conductance.clone(), self.exterior.clone(), theta, self.kappa.clone(), self.h)
    }

    /// Constant-speed walk `θ = μ + exterior` (unit mean holding time away from killing).
    pub fn csrw(&self) -> Result<Self> {
        let theta = self.mu.iter().zip(&self.exterior).map(|(m, e)| m + e).collect();
        self.with_theta(theta)
    }

    /// `h κ(x)` per vertex.
    pub fn killing_rates(&self) -> Vec<f64> {
        self.kappa.iter().map(|k| self.h * k).collect()
    }

    /// `θ·(−L)`: `Σ a (f(x) − f(y)) + ext(x) f(x) + h κ(x) f(x)`.
    pub(crate) fn operator<'a>(&'a self, killing: &'a [f64], absorbing: bool) -> LatticeOperator<'a> {
        LatticeOperator {
            lattice: &self.lattice,
            conductance: Some(&self.conductance),
            exterior: if absorbing { Exterior::Absorbing(&self.exterior) } else { Exterior::Free },
            potential: Some(killing),
            active: None,
        }
    }

    /// `Σ_x f(x)·(−L f)(x)·θ(x)`.
    pub fn quadratic_form(&self, f: &[f64]) -> f64 {
        let k = self.killing_rates();
        let op = self.operator(&k, true);
        let mut out = vec![0.0; f.len()];
        crate::solver::SpdOperator::apply(&op, f, &mut out);
        f.iter().zip(&out).map(|(a, b)| a * b).sum()
    }

    /// `Σ_e a(∇f)² + Σ_x ext(x) f(x)² + h Σ κ f²`, with `f = 0` outside.
    pub fn dirichlet_form(&self, f: &[f64]) -> f64 {
        let mut s = 0.0;
        for (e, &a) in self.conductance.iter().enumerate() {
            let (x, y) = self.lattice.edge_endpoints(e);
            s += a * (f[x] - f[y]).powi(2);
        }
        for x in 0..f.len() {
            s += (self.exterior[x] + self.h * self.kappa[x]) * f[x] * f[x];
        }
        s
    }

    pub fn moments(&self, p: f64, q: f64, r: f64) -> MomentReport {
        let n = self.theta.len() as f64;
        let avg = |it: &mut dyn Iterator<Item = f64>| it.sum::<f64>() / n;
        let d = self.lattice.dim() as f64;
        let lhs = 1.0 / r + (r - 1.0) / (p * r) + 1.0 / q;
        MomentReport {
            p,
            q,
            r,
            mu_over_theta_p: avg(&mut self.mu.iter().zip(&self.theta).map(|(m, t)| (m / t).powf(p))),
            nu_q: avg(&mut self.nu.iter().map(|v| v.powf(q))),
            theta_r: avg(&mut self.theta.iter().map(|t| t.powf(r))),
            inv_theta_q: avg(&mut self.theta.iter().map(|t| t.powf(-q))),
            exponent_sum: lhs,
            condition_holds: lhs < 2.0 / d,
        }
    }
}

fn check_h(h: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&h) {
        return Err(Error::InvalidParameter(format!("h must lie in [0,1], got {h}")));
    }
    Ok(())
}

/// Empirical moments entering the heat-kernel moment condition
/// `1/r + (r−1)/(p r) + 1/q < 2/d`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentReport {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub mu_over_theta_p: f64,
    pub nu_q: f64,
    pub theta_r: f64,
    pub inv_theta_q: f64,
    pub exponent_sum: f64,
    pub condition_holds: bool,
}

/// `a(y,z) = e^{β(φ_y+φ_z)}`, `κ(y) = e^{βφ_y}` (or `κ ≡ 1` without
/// killing weights), `θ ≡ 1` and `h = 0`. Exterior sites carry `φ = 0`.
pub fn build_gff_rcm(field: &ScalarField, beta: f64, include_killing: bool) -> Result<ConductanceEnvironment> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter("beta must be positive".into()));
    }
    if let Some((v, &phi)) = field.values.iter().enumerate().find(|(_, p)| !((beta * **p).abs() <= EXP_CLAMP)) {
        return Err(Error::ExpOverflow(format!(
            "|beta*phi| = {} at vertex {v} exceeds the safe range {EXP_CLAMP}",
            (beta * phi).abs()
        )));
    }
    let lat = &field.lattice;
    let phi = &field.values;
    let conductance = (0..lat.num_edges())
        .map(|e| {
            let (x, y) = lat.edge_endpoints(e);
            (beta * (phi[x] + phi[y])).exp()
        })
        .collect();
    let exterior = (0..lat.num_vertices())
        .map(|x| lat.exterior_degree(x) as f64 * (beta * phi[x]).exp())
        .collect();
    let kappa = if include_killing {
        phi.iter().map(|p| (beta * p).exp()).collect()
    } else {
        vec![1.0; lat.num_vertices()]
    };
    ConductanceEnvironment::new(lat.clone(), conductance, exterior, vec![1.0; lat.num_vertices()], kappa, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::sample_gff_dirichlet;
    use crate::rng::{fill_normals, RngStream};

    #[test]
    fn flat_field_gives_unit_environment() {
        let b = LatticeBox::cube(3, 4).unwrap();
        let f = ScalarField::from_values(b.clone(), vec![0.0; 64]).unwrap();
        let env = build_gff_rcm(&f, 1.3, true).unwrap();
        assert!(env.conductance.iter().all(|&a| a == 1.0));
        assert!(env.kappa.iter().all(|&k| k == 1.0));
        let corner = b.index_of(&[0, 0, 0]).unwrap();
        assert_eq!(env.mu[corner], 3.0);
        assert_eq!(env.exterior[corner], 3.0);
    }

    #[test]
    fn doubling_beta_squares_conductances() {
        let b = LatticeBox::cube(3, 5).unwrap();
        let f = sample_gff_dirichlet(&b, RngStream::new(1, 0)).unwrap();
        let e1 = build_gff_rcm(&f, 0.4, true).unwrap();
        let e2 = build_gff_rcm(&f, 0.8, true).unwrap();
        for (a, b) in e1.conductance.iter().zip(&e2.conductance) {
            assert!((a * a - b).abs() <= 1e-12 * b);
        }
    }

    #[test]
    fn corner_of_square_by_hand() {
        let b = LatticeBox::cube(2, 2).unwrap();
        // row-major: (0,0)=0.1, (0,1)=-0.3, (1,0)=0.7, (1,1)=0.2
        let f = ScalarField::from_values(b.clone(), vec![0.1, -0.3, 0.7, 0.2]).unwrap();
        let env = build_gff_rcm(&f, 0.5, true).unwrap();
        let expected = (0.5f64 * (0.1 - 0.3)).exp() + (0.5f64 * (0.1 + 0.7)).exp();
        assert!((env.mu[0] - expected).abs() < 1e-15);
        let nu = 1.0 / (0.5f64 * (0.1 - 0.3)).exp() + 1.0 / (0.5f64 * (0.1 + 0.7)).exp();
        assert!((env.nu[0] - nu).abs() < 1e-14);
    }

    #[test]
    fn clamp_and_parameter_checks() {
        let b = LatticeBox::cube(1, 2).unwrap();
        let f = ScalarField::from_values(b.clone(), vec![0.0, 50.0]).unwrap();
        assert!(matches!(build_gff_rcm(&f, 1.0, true), Err(Error::ExpOverflow(_))));
        assert!(build_gff_rcm(&f, 0.5, true).is_ok());
        assert!(build_gff_rcm(&f, 0.0, true).is_err());
        let env = ConductanceEnvironment::homogeneous(&b, 1.0, 1.0, 0.0).unwrap();
        assert!(env.with_h(1.5).is_err());
        assert!(env.with_theta(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn generator_matches_dirichlet_form() {
        for seed in 0..5 {
            let b = LatticeBox::new(&[4, 3, 5], &[0, 0, 0]).unwrap();
            let f = sample_gff_dirichlet(&b, RngStream::new(seed, 0)).unwrap();
            let env = build_gff_rcm(&f, 0.7, true).unwrap().with_h(0.3).unwrap();
            let env = env.with_theta((0..b.num_vertices()).map(|i| 0.5 + (i % 7) as f64).collect()).unwrap();
            let mut g = vec![0.0; b.num_vertices()];
            fill_normals(&mut RngStream::new(seed, 9).generator(), &mut g);
            let lhs = env.quadratic_form(&g);
            let rhs = env.dirichlet_form(&g);
            assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs());
        }
    }

    #[test]
    fn moment_report_for_unit_environment() {
        let b = LatticeBox::cube(3, 3).unwrap();
        let env = ConductanceEnvironment::homogeneous(&b, 1.0, 1.0, 0.0).unwrap();
        let m = env.moments(2.0, 2.0, 2.0);
        assert_eq!(m.theta_r, 1.0);
        assert_eq!(m.inv_theta_q, 1.0);
        // 1/2 + 1/4 + 1/2 > 2/3
        assert!(!m.condition_holds);
        assert!(env.moments(8.0, 8.0, 8.0).condition_holds);
    }
}
