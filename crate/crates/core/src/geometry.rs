//! Vector and configuration primitives: signed distances, contact normals and
//! sparse distance gradients.

use crate::error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;

pub(crate) fn ensure_finite(v: &Vec3, what: &'static str) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Positions, velocities and per-particle constants for `N` spheres.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleState {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub radii: Vec<f64>,
    pub masses: Vec<f64>,
    pub roughness: Vec<f64>,
    /// Motion restricted to the `z = 0` plane.
    pub planar: bool,
}

impl ParticleState {
    pub fn empty(planar: bool) -> Self {
        ParticleState {
            positions: Vec::new(),
            velocities: Vec::new(),
            radii: Vec::new(),
            masses: Vec::new(),
            roughness: Vec::new(),
            planar,
        }
    }

    pub fn push(&mut self, position: Vec3, velocity: Vec3, radius: f64, mass: f64, roughness: f64) {
        self.positions.push(position);
        self.velocities.push(velocity);
        self.radii.push(radius);
        self.masses.push(mass);
        self.roughness.push(roughness);
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn max_radius(&self) -> f64 {
        self.radii.iter().cloned().fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.positions.len();
        if [
            self.velocities.len(),
            self.radii.len(),
            self.masses.len(),
            self.roughness.len(),
        ]
        .iter()
        .any(|&l| l != n)
        {
            return Err(Error::InvalidInput("particle arrays differ in length".into()));
        }
        for i in 0..n {
            ensure_finite(&self.positions[i], "position")?;
            ensure_finite(&self.velocities[i], "velocity")?;
            if !(self.radii[i] > 0.0 && self.radii[i].is_finite()) {
                return Err(Error::InvalidInput(format!("radius of particle {i} must be > 0")));
            }
            if !(self.masses[i] > 0.0 && self.masses[i].is_finite()) {
                return Err(Error::InvalidInput(format!("mass of particle {i} must be > 0")));
            }
            if !(self.roughness[i] >= 0.0) {
                return Err(Error::InvalidInput(format!("roughness of particle {i} must be >= 0")));
            }
        }
        Ok(())
    }

    /// Zero the out-of-plane components when the planar restriction is set.
    pub fn enforce_planar(&mut self) {
        if self.planar {
            for p in self.positions.iter_mut() {
                p.z = 0.0;
            }
            for v in self.velocities.iter_mut() {
                v.z = 0.0;
            }
        }
    }

    /// Velocities stacked as `[v0.x, v0.y, v0.z, v1.x, ...]`.
    pub fn stacked_velocities(&self) -> Vec<f64> {
        self.velocities.iter().flat_map(|v| [v.x, v.y, v.z]).collect()
    }
}

/// One linearised distance: `offset + h * sum(coeff . V_particle)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseGradientRow {
    pub entries: Vec<(usize, Vec3)>,
    pub offset: f64,
}

impl SparseGradientRow {
    pub fn dot(&self, stacked: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|(p, c)| c.x * stacked[3 * p] + c.y * stacked[3 * p + 1] + c.z * stacked[3 * p + 2])
            .sum()
    }

    pub fn norm_squared(&self) -> f64 {
        self.entries.iter().map(|(_, c)| c.norm_squared()).sum()
    }
}

/// `|xj - xi| - ri - rj`; negative iff the spheres overlap.
pub fn signed_distance(xi: &Vec3, ri: f64, xj: &Vec3, rj: f64) -> Result<f64> {
    ensure_finite(xi, "xi")?;
    ensure_finite(xj, "xj")?;
    let d = (xj - xi).norm();
    if d == 0.0 {
        return Err(Error::CoincidentCenters);
    }
    Ok(d - ri - rj)
}

/// Unit vector pointing from `xi` to `xj`.
pub fn contact_normal(xi: &Vec3, xj: &Vec3) -> Result<Vec3> {
    ensure_finite(xi, "xi")?;
    ensure_finite(xj, "xj")?;
    let d = xj - xi;
    let n = d.norm();
    if n == 0.0 {
        return Err(Error::CoincidentCenters);
    }
    Ok(d / n)
}

/// Gradient of `D_ij` with respect to all positions: `-e_ij` on `i`, `+e_ij` on `j`.
pub fn distance_gradient(state: &ParticleState, i: usize, j: usize) -> Result<SparseGradientRow> {
    let n = state.len();
    if i >= n || j >= n || i == j {
        return Err(Error::InvalidInput(format!("bad particle pair ({i}, {j}) for N = {n}")));
    }
    let (xi, xj) = (&state.positions[i], &state.positions[j]);
    let e = contact_normal(xi, xj)?;
    let offset = signed_distance(xi, state.radii[i], xj, state.radii[j])?;
    Ok(SparseGradientRow {
        entries: vec![(i, -e), (j, e)],
        offset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two(xj: Vec3) -> ParticleState {
        let mut s = ParticleState::empty(false);
        s.push(Vec3::zeros(), Vec3::zeros(), 0.4, 1.0, 0.0);
        s.push(xj, Vec3::zeros(), 0.4, 1.0, 0.0);
        s
    }

    #[test]
    fn signed_distance_examples() {
        let o = Vec3::zeros();
        let d = |x: f64| signed_distance(&o, 0.4, &Vec3::new(x, 0.0, 0.0), 0.4).unwrap();
        assert!((d(1.0) - 0.2).abs() < 1e-15);
        assert!(d(0.8).abs() < 1e-15);
        assert!((d(0.5) + 0.3).abs() < 1e-15);
        assert!(matches!(
            signed_distance(&o, 0.4, &o, 0.4),
            Err(Error::CoincidentCenters)
        ));
    }

    #[test]
    fn normal_examples() {
        let n = contact_normal(&Vec3::zeros(), &Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(n, Vec3::new(1.0, 0.0, 0.0));
        let n = contact_normal(&Vec3::zeros(), &Vec3::new(0.0, 2.0, 0.0)).unwrap();
        assert_eq!(n, Vec3::new(0.0, 1.0, 0.0));
        let n = contact_normal(&Vec3::new(1.0, 1.0, 0.0), &Vec3::new(1.0, 1.0, 3.0)).unwrap();
        assert_eq!(n, Vec3::new(0.0, 0.0, 1.0));
        assert!(contact_normal(&Vec3::zeros(), &Vec3::zeros()).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        let bad = Vec3::new(f64::NAN, 0.0, 0.0);
        assert!(matches!(
            signed_distance(&bad, 0.1, &Vec3::zeros(), 0.1),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn gradient_on_axis_and_swap() {
        let s = two(Vec3::new(1.0, 0.0, 0.0));
        let g = distance_gradient(&s, 0, 1).unwrap();
        assert_eq!(g.entries, vec![(0, Vec3::new(-1.0, 0.0, 0.0)), (1, Vec3::new(1.0, 0.0, 0.0))]);
        assert!((g.offset - 0.2).abs() < 1e-15);
        let r = distance_gradient(&s, 1, 0).unwrap();
        assert_eq!(r.entries[0], (1, Vec3::new(1.0, 0.0, 0.0)));
        assert_eq!(r.entries[1], (0, Vec3::new(-1.0, 0.0, 0.0)));
        assert_eq!(r.offset, g.offset);
    }

    #[test]
    fn planar_zeroes_third_component() {
        let mut s = two(Vec3::new(1.0, 0.0, 0.3));
        s.velocities[0] = Vec3::new(1.0, 2.0, 3.0);
        s.planar = true;
        s.enforce_planar();
        assert_eq!(s.positions[1].z, 0.0);
        assert_eq!(s.velocities[0], Vec3::new(1.0, 2.0, 0.0));
    }

    fn vec3() -> impl Strategy<Value = Vec3> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn distance_symmetric(a in vec3(), b in vec3(), ra in 0.01..0.3f64, rb in 0.01..0.3f64) {
            prop_assume!((a - b).norm() > 1e-6);
            let d1 = signed_distance(&a, ra, &b, rb).unwrap();
            let d2 = signed_distance(&b, rb, &a, ra).unwrap();
            prop_assert!((d1 - d2).abs() <= 1e-15);
        }

        #[test]
        fn normal_is_unit(a in vec3(), b in vec3()) {
            prop_assume!((a - b).norm() > 1e-6);
            let n = contact_normal(&a, &b).unwrap();
            prop_assert!((n.norm() - 1.0).abs() < 1e-15);
        }

        // Central finite difference of D along a random stacked direction.
        #[test]
        fn gradient_matches_finite_difference(a in vec3(), b in vec3(), va in vec3(), vb in vec3()) {
            prop_assume!((a - b).norm() > 0.05);
            let eps = 1e-6;
            let d = |s: f64| {
                signed_distance(&(a + va * s), 0.1, &(b + vb * s), 0.2).unwrap()
            };
            let fd = (d(eps) - d(-eps)) / (2.0 * eps);
            let mut s = ParticleState::empty(false);
            s.push(a, va, 0.1, 1.0, 0.0);
            s.push(b, vb, 0.2, 1.0, 0.0);
            let g = distance_gradient(&s, 0, 1).unwrap();
            let gv = g.dot(&s.stacked_velocities());
            prop_assert!((fd - gv).abs() <= 10.0 * eps, "fd {} vs G.V {}", fd, gv);
        }
    }
}
