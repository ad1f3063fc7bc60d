//! Rigid boundaries with prescribed motion: half-spaces, spheres and rigid
//! assemblies of spheres.

use nalgebra::{Rotation3, Unit};

use crate::error::{Error, Result};
use crate::geometry::{ensure_finite, SparseGradientRow, Vec3};
use crate::projection::{ConstraintRow, ContactKey, RowKind};

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    /// Free side is `{x : normal . (x - point) > 0}`.
    HalfSpace { point: Vec3, normal: Vec3 },
    Sphere { center: Vec3, radius: f64 },
    /// Spheres moving as one rigid body.
    Assembly { spheres: Vec<(Vec3, f64)> },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Motion {
    Fixed,
    /// Rotation by `omega * t` about `axis` through `center`.
    Rotation { center: Vec3, axis: Vec3, omega: f64 },
    Translation { velocity: Vec3 },
}

/// Rigid placement at a given time: `x -> rotation * (x - pivot) + pivot + shift`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub rotation: Rotation3<f64>,
    pub pivot: Vec3,
    pub shift: Vec3,
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            rotation: Rotation3::identity(),
            pivot: Vec3::zeros(),
            shift: Vec3::zeros(),
        }
    }

    pub fn point(&self, x: &Vec3) -> Vec3 {
        self.rotation * (x - self.pivot) + self.pivot + self.shift
    }

    pub fn direction(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }
}

impl Motion {
    pub fn pose(&self, t: f64) -> Pose {
        match self {
            Motion::Fixed => Pose::identity(),
            Motion::Rotation { center, axis, omega } => Pose {
                rotation: Rotation3::from_axis_angle(&Unit::new_normalize(*axis), omega * t),
                pivot: *center,
                shift: Vec3::zeros(),
            },
            Motion::Translation { velocity } => Pose {
                rotation: Rotation3::identity(),
                pivot: Vec3::zeros(),
                shift: velocity * t,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Obstacle {
    pub shape: Shape,
    pub motion: Motion,
    pub roughness: f64,
    /// Contacts with a non-gluey obstacle never stick (`gamma` stays 0).
    pub gluey: bool,
}

impl Obstacle {
    pub fn fixed(shape: Shape) -> Self {
        Obstacle {
            shape,
            motion: Motion::Fixed,
            roughness: 0.0,
            gluey: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.shape {
            Shape::HalfSpace { point, normal } => {
                ensure_finite(point, "half-space point")?;
                ensure_finite(normal, "half-space normal")?;
                if normal.norm() == 0.0 {
                    return Err(Error::InvalidInput("half-space normal is zero".into()));
                }
            }
            Shape::Sphere { center, radius } => {
                ensure_finite(center, "sphere center")?;
                if !(*radius > 0.0) {
                    return Err(Error::InvalidInput("obstacle radius must be > 0".into()));
                }
            }
            Shape::Assembly { spheres } => {
                if spheres.is_empty() {
                    return Err(Error::InvalidInput("empty sphere assembly".into()));
                }
                for (c, r) in spheres {
                    ensure_finite(c, "assembly sphere")?;
                    if !(*r > 0.0) {
                        return Err(Error::InvalidInput("obstacle radius must be > 0".into()));
                    }
                }
            }
        }
        if let Motion::Rotation { axis, .. } = &self.motion {
            if axis.norm() == 0.0 {
                return Err(Error::InvalidInput("rotation axis is zero".into()));
            }
        }
        if !(self.roughness >= 0.0) {
            return Err(Error::InvalidInput("obstacle roughness must be >= 0".into()));
        }
        Ok(())
    }

    pub fn member_count(&self) -> usize {
        match &self.shape {
            Shape::Assembly { spheres } => spheres.len(),
            _ => 1,
        }
    }

    /// Radius entering the adhesion scaling; infinite for half-spaces.
    pub fn member_radius(&self, member: usize) -> f64 {
        match &self.shape {
            Shape::HalfSpace { .. } => f64::INFINITY,
            Shape::Sphere { radius, .. } => *radius,
            Shape::Assembly { spheres } => spheres[member].1,
        }
    }

    /// Signed distance and unit normal (obstacle toward particle) at `pose`.
    pub fn distance(&self, member: usize, x: &Vec3, r: f64, pose: &Pose) -> Result<(f64, Vec3)> {
        let sphere = |c: &Vec3, rad: f64| -> Result<(f64, Vec3)> {
            let c = pose.point(c);
            let d = x - c;
            let len = d.norm();
            if len == 0.0 {
                return Err(Error::CoincidentCenters);
            }
            Ok((len - rad - r, d / len))
        };
        match &self.shape {
            Shape::HalfSpace { point, normal } => {
                let n = pose.direction(&normal.normalize());
                let p = pose.point(point);
                Ok((n.dot(&(x - p)) - r, n))
            }
            Shape::Sphere { center, radius } => sphere(center, *radius),
            Shape::Assembly { spheres } => {
                let (c, rad) = &spheres[member];
                sphere(c, *rad)
            }
        }
    }

    /// Body-frame sphere enclosing an assembly, for culling.
    pub fn bounding_sphere(&self) -> Option<(Vec3, f64)> {
        match &self.shape {
            Shape::Assembly { spheres } => {
                let n = spheres.len() as f64;
                let centroid = spheres.iter().fold(Vec3::zeros(), |a, (c, _)| a + c) / n;
                let extent = spheres
                    .iter()
                    .map(|(c, rad)| (c - centroid).norm() + rad)
                    .fold(0.0, f64::max);
                Some((centroid, extent))
            }
            _ => None,
        }
    }
}

/// Linearised particle/obstacle row against the obstacle placed at `t_next`.
///
/// A moving obstacle may overlap the particle slightly at `t_next`; the row
/// then pushes the particle out. Only a center lying inside the obstacle is
/// rejected.
pub fn evaluate_obstacle_constraint(
    particle: usize,
    x: &Vec3,
    r: f64,
    obstacle_index: usize,
    obstacle: &Obstacle,
    member: usize,
    t_next: f64,
) -> Result<ConstraintRow> {
    ensure_finite(x, "particle position")?;
    let pose = obstacle.motion.pose(t_next);
    let (offset, normal) = obstacle.distance(member, x, r, &pose)?;
    if offset + r < 0.0 {
        return Err(Error::InsideObstacle {
            particle,
            obstacle: obstacle_index,
            distance: offset,
        });
    }
    Ok(ConstraintRow {
        row: SparseGradientRow {
            entries: vec![(particle, normal)],
            offset,
        },
        kind: RowKind::Inequality,
        key: ContactKey::Obstacle {
            particle,
            obstacle: obstacle_index,
            member,
        },
    })
}
