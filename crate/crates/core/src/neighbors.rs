//! Bucket-sort neighbor detection and carry-over of adhesion between
//! successive neighbor sets.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::geometry::{signed_distance, ParticleState};
use crate::projection::ContactKey;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridParams {
    pub cell_size: f64,
    pub d_neigh: f64,
}

impl GridParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_neigh > 0.0 && self.d_neigh.is_finite()) {
            return Err(Error::InvalidInput(format!("d_neigh must be > 0, got {}", self.d_neigh)));
        }
        if !(self.cell_size > self.d_neigh && self.cell_size.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "cell_size ({}) must exceed d_neigh ({})",
                self.cell_size, self.d_neigh
            )));
        }
        Ok(())
    }
}

/// Contacts under consideration at one step, each with its adhesion potential.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NeighborSet {
    pub gammas: BTreeMap<ContactKey, f64>,
    pub built_at_step: usize,
    /// Pair distances evaluated while building the set.
    pub distance_evaluations: usize,
}

impl NeighborSet {
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.gammas.keys().filter_map(|k| match k {
            ContactKey::Pair(i, j) => Some((*i, *j)),
            _ => None,
        })
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    pub fn contains(&self, key: &ContactKey) -> bool {
        self.gammas.contains_key(key)
    }

    pub fn gamma(&self, key: &ContactKey) -> f64 {
        self.gammas.get(key).copied().unwrap_or(0.0)
    }

    pub fn glued(&self) -> impl Iterator<Item = (&ContactKey, &f64)> {
        self.gammas.iter().filter(|(_, g)| **g < 0.0)
    }
}

fn cell_of(x: f64, size: f64) -> i64 {
    (x / size).floor() as i64
}

/// All particle pairs with `D_ij <= d_neigh`, found through a hashed cell grid.
///
/// Cells have side `cell_size`; the stencil covers every cell that may hold a
/// center within `d_neigh + 2 r_max`, which is the 27-cell stencil whenever
/// `cell_size >= d_neigh + 2 r_max`.
pub fn find_neighbors(state: &ParticleState, params: &GridParams) -> Result<NeighborSet> {
    params.validate()?;
    let n = state.len();
    let mut out = NeighborSet::default();
    if n < 2 {
        return Ok(out);
    }
    let size = params.cell_size;
    let reach_dist = params.d_neigh + 2.0 * state.max_radius();
    let reach = (reach_dist / size).ceil().max(1.0) as i64;

    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    let cells: Vec<[i64; 3]> = state
        .positions
        .iter()
        .map(|p| [cell_of(p.x, size), cell_of(p.y, size), cell_of(p.z, size)])
        .collect();
    for (i, c) in cells.iter().enumerate() {
        grid.entry(*c).or_default().push(i);
    }

    for i in 0..n {
        let c = cells[i];
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                for dz in -reach..=reach {
                    let Some(members) = grid.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) else {
                        continue;
                    };
                    for &j in members {
                        if j <= i {
                            continue;
                        }
                        out.distance_evaluations += 1;
                        let d = signed_distance(&state.positions[i], state.radii[i], &state.positions[j], state.radii[j])?;
                        if d <= params.d_neigh {
                            out.gammas.insert(ContactKey::Pair(i, j), 0.0);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// All-pairs scan with the same acceptance rule as [`find_neighbors`].
pub fn brute_force_neighbors(state: &ParticleState, d_neigh: f64) -> Result<NeighborSet> {
    let n = state.len();
    let mut out = NeighborSet::default();
    for i in 0..n {
        for j in i + 1..n {
            out.distance_evaluations += 1;
            let d = signed_distance(&state.positions[i], state.radii[i], &state.positions[j], state.radii[j])?;
            if d <= d_neigh {
                out.gammas.insert(ContactKey::Pair(i, j), 0.0);
            }
        }
    }
    Ok(out)
}

/// Copy adhesion for contacts present in both sets; new contacts start at zero.
///
/// A glued contact (`gamma < 0`) missing from `fresh` is an error.
pub fn carry_gammas(old: &NeighborSet, fresh: &NeighborSet) -> Result<NeighborSet> {
    if let Some((key, _)) = old.glued().find(|(k, _)| !fresh.contains(k)) {
        return Err(Error::GluedPairMissing(key.to_string()));
    }
    let gammas = fresh
        .gammas
        .keys()
        .map(|k| (*k, old.gammas.get(k).copied().unwrap_or(0.0)))
        .collect();
    Ok(NeighborSet {
        gammas,
        built_at_step: fresh.built_at_step,
        distance_evaluations: fresh.distance_evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    fn pair_at(d: f64) -> ParticleState {
        let mut s = ParticleState::empty(false);
        s.push(Vec3::zeros(), Vec3::zeros(), 0.1, 1.0, 0.0);
        s.push(Vec3::new(0.2 + d, 0.0, 0.0), Vec3::zeros(), 0.1, 1.0, 0.0);
        s
    }

    #[test]
    fn close_pair_found_far_pair_not() {
        let p = GridParams {
            cell_size: 0.1,
            d_neigh: 0.05,
        };
        assert_eq!(find_neighbors(&pair_at(0.025), &p).unwrap().len(), 1);
        assert_eq!(find_neighbors(&pair_at(0.1), &p).unwrap().len(), 0);
    }

    #[test]
    fn cell_size_must_exceed_cutoff() {
        let p = GridParams {
            cell_size: 0.05,
            d_neigh: 0.05,
        };
        assert!(find_neighbors(&pair_at(0.0), &p).is_err());
    }

    #[test]
    fn carry_rules() {
        let mut old = NeighborSet::default();
        old.gammas.insert(ContactKey::Pair(0, 1), -0.7);
        old.gammas.insert(ContactKey::Pair(1, 2), 0.0);
        let mut fresh = NeighborSet::default();
        fresh.gammas.insert(ContactKey::Pair(0, 1), 0.0);
        fresh.gammas.insert(ContactKey::Pair(2, 3), 0.0);
        let c = carry_gammas(&old, &fresh).unwrap();
        assert_eq!(c.gamma(&ContactKey::Pair(0, 1)), -0.7);
        assert_eq!(c.gammas[&ContactKey::Pair(2, 3)], 0.0);
        assert!(!c.contains(&ContactKey::Pair(1, 2)));
    }

    #[test]
    fn dropping_glued_pair_is_an_error() {
        let mut old = NeighborSet::default();
        old.gammas.insert(ContactKey::Pair(0, 1), -0.1);
        let fresh = NeighborSet::default();
        assert!(matches!(carry_gammas(&old, &fresh), Err(Error::GluedPairMissing(_))));
    }
}
