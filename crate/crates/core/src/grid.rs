//! Vertex-centred Cartesian grids on axis-aligned boxes.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Boundary closure attached to a grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    /// Fields vanish on boundary nodes.
    Dirichlet,
    /// `sum a_l^2 n_l d_l u + a u = 0` on the boundary, mean-zero solution space.
    RobinType,
}

impl fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryKind::Dirichlet => "dirichlet",
            BoundaryKind::RobinType => "robin-type",
        })
    }
}

impl std::str::FromStr for BoundaryKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet" => Ok(BoundaryKind::Dirichlet),
            "robin-type" | "robin" => Ok(BoundaryKind::RobinType),
            other => Err(Error::InvalidArgument(format!("unknown boundary kind `{other}`"))),
        }
    }
}

/// One face of the box: `axis` in 0..3 and outward orientation `sign` = -1 or +1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Face {
    pub axis: usize,
    pub sign: i8,
}

impl Face {
    pub fn all() -> [Face; 6] {
        let mut out = [Face { axis: 0, sign: -1 }; 6];
        for axis in 0..3 {
            out[2 * axis] = Face { axis, sign: -1 };
            out[2 * axis + 1] = Face { axis, sign: 1 };
        }
        out
    }
}

/// Node `(i, j, k)` sits at `origin + (i, j, k) h`; storage index is `i + nx (j + ny k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<S> {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub h: S,
    pub origin: [S; 3],
    pub kind: BoundaryKind,
}

impl<S: Real> Grid<S> {
    pub fn new(dims: [usize; 3], h: S, origin: [S; 3], kind: BoundaryKind) -> Result<Self> {
        if dims.iter().any(|&n| n < 3) {
            return Err(Error::InvalidGrid(format!("every axis needs at least 3 nodes, got {dims:?}")));
        }
        if !(h > S::zero()) || !h.is_finite() {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {h}")));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(Self { nx: dims[0], ny: dims[1], nz: dims[2], h, origin, kind })
    }

    /// Cube `[0, 1]^3` with `n` nodes per axis.
    pub fn unit_cube(n: usize, kind: BoundaryKind) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 3 nodes, got {n}")));
        }
        Self::new([n; 3], S::one() / S::from_usize_lossy(n - 1), [S::zero(); 3], kind)
    }

    /// Cube `[-L/2, L/2]^3` with `n` nodes per axis.
    pub fn centered_cube(n: usize, side: S, kind: BoundaryKind) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 3 nodes, got {n}")));
        }
        let half = side / S::lit(2.0);
        Self::new([n; 3], side / S::from_usize_lossy(n - 1), [-half; 3], kind)
    }

    pub fn with_kind(&self, kind: BoundaryKind) -> Self {
        Self { kind, ..self.clone() }
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    /// Number of nodes.
    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nx * (j + self.ny * k)
    }

    #[inline]
    pub fn ijk(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.nx;
        let r = idx / self.nx;
        [i, r % self.ny, r / self.ny]
    }

    /// Index of the node displaced by `delta` along `axis` (caller keeps it in range).
    #[inline]
    pub fn shift(&self, idx: usize, axis: usize, delta: isize) -> usize {
        let stride = [1, self.nx, self.nx * self.ny][axis] as isize;
        (idx as isize + delta * stride) as usize
    }

    #[inline]
    pub fn coord(&self, idx: usize) -> [S; 3] {
        let p = self.ijk(idx);
        [0, 1, 2].map(|a| self.origin[a] + S::from_usize_lossy(p[a]) * self.h)
    }

    pub fn lengths(&self) -> [S; 3] {
        self.dims().map(|n| S::from_usize_lossy(n - 1) * self.h)
    }

    pub fn center(&self) -> [S; 3] {
        let l = self.lengths();
        [0, 1, 2].map(|a| self.origin[a] + l[a] / S::lit(2.0))
    }

    pub fn volume(&self) -> S {
        let l = self.lengths();
        l[0] * l[1] * l[2]
    }

    pub fn surface_area(&self) -> S {
        let l = self.lengths();
        S::lit(2.0) * (l[0] * l[1] + l[1] * l[2] + l[0] * l[2])
    }

    pub fn diameter(&self) -> S {
        let l = self.lengths();
        (l[0] * l[0] + l[1] * l[1] + l[2] * l[2]).sqrt()
    }

    /// Outward orientation on `axis` if the node lies on that pair of faces.
    #[inline]
    pub fn side(&self, idx: usize, axis: usize) -> Option<i8> {
        let p = self.ijk(idx)[axis];
        let n = self.dims()[axis];
        if p == 0 {
            Some(-1)
        } else if p == n - 1 {
            Some(1)
        } else {
            None
        }
    }

    #[inline]
    pub fn is_boundary(&self, idx: usize) -> bool {
        (0..3).any(|a| self.side(idx, a).is_some())
    }

    /// Faces containing the node, ordered by axis.
    pub fn faces_of(&self, idx: usize) -> Vec<Face> {
        (0..3).filter_map(|axis| self.side(idx, axis).map(|sign| Face { axis, sign })).collect()
    }

    /// Volume of the dual cell around the node; these weights sum to the box volume.
    pub fn weight(&self, idx: usize) -> S {
        let h3 = self.h * self.h * self.h;
        let halves = (0..3).filter(|&a| self.side(idx, a).is_some()).count();
        h3 / S::from_usize_lossy(1 << halves)
    }

    pub fn weights(&self) -> Vec<S> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }

    /// Nodes on `face` with their dual facet areas; these sum to the face area.
    pub fn facet_weights(&self, face: Face) -> Vec<(usize, S)> {
        let h2 = self.h * self.h;
        (0..self.len())
            .filter(|&idx| self.side(idx, face.axis) == Some(face.sign))
            .map(|idx| {
                let halves = (0..3).filter(|&a| a != face.axis && self.side(idx, a).is_some()).count();
                (idx, h2 / S::from_usize_lossy(1 << halves))
            })
            .collect()
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_boundary(i)).collect()
    }

    /// Same layout (dimensions, spacing and origin); boundary kind may differ.
    pub fn same_layout(&self, other: &Self) -> bool {
        self.dims() == other.dims() && self.h == other.h && self.origin == other.origin
    }

    pub fn check_layout(&self, other: &Self) -> Result<()> {
        if self.same_layout(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{:?}/h={} vs {:?}/h={}", self.dims(), self.h, other.dims(), other.h)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert!(Grid::<f64>::new([2, 3, 3], 0.1, [0.0; 3], BoundaryKind::Dirichlet).is_err());
        assert!(Grid::<f64>::new([3, 3, 3], 0.0, [0.0; 3], BoundaryKind::Dirichlet).is_err());
        assert!(Grid::<f64>::new([3, 3, 3], f64::NAN, [0.0; 3], BoundaryKind::Dirichlet).is_err());
    }

    #[test]
    fn indexing_round_trips() {
        let g = Grid::<f64>::new([4, 5, 6], 0.5, [1.0, 2.0, 3.0], BoundaryKind::Dirichlet).unwrap();
        for idx in 0..g.len() {
            let [i, j, k] = g.ijk(idx);
            assert_eq!(g.idx(i, j, k), idx);
        }
        assert_eq!(g.coord(g.idx(1, 2, 3)), [1.5, 3.0, 4.5]);
        assert_eq!(g.shift(g.idx(1, 1, 1), 2, 1), g.idx(1, 1, 2));
    }

    #[test]
    fn weights_sum_to_volume_and_area() {
        let g = Grid::<f64>::new([5, 4, 7], 0.25, [0.0; 3], BoundaryKind::RobinType).unwrap();
        let vol: f64 = g.weights().iter().sum();
        assert!((vol - g.volume()).abs() < 1e-14);
        let area: f64 = Face::all().iter().flat_map(|&f| g.facet_weights(f)).map(|(_, w)| w).sum();
        assert!((area - g.surface_area()).abs() < 1e-13);
    }

    #[test]
    fn unit_cube_volume() {
        let g = Grid::<f64>::unit_cube(9, BoundaryKind::Dirichlet).unwrap();
        assert_eq!(g.volume(), 1.0);
        assert_eq!(g.boundary_nodes().len(), 9 * 9 * 9 - 7 * 7 * 7);
        assert!((g.diameter() - 3f64.sqrt()).abs() < 1e-15);
    }
}
