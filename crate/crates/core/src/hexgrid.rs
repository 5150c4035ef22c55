//! Planar hexagonal tessellation in pointy-top axial coordinates.
//!
//! Cell size follows an aperture-7 hierarchy: each resolution step shrinks the
//! cell area by 7, so the edge length scales by `7^(-1/2)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SgplError};
use crate::points::{Coord, PointSet};

const SQRT3: f64 = 1.732_050_807_568_877_2;

pub const DEFAULT_BASE_EDGE: f64 = 4.0;
pub const DEFAULT_RESOLUTION: u32 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub resolution: u32,
    /// Hexagon edge length at resolution 0, in planar units.
    pub base_edge: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { resolution: DEFAULT_RESOLUTION, base_edge: DEFAULT_BASE_EDGE }
    }
}

impl GridSpec {
    pub fn new(resolution: u32, base_edge: f64) -> Result<Self> {
        let spec = Self { resolution, base_edge };
        spec.validate()?;
        Ok(spec)
    }

    /// A grid whose cells have exactly the given edge length.
    pub fn with_edge(edge: f64) -> Result<Self> {
        Self::new(0, edge)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_edge.is_finite() && self.base_edge > 0.0) {
            return Err(SgplError::Config(format!(
                "base_edge must be finite and positive, got {}",
                self.base_edge
            )));
        }
        if !(self.edge() > 0.0) {
            return Err(SgplError::Config(format!(
                "resolution {} underflows the edge length",
                self.resolution
            )));
        }
        Ok(())
    }

    /// Edge length at this resolution: `base_edge * 7^(-resolution/2)`.
    pub fn edge(&self) -> f64 {
        self.base_edge * 7f64.powf(-(self.resolution as f64) / 2.0)
    }

    pub fn cell_area(&self) -> f64 {
        let e = self.edge();
        1.5 * SQRT3 * e * e
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellId {
    pub q: i64,
    pub r: i64,
}

impl CellId {
    pub const fn new(q: i64, r: i64) -> Self {
        Self { q, r }
    }
}

impl std::fmt::Display for CellId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.q, self.r)
    }
}

pub fn cell_center(spec: &GridSpec, cell: CellId) -> Coord {
    let e = spec.edge();
    let q = cell.q as f64;
    let r = cell.r as f64;
    [e * SQRT3 * (q + r / 2.0), e * 1.5 * r]
}

/// Fractional axial transform followed by cube rounding.
///
/// On an exact boundary the component with the largest rounding error is
/// reset, checked in the order q, s, r.
pub fn point_to_cell(spec: &GridSpec, p: Coord) -> Result<CellId> {
    if !(p[0].is_finite() && p[1].is_finite()) {
        return Err(SgplError::InvalidInput(format!(
            "non-finite coordinate ({}, {})",
            p[0], p[1]
        )));
    }
    let e = spec.edge();
    let qf = (SQRT3 / 3.0 * p[0] - p[1] / 3.0) / e;
    let rf = (2.0 / 3.0 * p[1]) / e;
    Ok(cube_round(qf, rf))
}

fn cube_round(qf: f64, rf: f64) -> CellId {
    let sf = -qf - rf;
    let mut q = qf.round();
    let mut r = rf.round();
    let s = sf.round();
    let dq = (q - qf).abs();
    let dr = (r - rf).abs();
    let ds = (s - sf).abs();
    if dq > dr && dq > ds {
        q = -r - s;
    } else if ds > dr {
        // s is implied; q and r stay.
    } else {
        r = -q - s;
    }
    CellId::new(q as i64, r as i64)
}

pub fn hex_distance(a: CellId, b: CellId) -> u64 {
    let dq = a.q - b.q;
    let dr = a.r - b.r;
    (dq.unsigned_abs() + dr.unsigned_abs() + (dq + dr).unsigned_abs()) / 2
}

/// All cells within hex distance `k` of `center`, center included, in
/// ascending `CellId` order. Contains `1 + 3k(k+1)` cells.
pub fn k_ring(center: CellId, k: u32) -> Vec<CellId> {
    let k = k as i64;
    let mut out = Vec::with_capacity((1 + 3 * k * (k + 1)) as usize);
    for dq in -k..=k {
        let lo = (-k).max(-dq - k);
        let hi = k.min(-dq + k);
        for dr in lo..=hi {
            out.push(CellId::new(center.q + dq, center.r + dr));
        }
    }
    out
}

/// Partition of point indices by containing cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellAssignment {
    pub grid: GridSpec,
    /// Member lists hold point indices in ascending order.
    pub cells: BTreeMap<CellId, Vec<usize>>,
}

impl CellAssignment {
    pub fn members(&self, cell: &CellId) -> Option<&[usize]> {
        self.cells.get(cell).map(Vec::as_slice)
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_points(&self) -> usize {
        self.cells.values().map(Vec::len).sum()
    }
}

pub fn assign_all(spec: &GridSpec, points: &PointSet) -> Result<CellAssignment> {
    assign_coords(spec, &points.coords)
}

pub fn assign_coords(spec: &GridSpec, coords: &[Coord]) -> Result<CellAssignment> {
    spec.validate()?;
    if coords.is_empty() {
        return Err(SgplError::InvalidInput("cannot assign an empty point set".into()));
    }
    let mut cells: BTreeMap<CellId, Vec<usize>> = BTreeMap::new();
    for (i, p) in coords.iter().enumerate() {
        let c = point_to_cell(spec, *p)?;
        cells.entry(c).or_default().push(i);
    }
    Ok(CellAssignment { grid: *spec, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn edge_scaling_is_aperture_seven() {
        let g = GridSpec::default();
        assert!((g.edge() - 4.0 / 7f64.powf(3.5)).abs() < 1e-15);
        for r in 0..15 {
            let a = GridSpec::new(r, 4.0).unwrap().edge();
            let b = GridSpec::new(r + 1, 4.0).unwrap().edge();
            assert!(a > 0.0 && b > 0.0);
            assert!((b / a - 7f64.powf(-0.5)).abs() < 1e-14);
        }
    }

    #[test]
    fn bad_grid_rejected() {
        assert!(GridSpec::new(3, 0.0).is_err());
        assert!(GridSpec::new(3, f64::NAN).is_err());
        assert!(GridSpec::new(3, -1.0).is_err());
    }

    #[test]
    fn centers_of_unit_steps() {
        let g = GridSpec::new(2, 3.0).unwrap();
        let e = g.edge();
        assert_eq!(cell_center(&g, CellId::new(0, 0)), [0.0, 0.0]);
        let c = cell_center(&g, CellId::new(1, 0));
        assert!((c[0] - e * 3f64.sqrt()).abs() < 1e-15 && c[1] == 0.0);
        let c = cell_center(&g, CellId::new(0, 1));
        assert!((c[0] - e * 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((c[1] - e * 1.5).abs() < 1e-15);
    }

    #[test]
    fn origin_maps_to_origin_cell() {
        let g = GridSpec::default();
        assert_eq!(point_to_cell(&g, [0.0, 0.0]).unwrap(), CellId::new(0, 0));
    }

    #[test]
    fn non_finite_point_rejected() {
        let g = GridSpec::default();
        assert!(matches!(
            point_to_cell(&g, [f64::NAN, 0.0]),
            Err(SgplError::InvalidInput(_))
        ));
        assert!(point_to_cell(&g, [0.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn distances() {
        let o = CellId::new(0, 0);
        assert_eq!(hex_distance(o, o), 0);
        assert_eq!(hex_distance(o, CellId::new(1, 0)), 1);
        // (0,0) -> (1,0) -> (2,-1)
        assert_eq!(hex_distance(o, CellId::new(2, -1)), 2);
        assert_eq!(hex_distance(o, CellId::new(2, 1)), 3);
    }

    #[test]
    fn ring_sizes() {
        let c = CellId::new(5, -3);
        assert_eq!(k_ring(c, 0), vec![c]);
        assert_eq!(k_ring(c, 1).len(), 7);
        assert_eq!(k_ring(c, 2).len(), 19);
    }

    #[test]
    fn assign_edge_cases() {
        let g = GridSpec::default();
        let one = PointSet::from_coords(vec![[0.3, 0.3]]);
        let a = assign_all(&g, &one).unwrap();
        assert_eq!(a.n_cells(), 1);
        assert_eq!(a.cells.values().next().unwrap(), &vec![0]);

        let two = PointSet::from_coords(vec![[0.3, 0.3], [0.3, 0.3]]);
        let a = assign_all(&g, &two).unwrap();
        assert_eq!(a.n_cells(), 1);
        assert_eq!(a.cells.values().next().unwrap().len(), 2);

        let empty = PointSet::from_coords(vec![]);
        assert!(matches!(assign_all(&g, &empty), Err(SgplError::InvalidInput(_))));
    }

    fn cell() -> impl Strategy<Value = CellId> {
        (-1000i64..1000, -1000i64..1000).prop_map(|(q, r)| CellId::new(q, r))
    }

    proptest! {
        #[test]
        fn ring_members_and_boundary(c in cell(), k in 0u32..8) {
            let ring = k_ring(c, k);
            prop_assert_eq!(ring.len() as u32, 1 + 3 * k * (k + 1));
            prop_assert!(ring.iter().all(|m| hex_distance(c, *m) <= k as u64));
            let on_boundary = ring.iter().filter(|m| hex_distance(c, **m) == k as u64).count();
            if k >= 1 {
                prop_assert_eq!(on_boundary as u32, 6 * k);
            }
        }

        #[test]
        fn center_round_trip(q in -1_000_000i64..=1_000_000, r in -1_000_000i64..=1_000_000,
                             res in 0u32..12) {
            let g = GridSpec::new(res, 4.0).unwrap();
            let c = CellId::new(q, r);
            prop_assert_eq!(point_to_cell(&g, cell_center(&g, c)).unwrap(), c);
        }

        #[test]
        fn distance_is_a_metric(a in cell(), b in cell(), c in cell()) {
            prop_assert_eq!(hex_distance(a, b), hex_distance(b, a));
            prop_assert_eq!(hex_distance(a, b) == 0, a == b);
            prop_assert!(hex_distance(a, c) <= hex_distance(a, b) + hex_distance(b, c));
        }
    }
}
