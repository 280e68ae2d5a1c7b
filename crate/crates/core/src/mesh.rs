//! Uniform space-time grids and the time-major ordering of the all-at-once unknowns.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Direction in which a grid is coarsened to produce the next multigrid level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoarseningDirection {
    /// Semi-coarsening in space: Δx doubles.
    SpaceX,
    /// Semi-coarsening in time: Δt doubles.
    TimeT,
    /// Full space-time coarsening. Only used by the two-grid anisotropy study.
    FullST,
}

impl CoarseningDirection {
    pub fn symbol(self) -> char {
        match self {
            Self::SpaceX => 'x',
            Self::TimeT => 't',
            Self::FullST => 'f',
        }
    }

    pub fn coarsens_space(self) -> bool {
        matches!(self, Self::SpaceX | Self::FullST)
    }

    pub fn coarsens_time(self) -> bool {
        matches!(self, Self::TimeT | Self::FullST)
    }
}

impl fmt::Display for CoarseningDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

impl FromStr for CoarseningDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "x" | "X" => Ok(Self::SpaceX),
            "t" | "T" => Ok(Self::TimeT),
            "f" | "F" | "xt" => Ok(Self::FullST),
            other => Err(Error::Parse {
                what: "coarsening direction",
                input: other.to_string(),
            }),
        }
    }
}

/// Per-element conductivity `k` (W/(m K)) and volumetric heat capacity `c` (J/(m^3 K)).
#[derive(Debug, Clone, PartialEq)]
pub struct ElementMaterials {
    pub conductivity: Vec<f64>,
    pub capacity: Vec<f64>,
}

impl ElementMaterials {
    pub fn uniform(n_el: usize, k: f64, c: f64) -> Self {
        Self {
            conductivity: vec![k; n_el],
            capacity: vec![c; n_el],
        }
    }

    pub fn len(&self) -> usize {
        self.conductivity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conductivity.is_empty()
    }

    /// Thermal diffusivity `k_e / c_e` of every element.
    pub fn diffusivity(&self) -> impl Iterator<Item = f64> + '_ {
        self.conductivity
            .iter()
            .zip(&self.capacity)
            .map(|(k, c)| k / c)
    }
}

/// One level of the space-time mesh: `n_el` equal elements on `[0, L]` and
/// `n_t` backward-Euler steps on `[0, t_T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeGrid {
    length: f64,
    final_time: f64,
    n_el: usize,
    n_t: usize,
    dx: f64,
    dt: f64,
    materials: Option<ElementMaterials>,
}

impl SpaceTimeGrid {
    /// Grid geometry without material arrays.
    pub fn geometry(length: f64, final_time: f64, n_el: usize, n_t: usize) -> Result<Self> {
        if n_el == 0 {
            return Err(invalid("n_el", "must be at least 1"));
        }
        if n_t == 0 {
            return Err(invalid("n_t", "must be at least 1"));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(invalid("length", format!("must be positive, got {length}")));
        }
        if !(final_time > 0.0 && final_time.is_finite()) {
            return Err(invalid(
                "final_time",
                format!("must be positive, got {final_time}"),
            ));
        }
        Ok(Self {
            length,
            final_time,
            n_el,
            n_t,
            dx: length / n_el as f64,
            dt: final_time / n_t as f64,
            materials: None,
        })
    }

    /// Finest grid with its material arrays.
    pub fn build_fine(
        length: f64,
        final_time: f64,
        n_el: usize,
        n_t: usize,
        conductivity: Vec<f64>,
        capacity: Vec<f64>,
    ) -> Result<Self> {
        Self::geometry(length, final_time, n_el, n_t)?.with_materials(ElementMaterials {
            conductivity,
            capacity,
        })
    }

    pub fn with_materials(mut self, materials: ElementMaterials) -> Result<Self> {
        self.set_materials(materials)?;
        Ok(self)
    }

    pub fn set_materials(&mut self, materials: ElementMaterials) -> Result<()> {
        if materials.conductivity.len() != self.n_el || materials.capacity.len() != self.n_el {
            return Err(Error::DimensionMismatch(format!(
                "material arrays have lengths {} and {}, grid has {} elements",
                materials.conductivity.len(),
                materials.capacity.len(),
                self.n_el
            )));
        }
        if let Some(k) = materials.conductivity.iter().find(|k| !(**k > 0.0)) {
            return Err(invalid("conductivity", format!("must be positive, got {k}")));
        }
        if let Some(c) = materials.capacity.iter().find(|c| !(**c > 0.0)) {
            return Err(invalid("capacity", format!("must be positive, got {c}")));
        }
        self.materials = Some(materials);
        Ok(())
    }

    /// Coarse grid geometry in direction `dir`. The result carries no materials.
    pub fn coarsen(&self, dir: CoarseningDirection) -> Result<Self> {
        if !self.can_coarsen(dir) {
            return Err(Error::IllegalCoarsening {
                direction: dir,
                n_el: self.n_el,
                n_t: self.n_t,
            });
        }
        let (mut n_el, mut n_t, mut dx, mut dt) = (self.n_el, self.n_t, self.dx, self.dt);
        if dir.coarsens_space() {
            n_el /= 2;
            dx *= 2.0;
        }
        if dir.coarsens_time() {
            n_t /= 2;
            dt *= 2.0;
        }
        Ok(Self {
            length: self.length,
            final_time: self.final_time,
            n_el,
            n_t,
            dx,
            dt,
            materials: None,
        })
    }

    pub fn can_coarsen(&self, dir: CoarseningDirection) -> bool {
        let space_ok = self.n_el % 2 == 0;
        let time_ok = self.n_t % 2 == 0;
        match dir {
            CoarseningDirection::SpaceX => space_ok,
            CoarseningDirection::TimeT => time_ok,
            CoarseningDirection::FullST => space_ok && time_ok,
        }
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn n_el(&self) -> usize {
        self.n_el
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_nodes(&self) -> usize {
        self.n_el + 1
    }

    pub fn n_time_points(&self) -> usize {
        self.n_t + 1
    }

    pub fn n_dofs(&self) -> usize {
        self.n_nodes() * self.n_time_points()
    }

    /// Flat index of node `i` at time point `n`.
    #[inline]
    pub fn dof(&self, n: usize, i: usize) -> usize {
        debug_assert!(n <= self.n_t && i <= self.n_el);
        n * (self.n_el + 1) + i
    }

    /// Inverse of [`dof`](Self::dof): `(n, i)`.
    #[inline]
    pub fn unflatten(&self, index: usize) -> (usize, usize) {
        (index / (self.n_el + 1), index % (self.n_el + 1))
    }

    /// Centre of element `e`, `(e + 1/2) Δx`.
    pub fn element_centre(&self, e: usize) -> f64 {
        (e as f64 + 0.5) * self.dx
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn materials(&self) -> Result<&ElementMaterials> {
        self.materials.as_ref().ok_or(Error::MissingMaterials)
    }

    pub fn has_materials(&self) -> bool {
        self.materials.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fine_grid_spacing() {
        let g = SpaceTimeGrid::build_fine(1.0, 1.0, 4, 4, vec![1.0; 4], vec![1.0; 4]).unwrap();
        assert_eq!(g.dx(), 0.25);
        assert_eq!(g.dt(), 0.25);
        assert_eq!(g.n_dofs(), 25);

        let g = SpaceTimeGrid::geometry(0.1, 10.0, 256, 256).unwrap();
        assert_eq!(g.dx(), 3.90625e-4);
        assert_eq!(g.dt(), 3.90625e-2);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SpaceTimeGrid::geometry(1.0, 1.0, 0, 4).is_err());
        assert!(SpaceTimeGrid::geometry(1.0, 1.0, 4, 0).is_err());
        assert!(SpaceTimeGrid::geometry(-1.0, 1.0, 4, 4).is_err());
        assert!(SpaceTimeGrid::build_fine(1.0, 1.0, 2, 2, vec![1.0], vec![1.0; 2]).is_err());
        assert!(SpaceTimeGrid::build_fine(1.0, 1.0, 2, 2, vec![1.0, 0.0], vec![1.0; 2]).is_err());
        assert!(SpaceTimeGrid::build_fine(1.0, 1.0, 2, 2, vec![1.0; 2], vec![-1.0, 1.0]).is_err());
    }

    #[test]
    fn coarsening_counts() {
        let g = SpaceTimeGrid::geometry(1.0, 1.0, 256, 256).unwrap();
        let x = g.coarsen(CoarseningDirection::SpaceX).unwrap();
        assert_eq!((x.n_el(), x.n_t()), (128, 256));
        assert!(!x.has_materials());

        let g = SpaceTimeGrid::geometry(1.0, 1.0, 8, 256).unwrap();
        let t = g.coarsen(CoarseningDirection::TimeT).unwrap();
        assert_eq!((t.n_el(), t.n_t()), (8, 128));

        let g = SpaceTimeGrid::geometry(1.0, 1.0, 5, 8).unwrap();
        assert!(matches!(
            g.coarsen(CoarseningDirection::SpaceX),
            Err(Error::IllegalCoarsening { .. })
        ));
        assert!(g.coarsen(CoarseningDirection::FullST).is_err());
        assert!(g.coarsen(CoarseningDirection::TimeT).is_ok());
    }

    #[test]
    fn direction_symbols_round_trip() {
        for d in [
            CoarseningDirection::SpaceX,
            CoarseningDirection::TimeT,
            CoarseningDirection::FullST,
        ] {
            assert_eq!(d.to_string().parse::<CoarseningDirection>().unwrap(), d);
        }
        assert!("y".parse::<CoarseningDirection>().is_err());
    }

    proptest! {
        #[test]
        fn coarsening_preserves_extent(ex in 1u32..9, et in 1u32..9, l in 0.01f64..10.0, t in 0.01f64..10.0) {
            let g = SpaceTimeGrid::geometry(l, t, 1 << ex, 1 << et).unwrap();
            for d in [CoarseningDirection::SpaceX, CoarseningDirection::TimeT, CoarseningDirection::FullST] {
                let c = g.coarsen(d).unwrap();
                prop_assert_eq!(c.length(), l);
                prop_assert_eq!(c.final_time(), t);
            }
        }

        #[test]
        fn coarsening_commutes(ex in 1u32..9, et in 1u32..9) {
            let g = SpaceTimeGrid::geometry(0.1, 10.0, 1 << ex, 1 << et).unwrap();
            let xt = g.coarsen(CoarseningDirection::SpaceX).unwrap().coarsen(CoarseningDirection::TimeT).unwrap();
            let tx = g.coarsen(CoarseningDirection::TimeT).unwrap().coarsen(CoarseningDirection::SpaceX).unwrap();
            prop_assert_eq!((xt.n_el(), xt.n_t(), xt.dx(), xt.dt()), (tx.n_el(), tx.n_t(), tx.dx(), tx.dt()));
        }

        #[test]
        fn dof_index_round_trips(n_el in 1usize..40, n_t in 1usize..40, a in 0usize..1000, b in 0usize..1000) {
            let g = SpaceTimeGrid::geometry(1.0, 1.0, n_el, n_t).unwrap();
            let (n, i) = (a % (n_t + 1), b % (n_el + 1));
            prop_assert_eq!(g.unflatten(g.dof(n, i)), (n, i));
        }
    }
}
