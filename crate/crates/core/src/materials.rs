//! Two-material SIMP interpolation and the design fields used by the test problems.

use crate::error::{invalid, Result};
use crate::mesh::{ElementMaterials, SpaceTimeGrid};

/// Properties of the insulating (`chi = 0`) and conducting (`chi = 1`) phases
/// together with the SIMP penalty exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialPair {
    pub k_ins: f64,
    pub k_con: f64,
    pub c_ins: f64,
    pub c_con: f64,
    pub p_k: f64,
    pub p_c: f64,
}

impl MaterialPair {
    pub const DEFAULT_P_K: f64 = 3.0;
    pub const DEFAULT_P_C: f64 = 2.0;

    pub fn new(k_ins: f64, k_con: f64, c_ins: f64, c_con: f64) -> Result<Self> {
        Self::with_penalties(k_ins, k_con, c_ins, c_con, Self::DEFAULT_P_K, Self::DEFAULT_P_C)
    }

    pub fn with_penalties(
        k_ins: f64,
        k_con: f64,
        c_ins: f64,
        c_con: f64,
        p_k: f64,
        p_c: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("k_ins", k_ins),
            ("k_con", k_con),
            ("c_ins", c_ins),
            ("c_con", c_con),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        for (name, p) in [("p_k", p_k), ("p_c", p_c)] {
            if !(p >= 1.0 && p.is_finite()) {
                return Err(invalid(name, format!("must be at least 1, got {p}")));
            }
        }
        Ok(Self {
            k_ins,
            k_con,
            c_ins,
            c_con,
            p_k,
            p_c,
        })
    }

    /// Aluminium conductor and epoxy insulator, rounded to three significant digits.
    pub fn aluminium_epoxy() -> Self {
        Self {
            k_ins: 1.97e-1,
            k_con: 2.14e2,
            c_ins: 1.67e6,
            c_con: 2.41e6,
            p_k: Self::DEFAULT_P_K,
            p_c: Self::DEFAULT_P_C,
        }
    }

    /// `(k, c)` at volume fraction `chi`.
    pub fn eval(&self, chi: f64) -> Result<(f64, f64)> {
        check_fraction(chi)?;
        Ok((
            self.k_ins + (self.k_con - self.k_ins) * chi.powf(self.p_k),
            self.c_ins + (self.c_con - self.c_ins) * chi.powf(self.p_c),
        ))
    }

    /// `(dk/dchi, dc/dchi)` at volume fraction `chi`.
    pub fn derivatives(&self, chi: f64) -> Result<(f64, f64)> {
        check_fraction(chi)?;
        Ok((
            self.p_k * (self.k_con - self.k_ins) * chi.powf(self.p_k - 1.0),
            self.p_c * (self.c_con - self.c_ins) * chi.powf(self.p_c - 1.0),
        ))
    }

    /// Diffusivity `k_SIMP(chi) / c_SIMP(chi)`.
    pub fn diffusivity(&self, chi: f64) -> Result<f64> {
        let (k, c) = self.eval(chi)?;
        Ok(k / c)
    }

    /// Element materials for a whole design field.
    pub fn materials_for(&self, design: &DesignField) -> ElementMaterials {
        let (conductivity, capacity) = design
            .values()
            .iter()
            .map(|&chi| self.eval(chi).expect("design field is box constrained"))
            .unzip();
        ElementMaterials {
            conductivity,
            capacity,
        }
    }
}

fn check_fraction(chi: f64) -> Result<()> {
    if (0.0..=1.0).contains(&chi) {
        Ok(())
    } else {
        Err(invalid("chi", format!("must lie in [0, 1], got {chi}")))
    }
}

/// Same as [`MaterialPair::eval`].
pub fn simp_eval(chi: f64, mat: &MaterialPair) -> Result<(f64, f64)> {
    mat.eval(chi)
}

/// Same as [`MaterialPair::derivatives`].
pub fn simp_derivatives(chi: f64, mat: &MaterialPair) -> Result<(f64, f64)> {
    mat.derivatives(chi)
}

pub fn clamp01(v: f64) -> f64 {
    if v <= 0.0 {
        0.0
    } else if v >= 1.0 {
        1.0
    } else {
        v
    }
}

/// Per-element volume fraction of conductor, `0 <= chi_e <= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignField(Vec<f64>);

impl DesignField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(invalid("chi", format!("must lie in [0, 1], got {v}")));
        }
        Ok(Self(values))
    }

    pub fn uniform(n_el: usize, chi: f64) -> Result<Self> {
        Self::new(vec![chi; n_el])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// `element,chi` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("element,chi\n");
        for (e, chi) in self.0.iter().enumerate() {
            out.push_str(&format!("{e},{chi:e}\n"));
        }
        out
    }
}

/// Three-piece linear ramp `clamp01(1/2 - alpha (x_e - x_offset))`: conductor on the
/// left, insulator on the right, transition of width `1/alpha` centred at `x_offset`.
pub fn design_ramp(grid: &SpaceTimeGrid, alpha: f64, x_offset: f64) -> Result<DesignField> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid("alpha", format!("must be positive, got {alpha}")));
    }
    Ok(DesignField(
        (0..grid.n_el())
            .map(|e| clamp01(0.5 - alpha * (grid.element_centre(e) - x_offset)))
            .collect(),
    ))
}

/// Two conductors separated by an insulating band of width `F L` centred at `L/2`,
/// or the complement when `inverted`.
pub fn design_gap(grid: &SpaceTimeGrid, fraction: f64, inverted: bool) -> Result<DesignField> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(invalid(
            "fraction",
            format!("must lie in (0, 1), got {fraction}"),
        ));
    }
    let l = grid.length();
    Ok(DesignField(
        (0..grid.n_el())
            .map(|e| {
                let x = grid.element_centre(e);
                let chi = clamp01(((x - l / 2.0) / l).abs() * 2.0 / fraction - 1.0);
                if inverted {
                    1.0 - chi
                } else {
                    chi
                }
            })
            .collect(),
    ))
}
