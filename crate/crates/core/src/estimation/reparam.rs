//! Smooth maps from unconstrained search coordinates to model parameters.

use crate::curves::{ConstructionMode, Family};

const OPEN_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum ParamMap {
    /// `x²`, onto `[0, ∞)`
    NonNegative,
    /// `sin² x`, onto `[0, 1]`
    Unit,
    /// `ε + (1 − ε) sin² x`, onto `(0, 1]`
    UnitOpen,
    /// `1 + x²`, onto `[1, ∞)`
    AtLeastOne,
    /// `lo + (hi − lo) sin² x`
    Box(f64, f64),
    Free,
}

impl ParamMap {
    pub fn forward(self, x: f64) -> f64 {
        match self {
            ParamMap::NonNegative => x * x,
            ParamMap::Unit => x.sin().powi(2).min(1.0),
            ParamMap::UnitOpen => (OPEN_FLOOR + (1.0 - OPEN_FLOOR) * x.sin().powi(2)).min(1.0),
            ParamMap::AtLeastOne => 1.0 + x * x,
            ParamMap::Box(lo, hi) => (lo + (hi - lo) * x.sin().powi(2)).clamp(lo, hi),
            ParamMap::Free => x,
        }
    }

    /// Search coordinate of `theta`, pulled slightly inside the range: the
    /// maps are flat at their bounds, so a start exactly on a bound could
    /// not move.
    pub fn inverse(self, theta: f64) -> f64 {
        let unit = |t: f64| t.clamp(1e-4, 1.0 - 1e-4).sqrt().asin();
        match self {
            ParamMap::NonNegative => theta.max(1e-4).sqrt(),
            ParamMap::Unit => unit(theta),
            ParamMap::UnitOpen => unit((theta - OPEN_FLOOR) / (1.0 - OPEN_FLOOR)),
            ParamMap::AtLeastOne => (theta - 1.0).max(1e-4).sqrt(),
            ParamMap::Box(lo, hi) => unit((theta - lo) / (hi - lo)),
            ParamMap::Free => theta,
        }
    }

    /// Range from which Latin-hypercube starts are drawn.
    pub fn start_range(self) -> (f64, f64) {
        match self {
            ParamMap::NonNegative => (0.0, 5.0),
            ParamMap::Unit | ParamMap::UnitOpen => (0.02, 0.98),
            ParamMap::AtLeastOne => (1.0, 5.0),
            ParamMap::Box(lo, hi) => (lo, hi.min(lo + 10.0)),
            ParamMap::Free => (-2.0, 2.0),
        }
    }
}

/// Parameterization used when fitting `family` in `mode`.
///
/// Constrained beta-family fits hold α at 1 (the only genuine exponent), so
/// the search runs over `(a, β)` and the third parameter is filled in later.
pub(crate) fn maps_for(family: Family, mode: ConstructionMode) -> Vec<ParamMap> {
    use ParamMap::*;
    match (family, mode) {
        (Family::KakwaniSpecial | Family::KakwaniBeta, ConstructionMode::Constrained) => {
            vec![Unit, UnitOpen]
        }
        (Family::Ortega, ConstructionMode::Constrained) => vec![NonNegative, UnitOpen],
        (Family::SarabiaL2, ConstructionMode::Constrained) => vec![NonNegative, UnitOpen, AtLeastOne],
        (Family::L3, ConstructionMode::Constrained) => vec![NonNegative, UnitOpen, AtLeastOne, UnitOpen],
        (Family::KakwaniSpecial, ConstructionMode::Diagnostic) => vec![Box(-10.0, 10.0), Box(1e-6, 10.0)],
        (Family::KakwaniBeta, ConstructionMode::Diagnostic) => {
            vec![Box(-10.0, 10.0), Box(1e-6, 10.0), Box(1e-6, 10.0)]
        }
        (Family::Ortega, ConstructionMode::Diagnostic) => vec![Box(-0.5, 50.0), Box(1e-6, 10.0)],
        (Family::SarabiaL2, ConstructionMode::Diagnostic) => {
            vec![Box(-0.5, 50.0), Box(1e-6, 10.0), Box(1e-3, 50.0)]
        }
        (Family::L3, ConstructionMode::Diagnostic) => {
            vec![Box(-0.5, 50.0), Box(1e-6, 10.0), Box(1e-3, 50.0), Box(1e-6, 1.0)]
        }
        (Family::Gq, _) => vec![Free, Free, Free],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_inside_range() {
        let cases = [
            (ParamMap::NonNegative, 2.5),
            (ParamMap::Unit, 0.3),
            (ParamMap::UnitOpen, 0.7),
            (ParamMap::AtLeastOne, 3.2),
            (ParamMap::Box(-0.5, 50.0), 4.0),
            (ParamMap::Free, -1.7),
        ];
        for (m, t) in cases {
            assert!((m.forward(m.inverse(t)) - t).abs() < 1e-12, "{m:?}");
        }
    }

    #[test]
    fn images_respect_bounds() {
        for i in -200..=200 {
            let x = i as f64 * 0.05;
            assert!(ParamMap::NonNegative.forward(x) >= 0.0);
            let u = ParamMap::UnitOpen.forward(x);
            assert!(u > 0.0 && u <= 1.0);
            assert!(ParamMap::AtLeastOne.forward(x) >= 1.0);
            let b = ParamMap::Box(1e-3, 50.0).forward(x);
            assert!((1e-3..=50.0).contains(&b));
        }
    }
}
