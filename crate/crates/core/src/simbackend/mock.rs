use std::f64::consts::PI;

use crate::error::Result;
use crate::geometry::{bounding_box, feed_point, outline_vertices, polygon_area, DesignVector};

use super::{Fidelity, FrequencyGrid, ResponseCurve, SimBackend};

/// Speed of light in mm·GHz.
pub const C_LIGHT_MM_GHZ: f64 = 299.792458;

/// Deterministic multi-mode resonator standing in for a full-wave solver.
///
/// Mode `n` sits at `n * c / (2 * sqrt(area) * sqrt(eps_r))`, so resonances
/// scale exactly with the inverse of the design size. Mode depth depends on
/// where the feed sits inside the bounding box and on how irregular the
/// outline is; mode width grows with irregularity. The coarse model shifts
/// every resonance up by 2% and makes it 10% shallower.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MockEm {
    pub eps_r: f64,
    pub max_depth_db: f64,
    /// Fractional half-width of a mode for a perfectly regular outline.
    pub fractional_width: f64,
    pub irregularity_gain: f64,
    pub coarse_freq_shift: f64,
    pub coarse_depth_factor: f64,
    pub floor_db: f64,
    /// Number of mode orders summed. A fixed count (rather than a frequency
    /// cutoff) keeps the response exactly covariant under resizing.
    pub n_modes: usize,
}

impl Default for MockEm {
    fn default() -> Self {
        Self {
            eps_r: 2.55,
            max_depth_db: 25.0,
            fractional_width: 0.05,
            irregularity_gain: 4.0,
            coarse_freq_shift: 1.02,
            coarse_depth_factor: 0.9,
            floor_db: -40.0,
            n_modes: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub freq_ghz: f64,
    pub depth_db: f64,
    pub width_ghz: f64,
}

impl MockEm {
    /// Fundamental resonance of the fine model.
    pub fn fundamental_ghz(&self, area_mm2: f64) -> f64 {
        C_LIGHT_MM_GHZ / (2.0 * area_mm2.sqrt() * self.eps_r.sqrt())
    }

    pub fn modes(&self, x: &DesignVector, fidelity: Fidelity) -> Result<Vec<Mode>> {
        let vertices = outline_vertices(x)?;
        let f1 = self.fundamental_ghz(polygon_area(&vertices));

        let (lo, hi) = bounding_box(&vertices);
        let feed = feed_point(x);
        let unit = |p: f64, a: f64, b: f64| {
            if b > a {
                ((p - a) / (b - a)).clamp(0.0, 1.0)
            } else {
                0.5
            }
        };
        let u = unit(feed.x, lo.x, hi.x);
        let v = unit(feed.y, lo.y, hi.y);

        let n = x.rho.len() as f64;
        let mean = x.rho.iter().sum::<f64>() / n;
        let var = x.rho.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
        let s = var.sqrt() / mean;

        let (shift, depth_factor) = match fidelity {
            Fidelity::Fine => (1.0, 1.0),
            Fidelity::Coarse => (self.coarse_freq_shift, self.coarse_depth_factor),
        };

        let mut modes = Vec::with_capacity(self.n_modes);
        for order in 1..=self.n_modes {
            let fn_ = order as f64 * f1;
            let k = order as f64;
            let coupling = ((k * PI * u).sin() * (k * PI * v).sin()).abs();
            let depth =
                (self.max_depth_db * coupling * (0.6 + 0.4 * (k * s * PI).cos())).max(0.0);
            modes.push(Mode {
                freq_ghz: fn_ * shift,
                depth_db: depth * depth_factor,
                width_ghz: self.fractional_width * fn_ * (1.0 + self.irregularity_gain * s),
            });
        }
        Ok(modes)
    }
}

impl SimBackend for MockEm {
    fn name(&self) -> String {
        "mock".to_string()
    }

    fn simulate(
        &self,
        x: &DesignVector,
        grid: &FrequencyGrid,
        fidelity: Fidelity,
    ) -> Result<ResponseCurve> {
        let modes = self.modes(x, fidelity)?;
        let values = grid
            .frequencies()
            .into_iter()
            .map(|f| {
                let r: f64 = modes
                    .iter()
                    .map(|m| {
                        let b2 = m.width_ghz * m.width_ghz;
                        -m.depth_db * b2 / ((f - m.freq_ghz).powi(2) + b2)
                    })
                    .sum();
                // `+ 0.0` turns a possible -0.0 into 0.0.
                r.clamp(self.floor_db, 0.0) + 0.0
            })
            .collect();
        ResponseCurve::new(*grid, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::scale_design;
    use crate::simbackend::extract_resonances;

    /// Square with half-diagonal `c * 0.5`, feed at `(rho_f, phi_f)`.
    fn square(c: f64, rho_f: f64, phi_f: f64) -> DesignVector {
        DesignVector::new(c, rho_f, phi_f, vec![0.5; 4], vec![1.0; 4]).unwrap()
    }

    #[test]
    fn square_fundamental_matches_closed_form() {
        // Target f1 = 5.5 GHz: side = c / (2 f1 sqrt(eps)); area = side^2 = (c*0.5)^2 * 2.
        let side = C_LIGHT_MM_GHZ / (2.0 * 5.5 * 2.55f64.sqrt());
        let c = side / (0.5 * 2f64.sqrt());
        let x = square(c, 0.2, 0.3);
        let grid = FrequencyGrid::default();
        let curve = MockEm::default().simulate(&x, &grid, Fidelity::Fine).unwrap();
        assert!((curve.argmin_freq() - 5.5).abs() <= grid.step() + 1e-12);
    }

    #[test]
    fn coarse_argmin_is_shifted() {
        let x = square(25.0, 0.2, 0.3);
        let grid = FrequencyGrid::default();
        let m = MockEm::default();
        let fine = m.simulate(&x, &grid, Fidelity::Fine).unwrap();
        let coarse = m.simulate(&x, &grid, Fidelity::Coarse).unwrap();
        assert!((coarse.argmin_freq() - 1.02 * fine.argmin_freq()).abs() <= grid.step() + 1e-12);
    }

    #[test]
    fn scaling_divides_every_mode() {
        let m = MockEm::default();
        let x = square(25.0, 0.2, 0.3);
        let a = m.modes(&x, Fidelity::Fine).unwrap();
        let b = m.modes(&scale_design(&x, 50.0), Fidelity::Fine).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p.freq_ghz / 2.0 - q.freq_ghz).abs() < 1e-12);
            assert!((p.depth_db - q.depth_db).abs() < 1e-12);
        }
    }

    #[test]
    fn scaled_resonances_follow_inverse_law() {
        let m = MockEm::default();
        let grid = FrequencyGrid::default();
        let x = square(40.0, 0.2, 0.3);
        let r1 = extract_resonances(&m.simulate(&x, &grid, Fidelity::Fine).unwrap(), -3.0).unwrap();
        let y = scale_design(&x, 40.0 * 1.25);
        let r2 = extract_resonances(&m.simulate(&y, &grid, Fidelity::Fine).unwrap(), -3.0).unwrap();
        assert!((r1[0].freq_ghz / 1.25 - r2[0].freq_ghz).abs() <= grid.step());
    }

    #[test]
    fn centered_feed_kills_even_modes() {
        let m = MockEm::default();
        let modes = m.modes(&square(25.0, 0.0, 0.0), Fidelity::Fine).unwrap();
        assert!(modes[1].depth_db.abs() < 1e-9);
        assert!(modes[0].depth_db > 0.0);
    }
}
