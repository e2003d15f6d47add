use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::DesignVector;

use super::{load_curve, Fidelity, FrequencyGrid, ResponseCurve, SimBackend};

/// Serves pre-computed curves from a directory.
///
/// A curve for design `x` at a given fidelity lives in
/// `<dir>/<key>.csv`, where `key` is [`TabulatedBackend::key`]. Curves are
/// resampled onto the requested grid. Unknown designs are a backend failure.
#[derive(Debug, Clone)]
pub struct TabulatedBackend {
    dir: PathBuf,
}

impl TabulatedBackend {
    pub fn new(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        if !dir.is_dir() {
            return Err(Error::Config(format!(
                "tabulated backend directory {} does not exist",
                dir.display()
            )));
        }
        Ok(Self { dir })
    }

    /// `<fidelity>-<first 16 hex digits of sha256(design text)>`.
    pub fn key(x: &DesignVector, fidelity: Fidelity) -> String {
        let digest = Sha256::digest(x.to_text().as_bytes());
        let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        format!("{fidelity}-{hex}")
    }

    pub fn path_for(&self, x: &DesignVector, fidelity: Fidelity) -> PathBuf {
        self.dir.join(format!("{}.csv", Self::key(x, fidelity)))
    }
}

impl SimBackend for TabulatedBackend {
    fn name(&self) -> String {
        format!("tabulated:{}", self.dir.display())
    }

    fn simulate(
        &self,
        x: &DesignVector,
        grid: &FrequencyGrid,
        fidelity: Fidelity,
    ) -> Result<ResponseCurve> {
        let path = self.path_for(x, fidelity);
        if !path.is_file() {
            return Err(Error::BackendFailure(format!(
                "no tabulated {fidelity} response for design (expected {})",
                path.display()
            )));
        }
        load_curve(&path, grid).map_err(|e| Error::BackendFailure(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simbackend::{save_curve, MockEm};

    #[test]
    fn serves_saved_curves_and_fails_on_unknown() {
        let dir = tempfile::tempdir().unwrap();
        let backend = TabulatedBackend::new(dir.path()).unwrap();
        let grid = FrequencyGrid::default();
        let x = DesignVector::new(30.0, 0.1, 0.2, vec![0.5; 5], vec![0.3; 5]).unwrap();
        let curve = MockEm::default().simulate(&x, &grid, Fidelity::Fine).unwrap();
        assert!(matches!(
            backend.simulate(&x, &grid, Fidelity::Fine),
            Err(Error::BackendFailure(_))
        ));
        save_curve(&backend.path_for(&x, Fidelity::Fine), &curve).unwrap();
        let got = backend.simulate(&x, &grid, Fidelity::Fine).unwrap();
        for (a, b) in curve.values.iter().zip(&got.values) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(backend.simulate(&x, &grid, Fidelity::Coarse).is_err());
    }
}
