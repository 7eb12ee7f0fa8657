use crate::error::{Error, Result};

/// Numerical thresholds shared by every stage of the pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Minimum reciprocal condition number of `M_u` and `K_phi` for a pencil
    /// to be accepted.
    pub nonsingular_rcond: f64,
    /// Minimum reciprocal condition number of any matrix inverted while
    /// forming the updated system.
    pub ill_defined_rcond: f64,
    /// Largest relative asymmetry of an input matrix that is silently
    /// symmetrized.
    pub symmetry: f64,
    /// Relative gap (to the spectral radius) below which two eigenvalues are
    /// considered equal, or an eigenvalue considered zero.
    pub degenerate_rel: f64,
    /// Relative distance at which a requested eigenvalue matches a computed one.
    pub matching_rel: f64,
    /// Relative singular-value cutoff for numerical rank decisions.
    pub rank_rel: f64,
    /// Relative tolerance for the block pattern of Γ₁.
    pub structure: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            nonsingular_rcond: 1e-12,
            ill_defined_rcond: 1e-13,
            symmetry: 1e-10,
            degenerate_rel: 1e-8,
            matching_rel: 1e-6,
            rank_rel: 1e-12,
            structure: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("nonsingular_rcond", self.nonsingular_rcond),
            ("ill_defined_rcond", self.ill_defined_rcond),
            ("symmetry", self.symmetry),
            ("degenerate_rel", self.degenerate_rel),
            ("matching_rel", self.matching_rel),
            ("rank_rel", self.rank_rel),
            ("structure", self.structure),
        ];
        for (name, v) in all {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "tolerance {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}
