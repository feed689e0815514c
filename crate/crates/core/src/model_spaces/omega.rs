//! Points of the non-isotropic Heisenberg group `H^n_ω`.

/// Planar coordinates per factor plus the weighted vertical coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct OmegaPoint {
    pub xy: Vec<[f64; 2]>,
    pub z: f64,
}

impl OmegaPoint {
    pub fn identity(n: usize) -> Self {
        OmegaPoint { xy: vec![[0.0; 2]; n], z: 0.0 }
    }

    /// Dilation `(x, y, z) ↦ (λx, λy, λ²z)`.
    pub fn dilate(&self, lambda: f64) -> Self {
        OmegaPoint { xy: self.xy.iter().map(|p| [lambda * p[0], lambda * p[1]]).collect(), z: lambda * lambda * self.z }
    }

    pub fn inverse(&self) -> Self {
        OmegaPoint { xy: self.xy.iter().map(|p| [-p[0], -p[1]]).collect(), z: -self.z }
    }
}

/// `Σᵢ (xᵢ² + yᵢ² + |z|/Σⱼαⱼ)^{1/2}`.
pub fn homogeneous_norm_omega(weights: &[f64], g: &OmegaPoint) -> f64 {
    let zi = g.z.abs() / weights.iter().sum::<f64>();
    g.xy.iter().map(|p| (p[0] * p[0] + p[1] * p[1] + zi).sqrt()).sum()
}
