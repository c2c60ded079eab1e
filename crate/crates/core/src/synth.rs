//! Synthetic trilinear tensors with controlled additive noise.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::rng_from_seed;
use crate::tensor::{reconstruct_cp, DenseTensor3, Dims, Mode};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorDistribution {
    /// Uniform on `[0, 1)`.
    Uniform,
    /// Standard normal.
    #[default]
    Gaussian,
}

impl FromStr for FactorDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(FactorDistribution::Uniform),
            "gaussian" | "normal" => Ok(FactorDistribution::Gaussian),
            other => Err(Error::Validation(format!("unknown factor distribution '{other}'"))),
        }
    }
}

impl fmt::Display for FactorDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FactorDistribution::Uniform => "uniform",
            FactorDistribution::Gaussian => "gaussian",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub dims: Dims,
    pub rank: usize,
    /// `‖E‖ / ‖X̂‖` for the additive Gaussian noise `E`.
    pub noise_level: f64,
    pub factor_distribution: FactorDistribution,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let smallest = self.dims.as_array().into_iter().min().unwrap_or(0);
        if smallest == 0 {
            return Err(Error::Validation(format!("dims must be positive, got {}", self.dims)));
        }
        if self.rank == 0 || self.rank > smallest {
            return Err(Error::Validation(format!(
                "rank {} must lie in 1..={smallest} for a {} tensor",
                self.rank, self.dims
            )));
        }
        if !(self.noise_level >= 0.0) || !self.noise_level.is_finite() {
            return Err(Error::Validation(format!(
                "noise level must be finite and >= 0, got {}",
                self.noise_level
            )));
        }
        Ok(())
    }
}

/// A synthetic tensor together with the factors that generated its noiseless part.
#[derive(Clone, Debug)]
pub struct SynthTensor {
    pub tensor: DenseTensor3,
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
}

/// Draws `A`, `B`, `C` (in that order, row by row) and then the noise entries from one
/// ChaCha8 stream seeded by `spec.seed`.
pub fn synth_with_factors(spec: &SynthSpec) -> Result<SynthTensor> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
        match spec.factor_distribution {
            FactorDistribution::Uniform => rng.random::<f64>(),
            FactorDistribution::Gaussian => StandardNormal.sample(rng),
        }
    };
    let [a, b, c] = Mode::ALL.map(|mode| {
        Matrix::from_fn(spec.dims.get(mode), spec.rank, |_, _| draw(&mut rng)).expect("finite draws")
    });
    let clean = reconstruct_cp(&a, &b, &c)?;
    let tensor = if spec.noise_level > 0.0 {
        let noise = DenseTensor3::from_fn(spec.dims, |_, _, _| StandardNormal.sample(&mut rng))?;
        let scale = spec.noise_level * clean.frobenius_norm() / noise.frobenius_norm();
        clean.add(&noise.scale(scale))?
    } else {
        clean
    };
    Ok(SynthTensor { tensor, a, b, c })
}

pub fn synth_tensor(spec: &SynthSpec) -> Result<DenseTensor3> {
    Ok(synth_with_factors(spec)?.tensor)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(noise: f64) -> SynthSpec {
        SynthSpec {
            dims: Dims(12, 9, 5),
            rank: 3,
            noise_level: noise,
            factor_distribution: FactorDistribution::Gaussian,
            seed: 4,
        }
    }

    #[test]
    fn deterministic_in_seed() {
        assert_eq!(synth_tensor(&spec(0.1)).unwrap(), synth_tensor(&spec(0.1)).unwrap());
        let other = SynthSpec { seed: 5, ..spec(0.1) };
        assert_ne!(synth_tensor(&spec(0.1)).unwrap(), synth_tensor(&other).unwrap());
    }

    #[test]
    fn noise_level_is_exact() {
        let s = synth_with_factors(&spec(0.05)).unwrap();
        let clean = reconstruct_cp(&s.a, &s.b, &s.c).unwrap();
        let ratio = s.tensor.distance(&clean).unwrap() / clean.frobenius_norm();
        assert!((ratio - 0.05).abs() <= 1e-12, "{ratio}");
    }

    #[test]
    fn uniform_factors_are_in_unit_interval() {
        let s = synth_with_factors(&SynthSpec {
            factor_distribution: FactorDistribution::Uniform,
            ..spec(0.0)
        })
        .unwrap();
        assert!(s.a.values().iter().all(|&v| (0.0..1.0).contains(&v)));
    }

    #[test]
    fn infeasible_specs() {
        assert!(synth_tensor(&SynthSpec { rank: 6, ..spec(0.0) }).is_err());
        assert!(synth_tensor(&SynthSpec { rank: 0, ..spec(0.0) }).is_err());
        assert!(synth_tensor(&spec(-0.1)).is_err());
    }
}
