use rand::Rng;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{outer, CMat, CVec, C64};

/// IRS reflection vector v with |v_n| = 1, plus an optional lifted Gram
/// matrix V over ṽ = [vᵀ, 1]ᵀ from the relaxed phase-shift problem.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProfile {
    v: CVec,
    gram: Option<CMat>,
}

impl PhaseProfile {
    /// Accepts any nonzero entries and projects them onto the unit circle.
    pub fn from_vector(v: CVec) -> Result<Self> {
        if v.iter().any(|z| !(z.norm() > 0.0) || !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Degenerate("phase vector has a zero or non-finite entry".into()));
        }
        let v = v.map(|z| z / z.norm());
        Ok(Self { v, gram: None })
    }

    pub fn from_phases(phases: &[f64]) -> Self {
        Self {
            v: CVec::from_iterator(phases.len(), phases.iter().map(|&p| C64::from_polar(1.0, p))),
            gram: None,
        }
    }

    pub fn ones(n: usize) -> Self {
        Self { v: CVec::from_element(n, C64::new(1.0, 0.0)), gram: None }
    }

    /// Uniform phases on [0, 2π).
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let phases: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        Self::from_phases(&phases)
    }

    pub fn with_gram(mut self, gram: CMat) -> Self {
        self.gram = Some(gram);
        self
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn v(&self) -> &CVec {
        &self.v
    }

    pub fn gram(&self) -> Option<&CMat> {
        self.gram.as_ref()
    }

    /// ṽ = [vᵀ, 1]ᵀ.
    pub fn augmented(&self) -> CVec {
        let n = self.v.len();
        CVec::from_fn(n + 1, |i, _| if i < n { self.v[i] } else { C64::new(1.0, 0.0) })
    }

    /// ṽṽ†, the rank-one lifting.
    pub fn lifted(&self) -> CMat {
        outer(&self.augmented())
    }

    pub fn phases(&self) -> Vec<f64> {
        self.v.iter().map(|z| z.arg()).collect()
    }

    pub fn max_modulus_error(&self) -> f64 {
        self.v.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lifted_has_unit_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = PhaseProfile::random(6, &mut rng);
        let v = p.lifted();
        for i in 0..7 {
            assert!((v[(i, i)].re - 1.0).abs() < 1e-14);
        }
        assert_eq!(p.augmented()[6], C64::new(1.0, 0.0));
    }

    #[test]
    fn projection_to_unit_circle() {
        let p = PhaseProfile::from_vector(CVec::from_vec(vec![C64::new(3.0, 4.0), C64::new(0.0, -0.1)])).unwrap();
        assert!(p.max_modulus_error() < 1e-15);
        assert!(PhaseProfile::from_vector(CVec::from_vec(vec![C64::new(0.0, 0.0)])).is_err());
    }
}
