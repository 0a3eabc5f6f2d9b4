use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Hyperparameters of the dual encoder/decoder model.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct CicConfig {
    pub d_private: usize,
    pub d_shared: usize,
    pub hidden: Vec<usize>,
    /// Reconstruction weight.
    pub alpha: f64,
    /// Orthogonality weight.
    pub beta1: f64,
    /// Shared-latent agreement weight.
    pub beta2: f64,
    /// Weight, relative to `alpha`, of reconstructing the cause window from
    /// the cause encoder's shared latent alone (private block zeroed).
    pub shared_recon: f64,
    /// Same, from the effect encoder's shared latent.
    pub cross_recon: f64,
    pub lr: f64,
    /// Epochs over which the KL weight ramps linearly up to 1.
    pub kl_warmup: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Verdict is non-causal at or below `m`.
    pub m: f64,
    /// Verdict is causal at or above `upper_m`.
    #[cfg_attr(feature = "serde", serde(rename = "M"))]
    pub upper_m: f64,
    /// Stop once the epoch loss has not improved for this many epochs.
    pub patience: Option<usize>,
}

impl Default for CicConfig {
    fn default() -> Self {
        Self {
            d_private: 4,
            d_shared: 4,
            hidden: vec![64, 64],
            alpha: 7.0,
            beta1: 1.0,
            beta2: 20.0,
            shared_recon: 1.0,
            cross_recon: 1.0,
            lr: 1e-3,
            kl_warmup: 0,
            epochs: 200,
            batch_size: 64,
            seed: 0,
            m: 0.25,
            upper_m: 0.75,
            patience: None,
        }
    }
}

impl CicConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidConfig(msg));
        if !(0.0 <= self.m && self.m < self.upper_m && self.upper_m <= 1.0) {
            return bad(format!("thresholds need 0 <= m < M <= 1, got m={} M={}", self.m, self.upper_m));
        }
        if self.d_private == 0 || self.d_shared == 0 || self.hidden.contains(&0) {
            return bad("latent and hidden widths must be at least 1".into());
        }
        // lr = 0 is accepted and freezes the parameters.
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be non-negative, got {}", self.lr));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        for (name, w) in [
            ("alpha", self.alpha),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("shared_recon", self.shared_recon),
            ("cross_recon", self.cross_recon),
        ] {
            if !(w >= 0.0 && w.is_finite()) {
                return bad(format!("{name} must be a finite non-negative weight, got {w}"));
            }
        }
        if self.beta1 > 0.0 && self.d_private != self.d_shared {
            return bad(format!(
                "beta1 > 0 needs d_private == d_shared, got {} and {}",
                self.d_private, self.d_shared
            ));
        }
        if self.patience == Some(0) {
            return bad("patience must be at least 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        CicConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let base = CicConfig::default();
        let cases = [
            CicConfig { m: 0.8, ..base.clone() },
            CicConfig { upper_m: 1.2, ..base.clone() },
            CicConfig { m: -0.1, ..base.clone() },
            CicConfig { d_shared: 0, ..base.clone() },
            CicConfig { hidden: vec![8, 0], ..base.clone() },
            CicConfig { lr: -1e-3, ..base.clone() },
            CicConfig { d_private: 3, ..base.clone() },
            CicConfig { beta2: f64::NAN, ..base.clone() },
        ];
        for c in cases {
            assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))), "{c:?}");
        }
        CicConfig { d_private: 3, beta1: 0.0, ..base }.validate().unwrap();
    }
}
