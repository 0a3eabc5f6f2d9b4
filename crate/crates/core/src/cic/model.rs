//! Dual encoder/decoder network, its loss and the hand-written backward pass.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use num_traits::Float;
use rand::Rng;

use super::config::CicConfig;
use super::posterior::{
    kl_grad, kl_to_standard_normal, mse, mse_grad, ortho_batch, ortho_batch_grad, standard_normal,
    GaussianPosterior,
};
use crate::error::{shape_err, Error, Result};
use crate::matrix::Matrix;
use crate::neural::{next_line, parse_num, Mlp, MlpGrads};

/// Posteriors for one batch. `zxy_x` comes from the cause encoder and
/// `zxy_y` from the effect encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSplit {
    pub zx: GaussianPosterior,
    pub zxy_x: GaussianPosterior,
    pub zy: GaussianPosterior,
    pub zxy_y: GaussianPosterior,
}

/// Loss components for one batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub total: f64,
    pub l_vae: f64,
    pub l_diff: f64,
    pub l_equal: f64,
    /// Shared-only reconstruction term, already weighted.
    pub l_shared: f64,
    /// Rows skipped by the orthogonality penalty because a mean was ~0.
    pub degenerate_rows: usize,
}

/// Standard-normal noise for the four posteriors of one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNoise {
    pub zx: Matrix,
    pub zxy_x: Matrix,
    pub zy: Matrix,
    pub zxy_y: Matrix,
}

impl BatchNoise {
    pub fn draw<R: Rng + ?Sized>(batch: usize, d_private: usize, d_shared: usize, rng: &mut R) -> Self {
        Self {
            zx: standard_normal(batch, d_private, rng),
            zxy_x: standard_normal(batch, d_shared, rng),
            zy: standard_normal(batch, d_private, rng),
            zxy_y: standard_normal(batch, d_shared, rng),
        }
    }
}

/// Encoders `E_x`, `E_y` and decoders `D_x`, `D_y`.
///
/// Encoder outputs are laid out as
/// `[μ_private | μ_shared | logσ_private | logσ_shared]`; decoders take
/// `[private ‖ shared]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CicModel {
    pub(crate) ex: Mlp,
    pub(crate) ey: Mlp,
    pub(crate) dx: Mlp,
    pub(crate) dy: Mlp,
    d_private: usize,
    d_shared: usize,
}

impl CicModel {
    /// Fresh network for windows of width `dim`. Layers are initialized in
    /// the order `E_x`, `E_y`, `D_x`, `D_y`.
    pub fn new<R: Rng + ?Sized>(dim: usize, cfg: &CicConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        if dim == 0 {
            return Err(Error::InvalidConfig("input width must be at least 1".into()));
        }
        let latent = cfg.d_private + cfg.d_shared;
        let mut rev = cfg.hidden.clone();
        rev.reverse();
        let ex = Mlp::new(dim, &cfg.hidden, 2 * latent, rng)?;
        let ey = Mlp::new(dim, &cfg.hidden, 2 * latent, rng)?;
        let dx = Mlp::new(latent, &rev, dim, rng)?;
        let dy = Mlp::new(latent, &rev, dim, rng)?;
        Ok(Self {
            ex,
            ey,
            dx,
            dy,
            d_private: cfg.d_private,
            d_shared: cfg.d_shared,
        })
    }

    pub fn from_parts(ex: Mlp, ey: Mlp, dx: Mlp, dy: Mlp, d_private: usize, d_shared: usize) -> Result<Self> {
        let latent = d_private + d_shared;
        let dim = ex.in_dim();
        for (name, net, i, o) in [
            ("encoder x", &ex, dim, 2 * latent),
            ("encoder y", &ey, dim, 2 * latent),
            ("decoder x", &dx, latent, dim),
            ("decoder y", &dy, latent, dim),
        ] {
            if net.in_dim() != i || net.out_dim() != o {
                return Err(Error::Blob(format!(
                    "{name} maps {} -> {}, expected {i} -> {o}",
                    net.in_dim(),
                    net.out_dim()
                )));
            }
        }
        Ok(Self { ex, ey, dx, dy, d_private, d_shared })
    }

    pub fn input_dim(&self) -> usize {
        self.ex.in_dim()
    }

    pub fn d_private(&self) -> usize {
        self.d_private
    }

    pub fn d_shared(&self) -> usize {
        self.d_shared
    }

    pub fn param_count(&self) -> usize {
        self.ex.param_count() + self.ey.param_count() + self.dx.param_count() + self.dy.param_count()
    }

    /// Flat parameters in the order `E_x`, `E_y`, `D_x`, `D_y`.
    pub fn params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        self.ex.params_into(&mut v);
        self.ey.params_into(&mut v);
        self.dx.params_into(&mut v);
        self.dy.params_into(&mut v);
        v
    }

    pub fn set_params(&mut self, src: &[f64]) -> Result<()> {
        if src.len() != self.param_count() {
            return shape_err("CicModel::set_params", (self.param_count(), 1), (src.len(), 1));
        }
        let mut at = 0;
        for net in [&mut self.ex, &mut self.ey, &mut self.dx, &mut self.dy] {
            at += net.set_params(&src[at..])?;
        }
        Ok(())
    }

    fn split(&self, out: &Matrix) -> (GaussianPosterior, GaussianPosterior) {
        let (p, s) = (self.d_private, self.d_shared);
        let private = GaussianPosterior {
            mu: out.column_block(0, p),
            log_sigma: out.column_block(p + s, 2 * p + s),
        };
        let shared = GaussianPosterior {
            mu: out.column_block(p, p + s),
            log_sigma: out.column_block(2 * p + s, 2 * (p + s)),
        };
        (private, shared)
    }

    fn check_input(&self, m: &Matrix) -> Result<()> {
        if m.cols() != self.input_dim() {
            return shape_err("CicModel input", (m.rows(), self.input_dim()), m.shape());
        }
        Ok(())
    }

    /// Posteriors of the cause windows `x` (through `E_x`) and the effect
    /// windows `y` (through `E_y`).
    pub fn encode(&self, x: &Matrix, y: &Matrix) -> Result<LatentSplit> {
        self.check_input(x)?;
        self.check_input(y)?;
        if x.rows() != y.rows() {
            return shape_err("CicModel::encode", x.shape(), y.shape());
        }
        let (zx, zxy_x) = self.split(&self.ex.forward(x)?);
        let (zy, zxy_y) = self.split(&self.ey.forward(y)?);
        Ok(LatentSplit { zx, zxy_x, zy, zxy_y })
    }

    /// Posteriors of the cause windows alone.
    pub fn encode_x(&self, x: &Matrix) -> Result<(GaussianPosterior, GaussianPosterior)> {
        self.check_input(x)?;
        Ok(self.split(&self.ex.forward(x)?))
    }

    fn latent_input(&self, private: &Matrix, shared: &Matrix) -> Result<Matrix> {
        if private.cols() != self.d_private || shared.cols() != self.d_shared || private.rows() != shared.rows() {
            return shape_err(
                "CicModel::decode",
                (private.rows(), self.d_private + self.d_shared),
                (shared.rows(), private.cols() + shared.cols()),
            );
        }
        private.hcat(shared)
    }

    /// `D_x([private ‖ shared])`.
    pub fn decode_x(&self, private: &Matrix, shared: &Matrix) -> Result<Matrix> {
        self.dx.forward(&self.latent_input(private, shared)?)
    }

    /// `D_y([private ‖ shared])`.
    pub fn decode_y(&self, private: &Matrix, shared: &Matrix) -> Result<Matrix> {
        self.dy.forward(&self.latent_input(private, shared)?)
    }

    /// Loss on one batch with noise drawn from `rng`.
    pub fn total_loss<R: Rng + ?Sized>(&self, x: &Matrix, y: &Matrix, cfg: &CicConfig, rng: &mut R) -> Result<LossParts> {
        let noise = BatchNoise::draw(x.rows(), self.d_private, self.d_shared, rng);
        Ok(self.loss_and_grad(x, y, &noise, cfg, false)?.0)
    }

    /// Loss on one batch with explicit noise, plus the gradient with respect
    /// to [`CicModel::params`] when `want_grad` is set.
    pub fn loss_and_grad(
        &self,
        x: &Matrix,
        y: &Matrix,
        noise: &BatchNoise,
        cfg: &CicConfig,
        want_grad: bool,
    ) -> Result<(LossParts, Option<Vec<f64>>)> {
        self.loss_and_grad_scaled(x, y, noise, cfg, 1.0, want_grad)
    }

    /// As [`CicModel::loss_and_grad`] with the KL terms multiplied by
    /// `kl_scale` (used for warm-up).
    pub(crate) fn loss_and_grad_scaled(
        &self,
        x: &Matrix,
        y: &Matrix,
        noise: &BatchNoise,
        cfg: &CicConfig,
        kl_scale: f64,
        want_grad: bool,
    ) -> Result<(LossParts, Option<Vec<f64>>)> {
        self.check_input(x)?;
        self.check_input(y)?;
        let b = x.rows();
        if y.rows() != b {
            return shape_err("CicModel::loss", x.shape(), y.shape());
        }
        let (p, s) = (self.d_private, self.d_shared);
        for (e, d) in [(&noise.zx, p), (&noise.zxy_x, s), (&noise.zy, p), (&noise.zxy_y, s)] {
            if e.shape() != (b, d) {
                return shape_err("BatchNoise", (b, d), e.shape());
            }
        }

        let tx = self.ex.forward_cached(x)?;
        let ty = self.ey.forward_cached(y)?;
        let (zx, zxy_x) = self.split(tx.output());
        let (zy, zxy_y) = self.split(ty.output());

        let sample = |post: &GaussianPosterior, eps: &Matrix| -> (Matrix, Matrix) {
            let sd_eps = Matrix::from_vec(
                b,
                post.dim(),
                post.log_sigma
                    .as_slice()
                    .iter()
                    .zip(eps.as_slice())
                    .map(|(ls, e)| Float::exp(*ls) * e)
                    .collect(),
            )
            .expect("same shape");
            let mut z = post.mu.clone();
            for (zv, d) in z.as_mut_slice().iter_mut().zip(sd_eps.as_slice()) {
                *zv += d;
            }
            (z, sd_eps)
        };
        let (s_zx, n_zx) = sample(&zx, &noise.zx);
        let (s_zxy_x, n_zxy_x) = sample(&zxy_x, &noise.zxy_x);
        let (s_zy, n_zy) = sample(&zy, &noise.zy);
        let (s_zxy_y, n_zxy_y) = sample(&zxy_y, &noise.zxy_y);

        let tdx = self.dx.forward_cached(&s_zx.hcat(&s_zxy_x)?)?;
        let tdy = self.dy.forward_cached(&s_zy.hcat(&s_zxy_y)?)?;
        let recon = cfg.alpha * (mse(tdx.output(), x)? + mse(tdy.output(), y)?);
        let kl = kl_scale
            * (kl_to_standard_normal(&zx)
                + kl_to_standard_normal(&zxy_x)
                + kl_to_standard_normal(&zy)
                + kl_to_standard_normal(&zxy_y));
        let l_vae = recon + kl;

        let same_width = p == s;
        let mut l_diff = 0.0;
        let mut degenerate_rows = 0;
        let mut add_ortho = |u: &Matrix, v: &Matrix| -> Result<()> {
            let (val, deg) = ortho_batch(u, v)?;
            l_diff += val;
            degenerate_rows += deg;
            Ok(())
        };
        if same_width {
            add_ortho(&zx.mu, &zxy_x.mu)?;
            add_ortho(&zy.mu, &zxy_y.mu)?;
        }
        add_ortho(&zx.mu, &zy.mu)?;
        let l_equal = mse(&zxy_x.mu, &zxy_y.mu)?;

        // D_x fed only a shared latent: from E_x, then from E_y.
        let zero = Matrix::zeros(b, p);
        let mut shared_tapes = Vec::with_capacity(2);
        let mut l_shared = 0.0;
        for (w, z, own) in [(cfg.shared_recon, &s_zxy_x, true), (cfg.cross_recon, &s_zxy_y, false)] {
            if w > 0.0 {
                let w = w * cfg.alpha;
                let tape = self.dx.forward_cached(&zero.hcat(z)?)?;
                l_shared += w * mse(tape.output(), x)?;
                shared_tapes.push((w, own, tape));
            }
        }

        let total = l_vae + cfg.beta1 * l_diff + cfg.beta2 * l_equal + l_shared;
        let parts = LossParts {
            total,
            l_vae,
            l_diff,
            l_equal,
            l_shared,
            degenerate_rows,
        };
        if !want_grad {
            return Ok((parts, None));
        }

        // Decoders.
        let (mut g_dx, gin_x) = self.dx.backward(&tdx, &mse_grad(tdx.output(), x, cfg.alpha))?;
        let (g_dy, gin_y) = self.dy.backward(&tdy, &mse_grad(tdy.output(), y, cfg.alpha))?;
        let g_zx = gin_x.column_block(0, p);
        let mut g_zxy_x = gin_x.column_block(p, p + s);
        let g_zy = gin_y.column_block(0, p);
        let mut g_zxy_y = gin_y.column_block(p, p + s);
        for (w, own, tape) in &shared_tapes {
            let (g, gin) = self.dx.backward(tape, &mse_grad(tape.output(), x, *w))?;
            add_grads(&mut g_dx, &g);
            let target = if *own { &mut g_zxy_x } else { &mut g_zxy_y };
            add_into(target, &gin.column_block(p, p + s));
        }

        // Sample -> (μ, logσ): ∂z/∂μ = 1, ∂z/∂logσ = σε.
        let to_post = |g_z: &Matrix, sd_eps: &Matrix| -> (Matrix, Matrix) {
            let g_ls = Matrix::from_vec(
                g_z.rows(),
                g_z.cols(),
                g_z.as_slice().iter().zip(sd_eps.as_slice()).map(|(g, d)| g * d).collect(),
            )
            .expect("same shape");
            (g_z.clone(), g_ls)
        };
        let (mut gm_zx, mut gl_zx) = to_post(&g_zx, &n_zx);
        let (mut gm_zxy_x, mut gl_zxy_x) = to_post(&g_zxy_x, &n_zxy_x);
        let (mut gm_zy, mut gl_zy) = to_post(&g_zy, &n_zy);
        let (mut gm_zxy_y, mut gl_zxy_y) = to_post(&g_zxy_y, &n_zxy_y);

        kl_grad(&zx, kl_scale, &mut gm_zx, &mut gl_zx);
        kl_grad(&zxy_x, kl_scale, &mut gm_zxy_x, &mut gl_zxy_x);
        kl_grad(&zy, kl_scale, &mut gm_zy, &mut gl_zy);
        kl_grad(&zxy_y, kl_scale, &mut gm_zxy_y, &mut gl_zxy_y);

        if cfg.beta1 != 0.0 {
            if same_width {
                ortho_batch_grad(&zx.mu, &zxy_x.mu, cfg.beta1, &mut gm_zx, &mut gm_zxy_x);
                ortho_batch_grad(&zy.mu, &zxy_y.mu, cfg.beta1, &mut gm_zy, &mut gm_zxy_y);
            }
            ortho_batch_grad(&zx.mu, &zy.mu, cfg.beta1, &mut gm_zx, &mut gm_zy);
        }
        if cfg.beta2 != 0.0 {
            let g = mse_grad(&zxy_x.mu, &zxy_y.mu, cfg.beta2);
            add_into(&mut gm_zxy_x, &g);
            sub_into(&mut gm_zxy_y, &g);
        }

        // Encoders.
        let g_ox = gm_zx.hcat(&gm_zxy_x)?.hcat(&gl_zx)?.hcat(&gl_zxy_x)?;
        let g_oy = gm_zy.hcat(&gm_zxy_y)?.hcat(&gl_zy)?.hcat(&gl_zxy_y)?;
        let (g_ex, _) = self.ex.backward(&tx, &g_ox)?;
        let (g_ey, _) = self.ey.backward(&ty, &g_oy)?;

        let mut flat = Vec::with_capacity(self.param_count());
        g_ex.flatten_into(&mut flat);
        g_ey.flatten_into(&mut flat);
        g_dx.flatten_into(&mut flat);
        g_dy.flatten_into(&mut flat);
        Ok((parts, Some(flat)))
    }

    /// Text serialization; see `MODEL_FORMAT.md` at the repository root.
    pub fn write_blob(&self, out: &mut String) {
        let _ = writeln!(out, "cic-model 1");
        let _ = writeln!(out, "latent {} {}", self.d_private, self.d_shared);
        for net in [&self.ex, &self.ey, &self.dx, &self.dy] {
            net.write_blob(out);
        }
    }

    pub fn to_blob(&self) -> String {
        let mut s = String::new();
        self.write_blob(&mut s);
        s
    }

    pub fn from_blob(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let head = next_line(&mut lines)?;
        if head != "cic-model 1" {
            return Err(Error::Blob(format!("expected `cic-model 1`, got `{head}`")));
        }
        let latent = next_line(&mut lines)?;
        let widths: Vec<&str> = latent.split(' ').collect();
        if widths.len() != 3 || widths[0] != "latent" {
            return Err(Error::Blob(format!("bad latent line `{latent}`")));
        }
        let d_private: usize = parse_num(widths[1])?;
        let d_shared: usize = parse_num(widths[2])?;
        let ex = Mlp::read_blob(&mut lines)?;
        let ey = Mlp::read_blob(&mut lines)?;
        let dx = Mlp::read_blob(&mut lines)?;
        let dy = Mlp::read_blob(&mut lines)?;
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(Error::Blob("trailing content after the last network".into()));
        }
        Self::from_parts(ex, ey, dx, dy, d_private, d_shared)
    }
}

fn add_grads(acc: &mut MlpGrads, g: &MlpGrads) {
    for ((aw, ab), (gw, gb)) in acc.layers.iter_mut().zip(&g.layers) {
        for (a, v) in aw.as_mut_slice().iter_mut().zip(gw.as_slice()) {
            *a += v;
        }
        for (a, v) in ab.iter_mut().zip(gb) {
            *a += v;
        }
    }
}

fn add_into(acc: &mut Matrix, g: &Matrix) {
    for (a, v) in acc.as_mut_slice().iter_mut().zip(g.as_slice()) {
        *a += v;
    }
}

fn sub_into(acc: &mut Matrix, g: &Matrix) {
    for (a, v) in acc.as_mut_slice().iter_mut().zip(g.as_slice()) {
        *a -= v;
    }
}
