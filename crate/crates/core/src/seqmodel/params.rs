use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD, Zip};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::vocab::SPECIAL_TOKENS;

/// Widths of every tensor in the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden: usize,
    pub latent: usize,
    pub layers: usize,
}

impl ModelDims {
    /// The default architecture: 64-wide embeddings, 2 x 128 GRU units, latent 100.
    pub fn standard(vocab_size: usize) -> Self {
        ModelDims {
            vocab_size,
            embed_dim: 64,
            hidden: 128,
            latent: 100,
            layers: 2,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.vocab_size <= SPECIAL_TOKENS.len()
            || self.embed_dim == 0
            || self.hidden == 0
            || self.latent == 0
            || self.layers == 0
        {
            return Err(ModelError::Shape(format!(
                "degenerate model dimensions {self:?}"
            )));
        }
        Ok(())
    }
}

/// One GRU layer. Inputs multiply from the left: `x · W_r` with `W_r` of shape `d_in × hidden`.
#[derive(Clone, Debug, PartialEq)]
pub struct GruLayerParams {
    pub w_r: Array2<f64>,
    pub w_u: Array2<f64>,
    pub w_h: Array2<f64>,
    pub u_r: Array2<f64>,
    pub u_u: Array2<f64>,
    pub u_h: Array2<f64>,
    pub b_r: Array1<f64>,
    pub b_u: Array1<f64>,
    pub b_h: Array1<f64>,
}

impl GruLayerParams {
    pub fn zeros(d_in: usize, hidden: usize) -> Self {
        let w = || Array2::zeros((d_in, hidden));
        let u = || Array2::zeros((hidden, hidden));
        let b = || Array1::zeros(hidden);
        GruLayerParams {
            w_r: w(),
            w_u: w(),
            w_h: w(),
            u_r: u(),
            u_u: u(),
            u_h: u(),
            b_r: b(),
            b_u: b(),
            b_h: b(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_r.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.u_r.nrows()
    }

    fn tensors<'a>(&'a self, prefix: &str, out: &mut Vec<(String, ArrayViewD<'a, f64>)>) {
        let names = ["W_r", "W_u", "W_h", "U_r", "U_u", "U_h"];
        let mats = [
            &self.w_r, &self.w_u, &self.w_h, &self.u_r, &self.u_u, &self.u_h,
        ];
        for (n, m) in names.iter().zip(mats) {
            out.push((format!("{prefix}.{n}"), m.view().into_dyn()));
        }
        for (n, b) in ["b_r", "b_u", "b_h"]
            .iter()
            .zip([&self.b_r, &self.b_u, &self.b_h])
        {
            out.push((format!("{prefix}.{n}"), b.view().into_dyn()));
        }
    }

    fn tensors_mut<'a>(
        &'a mut self,
        prefix: &str,
        out: &mut Vec<(String, ArrayViewMutD<'a, f64>)>,
    ) {
        let GruLayerParams {
            w_r,
            w_u,
            w_h,
            u_r,
            u_u,
            u_h,
            b_r,
            b_u,
            b_h,
        } = self;
        for (n, m) in [
            ("W_r", w_r),
            ("W_u", w_u),
            ("W_h", w_h),
            ("U_r", u_r),
            ("U_u", u_u),
            ("U_h", u_h),
        ] {
            out.push((format!("{prefix}.{n}"), m.view_mut().into_dyn()));
        }
        for (n, b) in [("b_r", b_r), ("b_u", b_u), ("b_h", b_h)] {
            out.push((format!("{prefix}.{n}"), b.view_mut().into_dyn()));
        }
    }
}

/// Every trainable tensor of the VAE.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParameters {
    /// `|V| × d`, row per token id.
    pub embedding: Array2<f64>,
    pub encoder: Vec<GruLayerParams>,
    pub decoder: Vec<GruLayerParams>,
    /// `hidden × latent`.
    pub w_mu: Array2<f64>,
    pub b_mu: Array1<f64>,
    pub w_sigma: Array2<f64>,
    pub b_sigma: Array1<f64>,
    /// Per decoder layer, `latent × hidden`: `h0 = z · z_w + z_b`.
    pub z_w: Vec<Array2<f64>>,
    pub z_b: Vec<Array1<f64>>,
    /// `hidden × |V|`.
    pub w_out: Array2<f64>,
    pub b_out: Array1<f64>,
}

impl ModelParameters {
    pub fn zeros(dims: ModelDims) -> Self {
        let ModelDims {
            vocab_size: v,
            embed_dim: d,
            hidden: h,
            latent: l,
            layers,
        } = dims;
        let stack = || {
            (0..layers)
                .map(|i| GruLayerParams::zeros(if i == 0 { d } else { h }, h))
                .collect::<Vec<_>>()
        };
        ModelParameters {
            embedding: Array2::zeros((v, d)),
            encoder: stack(),
            decoder: stack(),
            w_mu: Array2::zeros((h, l)),
            b_mu: Array1::zeros(l),
            w_sigma: Array2::zeros((h, l)),
            b_sigma: Array1::zeros(l),
            z_w: (0..layers).map(|_| Array2::zeros((l, h))).collect(),
            z_b: (0..layers).map(|_| Array1::zeros(h)).collect(),
            w_out: Array2::zeros((h, v)),
            b_out: Array1::zeros(v),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.dims())
    }

    /// Random initialization. Recurrent and head weights are uniform in
    /// `±1/sqrt(fan_in)` with zero biases. The output projection starts at zero,
    /// so the untrained decoder predicts the uniform distribution. Embedding rows
    /// come from `pretrained` when given; special-token rows are always redrawn
    /// from N(0, 0.01²).
    pub fn init<R: Rng + ?Sized>(
        dims: ModelDims,
        pretrained: Option<&Array2<f64>>,
        rng: &mut R,
    ) -> Result<Self, ModelError> {
        dims.validate()?;
        let mut p = Self::zeros(dims);
        let normal = Normal::new(0.0, 0.01).expect("valid normal");
        match pretrained {
            Some(e) => {
                if e.dim() != p.embedding.dim() {
                    return Err(ModelError::Shape(format!(
                        "embedding matrix is {:?}, model expects {:?}",
                        e.dim(),
                        p.embedding.dim()
                    )));
                }
                p.embedding.assign(e);
                for id in 0..SPECIAL_TOKENS.len() {
                    for x in p.embedding.row_mut(id) {
                        *x = normal.sample(rng);
                    }
                }
            }
            None => p.embedding.mapv_inplace(|_| normal.sample(rng)),
        }
        let mut uniform = |m: &mut Array2<f64>| {
            let a = 1.0 / (m.nrows() as f64).sqrt();
            m.mapv_inplace(|_| rng.random_range(-a..a));
        };
        for layer in p.encoder.iter_mut().chain(p.decoder.iter_mut()) {
            for m in [
                &mut layer.w_r,
                &mut layer.w_u,
                &mut layer.w_h,
                &mut layer.u_r,
                &mut layer.u_u,
                &mut layer.u_h,
            ] {
                uniform(m);
            }
        }
        uniform(&mut p.w_mu);
        uniform(&mut p.w_sigma);
        for m in &mut p.z_w {
            uniform(m);
        }
        Ok(p)
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            vocab_size: self.embedding.nrows(),
            embed_dim: self.embedding.ncols(),
            hidden: self.w_mu.nrows(),
            latent: self.w_mu.ncols(),
            layers: self.encoder.len(),
        }
    }

    /// Stable names and views, in checkpoint order.
    pub fn tensors(&self) -> Vec<(String, ArrayViewD<'_, f64>)> {
        let mut out = vec![("embedding".to_string(), self.embedding.view().into_dyn())];
        for (i, l) in self.encoder.iter().enumerate() {
            l.tensors(&format!("encoder.{i}"), &mut out);
        }
        out.push(("latent.W_mu".into(), self.w_mu.view().into_dyn()));
        out.push(("latent.b_mu".into(), self.b_mu.view().into_dyn()));
        out.push(("latent.W_sigma".into(), self.w_sigma.view().into_dyn()));
        out.push(("latent.b_sigma".into(), self.b_sigma.view().into_dyn()));
        for (i, l) in self.decoder.iter().enumerate() {
            l.tensors(&format!("decoder.{i}"), &mut out);
            out.push((format!("decoder.{i}.z_W"), self.z_w[i].view().into_dyn()));
            out.push((format!("decoder.{i}.z_b"), self.z_b[i].view().into_dyn()));
        }
        out.push(("output.W_out".into(), self.w_out.view().into_dyn()));
        out.push(("output.b_out".into(), self.b_out.view().into_dyn()));
        out
    }

    /// Same order as [`ModelParameters::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<(String, ArrayViewMutD<'_, f64>)> {
        let ModelParameters {
            embedding,
            encoder,
            decoder,
            w_mu,
            b_mu,
            w_sigma,
            b_sigma,
            z_w,
            z_b,
            w_out,
            b_out,
        } = self;
        let mut out = vec![("embedding".to_string(), embedding.view_mut().into_dyn())];
        for (i, l) in encoder.iter_mut().enumerate() {
            l.tensors_mut(&format!("encoder.{i}"), &mut out);
        }
        out.push(("latent.W_mu".into(), w_mu.view_mut().into_dyn()));
        out.push(("latent.b_mu".into(), b_mu.view_mut().into_dyn()));
        out.push(("latent.W_sigma".into(), w_sigma.view_mut().into_dyn()));
        out.push(("latent.b_sigma".into(), b_sigma.view_mut().into_dyn()));
        for (i, ((l, zw), zb)) in decoder.iter_mut().zip(z_w).zip(z_b).enumerate() {
            l.tensors_mut(&format!("decoder.{i}"), &mut out);
            out.push((format!("decoder.{i}.z_W"), zw.view_mut().into_dyn()));
            out.push((format!("decoder.{i}.z_b"), zb.view_mut().into_dyn()));
        }
        out.push(("output.W_out".into(), w_out.view_mut().into_dyn()));
        out.push(("output.b_out".into(), b_out.view_mut().into_dyn()));
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, t)| t.iter().all(|x| x.is_finite()))
    }

    /// `self += alpha * other`, tensor by tensor.
    pub fn scaled_add(&mut self, alpha: f64, other: &ModelParameters) {
        for ((_, mut a), (_, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            Zip::from(&mut a).and(&b).for_each(|x, &y| *x += alpha * y);
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for (_, mut t) in self.tensors_mut() {
            t.mapv_inplace(|x| x * alpha);
        }
    }
}
