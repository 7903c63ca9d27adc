//! Encoder, latent heads, decoder and the two losses, batched over sequences.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::{Rng, RngCore};

use super::gru::{gru_backward, gru_forward, GruCache};
use super::params::ModelParameters;
use super::ModelError;
use crate::vocab::{EOS, PAD, SOS};

/// Inverted dropout on layer outputs. `Off` is the evaluation mode.
pub enum Dropout<'a> {
    Off,
    On { rate: f64, rng: &'a mut dyn RngCore },
}

impl Dropout<'_> {
    fn mask(&mut self, rows: usize, cols: usize) -> Option<Array2<f64>> {
        match self {
            Dropout::On { rate, rng } if *rate > 0.0 => {
                let keep = 1.0 - *rate;
                let scale = 1.0 / keep;
                Some(Array2::from_shape_simple_fn((rows, cols), || {
                    if rng.random::<f64>() < keep {
                        scale
                    } else {
                        0.0
                    }
                }))
            }
            _ => None,
        }
    }
}

fn apply(mask: &Option<Array2<f64>>, x: &Array2<f64>) -> Array2<f64> {
    match mask {
        Some(m) => x * m,
        None => x.clone(),
    }
}

fn gather_rows(table: &Array2<f64>, ids: &[u32]) -> Array2<f64> {
    let mut out = Array2::zeros((ids.len(), table.ncols()));
    for (mut row, &id) in out.rows_mut().into_iter().zip(ids) {
        row.assign(&table.row(id as usize));
    }
    out
}

fn scatter_add_rows(table: &mut Array2<f64>, ids: &[u32], grads: &Array2<f64>) {
    for (g, &id) in grads.rows().into_iter().zip(ids) {
        let mut row = table.row_mut(id as usize);
        row += &g;
    }
}

/// Row-wise log-softmax.
pub fn log_softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lse = m + row.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
        row.mapv_inplace(|x| x - lse);
    }
    out
}

/// `Σ 0.5·(μ² + e^{logvar} − 1 − logvar)`.
pub fn kl_loss(mu: ArrayView1<f64>, logvar: ArrayView1<f64>) -> f64 {
    mu.iter()
        .zip(logvar)
        .map(|(&m, &lv)| 0.5 * (m * m + lv.exp() - 1.0 - lv))
        .sum()
}

/// `μ + exp(logvar/2) ⊙ ε`.
pub fn reparameterize(
    mu: ArrayView1<f64>,
    logvar: ArrayView1<f64>,
    eps: ArrayView1<f64>,
) -> Array1<f64> {
    let mut z = mu.to_owned();
    Zip::from(&mut z)
        .and(logvar)
        .and(eps)
        .for_each(|z, &lv, &e| *z += (0.5 * lv).exp() * e);
    z
}

fn check_ids(p: &ModelParameters, seq: &[u32]) -> Result<(), ModelError> {
    let v = p.embedding.nrows();
    match seq.iter().find(|&&id| id as usize >= v) {
        Some(&id) => Err(ModelError::BadId { id, vocab_size: v }),
        None => Ok(()),
    }
}

/// Checks framing and id range of a training sequence `[SOS, f1..fn, EOS]` with `n >= 1`.
pub fn check_sequence(p: &ModelParameters, seq: &[u32]) -> Result<(), ModelError> {
    check_ids(p, seq)?;
    if seq.len() < 3 || seq[0] != SOS || seq[seq.len() - 1] != EOS {
        return Err(ModelError::Framing(seq.to_vec()));
    }
    if seq[1..seq.len() - 1]
        .iter()
        .any(|&t| t == SOS || t == EOS || t == PAD)
    {
        return Err(ModelError::Framing(seq.to_vec()));
    }
    Ok(())
}

struct StackPass {
    /// `caches[layer][t]`.
    caches: Vec<Vec<GruCache>>,
    /// Dropout mask on each layer's output at each step.
    masks: Vec<Vec<Option<Array2<f64>>>>,
}

struct EncoderPass {
    stack: StackPass,
    /// Rows still inside their sequence, per step.
    active: Vec<Array2<f64>>,
    inputs: Vec<Vec<u32>>,
    head_in: Array2<f64>,
    head_mask: Option<Array2<f64>>,
    mu: Array2<f64>,
    logvar: Array2<f64>,
}

fn encoder_forward(p: &ModelParameters, frags: &[&[u32]], drop: &mut Dropout) -> EncoderPass {
    let b = frags.len();
    let hdim = p.w_mu.nrows();
    let steps = frags.iter().map(|f| f.len()).max().unwrap_or(0);
    let inputs: Vec<Vec<u32>> = (0..steps)
        .map(|t| {
            frags
                .iter()
                .map(|f| f.get(t).copied().unwrap_or(PAD))
                .collect()
        })
        .collect();
    let active: Vec<Array2<f64>> = (0..steps)
        .map(|t| Array2::from_shape_fn((b, 1), |(i, _)| if t < frags[i].len() { 1.0 } else { 0.0 }))
        .collect();
    let mut layer_in: Vec<Array2<f64>> = inputs
        .iter()
        .map(|ids| gather_rows(&p.embedding, ids))
        .collect();
    let mut stack = StackPass {
        caches: Vec::new(),
        masks: Vec::new(),
    };
    let mut h = Array2::zeros((b, hdim));
    for (l, layer) in p.encoder.iter().enumerate() {
        let top = l + 1 == p.encoder.len();
        h.fill(0.0);
        let mut caches = Vec::with_capacity(steps);
        let mut masks = Vec::with_capacity(steps);
        let mut outputs = Vec::with_capacity(steps);
        for t in 0..steps {
            let (h_new, cache) = gru_forward(layer, layer_in[t].view(), h.view());
            let m = &active[t];
            h = &h_new * m + &h * &m.mapv(|a| 1.0 - a);
            caches.push(cache);
            if !top {
                let mask = drop.mask(b, hdim);
                outputs.push(apply(&mask, &h));
                masks.push(mask);
            }
        }
        stack.caches.push(caches);
        stack.masks.push(masks);
        layer_in = outputs;
    }
    let head_mask = drop.mask(b, hdim);
    let head_in = apply(&head_mask, &h);
    let mu = head_in.dot(&p.w_mu) + &p.b_mu;
    let logvar = head_in.dot(&p.w_sigma) + &p.b_sigma;
    EncoderPass {
        stack,
        active,
        inputs,
        head_in,
        head_mask,
        mu,
        logvar,
    }
}

fn encoder_backward(
    p: &ModelParameters,
    pass: &EncoderPass,
    dmu: &Array2<f64>,
    dlogvar: &Array2<f64>,
    g: &mut ModelParameters,
) {
    g.w_mu += &pass.head_in.t().dot(dmu);
    g.b_mu += &dmu.sum_axis(Axis(0));
    g.w_sigma += &pass.head_in.t().dot(dlogvar);
    g.b_sigma += &dlogvar.sum_axis(Axis(0));
    let mut d_final = dmu.dot(&p.w_mu.t()) + dlogvar.dot(&p.w_sigma.t());
    if let Some(m) = &pass.head_mask {
        d_final *= m;
    }
    let steps = pass.inputs.len();
    // Gradient arriving at each step's output of the current layer from above.
    let mut from_above: Vec<Option<Array2<f64>>> = vec![None; steps];
    for l in (0..p.encoder.len()).rev() {
        let top = l + 1 == p.encoder.len();
        let mut dh = if top {
            d_final.clone()
        } else {
            Array2::zeros(d_final.raw_dim())
        };
        let mut below: Vec<Option<Array2<f64>>> = vec![None; steps];
        for t in (0..steps).rev() {
            if let Some(d) = from_above[t].take() {
                dh += &d;
            }
            let m = &pass.active[t];
            let dh_new = &dh * m;
            let (dx, dh_prev) = gru_backward(
                &p.encoder[l],
                &pass.stack.caches[l][t],
                dh_new.view(),
                &mut g.encoder[l],
            );
            dh = dh_prev + &dh * &m.mapv(|a| 1.0 - a);
            if l == 0 {
                scatter_add_rows(&mut g.embedding, &pass.inputs[t], &dx);
            } else {
                below[t] = Some(apply(&pass.stack.masks[l - 1][t], &dx));
            }
        }
        from_above = below;
    }
}

struct DecoderPass {
    stack: StackPass,
    inputs: Vec<Vec<u32>>,
    targets: Vec<Vec<u32>>,
    /// 1 where the step contributes to the loss.
    live: Vec<Array2<f64>>,
    z: Array2<f64>,
    outputs: Vec<Array2<f64>>,
    log_probs: Vec<Array2<f64>>,
    nll: Array1<f64>,
}

fn initial_states(p: &ModelParameters, z: ArrayView2<f64>) -> Vec<Array2<f64>> {
    p.z_w
        .iter()
        .zip(&p.z_b)
        .map(|(w, b)| z.dot(w) + b)
        .collect()
}

fn decoder_forward(
    p: &ModelParameters,
    seqs: &[&[u32]],
    z: Array2<f64>,
    drop: &mut Dropout,
) -> DecoderPass {
    let b = seqs.len();
    let hdim = p.w_mu.nrows();
    let steps = seqs.iter().map(|s| s.len() - 1).max().unwrap_or(0);
    let inputs: Vec<Vec<u32>> = (0..steps)
        .map(|t| {
            seqs.iter()
                .map(|s| if t + 1 < s.len() { s[t] } else { PAD })
                .collect()
        })
        .collect();
    let targets: Vec<Vec<u32>> = (0..steps)
        .map(|t| {
            seqs.iter()
                .map(|s| if t + 1 < s.len() { s[t + 1] } else { PAD })
                .collect()
        })
        .collect();
    let live: Vec<Array2<f64>> = (0..steps)
        .map(|t| {
            Array2::from_shape_fn(
                (b, 1),
                |(i, _)| if t + 1 < seqs[i].len() { 1.0 } else { 0.0 },
            )
        })
        .collect();
    let h0 = initial_states(p, z.view());
    let mut layer_in: Vec<Array2<f64>> = inputs
        .iter()
        .map(|ids| gather_rows(&p.embedding, ids))
        .collect();
    let mut stack = StackPass {
        caches: Vec::new(),
        masks: Vec::new(),
    };
    for (l, layer) in p.decoder.iter().enumerate() {
        let mut h = h0[l].clone();
        let mut caches = Vec::with_capacity(steps);
        let mut masks = Vec::with_capacity(steps);
        let mut outputs = Vec::with_capacity(steps);
        for x in layer_in.iter() {
            let (h_new, cache) = gru_forward(layer, x.view(), h.view());
            h = h_new;
            caches.push(cache);
            let mask = drop.mask(b, hdim);
            outputs.push(apply(&mask, &h));
            masks.push(mask);
        }
        stack.caches.push(caches);
        stack.masks.push(masks);
        layer_in = outputs;
    }
    let mut nll = Array1::zeros(b);
    let mut log_probs = Vec::with_capacity(steps);
    for t in 0..steps {
        let lp = log_softmax(&(layer_in[t].dot(&p.w_out) + &p.b_out));
        for i in 0..b {
            if live[t][[i, 0]] > 0.0 {
                nll[i] -= lp[[i, targets[t][i] as usize]];
            }
        }
        log_probs.push(lp);
    }
    DecoderPass {
        stack,
        inputs,
        targets,
        live,
        z,
        outputs: layer_in,
        log_probs,
        nll,
    }
}

/// Returns the gradient with respect to `z`.
fn decoder_backward(
    p: &ModelParameters,
    pass: &DecoderPass,
    g: &mut ModelParameters,
) -> Array2<f64> {
    let steps = pass.inputs.len();
    let mut from_above: Vec<Option<Array2<f64>>> = Vec::with_capacity(steps);
    for t in 0..steps {
        let mut dlogits = pass.log_probs[t].mapv(f64::exp);
        for (i, &y) in pass.targets[t].iter().enumerate() {
            dlogits[[i, y as usize]] -= 1.0;
        }
        dlogits *= &pass.live[t];
        g.w_out += &pass.outputs[t].t().dot(&dlogits);
        g.b_out += &dlogits.sum_axis(Axis(0));
        from_above.push(Some(dlogits.dot(&p.w_out.t())));
    }
    let layers = p.decoder.len();
    let mut dz = Array2::zeros(pass.z.raw_dim());
    for l in (0..layers).rev() {
        let mut dh = Array2::zeros(pass.stack.caches[l][0].h_prev.raw_dim());
        let mut below: Vec<Option<Array2<f64>>> = vec![None; steps];
        for t in (0..steps).rev() {
            if let Some(d) = from_above[t].take() {
                dh += &apply(&pass.stack.masks[l][t], &d);
            }
            let (dx, dh_prev) = gru_backward(
                &p.decoder[l],
                &pass.stack.caches[l][t],
                dh.view(),
                &mut g.decoder[l],
            );
            dh = dh_prev;
            if l == 0 {
                scatter_add_rows(&mut g.embedding, &pass.inputs[t], &dx);
            } else {
                below[t] = Some(dx);
            }
        }
        g.z_w[l] += &pass.z.t().dot(&dh);
        g.z_b[l] += &dh.sum_axis(Axis(0));
        dz += &dh.dot(&p.z_w[l].t());
        from_above = below;
    }
    dz
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchLoss {
    pub kl: f64,
    pub nll: f64,
}

impl BatchLoss {
    pub fn total(&self) -> f64 {
        self.kl + self.nll
    }
}

fn batch_forward(
    p: &ModelParameters,
    seqs: &[&[u32]],
    eps: ArrayView2<f64>,
    drop: &mut Dropout,
) -> Result<(EncoderPass, DecoderPass, BatchLoss), ModelError> {
    if seqs.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    for s in seqs {
        check_sequence(p, s)?;
    }
    let latent = p.w_mu.ncols();
    if eps.dim() != (seqs.len(), latent) {
        return Err(ModelError::Shape(format!(
            "eps is {:?}, expected {:?}",
            eps.dim(),
            (seqs.len(), latent)
        )));
    }
    let frags: Vec<&[u32]> = seqs.iter().map(|s| &s[1..s.len() - 1]).collect();
    let enc = encoder_forward(p, &frags, drop);
    let mut z = enc.mu.clone();
    Zip::from(&mut z)
        .and(&enc.logvar)
        .and(eps)
        .for_each(|z, &lv, &e| *z += (0.5 * lv).exp() * e);
    let kl: f64 = enc
        .mu
        .rows()
        .into_iter()
        .zip(enc.logvar.rows())
        .map(|(m, lv)| kl_loss(m, lv))
        .sum();
    let dec = decoder_forward(p, seqs, z, drop);
    let loss = BatchLoss {
        kl,
        nll: dec.nll.sum(),
    };
    Ok((enc, dec, loss))
}

/// `Σ_x [KL(x) + NLL(x)]` with `eps` holding one standard-normal row per sequence.
pub fn total_loss(
    p: &ModelParameters,
    seqs: &[&[u32]],
    eps: ArrayView2<f64>,
) -> Result<BatchLoss, ModelError> {
    batch_forward(p, seqs, eps, &mut Dropout::Off).map(|(_, _, l)| l)
}

/// Loss and its exact gradient (of the batch sum) with respect to every parameter.
pub fn loss_and_grad(
    p: &ModelParameters,
    seqs: &[&[u32]],
    eps: ArrayView2<f64>,
    drop: &mut Dropout,
) -> Result<(BatchLoss, ModelParameters), ModelError> {
    let (enc, dec, loss) = batch_forward(p, seqs, eps, drop)?;
    let mut g = p.zeros_like();
    let dz = decoder_backward(p, &dec, &mut g);
    let mut dmu = dz.clone();
    let mut dlogvar = Array2::zeros(dz.raw_dim());
    Zip::from(&mut dmu)
        .and(&mut dlogvar)
        .and(&dz)
        .and(&enc.mu)
        .and(&enc.logvar)
        .and(eps)
        .for_each(|dm, dlv, &dz, &mu, &lv, &e| {
            let sd = (0.5 * lv).exp();
            *dm += mu;
            *dlv = dz * e * 0.5 * sd + 0.5 * (sd * sd - 1.0);
        });
    encoder_backward(p, &enc, &dmu, &dlogvar, &mut g);
    if !loss.total().is_finite() {
        return Err(ModelError::NonFinite(loss.total()));
    }
    Ok((loss, g))
}

/// Latent heads for one fragment-id sequence (no SOS/EOS), evaluation mode.
pub fn encode(
    p: &ModelParameters,
    frags: &[u32],
) -> Result<(Array1<f64>, Array1<f64>), ModelError> {
    if frags.is_empty() {
        return Err(ModelError::EmptySequence);
    }
    check_ids(p, frags)?;
    let pass = encoder_forward(p, &[frags], &mut Dropout::Off);
    Ok((pass.mu.row(0).to_owned(), pass.logvar.row(0).to_owned()))
}

/// Decoder state per layer for a batch of rows.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoderState {
    pub layers: Vec<Array2<f64>>,
}

impl DecoderState {
    /// `h0` of every decoder layer from latent rows.
    pub fn from_latent(p: &ModelParameters, z: ArrayView2<f64>) -> Self {
        DecoderState {
            layers: initial_states(p, z),
        }
    }
}

/// One decoder step for a batch of input ids; returns row-wise
/// next-token probabilities and the new state.
pub fn decode_step_batch(
    p: &ModelParameters,
    ids: &[u32],
    state: &DecoderState,
) -> (Array2<f64>, DecoderState) {
    let mut x = gather_rows(&p.embedding, ids);
    let mut layers = Vec::with_capacity(p.decoder.len());
    for (layer, h) in p.decoder.iter().zip(&state.layers) {
        let (h_new, _) = gru_forward(layer, x.view(), h.view());
        x = h_new.clone();
        layers.push(h_new);
    }
    let probs = log_softmax(&(x.dot(&p.w_out) + &p.b_out)).mapv(f64::exp);
    (probs, DecoderState { layers })
}

/// Single-row decoder step on an input embedding.
pub fn decode_step(
    p: &ModelParameters,
    x: ArrayView1<f64>,
    h_prev: &[Array1<f64>],
) -> Result<(Array1<f64>, Vec<Array1<f64>>), ModelError> {
    if x.len() != p.embedding.ncols()
        || h_prev.len() != p.decoder.len()
        || h_prev.iter().any(|h| h.len() != p.w_mu.nrows())
    {
        return Err(ModelError::Shape(
            "decode_step input or state has the wrong width".into(),
        ));
    }
    let mut x = x.insert_axis(Axis(0)).to_owned();
    let mut hs = Vec::with_capacity(h_prev.len());
    for (layer, h) in p.decoder.iter().zip(h_prev) {
        let (h_new, _) = gru_forward(layer, x.view(), h.view().insert_axis(Axis(0)));
        x = h_new;
        hs.push(x.row(0).to_owned());
    }
    let probs = log_softmax(&(x.dot(&p.w_out) + &p.b_out)).mapv(f64::exp);
    Ok((probs.row(0).to_owned(), hs))
}

/// Teacher-forced `−Σ log P(next)` of `[SOS, …, EOS]` given `z`.
pub fn sequence_nll(
    p: &ModelParameters,
    seq: &[u32],
    z: ArrayView1<f64>,
) -> Result<f64, ModelError> {
    check_ids(p, seq)?;
    if seq.len() < 2 || seq[0] != SOS || seq[seq.len() - 1] != EOS {
        return Err(ModelError::Framing(seq.to_vec()));
    }
    if z.len() != p.w_mu.ncols() {
        return Err(ModelError::Shape("latent width mismatch".into()));
    }
    let z = z.insert_axis(Axis(0)).to_owned();
    let pass = decoder_forward(p, &[seq], z, &mut Dropout::Off);
    Ok(pass.nll[0])
}
