//! End-to-end regressor and its ablation variants.
//!
//! | variant    | pipeline                                                              |
//! |------------|-----------------------------------------------------------------------|
//! | `hybrid`   | dense 24→64, + positional encoding, encoder × 2, GRU(64), last h, dense 64→1 |
//! | `gru_only` | GRU(24→64), last h, dense 64→1                                        |
//! | `ftt_only` | dense 24→64, + positional encoding, encoder × 2, mean over time, dense 64→1 |
//!
//! The head output passes through a fixed affine [`TargetScaling`] so that
//! predictions are in cycles while the learnable part works at unit scale.

mod checkpoint;
mod encoder;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{positional_encoding, Dense, DenseCache, Gru, GruSequenceCache, MixMode, Parameter};
use crate::numerics::Tensor;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use encoder::{EncoderCache, EncoderLayer};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Hybrid,
    GruOnly,
    FttOnly,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Hybrid, Variant::GruOnly, Variant::FttOnly];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Hybrid => "hybrid",
            Variant::GruOnly => "gru_only",
            Variant::FttOnly => "ftt_only",
        }
    }

    /// Row label used in comparison tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Variant::Hybrid => "FTT-GRU",
            Variant::GruOnly => "GRU-only",
            Variant::FttOnly => "FTT-only",
        }
    }

    fn has_encoder(self) -> bool {
        self != Variant::GruOnly
    }

    fn has_gru(self) -> bool {
        self != Variant::FttOnly
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hybrid" | "ftt_gru" => Ok(Variant::Hybrid),
            "gru_only" => Ok(Variant::GruOnly),
            "ftt_only" => Ok(Variant::FttOnly),
            other => Err(Error::Config(format!(
                "unknown variant `{other}` (expected hybrid, gru_only or ftt_only)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: Variant,
    pub seq_len: usize,
    pub n_features: usize,
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub gru_units: usize,
    pub ffn_width: usize,
    pub fnet_mode: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            variant: Variant::Hybrid,
            seq_len: 30,
            n_features: 24,
            d_model: 64,
            n_layers: 2,
            n_heads: 4,
            gru_units: 64,
            ffn_width: 128,
            fnet_mode: false,
        }
    }
}

impl ModelConfig {
    pub fn with_variant(variant: Variant) -> Self {
        ModelConfig {
            variant,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.seq_len == 0 || self.n_features == 0 {
            return fail("seq_len and n_features must be at least 1".into());
        }
        if self.variant.has_gru() && self.gru_units == 0 {
            return fail("gru_units must be at least 1".into());
        }
        if self.variant.has_encoder() {
            if self.d_model == 0 || self.n_heads == 0 || self.d_model % self.n_heads != 0 {
                return fail(format!(
                    "d_model ({}) must be a positive multiple of n_heads ({})",
                    self.d_model, self.n_heads
                ));
            }
            if self.d_model % 2 != 0 {
                return fail(format!("d_model ({}) must be even for positional encoding", self.d_model));
            }
            if self.ffn_width == 0 {
                return fail("ffn_width must be at least 1".into());
            }
        }
        Ok(())
    }

    fn mix_mode(&self) -> MixMode {
        if self.fnet_mode {
            MixMode::Fnet
        } else {
            MixMode::Spectral
        }
    }
}

/// Fixed output map `prediction = offset + scale · head`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetScaling {
    pub offset: f64,
    pub scale: f64,
}

impl Default for TargetScaling {
    fn default() -> Self {
        TargetScaling {
            offset: 0.0,
            scale: 1.0,
        }
    }
}

impl TargetScaling {
    /// Mean and standard deviation of the training labels (scale 1 when the
    /// labels are constant).
    pub fn from_targets(targets: &[f64]) -> Self {
        if targets.is_empty() {
            return Self::default();
        }
        let n = targets.len() as f64;
        let mean = targets.iter().sum::<f64>() / n;
        let sd = (targets.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        TargetScaling {
            offset: mean,
            scale: if sd > 0.0 { sd } else { 1.0 },
        }
    }
}

#[derive(Clone, Debug)]
pub struct ModelState {
    config: ModelConfig,
    seed: u64,
    pub target: TargetScaling,
    input_proj: Option<Dense>,
    positional: Option<Tensor>,
    encoder: Vec<EncoderLayer>,
    gru: Option<Gru>,
    head: Dense,
}

/// Forward intermediates for [`ModelState::backward`], plus the shape of every
/// stage for inspection.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    batch: usize,
    input_proj: Option<DenseCache>,
    encoder: Vec<EncoderCache>,
    gru: Option<GruSequenceCache>,
    head: DenseCache,
    stages: Vec<(&'static str, Vec<usize>)>,
}

impl ForwardCache {
    /// `(stage, shape)` pairs in execution order.
    pub fn stages(&self) -> &[(&'static str, Vec<usize>)] {
        &self.stages
    }

    pub fn stage_shape(&self, stage: &str) -> Option<&[usize]> {
        self.stages
            .iter()
            .find(|(name, _)| *name == stage)
            .map(|(_, s)| s.as_slice())
    }
}

impl ModelState {
    /// Deterministic initialization: every parameter is drawn from one
    /// ChaCha stream seeded with `seed`, in layer order.
    pub fn build(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = config.variant;
        let (input_proj, positional, encoder) = if v.has_encoder() {
            let proj = Dense::init("input_proj", config.n_features, config.d_model, &mut rng);
            let pe = positional_encoding(config.seq_len, config.d_model)?;
            let layers = (0..config.n_layers)
                .map(|i| {
                    EncoderLayer::new(
                        &format!("encoder{i}"),
                        config.seq_len,
                        config.d_model,
                        config.n_heads,
                        config.ffn_width,
                        config.mix_mode(),
                        &mut rng,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            (Some(proj), Some(pe), layers)
        } else {
            (None, None, Vec::new())
        };
        let gru = v.has_gru().then(|| {
            let input = if v.has_encoder() { config.d_model } else { config.n_features };
            Gru::init("gru", input, config.gru_units, &mut rng)
        });
        let summary = if v.has_gru() { config.gru_units } else { config.d_model };
        let head = Dense::init("head", summary, 1, &mut rng);
        Ok(ModelState {
            config,
            seed,
            target: TargetScaling::default(),
            input_proj,
            positional,
            encoder,
            gru,
            head,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Parameters in their fixed, deterministic order.
    pub fn parameters(&self) -> Vec<&Parameter> {
        let mut out = Vec::new();
        if let Some(p) = &self.input_proj {
            out.extend(p.params());
        }
        for layer in &self.encoder {
            out.extend(layer.params());
        }
        if let Some(g) = &self.gru {
            out.extend(g.params());
        }
        out.extend(self.head.params());
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut out = Vec::new();
        if let Some(p) = &mut self.input_proj {
            out.extend(p.params_mut());
        }
        for layer in &mut self.encoder {
            out.extend(layer.params_mut());
        }
        if let Some(g) = &mut self.gru {
            out.extend(g.params_mut());
        }
        out.extend(self.head.params_mut());
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in self.parameters_mut() {
            p.zero_grad();
        }
    }

    /// Overrides the mixing step of every encoder layer.
    pub fn set_mix_mode(&mut self, mode: MixMode) {
        for layer in &mut self.encoder {
            layer.mix.mode = mode;
        }
    }

    fn check_input(&self, x: &Tensor) -> Result<usize> {
        let c = &self.config;
        let s = x.shape();
        if s.len() != 3 || s[1] != c.seq_len || s[2] != c.n_features {
            return Err(Error::shape(
                "model_forward",
                format!("expected [B, {}, {}], got {s:?}", c.seq_len, c.n_features),
            ));
        }
        x.ensure_finite("model_forward")?;
        Ok(s[0])
    }

    fn add_positional(&self, h: &mut Tensor) {
        if let Some(pe) = &self.positional {
            let block = pe.len();
            for chunk in h.data_mut().chunks_exact_mut(block) {
                for (v, p) in chunk.iter_mut().zip(pe.data()) {
                    *v += p;
                }
            }
        }
    }

    fn mean_over_time(&self, h: &Tensor, batch: usize) -> Tensor {
        let (t, d) = (self.config.seq_len, self.config.d_model);
        let mut out = vec![0.0; batch * d];
        for b in 0..batch {
            for s in 0..t {
                let row = &h.data()[(b * t + s) * d..(b * t + s + 1) * d];
                for (o, v) in out[b * d..(b + 1) * d].iter_mut().zip(row) {
                    *o += v;
                }
            }
        }
        for v in &mut out {
            *v /= t as f64;
        }
        Tensor::from_parts(vec![batch, d], out)
    }

    fn to_predictions(&self, raw: Tensor, batch: usize) -> Result<Tensor> {
        let TargetScaling { offset, scale } = self.target;
        let pred = Tensor::from_parts(vec![batch], raw.into_data().into_iter().map(|v| offset + scale * v).collect());
        pred.ensure_finite("model_forward")?;
        Ok(pred)
    }

    /// Maps `x[B, seq_len, n_features]` to predictions `[B]`.
    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, ForwardCache)> {
        let batch = self.check_input(x)?;
        let mut stages = vec![("input", x.shape().to_vec())];
        let mut h = x.clone();
        let mut input_proj = None;
        if let Some(proj) = &self.input_proj {
            let (y, cache) = proj.forward(&h)?;
            input_proj = Some(cache);
            h = y;
            self.add_positional(&mut h);
            stages.push(("embedded", h.shape().to_vec()));
        }
        let mut encoder = Vec::with_capacity(self.encoder.len());
        for layer in &self.encoder {
            let (y, cache) = layer.forward(&h)?;
            encoder.push(cache);
            h = y;
        }
        if !self.encoder.is_empty() {
            stages.push(("encoder", h.shape().to_vec()));
        }
        let (summary, gru) = match &self.gru {
            Some(g) => {
                let (seq, cache) = g.sequence(&h, None)?;
                stages.push(("gru", seq.all_h.shape().to_vec()));
                stages.push(("last_hidden", seq.last_h.shape().to_vec()));
                (seq.last_h, Some(cache))
            }
            None => {
                let pooled = self.mean_over_time(&h, batch);
                stages.push(("pooled", pooled.shape().to_vec()));
                (pooled, None)
            }
        };
        let (raw, head) = self.head.forward(&summary)?;
        stages.push(("head", raw.shape().to_vec()));
        let pred = self.to_predictions(raw, batch)?;
        stages.push(("output", pred.shape().to_vec()));
        Ok((
            pred,
            ForwardCache {
                batch,
                input_proj,
                encoder,
                gru,
                head,
                stages,
            },
        ))
    }

    /// Inference-only forward pass without caches.
    pub fn predict(&self, x: &Tensor) -> Result<Tensor> {
        let batch = self.check_input(x)?;
        let mut h = match &self.input_proj {
            Some(proj) => {
                let mut y = proj.infer(x)?;
                self.add_positional(&mut y);
                y
            }
            None => x.clone(),
        };
        for layer in &self.encoder {
            h = layer.infer(&h)?;
        }
        let summary = match &self.gru {
            Some(g) => g.sequence_infer(&h, None)?.last_h,
            None => self.mean_over_time(&h, batch),
        };
        let raw = self.head.infer(&summary)?;
        self.to_predictions(raw, batch)
    }

    /// Accumulates the gradient of `Σ dpred · pred` into every parameter.
    pub fn backward(&mut self, dpred: &Tensor, cache: &ForwardCache) -> Result<()> {
        let batch = cache.batch;
        if dpred.len() != batch {
            return Err(Error::shape(
                "model_backward",
                format!("dpred has {} entries, cached batch is {batch}", dpred.len()),
            ));
        }
        if cache.encoder.len() != self.encoder.len() || cache.gru.is_some() != self.gru.is_some() {
            return Err(Error::shape("model_backward", "cache was produced by a different model"));
        }
        let scale = self.target.scale;
        let draw = Tensor::from_parts(vec![batch, 1], dpred.data().iter().map(|g| g * scale).collect());
        let dsummary = self.head.backward(&draw, &cache.head)?;

        let mut dh = match (&mut self.gru, &cache.gru) {
            (Some(g), Some(gc)) => g.sequence_backward(None, Some(&dsummary), gc)?.0,
            _ => {
                let (t, d) = (self.config.seq_len, self.config.d_model);
                let mut out = vec![0.0; batch * t * d];
                for b in 0..batch {
                    let src = &dsummary.data()[b * d..(b + 1) * d];
                    for s in 0..t {
                        for (o, v) in out[(b * t + s) * d..(b * t + s + 1) * d].iter_mut().zip(src) {
                            *o = v / t as f64;
                        }
                    }
                }
                Tensor::from_parts(vec![batch, t, d], out)
            }
        };
        for (layer, lc) in self.encoder.iter_mut().zip(&cache.encoder).rev() {
            dh = layer.backward(&dh, lc)?;
        }
        if let (Some(proj), Some(pc)) = (&mut self.input_proj, &cache.input_proj) {
            proj.backward(&dh, pc)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::mse_loss;
    use crate::testutil::*;
    use rand::Rng;

    fn small_config(variant: Variant) -> ModelConfig {
        ModelConfig {
            variant,
            seq_len: 6,
            n_features: 3,
            d_model: 8,
            n_layers: 2,
            n_heads: 2,
            gru_units: 5,
            ffn_width: 10,
            fnet_mode: false,
        }
    }

    #[test]
    fn default_hybrid_parameter_count_matches_layer_tally() {
        let (f, d, h, k, ffn, u) = (24, 64, 4, 30 / 2 + 1, 128, 64);
        let input_proj = f * d + d;
        let per_layer = 2 * d // norm_mix
            + 2 * h * k // spectral filters
            + d * d + d // mix projection
            + 2 * d // norm_ffn
            + d * ffn + ffn
            + ffn * d + d;
        let gru = d * 3 * u + u * 2 * u + u * u + 3 * u;
        let head = u + 1;
        let expected = input_proj + 2 * per_layer + gru + head;
        let m = ModelState::build(ModelConfig::default(), 1).unwrap();
        assert_eq!(m.parameter_count(), expected);
        assert_eq!(expected, 68_673);
    }

    #[test]
    fn same_seed_builds_identical_models() {
        let a = ModelState::build(ModelConfig::default(), 42).unwrap();
        let b = ModelState::build(ModelConfig::default(), 42).unwrap();
        let c = ModelState::build(ModelConfig::default(), 43).unwrap();
        let pa: Vec<_> = a.parameters().into_iter().cloned().collect();
        let pb: Vec<_> = b.parameters().into_iter().cloned().collect();
        let pc: Vec<_> = c.parameters().into_iter().cloned().collect();
        assert_eq!(pa, pb);
        assert_ne!(pa, pc);
    }

    #[test]
    fn ablations_are_smaller() {
        let hybrid = ModelState::build(ModelConfig::default(), 0).unwrap().parameter_count();
        let gru = ModelState::build(ModelConfig::with_variant(Variant::GruOnly), 0).unwrap().parameter_count();
        let ftt = ModelState::build(ModelConfig::with_variant(Variant::FttOnly), 0).unwrap().parameter_count();
        assert!(gru < hybrid);
        assert!(ftt < hybrid);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad_heads = ModelConfig { n_heads: 5, ..Default::default() };
        assert!(ModelState::build(bad_heads, 0).is_err());
        let zero_len = ModelConfig { seq_len: 0, ..Default::default() };
        assert!(ModelState::build(zero_len, 0).is_err());
        // gru_only has no encoder, so head divisibility does not matter
        let gru_only = ModelConfig { variant: Variant::GruOnly, n_heads: 5, ..Default::default() };
        assert!(ModelState::build(gru_only, 0).is_ok());
    }

    #[test]
    fn forward_shapes_and_batch_independence() {
        let m = ModelState::build(ModelConfig::default(), 3).unwrap();
        let mut r = rng(3);
        let row = random(&[1, 30, 24], &mut r);
        let (single, _) = m.forward(&row).unwrap();
        assert_eq!(single.shape(), &[1]);
        let mut twice = row.data().to_vec();
        twice.extend_from_slice(row.data());
        let (pair, _) = m.forward(&Tensor::new(vec![2, 30, 24], twice).unwrap()).unwrap();
        assert_eq!(pair.data()[0], pair.data()[1]);
        assert_eq!(m.predict(&row).unwrap(), single);
    }

    #[test]
    fn rejects_wrong_input() {
        let m = ModelState::build(ModelConfig::default(), 3).unwrap();
        assert!(m.forward(&Tensor::zeros(&[1, 29, 24])).is_err());
        assert!(m.forward(&Tensor::zeros(&[1, 30, 23])).is_err());
        assert!(m.forward(&Tensor::zeros(&[30, 24])).is_err());
    }

    #[test]
    fn zero_parameters_predict_zero() {
        for v in Variant::ALL {
            let mut m = ModelState::build(ModelConfig::with_variant(v), 5).unwrap();
            for p in m.parameters_mut() {
                p.value.fill(0.0);
            }
            let x = random(&[3, 30, 24], &mut rng(5));
            let (y, _) = m.forward(&x).unwrap();
            assert!(y.data().iter().all(|&v| v == 0.0), "{v}");
        }
    }

    #[test]
    fn zero_upstream_leaves_gradients_zero() {
        let mut m = ModelState::build(small_config(Variant::Hybrid), 6).unwrap();
        let (_, cache) = m.forward(&random(&[2, 6, 3], &mut rng(6))).unwrap();
        m.backward(&Tensor::zeros(&[2]), &cache).unwrap();
        for p in m.parameters() {
            assert!(p.grad.data().iter().all(|&v| v == 0.0), "{}", p.name);
        }
    }

    #[test]
    fn gradients_accumulate_across_calls() {
        let mut m = ModelState::build(small_config(Variant::Hybrid), 7).unwrap();
        let mut r = rng(7);
        let x = random(&[2, 6, 3], &mut r);
        let dpred = random(&[2], &mut r);
        let (_, cache) = m.forward(&x).unwrap();
        m.backward(&dpred, &cache).unwrap();
        let once: Vec<Vec<f64>> = m.parameters().iter().map(|p| p.grad.data().to_vec()).collect();
        m.backward(&dpred, &cache).unwrap();
        for (p, g1) in m.parameters().iter().zip(&once) {
            for (a, b) in p.grad.data().iter().zip(g1) {
                assert!((a - 2.0 * b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }

    fn check_end_to_end(variant: Variant, fnet_mode: bool, seed: u64) {
        let cfg = ModelConfig {
            fnet_mode,
            ..small_config(variant)
        };
        let mut m = ModelState::build(cfg, seed).unwrap();
        let mut r = rng(seed);
        // move filters and norms away from their symmetric initial values
        for p in m.parameters_mut() {
            if p.name.contains("filter") || p.name.contains("norm") {
                let shape = p.value.shape().to_vec();
                p.value = Tensor::from_fn(&shape, |i| p.value.data()[i] + r.random_range(-0.5..0.5));
            }
        }
        m.target = TargetScaling { offset: 0.3, scale: 1.7 };
        let x = random(&[4, 6, 3], &mut r);
        let y = random(&[4], &mut r);
        let (pred, cache) = m.forward(&x).unwrap();
        let (_, dpred) = mse_loss(&pred, &y).unwrap();
        m.backward(&dpred, &cache).unwrap();
        let loss = |m: &ModelState| mse_loss(&m.predict(&x).unwrap(), &y).unwrap().0;
        let names: Vec<String> = m.parameters().iter().map(|p| p.name.clone()).collect();
        for (pi, name) in names.iter().enumerate() {
            let analytic = m.parameters()[pi].grad.data().to_vec();
            let fd = central_differences(analytic.len(), |i, h| {
                let mut c = m.clone();
                c.parameters_mut()[pi].value.data_mut()[i] += h;
                loss(&c)
            });
            let err = rel_err(&analytic, &fd);
            assert!(err < 1e-5, "{variant} {name}: {err}");
        }
    }

    #[test]
    fn end_to_end_gradients_all_variants() {
        check_end_to_end(Variant::Hybrid, false, 10);
        check_end_to_end(Variant::GruOnly, false, 11);
        check_end_to_end(Variant::FttOnly, false, 12);
        check_end_to_end(Variant::Hybrid, true, 13);
    }

    #[test]
    fn unit_filters_match_identity_mixing() {
        let m = ModelState::build(ModelConfig::default(), 8).unwrap();
        let mut identity = m.clone();
        identity.set_mix_mode(MixMode::Identity);
        let x = random(&[3, 30, 24], &mut rng(8));
        let a = m.predict(&x).unwrap();
        let b = identity.predict(&x).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-8);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.as_str().parse::<Variant>().unwrap(), v);
        }
        assert!("lstm".parse::<Variant>().is_err());
    }
}
