//! The full recognizer: spectrogram stream, CVD stream, fusion, classifier.
//!
//! Canonical parameter names start with `vit_s.`, `vit_c.`, `fusion.` or
//! `classifier.`; see [`ViTParams::init`] for the per-stream names.

use std::path::Path;

use crate::autodiff::{checkpoint_io, AutodiffError, BoundParams, Graph, ParamId, ParamStore, Scalar, Tensor, Var};
use crate::fusion::{fuse, FusionKernel};
use crate::seed;
use crate::tfr::{FrameSample, Image};
use crate::vit::{trunc_normal, vit_forward, ViTConfig, ViTParams, INIT_STD};
use crate::Error;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModelConfig {
    pub vit: ViTConfig,
    pub num_classes: usize,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), Error> {
        self.vit.validate().map_err(Error::Config)?;
        if self.num_classes == 0 {
            return Err(Error::Config("num_classes must be positive".into()));
        }
        Ok(())
    }

    /// Scalar parameter count of the whole model from the configuration alone.
    pub fn param_count(&self) -> usize {
        2 * self.vit.param_count() + self.vit.feature_dim + self.num_classes * self.vit.feature_dim + self.num_classes
    }
}

/// Which stream inputs are fed; the other stream sees an all-zero image.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum StreamMode {
    #[default]
    Dual,
    SpectrogramOnly,
    CvdOnly,
}

impl StreamMode {
    pub fn name(self) -> &'static str {
        match self {
            StreamMode::Dual => "dual",
            StreamMode::SpectrogramOnly => "spectrogram",
            StreamMode::CvdOnly => "cvd",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "dual" => Some(StreamMode::Dual),
            "spectrogram" | "spec" => Some(StreamMode::SpectrogramOnly),
            "cvd" => Some(StreamMode::CvdOnly),
            _ => None,
        }
    }

    pub fn apply(self, spec: Image, cvd: Image) -> (Image, Image) {
        match self {
            StreamMode::Dual => (spec, cvd),
            StreamMode::SpectrogramOnly => {
                let z = Image::zeros(cvd.size);
                (spec, z)
            }
            StreamMode::CvdOnly => (Image::zeros(spec.size), cvd),
        }
    }
}

/// Nodes produced by one forward pass.
#[derive(Clone, Copy, Debug)]
pub struct ModelTrace {
    pub spec_feature: Var,
    pub cvd_feature: Var,
    pub fused: Var,
    pub logits: Var,
}

#[derive(Clone, Debug)]
pub struct AdsVitModel<T> {
    pub config: ModelConfig,
    pub store: ParamStore<T>,
    pub vit_s: ViTParams,
    pub vit_c: ViTParams,
    pub fusion: FusionKernel,
    pub classifier_weight: ParamId,
    pub classifier_bias: ParamId,
}

impl<T: Scalar> AdsVitModel<T> {
    /// Fresh model; identical seeds give bitwise-identical parameters.
    pub fn new(config: ModelConfig, init_seed: u64) -> Result<Self, Error> {
        config.validate()?;
        let mut rng = seed::rng(init_seed, "model-init", &[]);
        let mut store = ParamStore::new();
        let vit_s = ViTParams::init(&mut store, "vit_s", &config.vit, &mut rng);
        let vit_c = ViTParams::init(&mut store, "vit_c", &config.vit, &mut rng);
        let fusion = FusionKernel::init(&mut store, config.vit.feature_dim);
        let classifier_weight = store.add(
            "classifier.weight",
            trunc_normal(&mut rng, &[config.num_classes, config.vit.feature_dim], INIT_STD),
        );
        let classifier_bias = store.add("classifier.bias", Tensor::zeros(&[config.num_classes]));
        Ok(Self { config, store, vit_s, vit_c, fusion, classifier_weight, classifier_bias })
    }

    /// Same structure with parameters converted to `U`.
    pub fn cast<U: Scalar>(&self) -> AdsVitModel<U> {
        AdsVitModel {
            config: self.config.clone(),
            store: self.store.cast(),
            vit_s: self.vit_s.clone(),
            vit_c: self.vit_c.clone(),
            fusion: self.fusion,
            classifier_weight: self.classifier_weight,
            classifier_bias: self.classifier_bias,
        }
    }

    /// Builds the forward pass on `g` using parameter nodes `p` (which may
    /// come from [`ParamStore::bind`] or any other ordered source).
    pub fn forward_traced(
        &self,
        g: &mut Graph<'_, T>,
        p: &BoundParams,
        spec: &Image,
        cvd: &Image,
    ) -> Result<ModelTrace, AutodiffError> {
        let spec_feature = vit_forward(g, p, &self.vit_s, spec)?;
        let cvd_feature = vit_forward(g, p, &self.vit_c, cvd)?;
        let fused = fuse(g, &[spec_feature, cvd_feature], p[self.fusion.q])?;
        let logits = g.linear(fused, p[self.classifier_weight], Some(p[self.classifier_bias]))?;
        Ok(ModelTrace { spec_feature, cvd_feature, fused, logits })
    }

    pub fn logits_graph(&self, g: &mut Graph<'_, T>, p: &BoundParams, spec: &Image, cvd: &Image) -> Result<Var, AutodiffError> {
        Ok(self.forward_traced(g, p, spec, cvd)?.logits)
    }

    /// `1 × num_classes` logits without gradient bookkeeping.
    pub fn forward(&self, spec: &Image, cvd: &Image) -> Result<Tensor<T>, AutodiffError> {
        let mut g = Graph::new();
        let vars = self.store.tensors().iter().map(|t| g.constant(t.clone())).collect();
        let p = BoundParams::from_vars(vars);
        let logits = self.logits_graph(&mut g, &p, spec, cvd)?;
        Ok(g.value(logits).clone())
    }

    pub fn predict(&self, frame: &FrameSample, mode: StreamMode) -> Result<usize, AutodiffError> {
        let (s, c) = frame.model_inputs(self.config.vit.image_size);
        let (s, c) = mode.apply(s, c);
        Ok(argmax(self.forward(&s, &c)?.data()))
    }
}

impl AdsVitModel<f32> {
    pub fn save(&self, path: &Path) -> Result<(), Error> {
        checkpoint_io::save(&self.store, path)?;
        Ok(())
    }

    /// Builds the structure for `config` and fills it from a checkpoint.
    pub fn load(config: ModelConfig, path: &Path) -> Result<Self, Error> {
        let mut model = Self::new(config, 0)?;
        checkpoint_io::load_into(&mut model.store, path)?;
        Ok(model)
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_rules() {
        assert_eq!(argmax(&[0.1, 0.9, 0.3]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.1 + 7.0, 0.9 + 7.0, 0.3 + 7.0]), 1);
    }

    #[test]
    fn census_matches_instantiated_model() {
        for classes in [1, 8] {
            let cfg = ModelConfig { vit: ViTConfig::toy(), num_classes: classes };
            let m = AdsVitModel::<f32>::new(cfg.clone(), 3).unwrap();
            assert_eq!(m.store.num_scalars(), cfg.param_count());
            for prefix in ["vit_s.", "vit_c.", "fusion.", "classifier."] {
                assert!(m.store.names().iter().any(|n| n.starts_with(prefix)));
            }
        }
    }

    #[test]
    fn init_is_deterministic() {
        let cfg = ModelConfig { vit: ViTConfig::toy(), num_classes: 3 };
        let a = AdsVitModel::<f32>::new(cfg.clone(), 9).unwrap();
        let b = AdsVitModel::<f32>::new(cfg.clone(), 9).unwrap();
        let c = AdsVitModel::<f32>::new(cfg, 10).unwrap();
        assert_eq!(a.store, b.store);
        assert_ne!(a.store, c.store);
    }
}
