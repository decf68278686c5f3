//! Finite-difference check of the full toy model in f64.
//!
//!     cargo run --release --example grad_check

use mdgait::autodiff::{grad_check, BoundParams};
use mdgait::model::{AdsVitModel, ModelConfig};
use mdgait::tfr::Image;
use mdgait::vit::ViTConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut model = AdsVitModel::<f64>::new(ModelConfig { vit: ViTConfig::toy(), num_classes: 4 }, 0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    // move zero-initialized tensors off zero
    for t in model.store.tensors_mut() {
        t.data_mut().iter_mut().for_each(|x| *x += rng.random_range(-0.3..0.3));
    }
    let mut image = || Image::from_gray(32, &(0..32 * 32).map(|_| rng.random_range(0.0..1.0)).collect::<Vec<f32>>());
    let (spec, cvd) = (image(), image());

    let report = grad_check(
        |g, vars| {
            let p = BoundParams::from_vars(vars.to_vec());
            let logits = model.logits_graph(g, &p, &spec, &cvd)?;
            g.cross_entropy_logits(logits, &[2])
        },
        model.store.tensors(),
        1e-5,
        1e-4,
    )?;
    println!("{report:#?}");
    if let Some((tensor, _)) = report.worst {
        println!("worst tensor: {}", model.store.names()[tensor]);
    }
    Ok(())
}
