//! One ViT stream on a spectrogram frame: intermediate shapes and the class
//! token's attention over patches in the last block.
//!
//!     cargo run --release --example vit_stream

use mdgait::autodiff::{Graph, ParamStore};
use mdgait::radar_synth::{SequenceKey, SynthPlan};
use mdgait::tfr::{to_model_input, PreprocessConfig};
use mdgait::vit::{encoder_forward, patch_embed, prepend_token, add_position, standardize, vit_forward_traced, ViTConfig, ViTParams};
use rand::SeedableRng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let plan = SynthPlan { duration_s: 2.0, ..SynthPlan::default() };
    let raw = plan.synth(SequenceKey { subject_id: 0, session: 0, seq: 0 })?;
    let spec = PreprocessConfig::default().spectrogram(&raw)?;

    let config = ViTConfig::desk();
    let image = to_model_input(&spec.data.columns(0, 115), config.image_size);
    let mut store = ParamStore::<f32>::new();
    let vit = ViTParams::init(&mut store, "vit_s", &config, &mut rand_chacha::ChaCha8Rng::seed_from_u64(1));
    println!("{config:?}");
    println!("parameters: {}", config.param_count());

    let mut g = Graph::new();
    let p = store.bind(&mut g);
    let t = vit_forward_traced(&mut g, &p, &vit, &image)?;
    for (name, v) in [("patches", t.patches), ("tokens", t.tokens), ("encoded", t.encoded), ("feature", t.feature)] {
        println!("{name:>8}: {:?}", g.shape(v));
    }

    // same pass again, collecting attention maps
    let x = patch_embed(&mut g, &p, &vit, &standardize(&image))?;
    let x = prepend_token(&mut g, x, p[vit.class_token])?;
    let x = add_position(&mut g, x, p[vit.position])?;
    let mut attn = Vec::new();
    encoder_forward(&mut g, &p, &vit, x, Some(&mut attn))?;
    let last = g.value(*attn.last().expect("depth > 0"));
    let grid = config.grid();
    println!("class-token attention, last block, last head:");
    for r in 0..grid {
        let cells: Vec<String> = (0..grid).map(|c| format!("{:.3}", last.at(0, 1 + r * grid + c))).collect();
        println!("  {}", cells.join(" "));
    }
    Ok(())
}
