//! Attention fusion of two feature vectors for a few kernels.
//!
//!     cargo run --example fusion

use mdgait::autodiff::{Graph, Tensor};
use mdgait::fusion::{fuse, scores, weights};

fn row(v: &[f64]) -> Tensor<f64> {
    Tensor::new(&[1, v.len()], v.to_vec()).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f_s = [2.0, -1.0, 0.5, 3.0];
    let f_c = [0.0, 1.0, 0.5, -3.0];
    for q in [[0.0; 4], [1.0; 4], [-1.0, 2.0, 5.0, 0.25]] {
        let mut g = Graph::new();
        let (s, c, qv) = (g.constant(row(&f_s)), g.constant(row(&f_c)), g.constant(row(&q)));
        let ss = scores(&mut g, qv, s)?;
        let sc = scores(&mut g, qv, c)?;
        let w = weights(&mut g, &[ss, sc])?;
        let fused = fuse(&mut g, &[s, c], qv)?;
        println!("q   = {q:?}");
        println!("w_s = {:?}", g.value(w[0]).data());
        println!("w_c = {:?}", g.value(w[1]).data());
        println!("f_a = {:?}\n", g.value(fused).data());
    }
    Ok(())
}
