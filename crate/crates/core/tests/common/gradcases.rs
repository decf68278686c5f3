//! Finite-difference cases for every graph op.

use mdgait::autodiff::{grad_check, AutodiffError, GradCheckReport, Graph, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const H: f64 = 1e-5;
pub const TOL: f64 = 1e-4;

pub type Build = for<'g> fn(&mut Graph<'g, f64>, &[Var]) -> Result<Var, AutodiffError>;

pub struct OpCase {
    pub name: &'static str,
    pub shapes: &'static [&'static [usize]],
    pub build: Build,
}

pub fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.random_range(-1.5..1.5)).collect()).unwrap()
}

/// Reduces `out` with fixed pseudo-random weights so each coordinate sees a
/// distinct upstream gradient.
pub fn weighted_sum(g: &mut Graph<'_, f64>, out: Var, seed: u64) -> Result<Var, AutodiffError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = rand_tensor(&mut rng, g.shape(out));
    let w = g.constant(w);
    let p = g.hadamard(out, w)?;
    g.sum(p)
}

pub fn run(case: &OpCase) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let inputs: Vec<_> = case.shapes.iter().map(|s| rand_tensor(&mut rng, s)).collect();
    grad_check(case.build, &inputs, H, TOL).unwrap()
}

macro_rules! case {
    ($name:literal, [$($s:expr),*], |$g:ident, $v:ident| $body:expr) => {
        OpCase { name: $name, shapes: &[$(&$s),*], build: |$g, $v| $body }
    };
}

pub fn op_cases() -> Vec<OpCase> {
    vec![
        case!("matmul", [[3, 4], [4, 2]], |g, v| {
            let y = g.matmul(v[0], v[1])?;
            weighted_sum(g, y, 1)
        }),
        case!("linear", [[3, 4], [5, 4], [5]], |g, v| {
            let y = g.linear(v[0], v[1], Some(v[2]))?;
            weighted_sum(g, y, 2)
        }),
        case!("linear_nobias", [[2, 3], [4, 3]], |g, v| {
            let y = g.linear(v[0], v[1], None)?;
            weighted_sum(g, y, 3)
        }),
        case!("add", [[3, 4], [3, 4]], |g, v| {
            let y = g.add(v[0], v[1])?;
            weighted_sum(g, y, 4)
        }),
        case!("add_broadcast", [[2, 3, 4], [4]], |g, v| {
            let y = g.add(v[0], v[1])?;
            weighted_sum(g, y, 5)
        }),
        case!("hadamard", [[3, 4], [3, 4]], |g, v| {
            let y = g.hadamard(v[0], v[1])?;
            weighted_sum(g, y, 6)
        }),
        case!("scale", [[5]], |g, v| {
            let y = g.scale(v[0], -0.37)?;
            weighted_sum(g, y, 7)
        }),
        case!("gelu", [[4, 5]], |g, v| {
            let y = g.gelu(v[0])?;
            weighted_sum(g, y, 8)
        }),
        case!("softmax_axis1", [[3, 5]], |g, v| {
            let y = g.softmax(v[0], 1)?;
            weighted_sum(g, y, 9)
        }),
        case!("softmax_axis0", [[2, 6]], |g, v| {
            let y = g.softmax(v[0], 0)?;
            weighted_sum(g, y, 10)
        }),
        case!("layer_norm", [[3, 6], [6], [6]], |g, v| {
            let y = g.layer_norm(v[0], v[1], v[2], 1e-6)?;
            weighted_sum(g, y, 11)
        }),
        case!("transpose", [[3, 4]], |g, v| {
            let y = g.transpose(v[0])?;
            weighted_sum(g, y, 12)
        }),
        case!("reshape", [[3, 4]], |g, v| {
            let y = g.reshape(v[0], &[2, 6])?;
            weighted_sum(g, y, 13)
        }),
        case!("concat_axis0", [[1, 4], [3, 4]], |g, v| {
            let y = g.concat(&[v[0], v[1]], 0)?;
            weighted_sum(g, y, 14)
        }),
        case!("concat_axis1", [[3, 2], [3, 3]], |g, v| {
            let y = g.concat(&[v[0], v[1], v[0]], 1)?;
            weighted_sum(g, y, 15)
        }),
        case!("slice_axis0", [[5, 3]], |g, v| {
            let y = g.slice(v[0], 0, 1, 3)?;
            weighted_sum(g, y, 16)
        }),
        case!("slice_axis1", [[3, 6]], |g, v| {
            let y = g.slice(v[0], 1, 2, 2)?;
            weighted_sum(g, y, 17)
        }),
        case!("sum", [[2, 3]], |g, v| {
            let sq = g.hadamard(v[0], v[0])?;
            g.sum(sq)
        }),
        case!("mean", [[3, 4]], |g, v| {
            let sq = g.hadamard(v[0], v[0])?;
            g.mean(sq)
        }),
        case!("cross_entropy", [[3, 4]], |g, v| g.cross_entropy_logits(v[0], &[0, 3, 1])),
    ]
}
