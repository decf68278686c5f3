//! Attention-based feature fusion.
//!
//! Given stream features `f_i` (each `1 × d`) and a trained kernel `q`
//! (`1 × d`): scores `s_i = q ⊙ f_i`, weights `w_i = exp(s_i) ⊘ Σ_j exp(s_j)`
//! taken independently per coordinate across the streams, and the fused
//! feature `f_a = Σ_i w_i ⊙ f_i`. Every coordinate of `f_a` is a convex
//! combination of the streams' values at that coordinate.

use crate::autodiff::{AutodiffError, Graph, ParamId, ParamStore, Scalar, Tensor, Var};

/// The fusion kernel `q`, initialized to zeros (plain averaging).
#[derive(Clone, Copy, Debug)]
pub struct FusionKernel {
    pub q: ParamId,
}

impl FusionKernel {
    pub const PARAM_NAME: &'static str = "fusion.q";

    pub fn init<T: Scalar>(store: &mut ParamStore<T>, dim: usize) -> Self {
        Self { q: store.add(Self::PARAM_NAME, Tensor::zeros(&[1, dim])) }
    }
}

pub fn scores<T: Scalar>(g: &mut Graph<'_, T>, q: Var, feature: Var) -> Result<Var, AutodiffError> {
    g.hadamard(q, feature)
}

/// Per-coordinate softmax across the streams' score vectors.
pub fn weights<T: Scalar>(g: &mut Graph<'_, T>, scores: &[Var]) -> Result<Vec<Var>, AutodiffError> {
    if scores.len() < 2 {
        return Err(AutodiffError::Arity { op: "fusion weights", needed: 2, got: scores.len() });
    }
    let d = g.shape(scores[0]).to_vec();
    for &s in &scores[1..] {
        if g.shape(s) != d.as_slice() {
            return Err(AutodiffError::Shape { op: "fusion weights", lhs: d, rhs: g.shape(s).to_vec() });
        }
    }
    // stack as [n × d] and normalize down each column
    let stacked = g.concat(scores, 0)?;
    let w = g.softmax(stacked, 0)?;
    (0..scores.len()).map(|i| g.slice(w, 0, i, 1)).collect()
}

/// `Σ_i w_i ⊙ f_i`.
pub fn fuse<T: Scalar>(g: &mut Graph<'_, T>, features: &[Var], q: Var) -> Result<Var, AutodiffError> {
    let s = features.iter().map(|&f| scores(g, q, f)).collect::<Result<Vec<_>, _>>()?;
    let w = weights(g, &s)?;
    let mut acc: Option<Var> = None;
    for (&wi, &fi) in w.iter().zip(features) {
        let term = g.hadamard(wi, fi)?;
        acc = Some(match acc {
            None => term,
            Some(a) => g.add(a, term)?,
        });
    }
    Ok(acc.expect("at least two features"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(g: &mut Graph<'_, f64>, v: &[f64]) -> Var {
        g.constant(Tensor::new(&[1, v.len()], v.to_vec()).unwrap())
    }

    #[test]
    fn scores_hand_values() {
        let mut g = Graph::new();
        let q = row(&mut g, &[2.0, -1.0]);
        let f = row(&mut g, &[3.0, 4.0]);
        let s = scores(&mut g, q, f).unwrap();
        assert_eq!(g.value(s).data(), &[6.0, -4.0]);

        let zero = row(&mut g, &[0.0, 0.0]);
        let s = scores(&mut g, zero, f).unwrap();
        assert_eq!(g.value(s).data(), &[0.0, 0.0]);
        let one = row(&mut g, &[1.0, 1.0]);
        let s = scores(&mut g, one, f).unwrap();
        assert_eq!(g.value(s).data(), g.value(f).data());
    }

    #[test]
    fn weights_need_two_streams() {
        let mut g = Graph::new();
        let s = row(&mut g, &[1.0]);
        assert!(matches!(weights(&mut g, &[s]), Err(AutodiffError::Arity { needed: 2, got: 1, .. })));
        let t = row(&mut g, &[1.0, 2.0]);
        assert!(matches!(weights(&mut g, &[s, t]), Err(AutodiffError::Shape { .. })));
    }

    #[test]
    fn equal_scores_split_evenly() {
        let mut g = Graph::new();
        let a = row(&mut g, &[0.3, -7.0, 12.0]);
        let w = weights(&mut g, &[a, a]).unwrap();
        for &wi in &w {
            assert!(g.value(wi).data().iter().all(|&v| v == 0.5));
        }
    }

    #[test]
    fn identical_features_are_a_fixed_point() {
        let mut g = Graph::new();
        let f = row(&mut g, &[0.25, -3.0, 8.0]);
        let q = row(&mut g, &[4.0, -2.0, 0.1]);
        let fa = fuse(&mut g, &[f, f], q).unwrap();
        for (a, b) in g.value(fa).data().iter().zip(g.value(f).data()) {
            assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0));
        }
    }
}
