use super::{AutodiffError, Graph, Tensor, Var};

/// Outcome of a finite-difference gradient check.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    /// Largest `|analytic − numeric| / max(|analytic|, |numeric|, floor)`.
    pub max_rel_error: f64,
    /// (input index, flat coordinate) of the worst coordinate.
    pub worst: Option<(usize, usize)>,
    pub analytic_at_worst: f64,
    pub numeric_at_worst: f64,
    pub coordinates: usize,
    pub tolerance: f64,
    pub passed: bool,
}

/// Relative errors are measured against at least this magnitude so that
/// coordinates with vanishing gradients do not divide by round-off.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

/// Compares reverse-mode gradients of the scalar function `f` against central
/// differences `(f(x+h) − f(x−h)) / 2h`, coordinate by coordinate, over every
/// element of every input.
pub fn grad_check<F>(f: F, inputs: &[Tensor<f64>], h: f64, tol: f64) -> Result<GradCheckReport, AutodiffError>
where
    F: for<'g> Fn(&mut Graph<'g, f64>, &[Var]) -> Result<Var, AutodiffError>,
{
    let analytic = {
        let mut g = Graph::new();
        let vars: Vec<Var> = inputs.iter().map(|t| g.input(t.clone(), true)).collect();
        let out = f(&mut g, &vars)?;
        let grads = g.backward(out)?;
        vars.iter()
            .map(|&v| grads.get(v).cloned().expect("input requires grad"))
            .collect::<Vec<_>>()
    };

    let eval = |xs: &[Tensor<f64>]| -> Result<f64, AutodiffError> {
        let mut g = Graph::new();
        let vars: Vec<Var> = xs.iter().map(|t| g.input(t.clone(), false)).collect();
        let out = f(&mut g, &vars)?;
        let v = g.value(out);
        if v.numel() != 1 {
            return Err(AutodiffError::NonScalarLoss { shape: v.shape().to_vec() });
        }
        Ok(v.item())
    };

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        analytic_at_worst: 0.0,
        numeric_at_worst: 0.0,
        coordinates: 0,
        tolerance: tol,
        passed: true,
    };
    let mut work: Vec<Tensor<f64>> = inputs.to_vec();
    for (i, input) in inputs.iter().enumerate() {
        for c in 0..input.numel() {
            let orig = input.data()[c];
            work[i].data_mut()[c] = orig + h;
            let plus = eval(&work)?;
            work[i].data_mut()[c] = orig - h;
            let minus = eval(&work)?;
            work[i].data_mut()[c] = orig;

            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic[i].data()[c];
            let denom = a.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
            let rel = (a - numeric).abs() / denom;
            report.coordinates += 1;
            if rel > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = rel;
                report.worst = Some((i, c));
                report.analytic_at_worst = a;
                report.numeric_at_worst = numeric;
            }
        }
    }
    report.passed = report.max_rel_error <= tol;
    Ok(report)
}
