use alloc::vec::Vec;

use rand::seq::index;

use super::{AutodiffError, Tape, Tensor, Var};
use crate::rng;

/// Central finite-difference settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub step: f64,
    /// Relative errors are taken against `max(|analytic|, |numeric|, floor)`
    /// so that near-zero gradients are compared absolutely.
    pub floor: f64,
}

impl Default for GradCheck {
    fn default() -> Self {
        Self {
            step: 1e-6,
            floor: 1e-3,
        }
    }
}

/// Which coordinates of the inputs to perturb.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selection {
    All,
    /// `count` coordinates drawn without replacement over all inputs.
    Random { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    /// `(input, element)` of the worst coordinate.
    pub worst: Option<(usize, usize)>,
}

/// Compare the tape gradient of the scalar `f(inputs)` with central
/// differences.
pub fn check_gradients<F>(
    inputs: &[Tensor],
    f: F,
    cfg: &GradCheck,
    selection: Selection,
) -> Result<GradCheckReport, AutodiffError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, AutodiffError>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t.clone())).collect();
    let out = f(&mut tape, &vars)?;
    tape.backward(out)?;
    let analytic: Vec<Vec<f64>> = vars
        .iter()
        .zip(inputs)
        .map(|(&v, t)| {
            tape.grad(v)
                .map(<[f64]>::to_vec)
                .unwrap_or_else(|| alloc::vec![0.0; t.numel()])
        })
        .collect();

    let coords: Vec<(usize, usize)> = inputs
        .iter()
        .enumerate()
        .flat_map(|(i, t)| (0..t.numel()).map(move |k| (i, k)))
        .collect();
    let coords = match selection {
        Selection::All => coords,
        Selection::Random { count, seed } => {
            let mut r = rng::seeded(seed);
            let mut picked: Vec<usize> = index::sample(&mut r, coords.len(), count.min(coords.len())).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|p| coords[p]).collect()
        }
    };

    let eval = |perturbed: &[Tensor]| -> Result<f64, AutodiffError> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = perturbed.iter().map(|t| tape.constant(t.clone())).collect();
        let out = f(&mut tape, &vars)?;
        tape.value(out).item().ok_or_else(|| AutodiffError::NotScalar {
            shape: tape.shape(out).to_vec(),
        })
    };

    let mut work = inputs.to_vec();
    let mut report = GradCheckReport {
        checked: 0,
        max_rel_error: 0.0,
        worst: None,
    };
    for (i, k) in coords {
        let orig = work[i].data()[k];
        work[i].data_mut()[k] = orig + cfg.step;
        let plus = eval(&work)?;
        work[i].data_mut()[k] = orig - cfg.step;
        let minus = eval(&work)?;
        work[i].data_mut()[k] = orig;
        let numeric = (plus - minus) / (2.0 * cfg.step);
        let a = analytic[i][k];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(cfg.floor);
        report.checked += 1;
        if rel > report.max_rel_error || report.worst.is_none() {
            report.max_rel_error = report.max_rel_error.max(rel);
            report.worst = Some((i, k));
        }
    }
    Ok(report)
}
