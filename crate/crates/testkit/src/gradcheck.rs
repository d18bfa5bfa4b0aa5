//! Central finite differences against analytic gradients.

use nql::graph::{Gradients, ParamStore};

/// Worst disagreement found by [`check_gradients`].
#[derive(Debug, Clone, Default)]
pub struct GradReport {
    pub checked: usize,
    pub max_rel_error: f64,
    /// Parameter name, flat index, analytic and numeric values at the worst entry.
    pub worst: Option<(String, usize, f64, f64)>,
}

/// `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Compares `grads` with `(f(θ + h) - f(θ - h)) / 2h` for every raw value of
/// every parameter in the store that `store_of` exposes. `f` evaluates the
/// loss of `target` at its current parameter values.
pub fn check_gradients<T: ?Sized>(
    target: &mut T,
    store_of: impl Fn(&mut T) -> &mut ParamStore,
    grads: &Gradients,
    h: f64,
    mut f: impl FnMut(&T) -> f64,
) -> GradReport {
    let mut report = GradReport::default();
    let ids: Vec<_> = store_of(target).ids().collect();
    for id in ids {
        let n = store_of(target).get(id).values.len();
        for k in 0..n {
            let x = store_of(target).get(id).values[k];
            store_of(target).get_mut(id).values[k] = x + h;
            let up = f(target);
            store_of(target).get_mut(id).values[k] = x - h;
            let down = f(target);
            store_of(target).get_mut(id).values[k] = x;
            let numeric = (up - down) / (2.0 * h);
            let analytic = grads.get(id).map_or(0.0, |g| g[k]);
            let err = rel_error(analytic, numeric);
            report.checked += 1;
            if report.worst.is_none() || err > report.max_rel_error {
                report.max_rel_error = err;
                let name = store_of(target).get(id).name.clone();
                report.worst = Some((name, k, analytic, numeric));
            }
        }
    }
    report
}
