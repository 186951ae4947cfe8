//! Central finite differences, used to verify reverse-mode gradients.

use super::{ParamId, ParamStore};

/// `(f(θ + h·e_i) − f(θ − h·e_i)) / 2h` for entry `index` of parameter `id`.
pub fn central_difference<F>(store: &ParamStore, id: ParamId, index: usize, h: f64, mut f: F) -> f64
where
    F: FnMut(&ParamStore) -> f64,
{
    let mut work = store.clone();
    let x0 = work.value(id).data()[index];
    work.value_mut(id).data_mut()[index] = x0 + h;
    let plus = f(&work);
    work.value_mut(id).data_mut()[index] = x0 - h;
    let minus = f(&work);
    (plus - minus) / (2.0 * h)
}

/// Directional central difference along `direction` (one slice per parameter).
pub fn directional_difference<F>(store: &ParamStore, direction: &[Vec<f64>], h: f64, mut f: F) -> f64
where
    F: FnMut(&ParamStore) -> f64,
{
    let shifted = |sign: f64| {
        let mut work = store.clone();
        for (id, d) in store.ids().zip(direction) {
            for (x, di) in work.value_mut(id).data_mut().iter_mut().zip(d) {
                *x += sign * h * di;
            }
        }
        work
    };
    let plus = f(&shifted(1.0));
    let minus = f(&shifted(-1.0));
    (plus - minus) / (2.0 * h)
}

/// Smallest denominator used by [`relative_error`].
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-5;

/// `|a − b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(RELATIVE_ERROR_FLOOR)
}
