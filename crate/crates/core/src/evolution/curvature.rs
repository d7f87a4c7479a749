//! Curvature of the graph `y = f(x)` and its quasilinear form.

use crate::error::{Error, Result};
use crate::grid::{spectral_derivative, GridFunction};

fn ensure_finite(g: GridFunction, what: &str) -> Result<GridFunction> {
    if g.values().iter().all(|v| v.is_finite()) {
        Ok(g)
    } else {
        Err(Error::InvalidData(format!("non-finite {what}")))
    }
}

/// Pulled-back curvature `(f' / (1 + f'^2)^{1/2})'`, outer derivative taken last.
pub fn curvature(f: &GridFunction) -> Result<GridFunction> {
    let df = spectral_derivative(f, 1)?;
    let tangent = df.map(|d| d / (1.0 + d * d).sqrt())?;
    ensure_finite(spectral_derivative(&tangent, 1)?, "curvature")
}

/// Quasilinear curvature operator `kappa(f)[h] = h'' / (1 + f'^2)^{3/2}`.
pub fn curvature_op(f: &GridFunction, h: &GridFunction) -> Result<GridFunction> {
    f.same_grid(h)?;
    let df = spectral_derivative(f, 1)?;
    let d2h = spectral_derivative(h, 2)?;
    let out = d2h.zip_with(&df, |a, d| a / (1.0 + d * d).powf(1.5))?;
    ensure_finite(out, "curvature")
}
