use nalgebra::Matrix3;

use super::{finish, require_len, select_component, sym_eigen_desc};
use super::{ComponentSelection, MethodConfig, MethodId};
use crate::error::{Error, Result};
use crate::trace::{BvpSignal, RgbTrace};

/// `I - u uᵀ` for the leading left-singular vector `u` of the 3xN trace
/// matrix (the leading eigenvector of `C Cᵀ`).
pub fn lgi_projection(trace: &RgbTrace) -> Result<Matrix3<f64>> {
    let s = trace.samples();
    let gram = Matrix3::from_fn(|i, j| s.iter().map(|p| p[i] * p[j]).sum::<f64>());
    let (values, vectors) = sym_eigen_desc(gram);
    if !(values[0] > 0.0) {
        return Err(Error::RankDeficient {
            min_eigenvalue: values[2],
        });
    }
    let u = vectors[0];
    Ok(Matrix3::identity() - u * u.transpose())
}

/// Local group invariance: removes the dominant colour direction of the
/// raw trace and outputs one row of the projected data (default: strongest
/// in-band spectral peak; `FixedSecond` gives the green row).
pub fn lgi(trace: &RgbTrace, cfg: &MethodConfig) -> Result<BvpSignal> {
    require_len(trace, (2.0 * trace.fs()).ceil() as usize)?;
    let p = lgi_projection(trace)?;
    let rows: Vec<Vec<f64>> = (0..3)
        .map(|i| {
            trace
                .samples()
                .iter()
                .map(|s| p[(i, 0)] * s[0] + p[(i, 1)] * s[1] + p[(i, 2)] * s[2])
                .collect()
        })
        .collect();
    let k = select_component(
        &rows,
        trace.fs(),
        cfg.band,
        cfg.selection_or(ComponentSelection::MaxSpectralPeak),
    );
    finish(rows[k].clone(), trace.fs(), cfg, MethodId::Lgi)
}
