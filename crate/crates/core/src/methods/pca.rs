use super::{covariance3, finish, require_len, select_component, sym_eigen_desc};
use super::{ComponentSelection, MethodConfig, MethodId};
use crate::error::{Error, Result};
use crate::signal::{detrend, zscore};
use crate::trace::{BvpSignal, RgbTrace};

/// Principal components of the z-scored channels. Components are ordered
/// by explained variance; the output one is picked per the config
/// (default: strongest in-band spectral peak).
pub fn pca(trace: &RgbTrace, cfg: &MethodConfig) -> Result<BvpSignal> {
    require_len(trace, (2.0 * trace.fs()).ceil() as usize)?;
    let mut ch: [Vec<f64>; 3] = Default::default();
    for (c, raw) in trace.channels().into_iter().enumerate() {
        ch[c] = zscore(&detrend(&raw)).map_err(|_| Error::RankDeficient { min_eigenvalue: 0.0 })?;
    }
    let (values, vectors) = sym_eigen_desc(covariance3(&ch));
    if !(values[0] > 0.0) {
        return Err(Error::RankDeficient {
            min_eigenvalue: values[2],
        });
    }
    let components: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| (0..trace.len()).map(|t| v[0] * ch[0][t] + v[1] * ch[1][t] + v[2] * ch[2][t]).collect())
        .collect();
    let k = select_component(
        &components,
        trace.fs(),
        cfg.band,
        cfg.selection_or(ComponentSelection::MaxSpectralPeak),
    );
    finish(components[k].clone(), trace.fs(), cfg, MethodId::Pca)
}
