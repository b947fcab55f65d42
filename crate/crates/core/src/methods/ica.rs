use super::jade::jade;
use super::{finish, require_len, select_component, ComponentSelection, MethodConfig, MethodId};
use crate::error::{Error, Result};
use crate::signal::{corr, detrend, zscore};
use crate::trace::{BvpSignal, RgbTrace};

/// Independent component analysis via JADE on the detrended, z-scored
/// channels. The chosen component is signed to correlate positively with
/// the negated green channel.
///
/// The default selection is the component with the strongest in-band
/// spectral peak. JADE orders components by mixing energy, which on clean
/// skin traces puts the pulse first, so a fixed "second component" picks
/// noise; `FixedSecond` stays available through the config.
pub fn ica(trace: &RgbTrace, cfg: &MethodConfig) -> Result<BvpSignal> {
    require_len(trace, (5.0 * trace.fs()).ceil() as usize)?;
    let mut rows = Vec::with_capacity(3);
    for raw in trace.channels() {
        let z = zscore(&detrend(&raw)).map_err(|_| Error::RankDeficient { min_eigenvalue: 0.0 })?;
        rows.push(z);
    }
    let sep = jade(&rows)?;
    let k = select_component(
        &sep.sources,
        trace.fs(),
        cfg.band,
        cfg.selection_or(ComponentSelection::MaxSpectralPeak),
    );
    let neg_green: Vec<f64> = rows[1].iter().map(|v| -v).collect();
    let mut out = sep.sources[k].clone();
    if corr(&out, &neg_green) < 0.0 {
        out.iter_mut().for_each(|v| *v = -*v);
    }
    finish(out, trace.fs(), cfg, MethodId::Ica)
}
