use super::{finish, require_len, MethodConfig, MethodId};
use crate::error::Result;
use crate::signal::detrend;
use crate::trace::{BvpSignal, RgbTrace};

/// Detrended, band-passed green channel.
pub fn green(trace: &RgbTrace, cfg: &MethodConfig) -> Result<BvpSignal> {
    require_len(trace, 2)?;
    let g = detrend(&trace.channel(1));
    finish(g, trace.fs(), cfg, MethodId::Green)
}
