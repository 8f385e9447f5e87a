//! Performance measures: ambiguity functions and their sidelobes, estimation
//! and bit errors, and the communications/radar trade-off objective.

mod af;
mod metrics;
mod tradeoff;

pub use af::{ambiguity_function, peak_sidelobe_ratio, AfSurface};
pub use metrics::{ber, rmse};
pub use tradeoff::{
    check_rate_identity, crlb_proxy, dmse_eff, dmse_eff_scalar, jrc_objective, mmse_from_rate,
    ofdma_crlb_proxy, pmcw_crlb_proxy, tr_log2, TradeoffSpec,
};
