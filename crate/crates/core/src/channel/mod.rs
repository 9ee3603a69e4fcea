//! Vehicle geometry, stochastic link gains and SINR for V2I/V2V links.
//!
//! Every vehicle `i < I` is an embodied agent. V2I link `w` is transmitted
//! by vehicle `w mod I` to the base station. V2V pair `q` is transmitted by
//! vehicle `q mod I` to a dedicated receiver vehicle that follows it in the
//! same lane, so receivers never carry V2I traffic of their own.

mod gains;
mod geometry;
mod pathloss;
mod sinr;
mod trace;

pub use gains::{sample_fading, sample_gains, sample_shadowing, ChannelState, Fading, LinkGain, Shadowing};
pub use geometry::{update_mobility, Topology};
pub use pathloss::{path_loss, LinkKind, PathLossProfile};
pub use sinr::{sinr_v2i, sinr_v2v, TxPlan};
pub use trace::ChannelTraceWriter;
