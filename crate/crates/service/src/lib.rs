//! Live simulation and assistance loop behind a WebSocket/HTTP boundary.
//!
//! Three loops run per server: control at the simulation rate on its own
//! thread, perception on a second thread, and state broadcast at 30 Hz to
//! every connected socket. Commands land in a latest-wins mailbox per arm.

mod server;
pub mod session;
pub mod wire;

pub use server::{serve, spawn, ServerHandle, ServiceConfig, ServiceError};
pub use session::{Session, VelocityEstimator, DISCONNECT_DECAY, MAX_HUMAN_SPEED};
pub use wire::{Arm, ArmState, ClientMessage, LiveMetrics, ServerMessage, StateUpdate, WirePose};
