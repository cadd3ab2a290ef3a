//! WiFi channel state information (CSI) motion sensing without the radio.
//!
//! Packets in the 802.11n CSI tool layout are decoded by [`wire`], carried
//! over TCP by [`transport`], reduced to amplitude and windowed variance by
//! [`dsp`] and persisted by [`store`]. [`synth`] generates seeded packet
//! streams, activity datasets and periodic traces for testing. [`anomaly`]
//! learns a k-means shape library and flags poorly reconstructed stretches;
//! [`classify`] recognizes six activities with a decision tree, naive Bayes
//! or an LSTM. [`cli::run_cli`] ties them together behind one command.

pub mod anomaly;
pub mod classify;
pub mod cli;
pub mod dsp;
pub mod pipeline;
pub mod store;
pub mod synth;
pub mod transport;
pub mod wire;
