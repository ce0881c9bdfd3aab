//! Anomaly labeling for charging-infrastructure network traffic.
//!
//! The pipeline, end to end: aggregate packets into bidirectional flows
//! ([`flow`]), load and normalize flow tables ([`ingest`]), encode rows as
//! numeric vectors and standardize them ([`features`]), train an
//! autoencoder on benign flows only ([`autoencoder`]), profile its
//! reconstruction errors ([`profile`]), calibrate interval decision
//! boundaries over those errors ([`boundary`]), pick a bottleneck width by
//! sweeping ([`sweep`]), and audit an external detector's verdicts against
//! the resulting labels ([`audit`]).
//!
//! Trained models persist as one JSON artifact ([`model`]) that reproduces
//! scores bit for bit, and every random choice flows from explicit seeds
//! ([`seed`]), so identical inputs give identical outputs.

pub mod audit;
pub mod autoencoder;
pub mod boundary;
pub mod error;
pub mod features;
pub mod flow;
pub mod ingest;
pub mod model;
pub mod profile;
pub mod seed;
pub mod sweep;
mod tabular;

pub use audit::{audit, AuditReport, IdsDecision, IdsDecisionLog};
pub use autoencoder::{
    adam_step, adam_update, backward, forward, init_params, profile_errors, reconstruction_error,
    train, AdamState, Architecture, AutoencoderParams, LayerParams, StopReason, TrainConfig,
    TrainingHistory, DEFAULT_HIDDEN_DIM, DEFAULT_LATENT_DIM,
};
pub use boundary::{
    calibrate_naive, calibrate_refined, evaluate, evaluate_outcomes, load_labels, write_labels,
    BoundaryKind, BoundaryParams, DecisionBoundary, Interval, LabelOutcome, MetricsReport, Verdict,
};
pub use error::{Error, Result};
pub use features::{
    apply_encoding, fit_encoding, fit_standardizer, split_indices, split_train_test, standardize,
    CategoricalColumn, EncodingSpec, FeatureMatrix, SplitConfig, StandardizerParams,
};
pub use flow::{
    aggregate_packets, AggregationOutcome, ChargingState, DirectionStats, FeatureValue, FlowClass,
    FlowKey, FlowRecord, LabeledFlow, PacketRecord, ScenarioLabel, TcpFlagCounts,
    DEFAULT_IDLE_TIMEOUT,
};
pub use ingest::{
    drop_columns, load_flow_table, load_flows, load_packet_table, write_flow_table,
    DatasetManifest, DropReport, FileLoadStats, LoadReport, ManifestEntry, Testbed, CORE_COLUMNS,
    DEFAULT_DROP_COLUMNS,
};
pub use model::{ModelFile, ModelMetadata};
pub use profile::{load_profile, write_profile, ErrorProfile, ProfileEntry, TagSummary};
pub use seed::{derive_seed, seeded_rng};
pub use sweep::{
    load_sweep, rolling_average, run_sweep, write_sweep, DimSummary, SweepConfig, SweepReport,
    TrialResult,
};
