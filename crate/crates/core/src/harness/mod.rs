//! Profiles, transports, batch orchestration, reports and reproducible
//! manifests around the protocol simulator.

mod manifest;
mod profiles;
mod reports;
mod runner;
mod transport;

pub use manifest::{
    content_digest, execute, load_manifest, replay, Execution, Job, Mismatch, ReplayReport, RunManifest, MANIFEST_FILE,
};
pub use profiles::{ConfigError, Profile, ProfileSet, PROFILE_ENV, PROFILE_FILE};
pub use reports::{
    claims_report, entropy_run, ClaimsConfig, ClaimsReport, EntropyConfig, EntropyRecord, EntropyReport, KernelClaim,
    PosteriorClaim, EXCEED_LIMIT, LOW_FREQUENCY_TOLERANCE, MAX_FRACTION_BELOW, MEAN_GAP_TOLERANCE,
};
pub use runner::{
    check_supported, run_batch, verify_over_stream, OutputStats, RunConfig, RunError, RunOutcome, SessionEvent,
    Summary, Transport,
};
pub use transport::{configure, serve_prover, StreamLink, DEFAULT_TIMEOUT};
