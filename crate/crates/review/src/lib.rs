//! Review service: serves active test cases to annotators, records their
//! verdicts in an append-only log and reports progress and agreement.
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/api/cases?status=pending&annotator=X` | cases X has not judged |
//! | GET | `/api/cases/{id}` | one case with all its annotations |
//! | POST | `/api/cases/{id}/annotation` | `{annotator, verdict, reason?, note?}`; 201, 404, 409 or 422 |
//! | GET | `/api/progress` | per-annotator sessions |
//! | GET | `/api/agreement` | percent agreement on doubly judged cases |

pub mod api;
pub mod error;
pub mod store;
pub mod state;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

pub use api::router;
pub use error::{ReviewError, Result};
pub use store::{read_log, AnnotationLog};
pub use state::{
    agreement_of, Agreement, AnnotationInput, CaseFilter, CaseView, PairAgreement, Progress,
    ReviewSession, ReviewState,
};

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub testset: PathBuf,
    pub annotations: PathBuf,
    pub bind: SocketAddr,
    pub ui_dir: Option<PathBuf>,
}

/// Binds and serves until the process receives Ctrl-C.
pub async fn serve(config: ServeConfig) -> Result<()> {
    let state = Arc::new(ReviewState::open(&config.testset, &config.annotations)?);
    let listener = tokio::net::TcpListener::bind(config.bind).await?;
    log::info!(
        "serving {} active case(s) from {} on http://{}",
        state.testset().active().count(),
        config.testset.display(),
        listener.local_addr()?
    );
    axum::serve(listener, router(state, config.ui_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
