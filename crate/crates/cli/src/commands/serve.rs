use biascase_review::ServeConfig;
use serde_json::json;

use super::{ensure_file, ensure_parent};
use crate::args::ReviewServeArgs;
use crate::error::{CliError, Result};
use crate::meta::CommandMeta;

pub async fn review_serve(a: ReviewServeArgs, meta: &mut CommandMeta) -> Result<()> {
    ensure_file(&a.testset)?;
    ensure_parent(&a.annotations)?;
    if let Some(dir) = &a.ui_dir {
        if !dir.is_dir() {
            return Err(CliError::usage(format!("UI directory {} does not exist", dir.display())));
        }
    }
    meta.input("testset", &a.testset)?;
    meta.settings(json!({"bind": a.bind.to_string(), "ui_dir": a.ui_dir}));
    meta.output("annotations", &a.annotations);
    eprintln!("review service on http://{} (Ctrl-C to stop)", a.bind);
    biascase_review::serve(ServeConfig {
        testset: a.testset,
        annotations: a.annotations.clone(),
        bind: a.bind,
        ui_dir: a.ui_dir,
    })
    .await?;
    meta.count("annotations", biascase_review::read_log(&a.annotations)?.len());
    Ok(())
}
