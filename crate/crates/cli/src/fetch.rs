use std::fs;
use std::path::Path;
use std::process::ExitCode;

use advplay_core::mnist::{gunzip, locate, read_maybe_gz, sha256_hex, verify_digest, MNIST_FILES};
use serde_json::json;

use crate::commands::{print_json, CliError, CliResult};
use crate::FetchArgs;

pub const DEFAULT_BASE_URL: &str = "https://ossci-datasets.s3.amazonaws.com/mnist";

fn download(url: &str) -> Result<Vec<u8>, CliError> {
    let mut resp = ureq::get(url)
        .call()
        .map_err(|e| CliError::Download(format!("{url}: {e}")))?;
    let bytes = resp
        .body_mut()
        .with_config()
        .limit(64 * 1024 * 1024)
        .read_to_vec()
        .map_err(|e| CliError::Download(format!("{url}: {e}")))?;
    Ok(gunzip(&bytes)?)
}

fn already_valid(path: &Path, name: &str) -> bool {
    fs::read(path).is_ok_and(|bytes| verify_digest(name, &bytes).is_ok())
}

pub fn run(a: FetchArgs) -> CliResult {
    fs::create_dir_all(&a.dir)?;
    let mut report = Vec::new();
    for file in &MNIST_FILES {
        let dest = a.dir.join(file.name);
        let status = if already_valid(&dest, file.name) {
            "present"
        } else {
            let bytes = match &a.from {
                Some(src) => read_maybe_gz(&locate(src, file.name)?)?,
                None => {
                    let url = format!("{}/{}.gz", a.base_url.trim_end_matches('/'), file.name);
                    eprintln!("downloading {url}");
                    download(&url)?
                }
            };
            verify_digest(file.name, &bytes)?;
            let tmp = dest.with_extension("part");
            fs::write(&tmp, &bytes)?;
            fs::rename(&tmp, &dest)?;
            "written"
        };
        eprintln!("{}: {status}", dest.display());
        report.push(json!({
            "name": file.name,
            "path": dest,
            "sha256": sha256_hex(&fs::read(&dest)?),
            "status": status,
        }));
    }
    if a.json {
        print_json(&json!({ "files": report }));
    } else {
        println!("MNIST files verified in {}", a.dir.display());
    }
    Ok(ExitCode::SUCCESS)
}
