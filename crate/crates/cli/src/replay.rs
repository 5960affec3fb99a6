use std::ffi::OsString;
use std::path::PathBuf;

use clap::Args;

use crate::failure::{Failure, NUMERICAL};
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// A `manifest.json` written by `equilibrium` or `minimal`.
    manifest: PathBuf,
    /// Where the re-run writes its files; defaults to `<manifest dir>/replay`.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// `argv` with any `--out` value replaced by `dir`.
fn redirect(argv: &[String], dir: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(argv.len() + 2);
    let mut skip = false;
    for a in argv {
        if skip {
            skip = false;
        } else if a == "--out" {
            skip = true;
        } else if !a.starts_with("--out=") {
            out.push(a.clone());
        }
    }
    out.push("--out".into());
    out.push(dir.into());
    out
}

pub fn run(args: &ReplayArgs) -> Result<(), Failure> {
    let manifest = RunManifest::read(&args.manifest)?;
    if !matches!(manifest.command.as_str(), "equilibrium" | "minimal") {
        return Err(Failure::Validation(format!(
            "cannot replay command '{}'",
            manifest.command
        )));
    }
    if manifest.version != env!("CARGO_PKG_VERSION") {
        eprintln!("warning: manifest written by version {}", manifest.version);
    }
    let src = args.manifest.parent().map(PathBuf::from).unwrap_or_default();
    let dst = args.out.clone().unwrap_or_else(|| src.join("replay"));
    let dst_str = dst
        .to_str()
        .ok_or_else(|| Failure::Validation("output path is not UTF-8".into()))?;
    let mut argv: Vec<OsString> = vec!["fkqc".into()];
    argv.extend(redirect(&manifest.argv, dst_str).into_iter().map(OsString::from));
    crate::run(argv)?;
    let mut mismatched = Vec::new();
    for name in &manifest.outputs {
        let a = std::fs::read(src.join(name)).map_err(|e| Failure::io(src.join(name).display(), e))?;
        let b = std::fs::read(dst.join(name)).map_err(|e| Failure::io(dst.join(name).display(), e))?;
        if a == b {
            println!("identical {name}");
        } else {
            println!("DIFFERENT {name}");
            mismatched.push(name.clone());
        }
    }
    if mismatched.is_empty() {
        Ok(())
    } else {
        eprintln!("error: {} output(s) differ", mismatched.len());
        Err(Failure::Reported(NUMERICAL))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn redirect_replaces_out() {
        let argv: Vec<String> = ["minimal", "--level", "2", "--out", "a", "--seed", "3"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(
            redirect(&argv, "b"),
            ["minimal", "--level", "2", "--seed", "3", "--out", "b"]
        );
        let argv = vec!["minimal".to_string(), "--out=x".to_string()];
        assert_eq!(redirect(&argv, "y"), ["minimal", "--out", "y"]);
    }
}
