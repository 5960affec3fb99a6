use clap::{Args, ValueEnum};
use fkqc::verify::{run_suite, Suite};

use crate::failure::{Failure, NUMERICAL};
use crate::output::json_bytes;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Fibword,
    Chain,
    Potential,
    Solver,
    Minimal,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = SuiteArg::All)]
    suite: SuiteArg,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
}

pub fn run(args: &VerifyArgs) -> Result<(), Failure> {
    let suite = match args.suite {
        SuiteArg::Fibword => Suite::Fibword,
        SuiteArg::Chain => Suite::Chain,
        SuiteArg::Potential => Suite::Potential,
        SuiteArg::Solver => Suite::Solver,
        SuiteArg::Minimal => Suite::Minimal,
        SuiteArg::All => Suite::All,
    };
    let report = run_suite(suite);
    match args.format {
        ReportFormat::Text => {
            for c in &report.checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                println!("{tag} {}: {} ({})", c.suite, c.name, c.detail);
            }
            println!("{} passed, {} failed", report.passed(), report.failed());
        }
        ReportFormat::Json => {
            let bytes = json_bytes(&serde_json::json!({
                "suite": suite,
                "passed": report.passed(),
                "failed": report.failed(),
                "checks": report.checks,
            }))?;
            print!("{}", String::from_utf8_lossy(&bytes));
        }
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::Reported(NUMERICAL))
    }
}
