use anyhow::{bail, Result};
use annealgap::lemma::{verify_lemma, LemmaReport, LemmaSetup};
use annealgap::optimizers::DEFAULT_SNAPSHOTS;
use serde::Serialize;

use super::selected;
use crate::args::{Format, InstanceArgs};
use crate::config::Settings;
use crate::output::OutputDir;
use crate::Status;

pub const REPORT_FILE: &str = "lemma_report.json";

#[derive(Serialize)]
struct ReportFile<'a> {
    status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    instance: &'a Settings,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<&'a LemmaReport>,
}

pub fn run(args: &InstanceArgs) -> Result<Status> {
    let settings = Settings::resolve(args.instance.as_deref(), &args.common)?;
    settings.reject_eta("lemma")?;
    selected(settings.format, &[Format::Json], "lemma")?;
    let inst = settings.instance()?;
    let d = inst.problem.dim();
    let Some(k) = inst.k else { bail!("the instance must give k, the first index of the small set") };
    if !(2..=d).contains(&k) {
        bail!("k = {k} must lie in 2..={d}");
    }
    let snapshots = settings.snapshots.unwrap_or(DEFAULT_SNAPSHOTS);
    let resolved = Settings { snapshots: Some(snapshots), out: Some(settings.out_dir()), ..settings.resolved_instance(&inst) };

    let (status, reason, report) =
        match LemmaSetup::new(&inst.delta0, &inst.problem, k - 1, inst.alpha, inst.epsilon) {
            Err(e) if e.is_inapplicable() => (Status::Inapplicable, Some(e.to_string()), None),
            Err(e) => return Err(e.into()),
            Ok(setup) => {
                let report = verify_lemma(&inst.delta0, &inst.problem, &setup, inst.k_steps, snapshots)?;
                if !report.applicable() {
                    let reason = format!(
                        "hypotheses not met: condition1={} condition2={}",
                        report.condition1.holds, report.condition2.holds
                    );
                    (Status::Inapplicable, Some(reason), Some(report))
                } else if report.bounds_hold() {
                    (Status::Pass, None, Some(report))
                } else {
                    (Status::AssertionFailed, None, Some(report))
                }
            }
        };
    let label = match status {
        Status::Pass => "PASS",
        Status::AssertionFailed => "FAIL",
        _ => "SKIPPED",
    };
    if let Some(r) = &reason {
        eprintln!("lemma skipped: {r}");
    }

    let mut out = OutputDir::create(&settings.out_dir())?;
    out.write_json(REPORT_FILE, &ReportFile { status: label, reason, instance: &resolved, report: report.as_ref() })?;
    out.finish("lemma", &resolved, None)?;
    Ok(status)
}
