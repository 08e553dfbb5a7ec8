use anyhow::Result;
use annealgap::optimizers::{
    annealed_gd, euler_trajectory, gradient_flow, large_step_size, Trajectory, DEFAULT_SNAPSHOTS,
};

use super::selected;
use crate::args::{Format, Optimizer, TrajectoryArgs};
use crate::config::{Instance, Settings};
use crate::output::{num, OutputDir};
use crate::Status;

pub const DEFAULT_EULER_STEP: f64 = 1e-5;

pub fn file_name(opt: Optimizer, format: Format) -> String {
    let ext = if format == Format::Json { "json" } else { "csv" };
    format!("trajectory_{}.{ext}", opt.as_str())
}

pub(crate) fn record(inst: &Instance, settings: &Settings, opt: Optimizer) -> Result<Trajectory> {
    let snapshots = settings.snapshots.unwrap_or(DEFAULT_SNAPSHOTS);
    let (p, d0, eps) = (&inst.problem, &inst.delta0, inst.epsilon);
    Ok(match opt {
        Optimizer::Gf => gradient_flow(d0, p, eps, snapshots)?.trajectory,
        Optimizer::Anneal => {
            let eta = settings.eta.unwrap_or_else(|| large_step_size(p));
            annealed_gd(d0, p, eta, inst.k_steps, eps, snapshots)?.trajectory
        }
        Optimizer::Euler => {
            euler_trajectory(d0, p, settings.step.unwrap_or(DEFAULT_EULER_STEP), eps, snapshots)?
        }
    })
}

pub(crate) fn csv_header(dim: usize) -> Vec<String> {
    let mut h = vec!["phase".to_string(), "time".to_string()];
    h.extend((1..=dim).map(|i| format!("delta_{i}")));
    h.extend(["train_loss".to_string(), "test_loss".to_string()]);
    h
}

pub(crate) fn csv_rows(trajectory: &Trajectory) -> Vec<Vec<String>> {
    trajectory
        .points
        .iter()
        .map(|pt| {
            let mut row = vec![pt.phase.as_str().to_string(), num(pt.time)];
            row.extend(pt.delta.iter().copied().map(num));
            row.extend([num(pt.train_loss), num(pt.test_loss)]);
            row
        })
        .collect()
}

pub fn run(args: &TrajectoryArgs) -> Result<Status> {
    let mut settings = Settings::resolve(args.instance.instance.as_deref(), &args.instance.common)?;
    settings.overlay(&Settings { optimizer: args.optimizer, step: args.step, ..Settings::default() });
    let format = selected(settings.format, &[Format::Csv, Format::Json], "trajectory")?[0];
    let inst = settings.instance()?;
    let opt = settings.optimizer.unwrap_or(Optimizer::Gf);
    let trajectory = record(&inst, &settings, opt)?;

    let mut resolved = Settings {
        optimizer: Some(opt),
        format: Some(format),
        snapshots: Some(settings.snapshots.unwrap_or(DEFAULT_SNAPSHOTS)),
        out: Some(settings.out_dir()),
        ..settings.resolved_instance(&inst)
    };
    match opt {
        Optimizer::Anneal => resolved.eta = Some(settings.eta.unwrap_or_else(|| large_step_size(&inst.problem))),
        Optimizer::Euler => resolved.step = Some(settings.step.unwrap_or(DEFAULT_EULER_STEP)),
        Optimizer::Gf => {}
    }

    let mut out = OutputDir::create(&settings.out_dir())?;
    let name = file_name(opt, format);
    match format {
        Format::Json => out.write_json(&name, &trajectory.points)?,
        _ => out.write_csv(&name, &csv_header(inst.problem.dim()), &csv_rows(&trajectory))?,
    }
    out.finish("trajectory", &resolved, None)?;
    Ok(Status::Pass)
}
