use anyhow::{bail, ensure, Result};
use annealgap::optimizers::{large_step_size, Trajectory, DEFAULT_SNAPSHOTS};

use super::selected;
use super::trajectory::record;
use crate::args::{Format, LandscapeArgs, Optimizer};
use crate::config::{Instance, Settings};
use crate::output::{num, OutputDir};
use crate::svg::{Svg, View};
use crate::Status;

pub const GRID_FILE: &str = "landscape_grid.csv";
pub const SVG_FILE: &str = "landscape.svg";
pub const DEFAULT_GRID: usize = 101;
const LEVELS: usize = 12;
const DOT_RADIUS: f64 = 4.0;

/// `count` values spaced geometrically from `lo` to `hi`, excluding `lo`.
fn geometric_levels(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if !(hi > lo && lo > 0.0) {
        return Vec::new();
    }
    let ratio = (hi / lo).powf(1.0 / count as f64);
    (1..=count).map(|j| lo * ratio.powi(j as i32)).collect()
}

fn to_beta(trajectory: &Trajectory, beta_star: &[f64]) -> Vec<[f64; 2]> {
    trajectory.points.iter().map(|p| [beta_star[0] + p.delta[0], beta_star[1] + p.delta[1]]).collect()
}

pub fn run(args: &LandscapeArgs) -> Result<Status> {
    let mut settings = Settings::resolve(args.instance.instance.as_deref(), &args.instance.common)?;
    settings.overlay(&Settings { grid: args.grid, extent: args.extent, ..Settings::default() });
    let formats = selected(settings.format, &[Format::Csv, Format::Svg], "landscape")?;
    let inst = settings.instance()?;
    if inst.problem.dim() != 2 {
        bail!("landscape needs a two-dimensional instance, got dimension {}", inst.problem.dim());
    }
    let grid = settings.grid.unwrap_or(DEFAULT_GRID);
    ensure!(grid >= 2, "grid must be at least 2");
    let extent = match settings.extent {
        Some(e) => e,
        None => {
            let m = inst.delta0.iter().fold(0.0f64, |m, d| m.max(d.abs()));
            if m > 0.0 { 1.1 * m } else { 1.0 }
        }
    };
    ensure!(extent > 0.0 && extent.is_finite(), "extent must be positive and finite");
    let eta = settings.eta.unwrap_or_else(|| large_step_size(&inst.problem));

    let mut out = OutputDir::create(&settings.out_dir())?;
    if formats.contains(&Format::Csv) {
        write_grid(&mut out, &inst, grid, extent)?;
    }
    if formats.contains(&Format::Svg) {
        let gf = record(&inst, &settings, Optimizer::Gf)?;
        let anneal = record(&inst, &Settings { eta: Some(eta), ..settings.clone() }, Optimizer::Anneal)?;
        out.write_text(SVG_FILE, &render(&inst, extent, &gf, &anneal))?;
    }

    let resolved = Settings {
        grid: Some(grid),
        extent: Some(extent),
        eta: Some(eta),
        snapshots: Some(settings.snapshots.unwrap_or(DEFAULT_SNAPSHOTS)),
        out: Some(settings.out_dir()),
        ..settings.resolved_instance(&inst)
    };
    out.finish("landscape", &resolved, None)?;
    Ok(Status::Pass)
}

fn write_grid(out: &mut OutputDir, inst: &Instance, grid: usize, extent: f64) -> Result<()> {
    let beta_star = inst.beta_star();
    let axis = |c: f64, i: usize| c - extent + 2.0 * extent * i as f64 / (grid - 1) as f64;
    let mut rows = Vec::with_capacity(grid * grid);
    for j in 0..grid {
        let b2 = axis(beta_star[1], j);
        for i in 0..grid {
            let b1 = axis(beta_star[0], i);
            let delta = [b1 - beta_star[0], b2 - beta_star[1]];
            rows.push(vec![
                num(b1),
                num(b2),
                num(inst.problem.train_loss_of(&delta)?),
                num(inst.problem.population_loss_of(&delta)?),
            ]);
        }
    }
    let header = ["beta_1", "beta_2", "train_loss", "test_loss"].map(String::from);
    out.write_csv(GRID_FILE, &header, &rows)
}

/// Three panels: train levels with the flow path, train levels with the
/// annealed path, test levels with both endpoints.
fn render(inst: &Instance, extent: f64, gf: &Trajectory, anneal: &Trajectory) -> String {
    let p = &inst.problem;
    let star = inst.beta_star();
    let center = [star[0], star[1]];
    let view = View::centered(center, extent);
    let gamma = [p.gamma()[0], p.gamma()[1]];
    let lambda = [p.lambda()[0], p.lambda()[1]];
    let eps = inst.epsilon;
    let corner = |w: [f64; 2]| extent * extent * (w[0] + w[1]);

    let gf_pts = to_beta(gf, &star);
    let anneal_pts = to_beta(anneal, &star);
    let gf_end = *gf_pts.last().expect("trajectory has an initial point");
    let anneal_end = *anneal_pts.last().expect("trajectory has an initial point");
    let test_of = |b: [f64; 2]| lambda[0] * (b[0] - star[0]).powi(2) + lambda[1] * (b[1] - star[1]).powi(2);

    let mut svg = Svg::new();
    for (title, pts, class, tag) in [
        ("train loss, gradient flow", &gf_pts, "gf", "gf"),
        ("train loss, annealed descent", &anneal_pts, "anneal", "anneal"),
    ] {
        svg.begin_panel(title);
        for c in geometric_levels(eps, corner(gamma), LEVELS) {
            svg.level_set(&view, center, gamma, c, "level", None);
        }
        svg.level_set(&view, center, gamma, eps, "eps", Some(&format!("train-eps-{tag}")));
        svg.polyline(&view, pts, class, &format!("{tag}-path"));
        svg.dot(&view, center, 3.0, "star", &format!("beta-star-{tag}"));
        svg.dot(&view, *pts.last().unwrap(), DOT_RADIUS, &format!("{class}-dot"), &format!("{tag}-end"));
    }

    svg.begin_panel("test loss");
    let (gf_test, anneal_test) = (test_of(gf_end), test_of(anneal_end));
    let lowest = gf_test.min(anneal_test);
    if lowest > 0.0 {
        svg.level_set(&view, center, lambda, lowest, "level", None);
    }
    for c in geometric_levels(lowest.max(eps * 1e-3), corner(lambda), LEVELS) {
        svg.level_set(&view, center, lambda, c, "level", None);
    }
    svg.level_set(&view, center, gamma, eps, "ghost", Some("train-eps-test"));
    svg.level_set(&view, center, lambda, gf_test, "gf", Some("test-level-gf"));
    svg.level_set(&view, center, lambda, anneal_test, "anneal", Some("test-level-anneal"));
    svg.dot(&view, center, 3.0, "star", "beta-star-test");
    svg.dot(&view, gf_end, DOT_RADIUS, "gf-dot", "gf-end-test");
    svg.dot(&view, anneal_end, DOT_RADIUS, "anneal-dot", "anneal-end-test");
    svg.finish()
}
