use std::fmt::Write as _;
use std::path::Path;

use treespec::aomoto::{dos_curve, SolveOptions};
use treespec::bands::{band_masses, detect_bands, two_band_checks, MIN_CONVERGED_FRACTION};
use treespec::cover::{build_cover_ball, dos_moment};
use treespec::edges::spectral_edges;
use treespec::eigen::{histogram, sym_eigenvalues, SpectrumSample};
use treespec::lifts::sample_lift;
use treespec::product::{build_product_core, cayley_spec, parse_amalgam, parse_groups};
use treespec::{parse_graph, Amalgam, Graph};

use crate::{Command, Failure, GridArgs, Method, Outcome, SolverArgs};

/// Padding added on each side of the spectral bound for the default grid.
const GRID_PAD: f64 = 0.5;
const GRID_STEP: f64 = 0.01;

pub fn run(cmd: &Command) -> Result<Outcome, Failure> {
    match cmd {
        Command::Radius { graph, tol } => radius(&read_graph(graph)?, *tol),
        Command::Dos {
            graph,
            method,
            grid,
            solver,
            d,
            seed,
            trials,
            bins,
        } => {
            let g = read_graph(graph)?;
            match method {
                Method::Aomoto => dos_aomoto(&g, grid, solver),
                Method::Lift => dos_lift(&g, grid, *d, *seed, *trials, *bins),
            }
        }
        Command::Bands {
            graph,
            grid,
            solver,
            threshold,
        } => bands(&read_graph(graph)?, grid, solver, *threshold),
        Command::Cover {
            graph,
            root,
            radius,
        } => {
            let ball = build_cover_ball(&read_graph(graph)?, *root, *radius)?;
            Ok(done(ball.to_text()))
        }
        Command::Lift {
            graph,
            d,
            seed,
            eigs,
        } => {
            let lift = sample_lift(&read_graph(graph)?, *d, *seed)?;
            if !eigs {
                return Ok(done(lift.to_text()));
            }
            let s = sym_eigenvalues(&lift.dense_operator())?;
            Ok(done(
                s.eigenvalues
                    .iter()
                    .map(|x| format!("{x:.16e}\n"))
                    .collect(),
            ))
        }
        Command::Moments { graph, k } => {
            let g = read_graph(graph)?;
            let mut text = String::from("k,moment\n");
            for j in 0..=*k {
                let _ = writeln!(text, "{j},{:.16e}", dos_moment(&g, j)?);
            }
            Ok(done(text))
        }
        Command::Product { spec, depth } => {
            let spec: Amalgam = parse_amalgam(&read(spec)?)?;
            let core = build_product_core(&spec, *depth)?;
            for w in spec.loop_warnings().iter().chain(&core.warnings) {
                eprintln!("warning: {w}");
            }
            Ok(done(core.to_text(&spec)))
        }
        Command::Cayley { groups } => {
            Ok(done(cayley_spec(&parse_groups(&read(groups)?)?)?.to_text()))
        }
    }
}

fn done(text: String) -> Outcome {
    Outcome {
        text,
        uncertified: None,
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn read_graph(path: &Path) -> Result<Graph, Failure> {
    parse_graph(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// `max_u (|b_u| + Σ |a|)`, which bounds the spectrum.
fn spectral_bound(g: &Graph) -> f64 {
    g.b()
        .iter()
        .zip(g.abs_coefficient_sums())
        .map(|(b, s)| b.abs() + s)
        .fold(0.0, f64::max)
}

fn grid_of(g: &Graph, args: &GridArgs) -> (f64, f64, f64) {
    args.grid.unwrap_or_else(|| {
        let r = spectral_bound(g) + GRID_PAD;
        (-r, r, GRID_STEP)
    })
}

fn options(args: &SolverArgs) -> SolveOptions<f64> {
    SolveOptions {
        tol: args.tol,
        theta: args.theta,
        max_iter: args.max_iter,
        newton: !args.plain,
    }
}

fn radius(g: &Graph, tol: f64) -> Result<Outcome, Failure> {
    let e = spectral_edges(g, tol)?;
    let status = if e.certified() {
        "certified"
    } else {
        "uncertified"
    };
    let text = format!(
        "{:.8} {:.8} {status} {:.3e}\n",
        e.rho_l,
        e.rho_r,
        e.certificate_gap()
    );
    let uncertified = (!e.certified()).then(|| "spectral edge certificate not reached".to_string());
    Ok(Outcome { text, uncertified })
}

fn dos_aomoto(g: &Graph, grid: &GridArgs, solver: &SolverArgs) -> Result<Outcome, Failure> {
    let (lo, hi, step) = grid_of(g, grid);
    let curve = dos_curve(g, (lo, hi), step, grid.eta, &options(solver))?;
    let fraction = curve.converged_fraction();
    let uncertified = (fraction < MIN_CONVERGED_FRACTION)
        .then(|| format!("only {:.1}% of grid points converged", 100.0 * fraction));
    Ok(Outcome {
        text: curve.to_csv(),
        uncertified,
    })
}

fn dos_lift(
    g: &Graph,
    grid: &GridArgs,
    d: usize,
    seed: u64,
    trials: u64,
    bins: usize,
) -> Result<Outcome, Failure> {
    if trials == 0 {
        return Err(Failure::Usage("--trials must be at least 1".into()));
    }
    let (lo, hi, _) = grid_of(g, grid);
    let mut values = Vec::new();
    for t in 0..trials {
        let lift = sample_lift(g, d, seed.wrapping_add(t))?;
        values.extend(sym_eigenvalues(&lift.dense_operator())?.eigenvalues);
    }
    let h = histogram(&SpectrumSample::from_values(values), bins, Some((lo, hi)))?;
    Ok(done(h.to_csv()))
}

fn bands(
    g: &Graph,
    grid: &GridArgs,
    solver: &SolverArgs,
    threshold: f64,
) -> Result<Outcome, Failure> {
    let (lo, hi, step) = grid_of(g, grid);
    let curve = dos_curve(g, (lo, hi), step, grid.eta, &options(solver))?;
    let report = band_masses(&curve, &detect_bands(&curve, g.n(), threshold)?);
    if let Some(p) = two_band_checks(g).predicted_bands() {
        eprintln!("predicted bands: {p}, detected: {}", report.len());
    }
    let uncertified =
        (!report.quantization_ok).then(|| "band masses are not multiples of 1/n".to_string());
    Ok(Outcome {
        text: report.to_csv(),
        uncertified,
    })
}
