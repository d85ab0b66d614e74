//! Command-line front end: evaluates the normalization constant, bubble
//! energies, truncation-estimate sweeps, the Rayleigh gap, the identity
//! suite, and the full annulus solve, writing deterministic CSV/JSON
//! reports.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error,
//! 3 numerical failure.

mod cfgfile;
mod emit;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use cfgfile::ConfigFile;
use emit::{write_report, Csv, Json};
use fracoron::bubbles::Bubble;
use fracoron::discrete::{self, assemble_form, fmt_g17, minmax_solve, sign_split_check, MinMaxConfig};
use fracoron::domain::AnnulusDomain;
use fracoron::estimates::{
    self, deficit_sweep, excess_sweep, fit_scaling, rayleigh_gap, reference_rayleigh,
    z_samples_disk, ScalingReport,
};
use fracoron::geom::ORIGIN;
use fracoron::params::{c_ns, c_ns_reference, FracParams, QuadratureConfig};
use fracoron::quadrature::{gagliardo_sq, lp_integral, rayleigh};

#[derive(Parser)]
#[command(name = "fracoron", version, about = "Fractional annulus toolkit")]
struct Cli {
    /// Optional `key = value` configuration file (flags win).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for report files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Report format: csv or json (commands may emit both).
    #[arg(long, global = true)]
    format: Option<String>,
    /// Shorthand for `--format json`.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for sample-point generation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ParamArgs {
    /// Spatial dimension (1..=3).
    #[arg(long)]
    dim: Option<usize>,
    /// Fractional order in (0,1) with dim > 2s.
    #[arg(long)]
    s: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Normalization constant by quadrature, cross-checked in the report.
    Constant {
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Bubble invariants: seminorm, critical integral, Rayleigh quotient.
    Bubble {
        #[command(flatten)]
        params: ParamArgs,
        /// Bubble scales, comma separated.
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        /// Bubble center coordinates.
        #[arg(long, value_delimiter = ',')]
        z: Vec<f64>,
    },
    /// Energy-excess sweep over the truncation radius (first estimate).
    Prop1 {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        eps: Option<f64>,
        /// Number of dyadic sweep points.
        #[arg(long = "delta-sweep")]
        delta_sweep: Option<usize>,
        /// Bubble center coordinates.
        #[arg(long, value_delimiter = ',')]
        z: Vec<f64>,
    },
    /// Critical-norm deficit sweep (second estimate).
    Prop2 {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long = "delta-sweep")]
        delta_sweep: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        z: Vec<f64>,
    },
    /// Rayleigh-gap certificate over sampled centers.
    Gap {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        epsbar: Option<f64>,
        /// Number of centers in the unit ball.
        #[arg(long)]
        samples: Option<usize>,
        /// Margin factor of the admissible ceiling.
        #[arg(long)]
        varpi: Option<f64>,
        /// Sweep epsbar downward until the gap holds.
        #[arg(long)]
        select: bool,
    },
    /// Full annulus solve: min-max flow, window, degree, positivity.
    Solve {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        r1: Option<f64>,
        #[arg(long)]
        r2: Option<f64>,
        #[arg(long)]
        res: Option<usize>,
        #[arg(long)]
        epsbar: Option<f64>,
        /// Rings of the family mesh.
        #[arg(long)]
        rings: Option<usize>,
        /// Step budget per member.
        #[arg(long = "max-steps")]
        max_steps: Option<usize>,
        /// Projected-gradient tolerance.
        #[arg(long = "z-tol")]
        z_tol: Option<f64>,
    },
    /// Discrete identity suite (link, projection, sign-split, flow).
    Identities {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        res: Option<usize>,
    },
}

fn main() {
    // Thread cap before any parallel work.
    if let Ok(v) = std::env::var("FRACORON_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(), // exit code 2 on usage errors
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("fracoron: {e}");
            std::process::exit(3);
        }
    }
}

struct Ctx {
    cfg: ConfigFile,
    out_dir: PathBuf,
    format: String,
    seed: u64,
}

impl Ctx {
    fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn params(&self, p: &ParamArgs) -> fracoron::Result<FracParams> {
        let dim = self.cfg.resolve(p.dim, "dim", 2);
        let s = self.cfg.resolve(p.s, "s", 0.5);
        FracParams::new(dim, s)
    }

    fn quad(&self) -> QuadratureConfig {
        QuadratureConfig::standard()
    }
}

fn run(cli: Cli) -> fracoron::Result<i32> {
    let cfg = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let format = if cli.json {
        "json".to_string()
    } else {
        cfg.resolve(cli.format.clone(), "format", "json".to_string())
    };
    let ctx = Ctx {
        out_dir: cli
            .out_dir
            .clone()
            .or_else(|| cfg.get::<String>("output_dir").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(".")),
        seed: cfg.resolve(cli.seed, "seed", 0),
        cfg,
        format,
    };

    match cli.cmd {
        Cmd::Constant { params } => cmd_constant(&ctx, &params),
        Cmd::Bubble { params, eps, z } => cmd_bubble(&ctx, &params, &eps, &z),
        Cmd::Prop1 {
            params,
            eps,
            delta_sweep,
            z,
        } => cmd_prop(&ctx, &params, eps, delta_sweep, &z, true),
        Cmd::Prop2 {
            params,
            eps,
            delta_sweep,
            z,
        } => cmd_prop(&ctx, &params, eps, delta_sweep, &z, false),
        Cmd::Gap {
            params,
            epsbar,
            samples,
            varpi,
            select,
        } => cmd_gap(&ctx, &params, epsbar, samples, varpi, select),
        Cmd::Solve {
            params,
            r1,
            r2,
            res,
            epsbar,
            rings,
            max_steps,
            z_tol,
        } => cmd_solve(&ctx, &params, r1, r2, res, epsbar, rings, max_steps, z_tol),
        Cmd::Identities { params, res } => cmd_identities(&ctx, &params, res),
    }
}

fn cmd_constant(ctx: &Ctx, p: &ParamArgs) -> fracoron::Result<i32> {
    let params = ctx.params(p)?;
    // The constant is one-dimensional work; always use the tight settings.
    let q = QuadratureConfig::oracle();
    let c = c_ns(&params, &q)?;
    let reference = c_ns_reference(&params);
    let rel_err = (c - reference).abs() / reference;
    let json = Json::new()
        .num("C", c)
        .num("rel_err", rel_err)
        .num("reference", reference)
        .int("dim", params.dim() as i64)
        .num("s", params.s())
        .render();
    write_report(&ctx.out("constant.json"), &json)?;
    println!(
        "C({}, {}) = {} (rel_err {})",
        params.dim(),
        params.s(),
        fmt_g17(c),
        fmt_g17(rel_err)
    );
    Ok(0)
}

fn cmd_bubble(ctx: &Ctx, p: &ParamArgs, eps_list: &[f64], z_flat: &[f64]) -> fracoron::Result<i32> {
    let params = ctx.params(p)?;
    let q = ctx.quad();
    let eps_list: Vec<f64> = if eps_list.is_empty() {
        vec![1.0]
    } else {
        eps_list.to_vec()
    };
    let z = fracoron::geom::pt_from_slice(z_flat);
    let mut csv = Csv::new(
        "bubble",
        &["eps", "seminorm_sq", "critical_integral", "rayleigh"],
    );
    let mut quotients = Vec::new();
    for &eps in &eps_list {
        let field = Bubble::new(eps, z)?.field(&params);
        let gag = gagliardo_sq(&field, &params, &q)?;
        let lp = lp_integral(&field, params.critical_p(), &params, &q)?;
        let ray = rayleigh(&field, &params, &q)?;
        quotients.push(ray);
        csv.row(&[eps, gag, lp, ray]);
    }
    let spread = quotients.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - quotients.iter().cloned().fold(f64::INFINITY, f64::min);
    if ctx.format == "csv" {
        write_report(&ctx.out("bubble.csv"), &csv.render())?;
    } else {
        let json = Json::new()
            .num_array("eps", &eps_list)
            .num_array("rayleigh", &quotients)
            .num("spread", spread)
            .render();
        write_report(&ctx.out("bubble.json"), &json)?;
    }
    println!("bubble quotients spread = {}", fmt_g17(spread));
    Ok(0)
}

fn scaling_json(report: &ScalingReport) -> Json {
    Json::new()
        .num("fitted_slope", report.fitted_slope)
        .num("r_squared", report.r_squared)
        .num("baseline", report.baseline)
        .pair_array("sweep", &report.sweep)
}

fn cmd_prop(
    ctx: &Ctx,
    p: &ParamArgs,
    eps: Option<f64>,
    delta_sweep: Option<usize>,
    z_flat: &[f64],
    excess: bool,
) -> fracoron::Result<i32> {
    let params = ctx.params(p)?;
    let q = ctx.quad();
    let eps = ctx.cfg.resolve(eps, "eps", 0.05);
    let count = ctx.cfg.resolve(delta_sweep, "delta_sweep", 4);
    let z = fracoron::geom::pt_from_slice(z_flat);
    let name = if excess { "prop1" } else { "prop2" };
    let col = if excess { "excess" } else { "deficit" };

    let (baseline, sweep) = if excess {
        excess_sweep(eps, z, count, &params, &q)?
    } else {
        deficit_sweep(eps, z, count, &params, &q)?
    };
    let mut csv = Csv::new(name, &["delta", col]);
    for (d, v) in &sweep {
        csv.row(&[*d, *v]);
    }
    write_report(&ctx.out(&format!("{name}.csv")), &csv.render())?;

    // Fit over baseline + sweep with plateau subtraction.
    let mut all = vec![baseline];
    all.extend_from_slice(&sweep);
    let fit = fit_scaling(&all, true)?;
    let json = scaling_json(&fit)
        .num("eps", eps)
        .num("baseline_delta", baseline.0)
        .render();
    write_report(&ctx.out(&format!("{name}_fit.json")), &json)?;
    println!(
        "{name}: slope = {} r2 = {}",
        fmt_g17(fit.fitted_slope),
        fmt_g17(fit.r_squared)
    );
    Ok(0)
}

fn cmd_gap(
    ctx: &Ctx,
    p: &ParamArgs,
    epsbar: Option<f64>,
    samples: Option<usize>,
    varpi: Option<f64>,
    select: bool,
) -> fracoron::Result<i32> {
    let params = ctx.params(p)?;
    let q = ctx.quad();
    let eps_bar = ctx.cfg.resolve(epsbar, "epsbar", 0.05);
    let n = ctx.cfg.resolve(samples, "samples", 16);
    let varpi = ctx.cfg.resolve(varpi, "varpi", estimates::DEFAULT_VARPI);
    let zs = z_samples_disk(n, ctx.seed);
    let s_ref = reference_rayleigh(&params)?;
    let report = if select {
        estimates::select_eps_bar(&zs, varpi, s_ref, &params, &q, 4)?
    } else {
        rayleigh_gap(eps_bar, &zs, varpi, s_ref, &params, &q)?
    };
    let quotient_list: Vec<f64> = report.quotients.iter().map(|(_, r)| *r).collect();
    let json = Json::new()
        .num("eps_bar", report.eps_bar)
        .num("varpi", report.varpi)
        .num("s_ref", report.s_ref)
        .num("bound", report.bound)
        .num("max_quotient", report.max_quotient)
        .bool("passes", report.passes)
        .int("samples", quotient_list.len() as i64)
        .num_array("quotients", &quotient_list)
        .render();
    write_report(&ctx.out("gap.json"), &json)?;
    println!(
        "gap: max quotient {} vs bound {} -> {}",
        fmt_g17(report.max_quotient),
        fmt_g17(report.bound),
        if report.passes { "pass" } else { "FAIL" }
    );
    Ok(if report.passes { 0 } else { 1 })
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    ctx: &Ctx,
    p: &ParamArgs,
    r1: Option<f64>,
    r2: Option<f64>,
    res: Option<usize>,
    epsbar: Option<f64>,
    rings: Option<usize>,
    max_steps: Option<usize>,
    z_tol: Option<f64>,
) -> fracoron::Result<i32> {
    let params = ctx.params(p)?;
    let r1 = ctx.cfg.resolve(r1, "r1", 0.1);
    let r2 = ctx.cfg.resolve(r2, "r2", 4.0);
    let res = ctx.cfg.resolve(res, "res", 48);
    let eps_bar = ctx.cfg.resolve(epsbar, "epsbar", 0.05);
    let domain = AnnulusDomain::new(params.dim(), ORIGIN, r1, r2)?;
    let mut cfg = MinMaxConfig::default();
    cfg.family_rings = ctx.cfg.resolve(rings, "rings", cfg.family_rings);
    cfg.max_steps = ctx.cfg.resolve(max_steps, "max_steps", cfg.max_steps);
    cfg.z_tol = ctx.cfg.resolve(z_tol, "z_tol", cfg.z_tol);

    let (report, solution) = minmax_solve(&domain, res, eps_bar, &params, &cfg)?;

    let mut dump = Vec::new();
    discrete::write_field(&mut dump, &solution, &params).map_err(|e| fracoron::Error::Io {
        path: ctx.out("solve_field.txt").display().to_string(),
        source: e,
    })?;
    write_report(
        &ctx.out("solve_field.txt"),
        &String::from_utf8(dump).expect("dump is ascii"),
    )?;

    let json = Json::new()
        .num("level_c", report.level_c)
        .num("s_h", report.s_h)
        .num("s_h_raw", report.s_h_raw)
        .bool("window_ok", report.window_ok)
        .opt_int("degree", report.degree)
        .bool("positivity_ok", report.positivity_ok)
        .num("residual", report.residual)
        .num("residual_bound", report.residual_bound)
        .bool("residual_ok", report.residual_ok)
        .num("scale_factor", report.scale_factor)
        .opt_int("initial_degree", report.initial_degree)
        .int("argmax_member", report.argmax_member as i64)
        .int("argmax_steps", report.argmax_steps as i64)
        .bool("any_stagnation", report.any_stagnation)
        .num_array("member_levels", &report.member_levels)
        .num_array("boundary_levels", &report.boundary_levels)
        .pair_array("s_h_sweep", &report.s_h_sweep)
        .render();
    write_report(&ctx.out("solve_report.json"), &json)?;
    println!(
        "solve: c = {} s_h = {} window_ok = {} positivity_ok = {} degree = {:?}",
        fmt_g17(report.level_c),
        fmt_g17(report.s_h),
        report.window_ok,
        report.positivity_ok,
        report.degree
    );
    Ok(if report.window_ok && report.positivity_ok { 0 } else { 1 })
}

fn cmd_identities(ctx: &Ctx, p: &ParamArgs, res: Option<usize>) -> fracoron::Result<i32> {
    let params = ctx.params(p)?;
    let res = ctx.cfg.resolve(res, "res", 16);
    let domain = AnnulusDomain::new(params.dim(), ORIGIN, 0.3, 2.0)?;
    let form = assemble_form(&domain, res, &params)?;
    let n = form.dof();
    let seed = ctx.seed;

    // Deterministic pseudo-random vector derived from the seed.
    let vector = |k: u64| -> Vec<f64> {
        (0..n)
            .map(|i|

                ((i as u64).wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(seed ^ k) as f64
                    * 5.421e-20)
                    .sin()
                    + 0.15)
            .collect()
    };

    // Link identity.
    let mut v = vector(1);
    let nv = discrete::functional_n(&form, &v);
    for x in &mut v {
        *x /= nv.sqrt();
    }
    let lambda = discrete::link_lambda(&form, &v)?;
    let lv: Vec<f64> = v.iter().map(|x| lambda * x).collect();
    let gi = discrete::grad_i(&form, &lv);
    let gr = discrete::grad_r(&form, &v)?;
    let grad_scale = gr.iter().map(|g| g.abs()).fold(1.0f64, f64::max);
    let link_err = gi
        .iter()
        .zip(&gr)
        .map(|(a, b)| (a - 0.5 * lambda * b).abs())
        .fold(0.0f64, f64::max)
        / grad_scale;

    // Projection identities.
    let (y, z) = discrete::tangent_project(&form, &v)?;
    let gn = discrete::grad_n(&form, &v)?;
    let ortho_err = discrete::dot_h(&form, &z, &gn).abs()
        / (discrete::norm_h(&form, &gn) * discrete::norm_h(&form, &z)).max(1e-300);
    let z2 = discrete::dot_h(&form, &z, &z);
    let gr2 = discrete::dot_h(&form, &gr, &gr);
    let along = discrete::dot_h(&form, &gr, &y);
    let pythagoras_err = (z2 - (gr2 - along * along)).abs() / gr2.max(1e-300);

    // Sign-split identity on a sign-changing sample.
    let g = fracoron::domain::sample_into_grid(&domain, res, |x| {
        (3.0 * x[0] + seed as f64 * 0.01).sin() + 0.3 * x[1]
    })?;
    let (lhs, rhs) = sign_split_check(&g, &form);
    let sign_split_err = (lhs - rhs).abs() / lhs.abs().max(1e-300);

    // Flow conservation and monotonicity over a short run.
    let cfg = discrete::FlowConfig::default();
    let mut state = discrete::flow_state(&form, vector(2), &cfg)?;
    let mut max_drift: f64 = 0.0;
    let mut monotone = true;
    let mut prev = state.level;
    for _ in 0..25 {
        state = match discrete::flow_step(&state, &form, &cfg) {
            Ok(s) => s,
            Err(fracoron::Error::Stagnation { .. }) => break,
            Err(e) => return Err(e),
        };
        max_drift = max_drift.max((discrete::functional_n(&form, &state.u) - 1.0).abs());
        monotone &= state.level <= prev + 1e-12;
        prev = state.level;
    }

    let all_ok = link_err <= 1e-10
        && ortho_err <= 1e-12
        && pythagoras_err <= 1e-12
        && sign_split_err <= 1e-10
        && max_drift <= 1e-10
        && monotone;
    let json = Json::new()
        .num("link_err", link_err)
        .num("orthogonality_err", ortho_err)
        .num("pythagoras_err", pythagoras_err)
        .num("sign_split_err", sign_split_err)
        .num("constraint_drift", max_drift)
        .bool("monotone", monotone)
        .bool("all_ok", all_ok)
        .render();
    write_report(&ctx.out("identities.json"), &json)?;
    println!("identities: all_ok = {all_ok}");
    Ok(if all_ok { 0 } else { 1 })
}
