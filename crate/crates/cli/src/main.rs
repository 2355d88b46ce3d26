use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;
use serde_json::json;

use mahlerlab::body::builders;
use mahlerlab::body::io::{read_body, read_vpolytope, Body, BodyFile};
use mahlerlab::body::{PolyhedralCone, VPolytope};
use mahlerlab::cone_transform::{
    convolution_upper_check, floating_contains, floating_oracle, j_functional, kappa_float,
    laplace_eval, legendre, NEWTON_TOL,
};
use mahlerlab::join::{join_mahler_check, join_polar_check};
use mahlerlab::kuperberg::{build_counterexample, x1_second_moments};
use mahlerlab::models::{
    lorentz_cn, psd_cn, psd_cn_recursive, psd_slice_oracle, psd_slice_polar_oracle,
    verify_ball_duality, verify_homogeneous_duality, AnalyticCone,
};
use mahlerlab::slicing::slicing_pipeline;
use mahlerlab::verify::{run_suite, Config, Scale, Status, Suite};

#[derive(Parser)]
#[command(
    name = "mahlerlab",
    version,
    about = "Mahler volumes, isotropic constants and cone transforms"
)]
struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = ScaleArg::Quick)]
    scale: ScaleArg,
    #[arg(long, global = true, value_enum, default_value_t = Out::Json)]
    out: Out,
    /// Replace every positive tolerance of the verification checks.
    #[arg(long, global = true)]
    tol_override: Option<f64>,
    /// Include wall times in reports.
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Quick,
    Full,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Out {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Transforms of a polyhedral cone at a point.
    Cone {
        #[arg(value_enum)]
        op: ConeOp,
        /// Cone file (`cone`), or a polytope file taken as the cone over it.
        #[arg(long)]
        cone: PathBuf,
        /// Comma separated coordinates.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
    },
    /// Closed-form homogeneous cones.
    Models {
        #[arg(value_enum)]
        model: Model,
        #[arg(long)]
        check: bool,
        /// `n` for the Lorentz cone, `l` for the PSD cone.
        #[arg(long, default_value_t = 3)]
        size: usize,
    },
    /// Joins of two bodies.
    Join {
        #[arg(long)]
        check: bool,
        k1: PathBuf,
        k2: PathBuf,
    },
    /// Second moments of the counterexample body.
    Kuperberg {
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
    },
    /// Slab search and certified translate.
    Slice {
        #[arg(long)]
        body: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
        #[arg(long, default_value_t = 25)]
        budget: usize,
    },
    /// Write a body file.
    Build {
        #[arg(value_enum)]
        kind: BuildKind,
        n: usize,
        /// Vertex count for `random`, jitter scale ×100 for `perturbed`.
        #[arg(long, default_value_t = 0)]
        param: usize,
    },
    /// Run a verification suite.
    Verify {
        #[arg(value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ConeOp {
    Laplace,
    Legendre,
    #[value(name = "J")]
    J,
    Floating,
    Selfconv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Lorentz,
    Psd,
}

#[derive(Clone, Copy, ValueEnum)]
enum BuildKind {
    Simplex,
    Cube,
    Cross,
    Random,
    Perturbed,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    All,
    Identities,
    Homogeneous,
    Joins,
    Kuperberg,
    Slicing,
}

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

fn parse_point(s: &str) -> AnyResult<DVector<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()?;
    Ok(DVector::from_vec(v))
}

fn read_cone(path: &Path) -> AnyResult<PolyhedralCone> {
    Ok(match read_body(path)? {
        Body::Cone(c) => c,
        Body::V(p) => PolyhedralCone::cone_over(&p)?,
        Body::H(h) => PolyhedralCone::cone_over(&h.to_vpolytope()?)?,
    })
}

/// Writes to stdout; a closed pipe is not an error.
fn emit(text: &str) -> AnyResult<()> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn print_json<T: Serialize>(v: &T) -> AnyResult<()> {
    emit(&(serde_json::to_string_pretty(v)? + "\n"))
}

fn configure_threads() {
    if let Some(n) = std::env::var("MAHLERLAB_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        // Fails only if a pool already exists.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn cone_cmd(op: ConeOp, path: &Path, point: &str, delta: f64, seed: u64) -> AnyResult<()> {
    let v = read_cone(path)?;
    let p = parse_point(point)?;
    match op {
        ConeOp::Laplace => print_json(&laplace_eval(&v, &p)?),
        ConeOp::Legendre => print_json(&legendre(&v, &p, NEWTON_TOL)?),
        ConeOp::J => print_json(&j_functional(&v, &v.dual()?, &p)?),
        ConeOp::Floating => {
            let n = v.ambient() - 1;
            let inside = floating_contains(&v, delta, &p)?;
            let phi_star = legendre(&v, &p, NEWTON_TOL)?.value;
            let oracle = floating_oracle(&v, &v.dual()?, delta, &p, 4, seed)?;
            print_json(&json!({
                "delta": delta,
                "inside": inside,
                "phi_star": phi_star,
                "level": kappa_float(n) - delta.ln(),
                "oracle": oracle,
            }))
        }
        ConeOp::Selfconv => print_json(&convolution_upper_check(&v, &p)?),
    }
}

fn models_cmd(
    model: Model,
    size: usize,
    check: bool,
    samples: usize,
    seed: u64,
) -> AnyResult<bool> {
    let cone = match model {
        Model::Lorentz => AnalyticCone::Lorentz(size),
        Model::Psd => AnalyticCone::Psd(size),
    };
    let x = match model {
        Model::Lorentz => {
            let mut x = DVector::zeros(size + 1);
            x[0] = 1.0;
            x
        }
        Model::Psd => mahlerlab::models::svec(&nalgebra::DMatrix::identity(size, size)),
    };
    let j_num = cone.j_numeric(&x, 1e-12)?;
    let j_exact = cone.j_constant();
    let mut ok = (j_num - j_exact).abs() <= 1e-8;
    let mut report = json!({
        "model": match model { Model::Lorentz => "lorentz", Model::Psd => "psd" },
        "size": size,
        "ambient": cone.ambient(),
        "j_constant": j_exact,
        "j_numeric": j_num,
    });
    if check {
        match model {
            Model::Lorentz => {
                report["laplace_constant"] = json!(lorentz_cn(size));
                report["section_duality"] = serde_json::to_value(verify_ball_duality(size)?)?;
            }
            Model::Psd => {
                let rec = psd_cn_recursive(size);
                report["laplace_constant"] = json!(psd_cn(size));
                report["laplace_constant_recursive"] = json!(rec);
                ok &= (psd_cn(size) - rec).abs() <= 1e-12;
                if size >= 2 {
                    let r = verify_homogeneous_duality(
                        &psd_slice_oracle(size),
                        &psd_slice_polar_oracle(size),
                        samples,
                        seed,
                    )?;
                    ok &= (r.lk2_s / r.target - 1.0).abs() <= 0.05;
                    report["section_duality"] = serde_json::to_value(r)?;
                }
            }
        }
    }
    report["pass"] = json!(ok);
    print_json(&report)?;
    Ok(ok)
}

fn join_cmd(k1: &Path, k2: &Path, check: bool, seed: u64) -> AnyResult<bool> {
    let a = read_vpolytope(k1)?;
    let b = read_vpolytope(k2)?;
    let j = mahlerlab::join::geometric_join(&a, &b)?;
    let mut report = json!({ "join": BodyFile::from_vpoly(&j.body) });
    let mut ok = true;
    if check {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let dirs = random_directions(j.dim(), 200, &mut rng);
        let polar = join_polar_check(&a, &b, &dirs)?;
        let mahler = join_mahler_check(&a, &b)?;
        ok = polar.residual <= 1e-8 && mahler.join_residual <= 1e-6;
        report["polarity"] = serde_json::to_value(polar)?;
        report["mahler"] = serde_json::to_value(mahler)?;
        report["pass"] = json!(ok);
    }
    print_json(&report)?;
    Ok(ok)
}

fn random_directions(
    d: usize,
    count: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Vec<DVector<f64>> {
    use rand::Rng;
    (0..count)
        .map(|_| DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0)))
        .collect()
}

fn kuperberg_cmd(n: usize, samples: usize, seed: u64) -> AnyResult<bool> {
    let m = x1_second_moments(&build_counterexample(n), samples, seed);
    let checks = json!({
        "x1_moment_k": m.m_k.value - 3.0 * m.m_k.std_error >= 1.0 / 9.0,
        "x1_moment_polar": m.m_polar.value - 3.0 * m.m_polar.std_error >= 1e-6,
        "phi_vs_product_bound": m.phi.value >= 0.9 * m.product_bound,
        "phi_exceeds_conjectured_max": m.phi.value > m.conjectured_max,
    });
    let ok = checks
        .as_object()
        .is_some_and(|o| o.values().all(|v| v == true));
    print_json(&json!({ "estimates": m, "checks": checks, "pass": ok }))?;
    Ok(ok)
}

fn slice_cmd(body: &Path, eps: f64, budget: usize, seed: u64, out: Out) -> AnyResult<()> {
    let k = read_vpolytope(body)?;
    let start = Instant::now();
    let run = slicing_pipeline(&k, eps, budget, seed)?;
    let wall = start.elapsed().as_secs_f64();
    match out {
        Out::Json => print_json(&run),
        Out::Csv => {
            let c = &run.certificate;
            emit(&format!(
                "n,eps,L_T,inner_margin,outer_margin,dual_inner_margin,dual_outer_margin,polar_translate_residual,wall_s\n{},{},{},{},{},{},{},{},{:.3}\n",
                c.n,
                c.eps,
                c.l_t,
                c.inner_margin,
                c.outer_margin,
                c.dual_inner_margin,
                c.dual_outer_margin,
                c.polar_translate_residual,
                wall
            ))
        }
    }
}

fn build_cmd(kind: BuildKind, n: usize, param: usize, seed: u64) -> AnyResult<()> {
    let p: VPolytope = match kind {
        BuildKind::Simplex => builders::simplex(n),
        BuildKind::Cube => builders::cube(n),
        BuildKind::Cross => builders::cross(n),
        BuildKind::Random => builders::random_polytope(n, param.max(2 * n + 2), seed),
        BuildKind::Perturbed => {
            let jitter = if param == 0 {
                0.2
            } else {
                param as f64 / 100.0
            };
            builders::perturbed_simplex(n, jitter, seed)
        }
    };
    print_json(&BodyFile::from_vpoly(&p))
}

fn verify_cmd(suite: SuiteArg, cli: &Cli) -> AnyResult<bool> {
    let suite = match suite {
        SuiteArg::All => Suite::All,
        SuiteArg::Identities => Suite::Identities,
        SuiteArg::Homogeneous => Suite::Homogeneous,
        SuiteArg::Joins => Suite::Joins,
        SuiteArg::Kuperberg => Suite::Kuperberg,
        SuiteArg::Slicing => Suite::Slicing,
    };
    let cfg = Config {
        seed: cli.seed,
        scale: scale(cli.scale),
        tol_override: cli.tol_override,
    };
    let report = run_suite(suite, cfg);
    match cli.out {
        Out::Json => emit(&(report.to_json(cli.timings)? + "\n"))?,
        Out::Csv => emit(&report.to_csv(cli.timings)?)?,
    }
    for c in &report.checks {
        let mark = match c.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Finding => "info",
        };
        eprintln!(
            "{:<4} {} {:<40} residual {:>11.3e}  tol {:>9.1e}",
            mark, c.id, c.anchor, c.residual, c.tolerance
        );
    }
    Ok(report.passed())
}

fn scale(s: ScaleArg) -> Scale {
    match s {
        ScaleArg::Quick => Scale::Quick,
        ScaleArg::Full => Scale::Full,
    }
}

fn run(cli: &Cli) -> AnyResult<bool> {
    match &cli.cmd {
        Cmd::Cone {
            op,
            cone,
            point,
            delta,
        } => cone_cmd(*op, cone, point, *delta, cli.seed).map(|_| true),
        Cmd::Models { model, check, size } => models_cmd(
            *model,
            *size,
            *check,
            scale(cli.scale).mc_samples(),
            cli.seed,
        ),
        Cmd::Join { check, k1, k2 } => join_cmd(k1, k2, *check, cli.seed),
        Cmd::Kuperberg { n, samples } => kuperberg_cmd(*n, *samples, cli.seed),
        Cmd::Slice { body, eps, budget } => {
            slice_cmd(body, *eps, *budget, cli.seed, cli.out).map(|_| true)
        }
        Cmd::Build { kind, n, param } => build_cmd(*kind, *n, *param, cli.seed).map(|_| true),
        Cmd::Verify { suite } => verify_cmd(*suite, cli),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
