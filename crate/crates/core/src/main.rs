use clap::{Args, Parser, Subcommand};
use denjoy::blowup::{blow_up, denjoy_config, rotation_number, semiconjugacy_check, wandering_check, BaseAction};
use denjoy::growth::{GrowthVerdict, RegularizedGrowth};
use denjoy::moderate::{growth_bound_from_nu, moderateness_report};
use denjoy::orbits::{Angle, GenId, Word};
use denjoy::pipeline::{
    build_graph, build_metric, build_moderate, realize_with, word_growth, Pipeline, PipelineConfig,
};
use denjoy::realize::{dphi, epsilon_certify, order_realization_check, phi, IntervalLayout, RealizedAction};
use denjoy::regularity::{
    check_condition2, check_condition3, csigma_norm, estimate_mg, family_constant, preset_f, slow_degree_scan,
    spheres_from_balls, Beta, CountMode, Modulus, Preset, Verdict,
};
use denjoy::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "denjoy",
    version,
    about = "C¹ circle realisations of group actions with subexponential orbit growth"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline configuration (versioned JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in action family; overrides the config's action.
    #[arg(long, global = true)]
    family: Option<String>,
    /// Word radius of the orbit truncation.
    #[arg(long, global = true)]
    radius: Option<usize>,
    /// Horizon of the length schedule's growth measurements.
    #[arg(long, global = true)]
    horizon: Option<usize>,
    /// Target bound on `sup |Dρ(s) − 1|`.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Flattening constant; derived from epsilon when absent.
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Modulus of continuity, `holder:A`, `log-power:THETA` or `log:ALPHA`.
    #[arg(long, global = true, value_name = "KIND:PARAM")]
    modulus: Option<String>,
    /// Artifact directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for randomized checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Orbit ball growth and the subexponential diagnostic.
    Growth,
    /// Length schedule and weighted volume growth.
    Metric,
    /// Moderate function with its certificates.
    Nu,
    /// Interval layout, realised action and ε-certificate.
    Realize,
    /// Regularity certificates against a modulus of continuity.
    Certify,
    /// Denjoy blow-up of a circle rotation.
    Blowup,
    /// Runs every invariant suite at desk scale.
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_family = match cli.command {
        Command::Blowup => "rotation",
        _ => "z",
    };
    let result = resolve_config(&cli.common, default_family).and_then(|cfg| {
        let out = Output::new(&cli.common.out)?;
        match cli.command {
            Command::Growth => cmd_growth(&cfg, &out),
            Command::Metric => cmd_metric(&cfg, &out),
            Command::Nu => cmd_nu(&cfg, &out),
            Command::Realize => cmd_realize(&cfg, &out),
            Command::Certify => cmd_certify(&cfg, &out),
            Command::Blowup => cmd_blowup(&cfg, &out),
            Command::Selftest => cmd_selftest(&cfg, &out),
        }
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(2)
        }
    }
}

fn resolve_config(c: &Common, default_family: &str) -> Result<PipelineConfig> {
    let mut cfg = match &c.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let mut cfg: PipelineConfig =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            if let Some(f) = &c.family {
                cfg.action = PipelineConfig::preset(f).action;
            }
            cfg
        }
        None => PipelineConfig::preset(c.family.as_deref().unwrap_or(default_family)),
    };
    if let Some(r) = c.radius {
        cfg.radius = r;
    }
    if let Some(h) = c.horizon {
        cfg.horizon = h;
    }
    if let Some(e) = c.epsilon {
        cfg.epsilon = e;
    }
    if c.delta.is_some() {
        cfg.delta = c.delta;
    }
    if c.modulus.is_some() {
        cfg.modulus = c.modulus.clone();
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    if let Some(m) = &cfg.modulus {
        Modulus::parse(m)?;
    }
    Ok(cfg)
}

/// Artifact directory; every writer is deterministic given its inputs.
struct Output {
    dir: PathBuf,
}

impl Output {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Output { dir: dir.to_path_buf() })
    }

    fn sub(&self, name: &str) -> Result<Self> {
        Output::new(&self.dir.join(name))
    }

    fn file(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut w = self.file(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    fn text(&self, name: &str, body: &str) -> Result<()> {
        let mut w = self.file(name)?;
        w.write_all(body.as_bytes())?;
        w.flush()?;
        Ok(())
    }

    fn csv(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let mut w = csv::Writer::from_writer(self.file(name)?);
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn family_name(cfg: &PipelineConfig) -> String {
    cfg.action.family.clone()
}

fn modulus_of(cfg: &PipelineConfig) -> Result<Modulus> {
    Modulus::parse(cfg.modulus.as_deref().unwrap_or("holder:0.2"))
}

// ---------------------------------------------------------------------------
// Subcommands

fn cmd_growth(cfg: &PipelineConfig, out: &Output) -> Result<ExitCode> {
    let stage = build_graph(cfg)?;
    let (profile, diag) = word_growth(&stage)?;
    let exponential = diag.verdict == GrowthVerdict::ConsistentWithExponential;
    let spheres = spheres_from_balls(&profile.values);
    out.csv(
        "growth.csv",
        &["n", "ball", "sphere", "root"],
        (0..profile.values.len()).map(|n| {
            let root = if n == 0 {
                String::new()
            } else {
                diag.roots[n - 1].to_string()
            };
            vec![
                n.to_string(),
                profile.values[n].to_string(),
                spheres[n].to_string(),
                root,
            ]
        }),
    )?;
    out.json(
        "growth.json",
        &json!({
            "config": cfg,
            "family": family_name(cfg),
            "states": stage.graph.len(),
            "truncation_radius": stage.graph.radius(),
            "horizon": profile.horizon(),
            "balls": profile.values,
            "diagnostic": diag,
            "warning": exponential,
        }),
    )?;
    println!(
        "growth: {} horizon {} verdict {}",
        family_name(cfg),
        profile.horizon(),
        diag.verdict.label()
    );
    if exponential {
        eprintln!(
            "warning: orbit growth of {} is consistent with exponential growth",
            family_name(cfg)
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_metric(cfg: &PipelineConfig, out: &Output) -> Result<ExitCode> {
    let stage = build_graph(cfg)?;
    let m = build_metric(cfg, &stage)?;
    let x0 = stage.graph.basepoints()[0];
    let field = m.metric.distances_from(x0, true);
    let n_max = if field.exit_bound == u64::MAX {
        field.dist.iter().copied().filter(|&d| d != u64::MAX).max().unwrap_or(0)
    } else {
        field.certified_radius()
    };
    let volume = m.metric.volume_growth(x0, n_max)?;
    m.schedule.lengths.write_csv(out.file("lengths.csv")?)?;
    out.json(
        "metric.json",
        &json!({
            "config": cfg,
            "family": family_name(cfg),
            "truncation_radius": stage.graph.radius(),
            "lengths": m.schedule.lengths.lengths(),
            "bridges": m.schedule.bridges,
            "blocks": m.schedule.blocks,
            "certified_radius": n_max,
            "volume": volume,
        }),
    )?;
    println!(
        "metric: {} lengths {:?} certified radius {n_max} inclusion {}",
        family_name(cfg),
        m.schedule.lengths.lengths(),
        volume.inclusion_holds
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_nu(cfg: &PipelineConfig, out: &Output) -> Result<ExitCode> {
    let stage = build_graph(cfg)?;
    let m = build_metric(cfg, &stage)?;
    let nu = build_moderate(cfg, &stage, &m)?;
    let x0 = stage.graph.basepoints()[0];
    let gens = stage.action.generators();
    let reports: Vec<_> = gens
        .non_identity()
        .map(|g| moderateness_report(&nu.nu, &stage.graph, &Word::single(g), nu.displacement))
        .collect();
    let bound = growth_bound_from_nu(&nu.nu, &stage.graph, x0, 1.1);
    let contract = nu.flat.as_ref().map(|f| f.flatten_contract(&stage.graph)).transpose()?;
    nu.best().write_csv(&stage.graph, out.file("nu.csv")?)?;
    nu.growth.write_csv(Some(&nu.balls), out.file("F.csv")?)?;
    out.json(
        "nu.json",
        &json!({
            "config": cfg,
            "family": family_name(cfg),
            "truncation_radius": stage.graph.radius(),
            "certificate": nu.nu.certificate(),
            "flattened": nu.flat.as_ref().map(|f| f.certificate()),
            "flatten_error": nu.flatten_error.as_ref().map(error_json),
            "flatten_contract": contract,
            "displacement": nu.displacement,
            "delta": nu.delta,
            "moderateness": reports,
            "growth_bound": match &bound {
                Ok(b) => serde_json::to_value(b)?,
                Err(e) => error_json(e),
            },
        }),
    )?;
    let cert = nu.nu.certificate();
    println!(
        "nu: {} horizon {} states {} mass+tail {:.12} flattened {}",
        family_name(cfg),
        cert.horizon,
        cert.states,
        cert.total_bound,
        nu.flat.is_some()
    );
    Ok(ExitCode::SUCCESS)
}

fn error_json(e: &Error) -> Value {
    json!({ "code": e.code(), "message": e.to_string() })
}

fn write_realization(out: &Output, action: &RealizedAction, gens: &[GenId], grid: usize) -> Result<()> {
    action.layout().write_csv(out.file("layout.csv")?)?;
    let labels = action.graph().generators();
    for &g in gens {
        action.write_derivative_csv(g, grid, out.file(&format!("derivative_{}.csv", labels.label(g)))?)?;
    }
    out.text("layout.svg", &layout_svg(action.layout()))?;
    if let Some(&g) = gens.first() {
        let word = Word::single(g);
        let pts: Vec<(f64, f64)> = (0..grid)
            .filter_map(|k| {
                let xi = (k as f64 + 0.5) / grid as f64;
                action.derivative(&word, xi).ok().map(|d| (xi, d.value))
            })
            .collect();
        out.text(
            "derivative.svg",
            &profile_svg(&pts, &format!("D rho({})", labels.label(g))),
        )?;
    }
    Ok(())
}

fn cmd_realize(cfg: &PipelineConfig, out: &Output) -> Result<ExitCode> {
    let p = Pipeline::run(cfg)?;
    if let Some(e) = &p.nu.flatten_error {
        eprintln!("note: no flattening for delta = {}: {e}", p.nu.delta);
    }
    let gens = p.generators();
    write_realization(out, &p.action, &gens, cfg.grid)?;
    let order = order_realization_check(p.action.layout(), cfg.samples, cfg.seed)?;
    let cert = epsilon_certify(&p.action, &gens, cfg.epsilon, &[cfg.grid, 10 * cfg.grid]);
    out.json(
        "realize.json",
        &json!({
            "config": cfg,
            "family": family_name(cfg),
            "truncation_radius": p.graph.graph.radius(),
            "intervals": p.action.layout().len(),
            "covered": p.action.layout().covered,
            "disjoint": p.action.layout().disjoint(),
            "order_preservation": p.order,
            "order_realization": order,
            "certificate": match &cert {
                Ok(c) => serde_json::to_value(c)?,
                Err(e) => error_json(e),
            },
        }),
    )?;
    let cert = cert?;
    println!(
        "realize: {} intervals {} sup |Drho(s) - 1| = {:.6} < {}: {}",
        family_name(cfg),
        p.action.layout().len(),
        cert.sup_deviation,
        cfg.epsilon,
        cert.certified
    );
    Ok(if cert.certified {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_certify(cfg: &PipelineConfig, out: &Output) -> Result<ExitCode> {
    let sigma = modulus_of(cfg)?;
    let p = Pipeline::run(cfg)?;
    let balls = &p.nu.balls.values;
    let f = &p.nu.growth;
    let c2_ball = check_condition2(balls, f, CountMode::Ball);
    let c2_sphere = check_condition2(&spheres_from_balls(balls), f, CountMode::Sphere);
    let c3 = check_condition3(f, &sigma)?;
    let k = family_constant(200, 2000);
    let gens = p.generators();
    // Regularity is a property of the unflattened construction.
    let raw = realize_with(&p.graph, &p.nu.nu)?;
    let mut per_gen = Vec::new();
    for &g in &gens {
        let word = Word::single(g);
        let mg = estimate_mg(&p.nu.nu, &p.graph.graph, &sigma, &word)?;
        let norm = csigma_norm(&raw, &word, &sigma, &[2 * cfg.grid, 4 * cfg.grid, 8 * cfg.grid]);
        per_gen.push(json!({ "mg": mg, "envelope": k * mg.value, "csigma": norm }));
    }
    let presets: Vec<Value> = [
        Preset::Polynomial {
            d: 2.0,
            c: 4.0,
            alpha: 0.2,
        },
        Preset::SlowDegree { beta: Beta::LogLog },
        Preset::StretchedExponential { alpha: 0.5 },
    ]
    .into_iter()
    .map(|pr| {
        let pf = preset_f(pr, 100_000)?;
        Ok(json!({ "preset": pr, "modulus": pf.modulus, "condition3": check_condition3(&pf.growth, &pf.modulus)? }))
    })
    .collect::<Result<_>>()?;
    out.json(
        "certify.json",
        &json!({
            "config": cfg,
            "family": family_name(cfg),
            "modulus": sigma,
            "modulus_check": sigma.check(1000),
            "truncation_radius": p.graph.graph.radius(),
            "horizon": f.horizon(),
            "grid": cfg.grid,
            "condition2_ball": c2_ball,
            "condition2_sphere": c2_sphere,
            "condition3": c3,
            "family_constant": k,
            "generators": per_gen,
            "presets": presets,
        }),
    )?;
    println!(
        "certify: {} modulus {} condition2 {:?} condition3 {:?}",
        family_name(cfg),
        sigma.label(),
        c2_ball.verdict,
        c3.verdict
    );
    Ok(ExitCode::SUCCESS)
}

fn base_of(cfg: &PipelineConfig) -> Result<(BaseAction, Angle)> {
    match cfg.action.family.as_str() {
        "rotation" => {
            let angle = match cfg.action.params.get("angle").and_then(Value::as_str) {
                None | Some("golden") => Angle::Golden,
                Some(s) => {
                    let (p, q) = s
                        .split_once('/')
                        .ok_or_else(|| Error::Config(format!("bad angle `{s}`")))?;
                    Angle::Rational {
                        p: p.trim()
                            .parse()
                            .map_err(|_| Error::Config(format!("bad angle `{s}`")))?,
                        q: q.trim()
                            .parse()
                            .map_err(|_| Error::Config(format!("bad angle `{s}`")))?,
                    }
                }
            };
            Ok((BaseAction::rotation(angle)?, angle))
        }
        other => Err(Error::Config(format!("blowup needs a rotation base, got `{other}`"))),
    }
}

fn cmd_blowup(cfg: &PipelineConfig, out: &Output) -> Result<ExitCode> {
    let (base, angle) = base_of(cfg)?;
    let budget = cfg.radius.saturating_sub(1).max(1);
    let mut bcfg = denjoy_config(angle, budget);
    bcfg.seed = cfg.seed;
    bcfg.grid = cfg.grid;
    bcfg.samples = cfg.samples;
    bcfg.epsilon = cfg.epsilon;
    bcfg.delta = cfg.delta;
    let b = blow_up(base, &bcfg)?;
    if let Some(w) = &b.growth_warning {
        eprintln!("warning: {w}");
    }
    let r = b.base.generators().id("r").expect("rotation generator");
    write_realization(out, b.action(), &[r], cfg.grid)?;
    let semi = semiconjugacy_check(&b, cfg.grid, cfg.samples, cfg.seed)?;
    let rn = rotation_number(b.action(), r, budget)?;
    let x0 = b.action().graph().basepoints()[0];
    let wander = wandering_check(b.action(), r, x0, budget.min(1000))?;
    out.json(
        "blowup.json",
        &json!({
            "config": bcfg,
            "base": b.base.name(),
            "alpha": angle.to_f64(),
            "truncation_radius": b.action().graph().radius(),
            "intervals": b.action().layout().len(),
            "growth_warning": b.growth_warning,
            "semiconjugacy": semi,
            "rotation_number": rn,
            "rotation_error": (rn.estimate - angle.to_f64()).abs(),
            "wandering": wander,
            "wandering_verdict": wander.wandering(),
        }),
    )?;
    println!(
        "blowup: {} rotation number {:.8} (alpha {:.8}) residual {} wandering {}",
        b.base.name(),
        rn.estimate,
        angle.to_f64(),
        semi.max_residual,
        wander.wandering()
    );
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// Self-test

#[derive(Serialize)]
struct Check {
    name: String,
    value: f64,
    bound: f64,
    pass: bool,
}

#[derive(Serialize, Default)]
struct Suite {
    name: String,
    checks: Vec<Check>,
}

impl Suite {
    fn new(name: &str) -> Self {
        Suite {
            name: name.into(),
            checks: Vec::new(),
        }
    }

    /// Records `value ≤ bound`.
    fn le(&mut self, name: &str, value: f64, bound: f64) {
        self.checks.push(Check {
            name: name.into(),
            value,
            bound,
            pass: value <= bound,
        });
    }

    fn holds(&mut self, name: &str, ok: bool) {
        self.checks.push(Check {
            name: name.into(),
            value: ok as u8 as f64,
            bound: 1.0,
            pass: ok,
        });
    }

    fn error(&mut self, name: &str, e: &Error) {
        self.checks.push(Check {
            name: format!("{name}: {}", e.code()),
            value: f64::NAN,
            bound: f64::NAN,
            pass: false,
        });
    }

    fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn cmd_selftest(cfg: &PipelineConfig, out: &Output) -> Result<ExitCode> {
    let seed = cfg.seed;
    let suites: Vec<(&str, fn(u64, &Output) -> Result<Suite>)> = vec![
        ("family", suite_family),
        ("moderate", suite_moderate),
        ("realize", suite_realize),
        ("blowup", suite_blowup),
        ("regularity", suite_regularity),
        ("negative", suite_negative),
    ];
    let mut results = Vec::new();
    let mut all = true;
    for (name, run) in suites {
        let start = Instant::now();
        let suite = match out.sub(name).and_then(|dir| run(seed, &dir)) {
            Ok(s) => s,
            Err(e) => {
                let mut s = Suite::new(name);
                s.error("suite", &e);
                s
            }
        };
        let ok = suite.pass();
        all &= ok;
        println!(
            "{} {name} ({} checks, {:.2} s)",
            if ok { "PASS" } else { "FAIL" },
            suite.checks.len(),
            start.elapsed().as_secs_f64()
        );
        for c in suite.checks.iter().filter(|c| !c.pass) {
            println!("  failed: {} = {} (bound {})", c.name, c.value, c.bound);
        }
        results.push(suite);
    }
    out.json(
        "selftest.json",
        &json!({ "seed": seed, "pass": all, "suites": results }),
    )?;
    Ok(if all { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn suite_family(seed: u64, out: &Output) -> Result<Suite> {
    let mut s = Suite::new("family");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Intervals anchored at 0, so coordinates are offsets and keep full
    // relative precision on short intervals.
    let interval = |rng: &mut ChaCha8Rng, decades: f64| (0.0, 10f64.powf(rng.gen_range(-decades..0.0)));
    let (mut c1, mut c3, mut fd, mut edge): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    let mut rows = Vec::new();
    for case in 0..10_000 {
        let (i, j) = (interval(&mut rng, 3.0), interval(&mut rng, 3.0));
        let (li, lj) = (i.1, j.1);
        let r = lj / li;
        let t = rng.gen_range(0.01..0.99) * li;
        let d = dphi(i, j, t)?;
        let bound = (r * r - 1.0).abs();
        c1 = c1.max((d - 1.0).abs() - bound * (1.0 + 1e-12));
        // Step at a thousandth of the scale on which Dφ varies.
        let h = 1e-3 * li * r.min(1.0 / r) / std::f64::consts::PI;
        let num = (phi(i, j, t + h)? - phi(i, j, t - h)?) / (2.0 * h);
        fd = fd.max((num / d - 1.0).abs());
        edge = edge.max((dphi(i, j, 1e-9 * li)? - 1.0).abs());
        let (a, b, c) = (
            interval(&mut rng, 3.0),
            interval(&mut rng, 3.0),
            interval(&mut rng, 3.0),
        );
        let u = rng.gen::<f64>() * a.1;
        c3 = c3.max((phi(b, c, phi(a, b, u)?)? - phi(a, c, u)?).abs());
        if case < 100 {
            rows.push(vec![li.to_string(), lj.to_string(), t.to_string(), d.to_string()]);
        }
    }
    out.csv("cases.csv", &["i_len", "j_len", "t", "dphi"], rows)?;
    s.le("c1_excess", c1, 0.0);
    s.le("c3_cocycle", c3, 1e-12);
    s.le("finite_difference_relative", fd, 1e-5);
    s.le("endpoint_derivative_gap", edge, 1e-6);
    Ok(s)
}

fn suite_moderate(_seed: u64, out: &Output) -> Result<Suite> {
    let mut s = Suite::new("moderate");
    for fam in ["z", "z2"] {
        let cfg = PipelineConfig::preset(fam);
        let stage = build_graph(&cfg)?;
        let m = build_metric(&cfg, &stage)?;
        let nu = build_moderate(&cfg, &stage, &m)?;
        let cert = nu.nu.certificate();
        s.holds(&format!("{fam}.positive"), cert.all_positive);
        s.le(&format!("{fam}.mass_plus_tail"), cert.total_bound, 1.0 + 1e-12);
        for g in stage.action.generators().non_identity() {
            let rep = moderateness_report(&nu.nu, &stage.graph, &Word::single(g), nu.displacement);
            s.holds(&format!("{fam}.trend.{}", rep.word), rep.trend_non_increasing);
        }
        let x0 = stage.graph.basepoints()[0];
        match growth_bound_from_nu(&nu.nu, &stage.graph, x0, 1.1) {
            Ok(b) => s.holds(&format!("{fam}.growth_bound"), b.holds),
            Err(e) => s.error(&format!("{fam}.growth_bound"), &e),
        }
        nu.nu.write_csv(&stage.graph, out.file(&format!("nu_{fam}.csv"))?)?;
    }
    Ok(s)
}

fn suite_realize(seed: u64, out: &Output) -> Result<Suite> {
    let mut s = Suite::new("realize");
    let p = Pipeline::run(&PipelineConfig::preset("z"))?;
    let gens = p.generators();
    s.holds("z.disjoint", p.action.layout().disjoint());
    let order = order_realization_check(p.action.layout(), 10_000, seed)?;
    s.le("z.order_mismatches", order.mismatches as f64, 0.0);
    let cert = epsilon_certify(&p.action, &gens, 0.1, &[1000, 10_000])?;
    s.le("z.delta_condition", cert.delta_condition, 0.1);
    s.le("z.epsilon_sup", cert.sup_deviation, 0.1 - f64::EPSILON);
    write_realization(out, &p.action, &gens, 1000)?;
    out.json("certificate_z.json", &cert)?;

    let p2 = Pipeline::run(&PipelineConfig::preset("z2"))?;
    let raw = realize_with(&p2.graph, &p2.nu.nu)?;
    let w = p2.graph.action.generators().parse_word("e1 e2 E1 E2")?;
    let rel = raw.relation_check(&w, 1000);
    s.le(
        "z2.commutator_residual",
        rel.max_residual.max(rel.endpoint_residual),
        1e-10,
    );
    s.holds("z2.commutator_evaluated", rel.evaluated > 0);
    let cert2 = epsilon_certify(&p2.action, &p2.generators(), 0.1, &[1000])?;
    s.le("z2.epsilon_sup", cert2.sup_deviation, 0.1 - f64::EPSILON);
    Ok(s)
}

fn suite_blowup(seed: u64, out: &Output) -> Result<Suite> {
    let mut s = Suite::new("blowup");
    let budget = 1000;
    let b = blow_up(
        BaseAction::rotation(Angle::Golden)?,
        &denjoy_config(Angle::Golden, budget),
    )?;
    let r = b.base.generators().id("r").expect("rotation generator");
    let semi = semiconjugacy_check(&b, 1000, 2000, seed)?;
    s.le("semiconjugacy_residual", semi.max_residual, 0.0);
    s.le("endpoint_residual", semi.endpoint_residual, 0.0);
    s.le("monotonicity_violations", semi.monotonicity_violations as f64, 0.0);
    let rn = rotation_number(b.action(), r, budget)?;
    s.le(
        "rotation_error",
        (rn.estimate - Angle::Golden.to_f64()).abs(),
        2.0 / budget as f64,
    );
    let x0 = b.action().graph().basepoints()[0];
    let w = wandering_check(b.action(), r, x0, budget)?;
    s.holds("wandering", w.wandering());
    s.le("wandering_total_length", w.total_length, 1.0);
    out.json(
        "blowup.json",
        &json!({ "semiconjugacy": semi, "rotation_number": rn, "wandering": w }),
    )?;
    Ok(s)
}

fn suite_regularity(_seed: u64, out: &Output) -> Result<Suite> {
    let mut s = Suite::new("regularity");
    let horizon = 20_000;
    for (name, preset) in [
        (
            "polynomial",
            Preset::Polynomial {
                d: 2.0,
                c: 4.0,
                alpha: 0.2,
            },
        ),
        ("stretched", Preset::StretchedExponential { alpha: 0.5 }),
    ] {
        let pf = preset_f(preset, horizon)?;
        let rep = check_condition3(&pf.growth, &pf.modulus)?;
        s.holds(&format!("{name}.condition3_bounded"), rep.verdict == Verdict::Bounded);
    }
    let exp = RegularizedGrowth::from_fn(2000, |n| n as f64 * 2f64.ln());
    let rep = check_condition3(&exp, &Modulus::holder(0.5)?)?;
    s.holds("exponential.condition3_unbounded", rep.verdict == Verdict::Unbounded);
    let scan = slow_degree_scan(Beta::LogLog, horizon);
    s.holds("slow_degree.inequality", scan.inequality_holds && scan.beta_admissible);
    let balls: Vec<f64> = (0..=horizon).map(|n| (2 * n + 1) as f64).collect();
    let quartic = RegularizedGrowth::from_fn(horizon, |n| 4.0 * (n.max(1) as f64).ln());
    let c2 = check_condition2(&balls, &quartic, CountMode::Ball);
    s.holds("z.condition2_converging", c2.verdict == Verdict::Converging);
    // Ball counts against n²: the ball sum diverges, the sphere sum converges.
    let square = RegularizedGrowth::from_fn(horizon, |n| 2.0 * (n.max(1) as f64).ln());
    let ball = check_condition2(&balls, &square, CountMode::Ball);
    let sphere = check_condition2(&spheres_from_balls(&balls), &square, CountMode::Sphere);
    s.holds(
        "z.ball_vs_sphere",
        ball.verdict == Verdict::Diverging && sphere.verdict == Verdict::Converging,
    );
    out.json(
        "condition2.json",
        &json!({ "ball": ball, "sphere": sphere, "quartic": c2 }),
    )?;
    Ok(s)
}

fn suite_negative(_seed: u64, out: &Output) -> Result<Suite> {
    let mut s = Suite::new("negative");
    let mut rows = Vec::new();
    for fam in ["lamplighter", "bs12"] {
        let cfg = PipelineConfig::preset(fam);
        let stage = build_graph(&cfg)?;
        let (_, diag) = word_growth(&stage)?;
        s.holds(
            &format!("{fam}.exponential"),
            diag.verdict == GrowthVerdict::ConsistentWithExponential,
        );
        let refused = build_metric(&cfg, &stage).err();
        let code = refused.as_ref().map(|e| e.code()).unwrap_or("none");
        s.holds(
            &format!("{fam}.horizon_insufficient"),
            code == "metric.horizon_insufficient",
        );
        rows.push(vec![
            fam.to_string(),
            diag.verdict.label().to_string(),
            code.to_string(),
        ]);
    }
    out.csv("negative.csv", &["family", "verdict", "schedule"], rows)?;
    Ok(s)
}

// ---------------------------------------------------------------------------
// SVG

const SVG_W: f64 = 1000.0;

/// One bar per interval wider than a hundredth of a pixel, on the raw circle
/// cut at 0.
fn layout_svg(lay: &IntervalLayout) -> String {
    let h = 80.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{h}" viewBox="0 0 {SVG_W} {h}">"#
    );
    let _ = writeln!(
        s,
        r##"<rect x="0" y="20" width="{SVG_W}" height="40" fill="#eeeeee"/>"##
    );
    for (k, e) in lay.entries().iter().enumerate() {
        let w = e.len * SVG_W;
        if w < 0.01 {
            continue;
        }
        let fill = if k == lay.star() {
            "#d62728"
        } else if k % 2 == 0 {
            "#1f77b4"
        } else {
            "#6baed6"
        };
        let _ = writeln!(
            s,
            r#"<rect x="{:.4}" y="20" width="{:.4}" height="40" fill="{fill}"/>"#,
            e.lo * SVG_W,
            w
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="4" y="14" font-size="12" font-family="monospace">{} intervals, covered {:.6}</text>"#,
        lay.len(),
        lay.covered
    );
    s.push_str("</svg>\n");
    s
}

fn profile_svg(pts: &[(f64, f64)], title: &str) -> String {
    let h = 300.0;
    let pad = 30.0;
    let (lo, hi) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let (lo, hi) = if lo.is_finite() && hi > lo {
        (lo, hi)
    } else {
        (0.0, 2.0)
    };
    let y = |v: f64| h - pad - (v - lo) / (hi - lo) * (h - 2.0 * pad);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{h}" viewBox="0 0 {SVG_W} {h}">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="4" y="16" font-size="12" font-family="monospace">{title}: range [{lo:.6}, {hi:.6}]</text>"#
    );
    let _ = write!(
        s,
        r##"<polyline fill="none" stroke="#1f77b4" stroke-width="1" points=""##
    );
    for &(x, v) in pts {
        let _ = write!(s, "{:.3},{:.3} ", x * SVG_W, y(v));
    }
    s.push_str("\"/>\n");
    if lo <= 1.0 && 1.0 <= hi {
        let _ = writeln!(
            s,
            r##"<line x1="0" x2="{SVG_W}" y1="{:.3}" y2="{:.3}" stroke="#999999" stroke-dasharray="4 4"/>"##,
            y(1.0),
            y(1.0)
        );
    }
    s.push_str("</svg>\n");
    s
}
