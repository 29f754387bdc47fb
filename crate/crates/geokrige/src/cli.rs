//! Command-line front end: `simulate | krige | fit | hmc | sweep | geo`.
//!
//! Flags are long-form `--name value` (booleans take no value). A config
//! file of `name=value` lines can seed any flag; explicit flags win. Every
//! stochastic command requires a seed, either `--seed` or the
//! `GEOKRIGE_SEED` environment variable. Exit codes: 0 success, 1 numerical
//! failure, 2 input/usage error.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use geokrige_core::error::Error as CoreError;
use geokrige_core::estimation::{fit_mple, godambe, FitConfig, ParamBox, ThetaParam};
use geokrige_core::geo::{
    geo_interpolate, synthetic_dataset, GeoConfig, GeoMode, SyntheticGeoConfig,
};
use geokrige_core::kernels::{
    build_cov_matrices, ErrorModel, KernelFamily, KernelSpec, Locations, McConfig,
};
use geokrige_core::kriging;
use geokrige_core::posterior::{plan_inits, run_single_chain, summarize, GpModel, HmcRunConfig};
use geokrige_core::rng::derive_seed;
use geokrige_core::sampler::HmcConfig;
use geokrige_core::simstudy::{
    make_design, simulate_rep, CellRunConfig, Method, SweepCell, TABLE1_BETA, TABLE1_SIGMA2_U,
    TABLE1_SIGMA2_X,
};
use rayon::prelude::*;

use crate::io::{self, header, IoError, JsonObject};
use crate::sweep::{results_csv, run_sweep, timings_csv, SweepConfig};

const USAGE: &str = "\
geokrige <command> [--flags]

commands:
  simulate   draw a location-error dataset on the 8x8 simulation design
  krige      KALE/KILE point and interval prediction at target locations
  fit        maximum pseudo-likelihood covariance parameters
  hmc        Hamiltonian Monte Carlo minimum-MSE prediction
  sweep      simulation study over the parameter grid (checkpointable)
  geo        gridded-anomaly interpolation with geodesic kernels

common flags:
  --seed N          RNG seed (or env GEOKRIGE_SEED); required when stochastic
  --threads N       worker threads (default: all cores)
  --config FILE     key=value defaults, overridden by explicit flags
  --out PATH        primary output file

run `geokrige <command> --help` for the command's flags.
";

fn command_usage(cmd: &str) -> &'static str {
    match cmd {
        "simulate" => {
            "geokrige simulate --beta B [--tau2 1] [--sigma2-x 0] [--sigma2-u 0] \
             --seed N --out data.csv [--targets-out t.csv] [--with-truth]\n"
        }
        "krige" => {
            "geokrige krige --input data.csv --targets t.csv --method kale|kile \
             [--tau2 V --beta V --sigma2-x V | --fit] [--sigma2-u 0] [--alpha 0.05] \
             [--intervals] [--n-mc 4096] [--cdf-mc 2000] --seed N --out preds.csv\n"
        }
        "fit" => {
            "geokrige fit --input data.csv --sigma2-u V [--family sqexp|geodesic] \
             [--restarts 8] [--godambe [--godambe-mc 2000]] --seed N [--out fit.json]\n"
        }
        "hmc" => {
            "geokrige hmc --input data.csv --targets t.csv [--tau2 V --beta V --sigma2-x V | \
             --sample-params] [--sigma2-u 0] [--chains 4] [--warmup 1000] [--draws 500] \
             [--leapfrog 16] [--accept 0.8] [--kappa 0] [--alpha 0.05] --seed N \
             --out preds.csv [--draws-out d.csv] [--diag-out diag.json]\n"
        }
        "sweep" => {
            "geokrige sweep [--reps 100] [--betas a,b,..] [--sigma2-xs ..] [--sigma2-us ..] \
             [--methods kale,kile,hmc] [--params known|estimated] [--chains 2] [--warmup 500] \
             [--draws 1000] [--leapfrog 16] [--accept 0.8] [--checkpoint-dir DIR] --seed N \
             --out results.csv [--timings-out timings.csv]\n"
        }
        "geo" => {
            "geokrige geo --input geo.csv --targets gt.csv --mode kale|kile|hmc \
             [--sigma2-u 7500] [--center] [--n-mc 4096] [--chains 4] [--warmup 1000] \
             [--draws 500] [--leapfrog 16] [--alpha 0.05] --seed N --out preds.csv \
             [--params-out params.json]\n\
             geokrige geo --synthetic [--tau2 1 --beta 4e-4 --sigma2-x 0.05] [--sigma2-u 7500] \
             [--grid-step 5] [--lat-range lo:hi] [--lon-range lo:hi] [--observed-frac 0.85] \
             --seed N --out data.csv --targets-out gt.csv [--truth-out truth.csv]\n"
        }
        _ => USAGE,
    }
}

/// Usage/input failure carrying the message shown on stderr.
struct UsageError(String);

enum CliError {
    Usage(String),
    Numerical(String),
}

impl From<UsageError> for CliError {
    fn from(u: UsageError) -> Self {
        CliError::Usage(u.0)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::DimensionMismatch { .. }
            | CoreError::InvalidParameter(_)
            | CoreError::NoClosedForm(_) => CliError::Usage(format!("{e}")),
            other => CliError::Numerical(format!("{other}")),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Io(ioe) => CliError::Numerical(format!("io error: {ioe}")),
            other => CliError::Usage(format!("{other}")),
        }
    }
}

/// Parsed flags: canonical name -> value ("true" for bare flags).
struct Args {
    cmd: String,
    map: BTreeMap<String, String>,
}

impl Args {
    fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    fn has_flag(&self, key: &str) -> bool {
        self.get(key).is_some_and(|v| v != "false")
    }

    fn f64_req(&self, key: &str) -> Result<f64, UsageError> {
        let v = self
            .get(key)
            .ok_or_else(|| UsageError(format!("missing required --{key}\n{}", command_usage(&self.cmd))))?;
        v.parse()
            .map_err(|_| UsageError(format!("--{key}: `{v}` is not a number")))
    }

    fn f64_opt(&self, key: &str, default: f64) -> Result<f64, UsageError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| UsageError(format!("--{key}: `{v}` is not a number"))),
        }
    }

    fn usize_opt(&self, key: &str, default: usize) -> Result<usize, UsageError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| UsageError(format!("--{key}: `{v}` is not an integer"))),
        }
    }

    fn path_req(&self, key: &str) -> Result<PathBuf, UsageError> {
        self.get(key)
            .map(PathBuf::from)
            .ok_or_else(|| UsageError(format!("missing required --{key}\n{}", command_usage(&self.cmd))))
    }

    fn path_opt(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(PathBuf::from)
    }

    fn f64_list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, UsageError> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| UsageError(format!("--{key}: `{s}` is not a number")))
                })
                .collect(),
        }
    }

    /// Seed from `--seed` or the `GEOKRIGE_SEED` environment fallback.
    fn seed(&self) -> Result<u64, UsageError> {
        if let Some(v) = self.get("seed") {
            return v
                .parse()
                .map_err(|_| UsageError(format!("--seed: `{v}` is not an integer")));
        }
        if let Ok(v) = std::env::var("GEOKRIGE_SEED") {
            return v
                .parse()
                .map_err(|_| UsageError(format!("GEOKRIGE_SEED: `{v}` is not an integer")));
        }
        Err(UsageError(
            "a seed is required: pass --seed or set GEOKRIGE_SEED".into(),
        ))
    }

    /// Canonical `cmd key=value ...` echo for output headers. Excludes
    /// execution-only flags (thread count, output destinations) so reruns
    /// that differ only in where or how they execute produce byte-identical
    /// files.
    fn echo(&self) -> String {
        const EXECUTION_ONLY: [&str; 10] = [
            "threads",
            "config",
            "out",
            "targets-out",
            "truth-out",
            "draws-out",
            "diag-out",
            "params-out",
            "timings-out",
            "checkpoint-dir",
        ];
        let mut parts = vec![self.cmd.clone()];
        for (k, v) in &self.map {
            if EXECUTION_ONLY.contains(&k.as_str()) {
                continue;
            }
            parts.push(format!("{k}={v}"));
        }
        parts.join(" ")
    }
}

fn parse_args(argv: &[String]) -> Result<Args, UsageError> {
    if argv.is_empty() {
        return Err(UsageError(USAGE.into()));
    }
    let cmd = argv[0].clone();
    if cmd == "--help" || cmd == "-h" || cmd == "help" {
        return Err(UsageError(USAGE.into()));
    }
    if !matches!(
        cmd.as_str(),
        "simulate" | "krige" | "fit" | "hmc" | "sweep" | "geo"
    ) {
        return Err(UsageError(format!("unknown command `{cmd}`\n\n{USAGE}")));
    }
    let mut map = BTreeMap::new();
    let mut i = 1;
    while i < argv.len() {
        let a = &argv[i];
        if a == "--help" || a == "-h" {
            return Err(UsageError(command_usage(&cmd).into()));
        }
        let name = a
            .strip_prefix("--")
            .ok_or_else(|| UsageError(format!("expected a --flag, got `{a}`")))?;
        if name.is_empty() {
            return Err(UsageError("empty flag".into()));
        }
        let next_is_value = argv
            .get(i + 1)
            .map(|n| !n.starts_with("--"))
            .unwrap_or(false);
        if next_is_value {
            map.insert(name.to_string(), argv[i + 1].clone());
            i += 2;
        } else {
            map.insert(name.to_string(), "true".to_string());
            i += 1;
        }
    }
    // fold in config-file defaults (flags win)
    if let Some(cfg_path) = map.get("config").cloned() {
        let text = std::fs::read_to_string(&cfg_path)
            .map_err(|e| UsageError(format!("--config {cfg_path}: {e}")))?;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                UsageError(format!("{cfg_path}:{}: expected key=value", ln + 1))
            })?;
            map.entry(k.trim().to_string())
                .or_insert_with(|| v.trim().to_string());
        }
    }
    Ok(Args { cmd, map })
}

/// Entry point; returns the process exit code.
pub fn run(argv: &[String]) -> i32 {
    let args = match parse_args(argv) {
        Ok(a) => a,
        Err(UsageError(msg)) => {
            eprintln!("{msg}");
            return 2;
        }
    };
    if let Some(t) = args.get("threads") {
        match t.parse::<usize>() {
            Ok(n) if n > 0 => {
                // ignore the error if a pool already exists (tests)
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("--threads: `{t}` is not a positive integer");
                return 2;
            }
        }
    }
    let result = match args.cmd.as_str() {
        "simulate" => cmd_simulate(&args),
        "krige" => cmd_krige(&args),
        "fit" => cmd_fit(&args),
        "hmc" => cmd_hmc(&args),
        "sweep" => cmd_sweep(&args),
        "geo" => cmd_geo(&args),
        _ => unreachable!(),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("{msg}");
            2
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("{msg}");
            1
        }
    }
}

fn spec_from_flags(args: &Args, family: KernelFamily) -> Result<KernelSpec, CliError> {
    let spec = KernelSpec {
        family,
        tau2: args.f64_opt("tau2", 1.0)?,
        beta: args.f64_req("beta")?,
        sigma2_x: args.f64_opt("sigma2-x", 0.0)?,
    };
    spec.validate()?;
    Ok(spec)
}

fn error_model(args: &Args, dim: usize) -> Result<ErrorModel, CliError> {
    let sigma2_u = args.f64_opt("sigma2-u", 0.0)?;
    let err = if sigma2_u > 0.0 {
        ErrorModel::iid_gaussian(sigma2_u, dim)
    } else {
        ErrorModel::none(dim)
    };
    err.validate()?;
    Ok(err)
}

fn cmd_simulate(args: &Args) -> Result<(), CliError> {
    let seed = args.seed()?;
    let spec = spec_from_flags(args, KernelFamily::SquaredExponential)?;
    let err = error_model(args, 2)?;
    let out = args.path_req("out")?;
    let with_truth = args.has_flag("with-truth");
    let design = make_design(derive_seed(seed, &[0xde5]));
    let rep = simulate_rep(&spec, &err, &design, derive_seed(seed, &[0x4e9]))?;
    let head = header(&args.echo(), seed);
    io::write_dataset(
        &out,
        &head,
        &design.obs,
        &rep.y,
        if with_truth { Some(&rep.u) } else { None },
    )?;
    if let Some(tpath) = args.path_opt("targets-out") {
        io::write_targets(
            &tpath,
            &head,
            &design.targets,
            if with_truth { Some(&rep.x_star) } else { None },
        )?;
    }
    Ok(())
}

fn fit_from_args(
    args: &Args,
    family: KernelFamily,
    err: &ErrorModel,
    locations: &Locations,
    y: &[f64],
    seed: u64,
) -> Result<geokrige_core::estimation::FitResult, CliError> {
    let pbox = param_box_from_args(args, family)?;
    let cfg = FitConfig {
        n_restarts: args.usize_opt("restarts", 8)?,
        kernel_n_mc: args.usize_opt("n-mc", geokrige_core::kernels::DEFAULT_KERNEL_MC)?,
        seed: derive_seed(seed, &[0xf17]),
        ..FitConfig::default()
    };
    Ok(fit_mple(family, err, locations, y, &pbox, &cfg)?)
}

fn param_box_from_args(args: &Args, family: KernelFamily) -> Result<ParamBox, CliError> {
    let mut pbox = match family {
        KernelFamily::SquaredExponential => ParamBox::table1_default(),
        KernelFamily::ExponentialGeodesic => ParamBox::geodesic_default(),
    };
    for (key, slot) in [
        ("box-tau2", &mut pbox.tau2),
        ("box-beta", &mut pbox.beta),
        ("box-sigma2-x", &mut pbox.sigma2_x),
    ] {
        if let Some(v) = args.get(key) {
            let (lo, hi) = v
                .split_once(':')
                .ok_or_else(|| CliError::Usage(format!("--{key}: expected lo:hi, got `{v}`")))?;
            let lo: f64 = lo
                .parse()
                .map_err(|_| CliError::Usage(format!("--{key}: `{lo}` is not a number")))?;
            let hi: f64 = hi
                .parse()
                .map_err(|_| CliError::Usage(format!("--{key}: `{hi}` is not a number")))?;
            if !(hi > lo) {
                return Err(CliError::Usage(format!("--{key}: need lo < hi")));
            }
            *slot = (lo, hi);
        }
    }
    Ok(pbox)
}

fn cmd_krige(args: &Args) -> Result<(), CliError> {
    let seed = args.seed()?;
    let input = args.path_req("input")?;
    let ds = io::read_dataset(&input)?;
    let targets = io::read_targets(&args.path_req("targets")?)?;
    if targets.dim() != ds.locations.dim() {
        return Err(CliError::Usage(format!(
            "targets dimension {} differs from dataset dimension {}",
            targets.dim(),
            ds.locations.dim()
        )));
    }
    let method = match args.get("method") {
        Some("kale") => Method::Kale,
        Some("kile") => Method::Kile,
        other => {
            return Err(CliError::Usage(format!(
                "--method must be kale or kile, got `{}`",
                other.unwrap_or("<missing>")
            )))
        }
    };
    let err = error_model(args, ds.locations.dim())?;
    let spec = if args.has_flag("fit") {
        // KILE's analyst ignores the errors when estimating too
        let fit_err = if method == Method::Kile {
            ErrorModel::none(ds.locations.dim())
        } else {
            err
        };
        fit_from_args(
            args,
            KernelFamily::SquaredExponential,
            &fit_err,
            &ds.locations,
            &ds.y,
            seed,
        )?
        .spec()
    } else {
        spec_from_flags(args, KernelFamily::SquaredExponential)?
    };
    let alpha = args.f64_opt("alpha", 0.05)?;
    let with_intervals = args.has_flag("intervals");
    let mc = McConfig {
        n_mc: args.usize_opt("n-mc", geokrige_core::kernels::DEFAULT_KERNEL_MC)?,
        seed: derive_seed(seed, &[0xabc]),
    };
    let cov = build_cov_matrices(&spec, &err, &ds.locations, &targets, &mc)?;
    let (result, intervals) = match method {
        Method::Kale => {
            let r = kriging::kale_predict(&cov, &ds.y)?;
            let iv = if with_intervals {
                let cdfs = kriging::kale_error_cdfs(
                    &spec,
                    &err,
                    &ds.locations,
                    &targets,
                    args.usize_opt("cdf-mc", kriging::DEFAULT_CDF_MC)?,
                    derive_seed(seed, &[0xcdf]),
                    None,
                )?;
                let mut iv = Vec::with_capacity(targets.len());
                for (j, cdf) in cdfs.iter().enumerate() {
                    iv.push(kriging::kale_interval(cdf, r.mean[j], alpha)?);
                }
                Some(iv)
            } else {
                None
            };
            (r, iv)
        }
        Method::Kile => {
            let r = kriging::kile_predict(&cov, &ds.y, with_intervals.then_some(alpha))?;
            let iv = r.interval.clone();
            (r, iv)
        }
        Method::Hmc => unreachable!(),
    };
    let mut out = header(&args.echo(), seed);
    let p = targets.dim();
    for d in 0..p {
        out.push_str(&format!("x{},", d + 1));
    }
    out.push_str(if intervals.is_some() {
        "mean,mse,lo,hi\n"
    } else {
        "mean,mse\n"
    });
    for j in 0..targets.len() {
        for d in 0..p {
            out.push_str(&format!("{},", targets.point(j)[d]));
        }
        out.push_str(&format!("{},{}", result.mean[j], result.mse[j]));
        if let Some(iv) = &intervals {
            out.push_str(&format!(",{},{}", iv[j].0, iv[j].1));
        }
        out.push('\n');
    }
    io::write_atomic(&args.path_req("out")?, out.as_bytes())?;
    Ok(())
}

fn cmd_fit(args: &Args) -> Result<(), CliError> {
    let seed = args.seed()?;
    let ds = io::read_dataset(&args.path_req("input")?)?;
    let family = match args.get("family").unwrap_or("sqexp") {
        "sqexp" => KernelFamily::SquaredExponential,
        "geodesic" => KernelFamily::ExponentialGeodesic,
        other => {
            return Err(CliError::Usage(format!(
                "--family must be sqexp or geodesic, got `{other}`"
            )))
        }
    };
    let sigma2_u = args.f64_req("sigma2-u")?;
    let err = match (family, sigma2_u > 0.0) {
        (_, false) => ErrorModel::none(ds.locations.dim()),
        (KernelFamily::SquaredExponential, true) => {
            ErrorModel::iid_gaussian(sigma2_u, ds.locations.dim())
        }
        (KernelFamily::ExponentialGeodesic, true) => ErrorModel::geodesic_gaussian(sigma2_u),
    };
    let fit = fit_from_args(args, family, &err, &ds.locations, &ds.y, seed)?;
    let mut json = JsonObject::new()
        .num("tau2", fit.theta[0])
        .num("beta", fit.theta[1])
        .num("sigma2_x", fit.theta[2])
        .num("log_pseudolik", fit.log_pseudolik)
        .int("n_restarts", fit.n_restarts as i64)
        .str("converged", if fit.converged { "true" } else { "false" })
        .num("sigma2_u", sigma2_u);
    if args.has_flag("godambe") {
        let gm = godambe(
            &fit.spec(),
            &err,
            &ds.locations,
            &[ThetaParam::Tau2, ThetaParam::Beta, ThetaParam::Sigma2X],
            args.usize_opt("godambe-mc", 2000)?,
            derive_seed(seed, &[0x90d]),
        )?;
        let flat = |m: &geokrige_core::linalg::Mat| -> String {
            let rows: Vec<String> = (0..m.rows())
                .map(|i| {
                    let cols: Vec<String> =
                        (0..m.cols()).map(|j| format!("{}", m.get(i, j))).collect();
                    format!("[{}]", cols.join(", "))
                })
                .collect();
            format!("[{}]", rows.join(", "))
        };
        json = json
            .raw("godambe_g", &flat(&gm.g))
            .raw("godambe_h", &flat(&gm.h))
            .raw("godambe_info", &flat(&gm.info))
            .str(
                "godambe_pseudo_inverse",
                if gm.pseudo_inverse_used { "true" } else { "false" },
            );
    }
    let body = json.finish();
    match args.path_opt("out") {
        Some(p) => io::write_atomic(&p, body.as_bytes())?,
        None => print!("{body}"),
    }
    Ok(())
}

fn cmd_hmc(args: &Args) -> Result<(), CliError> {
    let seed = args.seed()?;
    let ds = io::read_dataset(&args.path_req("input")?)?;
    let targets = io::read_targets(&args.path_req("targets")?)?;
    let err = error_model(args, ds.locations.dim())?;
    let run_cfg = HmcRunConfig {
        hmc: HmcConfig {
            n_chains: args.usize_opt("chains", 4)?,
            n_warmup: args.usize_opt("warmup", 1000)?,
            n_draws: args.usize_opt("draws", 500)?,
            leapfrog_steps: args.usize_opt("leapfrog", 16)?,
            target_accept: args.f64_opt("accept", 0.8)?,
            seed: derive_seed(seed, &[0x44c]),
            ..HmcConfig::default()
        },
        alpha: args.f64_opt("alpha", 0.05)?,
        kappa: args.f64_opt("kappa", 0.0)?,
        store_u_draws: false,
        compute_ess: true,
        init_scale: 2.0,
    };
    let model = if args.has_flag("sample-params") {
        GpModel::with_sampled_params(
            KernelFamily::SquaredExponential,
            err,
            ds.locations.clone(),
            ds.y.clone(),
            targets.clone(),
            param_box_from_args(args, KernelFamily::SquaredExponential)?,
        )?
    } else {
        let spec = spec_from_flags(args, KernelFamily::SquaredExponential)?;
        GpModel::with_known_params(&spec, &err, ds.locations.clone(), ds.y.clone(), targets.clone())?
    };
    // chains in parallel, merged in chain order (identical to a serial run)
    let summary = if model_dim(&model) == 0 {
        geokrige_core::posterior::run_hmc(&model, &run_cfg)?
    } else {
        let inits = plan_inits(&model, &run_cfg)?;
        let chains: Vec<_> = inits
            .par_iter()
            .enumerate()
            .map(|(c, init)| run_single_chain(&model, &run_cfg, c, init))
            .collect();
        summarize(&model, &run_cfg, &chains)?
    };

    let head = header(&args.echo(), seed);
    let p = targets.dim();
    let mut out = head.clone();
    for d in 0..p {
        out.push_str(&format!("x{},", d + 1));
    }
    out.push_str("mean,var,lo,hi\n");
    for j in 0..targets.len() {
        for d in 0..p {
            out.push_str(&format!("{},", targets.point(j)[d]));
        }
        out.push_str(&format!(
            "{},{},{},{}\n",
            summary.predictive_mean[j],
            summary.predictive_var[j],
            summary.predictive_interval[j].0,
            summary.predictive_interval[j].1
        ));
    }
    io::write_atomic(&args.path_req("out")?, out.as_bytes())?;

    if let Some(dpath) = args.path_opt("draws-out") {
        let mut dout = head.clone();
        dout.push_str("chain,draw");
        for name in &summary.param_names {
            dout.push_str(&format!(",{name}"));
        }
        for j in 0..targets.len() {
            dout.push_str(&format!(",xstar{}", j + 1));
        }
        dout.push('\n');
        let per_chain = run_cfg.hmc.n_draws;
        let m = targets.len();
        let total = summary.predictive_draws.len() / m.max(1);
        for t in 0..total {
            let chain = if per_chain > 0 { t / per_chain } else { 0 };
            let idx = if per_chain > 0 { t % per_chain } else { t };
            dout.push_str(&format!("{chain},{idx}"));
            for pd in &summary.param_draws {
                dout.push_str(&format!(",{}", pd[t]));
            }
            for j in 0..m {
                dout.push_str(&format!(",{}", summary.predictive_draws[t * m + j]));
            }
            dout.push('\n');
        }
        io::write_atomic(&dpath, dout.as_bytes())?;
    }

    if let Some(jpath) = args.path_opt("diag-out") {
        let max_rhat = summary.rhat.iter().cloned().fold(f64::NAN, f64::max);
        let min_ess = summary
            .ess
            .iter()
            .cloned()
            .filter(|e| e.is_finite())
            .fold(f64::INFINITY, f64::min);
        let mut json = JsonObject::new()
            .num("accept_rate", summary.accept_rate)
            .int("divergences", summary.divergences as i64)
            .arr("step_sizes", &summary.step_sizes)
            .num("max_rhat", max_rhat)
            .num(
                "min_ess",
                if min_ess.is_finite() { min_ess } else { f64::NAN },
            )
            .arr("rhat", &summary.rhat);
        if let Some(we) = summary.weight_ess {
            json = json.num("weight_ess", we);
        }
        let warn_items: Vec<String> = summary
            .warnings
            .iter()
            .map(|w| format!("\"{}\"", w.replace('"', "'")))
            .collect();
        json = json.raw("warnings", &format!("[{}]", warn_items.join(", ")));
        io::write_atomic(&jpath, json.finish().as_bytes())?;
    }
    Ok(())
}

fn model_dim(model: &GpModel) -> usize {
    use geokrige_core::sampler::LogDensity;
    model.dim()
}

fn cmd_sweep(args: &Args) -> Result<(), CliError> {
    let seed = args.seed()?;
    let reps = args.usize_opt("reps", 100)?;
    let params_known = match args.get("params").unwrap_or("known") {
        "known" => true,
        "estimated" => false,
        other => {
            return Err(CliError::Usage(format!(
                "--params must be known or estimated, got `{other}`"
            )))
        }
    };
    let betas = args.f64_list("betas", &TABLE1_BETA)?;
    let sxs = args.f64_list("sigma2-xs", &TABLE1_SIGMA2_X)?;
    let sus = args.f64_list("sigma2-us", &TABLE1_SIGMA2_U)?;
    let methods: Vec<Method> = args
        .get("methods")
        .unwrap_or("kale,kile,hmc")
        .split(',')
        .map(|m| match m.trim() {
            "kale" => Ok(Method::Kale),
            "kile" => Ok(Method::Kile),
            "hmc" => Ok(Method::Hmc),
            other => Err(CliError::Usage(format!("unknown method `{other}`"))),
        })
        .collect::<Result<_, _>>()?;
    let mut cells = Vec::new();
    for &beta in &betas {
        for &sigma2_x in &sxs {
            for &sigma2_u in &sus {
                cells.push(SweepCell {
                    beta,
                    sigma2_x,
                    sigma2_u,
                    params_known,
                    n_reps: reps,
                });
            }
        }
    }
    let cfg = SweepConfig {
        cell: CellRunConfig {
            methods,
            n_chains: args.usize_opt("chains", 2)?,
            n_warmup: args.usize_opt("warmup", 500)?,
            n_draws: args.usize_opt("draws", 1000)?,
            leapfrog_steps: args.usize_opt("leapfrog", 16)?,
            target_accept: args.f64_opt("accept", 0.8)?,
            alpha: args.f64_opt("alpha", 0.05)?,
            ..CellRunConfig::default()
        },
        seed,
        checkpoint_dir: args.path_opt("checkpoint-dir"),
    };
    let design = make_design(derive_seed(seed, &[0xde5]));
    let outcomes = run_sweep(&cells, &design, &cfg)?;
    let head = header(&args.echo(), seed);
    io::write_atomic(&args.path_req("out")?, results_csv(&head, &outcomes).as_bytes())?;
    if let Some(tp) = args.path_opt("timings-out") {
        io::write_atomic(&tp, timings_csv(&head, &outcomes).as_bytes())?;
    }
    Ok(())
}

fn cmd_geo(args: &Args) -> Result<(), CliError> {
    let seed = args.seed()?;
    let head = header(&args.echo(), seed);
    if args.has_flag("synthetic") {
        let cfg = SyntheticGeoConfig {
            spec: KernelSpec::exponential_geodesic(
                args.f64_opt("tau2", 1.0)?,
                args.f64_opt("beta", 4e-4)?,
                args.f64_opt("sigma2-x", 0.05)?,
            ),
            sigma2_u: args.f64_opt("sigma2-u", 7500.0)?,
            grid_step: args.f64_opt("grid-step", 5.0)?,
            lat_range: parse_range(args, "lat-range", (2.5, 87.5))?,
            lon_range: parse_range(args, "lon-range", (-177.5, 180.0))?,
            observed_fraction: args.f64_opt("observed-frac", 0.85)?,
        };
        let synth = synthetic_dataset(&cfg, derive_seed(seed, &[0x9e0]))?;
        io::write_geo_csv(&args.path_req("out")?, &head, &synth.data)?;
        if let Some(tpath) = args.path_opt("targets-out") {
            let mut out = head.clone();
            out.push_str("lon,lat\n");
            for p in &synth.targets {
                out.push_str(&format!("{},{}\n", p.lon, p.lat));
            }
            io::write_atomic(&tpath, out.as_bytes())?;
        }
        if let Some(tpath) = args.path_opt("truth-out") {
            let mut out = head.clone();
            out.push_str("lon,lat,xstar\n");
            for (p, x) in synth.targets.iter().zip(&synth.x_targets) {
                out.push_str(&format!("{},{},{}\n", p.lon, p.lat, x));
            }
            io::write_atomic(&tpath, out.as_bytes())?;
        }
        return Ok(());
    }

    let mut data = io::read_geo_csv(&args.path_req("input")?)?;
    if args.has_flag("center") {
        data.center();
    }
    let targets = io::read_geo_targets(&args.path_req("targets")?)?;
    let mode = match args.get("mode") {
        Some("kale") => GeoMode::Kale,
        Some("kile") => GeoMode::Kile,
        Some("hmc") => GeoMode::Hmc,
        other => {
            return Err(CliError::Usage(format!(
                "--mode must be kale, kile or hmc, got `{}`",
                other.unwrap_or("<missing>")
            )))
        }
    };
    let sigma2_u = args.f64_opt("sigma2-u", 7500.0)?;
    let cfg = GeoConfig {
        kernel_n_mc: args.usize_opt("n-mc", geokrige_core::kernels::DEFAULT_KERNEL_MC)?,
        n_restarts: args.usize_opt("restarts", 8)?,
        alpha: args.f64_opt("alpha", 0.05)?,
        hmc: HmcRunConfig {
            hmc: HmcConfig {
                n_chains: args.usize_opt("chains", 4)?,
                n_warmup: args.usize_opt("warmup", 1000)?,
                n_draws: args.usize_opt("draws", 500)?,
                leapfrog_steps: args.usize_opt("leapfrog", 16)?,
                target_accept: args.f64_opt("accept", 0.8)?,
                seed: derive_seed(seed, &[0x44c]),
                ..HmcConfig::default()
            },
            alpha: args.f64_opt("alpha", 0.05)?,
            kappa: args.f64_opt("kappa", 0.0)?,
            store_u_draws: false,
            compute_ess: false,
            init_scale: 2.0,
        },
        seed: derive_seed(seed, &[0x9e0]),
        ..GeoConfig::default()
    };
    let start = Instant::now();
    let result = geo_interpolate(&data, &targets, sigma2_u, mode, &cfg)?;
    let runtime = start.elapsed().as_secs_f64();
    io::write_geo_predictions(&args.path_req("out")?, &head, &result.predictions)?;
    if let Some(ppath) = args.path_opt("params-out") {
        let json = JsonObject::new()
            .num("tau2", result.params.tau2)
            .num("beta", result.params.beta)
            .num("sigma2_x", result.params.sigma2_x)
            .str("mode", result.params.mode.name())
            .num("sigma2_u", result.params.sigma2_u)
            .num("runtime_s", runtime)
            .finish();
        io::write_atomic(&ppath, json.as_bytes())?;
    }
    Ok(())
}

fn parse_range(args: &Args, key: &str, default: (f64, f64)) -> Result<(f64, f64), CliError> {
    match args.get(key) {
        None => Ok(default),
        Some(v) => {
            let (lo, hi) = v
                .split_once(':')
                .ok_or_else(|| CliError::Usage(format!("--{key}: expected lo:hi, got `{v}`")))?;
            let lo: f64 = lo
                .parse()
                .map_err(|_| CliError::Usage(format!("--{key}: `{lo}` is not a number")))?;
            let hi: f64 = hi
                .parse()
                .map_err(|_| CliError::Usage(format!("--{key}: `{hi}` is not a number")))?;
            Ok((lo, hi))
        }
    }
}
