//! Command-line front end: reproducible runs of the moment engine, the
//! transforms, the random-matrix model and the subspace criteria, with CSV
//! or JSON output carrying the full resolved configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use sha2::{Digest, Sha256};

use freecirc::hyperinvariant::{
    criterion_report, quasinilpotence_certificate, verify_support_conditions, CriterionConfig,
    MonteCarlo,
};
use freecirc::matrix_model::{
    configure_blas, eigenvalues, empirical_zstarz_moments, sample, singular_values,
};
use freecirc::moment_engine::{moment, trace_moment, StarSymbol, StarWord};
use freecirc::transforms::{cauchy_scalar, spectral_density};
use freecirc::finite_algebra::{
    self, commutant_basis, generation_with_halving, invariance_witness, jordan_similarity_6x6,
    projection_onto_columns, star_algebra_dimension,
};
use freecirc::{BlockDensity, CovariancePair, Error, Preset, StepFunction};

const DEFAULT_SEED: u64 = 1729;

#[derive(Parser)]
#[command(name = "freecirc", version, about = "operator-valued circular element toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate exact *-moments of a word against a block density.
    Moments(MomentsArgs),
    /// Cauchy-transform values or a spectral-density scan.
    Transform(TransformArgs),
    /// Monte Carlo statistics of the random-matrix model.
    Simulate(SimulateArgs),
    /// Decay table and verdict for the subspace criterion.
    Criterion(CriterionArgs),
    /// Quasinilpotence certificate from band restrictions.
    Quasinil(QuasinilArgs),
    /// Finite-dimensional algebra examples and witnesses.
    Algebra(AlgebraArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetName {
    Square,
    #[value(alias = "upper_triangle")]
    UpperTriangle,
    Band,
    #[value(alias = "corner_box")]
    CornerBox,
}

#[derive(Args)]
struct DensityArgs {
    /// Named density preset.
    #[arg(long, value_enum)]
    preset: Option<PresetName>,
    /// Grid size for presets.
    #[arg(long, default_value_t = 8)]
    m: usize,
    /// Band width for the band preset.
    #[arg(long, default_value_t = 0.25)]
    band_eps: f64,
    /// JSON file with {"m": .., "H": [[..]]}.
    #[arg(long, alias = "density")]
    density_file: Option<PathBuf>,
}

#[derive(Args)]
struct OutputArgs {
    /// Output path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct MomentsArgs {
    #[command(flatten)]
    density: DensityArgs,
    #[command(flatten)]
    out: OutputArgs,
    /// Word such as "z z*" or "z b1 z* b2"; named coefficients resolve
    /// through --coeffs.
    #[arg(long)]
    word: String,
    /// JSON file of named coefficients: {"b1": [..]} (real) or
    /// {"b1": [[re, im], ..]}.
    #[arg(long)]
    coeffs: Option<PathBuf>,
}

#[derive(Args)]
struct TransformArgs {
    #[command(flatten)]
    density: DensityArgs,
    #[command(flatten)]
    out: OutputArgs,
    /// Evaluation points "a+bi", repeatable.
    #[arg(long)]
    zeta: Vec<String>,
    /// Density scan grid "x0:x1:steps".
    #[arg(long)]
    density_grid: Option<String>,
    /// Stieltjes smoothing for the density scan.
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum SimStat {
    Moments,
    Singular,
    Eigs,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    density: DensityArgs,
    #[command(flatten)]
    out: OutputArgs,
    #[arg(long, alias = "N", default_value_t = 512)]
    n_dim: usize,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Highest moment order.
    #[arg(long, default_value_t = 3)]
    powers: usize,
    #[arg(long, value_enum, default_value_t = SimStat::Moments)]
    stat: SimStat,
}

#[derive(Args)]
struct CriterionArgs {
    #[command(flatten)]
    density: DensityArgs,
    #[command(flatten)]
    out: OutputArgs,
    #[arg(long)]
    c: f64,
    #[arg(long)]
    d: f64,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    #[arg(long)]
    a: f64,
    #[arg(long = "big-r", alias = "R", default_value_t = 1.0)]
    big_r: f64,
    #[arg(long)]
    theta: f64,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 8)]
    n_max: usize,
    #[arg(long, alias = "N", default_value_t = 1024)]
    n_dim: usize,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct QuasinilArgs {
    #[command(flatten)]
    density: DensityArgs,
    #[command(flatten)]
    out: OutputArgs,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Comma-separated band widths; overrides --eps-pow2.
    #[arg(long)]
    eps: Option<String>,
    /// Use the grid 2^-1 … 2^-k.
    #[arg(long, default_value_t = 6)]
    eps_pow2: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgebraExample {
    #[value(name = "3x3")]
    ThreeByThree,
    #[value(name = "6x6")]
    SixBySix,
    #[value(name = "10x10")]
    TenByTen,
    Irreduc,
}

#[derive(Args)]
struct AlgebraArgs {
    #[command(flatten)]
    out: OutputArgs,
    #[arg(long, value_enum)]
    example: AlgebraExample,
    /// Corner entry for the banded examples.
    #[arg(long, default_value_t = 0.01)]
    a: f64,
    #[arg(long, default_value_t = finite_algebra::DEFAULT_TOL)]
    tol: f64,
    /// Dimensions for the generic banded matrix.
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    p: usize,
    /// Band entries, comma separated.
    #[arg(long)]
    b: Option<String>,
}

fn main() -> ExitCode {
    let threads = std::env::var("FREECIRC_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok());
    configure_blas(threads);
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Moments(args) => run_moments(args),
        Command::Transform(args) => run_transform(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Criterion(args) => run_criterion(args),
        Command::Quasinil(args) => run_quasinil(args),
        Command::Algebra(args) => run_algebra(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_numerical() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// density / word / output plumbing
// ---------------------------------------------------------------------------

/// Accepts either the explicit schema {"m", "H"} or a preset descriptor
/// {"preset", "m", "params"}.
fn density_from_json(text: &str) -> Result<BlockDensity, Error> {
    if let Ok(density) = serde_json::from_str::<BlockDensity>(text) {
        return Ok(density);
    }
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::InvalidParameter(format!("parsing density: {e}")))?;
    let name = value
        .get("preset")
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::InvalidParameter("density JSON has neither H nor preset".into()))?;
    let m = value
        .get("m")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::InvalidParameter("preset descriptor needs m".into()))?
        as usize;
    let params = value.get("params").cloned().unwrap_or(serde_json::json!({}));
    let getf = |key: &str| params.get(key).and_then(|v| v.as_f64());
    let preset = match name {
        "square" => Preset::Square,
        "upper_triangle" => Preset::UpperTriangle,
        "band" => Preset::Band {
            eps: getf("eps")
                .ok_or_else(|| Error::InvalidParameter("band preset needs params.eps".into()))?,
        },
        "corner_box" => Preset::CornerBox {
            c: getf("c").ok_or_else(|| Error::InvalidParameter("corner_box needs c".into()))?,
            d: getf("d").ok_or_else(|| Error::InvalidParameter("corner_box needs d".into()))?,
            r: getf("r").unwrap_or(1.0),
            a: getf("a").ok_or_else(|| Error::InvalidParameter("corner_box needs a".into()))?,
            big_r: getf("R").unwrap_or(1.0),
        },
        other => {
            return Err(Error::InvalidParameter(format!("unknown preset '{other}'")))
        }
    };
    BlockDensity::preset(&preset, m)
}

fn load_density(args: &DensityArgs) -> Result<(BlockDensity, serde_json::Value), Error> {
    if let Some(path) = &args.density_file {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidParameter(format!("reading {}: {e}", path.display())))?;
        let density = density_from_json(&text)?;
        let cfg = serde_json::json!({"density_file": path.display().to_string()});
        return Ok((density, cfg));
    }
    let preset = args.preset.unwrap_or(PresetName::Square);
    let (p, cfg) = match preset {
        PresetName::Square => (Preset::Square, serde_json::json!({"preset": "square", "m": args.m})),
        PresetName::UpperTriangle => (
            Preset::UpperTriangle,
            serde_json::json!({"preset": "upper_triangle", "m": args.m}),
        ),
        PresetName::Band => (
            Preset::Band { eps: args.band_eps },
            serde_json::json!({"preset": "band", "m": args.m, "params": {"eps": args.band_eps}}),
        ),
        PresetName::CornerBox => {
            return Err(Error::InvalidParameter(
                "corner-box needs the criterion flags; use `criterion` or a density file".into(),
            ))
        }
    };
    Ok((BlockDensity::preset(&p, args.m)?, cfg))
}

fn parse_complex(text: &str) -> Result<Complex64, Error> {
    let t = text.trim().replace(' ', "");
    let err = || Error::InvalidParameter(format!("cannot parse complex number '{text}'"));
    if let Some(stripped) = t.strip_suffix('i') {
        // forms: "bi", "a+bi", "a-bi"
        let mut split_at = None;
        for (idx, ch) in stripped.char_indices().skip(1) {
            if ch == '+' || ch == '-' {
                split_at = Some(idx);
            }
        }
        match split_at {
            Some(idx) => {
                let re: f64 = stripped[..idx].parse().map_err(|_| err())?;
                let im_text = &stripped[idx..];
                let im: f64 = if im_text == "+" || im_text == "-" {
                    format!("{im_text}1").parse().map_err(|_| err())?
                } else {
                    im_text.parse().map_err(|_| err())?
                };
                Ok(Complex64::new(re, im))
            }
            None => {
                let im: f64 = if stripped.is_empty() { 1.0 } else { stripped.parse().map_err(|_| err())? };
                Ok(Complex64::new(0.0, im))
            }
        }
    } else {
        Ok(Complex64::new(t.parse().map_err(|_| err())?, 0.0))
    }
}

fn parse_word(
    text: &str,
    m: usize,
    coeffs: &Option<PathBuf>,
) -> Result<StarWord, Error> {
    let table: serde_json::Value = match coeffs {
        Some(path) => serde_json::from_str(
            &fs::read_to_string(path)
                .map_err(|e| Error::InvalidParameter(format!("reading coeffs: {e}")))?,
        )
        .map_err(|e| Error::InvalidParameter(format!("parsing coeffs: {e}")))?,
        None => serde_json::json!({}),
    };
    let lookup = |name: &str| -> Result<StepFunction, Error> {
        let entry = table
            .get(name)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown coefficient '{name}'")))?;
        let arr = entry
            .as_array()
            .ok_or_else(|| Error::InvalidParameter(format!("coefficient '{name}' is not an array")))?;
        if arr.len() != m {
            return Err(Error::InvalidParameter(format!(
                "coefficient '{name}' has {} cells, expected {m}",
                arr.len()
            )));
        }
        let values: Result<Vec<Complex64>, Error> = arr
            .iter()
            .map(|v| match v {
                serde_json::Value::Number(x) => {
                    Ok(Complex64::new(x.as_f64().unwrap_or(f64::NAN), 0.0))
                }
                serde_json::Value::Array(pair) if pair.len() == 2 => Ok(Complex64::new(
                    pair[0].as_f64().unwrap_or(f64::NAN),
                    pair[1].as_f64().unwrap_or(f64::NAN),
                )),
                _ => Err(Error::InvalidParameter(format!(
                    "coefficient '{name}' entries must be numbers or [re, im] pairs"
                ))),
            })
            .collect();
        StepFunction::new(values?)
    };

    let mut leading = None;
    let mut letters: Vec<(StarSymbol, StepFunction)> = Vec::new();
    for token in text.split_whitespace() {
        match token {
            "z" => letters.push((StarSymbol::Z, StepFunction::one(m))),
            "z*" => letters.push((StarSymbol::ZStar, StepFunction::one(m))),
            name => {
                let coeff = lookup(name)?;
                match letters.last_mut() {
                    Some(last) => last.1 = coeff,
                    None if leading.is_none() => leading = Some(coeff),
                    None => {
                        return Err(Error::InvalidParameter(
                            "two leading coefficients in a row".into(),
                        ))
                    }
                }
            }
        }
    }
    Ok(StarWord { leading, letters })
}

struct RunMeta {
    config: serde_json::Value,
}

impl RunMeta {
    fn new(config: serde_json::Value) -> Self {
        RunMeta { config }
    }

    fn config_hash(&self) -> String {
        let canonical = self.config.to_string();
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        format!("{:x}", hasher.finalize())
    }

    fn timestamp() -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    }

    fn csv_header(&self) -> String {
        format!(
            "# freecirc v{}\n# generated_at: {}\n# config: {}\n# config_hash: {}\n",
            env!("CARGO_PKG_VERSION"),
            Self::timestamp(),
            self.config,
            self.config_hash()
        )
    }

    fn json_meta(&self) -> serde_json::Value {
        serde_json::json!({
            "version": env!("CARGO_PKG_VERSION"),
            "generated_at": Self::timestamp(),
            "config": self.config,
            "config_hash": self.config_hash(),
        })
    }
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn complex_json(z: Complex64) -> serde_json::Value {
    serde_json::json!({"re": z.re, "im": z.im})
}

fn emit(out: &OutputArgs, text: String) -> Result<(), Error> {
    match &out.output {
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::InvalidParameter(format!("writing {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

fn run_moments(args: MomentsArgs) -> Result<(), Error> {
    let (density, density_cfg) = load_density(&args.density)?;
    let cov = CovariancePair::tracial(&density);
    let word = parse_word(&args.word, density.m(), &args.coeffs)?;
    let value = moment(&cov, &word)?;
    let trace = value.trace();
    let meta = RunMeta::new(serde_json::json!({
        "subcommand": "moments",
        "density": density_cfg,
        "word": args.word,
    }));
    let text = match args.out.format {
        Format::Csv => {
            let mut s = meta.csv_header();
            s.push_str(&format!("# trace: {},{}\n", fmt17(trace.re), fmt17(trace.im)));
            s.push_str("cell,left_edge,re,im\n");
            for (i, v) in value.values().iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{i},{},{},{}",
                    fmt17(i as f64 / density.m() as f64),
                    fmt17(v.re),
                    fmt17(v.im)
                );
            }
            s
        }
        Format::Json => serde_json::to_string_pretty(&serde_json::json!({
            "meta": meta.json_meta(),
            "values": value.values().iter().map(|&z| complex_json(z)).collect::<Vec<_>>(),
            "trace": complex_json(trace),
        }))
        .unwrap()
            + "\n",
    };
    emit(&args.out, text)
}

fn run_transform(args: TransformArgs) -> Result<(), Error> {
    let (density, density_cfg) = load_density(&args.density)?;
    let cov = CovariancePair::tracial(&density);
    if let Some(grid) = &args.density_grid {
        let parts: Vec<&str> = grid.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidParameter("density grid must be x0:x1:steps".into()));
        }
        let x0: f64 = parts[0].parse().map_err(|_| Error::InvalidParameter("bad x0".into()))?;
        let x1: f64 = parts[1].parse().map_err(|_| Error::InvalidParameter("bad x1".into()))?;
        let steps: usize =
            parts[2].parse().map_err(|_| Error::InvalidParameter("bad step count".into()))?;
        if steps == 0 || x1 <= x0 {
            return Err(Error::InvalidParameter("empty density grid".into()));
        }
        let xs: Vec<f64> = (0..steps)
            .map(|i| x0 + (x1 - x0) * (i as f64 + 0.5) / steps as f64)
            .collect();
        let rows = spectral_density(&cov, &xs, args.epsilon)?;
        let meta = RunMeta::new(serde_json::json!({
            "subcommand": "transform",
            "density": density_cfg,
            "grid": grid,
            "epsilon": args.epsilon,
        }));
        let text = match args.out.format {
            Format::Csv => {
                let mut s = meta.csv_header();
                s.push_str("x,density\n");
                for (x, d) in rows {
                    let _ = writeln!(s, "{},{}", fmt17(x), fmt17(d));
                }
                s
            }
            Format::Json => serde_json::to_string_pretty(&serde_json::json!({
                "meta": meta.json_meta(),
                "density": rows.iter().map(|(x, d)| serde_json::json!([x, d])).collect::<Vec<_>>(),
            }))
            .unwrap()
                + "\n",
        };
        return emit(&args.out, text);
    }
    if args.zeta.is_empty() {
        return Err(Error::InvalidParameter(
            "transform needs --zeta or --density-grid".into(),
        ));
    }
    let zetas: Result<Vec<Complex64>, Error> = args.zeta.iter().map(|s| parse_complex(s)).collect();
    let zetas = zetas?;
    let values: Result<Vec<Complex64>, Error> =
        zetas.iter().map(|&z| cauchy_scalar(&cov, z)).collect();
    let values = values?;
    let meta = RunMeta::new(serde_json::json!({
        "subcommand": "transform",
        "density": density_cfg,
        "zeta": args.zeta,
    }));
    let text = match args.out.format {
        Format::Csv => {
            let mut s = meta.csv_header();
            s.push_str("zeta_re,zeta_im,g_re,g_im\n");
            for (z, g) in zetas.iter().zip(&values) {
                let _ = writeln!(
                    s,
                    "{},{},{},{}",
                    fmt17(z.re),
                    fmt17(z.im),
                    fmt17(g.re),
                    fmt17(g.im)
                );
            }
            s
        }
        Format::Json => serde_json::to_string_pretty(&serde_json::json!({
            "meta": meta.json_meta(),
            "values": zetas
                .iter()
                .zip(&values)
                .map(|(z, g)| serde_json::json!({"zeta": complex_json(*z), "g": complex_json(*g)}))
                .collect::<Vec<_>>(),
        }))
        .unwrap()
            + "\n",
    };
    emit(&args.out, text)
}

fn run_simulate(args: SimulateArgs) -> Result<(), Error> {
    let (density, density_cfg) = load_density(&args.density)?;
    let meta = RunMeta::new(serde_json::json!({
        "subcommand": "simulate",
        "density": density_cfg,
        "n_dim": args.n_dim,
        "trials": args.trials,
        "seed": args.seed,
        "powers": args.powers,
        "stat": match args.stat {
            SimStat::Moments => "moments",
            SimStat::Singular => "singular",
            SimStat::Eigs => "eigs",
        },
    }));
    let text = match args.stat {
        SimStat::Moments => {
            let cov = CovariancePair::tracial(&density);
            let mut acc = vec![0.0; args.powers];
            for t in 0..args.trials {
                let s = sample(&density, args.n_dim, args.seed + t as u64)?;
                for (k, v) in empirical_zstarz_moments(&s, args.powers).iter().enumerate() {
                    acc[k] += v / args.trials as f64;
                }
            }
            let mut s = meta.csv_header();
            s.push_str("n,empirical,exact,rel_error\n");
            for n in 1..=args.powers {
                let exact =
                    trace_moment(&cov, &StarWord::zstar_z_power(density.m(), n))?.re;
                let rel = if exact != 0.0 { (acc[n - 1] - exact).abs() / exact.abs() } else { 0.0 };
                let _ = writeln!(
                    s,
                    "{n},{},{},{}",
                    fmt17(acc[n - 1]),
                    fmt17(exact),
                    fmt17(rel)
                );
            }
            if matches!(args.out.format, Format::Json) {
                let rows: Vec<serde_json::Value> = (1..=args.powers)
                    .map(|n| {
                        let exact = trace_moment(&cov, &StarWord::zstar_z_power(density.m(), n))
                            .map(|t| t.re)
                            .unwrap_or(f64::NAN);
                        serde_json::json!({"n": n, "empirical": acc[n - 1], "exact": exact})
                    })
                    .collect();
                serde_json::to_string_pretty(&serde_json::json!({
                    "meta": meta.json_meta(),
                    "moments": rows,
                }))
                .unwrap()
                    + "\n"
            } else {
                s
            }
        }
        SimStat::Singular => {
            let s = sample(&density, args.n_dim, args.seed)?;
            let sv = singular_values(&s.data)?;
            match args.out.format {
                Format::Csv => {
                    let mut text = meta.csv_header();
                    text.push_str("index,sigma\n");
                    for (i, v) in sv.iter().enumerate() {
                        let _ = writeln!(text, "{i},{}", fmt17(*v));
                    }
                    text
                }
                Format::Json => serde_json::to_string_pretty(&serde_json::json!({
                    "meta": meta.json_meta(),
                    "singular_values": sv,
                }))
                .unwrap()
                    + "\n",
            }
        }
        SimStat::Eigs => {
            let s = sample(&density, args.n_dim, args.seed)?;
            let eigs = eigenvalues(&s.data)?;
            match args.out.format {
                Format::Csv => {
                    let mut text = meta.csv_header();
                    text.push_str("index,re,im\n");
                    for (i, v) in eigs.iter().enumerate() {
                        let _ = writeln!(text, "{i},{},{}", fmt17(v.re), fmt17(v.im));
                    }
                    text
                }
                Format::Json => serde_json::to_string_pretty(&serde_json::json!({
                    "meta": meta.json_meta(),
                    "eigenvalues": eigs.iter().map(|&z| complex_json(z)).collect::<Vec<_>>(),
                }))
                .unwrap()
                    + "\n",
            }
        }
    };
    emit(&args.out, text)
}

fn criterion_density(args: &CriterionArgs) -> Result<(BlockDensity, serde_json::Value), Error> {
    if args.density.density_file.is_some() || args.density.preset.is_some() {
        if matches!(args.density.preset, Some(PresetName::CornerBox)) {
            let p = Preset::CornerBox {
                c: args.c,
                d: args.d,
                r: args.r,
                a: args.a,
                big_r: args.big_r,
            };
            let cfg = serde_json::json!({
                "preset": "corner_box", "m": args.density.m,
                "params": {"c": args.c, "d": args.d, "r": args.r, "a": args.a, "R": args.big_r},
            });
            return Ok((BlockDensity::preset(&p, args.density.m)?, cfg));
        }
        return load_density(&args.density);
    }
    let p = Preset::CornerBox { c: args.c, d: args.d, r: args.r, a: args.a, big_r: args.big_r };
    let cfg = serde_json::json!({
        "preset": "corner_box", "m": args.density.m,
        "params": {"c": args.c, "d": args.d, "r": args.r, "a": args.a, "R": args.big_r},
    });
    Ok((BlockDensity::preset(&p, args.density.m)?, cfg))
}

fn run_criterion(args: CriterionArgs) -> Result<(), Error> {
    let (density, density_cfg) = criterion_density(&args)?;
    let cfg = CriterionConfig {
        density,
        a: args.a,
        c: args.c,
        d: args.d,
        r: args.r,
        big_r: args.big_r,
        theta: args.theta,
        gamma: args.gamma,
        n_max: args.n_max,
        mc: MonteCarlo { n_dim: args.n_dim, trials: args.trials, seed: args.seed },
    };
    let support = verify_support_conditions(&cfg)?;
    let report = criterion_report(&cfg)?;
    let meta = RunMeta::new(serde_json::json!({
        "subcommand": "criterion",
        "density": density_cfg,
        "c": args.c, "d": args.d, "a": args.a, "r": args.r, "R": args.big_r,
        "theta": args.theta, "gamma": args.gamma, "n_max": args.n_max,
        "n_dim": args.n_dim, "trials": args.trials, "seed": args.seed,
    }));
    let verdict_json = serde_json::json!({
        "meta": meta.json_meta(),
        "support": {
            "strip_bounded": support.strip_bounded,
            "square_exact": support.square_exact,
            "zero_zones": support.zero_zones,
        },
        "k": report.k_used,
        "gamma": report.gamma_used,
        "alpha_hat": report.alpha_hat,
        "s_hat_corner": report.s_hat_corner,
        "slope": report.slope,
        "r_squared": report.r_squared,
        "verdict": report.verdict.to_string(),
        "note": "heuristic numerical evidence, not a proof",
        "rows": report.rows.iter().map(|r| serde_json::json!({
            "n": r.n, "mu": r.mu, "s_sq": r.s_sq,
            "lower_bound_sq": r.lower_bound_sq, "ratio": r.ratio,
        })).collect::<Vec<_>>(),
    });
    let text = match args.out.format {
        Format::Csv => {
            let mut s = meta.csv_header();
            let _ = writeln!(
                s,
                "# verdict: {} (heuristic); slope {:.6}, r^2 {:.6}, K {:.6}, gamma {:.9}",
                report.verdict, report.slope, report.r_squared, report.k_used, report.gamma_used
            );
            s.push_str("n,mu,s_theta_sq,lower_bound_sq,ratio\n");
            for r in &report.rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    r.n,
                    fmt17(r.mu),
                    fmt17(r.s_sq),
                    fmt17(r.lower_bound_sq),
                    fmt17(r.ratio)
                );
            }
            s
        }
        Format::Json => serde_json::to_string_pretty(&verdict_json).unwrap() + "\n",
    };
    emit(&args.out, text)
}

fn run_quasinil(args: QuasinilArgs) -> Result<(), Error> {
    let (density, density_cfg) = load_density(&args.density)?;
    let eps_grid: Vec<f64> = match &args.eps {
        Some(list) => list
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidParameter(format!("bad band width '{t}'")))
            })
            .collect::<Result<_, _>>()?,
        None => (1..=args.eps_pow2).map(|k| 2f64.powi(-(k as i32))).collect(),
    };
    let cert = quasinilpotence_certificate(&density, args.delta, &eps_grid)?;
    let meta = RunMeta::new(serde_json::json!({
        "subcommand": "quasinil",
        "density": density_cfg,
        "delta": args.delta,
        "eps_grid": eps_grid,
    }));
    let text = match args.out.format {
        Format::Csv => {
            let mut s = meta.csv_header();
            let _ = writeln!(
                s,
                "# verdict: {}",
                if cert.quasinilpotent { "QUASINILPOTENT" } else { "INCONCLUSIVE" }
            );
            s.push_str("eps,crude_bound,sharper_bound,bound\n");
            for row in &cert.rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{}",
                    fmt17(row.eps),
                    fmt17(row.crude),
                    fmt17(row.sharper),
                    fmt17(row.bound())
                );
            }
            s
        }
        Format::Json => serde_json::to_string_pretty(&serde_json::json!({
            "meta": meta.json_meta(),
            "verdict": if cert.quasinilpotent { "QUASINILPOTENT" } else { "INCONCLUSIVE" },
            "rows": cert.rows.iter().map(|r| serde_json::json!({
                "eps": r.eps, "crude": r.crude, "sharper": r.sharper, "bound": r.bound(),
            })).collect::<Vec<_>>(),
        }))
        .unwrap()
            + "\n",
    };
    emit(&args.out, text)
}

fn run_algebra(args: AlgebraArgs) -> Result<(), Error> {
    let meta_cfg = serde_json::json!({
        "subcommand": "algebra",
        "example": match args.example {
            AlgebraExample::ThreeByThree => "3x3",
            AlgebraExample::SixBySix => "6x6",
            AlgebraExample::TenByTen => "10x10",
            AlgebraExample::Irreduc => "irreduc",
        },
        "a": args.a,
        "tol": args.tol,
    });
    let meta = RunMeta::new(meta_cfg);
    let body = match args.example {
        AlgebraExample::ThreeByThree => {
            let (a, p) = finite_algebra::example_3x3();
            let dim = star_algebra_dimension(&a, args.tol);
            let commutant_dim = commutant_basis(&a, args.tol)?.len();
            let witness = invariance_witness(&a, &p, args.tol)?;
            serde_json::json!({
                "generated_dimension": dim,
                "commutant_dimension": commutant_dim,
                "witness_found": witness.is_some(),
            })
        }
        AlgebraExample::SixBySix => {
            let (dim, a_used) =
                generation_with_halving(finite_algebra::example_6x6, 36, args.a, args.tol)?;
            let mat = finite_algebra::example_6x6(a_used)?;
            let (s, _) = jordan_similarity_6x6(a_used)?;
            let p = projection_onto_columns(&s, 3)?;
            let witness = invariance_witness(&mat, &p, args.tol)?;
            serde_json::json!({
                "generated_dimension": dim,
                "a_used": a_used,
                "witness_found": witness.is_some(),
            })
        }
        AlgebraExample::TenByTen => {
            let build = |a: f64| {
                let f = finite_algebra::example_10x10_f(a);
                Ok(f.dot(&f))
            };
            let (dim, a_used) = generation_with_halving(build, 100, args.a, args.tol)?;
            serde_json::json!({
                "generated_dimension_of_f_squared": dim,
                "a_used": a_used,
            })
        }
        AlgebraExample::Irreduc => {
            let b: Vec<f64> = match &args.b {
                Some(list) => list
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::InvalidParameter(format!("bad band entry '{t}'")))
                    })
                    .collect::<Result<_, _>>()?,
                None => (1..=args.n - args.p).map(|k| k as f64).collect(),
            };
            let a_entries = vec![args.a; args.p - 1];
            let build = |scale: f64| {
                let scaled: Vec<f64> = a_entries.iter().map(|_| scale).collect();
                finite_algebra::build_irreduc_matrix(args.n, args.p, &b, &scaled)
            };
            let (dim, a_used) =
                generation_with_halving(build, args.n * args.n, args.a, args.tol)?;
            serde_json::json!({
                "n": args.n,
                "p": args.p,
                "generated_dimension": dim,
                "full_dimension": args.n * args.n,
                "a_used": a_used,
            })
        }
    };
    let text = serde_json::to_string_pretty(&serde_json::json!({
        "meta": meta.json_meta(),
        "report": body,
    }))
    .unwrap()
        + "\n";
    emit(&args.out, text)
}
