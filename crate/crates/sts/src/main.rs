//! Command-line front end: encode/decode demos, offset recovery, analytic
//! validation of the detection statistics, and SIR sweep experiments.
//!
//! Exit codes: 0 success (or validation pass), 1 validation fail,
//! 2 usage/config error, 3 I/O error. Tone indices print 0-based.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use sts::codec::{
    codeword_message, correct_offset, decode_multiuser, encode, estimate_offset, pack_message,
    separability_bound, CodeParams, DecoderConfig, GftContext,
};
use sts::galois::{Field, FieldElement};
use sts::phy::{threshold_for_far, DetectionGrid};
use sts::rcrm::rcrm_unpack;
use sts::simkit::{
    export_csv, fmt6, load_config, run_sweep, validate_detection_biased, SimConfig, SimError,
};

#[derive(Parser)]
#[command(name = "sts", version, about = "Coded single-tone signaling toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a message into its tone indices (one per OFDM symbol)
    Encode {
        /// Field order D (prime)
        #[arg(long)]
        field: u64,
        /// Block length N (must divide D-1)
        #[arg(long)]
        n: usize,
        /// Message length K in field symbols
        #[arg(long)]
        k: usize,
        /// Message value in 0..D^K
        #[arg(long)]
        message: u64,
        /// Also print the 9-bit RCRM field breakdown (needs D^K >= 512)
        #[arg(long)]
        rcrm: bool,
    },
    /// List-decode messages from per-symbol detected tone sets
    Decode {
        #[arg(long)]
        field: u64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Acceptance threshold tau in 1..=N (default: ceil(N/2))
        #[arg(long)]
        tau: Option<usize>,
        /// N whitespace-separated sets; each set is comma-separated
        /// indices or `-` for empty, e.g. "1,5 2 - 4"
        #[arg(long, allow_hyphen_values = true)]
        detections: String,
        /// Subcarrier count (default: D)
        #[arg(long)]
        s: Option<usize>,
    },
    /// Estimate and correct the frequency offset of a received codeword
    Offset {
        #[arg(long)]
        field: u64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// N space-separated tone indices
        #[arg(long)]
        codeword: String,
    },
    /// Compare empirical detection rates against the closed forms
    Validate {
        /// Experiment config file (key = value); defaults to the flagship
        /// multi-user setup
        #[arg(long)]
        config: Option<PathBuf>,
        /// Tone SIR for the occupied-tone cells, in dB
        #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
        sir_db: f64,
        /// Monte Carlo samples per cell
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        /// Self-test hook: shift the analytic values by this much (a
        /// nonzero shift must make validation fail)
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        perturb: f64,
        /// Override the config's master seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a multi-user SIR sweep and write the results as CSV
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
        /// Override the config's master seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print derived code and detector quantities for a configuration
    Params {
        #[arg(long)]
        field: u64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Also print the detection threshold for this false-alarm target
        #[arg(long)]
        target_far: Option<f64>,
        #[arg(long, default_value_t = 1)]
        n_rx: usize,
        #[arg(long, default_value_t = 1.0)]
        noise_var: f64,
    },
}

struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> CliError {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> CliError {
        CliError {
            code: 3,
            message: message.into(),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    };
    std::process::exit(code);
}

fn run(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Encode {
            field,
            n,
            k,
            message,
            rcrm,
        } => cmd_encode(field, n, k, message, rcrm),
        Command::Decode {
            field,
            n,
            k,
            tau,
            detections,
            s,
        } => cmd_decode(field, n, k, tau, &detections, s),
        Command::Offset {
            field,
            n,
            k,
            codeword,
        } => cmd_offset(field, n, k, &codeword),
        Command::Validate {
            config,
            sir_db,
            samples,
            perturb,
            seed,
        } => cmd_validate(config, sir_db, samples, perturb, seed),
        Command::Sweep { config, out, seed } => cmd_sweep(&config, &out, seed),
        Command::Params {
            field,
            n,
            k,
            target_far,
            n_rx,
            noise_var,
        } => cmd_params(field, n, k, target_far, n_rx, noise_var),
    }
}

fn build_params(field: u64, n: usize, k: usize) -> Result<CodeParams, CliError> {
    let field = Field::new(field).map_err(|e| CliError::usage(e.to_string()))?;
    CodeParams::new(field, n, k).map_err(|e| CliError::usage(e.to_string()))
}

fn print_code_config(params: &CodeParams, extra: &str) {
    println!(
        "# field={} n={} k={}{}",
        params.field().modulus(),
        params.block_len(),
        params.message_len(),
        extra
    );
}

fn cmd_encode(field: u64, n: usize, k: usize, message: u64, rcrm: bool) -> Result<i32, CliError> {
    let params = build_params(field, n, k)?;
    if rcrm && params.message_space() < 512 {
        return Err(CliError::usage(format!(
            "--rcrm needs a message space of at least 512, this code has {}",
            params.message_space()
        )));
    }
    print_code_config(&params, &format!(" message={message}"));

    let msg = pack_message(message, &params).map_err(|e| CliError::usage(e.to_string()))?;
    let word = encode(&msg, &params.context()).map_err(|e| CliError::usage(e.to_string()))?;
    if rcrm {
        let fields = rcrm_unpack(message).map_err(|e| CliError::usage(e.to_string()))?;
        println!("# rcrm: {fields}");
    }
    let indices: Vec<String> = word.indices().iter().map(|i| i.to_string()).collect();
    println!("{}", indices.join(" "));
    Ok(0)
}

fn parse_indices(field: &Field, text: &str) -> Result<Vec<FieldElement>, CliError> {
    text.split_whitespace()
        .map(|tok| {
            let v: u64 = tok
                .parse()
                .map_err(|_| CliError::usage(format!("bad tone index: {tok}")))?;
            if v >= field.modulus() {
                return Err(CliError::usage(format!(
                    "tone index {v} outside GF({})",
                    field.modulus()
                )));
            }
            Ok(field.element(v))
        })
        .collect()
}

fn cmd_offset(field: u64, n: usize, k: usize, codeword: &str) -> Result<i32, CliError> {
    let params = build_params(field, n, k)?;
    let received = parse_indices(&params.field(), codeword)?;
    if received.len() != n {
        return Err(CliError::usage(format!(
            "expected {n} tone indices, got {}",
            received.len()
        )));
    }
    print_code_config(&params, &format!(" codeword={codeword}"));

    let ctx = GftContext::new(params.field(), n).map_err(|e| CliError::usage(e.to_string()))?;
    let delta = estimate_offset(&received, &ctx);
    let corrected = correct_offset(&received, delta);
    match codeword_message(corrected.symbols(), &params) {
        Some(m) => {
            let indices: Vec<String> =
                corrected.indices().iter().map(|i| i.to_string()).collect();
            println!("delta={} codeword={} m={}", delta, indices.join(" "), m);
        }
        None => println!("INVALID"),
    }
    Ok(0)
}

fn cmd_decode(
    field: u64,
    n: usize,
    k: usize,
    tau: Option<usize>,
    detections: &str,
    s: Option<usize>,
) -> Result<i32, CliError> {
    let params = build_params(field, n, k)?;
    let s = s.unwrap_or(params.field().modulus() as usize);
    let tau = tau.unwrap_or_else(|| n.div_ceil(2));
    if tau < 1 || tau > n {
        return Err(CliError::usage(format!("tau={tau} must lie in 1..={n}")));
    }

    let sets: Vec<Vec<u32>> = detections
        .split_whitespace()
        .map(|tok| {
            if tok == "-" {
                return Ok(Vec::new());
            }
            tok.split(',')
                .map(|t| {
                    let v: u32 = t
                        .parse()
                        .map_err(|_| CliError::usage(format!("bad tone index: {t}")))?;
                    if v as usize >= s {
                        return Err(CliError::usage(format!(
                            "tone index {v} outside the {s}-subcarrier grid"
                        )));
                    }
                    Ok(v)
                })
                .collect()
        })
        .collect::<Result<_, CliError>>()?;
    if sets.len() != n {
        return Err(CliError::usage(format!(
            "expected {n} detection sets, got {}",
            sets.len()
        )));
    }
    print_code_config(&params, &format!(" s={s} tau={tau}"));

    let grid = DetectionGrid::new(s, sets);
    let decoded: BTreeSet<u64> = decode_multiuser(&grid, &params, &DecoderConfig::new(tau))
        .map_err(|e| CliError::usage(e.to_string()))?;
    if decoded.is_empty() {
        println!("none");
    } else {
        let out: Vec<String> = decoded.iter().map(|m| m.to_string()).collect();
        println!("{}", out.join(" "));
    }
    Ok(0)
}

fn load_or_default_config(config: Option<PathBuf>) -> Result<SimConfig, CliError> {
    match config {
        Some(path) => load_config(&path).map_err(|e| CliError::usage(e.to_string())),
        None => Ok(SimConfig::flagship(4)),
    }
}

fn print_sim_config(cfg: &SimConfig) {
    for line in cfg.to_kv().lines() {
        println!("# {line}");
    }
}

fn cmd_validate(
    config: Option<PathBuf>,
    sir_db: f64,
    samples: u64,
    perturb: f64,
    seed: Option<u64>,
) -> Result<i32, CliError> {
    let mut cfg = load_or_default_config(config)?;
    if let Some(seed) = seed {
        cfg.master_seed = seed;
    }
    print_sim_config(&cfg);
    println!("# sir_db = {sir_db}");
    println!("# samples = {samples}");

    let report = validate_detection_biased(&cfg, sir_db, samples, perturb)
        .map_err(|e| CliError::usage(e.to_string()))?;
    println!(
        "{:>5} {:>7} {:>13} {:>13} {:>9}  result",
        "n_rx", "n_user", "analytic", "empirical", "z"
    );
    for cell in &report.cells {
        let kind = if cell.n_user == 0 {
            "noise".to_string()
        } else {
            cell.n_user.to_string()
        };
        println!(
            "{:>5} {:>7} {:>13} {:>13} {:>9.3}  {}",
            cell.n_rx,
            kind,
            fmt6(cell.analytic),
            fmt6(cell.empirical),
            cell.z_score,
            if cell.z_score.abs() <= 3.0 { "ok" } else { "FAIL" },
        );
    }
    if report.passed() {
        println!("validation: PASS");
        Ok(0)
    } else {
        println!("validation: FAIL");
        Ok(1)
    }
}

fn cmd_sweep(config: &Path, out: &Path, seed: Option<u64>) -> Result<i32, CliError> {
    let mut cfg = load_config(config).map_err(|e| CliError::usage(e.to_string()))?;
    if let Some(seed) = seed {
        cfg.master_seed = seed;
    }
    print_sim_config(&cfg);

    let result = run_sweep(&cfg).map_err(|e| CliError::usage(e.to_string()))?;
    export_csv(&result, out).map_err(|e| match e {
        SimError::Io(io) => CliError::io(format!("writing {}: {io}", out.display())),
        other => CliError::io(other.to_string()),
    })?;
    for p in &result.points {
        println!(
            "sir={:>6.1} dB  erasure={} [{}, {}]  error={}  false_accept={}",
            p.sir_db,
            fmt6(p.erasure_rate),
            fmt6(p.erasure_ci.0),
            fmt6(p.erasure_ci.1),
            fmt6(p.error_rate),
            fmt6(p.false_accept_rate),
        );
    }
    println!("wrote {}", out.display());
    Ok(0)
}

fn cmd_params(
    field: u64,
    n: usize,
    k: usize,
    target_far: Option<f64>,
    n_rx: usize,
    noise_var: f64,
) -> Result<i32, CliError> {
    let params = build_params(field, n, k)?;
    print_code_config(&params, "");
    println!("t_errors = {}", params.t_errors());
    println!("rho_erasures = {}", params.rho_erasures());
    println!("message_space = {}", params.message_space());
    println!(
        "separability_bound = {}",
        separability_bound(n, k, params.field().modulus())
    );
    println!("alpha = {}", params.field().primitive_element());
    if let Some(far) = target_far {
        if !(far > 0.0 && far < 1.0) {
            return Err(CliError::usage("target_far must lie in (0, 1)"));
        }
        if n_rx < 1 || noise_var <= 0.0 {
            return Err(CliError::usage("need n_rx >= 1 and noise_var > 0"));
        }
        let x = threshold_for_far(far, noise_var, n_rx);
        println!("threshold_x = {}", fmt6(x));
    }
    Ok(0)
}
