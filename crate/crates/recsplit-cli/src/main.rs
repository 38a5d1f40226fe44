//! Command line front end for the `recsplit` crate: build and verify
//! functions over key files or synthetic key sets, benchmark queries, and
//! run the leaf-strategy analysis modes.
//!
//! Exit codes: 0 on success, 1 when verification or an internal consistency
//! check fails, 2 on usage errors, 3 on I/O errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recsplit::analysis::{self, LeafStrategy};
use recsplit::{build_with_stats, Error, MphfConfig, RecSplitMphf};

#[derive(Parser)]
#[command(name = "recsplit", version, about = "Minimal perfect hashing toolbox")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a function over a key set and print a benchmark record.
    Build(BuildArgs),
    /// Check that a serialized function maps a key set bijectively.
    Verify(VerifyArgs),
    /// Measure query throughput of a serialized function.
    QueryBench(QueryBenchArgs),
    /// Run one of the leaf-strategy analysis modes.
    Analyze(AnalyzeArgs),
}

/// Where the keys come from. Exactly one of the two must be given.
#[derive(Args)]
#[group(required = true, multiple = false)]
struct KeySource {
    /// File of newline-delimited keys.
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,

    /// Generate N random keys instead of reading a file.
    #[arg(long, value_name = "N")]
    random: Option<u64>,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    keys: KeySource,

    /// Leaf size of the splitting tree.
    #[arg(long, default_value_t = 8)]
    leaf_size: u32,

    /// Expected number of keys per bucket.
    #[arg(long, default_value_t = 100)]
    bucket_size: usize,

    /// Worker threads for construction.
    #[arg(long, default_value_t = 1)]
    threads: usize,

    /// Seeds tried per batch in the leaf searches.
    #[arg(long, default_value_t = 1)]
    batch_width: u32,

    /// Leaf search strategy: rotation fitting or plain brute force.
    #[arg(long, value_enum, default_value = "on")]
    rotation_fitting: Toggle,

    /// Seed for the random key generator.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Write the serialized function here.
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Serialized function to check.
    #[arg(long, value_name = "FILE")]
    mphf: PathBuf,

    #[command(flatten)]
    keys: KeySource,

    /// Seed for the random key generator.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct QueryBenchArgs {
    /// Serialized function to benchmark.
    #[arg(long, value_name = "FILE")]
    mphf: PathBuf,

    #[command(flatten)]
    keys: KeySource,

    /// Seed for the random key generator and the query order shuffle.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Timed passes over the whole key set.
    #[arg(long, default_value_t = 3)]
    repeats: u32,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// What to measure.
    #[arg(long, value_enum)]
    mode: AnalyzeMode,

    /// Leaf sizes to cover, as `A..B` (inclusive) or a single value.
    #[arg(long, value_parser = parse_m_range)]
    m_range: Option<(u32, u32)>,

    /// Simulated leaves (evals mode) or seed trials (shockhash mode).
    #[arg(long)]
    samples: Option<u64>,

    /// Base seed for the simulations.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

impl Toggle {
    fn enabled(self) -> bool {
        matches!(self, Toggle::On)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AnalyzeMode {
    /// Expected brute-force/rotation work ratio per leaf size, closed form.
    Factor,
    /// Mean hash evaluations per leaf, simulated for each strategy.
    Evals,
    /// Fraction of seeds that place a leaf in the two-choice scheme.
    Shockhash,
}

/// A failed command: message for stderr plus the process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn check(message: String) -> Self {
        Failure { code: 1, message }
    }

    fn usage(message: String) -> Self {
        Failure { code: 2, message }
    }

    fn io(context: &str, err: std::io::Error) -> Self {
        Failure {
            code: 3,
            message: format!("{context}: {err}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build(args) => cmd_build(args),
        Command::Verify(args) => cmd_verify(args),
        Command::QueryBench(args) => cmd_query_bench(args),
        Command::Analyze(args) => cmd_analyze(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn parse_m_range(s: &str) -> Result<(u32, u32), String> {
    let parse_one = |part: &str| {
        part.trim()
            .parse::<u32>()
            .map_err(|_| format!("invalid leaf size `{part}`"))
    };
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (parse_one(a)?, parse_one(b)?),
        None => {
            let m = parse_one(s)?;
            (m, m)
        }
    };
    if lo < 1 || lo > hi {
        return Err(format!("empty or inverted range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

fn load_keys(source: &KeySource, seed: u64) -> Result<Vec<Vec<u8>>, Failure> {
    match (&source.input, source.random) {
        (Some(path), None) => read_key_file(path),
        (None, Some(n)) => Ok(random_keys(n, seed)),
        // clap enforces exactly one; unreachable through the parser.
        _ => Err(Failure::usage(
            "exactly one of --input and --random is required".into(),
        )),
    }
}

fn read_key_file(path: &Path) -> Result<Vec<Vec<u8>>, Failure> {
    let data = fs::read(path).map_err(|e| Failure::io(&format!("reading {}", path.display()), e))?;
    let mut keys: Vec<Vec<u8>> = data.split(|&b| b == b'\n').map(<[u8]>::to_vec).collect();
    if keys.last().is_some_and(Vec::is_empty) {
        keys.pop();
    }
    Ok(keys)
}

/// Random byte-string keys, lengths uniform in `[10, 50]`, no newline bytes
/// so the set survives a round trip through a key file.
fn random_keys(n: u64, seed: u64) -> Vec<Vec<u8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(10..=50);
            (0..len)
                .map(|_| loop {
                    let b = rng.gen_range(1..=255u8);
                    if b != b'\n' {
                        break b;
                    }
                })
                .collect()
        })
        .collect()
}

fn build_failure(err: Error) -> Failure {
    match err {
        Error::InvalidConfig(_) => Failure::usage(err.to_string()),
        Error::Io(e) => Failure::io("building", e),
        _ => Failure::check(err.to_string()),
    }
}

fn load_mphf(path: &Path) -> Result<RecSplitMphf, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::io(&format!("reading {}", path.display()), e))?;
    RecSplitMphf::from_bytes(&bytes)
        .map_err(|e| Failure::check(format!("cannot load {}: {e}", path.display())))
}

fn variant_name(rotation_fitting: bool) -> &'static str {
    if rotation_fitting {
        LeafStrategy::RotationFitting.name()
    } else {
        LeafStrategy::BruteForce.name()
    }
}

/// Shuffled key order for query timing, so measurements do not ride the
/// sorted-by-bucket locality the builder leaves behind.
fn query_order(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15));
    order
}

fn cmd_build(args: BuildArgs) -> Result<(), Failure> {
    let keys = load_keys(&args.keys, args.seed)?;
    let config = MphfConfig {
        leaf_size: args.leaf_size,
        bucket_size: args.bucket_size,
        rotation_fitting: args.rotation_fitting.enabled(),
        batch_width: args.batch_width,
        ..MphfConfig::default()
    };

    let started = Instant::now();
    let (mphf, stats) = build_with_stats(&keys, &config, args.threads).map_err(build_failure)?;
    let build_ns = started.elapsed().as_nanos() as f64 / keys.len() as f64;

    let order = query_order(keys.len(), args.seed);
    let started = Instant::now();
    let mut checksum = 0usize;
    for &i in &order {
        checksum ^= mphf.query(&keys[i]);
    }
    let query_ns = started.elapsed().as_nanos() as f64 / keys.len() as f64;
    std::hint::black_box(checksum);

    if let Some(path) = &args.output {
        fs::write(path, mphf.to_bytes())
            .map_err(|e| Failure::io(&format!("writing {}", path.display()), e))?;
    }

    println!(
        "variant,leaf_size,bucket_size,threads,batch_width,n,bits_per_key,build_ns_per_key,query_ns_per_key,total_hash_evals"
    );
    println!(
        "{},{},{},{},{},{},{:.4},{:.2},{:.2},{}",
        variant_name(config.rotation_fitting),
        config.leaf_size,
        config.bucket_size,
        args.threads,
        config.batch_width,
        mphf.n(),
        mphf.bits_per_key(),
        build_ns,
        query_ns,
        stats.hash_evals,
    );
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Failure> {
    let mphf = load_mphf(&args.mphf)?;
    let keys = load_keys(&args.keys, args.seed)?;
    if keys.len() != mphf.n() {
        return Err(Failure::check(format!(
            "key count mismatch: function covers {} keys, input has {}",
            mphf.n(),
            keys.len()
        )));
    }

    let mut owner = vec![usize::MAX; keys.len()];
    for (i, key) in keys.iter().enumerate() {
        let slot = mphf.query(key);
        if slot >= keys.len() {
            return Err(Failure::check(format!(
                "key #{i} maps to slot {slot}, outside [0, {})",
                keys.len()
            )));
        }
        if owner[slot] != usize::MAX {
            return Err(Failure::check(format!(
                "collision: keys #{} and #{i} both map to slot {slot}",
                owner[slot]
            )));
        }
        owner[slot] = i;
    }
    println!("ok: {} keys map bijectively onto [0, {})", keys.len(), keys.len());
    Ok(())
}

fn cmd_query_bench(args: QueryBenchArgs) -> Result<(), Failure> {
    if args.repeats < 1 {
        return Err(Failure::usage("--repeats must be at least 1".into()));
    }
    let mphf = load_mphf(&args.mphf)?;
    let keys = load_keys(&args.keys, args.seed)?;
    if keys.is_empty() {
        return Err(Failure::usage("the key set is empty".into()));
    }

    let order = query_order(keys.len(), args.seed);
    let mut checksum = 0usize;
    let started = Instant::now();
    for _ in 0..args.repeats {
        for &i in &order {
            checksum = checksum.wrapping_add(mphf.query(&keys[i]));
        }
    }
    let elapsed = started.elapsed().as_nanos() as f64;
    let per_key = elapsed / (args.repeats as f64 * keys.len() as f64);
    std::hint::black_box(checksum);

    println!("n,repeats,query_ns_per_key,checksum");
    println!("{},{},{per_key:.2},{checksum}", keys.len(), args.repeats);
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), Failure> {
    match args.mode {
        AnalyzeMode::Factor => analyze_factor(args.m_range.unwrap_or((2, 16))),
        AnalyzeMode::Evals => analyze_evals(
            args.m_range.unwrap_or((4, 10)),
            args.samples.unwrap_or(1000),
            args.seed,
        ),
        AnalyzeMode::Shockhash => analyze_shockhash(
            args.m_range.unwrap_or((6, 12)),
            args.samples.unwrap_or(100_000),
            args.seed,
        ),
    }
}

fn analyze_factor((lo, hi): (u32, u32)) -> Result<(), Failure> {
    if hi > 26 {
        return Err(Failure::usage(
            "factor mode covers leaf sizes up to 26".into(),
        ));
    }
    println!("m,expected_factor");
    let mut mismatches = 0u32;
    for m in lo..=hi {
        let closed_form = analysis::expected_rotation_factor(m);
        println!("{m},{closed_form:.6}");
        // Enumeration is exponential in m; past 20 the closed form stands alone.
        if m <= 20 {
            let enumerated = enumeration_factor(m);
            if (closed_form - enumerated).abs() > 1e-6 * closed_form.max(1.0) {
                eprintln!(
                    "factor mismatch at m={m}: closed form {closed_form:.9}, enumeration {enumerated:.9}"
                );
                mismatches += 1;
            }
        }
    }
    if mismatches > 0 {
        return Err(Failure::check(format!(
            "{mismatches} leaf sizes disagree with the enumeration cross-check"
        )));
    }
    Ok(())
}

/// The expected-factor sum recomputed from scratch: rotation classes counted
/// by enumerating every m-bit mask and keeping the ones that are minimal
/// among their rotations, binomials rebuilt in floating point. Shares no
/// code with `analysis::expected_rotation_factor`, which makes it a usable
/// cross-check.
fn enumeration_factor(m: u32) -> f64 {
    assert!((1..=20).contains(&m));
    let wrap = |v: u32, d: u32| ((v << d) | (v >> (m - d))) & ((1u32 << m) - 1);
    let mut classes = vec![0u64; m as usize + 1];
    for v in 0..1u32 << m {
        if (1..m).all(|d| wrap(v, d) >= v) {
            classes[v.count_ones() as usize] += 1;
        }
    }
    let mut sum = 0.0;
    for ones in 0..=m {
        let binom = (0..ones).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64);
        sum += binom * binom / classes[ones as usize] as f64;
    }
    sum / 2f64.powi(m as i32)
}

fn analyze_evals((lo, hi): (u32, u32), samples: u64, seed: u64) -> Result<(), Failure> {
    if hi > 20 {
        return Err(Failure::usage(
            "evals mode covers leaf sizes up to 20; brute force explodes beyond that".into(),
        ));
    }
    let strategies = [
        LeafStrategy::BruteForce,
        LeafStrategy::RotationFitting,
        LeafStrategy::ShockHash,
    ];
    println!("m,strategy,mean_evals,relative_evals,samples");
    for m in lo..=hi {
        let baseline = analysis::simulate_leaf_strategies(
            m as usize,
            LeafStrategy::BruteForce,
            samples as usize,
            seed,
        );
        for strategy in strategies {
            let mean = if strategy == LeafStrategy::BruteForce {
                baseline
            } else {
                analysis::simulate_leaf_strategies(m as usize, strategy, samples as usize, seed)
            };
            println!(
                "{m},{},{mean:.3},{:.6},{samples}",
                strategy.name(),
                mean / baseline
            );
        }
    }
    Ok(())
}

fn analyze_shockhash((lo, hi): (u32, u32), seeds: u64, seed: u64) -> Result<(), Failure> {
    if hi > 20 {
        return Err(Failure::usage(
            "shockhash mode covers leaf sizes up to 20".into(),
        ));
    }
    println!("m,success_rate,seeds");
    for m in lo..=hi {
        let rate = analysis::shockhash_success_rate(m as usize, seeds, seed);
        println!("{m},{rate:.6},{seeds}");
    }
    Ok(())
}
