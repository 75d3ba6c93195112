use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use ifsk::lemmas::{
    run_lemma, scale_band, slope_summary, write_samples_csv, write_slopes_csv, Lemma, COMMUTATOR_EPS_GRID,
    DEFAULT_EPS_GRID,
};
use ifsk::matcore::haar_special_unitary;
use ifsk::net::{build_net_with, load_net, save_net, NetBuildOptions, DEFAULT_NET_CAP};
use ifsk::run::{format_sequence, resolve_gateset, resolve_target, NetParams, RunManifest};
use ifsk::sk::{
    check_lengths, run_benchmark, write_level_csv, write_summary_csv, Algorithm, Compiler, QubitFactory, SKConfig,
};
use ifsk::{Error, Result};

#[derive(Parser)]
#[command(name = "ifsk", version, about = "Inverse-free Solovay-Kitaev compiler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate gate words into an epsilon-net and save it.
    NetBuild(NetBuildArgs),
    /// Compile a target to a gate sequence.
    Compile(CompileArgs),
    /// Run the lemma experiments or the compiler benchmark.
    Bench(BenchArgs),
}

#[derive(Args, serde::Serialize)]
struct NetBuildArgs {
    /// Gate-set document path or builtin:{two-rotation,two-rotation-inverses,pauli-augmented}.
    #[arg(long)]
    gateset: String,
    #[arg(long)]
    max_len: usize,
    #[arg(long)]
    dedup: f64,
    #[arg(long)]
    out: PathBuf,
    /// Number of Haar samples used to certify the covering radius.
    #[arg(long)]
    certify: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_NET_CAP)]
    cap: usize,
}

#[derive(Clone, Copy, ValueEnum, serde::Serialize)]
enum AlgorithmArg {
    Classic,
    Irrep,
    Ifsk,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Classic => Algorithm::Classic,
            AlgorithmArg::Irrep => Algorithm::Irrep,
            AlgorithmArg::Ifsk => Algorithm::Ifsk,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, serde::Serialize)]
enum FactoryArg {
    Xy,
    Xz,
}

#[derive(Args, serde::Serialize)]
struct CompilerArgs {
    #[arg(long)]
    gateset: String,
    #[arg(long)]
    net: PathBuf,
    #[arg(long, value_enum)]
    algorithm: AlgorithmArg,
    #[arg(long)]
    depth: usize,
    /// Largest accepted net radius; defaults to the net's certified radius.
    #[arg(long)]
    epsilon0: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pad base-case words to the net's maximum length.
    #[arg(long)]
    padding: bool,
    /// Qubit inverse factory.
    #[arg(long, value_enum, default_value = "xy")]
    factory: FactoryArg,
    /// Skip the C·sqrt(epsilon0) < 0.9 check before depth > 1.
    #[arg(long)]
    no_handshake: bool,
    #[arg(long)]
    no_memo: bool,
}

#[derive(Args, serde::Serialize)]
struct CompileArgs {
    #[command(flatten)]
    compiler: CompilerArgs,
    /// Target document path, haar:SEED, pauli-x, pauli-y or pauli-z.
    #[arg(long)]
    target: String,
    /// Sequence file; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Load this Pauli cache if it exists and write it back afterwards.
    #[arg(long)]
    pauli_cache: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, serde::Serialize)]
enum Suite {
    Lemmas,
    Sk,
}

#[derive(Args, serde::Serialize)]
struct BenchArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    /// Dimensions for the lemma suite.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    d: Vec<usize>,
    /// Overrides the default ε grids of the lemma suite.
    #[arg(long, value_delimiter = ',')]
    eps_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    gateset: Option<String>,
    #[arg(long)]
    net: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "ifsk")]
    algorithm: Vec<AlgorithmArg>,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    /// Number of Haar targets for the sk suite.
    #[arg(long, default_value_t = 20)]
    targets: usize,
    #[arg(long)]
    padding: bool,
    #[arg(long)]
    no_handshake: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::NetBuild(a) => net_build(a),
        Command::Compile(a) => compile(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn net_build(a: &NetBuildArgs) -> Result<()> {
    let mut manifest = RunManifest::new("net-build", json!(a));
    let gs = resolve_gateset(&a.gateset)?;
    let mut net = build_net_with(&gs, a.max_len, a.dedup, NetBuildOptions { cap: a.cap })?;
    if let Some(n) = a.certify {
        net.certify_radius(n, a.seed)?;
    }
    save_net(&net, &a.out)?;
    println!("entries {}", net.len());
    match net.certified_radius() {
        Some((r, n)) => println!("certified radius {r:.6} ({n} samples)"),
        None => println!("certified radius none"),
    }
    manifest.gateset_fingerprint = Some(gs.fingerprint_hex());
    manifest.seed = Some(a.seed);
    manifest.net = Some(NetParams {
        max_len: a.max_len,
        dedup: a.dedup,
        entries: net.len(),
        certified_radius: net.certified_radius().map(|c| c.0),
        certify_samples: a.certify,
    });
    manifest.write(&manifest_path(&a.out))
}

fn make_compiler(a: &CompilerArgs, algorithm: Algorithm) -> Result<Compiler> {
    let gs = resolve_gateset(&a.gateset)?;
    let net = load_net(&a.net, &gs)?;
    let radius = net
        .certified_radius()
        .map(|c| c.0)
        .ok_or_else(|| Error::Config("net has no certified radius; rebuild with --certify".into()))?;
    let mut cfg = SKConfig::new(algorithm, a.depth, a.epsilon0.unwrap_or(radius));
    cfg.rng_seed = a.seed;
    cfg.padding = a.padding;
    cfg.handshake = !a.no_handshake;
    cfg.memoize = !a.no_memo;
    cfg.qubit_factory = match a.factory {
        FactoryArg::Xy => QubitFactory::Xy,
        FactoryArg::Xz => QubitFactory::Xz,
    };
    Compiler::new(cfg, gs, net)
}

fn net_params(c: &Compiler) -> NetParams {
    NetParams {
        max_len: c.net().max_word_length(),
        dedup: c.net().dedup_radius(),
        entries: c.net().len(),
        certified_radius: c.net().certified_radius().map(|r| r.0),
        certify_samples: c.net().certified_radius().map(|r| r.1),
    }
}

fn compile(a: &CompileArgs) -> Result<()> {
    let mut manifest = RunManifest::new("compile", json!(a));
    let compiler = make_compiler(&a.compiler, a.compiler.algorithm.into())?;
    if let Some(p) = a.pauli_cache.as_ref().filter(|p| p.exists()) {
        compiler.load_pauli_cache(p)?;
    }
    let target = resolve_target(&a.target, compiler.dim())?;
    let c = compiler.compile(&target, a.compiler.depth)?;
    c.op.verify(compiler.letters())?;
    let text = format_sequence(&compiler, &c);
    match &a.out {
        Some(out) => {
            std::fs::write(out, &text)?;
            manifest.gateset_fingerprint = Some(compiler.gateset().fingerprint_hex());
            manifest.net = Some(net_params(&compiler));
            manifest.seed = Some(a.compiler.seed);
            manifest.write(&manifest_path(out))?;
        }
        None => print!("{text}"),
    }
    if let Some(p) = &a.pauli_cache {
        compiler.save_pauli_cache(p)?;
    }
    eprintln!("algorithm {} depth {} length {} error {:.3e}", compiler.config().algorithm.name(), a.compiler.depth, c.op.len(), c.error());
    Ok(())
}

fn bench(a: &BenchArgs) -> Result<()> {
    if let Some(k) = a.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    std::fs::create_dir_all(&a.out)?;
    let mut manifest = RunManifest::new("bench", json!(a));
    manifest.seed = Some(a.seed);
    match a.suite {
        Suite::Lemmas => bench_lemmas(a)?,
        Suite::Sk => bench_sk(a, &mut manifest)?,
    }
    manifest.write(&a.out.join("manifest.json"))
}

fn bench_lemmas(a: &BenchArgs) -> Result<()> {
    let mut samples = Vec::new();
    for &d in &a.d {
        for lemma in Lemma::ALL.into_iter().filter(|l| l.applies_to(d)) {
            let grid: &[f64] = match (&a.eps_grid, lemma) {
                (Some(g), _) => g,
                (None, Lemma::Commutator | Lemma::CommutatorScale) => &COMMUTATOR_EPS_GRID,
                (None, _) => &DEFAULT_EPS_GRID,
            };
            samples.extend(run_lemma(lemma, d, grid, a.trials, a.seed)?);
        }
    }
    write_samples_csv(&a.out.join("lemmas.csv"), &samples)?;
    let slopes = slope_summary(&samples);
    write_slopes_csv(&a.out.join("slopes.csv"), &slopes)?;
    for s in &slopes {
        println!(
            "{:<16} d={} slope {:.3} (>= {:.2}) {}",
            s.lemma.name(),
            s.d,
            s.slope,
            s.threshold,
            if s.pass { "pass" } else { "FAIL" }
        );
    }
    for &d in &a.d {
        if let Some(band) = scale_band(&samples, d) {
            println!("commutator_scale d={d} max/min {band:.3}");
        }
    }
    Ok(())
}

fn bench_sk(a: &BenchArgs, manifest: &mut RunManifest) -> Result<()> {
    let (Some(gateset), Some(net)) = (&a.gateset, &a.net) else {
        return Err(Error::Config("--suite sk needs --gateset and --net".into()));
    };
    let mut records = Vec::new();
    let mut summaries = Vec::new();
    for &alg in &a.algorithm {
        let args = CompilerArgs {
            gateset: gateset.clone(),
            net: net.clone(),
            algorithm: alg,
            depth: a.depth,
            epsilon0: None,
            seed: a.seed,
            padding: a.padding,
            factory: FactoryArg::Xy,
            no_handshake: a.no_handshake,
            no_memo: false,
        };
        let compiler = make_compiler(&args, alg.into())?;
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        let targets: Vec<_> = (0..a.targets).map(|_| haar_special_unitary(compiler.dim(), &mut rng)).collect();
        let res = run_benchmark(&compiler, &targets)?;
        let order = compiler.irrep().map(|g| g.group_order()).unwrap_or(compiler.dim().pow(2));
        let failures = check_lengths(&res.records, a.padding, order, false).iter().filter(|c| !c.holds).count();
        if failures > 0 {
            return Err(Error::Config(format!("{failures} length-recursion checks failed")));
        }
        println!("{:?}", res.summary);
        records.extend(res.records);
        summaries.push(res.summary);
        manifest.gateset_fingerprint = Some(compiler.gateset().fingerprint_hex());
        manifest.net = Some(net_params(&compiler));
    }
    write_level_csv(&a.out.join("levels.csv"), &records)?;
    write_summary_csv(&a.out.join("summary.csv"), &summaries)
}
