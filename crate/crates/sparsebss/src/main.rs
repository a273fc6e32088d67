use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sparsebss::engine::ilrma::BasisRule;
use sparsebss::engine::Waveform;
use sparsebss::error::{Error, Result};
use sparsebss::experiment::{run_experiment, write_csv, write_summary, ExperimentSpec};
use sparsebss::factors_io::write_factors;
use sparsebss::metrics::{improvement, sdr_sir};
use sparsebss::scene::{simulate, RoomFile};
use sparsebss::separate::{separate, SeparationParams, DEFAULT_MU, DEFAULT_RHO};
use sparsebss::synth::{synth_nmf_sources, SynthConfig};
use sparsebss::wav::{read_wav, write_wav};
use sparsebss::{Algorithm, StftConfig};

/// Multichannel blind source separation with (sparse) ILRMA and MNMF.
///
/// Log verbosity comes from the BSS_LOG environment variable
/// (error, warn, info, debug, trace; default warn).
///
/// Defaults marked "reference setting" follow the published evaluation
/// setup of the sparse variants; all other defaults are toolkit choices.
///
/// Exit codes: 0 success, 2 invalid input or configuration, 3 numerical divergence.
#[derive(Debug, Parser)]
#[command(name = "sparsebss", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Separate a multichannel WAV into one WAV per source.
    Separate(SeparateArgs),
    /// Simulate a convolutive mixture in a shoebox room.
    Simulate(SimulateArgs),
    /// Score estimated sources against references (SDR/SIR in dB).
    Evaluate(EvaluateArgs),
    /// Run a batch experiment described by a TOML file.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
struct SeparateArgs {
    /// Input WAV with at least two channels (16-bit PCM or 32-bit float).
    #[arg(short, long)]
    input: PathBuf,
    /// Directory for source_0.wav, source_1.wav, ...
    #[arg(short, long, default_value = ".")]
    out_dir: PathBuf,
    /// ilrma, s-ilrma, mnmf or s-mnmf.
    #[arg(long, default_value = "s-ilrma", value_parser = parse_algo)]
    algo: Algorithm,
    /// FFT length in samples (power of two).
    #[arg(long, default_value_t = 4096, value_parser = clap::value_parser!(u32).range(2..))]
    fft: u32,
    /// Hop in samples; must divide the FFT length at least twice.
    #[arg(long, default_value_t = 2048, value_parser = clap::value_parser!(u32).range(1..))]
    hop: u32,
    /// NMF bases per source.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    bases: u32,
    /// Number of iterations.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    iters: u32,
    /// Laplace weight of the sparse variants (reference setting 0.05).
    #[arg(long, default_value_t = DEFAULT_MU, value_parser = nonnegative)]
    mu: f64,
    /// Bingham offset of the sparse variants (reference setting 10).
    #[arg(long, default_value_t = DEFAULT_RHO, value_parser = nonnegative)]
    rho: f64,
    /// Seed for the random initialization.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of sources for MNMF (default: channel count).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    sources: Option<u32>,
    /// Use the closed-form basis update in the sparse ILRMA instead of the
    /// exact cubic one.
    #[arg(long)]
    closed_form_bases: bool,
    /// Write the cost after every iteration as CSV (iteration,cost).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the learned W and H as a text dump.
    #[arg(long)]
    factors: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Room description (TOML); sample_rate defaults to 16000 Hz (reference setting).
    #[arg(long)]
    room: PathBuf,
    /// Dry source WAVs, one per source position (mono, equal length).
    sources: Vec<PathBuf>,
    /// Generate NMF-structured synthetic sources instead of reading WAVs.
    #[arg(long, conflicts_with = "sources")]
    synthetic: bool,
    /// STFT frames of each synthetic source (4096-point FFT, hop 2048).
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u32).range(2..))]
    frames: u32,
    /// Seed for the synthetic sources.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for mixture.wav and reference_0.wav, reference_1.wav, ...
    #[arg(short, long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Estimated source WAVs (mono).
    #[arg(long, num_args = 1.., required = true)]
    estimates: Vec<PathBuf>,
    /// Reference source WAVs (mono).
    #[arg(long, num_args = 1.., required = true)]
    references: Vec<PathBuf>,
    /// Mixture WAV; adds improvement columns measured against its first channel.
    #[arg(long)]
    mixture: Option<PathBuf>,
    /// Write the table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Experiment description (TOML).
    #[arg(long)]
    spec: PathBuf,
    /// Directory for results.csv and summary.json.
    #[arg(short, long, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads (0 uses every core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

fn parse_algo(s: &str) -> std::result::Result<Algorithm, String> {
    s.parse().map_err(|e: sparsebss::engine::Error| e.to_string())
}

fn nonnegative(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` must be a nonnegative number"))
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn mono(path: &Path) -> Result<Vec<f64>> {
    let w = read_wav(path)?;
    if w.num_channels() != 1 {
        return Err(Error::Config(format!(
            "{}: expected a mono file, found {} channels",
            path.display(),
            w.num_channels()
        )));
    }
    Ok(w.into_channels().remove(0))
}

fn cmd_separate(a: SeparateArgs) -> Result<()> {
    let mut params = SeparationParams::new(a.algo);
    params.stft = StftConfig::new(a.fft as usize, a.hop as usize)?;
    params.bases = a.bases as usize;
    params.iterations = a.iters as usize;
    params.mu = a.mu;
    params.rho = a.rho;
    params.seed = a.seed;
    params.sources = a.sources.map(|n| n as usize);
    params.trace_cost = a.trace.is_some();
    if a.closed_form_bases {
        params.basis_rule = BasisRule::ClosedForm;
    }
    params.validate()?;

    let mixture = read_wav(&a.input)?;
    log::info!(
        "{}: {} channels, {} samples at {} Hz",
        a.input.display(),
        mixture.num_channels(),
        mixture.len(),
        mixture.sample_rate
    );
    let sep = separate(&mixture, &params)?;
    create_dir(&a.out_dir)?;
    for (n, ch) in sep.sources.channels().iter().enumerate() {
        let path = a.out_dir.join(format!("source_{n}.wav"));
        write_wav(&path, &Waveform::mono(mixture.sample_rate, ch.clone())?)?;
        println!("{}", path.display());
    }
    if let Some(path) = &a.trace {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["iteration", "cost"])?;
        for (i, c) in sep.result.cost_trace.iter().enumerate() {
            w.write_record([i.to_string(), format!("{c:?}")])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    if let Some(path) = &a.factors {
        write_factors(path, &sep.result.factors)?;
    }
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let file = RoomFile::load(&a.room)?;
    let room = file.spec();
    let dry: Vec<Vec<f64>> = if a.synthetic {
        let cfg = SynthConfig {
            sample_rate: room.sample_rate,
            ..SynthConfig::new(StftConfig::default(), a.frames as usize, 10, room.sources.len(), a.seed)
        };
        synth_nmf_sources(&cfg)?.waveforms.into_channels()
    } else {
        if a.sources.len() != room.sources.len() {
            return Err(Error::Config(format!(
                "the room has {} source positions; pass that many WAVs or --synthetic",
                room.sources.len()
            )));
        }
        let mut out = Vec::with_capacity(a.sources.len());
        for p in &a.sources {
            out.push(mono(p)?);
        }
        out
    };
    let mix = simulate(&room, &dry, file.max_order, file.reference_mic)?;
    create_dir(&a.out_dir)?;
    let path = a.out_dir.join("mixture.wav");
    write_wav(&path, &mix.mixture)?;
    println!("{}", path.display());
    for (n, img) in mix.images.into_iter().enumerate() {
        let path = a.out_dir.join(format!("reference_{n}.wav"));
        write_wav(&path, &Waveform::mono(room.sample_rate, img)?)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let est = a.estimates.iter().map(|p| mono(p)).collect::<Result<Vec<_>>>()?;
    let refs = a.references.iter().map(|p| mono(p)).collect::<Result<Vec<_>>>()?;
    let len = est.iter().chain(&refs).map(Vec::len).min().unwrap_or(0);
    let trim = |v: Vec<Vec<f64>>| -> Vec<Vec<f64>> { v.into_iter().map(|mut s| {
        s.truncate(len);
        s
    }).collect() };
    let (est, refs) = (trim(est), trim(refs));

    let mut header = vec!["reference", "estimate", "sdr", "sir"];
    let mut rows: Vec<Vec<String>> = Vec::new();
    if let Some(mpath) = &a.mixture {
        let mut mix = read_wav(mpath)?.into_channels().remove(0);
        mix.truncate(len);
        let imp = improvement(&est, &refs, &mix)?;
        header.extend(["sdr_impr", "sir_impr"]);
        for i in 0..refs.len() {
            rows.push(vec![
                i.to_string(),
                imp.separated.permutation[i].to_string(),
                format!("{:.2}", imp.separated.sdr[i]),
                format!("{:.2}", imp.separated.sir[i]),
                format!("{:.2}", imp.sdr_impr[i]),
                format!("{:.2}", imp.sir_impr[i]),
            ]);
        }
    } else {
        let m = sdr_sir(&est, &refs)?;
        for i in 0..refs.len() {
            rows.push(vec![
                i.to_string(),
                m.permutation[i].to_string(),
                format!("{:.2}", m.sdr[i]),
                format!("{:.2}", m.sir[i]),
            ]);
        }
    }

    println!("{}", header.iter().map(|h| format!("{h:>10}")).collect::<String>());
    for r in &rows {
        println!("{}", r.iter().map(|c| format!("{c:>10}")).collect::<String>());
    }
    if let Some(path) = &a.csv {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&header)?;
        for r in &rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn cmd_experiment(a: ExperimentArgs) -> Result<()> {
    let spec = ExperimentSpec::load(&a.spec)?;
    let report = run_experiment(&spec, a.jobs)?;
    create_dir(&a.out_dir)?;
    let csv_path = a.out_dir.join("results.csv");
    let json_path = a.out_dir.join("summary.json");
    write_csv(&csv_path, &report.rows)?;
    write_summary(&json_path, &report.summary)?;
    println!(
        "{:>8} {:>6} {:>6} {:>16} {:>16}",
        "algo", "t60", "trials", "SDR impr (dB)", "SIR impr (dB)"
    );
    for s in &report.summary {
        println!(
            "{:>8} {:>6.2} {:>6} {:>9.2} ± {:<4.2} {:>9.2} ± {:<4.2}",
            s.algo, s.t60, s.trials, s.sdr_impr_mean, s.sdr_impr_std, s.sir_impr_mean, s.sir_impr_std
        );
    }
    println!("{}", csv_path.display());
    println!("{}", json_path.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BSS_LOG", "warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Separate(a) => cmd_separate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Experiment(a) => cmd_experiment(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
