use std::path::Path;
use std::process::{Command, Output};

use sparsebss::synth::{synth_nmf_sources, SynthConfig};
use sparsebss::wav::{read_wav, write_wav};
use sparsebss::{StftConfig, Waveform};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sparsebss"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn two_channel_mixture(path: &Path) {
    let cfg = SynthConfig::new(StftConfig::new(512, 256).unwrap(), 40, 3, 2, 1);
    let src = synth_nmf_sources(&cfg).unwrap().waveforms;
    let (a, b) = (src.channel(0), src.channel(1));
    let x0 = a.iter().zip(b).map(|(a, b)| a + 0.6 * b).collect();
    let x1 = a.iter().zip(b).map(|(a, b)| 0.5 * a + b).collect();
    write_wav(path, &Waveform::new(16000, vec![x0, x1]).unwrap()).unwrap();
}

#[test]
fn separate_writes_one_wav_per_source_and_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("mix.wav");
    two_channel_mixture(&input);
    let out = dir.path().join("out");
    let trace = dir.path().join("trace.csv");
    let factors = dir.path().join("factors.txt");
    let o = run(&[
        "separate",
        "-i",
        input.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
        "--algo",
        "s-ilrma",
        "--fft",
        "512",
        "--hop",
        "256",
        "--bases",
        "3",
        "--iters",
        "5",
        "--trace",
        trace.to_str().unwrap(),
        "--factors",
        factors.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for n in 0..2 {
        let w = read_wav(out.join(format!("source_{n}.wav"))).unwrap();
        assert_eq!(w.num_channels(), 1);
        assert_eq!(w.sample_rate, 16000);
    }
    assert!(!out.join("source_2.wav").exists());
    let text = std::fs::read_to_string(&trace).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "iteration,cost");
    assert_eq!(lines.len(), 1 + 6);
    assert!(lines[6].starts_with("5,"));
    assert!(sparsebss::factors_io::read_factors(&factors).is_ok());
}

#[test]
fn mnmf_runs_from_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("mix.wav");
    two_channel_mixture(&input);
    let o = run(&[
        "separate",
        "-i",
        input.to_str().unwrap(),
        "-o",
        dir.path().to_str().unwrap(),
        "--algo",
        "mnmf",
        "--fft",
        "256",
        "--hop",
        "128",
        "--bases",
        "2",
        "--iters",
        "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("source_1.wav").exists());
}

#[test]
fn missing_input_exits_2_naming_the_path() {
    let o = run(&["separate", "-i", "/definitely/not/here.wav"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/definitely/not/here.wav"));
}

#[test]
fn zero_iterations_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("mix.wav");
    two_channel_mixture(&input);
    let o = run(&["separate", "-i", input.to_str().unwrap(), "--iters", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("source_0.wav").exists());
}

#[test]
fn bad_numeric_flags_rejected() {
    for args in [["--fft", "1000"], ["--hop", "0"], ["--mu", "-1"], ["--algo", "fastica"]] {
        let o = run(&["separate", "-i", "x.wav", args[0], args[1]]);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn mono_input_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("mono.wav");
    write_wav(&input, &Waveform::mono(16000, vec![0.1; 4000]).unwrap()).unwrap();
    let o = run(&["separate", "-i", input.to_str().unwrap(), "--fft", "256", "--hop", "128"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("two channels"));
}

fn write_room(path: &Path, source: &str) {
    let text = format!(
        "dimensions = [6.0, 5.0, 3.0]\nt60 = 0.0\nmics = [[3.0, 2.5, 1.5], [3.05, 2.5, 1.5]]\nsources = [{source}, [2.0, 1.0, 1.5]]\n"
    );
    std::fs::write(path, text).unwrap();
}

#[test]
fn simulate_then_evaluate_identical_pair() {
    let dir = tempfile::tempdir().unwrap();
    let room = dir.path().join("room.toml");
    write_room(&room, "[4.0, 3.5, 1.5]");
    let out = dir.path().join("sim");
    let o = run(&[
        "simulate",
        "--room",
        room.to_str().unwrap(),
        "--synthetic",
        "--frames",
        "4",
        "--seed",
        "2",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mix = read_wav(out.join("mixture.wav")).unwrap();
    assert_eq!(mix.num_channels(), 2);

    let r0 = out.join("reference_0.wav");
    let r1 = out.join("reference_1.wav");
    let csv = dir.path().join("m.csv");
    let o = run(&[
        "evaluate",
        "--estimates",
        r0.to_str().unwrap(),
        r1.to_str().unwrap(),
        "--references",
        r0.to_str().unwrap(),
        r1.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.matches("80.00").count(), 4);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("reference,estimate,sdr,sir"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let room = dir.path().join("room.toml");
    write_room(&room, "[4.0, 3.5, 1.5]");
    for sub in ["a", "b"] {
        let o = run(&[
            "simulate",
            "--room",
            room.to_str().unwrap(),
            "--synthetic",
            "--frames",
            "4",
            "-o",
            dir.path().join(sub).to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    let a = std::fs::read(dir.path().join("a/mixture.wav")).unwrap();
    let b = std::fs::read(dir.path().join("b/mixture.wav")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn source_outside_room_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let room = dir.path().join("room.toml");
    write_room(&room, "[7.0, 3.5, 1.5]");
    let o = run(&["simulate", "--room", room.to_str().unwrap(), "--synthetic", "-o", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("not strictly inside"));
}

#[test]
fn malformed_experiment_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("exp.toml");
    std::fs::write(&spec, "t60_list = [0.1\nalgos = [").unwrap();
    let o = run(&["experiment", "--spec", spec.to_str().unwrap(), "-o", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("exp.toml"));
}

#[test]
fn experiment_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("exp.toml");
    std::fs::write(
        &spec,
        "t60_list = [0.0]\nalgos = [\"ilrma\", \"s-ilrma\"]\ntrials = 2\nmax_order = 0\n\
         [stft]\nfft = 256\nhop = 128\n[separation]\niterations = 5\nbases = 2\n[signals]\nframes = 24\nbases = 2\n",
    )
    .unwrap();
    let o = run(&["experiment", "--spec", spec.to_str().unwrap(), "-o", dir.path().to_str().unwrap(), "--jobs", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 2);
}

#[test]
fn help_documents_defaults() {
    let o = run(&["separate", "--help"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("0.05") && text.contains("reference setting"));
}
