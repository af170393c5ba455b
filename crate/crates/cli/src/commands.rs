use std::path::Path;

use anyhow::{anyhow, bail, Context};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use optempest::diode::{
    assert_unidirectional, diode_send_captured, DiodeLink, FloodProgram, ReadAllProgram,
    ReceiveSideProgram, Topology, WriteBackProgram,
};
use optempest::emanation::{synthesize_class, DeviceProfile, NoiseModel, OpticalTrace};
use optempest::format::{
    read_frame_dump, read_nibbles, read_optrace, write_frame_dump, write_nibbles, write_optevents,
    write_optrace,
};
use optempest::mac::{
    abort_transmission, build_frame, receive, EthernetFrame, Field, FrameVerdict, MacAddr,
    MiiNibbleStream,
};
use optempest::recovery::{
    check_stretch_monotonic, classify_trace, estimate_baud, recover_serial, threshold_detect,
    RecoveryError, RecoveryOptions, StretchSweep, STANDARD_BAUD_RATES,
};

use crate::config::{BaudSetting, ExperimentConfig};
use crate::output::write_atomic;
use crate::{Command, Failure, MacCommand};

/// Leakage estimator jitter tolerated by the sweep's monotonicity check, in bits.
const SWEEP_MI_SLACK: f64 = 0.01;

/// Longest payload of a random CLI frame.
const RANDOM_PAYLOAD_MAX: usize = 128;

pub(crate) fn dispatch(command: &Command, cfg: &ExperimentConfig) -> Result<(), Failure> {
    match command {
        Command::Synth => synth(cfg),
        Command::Recover { trace } => recover(trace, cfg),
        Command::Classify { trace } => classify(trace, cfg),
        Command::SweepStretch => sweep_stretch(cfg),
        Command::Mac(m) => mac(m, cfg),
        Command::Diode {
            frames_file,
            wired_back,
        } => diode(frames_file.as_deref(), *wired_back, cfg),
        Command::Config => {
            print!("{}", cfg.to_text());
            Ok(())
        }
    }
}

fn no_signal(e: RecoveryError) -> Failure {
    match e {
        RecoveryError::NoSignal => Failure::NoSignal("trace is flat or empty".into()),
        other => Failure::Config(other.into()),
    }
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_trace(path: &Path) -> anyhow::Result<OpticalTrace> {
    read_optrace(&read_text(path)?)
        .with_context(|| format!("invalid trace file {}", path.display()))
}

fn print_paths(paths: &[std::path::PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn synth(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let baud = cfg.fixed_baud()?;
    let mut profile = DeviceProfile::new(cfg.class);
    profile.drive.serial = Some(cfg.serial(baud)?);
    profile.drive.stretch_min_on = match cfg.stretch_us.as_slice() {
        [] => 0.0,
        [us] => us * 1e-6,
        _ => return Err(anyhow!("synth takes a single --stretch-us value").into()),
    };
    let data = cfg.data.as_bytes();
    let truth = profile.drive_signal(data)?;
    let trace = synthesize_class(
        &profile,
        data,
        &NoiseModel::gaussian(cfg.sigma, cfg.seed),
        cfg.sample_rate_for(baud),
    )?;
    let paths = [
        write_atomic(&cfg.out, "trace.optrace", &write_optrace(&trace))?,
        write_atomic(&cfg.out, "truth.optevents", &write_optevents(&truth))?,
        write_atomic(&cfg.out, "experiment.cfg", &cfg.to_text())?,
    ];
    print_paths(&paths);
    Ok(())
}

fn recover(path: &Path, cfg: &ExperimentConfig) -> Result<(), Failure> {
    let trace = read_trace(path)?;
    let options = RecoveryOptions::default();
    let baud = match cfg.baud {
        BaudSetting::Fixed(b) => b,
        BaudSetting::Auto => {
            let bright =
                threshold_detect(&trace, options.hysteresis_fraction).map_err(no_signal)?;
            let line = if bright.final_level() {
                bright
            } else {
                bright.inverted()
            };
            estimate_baud(&line, &STANDARD_BAUD_RATES)?
        }
    };
    let result = recover_serial(&trace, &cfg.serial(baud)?, &options).map_err(no_signal)?;
    println!("{}", serde_json::to_string(&result)?);
    Ok(())
}

fn classify(path: &Path, cfg: &ExperimentConfig) -> Result<(), Failure> {
    let trace = read_trace(path)?;
    let serial = cfg.serial(cfg.fixed_baud()?)?;
    let report = classify_trace(&trace, cfg.data.as_bytes(), &serial)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

fn random_octets(seed: u64, n: usize) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random()).collect()
}

fn sweep_stretch(cfg: &ExperimentConfig) -> Result<(), Failure> {
    if cfg.stretch_us.is_empty() {
        return Err(anyhow!("--stretch-us needs at least one value").into());
    }
    if cfg.payload_octets == 0 {
        return Err(anyhow!("--payload-octets must be positive").into());
    }
    let baud = cfg.fixed_baud()?;
    let serial = cfg.serial(baud)?;
    let mut sweep = StretchSweep::new(serial, cfg.sample_rate_for(baud));
    sweep.noise = NoiseModel::gaussian(cfg.sigma, cfg.seed);
    let data = random_octets(cfg.seed, cfg.payload_octets);
    let min_on: Vec<f64> = cfg.stretch_us.iter().map(|us| us * 1e-6).collect();
    let points = sweep.run(&data, &min_on)?;

    let mut csv = String::from("min_on_us,min_on_bits,ber,mutual_information_bits\n");
    for (us, p) in cfg.stretch_us.iter().zip(&points) {
        csv.push_str(&format!(
            "{us},{},{},{}\n",
            p.min_on / serial.bit_time(),
            p.ber,
            p.mutual_information
        ));
    }
    let paths = [
        write_atomic(&cfg.out, "stretch_sweep.csv", &csv)?,
        write_atomic(&cfg.out, "experiment.cfg", &cfg.to_text())?,
    ];
    print_paths(&paths);
    check_stretch_monotonic(&points, SWEEP_MI_SLACK)
        .map_err(|m| anyhow!("monotonicity check failed: {m}"))?;
    Ok(())
}

/// Frames with random addresses and payloads, reproducible from `seed`.
pub fn random_frames(seed: u64, n: usize) -> Vec<EthernetFrame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut addr = || {
                let mut a: [u8; 6] = rng.random();
                a[0] = (a[0] & 0xFC) | 0x02;
                MacAddr(a)
            };
            let (dst, src) = (addr(), addr());
            let len = rng.random_range(0..=RANDOM_PAYLOAD_MAX);
            let payload: Vec<u8> = (0..len).map(|_| rng.random()).collect();
            build_frame(dst, src, 0x88B5, &payload).expect("payload under the maximum")
        })
        .collect()
}

/// Reads frames from a hex dump (space-separated octets) or nibble strings,
/// one per line.
fn read_streams(path: &Path) -> anyhow::Result<Vec<MiiNibbleStream>> {
    let text = read_text(path)?;
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.is_empty() {
        bail!("{} contains no frames", path.display());
    }
    lines
        .iter()
        .map(|line| {
            if line.trim().contains(char::is_whitespace) {
                let octets = &read_frame_dump(line)?[0];
                let mut wire = vec![0x55; 7];
                wire.push(0xD5);
                wire.extend_from_slice(octets);
                Ok(MiiNibbleStream::from_octets(&wire))
            } else {
                Ok(read_nibbles(line)?)
            }
        })
        .collect()
}

fn verdict_json(index: usize, v: &FrameVerdict) -> serde_json::Value {
    match v {
        FrameVerdict::Accept(f) => json!({"frame": index, "verdict": "accept", "length": f.len()}),
        FrameVerdict::Reject(r) => {
            json!({"frame": index, "verdict": "reject", "reason": r.to_string()})
        }
    }
}

fn mac(command: &MacCommand, cfg: &ExperimentConfig) -> Result<(), Failure> {
    match command {
        MacCommand::Build {
            dst,
            src,
            ethertype,
            random,
        } => {
            let frames = if *random {
                random_frames(cfg.seed, cfg.frames)
            } else {
                let dst: MacAddr = dst.parse()?;
                let src: MacAddr = src.parse()?;
                vec![build_frame(dst, src, *ethertype, cfg.data.as_bytes())?]
            };
            let dump = write_frame_dump(&frames);
            write_atomic(&cfg.out, "frames.hex", &dump)?;
            print!("{dump}");
        }
        MacCommand::Validate { input } => {
            for (i, s) in read_streams(input)?.iter().enumerate() {
                println!("{}", verdict_json(i, &receive(s).1));
            }
        }
        MacCommand::Abort { input, at } => {
            let mut out = String::new();
            for s in read_streams(input)? {
                let sfd = s
                    .sfd_index()
                    .ok_or_else(|| anyhow!("stream has no start frame delimiter"))?;
                let at = at.unwrap_or((sfd + 1 + s.len().saturating_sub(8)) / 2);
                out.push_str(&write_nibbles(&abort_transmission(&s, at)?));
                out.push('\n');
            }
            write_atomic(&cfg.out, "aborted.nibbles", &out)?;
            print!("{out}");
        }
        MacCommand::Peek { input } => {
            for (i, s) in read_streams(input)?.iter().enumerate() {
                let (state, verdict) = receive(s);
                let mut obj = serde_json::Map::new();
                obj.insert("frame".into(), json!(i));
                for f in Field::ALL {
                    obj.insert(f.name().into(), json!(state.valid_since(f)));
                }
                obj.insert(
                    "verdict".into(),
                    verdict_json(i, &verdict)["verdict"].clone(),
                );
                println!("{}", serde_json::Value::Object(obj));
            }
        }
    }
    Ok(())
}

fn diode(
    frames_file: Option<&Path>,
    wired_back: bool,
    cfg: &ExperimentConfig,
) -> Result<(), Failure> {
    let frames = match frames_file {
        Some(path) => read_frame_dump(&read_text(path)?)?
            .iter()
            .map(|o| EthernetFrame::from_wire(o))
            .collect::<Result<Vec<_>, _>>()?,
        None => random_frames(cfg.seed, cfg.frames),
    };
    let baud = cfg.fixed_baud()?;
    let link = DiodeLink {
        channel_attenuation: cfg.attenuation,
        sample_rate: cfg.sample_rate.unwrap_or(16.0 * f64::from(baud)),
        serial_cfg: cfg.serial(baud)?,
        ..DiodeLink::default()
    };
    let noise = NoiseModel::gaussian(cfg.sigma, cfg.seed);
    let transfer = diode_send_captured(&frames, &link, &noise)?;

    let join =
        |pick: fn(&(OpticalTrace, OpticalTrace)) -> &OpticalTrace| -> anyhow::Result<OpticalTrace> {
            let mut all = OpticalTrace::new(link.sample_rate, Vec::new(), 0.0)?;
            for c in &transfer.captures {
                all = all.concat(pick(c))?;
            }
            Ok(all)
        };
    let emitted = join(|c| &c.0)?;
    let received = join(|c| &c.1)?;

    let topology = if wired_back {
        Topology::WiredBack
    } else {
        Topology::OneWay
    };
    let mut programs: Vec<Box<dyn ReceiveSideProgram>> = vec![
        Box::new(FloodProgram::new(cfg.seed, 512)),
        Box::new(ReadAllProgram::default()),
        Box::new(WriteBackProgram::default()),
    ];
    let mut evidence = Vec::new();
    for p in programs.iter_mut() {
        evidence.push(assert_unidirectional(
            &frames,
            &link,
            &noise,
            p.as_mut(),
            topology,
        )?);
    }

    let report = serde_json::to_string(&transfer.report)?;
    write_atomic(&cfg.out, "emitted.optrace", &write_optrace(&emitted))?;
    write_atomic(&cfg.out, "received.optrace", &write_optrace(&received))?;
    write_atomic(&cfg.out, "link_report.json", &format!("{report}\n"))?;
    write_atomic(
        &cfg.out,
        "unidirectionality.json",
        &format!("{}\n", serde_json::to_string(&evidence)?),
    )?;
    write_atomic(&cfg.out, "experiment.cfg", &cfg.to_text())?;
    println!("{report}");

    let failed: Vec<&str> = evidence
        .iter()
        .filter(|e| !e.passed)
        .map(|e| e.program.as_str())
        .collect();
    if !failed.is_empty() {
        return Err(Failure::Violation(format!(
            "receive-side programs reached the emitter: {}",
            failed.join(", ")
        )));
    }
    Ok(())
}
