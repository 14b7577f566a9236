use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc::{sync_channel, Receiver};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::physics::{boundary_mass_fraction, prepare_initial_data, Conserved, Nonlinearity, Preflight, Stepper};
use crate::error::{Result, SbpError};
use crate::fft;
use crate::field::{ComplexField, Space};
use crate::par;
use crate::snapshot::{self, Precision};
use crate::spectral;

/// State handed to the diagnostics side at every emission step.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub step: u64,
    pub t: f64,
    /// Physical-space field.
    pub u: ComplexField,
    /// Its transform.
    pub u_hat: ComplexField,
}

/// Serialized state of a [`SnapshotSink`] stored in checkpoints.
#[derive(Clone, Debug, Default)]
pub struct SinkState {
    pub json: serde_json::Value,
    pub fields: Vec<ComplexField>,
}

/// Consumer of the snapshot stream. Runs on its own thread and sees
/// snapshots in time order; it never touches the simulation state.
pub trait SnapshotSink: Send {
    fn observe(&mut self, snapshot: &Snapshot) -> Result<()>;

    fn save_state(&self) -> Result<SinkState> {
        Ok(SinkState::default())
    }

    fn restore_state(&mut self, _state: SinkState) -> Result<()> {
        Ok(())
    }
}

/// Discards everything.
impl SnapshotSink for () {
    fn observe(&mut self, _: &Snapshot) -> Result<()> {
        Ok(())
    }
}

/// Keeps every snapshot in memory.
#[derive(Default)]
pub struct CollectSnapshots(pub Vec<Snapshot>);

impl SnapshotSink for CollectSnapshots {
    fn observe(&mut self, snapshot: &Snapshot) -> Result<()> {
        self.0.push(snapshot.clone());
        Ok(())
    }
}

/// One row of the time series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub linf: f64,
    pub sobolev: f64,
    pub weighted: f64,
    pub boundary_mass: f64,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Directory for checkpoint files; required when the config asks for them.
    pub checkpoint_dir: Option<PathBuf>,
    /// Resume from this checkpoint instead of preparing initial data.
    pub resume: Option<PathBuf>,
    /// Bound of the snapshot queue; 0 picks the default.
    pub queue_depth: usize,
    /// Skip the box and resolution preflight.
    pub skip_preflight: bool,
    /// Use this field as initial data as given, without rescaling.
    pub initial_data: Option<ComplexField>,
}

pub struct RunOutput<S> {
    pub records: Vec<StepRecord>,
    pub final_field: ComplexField,
    pub final_time: f64,
    pub steps: u64,
    pub baseline: Conserved,
    pub preflight: Option<Preflight>,
    pub checkpoints: Vec<PathBuf>,
    pub sink: S,
}

impl<S> RunOutput<S> {
    pub fn max_mass_drift(&self) -> f64 {
        self.records
            .iter()
            .map(|r| (r.mass - self.baseline.mass).abs() / self.baseline.mass)
            .fold(0.0, f64::max)
    }

    pub fn max_energy_drift(&self) -> f64 {
        let scale = self.baseline.energy.abs().max(f64::MIN_POSITIVE);
        self.records
            .iter()
            .map(|r| (r.energy - self.baseline.energy).abs() / scale)
            .fold(0.0, f64::max)
    }
}

enum Message {
    Snapshot(Box<Snapshot>),
    Checkpoint(Box<Snapshot>),
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"SBPC";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    config: SimConfig,
    step: u64,
    t: f64,
    baseline: Conserved,
    sink: serde_json::Value,
    sink_fields: usize,
}

pub struct Checkpoint {
    pub config: SimConfig,
    pub step: u64,
    pub t: f64,
    pub baseline: Conserved,
    pub field: ComplexField,
    pub sink: SinkState,
}

pub fn checkpoint_path(dir: &Path, step: u64) -> PathBuf {
    dir.join(format!("checkpoint_{step:010}.sbpc"))
}

pub fn write_checkpoint(path: &Path, cp: &Checkpoint) -> Result<()> {
    let header = serde_json::to_vec(&CheckpointHeader {
        config: cp.config.clone(),
        step: cp.step,
        t: cp.t,
        baseline: cp.baseline,
        sink: cp.sink.json.clone(),
        sink_fields: cp.sink.fields.len(),
    })?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(header.len() as u64).to_le_bytes())?;
    w.write_all(&header)?;
    snapshot::write_snapshot(&mut w, &cp.field, cp.t, Precision::Complex128)?;
    for f in &cp.sink.fields {
        snapshot::write_snapshot(&mut w, f, cp.t, Precision::Complex128)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut r = BufReader::new(File::open(path)?);
    let mut head = [0u8; 16];
    r.read_exact(&mut head)
        .map_err(|e| SbpError::Format(format!("truncated checkpoint: {e}")))?;
    if &head[0..4] != CHECKPOINT_MAGIC {
        return Err(SbpError::Format("missing SBPC magic".into()));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(SbpError::Format(format!("unsupported checkpoint version {version}")));
    }
    let len = u64::from_le_bytes(head[8..16].try_into().unwrap()) as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)
        .map_err(|e| SbpError::Format(format!("truncated checkpoint header: {e}")))?;
    let header: CheckpointHeader = serde_json::from_slice(&json)?;
    let (field, _) = snapshot::read_snapshot(&mut r)?;
    let fields = (0..header.sink_fields)
        .map(|_| snapshot::read_snapshot(&mut r).map(|(f, _)| f))
        .collect::<Result<Vec<_>>>()?;
    Ok(Checkpoint {
        config: header.config,
        step: header.step,
        t: header.t,
        baseline: header.baseline,
        field,
        sink: SinkState {
            json: header.sink,
            fields,
        },
    })
}

/// Configurations that may share a checkpoint: everything but the end time
/// and the output cadence must match.
fn resumable(saved: &SimConfig, now: &SimConfig) -> bool {
    let mut a = saved.clone();
    let mut b = now.clone();
    for c in [&mut a, &mut b] {
        c.t_end = 0.0;
        c.snapshot_stride = 0;
        c.checkpoint_stride = 0;
        c.log_snapshots_per_octave = 0;
    }
    a == b
}

fn record(config: &SimConfig, nonlin: &Nonlinearity, snap: &Snapshot) -> Result<StepRecord> {
    let c = nonlin.conserved(&snap.u)?;
    Ok(StepRecord {
        t: snap.t,
        mass: c.mass,
        energy: c.energy,
        linf: snap.u.linf_norm(),
        sobolev: spectral::sobolev_norm(&snap.u_hat, config.gamma)?,
        weighted: spectral::weighted_norm(&snap.u, config.gamma)?,
        boundary_mass: boundary_mass_fraction(&snap.u),
    })
}

struct ConsumerResult<S> {
    records: Vec<StepRecord>,
    checkpoints: Vec<PathBuf>,
    sink: S,
}

fn consume<S: SnapshotSink>(
    rx: Receiver<Message>,
    config: &SimConfig,
    nonlin: Nonlinearity,
    baseline: Conserved,
    checkpoint_dir: Option<&Path>,
    mut sink: S,
) -> Result<ConsumerResult<S>> {
    let mut records = Vec::new();
    let mut checkpoints = Vec::new();
    for msg in rx {
        let (snap, checkpoint) = match msg {
            Message::Snapshot(s) => (s, false),
            Message::Checkpoint(s) => (s, true),
        };
        records.push(record(config, &nonlin, &snap)?);
        sink.observe(&snap)?;
        if checkpoint {
            let dir = checkpoint_dir.ok_or_else(|| {
                SbpError::InvalidParameter("checkpoint requested without a directory".into())
            })?;
            let path = checkpoint_path(dir, snap.step);
            write_checkpoint(
                &path,
                &Checkpoint {
                    config: config.clone(),
                    step: snap.step,
                    t: snap.t,
                    baseline,
                    field: snap.u.clone(),
                    sink: sink.save_state()?,
                },
            )?;
            checkpoints.push(path);
        }
    }
    Ok(ConsumerResult {
        records,
        checkpoints,
        sink,
    })
}

/// Steps the equation from `t = 0` (or a checkpoint) to `t_end`, streaming
/// snapshots to `sink` through a bounded queue.
///
/// Free half steps are fused between emission steps. At every emission the
/// physical field becomes the state the next step starts from, so a run
/// resumed from a checkpoint is bitwise identical to an uninterrupted one.
pub fn run<S: SnapshotSink>(config: &SimConfig, mut sink: S, options: RunOptions) -> Result<RunOutput<S>> {
    config.validate()?;
    let grid = config.grid()?;
    let stepper = Stepper::new(grid, config.dt, config.couplings, config.pad_factor)?;
    let total = config.total_steps();

    let (u0, start, baseline, preflight) = match &options.resume {
        Some(path) => {
            let cp = read_checkpoint(path)?;
            if !resumable(&cp.config, config) {
                return Err(SbpError::InvalidParameter(
                    "checkpoint was written by a different configuration".into(),
                ));
            }
            if cp.step > total {
                return Err(SbpError::InvalidParameter(format!(
                    "checkpoint step {} beyond the {} steps requested",
                    cp.step, total
                )));
            }
            sink.restore_state(cp.sink)?;
            (cp.field, cp.step, cp.baseline, None)
        }
        None => {
            let u0 = match options.initial_data.clone() {
                Some(u) => {
                    if !u.grid().same_as(&grid) {
                        return Err(SbpError::GridMismatch("initial data grid".into()));
                    }
                    u
                }
                None => prepare_initial_data(config)?,
            };
            let pre = if options.skip_preflight {
                None
            } else {
                let p = Preflight::measure(config, &u0)?;
                p.check(config)?;
                Some(p)
            };
            let baseline = stepper.nonlinearity().conserved(&u0)?;
            (u0, 0, baseline, pre)
        }
    };
    u0.expect_space(Space::Physical)?;

    let emission = config.snapshot_steps();
    let checkpoint_every = config.checkpoint_stride;
    if checkpoint_every > 0 && options.checkpoint_dir.is_none() {
        return Err(SbpError::InvalidParameter("checkpoint stride set without a directory".into()));
    }
    let depth = if options.queue_depth == 0 { 4 } else { options.queue_depth };
    let (tx, rx) = sync_channel::<Message>(depth);
    let consumer_nonlin = stepper.nonlinearity().clone();
    let checkpoint_dir = options.checkpoint_dir.clone();

    let (producer, consumer) = std::thread::scope(|scope| {
        let handle = scope.spawn(|| {
            consume(rx, config, consumer_nonlin, baseline, checkpoint_dir.as_deref(), sink)
        });

        let produce = || -> Result<(ComplexField, u64)> {
            let dt = config.dt;
            let guards = config.guards;
            let mut step = start;
            let mut u = u0.clone();
            let send = |msg: Message| -> Result<()> {
                tx.send(msg)
                    .map_err(|_| SbpError::InvalidParameter("diagnostics consumer stopped".into()))
            };
            let emit = |step: u64, u: &ComplexField| -> Result<()> {
                let u_hat = fft::fft(u)?;
                let snap = Box::new(Snapshot {
                    step,
                    t: step as f64 * dt,
                    u: u.clone(),
                    u_hat,
                });
                if checkpoint_every > 0 && step % checkpoint_every == 0 && step != start {
                    send(Message::Checkpoint(snap))
                } else {
                    send(Message::Snapshot(snap))
                }
            };
            if start == 0 {
                emit(0, &u)?;
            }
            let mut next = emission.iter().copied().filter(|&s| s > start).peekable();
            let half = stepper.half_phase();
            let full = stepper.full_phase();
            let nonlin = stepper.nonlinearity();
            let mut hat: Vec<Complex64> = u.values().to_vec();
            fft::forward_inplace(&grid, &mut hat);
            let mut fresh = true;
            while step < total {
                let phase = if fresh { half } else { full };
                par::update(&mut hat, |i, z| *z *= phase[i]);
                fresh = false;
                fft::inverse_inplace(&grid, &mut hat);
                nonlin.apply_phase(&mut hat, dt)?;
                fft::forward_inplace(&grid, &mut hat);
                step += 1;

                let t = step as f64 * dt;
                if step % 64 == 0 && !hat.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                    return Err(SbpError::NumericalAbort {
                        t,
                        reason: "non-finite values in the field".into(),
                    });
                }
                if next.peek() == Some(&step) {
                    next.next();
                    par::update(&mut hat, |i, z| *z *= half[i]);
                    fft::inverse_inplace(&grid, &mut hat);
                    u = ComplexField::from_vec(grid, Space::Physical, std::mem::take(&mut hat))?;
                    if !u.is_finite() {
                        return Err(SbpError::NumericalAbort {
                            t,
                            reason: "non-finite values in the field".into(),
                        });
                    }
                    let edge = boundary_mass_fraction(&u);
                    if edge > guards.boundary_tolerance {
                        return Err(SbpError::NumericalAbort {
                            t,
                            reason: format!(
                                "box too small: boundary mass fraction {edge:.3e} exceeds {:.1e}",
                                guards.boundary_tolerance
                            ),
                        });
                    }
                    emit(step, &u)?;
                    hat = u.values().to_vec();
                    fft::forward_inplace(&grid, &mut hat);
                    fresh = true;
                }
            }
            Ok((u, step))
        };
        let produced = produce();
        drop(tx);
        let consumed = handle.join().expect("diagnostics thread panicked");
        (produced, consumed)
    });

    // a consumer failure usually explains a producer send failure
    let consumer = consumer?;
    let (final_field, steps) = producer?;
    Ok(RunOutput {
        records: consumer.records,
        final_time: steps as f64 * config.dt,
        final_field,
        steps,
        baseline,
        preflight,
        checkpoints: consumer.checkpoints,
        sink: consumer.sink,
    })
}
