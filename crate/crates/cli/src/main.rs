//! `das`: beamform, estimate speed of sound, simulate and score datasets.

mod grid;
mod image;
mod metrics;
mod phantom;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use das_core::aperture::{design_fnumber, ApertureConfig, DEFAULT_DIRECTIVITY_THRESHOLD};
use das_core::beamformer::{beamform, build_das_matrix, compound, BeamformGrid, DasMatrix, Interpolation, Provenance, SignalMeta};
use das_core::cache::load_or_build;
use das_core::dataset::{load_dataset, save_dataset, Dataset};
use das_core::geometry::{Medium, TransmitScheme};
use das_core::signal::{iq_demodulate, log_compress, ChannelData, SignalKind};
use das_core::soundspeed::{estimate_sos_compound, Acquisition, SosConfig};

use crate::grid::{Bounds, GridSpec};
use crate::image::{write_pgm, RawImage, RawMeta, PIXEL_ORDER};

#[derive(Parser)]
#[command(name = "das", version, about = "Delay-and-sum beamforming for linear arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Beamform a dataset into a B-mode image.
    Beamform {
        #[arg(long = "in")]
        input: PathBuf,
        /// X0,X1,Z0,Z1,NX,NZ in meters and pixels.
        #[arg(long, allow_hyphen_values = true)]
        grid: GridSpec,
        /// Beamforming speed of sound (m/s); defaults to the dataset's nominal value.
        #[arg(long)]
        c: Option<f64>,
        /// Receive f-number; defaults to the directivity-derived value, 0 means full aperture.
        #[arg(long)]
        fnumber: Option<f64>,
        /// 8-bit PGM output.
        #[arg(long)]
        out: PathBuf,
        /// Coherently sum all frames instead of imaging the first one.
        #[arg(long)]
        compound: bool,
        /// Displayed dynamic range (dB).
        #[arg(long, default_value_t = 40.0)]
        dr: f64,
        /// Also write the complex image.
        #[arg(long)]
        raw: Option<PathBuf>,
        /// DAS matrix cache file.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Derive the receive f-number from the element directivity.
    Fnumber {
        /// Element width (m).
        #[arg(long, allow_negative_numbers = true)]
        width: f64,
        #[arg(long)]
        fc: f64,
        #[arg(long)]
        bw: f64,
        #[arg(long, default_value_t = 1540.0)]
        c: f64,
        /// Receive steering angle (degrees).
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        steer: f64,
        /// Directivity threshold.
        #[arg(long, default_value_t = DEFAULT_DIRECTIVITY_THRESHOLD)]
        thresh: f64,
    },
    /// Estimate the average speed of sound by maximizing phase coherence.
    Sos {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        grid: GridSpec,
        /// Search bracket LO,HI (m/s).
        #[arg(long, default_value = "1200,1700")]
        bounds: Bounds,
        /// Write the visited (c, Qp) pairs as CSV.
        #[arg(long)]
        curve: Option<PathBuf>,
        /// Receive f-number; defaults to the directivity-derived value.
        #[arg(long)]
        fnumber: Option<f64>,
    },
    /// Synthesize channel data for a phantom description.
    Simulate {
        #[arg(long)]
        phantom: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Contrast and resolution of a raw beamformed image.
    Metrics {
        /// Raw image written by `beamform --raw`.
        #[arg(long = "in")]
        input: PathBuf,
        /// Must match the grid stored with the image when given.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<GridSpec>,
        /// CSV with columns kind,x_m,z_m[,radius_m,inner_m,outer_m].
        #[arg(long)]
        targets: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Value written to the `param` column, for sweeps.
        #[arg(long)]
        param: Option<String>,
        /// Peak search radius around wire targets (m); defaults to one wavelength.
        #[arg(long)]
        search_radius: Option<f64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Beamform { input, grid, c, fnumber, out, compound, dr, raw, cache } => {
            run_beamform(&input, grid, c, fnumber, &out, compound, dr, raw.as_deref(), cache.as_deref())
        }
        Command::Fnumber { width, fc, bw, c, steer, thresh } => {
            let d = design_fnumber(width, c, fc, bw, thresh, steer.to_radians())?;
            println!("lambda_min={:.6e}", d.lambda_min);
            println!("width_over_lambda={:.6}", d.width_over_lambda);
            println!("alpha_deg={:.4}", d.alpha.to_degrees());
            println!("f_number={:.4}", d.f_number);
            Ok(())
        }
        Command::Sos { input, grid, bounds, curve, fnumber } => run_sos(&input, grid, bounds, curve.as_deref(), fnumber),
        Command::Simulate { phantom, out } => {
            let ds = phantom::PhantomFile::load(&phantom)?.simulate()?;
            save_dataset(&out, &ds).with_context(|| format!("writing {}", out.display()))?;
            Ok(())
        }
        Command::Metrics { input, grid, targets, out, param, search_radius } => {
            metrics::run(&input, grid, &targets, &out, param.as_deref(), search_radius)
        }
    }
}

/// Channel data as I/Q, demodulating RF if needed.
fn load_iq(path: &Path) -> anyhow::Result<Dataset> {
    let mut ds = load_dataset(path).with_context(|| format!("loading {}", path.display()))?;
    if ds.data.kind() == SignalKind::Rf {
        ds.data = iq_demodulate(&ds.data)?;
        ds.meta.kind = SignalKind::Iq;
    }
    Ok(ds)
}

fn aperture_for(ds: &Dataset, c: f64, fnumber: Option<f64>) -> anyhow::Result<ApertureConfig> {
    let f = match fnumber {
        Some(f) => f,
        None => {
            let m = &ds.meta;
            let f = design_fnumber(m.element_width, c, m.fc, m.bandwidth, DEFAULT_DIRECTIVITY_THRESHOLD, 0.0)?.f_number;
            log::info!("derived f-number {f:.4}");
            f
        }
    };
    Ok(ApertureConfig::new(f)?)
}

#[allow(clippy::too_many_arguments)]
fn run_beamform(
    input: &Path,
    spec: GridSpec,
    c: Option<f64>,
    fnumber: Option<f64>,
    out: &Path,
    compound_frames: bool,
    dr: f64,
    raw: Option<&Path>,
    cache: Option<&Path>,
) -> anyhow::Result<()> {
    let ds = load_iq(input)?;
    let c = c.unwrap_or(ds.c0());
    let medium = Medium::new(c)?;
    let aperture = aperture_for(&ds, c, fnumber)?;
    let grid = spec.build()?;
    let geom = ds.geometry()?;
    let schemes = ds.schemes()?;
    let frames: Vec<usize> = if compound_frames {
        (0..ds.data.n_frames()).collect()
    } else {
        if ds.data.n_frames() > 1 {
            log::warn!("dataset holds {} frames; imaging frame 0 (use --compound to sum them)", ds.data.n_frames());
        }
        vec![0]
    };

    // One matrix per distinct transmit.
    let mut distinct: Vec<TransmitScheme> = Vec::new();
    for &f in &frames {
        if !distinct.contains(&schemes[f]) {
            distinct.push(schemes[f]);
        }
    }
    let signal = SignalMeta::of(&ds.data);
    let build = |k: usize, scheme: &TransmitScheme| -> anyhow::Result<DasMatrix> {
        let make = || build_das_matrix(&grid, &geom, scheme, &medium, signal, &aperture, Interpolation::Linear);
        Ok(match cache {
            Some(path) => {
                let path = if distinct.len() == 1 { path.to_path_buf() } else { cache_path(path, k) };
                let prov = Provenance::new(&grid, &geom, scheme, &medium, signal, &aperture, Interpolation::Linear);
                load_or_build(&path, &prov, make)?
            }
            None => make()?,
        })
    };
    let matrices = distinct.iter().enumerate().map(|(k, s)| build(k, s)).collect::<anyhow::Result<Vec<_>>>()?;

    let mut images = Vec::with_capacity(frames.len());
    for &f in &frames {
        let m = &matrices[distinct.iter().position(|s| *s == schemes[f]).expect("scheme listed")];
        images.extend(beamform(m, &ds.data.select_frames(&[f])?)?);
    }
    let image = compound(&images)?;

    let levels = log_compress(&image.envelope(), dr)?;
    write_pgm(out, &levels, spec.nx, spec.nz)?;
    if let Some(raw) = raw {
        RawImage {
            meta: RawMeta {
                schema_version: 1,
                grid: spec,
                order: PIXEL_ORDER.into(),
                speed_of_sound: c,
                fc: ds.meta.fc,
                f_number: aperture.f_number,
                frames: frames.len(),
            },
            values: image.values,
        }
        .save(raw)?;
    }
    Ok(())
}

fn cache_path(base: &Path, k: usize) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(format!(".{k}"));
    PathBuf::from(s)
}

fn run_sos(input: &Path, spec: GridSpec, bounds: Bounds, curve: Option<&Path>, fnumber: Option<f64>) -> anyhow::Result<()> {
    let ds = load_iq(input)?;
    let grid: BeamformGrid = spec.build()?;
    let geom = ds.geometry()?;
    let schemes = ds.schemes()?;
    let aperture = aperture_for(&ds, ds.c0(), fnumber)?;
    let frames: Vec<ChannelData> =
        (0..ds.data.n_frames()).map(|f| ds.data.select_frames(&[f])).collect::<Result<_, _>>()?;
    let acqs: Vec<Acquisition<'_>> = frames.iter().zip(&schemes).map(|(data, scheme)| Acquisition { data, scheme }).collect();
    let Bounds(lo, hi) = bounds;
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        bail!("bounds must satisfy LO < HI, got {lo},{hi}");
    }
    let cfg = SosConfig { c0: ds.c0(), bounds: (lo, hi), ..SosConfig::default() };
    let est = estimate_sos_compound(&acqs, &grid, &geom, &aperture, &cfg)?;
    if est.at_bound {
        log::warn!("estimate lies on the search bracket; the true speed may be outside [{lo}, {hi}]");
    }
    if let Some(path) = curve {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(["c_m_per_s", "Qp"])?;
        for (c, q) in &est.qp_curve {
            w.write_record([c.to_string(), q.to_string()])?;
        }
        w.flush()?;
    }
    println!("c_hat={} m/s", est.c_hat);
    Ok(())
}
