use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Result};
use cvrnn::dynamics::{principal_arg, propagate, ComplexState, PropagateOptions, SystemMatrix};
use cvrnn::lattice::build_lattice;
use cvrnn::pipeline::{
    background_split, circular_distance, layer1_initial_state, layer1_matrix, layer1_run, layer2_initial_state, layer2_matrix, LayerConfig, PipelineConfig,
};
use cvrnn::spectral::{leading_eigenpairs, lowrank_reconstruct_scaled, mode_contributions, EigenDecomposition};

use crate::dataset::load_image;
use crate::output::{frame_name, phase_pgm, phase_ppm, RunManifest};
use crate::{load_config, usage};

/// Residual bound relative to the Frobenius norm of the matrix.
const EIG_TOL: f64 = 1e-9;

#[derive(clap::Args)]
pub struct Common {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Layer whose system matrix is analysed (2 masks out the background)
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    layer: u8,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(clap::Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    common: Common,
    /// Number of leading eigenpairs
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    modes: u64,
    /// Last step of the contribution traces; the layer's step count by default
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    ppm: bool,
}

#[derive(clap::Args)]
pub struct LowrankArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    rank: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    steps: u64,
    /// Eigenpairs to compute; defaults to the rank
    #[arg(long)]
    modes: Option<u64>,
    /// Write reconstructed phase frames
    #[arg(long)]
    frames: bool,
}

struct System {
    cfg: PipelineConfig,
    side: usize,
    b: SystemMatrix,
    x0: ComplexState,
    /// Nodes that take part in the coupled dynamics.
    active: Vec<usize>,
    layer: LayerConfig,
}

fn system(c: &Common) -> Result<System> {
    let mut cfg = load_config(&c.config)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    let (side, image) = load_image(&c.image)?;
    if side != cfg.side {
        return Err(usage(format!("image is {side}x{side} but config side is {}", cfg.side)));
    }
    let n = side * side;
    if c.layer == 1 {
        return Ok(System {
            b: layer1_matrix(&image, &cfg)?,
            x0: layer1_initial_state(&cfg)?,
            active: (0..n).collect(),
            layer: cfg.layer1,
            side,
            cfg,
        });
    }
    let rec = layer1_run(&image, &cfg)?;
    let split = background_split(&rec, cfg.background_step, &build_lattice(side)?)?;
    if split.degenerate {
        bail!("layer 1 found no foreground; use --layer 1 for this image");
    }
    Ok(System {
        b: layer2_matrix(&image, &split.foreground, &cfg)?,
        x0: layer2_initial_state(&cfg)?,
        active: (0..n).filter(|&i| split.foreground[i]).collect(),
        layer: cfg.layer2,
        side,
        cfg,
    })
}

fn decompose(s: &System, modes: usize) -> Result<EigenDecomposition> {
    let n = s.b.dim();
    if modes > n {
        return Err(usage(format!("{modes} modes requested but the matrix is {n}x{n}")));
    }
    Ok(leading_eigenpairs(&s.b, modes, EIG_TOL, s.cfg.seed)?)
}

pub fn run_spectrum(a: SpectrumArgs) -> Result<()> {
    let start = Instant::now();
    let s = system(&a.common)?;
    let dec = decompose(&s, a.modes as usize)?;
    let mut manifest = RunManifest::new("spectrum", s.cfg.seed);
    manifest.config_digest = Some(s.cfg.digest());
    manifest.inputs = vec![a.common.image.clone(), a.common.config.clone()];
    let out = &a.common.out;

    let mut table = String::from("mode\tre\tim\tmodulus\tphase\tresidual\n");
    for (i, lam) in dec.eigenvalues().iter().enumerate() {
        let _ = writeln!(
            table,
            "{}\t{:.15e}\t{:.15e}\t{:.15e}\t{:.15e}\t{:.3e}",
            i + 1,
            lam.re,
            lam.im,
            lam.norm(),
            principal_arg(*lam),
            dec.residuals()[i]
        );
    }
    manifest.emit(out.join("eigenvalues.tsv"), table.as_bytes())?;

    for i in 0..dec.modes() {
        let phases: Vec<f64> = dec.right_vector(i).iter().map(|z| principal_arg(*z)).collect();
        manifest.emit(out.join("modes").join(format!("mode_{:05}.pgm", i + 1)), &phase_pgm(s.side, &phases))?;
        if a.ppm {
            manifest.emit(out.join("modes").join(format!("mode_{:05}.ppm", i + 1)), &phase_ppm(s.side, &phases))?;
        }
    }

    let steps = a.steps.unwrap_or(s.layer.steps);
    let trace = mode_contributions(&dec, &s.x0, steps)?;
    let mut t = String::from("step");
    for i in 0..dec.modes() {
        let _ = write!(t, "\tmu{}", i + 1);
    }
    t.push('\n');
    for k in 0..trace.len() {
        let _ = write!(t, "{k}");
        for v in trace.normalized_row(k) {
            let _ = write!(t, "\t{v:.12e}");
        }
        t.push('\n');
    }
    manifest.emit(out.join("contributions.tsv"), t.as_bytes())?;
    manifest.timings.push(("spectrum".into(), start.elapsed()));
    manifest.write(out)?;
    let worst = dec.residuals().iter().copied().fold(0.0, f64::max);
    println!("modes\t{}\tmax_residual\t{worst:.3e}", dec.modes());
    Ok(())
}

pub fn run_lowrank(a: LowrankArgs) -> Result<()> {
    let start = Instant::now();
    let rank = a.rank as usize;
    let modes = a.modes.map_or(rank, |m| m as usize);
    if rank > modes {
        return Err(usage(format!("rank {rank} exceeds the {modes} modes computed")));
    }
    let s = system(&a.common)?;
    let dec = decompose(&s, modes)?;
    let steps = a.steps as usize;
    let exact = propagate(&s.b, &s.x0, PropagateOptions::new(steps, 1))?;
    let mut manifest = RunManifest::new("lowrank", s.cfg.seed);
    manifest.config_digest = Some(s.cfg.digest());
    manifest.inputs = vec![a.common.image.clone(), a.common.config.clone()];
    let out = &a.common.out;

    let mut table = String::from("step\tmean_circular_error\tmax_circular_error\n");
    let mut worst_mean: f64 = 0.0;
    for (t, &k) in exact.step_indices().iter().enumerate() {
        let (approx, _) = lowrank_reconstruct_scaled(&dec, &s.x0, k, rank)?;
        let phases = approx.phases();
        let truth = exact.phases_at(t);
        let errs: Vec<f64> = s.active.iter().map(|&i| circular_distance(phases[i], truth[i])).collect();
        let mean = errs.iter().sum::<f64>() / errs.len() as f64;
        let max = errs.iter().copied().fold(0.0, f64::max);
        worst_mean = worst_mean.max(mean);
        let _ = writeln!(table, "{k}\t{mean:.12e}\t{max:.12e}");
        if a.frames {
            manifest.emit(out.join("frames").join(frame_name(k, "pgm")), &phase_pgm(s.side, &phases))?;
        }
    }
    manifest.emit(out.join("lowrank.tsv"), table.as_bytes())?;
    manifest.timings.push(("lowrank".into(), start.elapsed()));
    manifest.write(out)?;
    println!("rank\t{rank}\tmax_mean_circular_error\t{worst_mean:.3e}");
    Ok(())
}
