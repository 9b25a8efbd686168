//! turbo-apply: apply a `.cube` 3D LUT to a PNG frame sequence, in parallel.
//!
//! Frames are processed independently (the LUT is immutable shared data), so
//! output is identical for any thread count. Per-frame timings land in an
//! optional CSV.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Parser;
use image::ImageReader;
use rayon::prelude::*;

use lut_turbo::apply::LutSampler;
use lut_turbo::cube::parse_cube;

#[derive(Parser)]
#[command(name = "turbo-apply", about = "Apply a .cube 3D LUT to PNG frames")]
struct Args {
    /// Path to the .cube file
    #[arg(long)]
    cube: PathBuf,

    /// Input frame directory or glob pattern (e.g. 'frames/*.png')
    #[arg(long = "in")]
    input: String,

    /// Output directory (created if missing)
    #[arg(long)]
    out: PathBuf,

    /// Worker thread count (default: all cores)
    #[arg(long)]
    threads: Option<usize>,

    /// Write per-frame timings to this CSV
    #[arg(long)]
    timing: Option<PathBuf>,
}

fn collect_frames(input: &str) -> Result<Vec<PathBuf>> {
    let as_dir = Path::new(input);
    let pattern = if as_dir.is_dir() {
        format!("{}/*.png", input.trim_end_matches('/'))
    } else {
        input.to_string()
    };
    let mut paths: Vec<PathBuf> = glob::glob(&pattern)
        .with_context(|| format!("bad input pattern {pattern:?}"))?
        .collect::<Result<_, _>>()?;
    paths.sort();
    if paths.is_empty() {
        bail!("no input frames match {pattern:?}");
    }
    Ok(paths)
}

fn run(args: &Args) -> Result<()> {
    let text = fs::read_to_string(&args.cube)
        .with_context(|| format!("cannot read {}", args.cube.display()))?;
    let lut = parse_cube(&text).map_err(|e| anyhow::anyhow!("{}: {e}", args.cube.display()))?;
    let sampler = LutSampler::new(&lut);

    let frames = collect_frames(&args.input)?;

    // Cheap header-only pass: reject mixed sizes before writing anything.
    let mut first_dims = None;
    for path in &frames {
        let dims = ImageReader::open(path)
            .with_context(|| format!("cannot open {}", path.display()))?
            .into_dimensions()
            .with_context(|| format!("cannot decode {}", path.display()))?;
        match first_dims {
            None => first_dims = Some(dims),
            Some(d) if d != dims => bail!(
                "mixed frame sizes: {} is {}x{}, expected {}x{}",
                path.display(), dims.0, dims.1, d.0, d.1
            ),
            _ => {}
        }
    }
    let dims = first_dims.unwrap();

    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;

    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("thread pool init failed")?;
    }

    let results: Vec<(String, f64)> = frames
        .par_iter()
        .map(|path| -> Result<(String, f64)> {
            let t0 = Instant::now();
            let img = ImageReader::open(path)
                .with_context(|| format!("cannot open {}", path.display()))?
                .decode()
                .with_context(|| format!("cannot decode {}", path.display()))?
                .into_rgb8();
            let (w, h) = img.dimensions();
            let mut buf = img.into_raw();
            sampler.map_buffer(&mut buf);
            let out_img = image::RgbImage::from_raw(w, h, buf).expect("buffer size");
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            out_img
                .save(args.out.join(&name))
                .with_context(|| format!("cannot write {}", args.out.join(&name).display()))?;
            Ok((name, t0.elapsed().as_secs_f64() * 1000.0))
        })
        .collect::<Result<_>>()?;

    if let Some(timing) = &args.timing {
        let mut csv = String::from("frame,ms\n");
        for (name, ms) in &results {
            csv.push_str(&format!("{name},{ms:.3}\n"));
        }
        fs::write(timing, csv).with_context(|| format!("cannot write {}", timing.display()))?;
    }

    eprintln!(
        "graded {} frames ({}x{}) with {}^3 LUT",
        results.len(), dims.0, dims.1, lut.n
    );
    Ok(())
}

fn main() {
    let args = Args::parse();
    if let Err(e) = run(&args) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
