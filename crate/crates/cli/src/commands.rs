use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use tactsim_core::augment::{perturb_depth, AugmentFile};
use tactsim_core::config::{load_json, PipelineConfig, UnknownKeys};
use tactsim_core::elastomer::{threshold_depth, DeformParams, Variant};
use tactsim_core::evaluate::{
    compare, contact_centroids, dataset_report, warp_and_crop, AlignMode, Annotations, PointPairs,
};
use tactsim_core::illumination::{
    background_image, calibrate_pixel_to_meter, contact_span, render_tactile, IlluminationConfig,
};
use tactsim_core::imagecore::{read_depth, read_rgb, write_depth, write_rgb, DepthFormat, DepthMap};
use tactsim_core::scenegen::{grid_poses, render_depth, GridSpec, SceneSpec};

use crate::{fetch, Command, Failure, RenderOpts, Stage};

pub fn run(command: Command, lenient: bool) -> Result<(), Failure> {
    let unknown = if lenient { UnknownKeys::Warn } else { UnknownKeys::Reject };
    match command {
        Command::Render { depth, out, opts } => {
            let (deform, illum) = pipeline(&opts, unknown)?;
            let d = read_depth_file(&depth, opts.depth_scale)?;
            let img = render_tactile(&d, &deform, &illum).stage("render")?;
            write_rgb(&img, &out).stage("write image")?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Batch { depth_dir, out_dir, opts } => batch(&depth_dir, &out_dir, &opts, unknown),
        Command::GenDepth {
            scene,
            out,
            grid,
            nx,
            ny,
            nz,
            dx,
            dz,
            format,
            depth_scale,
        } => {
            let (spec, warnings) = load_json::<SceneSpec>(&scene, unknown).stage("load scene")?;
            warn(&warnings);
            spec.validate().stage("load scene")?;
            if grid {
                let ext = match format.as_str() {
                    "pfm" => "pfm",
                    "png" | "png16" => "png",
                    other => return Err(Failure::usage("parse arguments", format!("unknown depth format `{other}`"))),
                };
                gen_grid(&spec, &out, GridSpec { nx, ny, nz, dx, dz }, ext, depth_scale)
            } else {
                let d = render_depth(&spec).stage("ray cast")?;
                write_depth_file(&d, &out, depth_scale)?;
                println!("wrote {}", out.display());
                Ok(())
            }
        }
        Command::Augment {
            depth_dir,
            spec,
            out_dir,
            count,
            seed,
            opts,
        } => augment(&depth_dir, spec.as_deref(), &out_dir, count, seed, &opts, unknown),
        Command::Compare { real, generated, json } => {
            if real.is_dir() && generated.is_dir() {
                let report = dataset_report(&real, &generated, AlignMode::None, None).stage("compare")?;
                emit(json, &report, report.table());
            } else {
                let a = read_rgb(&real).stage("read real image")?;
                let b = read_rgb(&generated).stage("read generated image")?;
                let m = compare(&a, &b).stage("compare")?;
                let text = format!("SSIM {:.4}  PSNR {:.2} dB  MAE {:.2}%", m.ssim, m.psnr, m.mae);
                emit(json, &m, text);
            }
            Ok(())
        }
        Command::Align {
            real,
            generated,
            points,
            annotations,
            object,
            out_real,
            out_generated,
            json,
        } => {
            let pairs = match (points, annotations) {
                (Some(p), _) if p.len() != 8 => {
                    return Err(Failure::usage("parse arguments", format!("--points needs 8 values, got {}", p.len())))
                }
                (Some(p), _) => PointPairs {
                    real: [[p[0], p[1]], [p[2], p[3]]],
                    generated: [[p[4], p[5]], [p[6], p[7]]],
                },
                (None, Some(path)) => {
                    let (notes, warnings) = load_json::<Annotations>(&path, unknown).stage("load annotations")?;
                    warn(&warnings);
                    let chosen = match &object {
                        Some(o) => notes.objects.get(o).copied(),
                        None => notes.global,
                    };
                    chosen.ok_or_else(|| {
                        Failure::usage("load annotations", format!("no point pairs for {}", object.as_deref().unwrap_or("the global set")))
                    })?
                }
                (None, None) => return Err(Failure::usage("parse arguments", "give --points or --annotations")),
            };
            let t = pairs.transform().stage("solve alignment")?;
            let a = read_rgb(&real).stage("read real image")?;
            let b = read_rgb(&generated).stage("read generated image")?;
            let (wa, wb, rect) = warp_and_crop(&a, &b, &t).stage("warp and crop")?;
            let m = compare(&wa, &wb).stage("compare")?;
            if let Some(p) = out_real {
                write_rgb(&wa, &p).stage("write image")?;
            }
            if let Some(p) = out_generated {
                write_rgb(&wb, &p).stage("write image")?;
            }
            let text = format!(
                "scale {:.6}  translation ({:.3}, {:.3})  crop {}x{} at ({}, {})\nSSIM {:.4}  PSNR {:.2} dB  MAE {:.2}%",
                t.scale, t.translation[0], t.translation[1], rect.width, rect.height, rect.x, rect.y, m.ssim, m.psnr, m.mae
            );
            emit(json, &json!({ "transform": t, "crop": rect, "metrics": m }), text);
            Ok(())
        }
        Command::Centroids {
            image,
            background,
            config,
            threshold,
            min_area,
            json,
        } => {
            let img = read_rgb(&image).stage("read image")?;
            let bg = match background {
                Some(p) => read_rgb(&p).stage("read background")?,
                None => {
                    let (_, illum) = pipeline(&RenderOpts { config, variant: None, depth_scale: None }, unknown)?;
                    background_image(img.width(), img.height(), &illum).stage("render background")?
                }
            };
            let blobs = contact_centroids(&img, &bg, threshold, min_area).stage("find centroids")?;
            let text = blobs
                .iter()
                .map(|b| format!("({:.2}, {:.2})  area {}", b.centroid[0], b.centroid[1], b.area))
                .collect::<Vec<_>>()
                .join("\n");
            emit(json, &blobs, if text.is_empty() { "no contact regions".into() } else { text });
            Ok(())
        }
        Command::Report {
            real_dir,
            gen_dir,
            align,
            annotations,
            out,
            json,
        } => {
            let mode: AlignMode = align.parse().stage("parse arguments")?;
            let notes = match annotations {
                Some(p) => {
                    let (notes, warnings) = load_json::<Annotations>(&p, unknown).stage("load annotations")?;
                    warn(&warnings);
                    Some(notes)
                }
                None => None,
            };
            let report = dataset_report(&real_dir, &gen_dir, mode, notes.as_ref()).stage("report")?;
            if let Some(p) = out {
                let text = serde_json::to_string_pretty(&report).expect("report serializes");
                fs::write(&p, text).map_err(|e| Failure::usage("write report", format!("{}: {e}", p.display())))?;
            }
            emit(json, &report, report.table());
            Ok(())
        }
        Command::Calibrate {
            depth,
            cube_side,
            row,
            config,
            depth_scale,
            json,
        } => {
            let (cfg, _) = load_config(config.as_deref(), unknown)?;
            let d = read_depth_file(&depth, depth_scale)?;
            let e = threshold_depth(&d, cfg.deform.d_max).stage("threshold depth")?;
            let span = contact_span(&e, row).ok_or_else(|| Failure::compute("measure span", "no contact found"))?;
            let r = calibrate_pixel_to_meter(span as f64, cube_side).stage("calibrate")?;
            let text = format!("span {span} px  pixel_to_meter {r:.6e}");
            emit(json, &json!({ "span_px": span, "cube_side": cube_side, "pixel_to_meter": r }), text);
            Ok(())
        }
        Command::FetchDataset { manifest, dest } => fetch::run(&manifest, &dest, unknown),
        Command::DumpConfig => {
            println!("{}", PipelineConfig::baseline().to_json());
            Ok(())
        }
    }
}

fn warn(ignored: &[String]) {
    for key in ignored {
        eprintln!("warning: ignoring unknown key `{key}`");
    }
}

fn emit(json: bool, value: &impl Serialize, text: String) {
    if json {
        println!("{}", serde_json::to_string_pretty(value).expect("output serializes"));
    } else {
        println!("{text}");
    }
}

fn load_config(path: Option<&Path>, unknown: UnknownKeys) -> Result<(PipelineConfig, PathBuf), Failure> {
    match path {
        None => Ok((PipelineConfig::baseline(), PathBuf::from("."))),
        Some(p) => {
            let (cfg, warnings) = PipelineConfig::load(p, unknown).stage("load config")?;
            warn(&warnings);
            let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
            Ok((cfg, base))
        }
    }
}

fn pipeline(opts: &RenderOpts, unknown: UnknownKeys) -> Result<(DeformParams, IlluminationConfig), Failure> {
    let (cfg, base) = load_config(opts.config.as_deref(), unknown)?;
    let mut deform = cfg.deform;
    if let Some(v) = &opts.variant {
        deform.variant = v
            .parse::<Variant>()
            .map_err(|e| Failure::usage("parse arguments", e.to_string()))?;
    }
    let illum = cfg.illumination.resolve(&base).stage("load config")?;
    Ok((deform, illum))
}

fn read_depth_file(path: &Path, scale: Option<f64>) -> Result<DepthMap, Failure> {
    let format = DepthFormat::from_path(path, scale).stage("read depth")?;
    read_depth(path, format).stage("read depth")
}

fn write_depth_file(d: &DepthMap, path: &Path, scale: f64) -> Result<(), Failure> {
    let format = DepthFormat::from_path(path, Some(scale)).stage("write depth")?;
    write_depth(d, path, format).stage("write depth")
}

/// Depth files (`.pfm`, `.png`) directly inside `dir`, sorted by name.
fn depth_files(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let entries = fs::read_dir(dir).map_err(|e| Failure::usage("list depth maps", format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("pfm") || e.eq_ignore_ascii_case("png"))
        })
        .collect();
    files.sort();
    let mut stems = BTreeSet::new();
    for f in &files {
        if !stems.insert(stem(f)) {
            return Err(Failure::usage("list depth maps", format!("two depth maps share the stem `{}`", stem(f))));
        }
    }
    Ok(files)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::usage("create output directory", format!("{}: {e}", dir.display())))
}

/// Report per-item failures and turn them into one summary failure.
fn summarize(stage: &str, total: usize, results: Vec<Result<(), Failure>>) -> Result<(), Failure> {
    let failures: Vec<Failure> = results.into_iter().filter_map(Result::err).collect();
    for f in &failures {
        eprintln!("error: {f}");
    }
    println!("{stage}: {} of {total} succeeded", total - failures.len());
    match failures.iter().map(|f| f.code).max() {
        None => Ok(()),
        Some(code) => Err(Failure {
            stage: stage.to_string(),
            code,
            message: format!("{} of {total} item(s) failed", failures.len()),
        }),
    }
}

fn batch(depth_dir: &Path, out_dir: &Path, opts: &RenderOpts, unknown: UnknownKeys) -> Result<(), Failure> {
    let (deform, illum) = pipeline(opts, unknown)?;
    let files = depth_files(depth_dir)?;
    create_dir(out_dir)?;
    let results = files
        .par_iter()
        .map(|f| {
            let d = read_depth_file(f, opts.depth_scale)?;
            let img = render_tactile(&d, &deform, &illum).stage(&format!("render {}", f.display()))?;
            write_rgb(&img, out_dir.join(format!("{}.png", stem(f)))).stage("write image")
        })
        .collect();
    summarize("batch", files.len(), results)
}

fn gen_grid(scene: &SceneSpec, out_dir: &Path, grid: GridSpec, ext: &str, scale: f64) -> Result<(), Failure> {
    let poses = grid_poses(&grid).map_err(|e| Failure::usage("parse arguments", e.to_string()))?;
    create_dir(out_dir)?;
    let results = poses
        .par_iter()
        .map(|pose| {
            let posed = scene.posed(pose);
            let d = render_depth(&posed).stage(&format!("ray cast {}", pose.name()))?;
            write_depth_file(&d, &out_dir.join(format!("{}.{ext}", pose.name())), scale)
        })
        .collect();
    summarize("gen-depth", poses.len(), results)
}

fn augment(
    depth_dir: &Path,
    spec: Option<&Path>,
    out_dir: &Path,
    count: usize,
    seed: Option<u64>,
    opts: &RenderOpts,
    unknown: UnknownKeys,
) -> Result<(), Failure> {
    let (mut file, base) = match spec {
        Some(p) => {
            let (file, warnings) = load_json::<AugmentFile>(p, unknown).stage("load augment spec")?;
            warn(&warnings);
            (file, p.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        None => (AugmentFile::default(), PathBuf::from(".")),
    };
    if let Some(s) = seed {
        file.seed = s;
    }
    let spec = file.resolve(&base).stage("load augment spec")?;
    let (deform, illum) = pipeline(opts, unknown)?;
    let files = depth_files(depth_dir)?;
    create_dir(out_dir)?;
    let jobs: Vec<(usize, usize)> = (0..files.len()).flat_map(|i| (0..count).map(move |k| (i, k))).collect();
    let results = jobs
        .par_iter()
        .map(|&(i, k)| {
            let f = &files[i];
            let d = read_depth_file(f, opts.depth_scale)?;
            let index = (i * count + k) as u64;
            let p = perturb_depth(&d, &spec, index).stage("perturb depth")?;
            let img = render_tactile(&p, &deform, &illum).stage(&format!("render {}", f.display()))?;
            write_rgb(&img, out_dir.join(format!("{}_aug{k}.png", stem(f)))).stage("write image")
        })
        .collect();
    summarize("augment", jobs.len(), results)
}
