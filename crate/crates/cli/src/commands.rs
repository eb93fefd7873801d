use std::fs;
use std::path::Path;
use std::str::FromStr;

use honeycomb_bloch::bands::{band_structure_spectral, default_dirac_delta, dirac_report};
use honeycomb_bloch::io::{
    band_csv, complex_grid_csv, convergence_csv, fmt_f64, loss_csv, real_grid_csv, write_atomic, write_json,
};
use honeycomb_bloch::neural::{
    default_translates, nn_band_structure, nn_bloch_grid, train_until, Checkpoint, Init, LossBreakdown, TrainConfig,
};
use honeycomb_bloch::potential::PotentialFile;
use honeycomb_bloch::spectral::{convergence_study, solve_at_k, PlanewaveBasis};
use honeycomb_bloch::validate::{compare_bands, path_overlaps};
use honeycomb_bloch::{Error, KLabel, KPath, KPoint, Lattice, Potential, Result, Vec2};
use serde_json::json;

use crate::args::*;
use crate::manifest::Run;

pub fn run(cli: &Cli) -> Result<()> {
    let quiet = cli.quiet;
    match &cli.command {
        Command::Lattice(LatticeCmd::Info { spacing }) => lattice_info(*spacing),
        Command::Potential(PotentialCmd::Sample { v0, grid, spacing, out }) => {
            potential_sample(*v0, *grid, *spacing, out.as_deref())
        }
        Command::Bands(a) => bands(a),
        Command::Converge(a) => converge(a),
        Command::Dirac(a) => dirac(a),
        Command::Bloch(a) => bloch(a),
        Command::Train(a) => train_cmd(a, quiet),
        Command::Finetune(a) => finetune(a, quiet),
        Command::NnBands(a) => nn_bands(a),
        Command::NnBloch(a) => nn_bloch(a),
        Command::Compare(a) => compare(a),
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

fn vec_json(v: Vec2) -> serde_json::Value {
    json!([v.x, v.y])
}

fn lattice_info(spacing: f64) -> Result<()> {
    let lat = Lattice::honeycomb(spacing)?;
    let hs = lat.high_symmetry_points();
    let info = json!({
        "a1": vec_json(lat.a1),
        "a2": vec_json(lat.a2),
        "b1": vec_json(lat.b1),
        "b2": vec_json(lat.b2),
        "q": lat.q(),
        "cell_area": lat.cell_area,
        "gamma": vec_json(hs.gamma),
        "k": vec_json(hs.k),
        "kprime": vec_json(hs.kprime),
        "m": vec_json(hs.m),
    });
    println!("{}", serde_json::to_string_pretty(&info)?);
    Ok(())
}

fn potential_sample(v0: f64, grid: usize, spacing: f64, out: Option<&Path>) -> Result<()> {
    let run = Run::start("potential sample", json!({ "v0": v0, "grid": grid, "spacing": spacing }));
    let lat = Lattice::honeycomb(spacing)?;
    let pot = Potential::three_cosine(&lat, v0);
    let mut csv = String::from("x,y,V\n");
    for [x, y, v] in pot.sample_grid(grid)? {
        csv.push_str(&format!("{},{},{}\n", fmt_f64(x), fmt_f64(y), fmt_f64(v)));
    }
    match out {
        Some(path) => {
            write_atomic(path, csv.as_bytes())?;
            run.finish(path)
        }
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

/// Builds the potential and records any input file on the run.
fn load_potential(a: &PotentialArgs, run: &mut Run) -> Result<Potential> {
    if let Some(path) = &a.potential {
        run.input(path);
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read potential file {}: {e}", path.display())))?;
        let file: PotentialFile = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidArgument(format!("potential file {}: {e}", path.display())))?;
        return Potential::from_file(&file);
    }
    let v0 = a.v0.ok_or_else(|| Error::InvalidArgument("either --v0 or --potential is required".into()))?;
    if !v0.is_finite() {
        return Err(Error::InvalidArgument(format!("--v0 must be finite, got {v0}")));
    }
    Ok(Potential::three_cosine(&Lattice::honeycomb(a.spacing)?, v0))
}

/// A high-symmetry label or an explicit `kx,ky`.
fn parse_k(s: &str, lat: &Lattice) -> Result<KPoint> {
    if let Ok(label) = KLabel::from_str(s) {
        return Ok(lat.point(label));
    }
    let parts: Vec<&str> = s.split(',').collect();
    if let [x, y] = parts.as_slice() {
        if let (Ok(x), Ok(y)) = (x.trim().parse::<f64>(), y.trim().parse::<f64>()) {
            if x.is_finite() && y.is_finite() {
                return Ok(KPoint::new(Vec2::new(x, y)));
            }
        }
    }
    Err(Error::InvalidArgument(format!("k-point `{s}` is neither a label (G, K, K', M) nor `kx,ky`")))
}

fn bands(a: &BandsArgs) -> Result<()> {
    let mut run = Run::start("bands", to_value(a));
    let pot = load_potential(&a.pot, &mut run)?;
    let lat = pot.lattice();
    let path = KPath::from_spec(&a.path, a.samples, lat)?;
    let basis = PlanewaveBasis::new(a.cutoff, lat)?;
    let bs = band_structure_spectral(&pot, &path, a.n_bands, &basis)?;
    write_atomic(&a.out, band_csv(&bs).as_bytes())?;
    run.finish(&a.out)
}

fn converge(a: &ConvergeArgs) -> Result<()> {
    let mut run = Run::start("converge", to_value(a));
    let pot = load_potential(&a.pot, &mut run)?;
    let k = parse_k(&a.point, pot.lattice())?;
    let rows = convergence_study(&k, &pot, &a.cutoffs, a.n_bands)?;
    write_atomic(&a.out, convergence_csv(&rows).as_bytes())?;
    run.finish(&a.out)
}

fn dirac(a: &DiracArgs) -> Result<()> {
    let mut run = Run::start("dirac", to_value(a));
    let pot = load_potential(&a.pot, &mut run)?;
    let basis = PlanewaveBasis::new(a.cutoff, pot.lattice())?;
    let delta = a.delta.unwrap_or_else(|| default_dirac_delta(pot.lattice()));
    let report = dirac_report(&pot, &basis, delta, a.n_fit)?;
    match &a.out {
        Some(path) => {
            write_json(path, &report)?;
            run.finish(path)
        }
        None => {
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
    }
}

fn bloch(a: &BlochArgs) -> Result<()> {
    let mut run = Run::start("bloch", to_value(a));
    let pot = load_potential(&a.pot, &mut run)?;
    let lat = pot.lattice();
    let k = parse_k(&a.k, lat)?;
    let basis = PlanewaveBasis::new(a.cutoff, lat)?;
    let sol = solve_at_k(&k, &pot, &basis, a.band + 1)?;
    let grid = sol.bloch_grid(a.band, a.grid)?;
    let csv = if a.complex { complex_grid_csv(&grid, lat) } else { real_grid_csv(&grid.density(), lat) };
    write_atomic(&a.out, csv.as_bytes())?;
    run.finish(&a.out)
}

/// Reads a training config, naming the offending key on failure.
pub fn load_config(path: &Path) -> Result<TrainConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read config {}: {e}", path.display())))?;
    TrainConfig::from_json(&text)
}

fn progress(quiet: bool, total: usize) -> impl FnMut(&LossBreakdown) {
    let every = (total / 100).max(1);
    move |l: &LossBreakdown| {
        if !quiet && (l.epoch % every == 0 || l.epoch + 1 == total) {
            eprintln!(
                "epoch {:>6}/{total}  lr {:.3e}  loss {:.4e}  pde {:.3e}  norm {:.3e}  bc {:.3e}",
                l.epoch + 1,
                l.lr,
                l.total,
                l.pde,
                l.norm,
                l.bc
            );
        }
    }
}

/// Trains to completion, saving along the way when asked to.
fn run_training(
    cfg: &TrainConfig,
    mut init: Init,
    save_every: Option<usize>,
    out: &Path,
    quiet: bool,
) -> Result<Checkpoint> {
    let lat = cfg.lattice()?;
    let pot = Potential::three_cosine(&lat, cfg.v0);
    let mut report = progress(quiet, cfg.epochs);
    let step = save_every.filter(|s| *s > 0).unwrap_or(cfg.epochs.max(1));
    loop {
        let start = match &init {
            Init::Resume(ck) => ck.epoch,
            _ => 0,
        };
        let stop = (start + step).min(cfg.epochs);
        let ck = train_until(cfg, &pot, &lat, init, stop, &mut report)?;
        save_checkpoint(&ck, out)?;
        if ck.epoch >= cfg.epochs {
            return Ok(ck);
        }
        init = Init::Resume(ck);
    }
}

fn save_checkpoint(ck: &Checkpoint, out: &Path) -> Result<()> {
    ck.save(out)?;
    write_atomic(&out.join("loss.csv"), loss_csv(&ck.history).as_bytes())
}

fn train_cmd(a: &TrainArgs, quiet: bool) -> Result<()> {
    let mut run = Run::start("train", json!(null));
    run.input(&a.config);
    let mut cfg = load_config(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    run.seed(cfg.seed);
    run.set_config(json!({ "args": to_value(a), "train": to_value(&cfg) }));
    run_training(&cfg, Init::Fresh, a.save_every, &a.out, quiet)?;
    run.finish(&a.out)
}

fn finetune(a: &FinetuneArgs, quiet: bool) -> Result<()> {
    let mut run = Run::start("finetune", json!(null));
    run.input(&a.from);
    let source = Checkpoint::load(&a.from)?;
    let mut cfg = match &a.config {
        Some(path) => {
            run.input(path);
            load_config(path)?
        }
        None => source.config.clone(),
    };
    cfg.v0 = a.v0;
    cfg.epochs = a.epochs;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    run.seed(cfg.seed);
    run.set_config(json!({ "args": to_value(a), "train": to_value(&cfg) }));
    if cfg.epochs == 0 {
        save_checkpoint(&source, &a.out)?;
    } else {
        run_training(&cfg, Init::FineTune(source), a.save_every, &a.out, quiet)?;
    }
    run.finish(&a.out)
}

fn nn_bands(a: &NnBandsArgs) -> Result<()> {
    let mut run = Run::start("nn-bands", to_value(a));
    run.input(&a.ckpt);
    let ck = Checkpoint::load(&a.ckpt)?;
    let lat = ck.config.lattice()?;
    let path = KPath::from_spec(&a.path, a.samples, &lat)?;
    let mut bs = nn_band_structure(&ck, &path, &default_translates(&lat), a.n_bands)?;
    bs.metadata.checkpoint = Some(a.ckpt.display().to_string());
    write_atomic(&a.out, band_csv(&bs).as_bytes())?;
    run.finish(&a.out)
}

fn nn_bloch(a: &NnBlochArgs) -> Result<()> {
    let mut run = Run::start("nn-bloch", to_value(a));
    run.input(&a.ckpt);
    let ck = Checkpoint::load(&a.ckpt)?;
    let lat = ck.config.lattice()?;
    let k = parse_k(&a.k, &lat)?;
    let grid = nn_bloch_grid(&ck.bloch, &k.k, a.grid, &lat)?;
    let csv = if a.complex { complex_grid_csv(&grid, &lat) } else { real_grid_csv(&grid.density(), &lat) };
    write_atomic(&a.out, csv.as_bytes())?;
    run.finish(&a.out)
}

fn compare(a: &CompareArgs) -> Result<()> {
    let mut run = Run::start("compare", to_value(a));
    run.input(&a.ckpt);
    let ck = Checkpoint::load(&a.ckpt)?;
    let lat = ck.config.lattice()?;
    let pot = Potential::three_cosine(&lat, a.v0.unwrap_or(ck.config.v0));
    let path = KPath::from_spec(&a.path, a.samples, &lat)?;
    let basis = PlanewaveBasis::new(a.cutoff, &lat)?;
    let translates = default_translates(&lat);
    let sp = band_structure_spectral(&pot, &path, a.n_bands, &basis)?;
    let mut nn = nn_band_structure(&ck, &path, &translates, a.n_bands)?;
    nn.metadata.checkpoint = Some(a.ckpt.display().to_string());
    let mut report = compare_bands(&nn, &sp)?;
    report.overlaps = path_overlaps(&ck, &pot, &basis, &sp, &translates, a.grid)?;
    write_json(&a.out, &report)?;
    run.finish(&a.out)
}
