use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use super::config::{DataSpec, RunConfig, SpectrumMode, Task};
use super::manifest::{sha256_hex, DirLock, Manifest};
use crate::error::{Error, Result};
use crate::geometry::{escape_bound, escape_mc, projected_width, solve_phase_transition, CurveSidecar, EllipsoidSpec};
use crate::linalg::symmetric_eigen;
use crate::nets::{
    epsilon_hat, exact_hessian, load_checkpoint, load_csv_dataset, make_blobs, save_checkpoint, train_l1, Dataset,
    FeedforwardNet, HessianOperator, NetObjective, Split, TrainConfig,
};
use crate::operators::DenseSymmetric;
use crate::pruning::{magnitude_mask, r_of_p, sweep, SweepSidecar};
use crate::rng::{derive_seed, name_salt};
use crate::spectral::{
    convexify, count_important, exact_spectrum, reconstruct_spectrum, slq_density, Spectrum, SpectrumSource,
};

pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const HISTORY_FILE: &str = "history.csv";
pub const EPSILON_FILE: &str = "epsilon.json";
pub const SPECTRUM_FILE: &str = "spectrum.csv";
pub const SPECTRUM_INFO_FILE: &str = "spectrum.json";
pub const DENSITY_FILE: &str = "density.csv";
pub const CURVE_FILE: &str = "curve.csv";
pub const CURVE_INFO_FILE: &str = "curve.json";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_INFO_FILE: &str = "sweep.json";
pub const ESCAPE_FILE: &str = "escape.csv";
pub const REPORT_FILE: &str = "report.json";
pub const REPORT_TEXT_FILE: &str = "report.txt";

/// Largest network `verify-escape` accepts.
pub const ESCAPE_LIMIT: usize = 300;

/// Floor applied to the convexified spectrum in `verify-escape`, relative to
/// the largest eigenvalue, so the quadratic is strictly convex.
pub const ESCAPE_FLOOR: f64 = 1e-10;

/// Per-stage seed: the run seed mixed with a salt from the stage name.
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    derive_seed(seed, name_salt(stage))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonInfo {
    pub eps_hat: f64,
    pub batch_size: usize,
    pub train_loss: f64,
    /// `‖∇L(w0)‖₂` over the full training set.
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumInfo {
    pub source: SpectrumSource,
    #[serde(rename = "D")]
    pub dim: usize,
    pub important_count: usize,
    /// Asymmetry of the assembled Hessian (exact mode).
    pub hessian_residual: Option<f64>,
    /// Smallest Ritz value, used as the clip target (SLQ mode).
    pub lambda_min_target: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub p_star: f64,
    pub curve_file: String,
    pub empirical_max_p: f64,
    pub delta: f64,
    pub eps_hat: f64,
    #[serde(rename = "D")]
    pub dim: usize,
    pub important_count: usize,
    pub spectrum_source: SpectrumSource,
    pub grad_norm: f64,
    pub dense_test_acc: f64,
    pub tolerance_points: f64,
    pub seed: u64,
}

impl Report {
    pub fn to_text(&self) -> String {
        let source = match self.spectrum_source {
            SpectrumSource::Exact => "exact eigendecomposition",
            SpectrumSource::SlqReconstructed => "SLQ density reconstruction",
        };
        format!(
            "predicted max pruning ratio  {:.4}  (curve: {})\n\
             empirical max pruning ratio  {:.4}\n\
             delta (predicted - empirical) {:+.4}\n\
             dense test accuracy          {:.4}\n\
             eps_hat                      {:.6e}\n\
             D                            {}\n\
             important eigenvalues        {}\n\
             spectrum                     {}\n\
             gradient norm at w0          {:.3e}\n\
             seed                         {}\n\
             \n\
             The empirical ratio is the largest swept p whose test accuracy stays within \
             {} percentage point(s) of the dense network. At this scale agreement within \
             5 points is the expected precision.\n",
            self.p_star,
            self.curve_file,
            self.empirical_max_p,
            self.delta,
            self.dense_test_acc,
            self.eps_hat,
            self.dim,
            self.important_count,
            source,
            self.grad_norm,
            self.seed,
            self.tolerance_points,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeRow {
    pub k: usize,
    pub empirical_prob: f64,
    pub std_err: f64,
    /// Lower bound on the miss probability; only defined for `k > w²`.
    pub theorem_bound: Option<f64>,
}

/// What a task produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub task: Task,
    pub out_dir: PathBuf,
    pub report: Option<Report>,
    pub escape: Option<Vec<EscapeRow>>,
    pub manifest: Manifest,
}

/// Runs every stage `full` needs and returns the report.
pub fn cmd_full(cfg: &RunConfig) -> Result<Report> {
    Ok(run_task(cfg, Task::Full)?.report.expect("full produces a report"))
}

/// Monte Carlo check of the escape bound on the trained network.
pub fn cmd_verify_escape(cfg: &RunConfig) -> Result<Vec<EscapeRow>> {
    Ok(run_task(cfg, Task::VerifyEscape)?.escape.expect("verify-escape produces rows"))
}

/// Runs `task` in `cfg.out`, reusing any artifacts whose inputs are unchanged.
///
/// The output directory is locked for the duration. On failure the manifest
/// of the stages that did complete is still written.
pub fn run_task(cfg: &RunConfig, task: Task) -> Result<Outcome> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out)?;
    let _lock = DirLock::acquire(&cfg.out)?;
    let mut p = Pipeline { cfg, dir: &cfg.out, manifest: Manifest::load(&cfg.out), cache_only: task == Task::Report };
    let result = p.run(task);
    p.manifest.save(p.dir)?;
    let (report, escape) = result?;
    Ok(Outcome { task, out_dir: cfg.out.clone(), report, escape, manifest: p.manifest })
}

struct Data {
    train: Dataset<f64>,
    test: Dataset<f64>,
    hash: String,
}

struct Pipeline<'a> {
    cfg: &'a RunConfig,
    dir: &'a Path,
    manifest: Manifest,
    cache_only: bool,
}

fn stage_err(stage: &'static str) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Stage { .. } => e,
        e => Error::Stage { stage, source: Box::new(e) },
    }
}

fn key(parts: &[&str]) -> String {
    sha256_hex(parts.join("\n--\n").as_bytes())
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn read_json<S: for<'de> Deserialize<'de>>(path: &Path) -> Result<S> {
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}

fn write_with<F: FnOnce(&mut BufWriter<File>) -> Result<()>>(path: &Path, f: F) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

impl Pipeline<'_> {
    fn run(&mut self, task: Task) -> Result<(Option<Report>, Option<Vec<EscapeRow>>)> {
        let data = self.data().map_err(stage_err("data"))?;
        let net = self.train(&data).map_err(stage_err("train"))?;
        match task {
            Task::Train => Ok((None, None)),
            Task::Spectrum => {
                self.spectrum(&data, &net).map_err(stage_err("spectrum"))?;
                Ok((None, None))
            }
            Task::Predict => {
                let eps = self.epsilon(&data, &net).map_err(stage_err("epsilon"))?;
                let spec = self.spectrum(&data, &net).map_err(stage_err("spectrum"))?;
                self.predict(&net, &eps, spec).map_err(stage_err("predict"))?;
                Ok((None, None))
            }
            Task::Sweep => {
                self.sweep(&data, &net).map_err(stage_err("sweep"))?;
                Ok((None, None))
            }
            Task::VerifyEscape => {
                let eps = self.epsilon(&data, &net).map_err(stage_err("epsilon"))?;
                let rows = self.escape(&data, &net, &eps).map_err(stage_err("escape"))?;
                Ok((None, Some(rows)))
            }
            Task::Report | Task::Full => {
                let eps = self.epsilon(&data, &net).map_err(stage_err("epsilon"))?;
                let spec = self.spectrum(&data, &net).map_err(stage_err("spectrum"))?;
                let curve = self.predict(&net, &eps, spec).map_err(stage_err("predict"))?;
                let sw = self.sweep(&data, &net).map_err(stage_err("sweep"))?;
                let report = self.report(&eps, &curve, &sw).map_err(stage_err("report"))?;
                Ok((Some(report), None))
            }
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn hash(&self, name: &str) -> String {
        self.manifest.hash_of(name).unwrap_or_default().to_string()
    }

    /// Returns true when the stage's outputs can be reused.
    fn cached(&self, stage: &str, key: &str) -> Result<bool> {
        if self.manifest.is_fresh(self.dir, stage, key) {
            info!("{stage}: inputs unchanged, reusing artifacts");
            return Ok(true);
        }
        if self.cache_only {
            return Err(Error::InvalidArgument(format!("no up-to-date {stage} artifacts; run `full` first")));
        }
        info!("{stage}: running");
        Ok(false)
    }

    fn data(&self) -> Result<Data> {
        let cfg = self.cfg;
        let spec = cfg.sections_text(&["data"]);
        match &cfg.data {
            DataSpec::Blobs { classes, train_size, test_size, separation } => {
                let train = make_blobs(*train_size, *classes, *separation, stage_seed(cfg.seed, "data.train"), Split::Train)?;
                let test = make_blobs(*test_size, *classes, *separation, stage_seed(cfg.seed, "data.test"), Split::Test)?;
                Ok(Data { train, test, hash: key(&[&spec, &cfg.seed.to_string()]) })
            }
            DataSpec::Csv { train_path, test_path, label_column, classes } => {
                let train = load_csv_dataset(train_path, *label_column, *classes, Split::Train)?;
                let classes = Some(classes.unwrap_or(train.classes()));
                let test = load_csv_dataset(test_path, *label_column, classes, Split::Test)?;
                let th = super::manifest::hash_file(train_path)?;
                let vh = super::manifest::hash_file(test_path)?;
                Ok(Data { train, test, hash: key(&[&th, &vh, &label_column.to_string()]) })
            }
        }
    }

    fn train(&mut self, data: &Data) -> Result<FeedforwardNet<f64>> {
        let cfg = self.cfg;
        let k = key(&["train", &cfg.sections_text(&["net", "train"]), &data.hash, &cfg.seed.to_string()]);
        if !self.cached("train", &k)? {
            if cfg.widths[0] != data.train.dim() || *cfg.widths.last().expect("widths") != data.train.classes() {
                return Err(Error::InvalidArgument(format!(
                    "net.widths {:?} do not fit {} features and {} classes",
                    cfg.widths,
                    data.train.dim(),
                    data.train.classes()
                )));
            }
            let init = FeedforwardNet::init_kaiming(&cfg.widths, stage_seed(cfg.seed, "train.init"))?;
            let tc = TrainConfig { seed: stage_seed(cfg.seed, "train.shuffle"), ..cfg.train };
            let trained = train_l1(&init, &data.train, &tc)?;
            save_checkpoint(&trained.net, cfg.seed, &self.path(CHECKPOINT_FILE))?;
            write_with(&self.path(HISTORY_FILE), |w| {
                writeln!(w, "epoch,loss")?;
                for (i, l) in trained.history.iter().enumerate() {
                    writeln!(w, "{},{:e}", i + 1, l)?;
                }
                Ok(())
            })?;
            self.manifest.record(self.dir, "train", k, &[CHECKPOINT_FILE, HISTORY_FILE])?;
        }
        Ok(load_checkpoint(&self.path(CHECKPOINT_FILE))?.0)
    }

    fn epsilon(&mut self, data: &Data, net: &FeedforwardNet<f64>) -> Result<EpsilonInfo> {
        let bs = self.cfg.train.batch_size;
        let k = key(&["epsilon", &bs.to_string(), &self.hash(CHECKPOINT_FILE), &data.hash]);
        if !self.cached("epsilon", &k)? {
            let g = net.grad(&data.train)?;
            let info = EpsilonInfo {
                eps_hat: epsilon_hat(net, &data.train, bs)?,
                batch_size: bs,
                train_loss: net.loss(&data.train)?,
                grad_norm: g.iter().map(|x| x * x).sum::<f64>().sqrt(),
            };
            write_json(&self.path(EPSILON_FILE), &info)?;
            self.manifest.record(self.dir, "epsilon", k, &[EPSILON_FILE])?;
        }
        read_json(&self.path(EPSILON_FILE))
    }

    fn spectrum(&mut self, data: &Data, net: &FeedforwardNet<f64>) -> Result<Spectrum<f64>> {
        let cfg = self.cfg;
        let params = match cfg.spectrum.mode {
            SpectrumMode::Exact => "mode = exact".to_string(),
            SpectrumMode::Slq => format!("{}\nseed = {}", cfg.sections_text(&["spectrum"]), cfg.seed),
        };
        let k = key(&["spectrum", &params, &self.hash(CHECKPOINT_FILE), &data.hash]);
        let mut outputs = vec![SPECTRUM_FILE, SPECTRUM_INFO_FILE];
        if cfg.spectrum.mode == SpectrumMode::Slq {
            outputs.push(DENSITY_FILE);
        }
        if !self.cached("spectrum", &k)? {
            let obj = NetObjective::new(net, &data.train);
            let (spec, info) = match cfg.spectrum.mode {
                SpectrumMode::Exact => {
                    let rep = exact_hessian(&obj)?;
                    let spec = exact_spectrum(&rep.hessian)?;
                    let info = SpectrumInfo {
                        source: spec.source,
                        dim: spec.dim(),
                        important_count: spec.important_count,
                        hessian_residual: Some(rep.residual),
                        lambda_min_target: None,
                    };
                    (spec, info)
                }
                SpectrumMode::Slq => {
                    let op = HessianOperator::new(&obj);
                    let density = slq_density(&op, cfg.spectrum.slq, stage_seed(cfg.seed, "spectrum.slq"))?;
                    let important = count_important(&op, &net.flatten(), cfg.spectrum.parts)?;
                    let target = density.min_ritz().unwrap_or(f64::INFINITY);
                    let spec = reconstruct_spectrum(&density, net.num_params(), important, target)?;
                    write_with(&self.path(DENSITY_FILE), |w| density.write_csv(w))?;
                    let info = SpectrumInfo {
                        source: spec.source,
                        dim: spec.dim(),
                        important_count: spec.important_count,
                        hessian_residual: None,
                        lambda_min_target: density.min_ritz(),
                    };
                    (spec, info)
                }
            };
            write_with(&self.path(SPECTRUM_FILE), |w| spec.write_csv(w))?;
            write_json(&self.path(SPECTRUM_INFO_FILE), &info)?;
            self.manifest.record(self.dir, "spectrum", k, &outputs)?;
        }
        let info: SpectrumInfo = read_json(&self.path(SPECTRUM_INFO_FILE))?;
        let f = BufReader::new(File::open(self.path(SPECTRUM_FILE))?);
        let mut spec = Spectrum::read_csv(f, SPECTRUM_FILE, info.source)?;
        spec.important_count = info.important_count;
        Ok(spec)
    }

    fn predict(&mut self, net: &FeedforwardNet<f64>, eps: &EpsilonInfo, spec: Spectrum<f64>) -> Result<CurveSidecar> {
        let k = key(&[
            "predict",
            &self.cfg.sections_text(&["predict"]),
            &self.hash(SPECTRUM_FILE),
            &self.hash(SPECTRUM_INFO_FILE),
            &self.hash(EPSILON_FILE),
            &self.hash(CHECKPOINT_FILE),
        ]);
        if !self.cached("predict", &k)? {
            let e = EllipsoidSpec::new(convexify(&spec), eps.eps_hat)?;
            let w0 = net.flatten();
            let rp = r_of_p(&w0, &net.prunable_mask());
            let curve = solve_phase_transition(&e, rp.as_fn(), self.cfg.predict_tol)?;
            if let Some(d) = curve.degenerate {
                info!("predict: no crossing inside (0, 1), curve is {d:?}");
            }
            write_with(&self.path(CURVE_FILE), |w| curve.write_csv(w))?;
            write_json(&self.path(CURVE_INFO_FILE), &curve.sidecar(&e))?;
            self.manifest.record(self.dir, "predict", k, &[CURVE_FILE, CURVE_INFO_FILE])?;
        }
        read_json(&self.path(CURVE_INFO_FILE))
    }

    fn sweep(&mut self, data: &Data, net: &FeedforwardNet<f64>) -> Result<SweepSidecar> {
        let k = key(&["sweep", &self.cfg.sections_text(&["sweep"]), &self.hash(CHECKPOINT_FILE), &data.hash]);
        if !self.cached("sweep", &k)? {
            let sw = sweep(net, &data.train, &data.test, &self.cfg.sweep.grid(), self.cfg.sweep.tolerance_points)?;
            write_with(&self.path(SWEEP_FILE), |w| sw.write_csv(w))?;
            write_json(&self.path(SWEEP_INFO_FILE), &sw.sidecar())?;
            self.manifest.record(self.dir, "sweep", k, &[SWEEP_FILE, SWEEP_INFO_FILE])?;
        }
        read_json(&self.path(SWEEP_INFO_FILE))
    }

    fn report(&mut self, eps: &EpsilonInfo, curve: &CurveSidecar, sw: &SweepSidecar) -> Result<Report> {
        let info: SpectrumInfo = read_json(&self.path(SPECTRUM_INFO_FILE))?;
        let report = Report {
            p_star: curve.p_star,
            curve_file: CURVE_FILE.to_string(),
            empirical_max_p: sw.empirical_max_p,
            delta: curve.p_star - sw.empirical_max_p,
            eps_hat: eps.eps_hat,
            dim: curve.dim,
            important_count: curve.important_count,
            spectrum_source: info.source,
            grad_norm: eps.grad_norm,
            dense_test_acc: sw.dense_test_acc,
            tolerance_points: sw.tolerance_points,
            seed: self.cfg.seed,
        };
        write_json(&self.path(REPORT_FILE), &report)?;
        std::fs::write(self.path(REPORT_TEXT_FILE), report.to_text())?;
        let k = key(&["report", &self.hash(CURVE_INFO_FILE), &self.hash(SWEEP_INFO_FILE), &self.hash(EPSILON_FILE)]);
        self.manifest.record(self.dir, "report", k, &[REPORT_FILE, REPORT_TEXT_FILE])?;
        Ok(report)
    }

    fn escape(&mut self, data: &Data, net: &FeedforwardNet<f64>, eps: &EpsilonInfo) -> Result<Vec<EscapeRow>> {
        let cfg = self.cfg;
        let dim = net.num_params();
        if dim > ESCAPE_LIMIT {
            return Err(Error::InvalidArgument(format!("verify-escape needs D <= {ESCAPE_LIMIT}, network has D = {dim}")));
        }
        let k = key(&[
            "escape",
            &cfg.sections_text(&["escape"]),
            &cfg.seed.to_string(),
            &self.hash(CHECKPOINT_FILE),
            &self.hash(EPSILON_FILE),
            &data.hash,
        ]);
        let obj = NetObjective::new(net, &data.train);
        let rep = exact_hessian(&obj)?;
        let (vals, q) = symmetric_eigen(dim, rep.hessian.entries().to_vec())?;
        let top = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if top == 0.0 {
            return Err(Error::InvalidArgument("hessian is zero; the sublevel set is unbounded".into()));
        }
        let floored: Vec<f64> = vals.iter().map(|v| v.abs().max(ESCAPE_FLOOR * top)).collect();
        let h = DenseSymmetric::from_eigen(&floored, &q)?;
        let w0 = net.flatten();
        let state = magnitude_mask(&w0, &net.prunable_mask(), cfg.escape.prune_ratio)?;
        let wp = state.pruned_weights();
        let e = EllipsoidSpec::new(Spectrum::new(floored, SpectrumSource::Exact, 0), eps.eps_hat)?;
        let width = projected_width(&e, state.r);
        let base_seed = stage_seed(cfg.seed, "escape");

        let cached = self.cached("escape", &k)?;
        let mut rows = Vec::new();
        for kk in cfg.escape.k_grid(dim) {
            let est = escape_mc(&h, eps.eps_hat, &w0, &wp, kk, cfg.escape.trials, derive_seed(base_seed, kk as u64))?;
            let bound = (kk as f64 > width * width).then(|| escape_bound(kk, width));
            rows.push(EscapeRow { k: kk, empirical_prob: est.probability, std_err: est.std_err, theorem_bound: bound });
        }
        if !cached {
            write_with(&self.path(ESCAPE_FILE), |w| {
                writeln!(w, "k,empirical_prob,theorem_bound")?;
                for r in &rows {
                    match r.theorem_bound {
                        Some(b) => writeln!(w, "{},{:e},{:e}", r.k, r.empirical_prob, b)?,
                        None => writeln!(w, "{},{:e},", r.k, r.empirical_prob)?,
                    }
                }
                Ok(())
            })?;
            self.manifest.record(self.dir, "escape", k, &[ESCAPE_FILE])?;
        }
        Ok(rows)
    }
}
