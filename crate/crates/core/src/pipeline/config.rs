//! Run configuration: a plain `key = value` file with `[section]` headers.
//!
//! ```text
//! [run]
//! task = full
//! seed = 0
//! out = runs/blobs
//!
//! [data]
//! source = blobs
//! classes = 2
//! train_size = 500
//! test_size = 2000
//! separation = 6
//!
//! [net]
//! widths = 2, 32, 32, 2
//!
//! [train]
//! batch_size = 32
//! epochs = 200
//! lr = 0.01
//! momentum = 0.9
//! lambda_l1 = 0.001
//!
//! [spectrum]
//! mode = exact
//! iters = 128
//! runs = 4
//! sigma2 = 1e-9
//! bins = 10000
//! parts = 100
//!
//! [predict]
//! tol = 1e-6
//!
//! [sweep]
//! points = 200
//! tolerance_points = 1
//!
//! [escape]
//! prune_ratio = 0.5
//! k_points = 20
//! trials = 500
//! ```
//!
//! Every section is optional and falls back to the defaults above. With
//! `source = csv` the `[data]` keys are `train_path`, `test_path`,
//! `label_column` and optionally `classes`. `#` starts a comment. Unknown
//! sections, unknown keys and repeated keys are errors.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::nets::TrainConfig;
use crate::spectral::SlqParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Train,
    Spectrum,
    Predict,
    Sweep,
    VerifyEscape,
    Report,
    Full,
}

impl Task {
    pub const ALL: [Task; 7] =
        [Task::Train, Task::Spectrum, Task::Predict, Task::Sweep, Task::VerifyEscape, Task::Report, Task::Full];

    pub fn name(self) -> &'static str {
        match self {
            Task::Train => "train",
            Task::Spectrum => "spectrum",
            Task::Predict => "predict",
            Task::Sweep => "sweep",
            Task::VerifyEscape => "verify-escape",
            Task::Report => "report",
            Task::Full => "full",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown task `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumMode {
    Exact,
    Slq,
}

impl SpectrumMode {
    fn name(self) -> &'static str {
        match self {
            SpectrumMode::Exact => "exact",
            SpectrumMode::Slq => "slq",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSpec {
    Blobs { classes: usize, train_size: usize, test_size: usize, separation: f64 },
    Csv { train_path: PathBuf, test_path: PathBuf, label_column: usize, classes: Option<usize> },
}

impl Default for DataSpec {
    fn default() -> Self {
        DataSpec::Blobs { classes: 2, train_size: 500, test_size: 2000, separation: 6.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumConfig {
    pub mode: SpectrumMode,
    pub slq: SlqParams,
    /// Probe groups for the important-eigenvalue count.
    pub parts: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { mode: SpectrumMode::Exact, slq: SlqParams { runs: 4, sigma2: 1e-9, ..SlqParams::default() }, parts: 100 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// The grid is `i/points` for `i = 1..=points`.
    pub points: usize,
    pub tolerance_points: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { points: 200, tolerance_points: crate::pruning::DEFAULT_TOLERANCE_POINTS }
    }
}

impl SweepConfig {
    pub fn grid(&self) -> Vec<f64> {
        (1..=self.points).map(|i| i as f64 / self.points as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EscapeConfig {
    pub prune_ratio: f64,
    /// Number of subspace codimensions tried, spread evenly over `1..=D`.
    pub k_points: usize,
    pub trials: usize,
}

impl Default for EscapeConfig {
    fn default() -> Self {
        Self { prune_ratio: 0.5, k_points: 20, trials: 500 }
    }
}

impl EscapeConfig {
    pub fn k_grid(&self, dim: usize) -> Vec<usize> {
        let n = self.k_points.min(dim).max(1);
        let mut ks: Vec<usize> = if n == 1 {
            vec![dim]
        } else {
            (0..n).map(|i| 1 + ((dim - 1) * i + (n - 1) / 2) / (n - 1)).collect()
        };
        ks.dedup();
        ks
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub seed: u64,
    pub out: PathBuf,
    pub data: DataSpec,
    pub widths: Vec<usize>,
    /// `seed` is ignored; the trainer's seed is derived from the run seed.
    pub train: TrainConfig,
    pub spectrum: SpectrumConfig,
    /// Bisection tolerance for the phase-transition solve.
    pub predict_tol: f64,
    pub sweep: SweepConfig,
    pub escape: EscapeConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: Task::Full,
            seed: 0,
            out: PathBuf::from("out"),
            data: DataSpec::default(),
            widths: vec![2, 32, 32, 2],
            train: TrainConfig { batch_size: 32, epochs: 200, lr: 0.01, momentum: 0.9, lambda_l1: 1e-3, seed: 0 },
            spectrum: SpectrumConfig::default(),
            predict_tol: 1e-6,
            sweep: SweepConfig::default(),
            escape: EscapeConfig::default(),
        }
    }
}

struct Entry {
    value: String,
    line: usize,
    used: bool,
}

struct Sections<'a> {
    origin: &'a str,
    map: BTreeMap<String, BTreeMap<String, Entry>>,
}

impl Sections<'_> {
    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse { path: self.origin.to_string(), line, msg: msg.into() }
    }

    fn take(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        let e = self.map.get_mut(section)?.get_mut(key)?;
        e.used = true;
        Some((e.value.clone(), e.line))
    }

    fn get<V: FromStr>(&mut self, section: &str, key: &str, default: V) -> Result<V> {
        match self.take(section, key) {
            None => Ok(default),
            Some((v, line)) => v.parse().map_err(|_| self.err(line, format!("bad value `{v}` for {section}.{key}"))),
        }
    }

    fn get_opt<V: FromStr>(&mut self, section: &str, key: &str) -> Result<Option<V>> {
        match self.take(section, key) {
            None => Ok(None),
            Some((v, line)) => {
                v.parse().map(Some).map_err(|_| self.err(line, format!("bad value `{v}` for {section}.{key}")))
            }
        }
    }

    fn require(&mut self, section: &str, key: &str) -> Result<String> {
        self.take(section, key).map(|(v, _)| v).ok_or_else(|| self.err(0, format!("missing {section}.{key}")))
    }

    fn leftover(&self) -> Result<()> {
        for (name, keys) in &self.map {
            if let Some((key, e)) = keys.iter().find(|(_, e)| !e.used) {
                return Err(self.err(e.line, format!("unknown key `{key}` in [{name}]")));
            }
        }
        Ok(())
    }
}

const SECTIONS: [&str; 8] = ["run", "data", "net", "train", "spectrum", "predict", "sweep", "escape"];

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut s = Sections { origin, map: BTreeMap::new() };
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(name) = body.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| s.err(line, "unterminated section header"))?.trim();
                if !SECTIONS.contains(&name) {
                    return Err(s.err(line, format!("unknown section [{name}]")));
                }
                if s.map.contains_key(name) {
                    return Err(s.err(line, format!("section [{name}] appears twice")));
                }
                s.map.insert(name.to_string(), BTreeMap::new());
                current = Some(name.to_string());
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| s.err(line, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            let Some(section) = current.as_deref() else {
                return Err(s.err(line, "key outside of any section"));
            };
            let keys = s.map.get_mut(section).expect("section registered");
            if keys.contains_key(key) {
                return Err(s.err(line, format!("repeated key `{key}` in [{section}]")));
            }
            keys.insert(key.to_string(), Entry { value: value.to_string(), line, used: false });
        }

        let d = RunConfig::default();
        let task = match s.take("run", "task") {
            None => d.task,
            Some((v, line)) => v.parse().map_err(|_| s.err(line, format!("unknown task `{v}`")))?,
        };
        let seed = s.get("run", "seed", d.seed)?;
        let out = s.get("run", "out", d.out.clone())?;

        let source: String = s.get("data", "source", "blobs".to_string())?;
        let data = match source.as_str() {
            "blobs" => {
                let DataSpec::Blobs { classes, train_size, test_size, separation } = DataSpec::default() else {
                    unreachable!()
                };
                DataSpec::Blobs {
                    classes: s.get("data", "classes", classes)?,
                    train_size: s.get("data", "train_size", train_size)?,
                    test_size: s.get("data", "test_size", test_size)?,
                    separation: s.get("data", "separation", separation)?,
                }
            }
            "csv" => DataSpec::Csv {
                train_path: PathBuf::from(s.require("data", "train_path")?),
                test_path: PathBuf::from(s.require("data", "test_path")?),
                label_column: s.get("data", "label_column", 0)?,
                classes: s.get_opt("data", "classes")?,
            },
            other => return Err(Error::Config(format!("unknown data source `{other}`"))),
        };

        let widths = match s.take("net", "widths") {
            None => d.widths.clone(),
            Some((v, line)) => v
                .split(',')
                .map(|w| w.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| s.err(line, format!("bad widths `{v}`")))?,
        };

        let train = TrainConfig {
            batch_size: s.get("train", "batch_size", d.train.batch_size)?,
            epochs: s.get("train", "epochs", d.train.epochs)?,
            lr: s.get("train", "lr", d.train.lr)?,
            momentum: s.get("train", "momentum", d.train.momentum)?,
            lambda_l1: s.get("train", "lambda_l1", d.train.lambda_l1)?,
            seed: 0,
        };

        let mode = match s.get("spectrum", "mode", "exact".to_string())?.as_str() {
            "exact" => SpectrumMode::Exact,
            "slq" => SpectrumMode::Slq,
            other => return Err(Error::Config(format!("unknown spectrum mode `{other}`"))),
        };
        let ds = d.spectrum.slq;
        let spectrum = SpectrumConfig {
            mode,
            slq: SlqParams {
                iters: s.get("spectrum", "iters", ds.iters)?,
                runs: s.get("spectrum", "runs", ds.runs)?,
                sigma2: s.get("spectrum", "sigma2", ds.sigma2)?,
                bins: s.get("spectrum", "bins", ds.bins)?,
            },
            parts: s.get("spectrum", "parts", d.spectrum.parts)?,
        };
        let predict_tol = s.get("predict", "tol", d.predict_tol)?;
        let sweep = SweepConfig {
            points: s.get("sweep", "points", d.sweep.points)?,
            tolerance_points: s.get("sweep", "tolerance_points", d.sweep.tolerance_points)?,
        };
        let escape = EscapeConfig {
            prune_ratio: s.get("escape", "prune_ratio", d.escape.prune_ratio)?,
            k_points: s.get("escape", "k_points", d.escape.k_points)?,
            trials: s.get("escape", "trials", d.escape.trials)?,
        };
        s.leftover()?;

        let cfg = RunConfig { task, seed, out, data, widths, train, spectrum, predict_tol, sweep, escape };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match &self.data {
            DataSpec::Blobs { classes, train_size, test_size, separation } => {
                if *classes < 2 {
                    return bad(format!("data.classes must be >= 2, got {classes}"));
                }
                if train_size < classes || test_size < classes {
                    return bad("data.train_size and data.test_size must be at least data.classes".into());
                }
                if !(*separation > 0.0 && separation.is_finite()) {
                    return bad(format!("data.separation must be > 0, got {separation}"));
                }
                if self.widths.first() != Some(classes) || self.widths.last() != Some(classes) {
                    return bad(format!("blobs have {classes} features and {classes} classes; net.widths must start and end with {classes}"));
                }
            }
            DataSpec::Csv { classes, .. } => {
                if matches!(classes, Some(c) if *c < 2) {
                    return bad("data.classes must be >= 2".into());
                }
            }
        }
        if self.widths.len() < 2 || self.widths.contains(&0) {
            return bad(format!("net.widths needs at least two positive entries, got {:?}", self.widths));
        }
        if self.train.epochs == 0 {
            return bad("train.epochs must be >= 1".into());
        }
        self.train.validate().map_err(|e| Error::Config(e.to_string().replace("invalid argument: ", "train.")))?;
        let slq = &self.spectrum.slq;
        if slq.iters == 0 || slq.runs == 0 {
            return bad("spectrum.iters and spectrum.runs must be >= 1".into());
        }
        if !(slq.sigma2 > 0.0 && slq.sigma2.is_finite()) {
            return bad(format!("spectrum.sigma2 must be > 0, got {}", slq.sigma2));
        }
        if slq.bins < 2 {
            return bad("spectrum.bins must be >= 2".into());
        }
        if self.spectrum.parts == 0 {
            return bad("spectrum.parts must be >= 1".into());
        }
        if !(self.predict_tol > 0.0 && self.predict_tol < 0.5) {
            return bad(format!("predict.tol must lie in (0, 0.5), got {}", self.predict_tol));
        }
        if self.sweep.points == 0 {
            return bad("sweep.points must be >= 1".into());
        }
        if !(self.sweep.tolerance_points >= 0.0 && self.sweep.tolerance_points <= 100.0) {
            return bad(format!("sweep.tolerance_points must lie in [0, 100], got {}", self.sweep.tolerance_points));
        }
        if !(0.0..=1.0).contains(&self.escape.prune_ratio) {
            return bad(format!("escape.prune_ratio must lie in [0, 1], got {}", self.escape.prune_ratio));
        }
        if self.escape.k_points == 0 || self.escape.trials == 0 {
            return bad("escape.k_points and escape.trials must be >= 1".into());
        }
        Ok(())
    }

    /// Canonical text form; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut o = String::new();
        let _ = self.write_sections(&mut o, &SECTIONS);
        o
    }

    /// Canonical text of the named sections only. Used as cache-key material.
    pub(crate) fn sections_text(&self, names: &[&str]) -> String {
        let mut o = String::new();
        let _ = self.write_sections(&mut o, names);
        o
    }

    fn write_sections(&self, o: &mut String, names: &[&str]) -> fmt::Result {
        for (i, &name) in names.iter().enumerate() {
            if i > 0 {
                o.push('\n');
            }
            writeln!(o, "[{name}]")?;
            match name {
                "run" => {
                    writeln!(o, "task = {}", self.task)?;
                    writeln!(o, "seed = {}", self.seed)?;
                    writeln!(o, "out = {}", self.out.display())?;
                }
                "data" => match &self.data {
                    DataSpec::Blobs { classes, train_size, test_size, separation } => {
                        writeln!(o, "source = blobs")?;
                        writeln!(o, "classes = {classes}")?;
                        writeln!(o, "train_size = {train_size}")?;
                        writeln!(o, "test_size = {test_size}")?;
                        writeln!(o, "separation = {separation:?}")?;
                    }
                    DataSpec::Csv { train_path, test_path, label_column, classes } => {
                        writeln!(o, "source = csv")?;
                        writeln!(o, "train_path = {}", train_path.display())?;
                        writeln!(o, "test_path = {}", test_path.display())?;
                        writeln!(o, "label_column = {label_column}")?;
                        if let Some(c) = classes {
                            writeln!(o, "classes = {c}")?;
                        }
                    }
                },
                "net" => {
                    let w: Vec<String> = self.widths.iter().map(|w| w.to_string()).collect();
                    writeln!(o, "widths = {}", w.join(", "))?;
                }
                "train" => {
                    let t = &self.train;
                    writeln!(o, "batch_size = {}", t.batch_size)?;
                    writeln!(o, "epochs = {}", t.epochs)?;
                    writeln!(o, "lr = {:?}", t.lr)?;
                    writeln!(o, "momentum = {:?}", t.momentum)?;
                    writeln!(o, "lambda_l1 = {:?}", t.lambda_l1)?;
                }
                "spectrum" => {
                    let sp = &self.spectrum;
                    writeln!(o, "mode = {}", sp.mode.name())?;
                    writeln!(o, "iters = {}", sp.slq.iters)?;
                    writeln!(o, "runs = {}", sp.slq.runs)?;
                    writeln!(o, "sigma2 = {:?}", sp.slq.sigma2)?;
                    writeln!(o, "bins = {}", sp.slq.bins)?;
                    writeln!(o, "parts = {}", sp.parts)?;
                }
                "predict" => writeln!(o, "tol = {:?}", self.predict_tol)?,
                "sweep" => {
                    writeln!(o, "points = {}", self.sweep.points)?;
                    writeln!(o, "tolerance_points = {:?}", self.sweep.tolerance_points)?;
                }
                "escape" => {
                    writeln!(o, "prune_ratio = {:?}", self.escape.prune_ratio)?;
                    writeln!(o, "k_points = {}", self.escape.k_points)?;
                    writeln!(o, "trials = {}", self.escape.trials)?;
                }
                _ => unreachable!("unknown section {name}"),
            }
        }
        Ok(())
    }
}
