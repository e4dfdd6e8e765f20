//! MNIST pair experiments: train with or without the front end, then attack.

use crate::config::ExperimentConfig;
use crate::output::{ensure_dir, write_csv, write_manifest, write_pgm};
use crate::CliError;
use rayon::prelude::*;
use serde::Serialize;
use sparse_defense::dataio::{load_mnist_dir, make_pair_dataset, PairDataset, Sample};
use sparse_defense::svm::{self, Class, Evaluation, ModelFrontEnd, SavedModel, TrainConfig};
use sparse_defense::{attack_baseline, directed_perturbation, Basis64, FrontEnd64, LinearModel64, WhiteBoxAttacker};
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub fn load_pair(cfg: &ExperimentConfig) -> Result<PairDataset, CliError> {
    let dir = cfg.resolved_data_dir();
    let (train, test) = load_mnist_dir(&dir)
        .map_err(|e| CliError::Data(format!("cannot load MNIST from {}: {e}", dir.display())))?;
    make_pair_dataset(&train, &test, cfg.d1, cfg.d2, cfg.seed)
        .map_err(|e| CliError::Data(e.to_string()))
}

pub fn wavelet_front_end(data: &PairDataset, levels: usize, rho: f64) -> Result<FrontEnd64, CliError> {
    let basis = Basis64::cdf97(data.rows, data.cols, levels)?;
    Ok(FrontEnd64::with_rho(Arc::new(basis), rho)?)
}

fn classes(samples: &[Sample], pair: (u8, u8)) -> Result<Vec<Class>, CliError> {
    Ok(samples.iter().map(|s| Class::from_label(s.label, pair)).collect::<Result<_, _>>()?)
}

fn preprocess(samples: &[Sample], fe: Option<&FrontEnd64>) -> Result<Vec<Vec<f64>>, CliError> {
    match fe {
        None => Ok(samples.iter().map(|s| s.x.clone()).collect()),
        Some(fe) => Ok(samples.par_iter().map(|s| fe.apply(&s.x)).collect::<Result<_, _>>()?),
    }
}

/// Trains on the (optionally sparsified) training split.
pub fn train_model(
    data: &PairDataset,
    fe: Option<&FrontEnd64>,
    cfg: &TrainConfig,
) -> Result<(LinearModel64, Evaluation), CliError> {
    let xs = preprocess(&data.train, fe)?;
    let cs = classes(&data.train, data.pair())?;
    let (model, _) = svm::train(&xs, &cs, cfg).map_err(|e| CliError::Run(e.to_string()))?;
    let train_eval = svm::evaluate(&model, &xs, &cs)?;
    Ok((model, train_eval))
}

/// Test-split accuracies of one model, clean and under both attacks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackEval {
    pub clean: Evaluation,
    /// `e = ε sign(w)`; the baseline attack when there is no front end.
    pub semi_white: Evaluation,
    /// `e = ε sign(proj(w, x))`; the baseline attack when there is no front end.
    pub white: Evaluation,
    /// Test samples whose support is certified stable at `ε`.
    pub certified: usize,
    pub mean_shift_semi_white: f64,
    pub mean_shift_white: f64,
}

struct PerSample {
    clean: bool,
    semi_white: bool,
    white: bool,
    certified: bool,
    shift_sw: f64,
    shift_w: f64,
}

pub fn attack_model(
    data: &PairDataset,
    model: &LinearModel64,
    fe: Option<&FrontEnd64>,
    epsilon: f64,
) -> Result<AttackEval, CliError> {
    let pair = data.pair();
    let sign_e = attack_baseline(&model.w, epsilon)?.e;
    let attacker = fe.map(|fe| WhiteBoxAttacker::new(fe, &model.w, epsilon)).transpose()?;
    let front = |x: &[f64]| -> Result<Vec<f64>, CliError> {
        Ok(match fe {
            Some(fe) => fe.apply(x)?,
            None => x.to_vec(),
        })
    };
    let add = |x: &[f64], e: &[f64]| -> Vec<f64> { x.iter().zip(e).map(|(a, b)| a + b).collect() };

    let per: Vec<PerSample> = data
        .test
        .par_iter()
        .map(|s| -> Result<PerSample, CliError> {
            let truth = Class::from_label(s.label, pair)?;
            let clean_in = front(&s.x)?;
            let clean_score = model.score(&clean_in);
            let d_sw = directed_perturbation(&sign_e, s.label, pair)?;
            let sw_in = front(&add(&s.x, &d_sw))?;
            let (w_in, certified) = match (fe, &attacker) {
                (Some(fe), Some(att)) => {
                    let e = att.attack(&s.x)?.e;
                    let d = directed_perturbation(&e, s.label, pair)?;
                    (fe.apply(&add(&s.x, &d))?, fe.check_high_snr(&s.x, epsilon)?.certified)
                }
                _ => (sw_in.clone(), false),
            };
            Ok(PerSample {
                clean: model.predict(&clean_in) == truth,
                semi_white: model.predict(&sw_in) == truth,
                white: model.predict(&w_in) == truth,
                certified,
                shift_sw: (model.score(&sw_in) - clean_score).abs(),
                shift_w: (model.score(&w_in) - clean_score).abs(),
            })
        })
        .collect::<Result<_, _>>()?;

    let total = per.len();
    let count = |f: fn(&PerSample) -> bool| Evaluation { correct: per.iter().filter(|p| f(p)).count(), total };
    let mean = |f: fn(&PerSample) -> f64| per.iter().map(f).sum::<f64>() / total.max(1) as f64;
    Ok(AttackEval {
        clean: count(|p| p.clean),
        semi_white: count(|p| p.semi_white),
        white: count(|p| p.white),
        certified: per.iter().filter(|p| p.certified).count(),
        mean_shift_semi_white: mean(|p| p.shift_sw),
        mean_shift_white: mean(|p| p.shift_w),
    })
}

/// One trained-and-attacked configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefenseResult {
    pub rho: Option<f64>,
    pub k: Option<usize>,
    pub train: Evaluation,
    pub eval: AttackEval,
}

pub fn run_defense(
    data: &PairDataset,
    fe: Option<&FrontEnd64>,
    cfg: &ExperimentConfig,
) -> Result<(LinearModel64, DefenseResult), CliError> {
    let (model, train) = train_model(data, fe, &cfg.train_config())?;
    let eval = attack_model(data, &model, fe, cfg.epsilon)?;
    Ok((model, DefenseResult { rho: fe.map(|f| f.rho()), k: fe.map(|f| f.k()), train, eval }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1 {
    pub no_front_end: DefenseResult,
    pub front_end: DefenseResult,
}

#[derive(Debug, Serialize)]
struct Table1Row<'a> {
    attack: &'a str,
    no_front_end_correct: usize,
    no_front_end_accuracy: f64,
    front_end_correct: usize,
    front_end_accuracy: f64,
    total: usize,
}

impl Table1 {
    fn rows(&self) -> Vec<Table1Row<'static>> {
        let a = &self.no_front_end.eval;
        let b = &self.front_end.eval;
        [("none", a.clean, b.clean), ("semi_white", a.semi_white, b.semi_white), ("white", a.white, b.white)]
            .into_iter()
            .map(|(attack, x, y)| Table1Row {
                attack,
                no_front_end_correct: x.correct,
                no_front_end_accuracy: x.accuracy(),
                front_end_correct: y.correct,
                front_end_accuracy: y.accuracy(),
                total: x.total,
            })
            .collect()
    }

    pub fn render(&self, pair: (u8, u8), epsilon: f64) -> String {
        let rho = self.front_end.rho.unwrap_or(1.0);
        let mut s = format!(
            "{} vs {}, epsilon = {epsilon}, rho = {:.1}% (K = {})\n",
            pair.0,
            pair.1,
            rho * 100.0,
            self.front_end.k.unwrap_or(0)
        );
        s += &format!("{:<12} {:>14} {:>12}\n", "attack", "no front end", "front end");
        for r in self.rows() {
            s += &format!(
                "{:<12} {:>13.2}% {:>11.2}%\n",
                r.attack,
                100.0 * r.no_front_end_accuracy,
                100.0 * r.front_end_accuracy
            );
        }
        s
    }
}

pub fn run_table1(cfg: &ExperimentConfig) -> Result<Table1, CliError> {
    let data = load_pair(cfg)?;
    table1_on(&data, cfg)
}

pub fn table1_on(data: &PairDataset, cfg: &ExperimentConfig) -> Result<Table1, CliError> {
    let (_, no_front_end) = run_defense(data, None, cfg)?;
    let fe = wavelet_front_end(data, cfg.levels, cfg.rho)?;
    let (_, front_end) = run_defense(data, Some(&fe), cfg)?;
    Ok(Table1 { no_front_end, front_end })
}

pub fn write_table1(table: &Table1, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    ensure_dir(&cfg.out_dir)?;
    let csv = cfg.out_dir.join("table1.csv");
    write_csv(&csv, &table.rows())?;
    let manifest = write_manifest(&cfg.out_dir, "table1", cfg, vec![csv.clone()], table)?;
    Ok(vec![csv, manifest])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub rho: f64,
    pub k: usize,
    pub clean: f64,
    pub semi_white: f64,
    pub white: f64,
    pub certified_fraction: f64,
    pub mean_shift_semi_white: f64,
    pub mean_shift_white: f64,
    pub train: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    /// Clean accuracy without a front end.
    pub baseline_clean: f64,
    pub rows: Vec<SweepRow>,
}

impl Sweep {
    /// Row with the best accuracy under `attack`.
    pub fn peak(&self, attack: fn(&SweepRow) -> f64) -> Option<&SweepRow> {
        self.rows.iter().max_by(|a, b| attack(a).total_cmp(&attack(b)))
    }

    pub fn at(&self, rho: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| (r.rho - rho).abs() < 1e-12)
    }
}

pub fn run_rho_sweep(cfg: &ExperimentConfig) -> Result<Sweep, CliError> {
    let data = load_pair(cfg)?;
    sweep_on(&data, cfg)
}

pub fn sweep_on(data: &PairDataset, cfg: &ExperimentConfig) -> Result<Sweep, CliError> {
    let (base_model, _) = train_model(data, None, &cfg.train_config())?;
    let baseline_clean = svm::evaluate(
        &base_model,
        &preprocess(&data.test, None)?,
        &classes(&data.test, data.pair())?,
    )?
    .accuracy();
    let basis = Arc::new(Basis64::cdf97(data.rows, data.cols, cfg.levels)?);
    let mut rows = Vec::with_capacity(cfg.rho_list.len());
    for &rho in &cfg.rho_list {
        let fe = FrontEnd64::with_rho(basis.clone(), rho)?;
        let (_, r) = run_defense(data, Some(&fe), cfg)?;
        log::info!(
            "rho {rho}: clean {:.4} semi-white {:.4} white {:.4}",
            r.eval.clean.accuracy(),
            r.eval.semi_white.accuracy(),
            r.eval.white.accuracy()
        );
        rows.push(SweepRow {
            rho,
            k: fe.k(),
            clean: r.eval.clean.accuracy(),
            semi_white: r.eval.semi_white.accuracy(),
            white: r.eval.white.accuracy(),
            certified_fraction: r.eval.certified as f64 / r.eval.clean.total as f64,
            mean_shift_semi_white: r.eval.mean_shift_semi_white,
            mean_shift_white: r.eval.mean_shift_white,
            train: r.train.accuracy(),
        });
    }
    Ok(Sweep { baseline_clean, rows })
}

pub fn write_sweep(sweep: &Sweep, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    ensure_dir(&cfg.out_dir)?;
    let csv = cfg.out_dir.join("sweep.csv");
    write_csv(&csv, &sweep.rows)?;
    let manifest = write_manifest(&cfg.out_dir, "sweep", cfg, vec![csv.clone()], sweep)?;
    Ok(vec![csv, manifest])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Triptych {
    pub index: usize,
    pub true_label: u8,
    /// Undefended model on the clean image.
    pub clean_label: u8,
    /// Undefended model on `x ± ε sign(w)`.
    pub attacked_label: u8,
    /// Defended model on the front-end output of the white-box attacked image.
    pub defended_label: u8,
    pub files: Vec<PathBuf>,
}

/// Index of the first test sample of `label`.
pub fn first_test_index(data: &PairDataset, label: u8) -> Option<usize> {
    data.test.iter().position(|s| s.label == label)
}

pub fn emit_triptych(cfg: &ExperimentConfig, index: Option<usize>) -> Result<Triptych, CliError> {
    let data = load_pair(cfg)?;
    triptych_on(&data, cfg, index)
}

pub fn triptych_on(data: &PairDataset, cfg: &ExperimentConfig, index: Option<usize>) -> Result<Triptych, CliError> {
    let index = match index {
        Some(i) => i,
        None => first_test_index(data, cfg.d2).ok_or_else(|| CliError::Data("no test sample".into()))?,
    };
    let sample = data.test.get(index).ok_or_else(|| {
        CliError::Config(format!("sample index {index} out of range (test set has {})", data.test.len()))
    })?;
    let pair = data.pair();
    let tc = cfg.train_config();
    let (plain, _) = train_model(data, None, &tc)?;
    let fe = wavelet_front_end(data, cfg.levels, cfg.rho)?;
    let (defended, _) = train_model(data, Some(&fe), &tc)?;

    let e = attack_baseline(&plain.w, cfg.epsilon)?.e;
    let d = directed_perturbation(&e, sample.label, pair)?;
    let attacked: Vec<f64> = sample.x.iter().zip(&d).map(|(a, b)| a + b).collect();

    let white = WhiteBoxAttacker::new(&fe, &defended.w, cfg.epsilon)?.attack(&sample.x)?;
    let dw = directed_perturbation(&white.e, sample.label, pair)?;
    let white_in: Vec<f64> = sample.x.iter().zip(&dw).map(|(a, b)| a + b).collect();
    let defended_img = fe.apply(&white_in)?;

    ensure_dir(&cfg.out_dir)?;
    let mut files = Vec::new();
    for (name, img) in [("clean", &sample.x), ("attacked", &attacked), ("defended", &defended_img)] {
        let p = cfg.out_dir.join(format!("triptych_{index}_{name}.pgm"));
        write_pgm(&p, img, data.rows, data.cols)?;
        files.push(p);
    }
    let t = Triptych {
        index,
        true_label: sample.label,
        clean_label: plain.predict(&sample.x).digit(pair),
        attacked_label: plain.predict(&attacked).digit(pair),
        defended_label: defended.predict(&defended_img).digit(pair),
        files,
    };
    let manifest = write_manifest(&cfg.out_dir, "triptych", cfg, t.files.clone(), &t)?;
    log::info!("wrote {}", manifest.display());
    Ok(t)
}

/// Trains one model (`rho = None` for no front end) and saves it as JSON.
pub fn train_and_save(cfg: &ExperimentConfig, rho: Option<f64>, path: &Path) -> Result<SavedModel, CliError> {
    let data = load_pair(cfg)?;
    let fe = rho.map(|r| wavelet_front_end(&data, cfg.levels, r)).transpose()?;
    let (model, train) = train_model(&data, fe.as_ref(), &cfg.train_config())?;
    log::info!("training accuracy {:.4}", train.accuracy());
    let meta = fe.as_ref().map(|f| ModelFrontEnd { basis: f.basis().kind().clone(), k: f.k() });
    let saved = SavedModel::new(&model, data.pair(), cfg.seed, cfg.train_config(), meta);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    saved.save(path)?;
    Ok(saved)
}

/// Evaluates a saved model on the test split of its own pair and seed.
pub fn attack_saved(cfg: &ExperimentConfig, path: &Path) -> Result<AttackEval, CliError> {
    let saved = SavedModel::load(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let cfg = ExperimentConfig { d1: saved.pair.0, d2: saved.pair.1, seed: saved.split_seed, ..cfg.clone() };
    let data = load_pair(&cfg)?;
    let model = saved.model::<f64>()?;
    if model.dim() != data.dim() {
        return Err(CliError::Data(format!("model dimension {} does not match data {}", model.dim(), data.dim())));
    }
    let fe = saved
        .frontend
        .as_ref()
        .map(|m| -> Result<FrontEnd64, CliError> {
            Ok(FrontEnd64::new(Arc::new(Basis64::from_kind(&m.basis, data.dim())?), m.k)?)
        })
        .transpose()?;
    attack_model(&data, &model, fe.as_ref(), cfg.epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Two blobs of 8x8 "images" separated along a fixed direction.
    fn toy(n_per: usize) -> PairDataset {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let dir: Vec<f64> = (0..64).map(|i| if i % 9 == 0 { 0.5 } else { 0.0 }).collect();
        let mut all = Vec::new();
        for (label, sgn) in [(3u8, -1.0), (7u8, 1.0)] {
            for _ in 0..n_per {
                let x = dir.iter().map(|d| sgn * d + 0.05 * rng.random_range(-1.0..1.0)).collect();
                all.push(Sample { x, label });
            }
        }
        let test = all.iter().step_by(4).cloned().collect();
        PairDataset { train: all, test, d1: 3, d2: 7, rows: 8, cols: 8 }
    }

    #[test]
    fn undefended_attack_reuses_the_sign_perturbation() {
        let data = toy(60);
        let cfg = ExperimentConfig { epsilon: 1.0, lambda: 1e-2, epochs: 10, ..Default::default() };
        let (_, r) = run_defense(&data, None, &cfg).unwrap();
        assert_eq!(r.eval.clean.accuracy(), 1.0);
        assert_eq!(r.eval.semi_white, r.eval.white);
        assert_eq!(r.eval.certified, 0);
        assert!(r.eval.semi_white.accuracy() < r.eval.clean.accuracy());
    }

    #[test]
    fn defended_run_reports_k() {
        let data = toy(60);
        let cfg = ExperimentConfig { epsilon: 0.05, lambda: 1e-2, epochs: 10, levels: 2, ..Default::default() };
        let fe = wavelet_front_end(&data, 2, 0.25).unwrap();
        let (_, r) = run_defense(&data, Some(&fe), &cfg).unwrap();
        assert_eq!(r.k, Some(16));
        assert_eq!(r.eval.clean.total, data.test.len());
        assert!(r.eval.certified <= r.eval.clean.total);
        assert!(r.eval.mean_shift_white.is_finite() && r.eval.mean_shift_semi_white.is_finite());
    }
}
