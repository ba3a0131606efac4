//! Implementations behind the CLI subcommands.
//!
//! Every command reads its settings from a [`RunConfig`], writes all of
//! its artifacts inside the chosen output directory, and reports what it
//! wrote on stdout. Random streams are split by purpose: the model seeds
//! its initializer on stream 0 and the trainer shuffles on stream 1 (both
//! inside gsn-core), the sampling commands draw on stream 2, and the
//! verification batteries on stream 3, so one master seed reproduces a
//! whole pipeline.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gsn_core::chainlab::{
    dae_exact_operator, depnet_operator, ergodicity_check, joint_chain_operator, schweitzer_bound,
    total_variation, write_records_csv, write_records_jsonl, AnalysisRecord, ChainOperator,
    DepNetSpec, ScanMode, StateSpace,
};
use gsn_core::datasets::{load_idx, read_csv, Dataset, ValueKind};
use gsn_core::gsn::{GsnConfig, GsnModel, StartParity, VisibleKind};
use gsn_core::ndnum::{Matrix, Rng};
use gsn_core::parzen::{default_bandwidth_grid, log_likelihood, select_bandwidth, ParzenEstimator};
use gsn_core::sampler::{sample, sample_clamped, write_pgm_grid, write_samples_csv, SampleRun};
use gsn_core::trainer::{train, TrainConfig};

use crate::config::RunConfig;

const SAMPLER_STREAM: u64 = 2;
const VERIFY_STREAM: u64 = 3;

/// FNV-1a over raw file bytes; the fingerprint that determinism checks
/// compare across runs.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn value_kind(cfg: &RunConfig) -> Result<ValueKind> {
    match cfg.require("value_kind")? {
        "binary" => Ok(ValueKind::Binary),
        "unit" => Ok(ValueKind::UnitInterval),
        "real" => Ok(ValueKind::Real),
        v => bail!("config key \"value_kind\": expected binary, unit or real, got {v:?}"),
    }
}

fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let path = cfg.path("dataset")?;
    let ds = match cfg.require("dataset_format")? {
        "csv" => read_csv(&path, value_kind(cfg)?)?,
        "idx" => load_idx(&path, cfg.bool("binarize")?)?,
        v => bail!("config key \"dataset_format\": expected csv or idx, got {v:?}"),
    };
    println!("dataset {}: {} examples of dimension {}", path.display(), ds.len(), ds.dim());
    Ok(ds)
}

fn model_config(cfg: &RunConfig, visible_size: usize) -> Result<GsnConfig> {
    let kind = match value_kind(cfg)? {
        ValueKind::Binary => VisibleKind::Binary,
        ValueKind::UnitInterval | ValueKind::Real => VisibleKind::Real,
    };
    let mut model_cfg = GsnConfig::new(
        visible_size,
        cfg.usize_list("hidden_sizes")?,
        cfg.f64("eta")?,
        cfg.f64("corruption")?,
        kind,
        cfg.u64("seed")?,
    )?;
    if let Some(steps) = cfg.usize_or_auto("walkback_steps")? {
        model_cfg.walkback_steps = steps;
    }
    model_cfg.corrupt_every_step = cfg.bool("corrupt_every_step")?;
    model_cfg.start_parity = match cfg.require("start_parity")? {
        "odd" => StartParity::Odd,
        "even" => StartParity::Even,
        v => bail!("config key \"start_parity\": expected odd or even, got {v:?}"),
    };
    model_cfg.validate()?;
    Ok(model_cfg)
}

fn load_model(cfg: &RunConfig) -> Result<GsnModel> {
    let path = cfg.path("checkpoint")?;
    let model = GsnModel::load(&path)
        .with_context(|| format!("cannot load checkpoint {}", path.display()))?;
    println!(
        "checkpoint {}: visible {}, hidden layers {:?}",
        path.display(),
        model.config().visible_size,
        model.config().hidden_sizes
    );
    Ok(model)
}

fn sample_run(cfg: &RunConfig, mean_field: bool) -> Result<SampleRun> {
    let mut run = SampleRun::new(cfg.usize("num_samples")?);
    run.burn_in = cfg.usize("burn_in")?;
    run.thinning = cfg.usize("thinning")?;
    run.collect_mean_field = mean_field;
    Ok(run)
}

/// PGM tile shape: both keys explicit, or both auto (square when the
/// dimension is a perfect square, otherwise a single row).
fn tile_shape(cfg: &RunConfig, dim: usize) -> Result<(usize, usize)> {
    match (cfg.usize_or_auto("img_rows")?, cfg.usize_or_auto("img_cols")?) {
        (Some(r), Some(c)) => Ok((r, c)),
        (None, None) => {
            let side = (dim as f64).sqrt().round() as usize;
            if side * side == dim {
                Ok((side, side))
            } else {
                Ok((1, dim))
            }
        }
        _ => bail!("config keys \"img_rows\" and \"img_cols\" must be set together"),
    }
}

fn write_artifact(out: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let path = out.join(name);
    std::fs::write(&path, bytes)
        .with_context(|| format!("cannot write {}", path.display()))?;
    println!("wrote {} ({} bytes, fnv1a {:016x})", path.display(), bytes.len(), fnv1a(bytes));
    Ok(path)
}

/// Reads a single-row CSV (mask, clamp image, target table) and returns
/// the row, reporting the config key on any failure.
fn csv_row(cfg: &RunConfig, key: &str) -> Result<Vec<f64>> {
    let path = cfg.path(key)?;
    let ds = read_csv(&path, ValueKind::Real)
        .with_context(|| format!("config key {key:?}: cannot read {}", path.display()))?;
    if ds.len() != 1 {
        bail!("config key {key:?}: expected exactly one CSV row, got {}", ds.len());
    }
    Ok(ds.examples.row(0).to_vec())
}

pub fn cmd_train(cfg: &RunConfig, out: &Path) -> Result<()> {
    let ds = load_dataset(cfg)?;
    let model_cfg = model_config(cfg, ds.dim())?;
    let mut model = GsnModel::new(model_cfg)?;

    let mut train_cfg = TrainConfig::new(cfg.usize("epochs")?, cfg.u64("seed")?);
    train_cfg.learning_rate = cfg.f64("learning_rate")?;
    train_cfg.momentum = cfg.f64("momentum")?;
    train_cfg.lr_decay = cfg.f64("lr_decay")?;
    train_cfg.minibatch = cfg.usize("minibatch")?;

    let report = train(&mut model, &ds.examples, &train_cfg)?;
    match (report.epochs.first(), report.epochs.last()) {
        (Some(first), Some(last)) => {
            println!("trained {} epochs: nll {:.6} -> {:.6}", report.epochs.len(), first.mean_nll, last.mean_nll)
        }
        _ => println!("no training epochs requested; saving the initialized model"),
    }
    println!("parameter fingerprint {:016x}", report.final_checksum);

    write_artifact(out, "train_report.csv", report.to_csv_string().as_bytes())?;
    let bytes = model.to_bytes()?;
    write_artifact(out, "checkpoint.gsn", &bytes)?;
    write_artifact(out, "checkpoint.checksum", format!("{:016x}\n", fnv1a(&bytes)).as_bytes())?;
    Ok(())
}

pub fn cmd_sample(cfg: &RunConfig, out: &Path) -> Result<()> {
    let model = load_model(cfg)?;
    let run = sample_run(cfg, cfg.bool("mean_field")?)?;
    let mut rng = Rng::with_stream(cfg.u64("seed")?, SAMPLER_STREAM);
    let output = sample(&model, &run, &mut rng)?;
    write_grid_and_csv(cfg, out, &output.samples, "samples")
}

pub fn cmd_inpaint(cfg: &RunConfig, out: &Path) -> Result<()> {
    let model = load_model(cfg)?;
    let dim = model.config().visible_size;
    let mask_row = csv_row(cfg, "clamp_mask")?;
    let values = csv_row(cfg, "clamp_image")?;
    if mask_row.len() != dim || values.len() != dim {
        bail!(
            "clamp_mask has {} entries and clamp_image {}, the model needs {dim}",
            mask_row.len(),
            values.len()
        );
    }
    let mut mask = Vec::with_capacity(dim);
    for (j, &v) in mask_row.iter().enumerate() {
        if v != 0.0 && v != 1.0 {
            bail!("config key \"clamp_mask\": entry {j} is {v}, expected 0 or 1");
        }
        mask.push(v == 1.0);
    }

    // Collected rows must carry the held values exactly, so inpainting
    // always records sampled states rather than reconstruction means.
    let run = sample_run(cfg, false)?;
    let mut rng = Rng::with_stream(cfg.u64("seed")?, SAMPLER_STREAM);
    let output = sample_clamped(&model, &run, &mut rng, &mask, &values)?;
    println!("held {} of {dim} coordinates fixed", mask.iter().filter(|&&m| m).count());
    write_grid_and_csv(cfg, out, &output.samples, "inpaint")
}

fn write_grid_and_csv(cfg: &RunConfig, out: &Path, samples: &Matrix, stem: &str) -> Result<()> {
    let csv_path = out.join(format!("{stem}.csv"));
    write_samples_csv(samples, &csv_path)?;
    report_written(&csv_path)?;

    let (rows, cols) = tile_shape(cfg, samples.cols())?;
    let pgm_path = out.join(format!("{stem}.pgm"));
    write_pgm_grid(samples, rows, cols, cfg.usize("grid_cols")?, &pgm_path)?;
    report_written(&pgm_path)?;
    Ok(())
}

fn report_written(path: &Path) -> Result<()> {
    let bytes = std::fs::read(path)?;
    println!("wrote {} ({} bytes, fnv1a {:016x})", path.display(), bytes.len(), fnv1a(&bytes));
    Ok(())
}

pub fn cmd_eval_parzen(cfg: &RunConfig, out: &Path) -> Result<()> {
    let samples_path = cfg.path("samples")?;
    let samples = read_csv(&samples_path, ValueKind::Real)
        .with_context(|| format!("config key \"samples\": cannot read {}", samples_path.display()))?;
    println!("samples {}: {} rows", samples_path.display(), samples.len());
    let ds = load_dataset(cfg)?;
    if ds.len() < 2 {
        bail!("dataset needs at least 2 rows to split off a validation slice");
    }

    let frac = cfg.f64("validation_fraction")?;
    if !(0.0..1.0).contains(&frac) {
        bail!("config key \"validation_fraction\": {frac} is not in [0, 1)");
    }
    let k = ((ds.len() as f64 * frac).round() as usize).clamp(1, ds.len() - 1);
    let validation = ds.examples.select_rows(&(0..k).collect::<Vec<_>>());
    let eval = ds.examples.select_rows(&(k..ds.len()).collect::<Vec<_>>());

    let sigma = match cfg.f64_or_auto("bandwidth")? {
        Some(s) => s,
        None => {
            let s = select_bandwidth(&samples.examples, &validation, &default_bandwidth_grid())?;
            println!("bandwidth grid search on {k} validation rows picked sigma {s:.4}");
            s
        }
    };
    let est = ParzenEstimator::new(samples.examples.clone(), sigma)?;
    let ll = log_likelihood(&est, &eval)?;
    println!(
        "parzen log-likelihood: mean {:.4}, std error {:.4}, sigma {:.4}, {} test points",
        ll.mean,
        ll.std_error,
        sigma,
        eval.rows()
    );
    let csv = format!(
        "mean,std_error,sigma,points\n{},{},{},{}\n",
        ll.mean,
        ll.std_error,
        sigma,
        eval.rows()
    );
    write_artifact(out, "parzen.csv", csv.as_bytes())?;
    Ok(())
}

pub fn cmd_analyze_chain(cfg: &RunConfig, out: &Path) -> Result<()> {
    let model = load_model(cfg)?;
    let space = StateSpace::new(model.config().visible_size)?;
    let op = dae_exact_operator(&model, &space)?;
    let erg = ergodicity_check(&op);
    println!(
        "exact chain on {} states: irreducible {}, period {}, ergodic {}",
        op.size(),
        erg.irreducible,
        erg.period,
        erg.ergodic
    );

    let pi = op.stationary_exact()?;
    let mut csv = String::from("state,probability\n");
    for (s, p) in pi.iter().enumerate() {
        csv.push_str(&format!("{s},{p}\n"));
    }
    write_artifact(out, "stationary.csv", csv.as_bytes())?;

    if cfg.get("table").is_some() {
        let table = csv_row(cfg, "table")?;
        if table.len() != op.size() {
            bail!(
                "config key \"table\": {} probabilities given, the chain has {} states",
                table.len(),
                op.size()
            );
        }
        let tv = total_variation(&pi, &table)?;
        println!("total variation between stationary and target table: {tv:.6}");
    }

    let eps = cfg.f64("perturb_eps")?;
    let mut record = AnalysisRecord {
        trial: 0,
        label: op.label().to_string(),
        irreducible: Some(erg.irreducible),
        period: Some(erg.period),
        lhs: None,
        rhs: None,
        holds: None,
    };
    if eps > 0.0 {
        if !(0.0..=1.0).contains(&eps) {
            bail!("config key \"perturb_eps\": {eps} is not in [0, 1]");
        }
        let n = op.size();
        let mut kt = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                kt.set(i, j, (1.0 - eps) * op.matrix().get(i, j) + eps / n as f64);
            }
        }
        let kt = ChainOperator::new(kt, "uniform-mixed")?;
        let bound = schweitzer_bound(&op, &kt)?;
        println!(
            "perturbation bound at eps {eps}: shift {:.6} <= bound {:.6} ({})",
            bound.lhs,
            bound.rhs,
            if bound.holds { "holds" } else { "violated" }
        );
        record.lhs = Some(bound.lhs);
        record.rhs = Some(bound.rhs);
        record.holds = Some(bound.holds);
    }

    let records = [record];
    let mut csv = Vec::new();
    write_records_csv(&records, &mut csv)?;
    write_artifact(out, "analysis.csv", &csv)?;
    let mut jsonl = Vec::new();
    write_records_jsonl(&records, &mut jsonl)?;
    write_artifact(out, "analysis.jsonl", &jsonl)?;
    Ok(())
}

/// Outcome of one verification battery, for the summary line.
struct Battery {
    name: &'static str,
    passed: bool,
    detail: String,
}

impl Battery {
    fn report(&self) {
        if self.passed {
            println!("[pass] {}: {}", self.name, self.detail);
        } else {
            println!("[FAIL] {}: {}", self.name, self.detail);
        }
    }
}

pub fn cmd_verify(cfg: &RunConfig, out: &Path) -> Result<()> {
    let mut rng = Rng::with_stream(cfg.u64("seed")?, VERIFY_STREAM);
    let mut batteries = Vec::new();

    batteries.push(gibbs_marginal_battery(&mut rng, cfg.usize("gibbs_trials")?));
    let (bound, records) =
        perturbation_battery(&mut rng, cfg.usize("trials")?, cfg.usize("max_states")?);
    batteries.push(bound);
    batteries.push(depnet_consistent_battery(&mut rng, cfg.usize("depnet_trials")?));
    batteries.push(depnet_inconsistent_battery());
    batteries.push(depnet_ordered_battery());
    if cfg.bool("inject_counterexample")? {
        batteries.push(injected_battery());
    }

    let mut csv = Vec::new();
    write_records_csv(&records, &mut csv)?;
    write_artifact(out, "verify_report.csv", &csv)?;
    let mut jsonl = Vec::new();
    write_records_jsonl(&records, &mut jsonl)?;
    write_artifact(out, "verify_report.jsonl", &jsonl)?;

    let mut failures = 0;
    for b in &batteries {
        b.report();
        if !b.passed {
            failures += 1;
        }
    }
    if failures > 0 {
        bail!("{failures} of {} verification batteries failed", batteries.len());
    }
    println!("all {} verification batteries passed", batteries.len());
    Ok(())
}

/// Random lazy-resampling chains whose stationary x-marginal is the
/// designated target by construction: the hidden update keeps its state
/// with probability alpha and otherwise redraws from c(h | x), while the
/// visible update draws from the exact posterior of x given h.
fn gibbs_marginal_battery(rng: &mut Rng, trials: usize) -> Battery {
    let mut worst = 0.0f64;
    for trial in 0..trials {
        let nx = 2 + rng.next_below(3);
        let nh = 2 + rng.next_below(2);
        let rho = positive_pmf(rng, nx);
        let c: Vec<Vec<f64>> = (0..nx).map(|_| positive_pmf(rng, nh)).collect();
        let alpha = 0.1 + 0.8 * rng.next_f64();

        let mut f = Matrix::zeros(nx * nh, nh);
        for x in 0..nx {
            for h in 0..nh {
                for hp in 0..nh {
                    let lazy = if hp == h { alpha } else { 0.0 };
                    f.set(x * nh + h, hp, lazy + (1.0 - alpha) * c[x][hp]);
                }
            }
        }
        let mut g = Matrix::zeros(nh, nx);
        for h in 0..nh {
            let mut z = 0.0;
            for x in 0..nx {
                z += rho[x] * c[x][h];
            }
            for x in 0..nx {
                g.set(h, x, rho[x] * c[x][h] / z);
            }
        }
        let joint = match joint_chain_operator(&f, &g) {
            Ok(j) => j,
            Err(e) => {
                return Battery {
                    name: "gibbs-target-marginal",
                    passed: false,
                    detail: format!("trial {trial}: {e}"),
                }
            }
        };
        let tv = total_variation(&joint.x_marginal, &rho).expect("lengths match");
        worst = worst.max(tv);
    }
    Battery {
        name: "gibbs-target-marginal",
        passed: worst <= 1e-9,
        detail: format!("{trials} random constructions, worst marginal gap {worst:.2e}"),
    }
}

fn positive_pmf(rng: &mut Rng, n: usize) -> Vec<f64> {
    let mut p: Vec<f64> = (0..n).map(|_| 0.1 + rng.next_f64()).collect();
    let s: f64 = p.iter().sum();
    for v in &mut p {
        *v /= s;
    }
    p
}

fn random_ergodic(rng: &mut Rng, n: usize) -> ChainOperator {
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        let row = positive_pmf(rng, n);
        for (j, v) in row.into_iter().enumerate() {
            k.set(i, j, v);
        }
    }
    ChainOperator::new(k, "random-ergodic").expect("positive rows are stochastic")
}

/// Random ergodic chain pairs, alternating independent draws with small
/// perturbations; the stationary shift must obey the operator-norm bound
/// in every trial.
fn perturbation_battery(
    rng: &mut Rng,
    trials: usize,
    max_states: usize,
) -> (Battery, Vec<AnalysisRecord>) {
    let mut records = Vec::with_capacity(trials);
    let mut held = 0usize;
    for trial in 0..trials {
        let n = 2 + rng.next_below(max_states.saturating_sub(1).max(1));
        let k = random_ergodic(rng, n);
        let kt = if trial % 2 == 0 {
            random_ergodic(rng, n)
        } else {
            let mut m = k.matrix().clone();
            for i in 0..n {
                let mut row: Vec<f64> = (0..n).map(|j| m.get(i, j) + 0.01 * rng.next_f64()).collect();
                let s: f64 = row.iter().sum();
                for v in &mut row {
                    *v /= s;
                }
                for (j, v) in row.into_iter().enumerate() {
                    m.set(i, j, v);
                }
            }
            ChainOperator::new(m, "perturbed").expect("renormalized rows are stochastic")
        };
        match schweitzer_bound(&k, &kt) {
            Ok(r) => {
                if r.holds {
                    held += 1;
                }
                records.push(AnalysisRecord {
                    trial,
                    label: format!("pair-{n}-states"),
                    irreducible: None,
                    period: None,
                    lhs: Some(r.lhs),
                    rhs: Some(r.rhs),
                    holds: Some(r.holds),
                });
            }
            Err(e) => {
                records.push(AnalysisRecord {
                    trial,
                    label: format!("pair-{n}-states: {e}"),
                    irreducible: None,
                    period: None,
                    lhs: None,
                    rhs: None,
                    holds: Some(false),
                });
            }
        }
    }
    let battery = Battery {
        name: "perturbation-bound",
        passed: held == trials,
        detail: format!("{held}/{trials} trials hold"),
    };
    (battery, records)
}

/// Conditionals derived from a random joint are consistent, so the
/// random-scan chain must recover that joint exactly.
fn depnet_consistent_battery(rng: &mut Rng, trials: usize) -> Battery {
    let mut worst = 0.0f64;
    for trial in 0..trials {
        let joint = positive_pmf(rng, 4);
        let c0 = |x1: usize| joint[1 + 2 * x1] / (joint[2 * x1] + joint[1 + 2 * x1]);
        let c1 = |x0: usize| joint[x0 + 2] / (joint[x0] + joint[x0 + 2]);
        let spec = DepNetSpec {
            conditionals: vec![
                vec![c0(0), c0(0), c0(1), c0(1)],
                vec![c1(0), c1(1), c1(0), c1(1)],
            ],
            scan: ScanMode::RandomScan,
        };
        let result = depnet_operator(&spec).and_then(|op| op.stationary_exact());
        match result {
            Ok(pi) => {
                let tv = total_variation(&pi, &joint).expect("lengths match");
                worst = worst.max(tv);
            }
            Err(e) => {
                return Battery {
                    name: "depnet-consistent",
                    passed: false,
                    detail: format!("trial {trial}: {e}"),
                }
            }
        }
    }
    Battery {
        name: "depnet-consistent",
        passed: worst <= 1e-10,
        detail: format!("{trials} random joints recovered, worst gap {worst:.2e}"),
    }
}

/// A fixed pair of mutually inconsistent conditionals: no joint has them
/// both, yet the random-scan chain is still ergodic with a well-defined
/// stationary distribution (a genuine fixed point).
fn depnet_inconsistent_battery() -> Battery {
    let spec = DepNetSpec {
        conditionals: vec![vec![0.9, 0.9, 0.2, 0.2], vec![0.3, 0.8, 0.3, 0.8]],
        scan: ScanMode::RandomScan,
    };
    let name = "depnet-inconsistent-ergodic";
    let op = match depnet_operator(&spec) {
        Ok(op) => op,
        Err(e) => return Battery { name, passed: false, detail: e.to_string() },
    };
    let erg = ergodicity_check(&op);
    let pi = match op.stationary(1e-12) {
        Ok(pi) => pi,
        Err(e) => return Battery { name, passed: false, detail: e.to_string() },
    };
    let mut residual = 0.0f64;
    for j in 0..op.size() {
        let mut next = 0.0;
        for i in 0..op.size() {
            next += pi[i] * op.matrix().get(i, j);
        }
        residual = residual.max((next - pi[j]).abs());
    }
    Battery {
        name,
        passed: erg.ergodic && residual < 1e-9,
        detail: format!(
            "ergodic {}, period {}, fixed-point residual {residual:.2e}",
            erg.ergodic, erg.period
        ),
    }
}

/// Ordered scan with the sweep position in the state is periodic with
/// period exactly d, here d = 3.
fn depnet_ordered_battery() -> Battery {
    let t0 = [0.2, 0.7, 0.4, 0.9];
    let t1 = [0.6, 0.3, 0.8, 0.2];
    let t2 = [0.5, 0.1, 0.65, 0.35];
    let mut conditionals = vec![Vec::with_capacity(8); 3];
    for s in 0..8usize {
        conditionals[0].push(t0[(s >> 1) & 3]);
        conditionals[1].push(t1[(s & 1) | ((s >> 1) & 2)]);
        conditionals[2].push(t2[s & 3]);
    }
    let spec = DepNetSpec { conditionals, scan: ScanMode::OrderedScanWithIndex };
    let name = "depnet-ordered-period";
    match depnet_operator(&spec) {
        Ok(op) => {
            let erg = ergodicity_check(&op);
            Battery {
                name,
                passed: erg.irreducible && erg.period == 3,
                detail: format!("irreducible {}, detected period {}", erg.irreducible, erg.period),
            }
        }
        Err(e) => Battery { name, passed: false, detail: e.to_string() },
    }
}

/// Deliberately mislabeled chain: the two-state swap has period 2, so a
/// claim of ergodicity must be contradicted by the detector. This battery
/// is supposed to fail; it exists to prove the detector has teeth.
fn injected_battery() -> Battery {
    let swap = Matrix::from_vec(2, 2, vec![0.0, 1.0, 1.0, 0.0]).expect("2x2 literal");
    let op = ChainOperator::new(swap, "injected-ergodic").expect("valid stochastic matrix");
    let claimed_ergodic = true;
    let erg = ergodicity_check(&op);
    Battery {
        name: "injected-counterexample",
        passed: erg.ergodic == claimed_ergodic,
        detail: format!(
            "chain labeled ergodic has period {}; the mislabeling was {}",
            erg.period,
            if erg.ergodic == claimed_ergodic { "missed" } else { "caught" }
        ),
    }
}
