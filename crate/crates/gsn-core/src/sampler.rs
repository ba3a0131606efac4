//! Free-running and clamped sampling from a trained chain, plus writers
//! for sample grids (binary PGM) and CSV dumps.
//!
//! Clamped runs hold a subset of visible coordinates at fixed values:
//! those coordinates are exempt from corruption, never resampled, and the
//! chain explores the conditional distribution over the free coordinates.
//! With an all-false mask the clamped run consumes the random stream
//! exactly like the free run, so the two produce identical trajectories
//! under the same seed.

use std::io::Write;
use std::path::Path;

use crate::gsn::{GsnModel, GsnState};
use crate::ndnum::{Matrix, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRun {
    /// Chain steps discarded before collection starts.
    pub burn_in: usize,
    pub num_samples: usize,
    /// Chain steps per collected sample (1 collects every step).
    pub thinning: usize,
    /// Collect the reconstruction distribution (probabilities or means)
    /// instead of the sampled visible.
    pub collect_mean_field: bool,
}

impl SampleRun {
    pub fn new(num_samples: usize) -> SampleRun {
        SampleRun { burn_in: 1000, num_samples, thinning: 1, collect_mean_field: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_samples == 0 {
            return Err(Error::Param("num_samples must be positive".into()));
        }
        if self.thinning == 0 {
            return Err(Error::Param("thinning must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SampleOutput {
    /// One collected sample per row.
    pub samples: Matrix,
    pub final_state: GsnState,
}

/// Runs a free chain from an uninformative start (fair coin flips for
/// binary visibles) and collects `num_samples` rows.
pub fn sample(model: &GsnModel, run: &SampleRun, rng: &mut Rng) -> Result<SampleOutput> {
    sample_impl(model, run, rng, None)
}

/// Like `sample`, but coordinates with a true mask entry are pinned to
/// the given values for the whole run.
pub fn sample_clamped(
    model: &GsnModel,
    run: &SampleRun,
    rng: &mut Rng,
    clamp_mask: &[bool],
    clamp_values: &[f64],
) -> Result<SampleOutput> {
    sample_impl(model, run, rng, Some((clamp_mask, clamp_values)))
}

fn sample_impl(
    model: &GsnModel,
    run: &SampleRun,
    rng: &mut Rng,
    clamp: Option<(&[bool], &[f64])>,
) -> Result<SampleOutput> {
    run.validate()?;
    let d = model.config().visible_size;
    if let Some((mask, values)) = clamp {
        if mask.len() != d || values.len() != d {
            return Err(Error::Shape(format!(
                "clamp mask/values must have {d} entries, got {} and {}",
                mask.len(),
                values.len()
            )));
        }
    }

    let mut x = model.random_visible_start(1, rng);
    if let Some((mask, values)) = clamp {
        for (j, (&keep, &v)) in mask.iter().zip(values).enumerate() {
            if keep {
                x.set(0, j, v);
            }
        }
    }
    let mut state = model.init_state(x)?;
    let mut step = 0usize;
    for _ in 0..run.burn_in {
        state = model.chain_step_clamped(&state, step, rng, clamp)?.0;
        step += 1;
    }

    let mut samples = Matrix::zeros(run.num_samples, d);
    for s in 0..run.num_samples {
        let mut dist = None;
        for _ in 0..run.thinning {
            let (next, dd) = model.chain_step_clamped(&state, step, rng, clamp)?;
            state = next;
            dist = Some(dd);
            step += 1;
        }
        let row = if run.collect_mean_field {
            dist.expect("thinning >= 1 guarantees a step ran")
        } else {
            state.x.clone()
        };
        for j in 0..d {
            samples.set(s, j, row.get(0, j));
        }
    }
    Ok(SampleOutput { samples, final_state: state })
}

/// Writes samples as a raw 8-bit PGM (P5) grid. Each row of `samples` is
/// one `img_rows x img_cols` image; images tile left to right with
/// `grid_cols` per grid row and a one-pixel black gap between tiles.
/// Values are clipped to [0, 1] and scaled to 0..255.
pub fn write_pgm_grid(
    samples: &Matrix,
    img_rows: usize,
    img_cols: usize,
    grid_cols: usize,
    path: &Path,
) -> Result<()> {
    if img_rows * img_cols != samples.cols() {
        return Err(Error::Shape(format!(
            "each sample has {} values, image shape {img_rows}x{img_cols} needs {}",
            samples.cols(),
            img_rows * img_cols
        )));
    }
    if grid_cols == 0 || samples.rows() == 0 {
        return Err(Error::Param("empty grid".into()));
    }
    let n = samples.rows();
    let grid_rows = n.div_ceil(grid_cols);
    let width = grid_cols * img_cols + (grid_cols - 1);
    let height = grid_rows * img_rows + (grid_rows - 1);
    let mut pixels = vec![0u8; width * height];
    for s in 0..n {
        let tile_r = s / grid_cols;
        let tile_c = s % grid_cols;
        let top = tile_r * (img_rows + 1);
        let left = tile_c * (img_cols + 1);
        for r in 0..img_rows {
            for c in 0..img_cols {
                let v = samples.get(s, r * img_cols + c).clamp(0.0, 1.0);
                pixels[(top + r) * width + (left + c)] = (v * 255.0).round() as u8;
            }
        }
    }
    let mut out = Vec::new();
    out.extend_from_slice(format!("P5\n{width} {height}\n255\n").as_bytes());
    out.extend_from_slice(&pixels);
    std::fs::write(path, out)?;
    Ok(())
}

/// Plain CSV, one sample per line, no header.
pub fn write_samples_csv(samples: &Matrix, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    for i in 0..samples.rows() {
        let row: Vec<String> = (0..samples.cols()).map(|j| samples.get(i, j).to_string()).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    std::fs::write(path, out)?;
    Ok(())
}
