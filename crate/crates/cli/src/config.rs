//! Experiment parameters from a JSON file merged with command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use apartment::riemann::psurface::{MAX_RESOLUTION, MIN_RESOLUTION};

/// Every field is optional; unset fields take per-command defaults.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Ranks for hitchin-roundtrip (comma list).
    #[arg(long, global = true, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// P-surface mesh resolution.
    #[arg(long, global = true)]
    pub resolution: Option<usize>,
    #[arg(long, global = true)]
    pub fd_step: Option<f64>,
    /// Self-duality grid size.
    #[arg(long, global = true)]
    pub grid_n: Option<usize>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub r_list: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// q as "1", "z", "z+2" or ascending real coefficients.
    #[arg(long, global = true)]
    pub q: Option<String>,
    /// Inner and outer annulus radius.
    #[arg(long, global = true, value_delimiter = ',')]
    pub annulus: Option<Vec<f64>>,
    /// Bump centre x, y and radius.
    #[arg(long, global = true, value_delimiter = ',')]
    pub bump: Option<Vec<f64>>,
    /// Fourier modes for flat-stability.
    #[arg(long, global = true)]
    pub modes: Option<usize>,
    /// Torus grid size for flat-stability.
    #[arg(long, global = true)]
    pub torus_n: Option<usize>,
    /// Path samples per unit length for monodromy.
    #[arg(long, global = true)]
    pub density: Option<usize>,
    #[arg(long, global = true)]
    pub max_word: Option<usize>,
    /// Also write the solution grids (x, y, u).
    #[arg(long, global = true)]
    pub dump_fields: Option<bool>,
}

macro_rules! merge_fields {
    ($dst:ident, $src:ident; $($f:ident),*) => { $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )* };
}

impl Params {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merged(mut self, over: &Params) -> Self {
        merge_fields!(self, over; out, seed, n, trials, resolution, fd_step, grid_n, r_list, tol, q, annulus, bump,
            modes, torus_n, density, max_word, dump_fields);
        self
    }
}

pub fn positive(name: &str, v: f64) -> Result<f64, String> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{name} must be positive, got {v}"))
    }
}

pub fn resolution(v: usize) -> Result<usize, String> {
    if (MIN_RESOLUTION..=MAX_RESOLUTION).contains(&v) {
        Ok(v)
    } else {
        Err(format!("resolution {v} outside {MIN_RESOLUTION}..={MAX_RESOLUTION}"))
    }
}

pub fn r_list(v: &[f64], grid_n: usize) -> Result<Vec<f64>, String> {
    if v.len() < 3 || v.windows(2).any(|w| w[1] <= w[0]) || v[0] <= 0.0 {
        return Err("R list must be positive, increasing, with at least 3 entries".into());
    }
    let top = v[v.len() - 1];
    if (grid_n as f64) < 16.0 * top {
        return Err(format!("grid_n = {grid_n} is below the stability limit 16·R = {}", 16.0 * top));
    }
    Ok(v.to_vec())
}
