//! Run configuration: defaults, a flat `key = value` file format, and
//! validation shared by every subcommand.

use std::path::PathBuf;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::lattice::{OperatorSpec, WeightSpec};
use crate::propagator::QuadratureConfig;

/// Everything a run depends on. `q = 0` selects the free operator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub q: f64,
    pub kappa: f64,
    pub tau: f64,
    pub tmin: f64,
    pub tmax: f64,
    pub tsamples: usize,
    /// Explicit time list; overrides `tmin`/`tmax`/`tsamples` when set.
    pub times: Option<Vec<f64>>,
    pub xmax: usize,
    /// Truncation size for the matrix oracle and the bound-state residual.
    pub n: usize,
    pub out: PathBuf,
    pub seed: u64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_samples: usize,
    /// Largest site in the eigenfunction tables.
    pub table_xmax: usize,
    pub sigma: f64,
    pub panels_per_period: usize,
    pub filon_degree: usize,
    pub max_width: f64,
    pub tail_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let quad = QuadratureConfig::default();
        RunConfig {
            q: 1.0,
            kappa: 4.0,
            tau: -3.0,
            tmin: 10.0,
            tmax: 1000.0,
            tsamples: 17,
            times: None,
            xmax: 40,
            n: 500,
            out: PathBuf::from("out"),
            seed: 0,
            lambda_min: 1e-8,
            lambda_max: 50.0,
            lambda_samples: 121,
            table_xmax: 20,
            sigma: quad.sigma,
            panels_per_period: quad.panels_per_period,
            filon_degree: quad.filon_degree,
            max_width: quad.max_width,
            tail_tol: quad.tail_tol,
        }
    }
}

/// Keys accepted in config files and `--set`, in serialization order.
pub const KEYS: &[&str] = &[
    "q",
    "kappa",
    "tau",
    "tmin",
    "tmax",
    "tsamples",
    "times",
    "xmax",
    "n",
    "out",
    "seed",
    "lambda_min",
    "lambda_max",
    "lambda_samples",
    "table_xmax",
    "sigma",
    "panels_per_period",
    "filon_degree",
    "max_width",
    "tail_tol",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Invalid(format!("bad value for {key}: {value:?}")))
}

impl RunConfig {
    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "q" => self.q = parse(key, v)?,
            "kappa" => self.kappa = parse(key, v)?,
            "tau" => self.tau = parse(key, v)?,
            "tmin" => self.tmin = parse(key, v)?,
            "tmax" => self.tmax = parse(key, v)?,
            "tsamples" => self.tsamples = parse(key, v)?,
            "times" => {
                self.times = if v.is_empty() || v == "none" {
                    None
                } else {
                    Some(v.split(',').map(|s| parse(key, s.trim())).collect::<Result<_>>()?)
                }
            }
            "xmax" => self.xmax = parse(key, v)?,
            "n" | "N" => self.n = parse(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "seed" => self.seed = parse(key, v)?,
            "lambda_min" => self.lambda_min = parse(key, v)?,
            "lambda_max" => self.lambda_max = parse(key, v)?,
            "lambda_samples" => self.lambda_samples = parse(key, v)?,
            "table_xmax" => self.table_xmax = parse(key, v)?,
            "sigma" => self.sigma = parse(key, v)?,
            "panels_per_period" => self.panels_per_period = parse(key, v)?,
            "filon_degree" => self.filon_degree = parse(key, v)?,
            "max_width" => self.max_width = parse(key, v)?,
            "tail_tol" => self.tail_tol = parse(key, v)?,
            other => return Err(Error::Invalid(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    fn get(&self, key: &str) -> String {
        match key {
            "q" => fmt_f64(self.q),
            "kappa" => fmt_f64(self.kappa),
            "tau" => fmt_f64(self.tau),
            "tmin" => fmt_f64(self.tmin),
            "tmax" => fmt_f64(self.tmax),
            "tsamples" => self.tsamples.to_string(),
            "times" => match &self.times {
                None => "none".into(),
                Some(t) => t.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(","),
            },
            "xmax" => self.xmax.to_string(),
            "n" => self.n.to_string(),
            "out" => self.out.display().to_string(),
            "seed" => self.seed.to_string(),
            "lambda_min" => fmt_f64(self.lambda_min),
            "lambda_max" => fmt_f64(self.lambda_max),
            "lambda_samples" => self.lambda_samples.to_string(),
            "table_xmax" => self.table_xmax.to_string(),
            "sigma" => fmt_f64(self.sigma),
            "panels_per_period" => self.panels_per_period.to_string(),
            "filon_degree" => self.filon_degree.to_string(),
            "max_width" => fmt_f64(self.max_width),
            "tail_tol" => fmt_f64(self.tail_tol),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// Applies a `key = value` file on top of `self`. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn merge_kv(mut self, text: &str) -> Result<Self> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Invalid(format!("line {}: expected key = value", i + 1)))?;
            self.set(k, v)?;
        }
        Ok(self)
    }

    /// Every key, one `key = value` line each; `merge_kv` reads it back
    /// exactly.
    pub fn to_kv(&self) -> String {
        KEYS.iter().map(|k| format!("{k} = {}\n", self.get(k))).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Invalid(msg));
        if !(self.q >= 0.0 && self.q.is_finite()) {
            return bad(format!("q must be non-negative, got {}", self.q));
        }
        WeightSpec::new(self.kappa, self.tau)?;
        if !(self.tmin >= 0.0 && self.tmax >= self.tmin && self.tmax.is_finite()) {
            return bad(format!("need 0 <= tmin <= tmax, got {} and {}", self.tmin, self.tmax));
        }
        if self.tsamples == 0 {
            return bad("tsamples must be positive".into());
        }
        if let Some(t) = &self.times {
            if t.is_empty() || t.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return bad("times must be non-negative and finite".into());
            }
        }
        if self.xmax > 400 || self.table_xmax > 2000 {
            return bad("xmax at most 400 and table_xmax at most 2000".into());
        }
        if self.n < 2 {
            return bad(format!("N must be at least 2, got {}", self.n));
        }
        if !(self.lambda_min > 0.0 && self.lambda_max > self.lambda_min && self.lambda_samples >= 2) {
            return bad("need 0 < lambda_min < lambda_max and lambda_samples >= 2".into());
        }
        self.quadrature().validate()
    }

    pub fn quadrature(&self) -> QuadratureConfig {
        QuadratureConfig {
            upper: None,
            sigma: self.sigma,
            panels_per_period: self.panels_per_period,
            filon_degree: self.filon_degree,
            max_width: self.max_width,
            tail_tol: self.tail_tol,
        }
    }

    pub fn weight(&self) -> Result<WeightSpec> {
        WeightSpec::new(self.kappa, self.tau)
    }

    /// Free operator for `q = 0`, perturbed otherwise.
    pub fn operator(&self) -> Result<OperatorSpec> {
        if self.q == 0.0 {
            Ok(OperatorSpec::free(self.n))
        } else {
            OperatorSpec::perturbed(self.q, self.n)
        }
    }

    /// Explicit times, else `tsamples` points from `tmin` to `tmax`:
    /// logarithmic when `log` is set and `tmin > 0`, linear otherwise.
    pub fn time_grid(&self, log: bool) -> Vec<f64> {
        if let Some(t) = &self.times {
            return t.clone();
        }
        let n = self.tsamples;
        if n == 1 || self.tmax == self.tmin {
            return vec![self.tmin];
        }
        (0..n)
            .map(|i| {
                let f = i as f64 / (n - 1) as f64;
                if i == n - 1 {
                    self.tmax
                } else if log && self.tmin > 0.0 {
                    self.tmin * (self.tmax / self.tmin).powf(f)
                } else {
                    self.tmin + (self.tmax - self.tmin) * f
                }
            })
            .collect()
    }

    /// `lambda_samples` logarithmic points in `[lambda_min, lambda_max]`.
    pub fn lambda_grid(&self) -> Vec<f64> {
        let n = self.lambda_samples;
        let r = self.lambda_max / self.lambda_min;
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    self.lambda_max
                } else {
                    self.lambda_min * r.powf(i as f64 / (n - 1) as f64)
                }
            })
            .collect()
    }
}
