//! Sectioned `key = value` experiment configuration.
//!
//! ```text
//! [system]
//! omega1 = 20
//! omega2 = 19
//! omega3 = 0
//! Omega = 1
//!
//! [bath]
//! mode = 19, 1, 0        # freq, g_re, g_im (g_im optional)
//!
//! [run]
//! kT_over_w23 = 0.1, 1, 10, 100
//! t_max = 10
//! n_times = 400
//! tail_tol = 1e-4
//! block_budget = 10000000
//! threads = 0
//! ```
//!
//! `kT` (absolute temperatures) may replace `kT_over_w23`; giving both is an
//! error. Every key of `[run]` is optional. Unknown sections or keys are
//! rejected.

use std::fmt::Write as _;

use ini::{Ini, ParseOption};
use num_complex::Complex64;
use zeno_core::model::{BathSpec, Mode, SystemParams};
use zeno_core::thermal::DEFAULT_BLOCK_BUDGET;

pub const DEFAULT_N_TIMES: usize = 400;
pub const DEFAULT_TAIL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("config syntax error: {0}")]
    Syntax(String),
    #[error("config key `{key}`: {reason}")]
    Key { key: String, reason: String },
}

fn key_err(key: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Key {
        key: key.into(),
        reason: reason.into(),
    }
}

/// Temperatures either as k_BT/ω₂₃ ratios or as absolute k_BT values.
#[derive(Debug, Clone, PartialEq)]
pub enum Temperatures {
    RatioToW23(Vec<f64>),
    Absolute(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub temperatures: Option<Temperatures>,
    /// Defaults to 10/Ω (10 when Ω = 0).
    pub t_max: Option<f64>,
    pub n_times: usize,
    pub tail_tol: f64,
    pub block_budget: u64,
    /// 0 = automatic, 1 = sequential.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            temperatures: None,
            t_max: None,
            n_times: DEFAULT_N_TIMES,
            tail_tol: DEFAULT_TAIL_TOL,
            block_budget: DEFAULT_BLOCK_BUDGET,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemParams,
    pub bath: BathSpec,
    pub run: RunConfig,
}

/// A temperature together with its column label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledTemperature {
    pub label: String,
    pub ratio: Option<f64>,
    pub kt: f64,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let opt = ParseOption {
            enabled_quote: false,
            enabled_escape: false,
            ..ParseOption::default()
        };
        let ini = Ini::load_from_str_opt(text, opt).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        for name in ini.sections() {
            match name {
                None => {
                    if let Some((k, _)) = ini.general_section().iter().next() {
                        return Err(key_err(k, "keys must appear inside a [system], [bath] or [run] section"));
                    }
                }
                Some("system" | "bath" | "run") => {
                    if ini.section_all(name).count() > 1 {
                        return Err(key_err(format!("[{}]", name.unwrap_or_default()), "section appears twice"));
                    }
                }
                Some(other) => return Err(key_err(format!("[{other}]"), "unknown section")),
            }
        }

        let system = ini
            .section(Some("system"))
            .ok_or_else(|| key_err("[system]", "missing section"))?;
        let mut omegas = [None; 4];
        const SYS_KEYS: [&str; 4] = ["omega1", "omega2", "omega3", "Omega"];
        for (k, v) in system.iter() {
            let slot = SYS_KEYS
                .iter()
                .position(|&s| s == k)
                .ok_or_else(|| key_err(format!("system.{k}"), "unknown key"))?;
            if omegas[slot].is_some() {
                return Err(key_err(format!("system.{k}"), "given twice"));
            }
            omegas[slot] = Some(parse_f64(&format!("system.{k}"), v)?);
        }
        let mut vals = [0.0; 4];
        for (i, o) in omegas.iter().enumerate() {
            vals[i] = o.ok_or_else(|| key_err(format!("system.{}", SYS_KEYS[i]), "missing"))?;
        }
        let system = SystemParams::new(vals[0], vals[1], vals[2], vals[3])
            .map_err(|e| key_err("system", e.to_string()))?;

        let bath = ini
            .section(Some("bath"))
            .ok_or_else(|| key_err("[bath]", "missing section"))?;
        let mut modes = Vec::new();
        for (k, v) in bath.iter() {
            if k != "mode" {
                return Err(key_err(format!("bath.{k}"), "unknown key (expected `mode`)"));
            }
            let key = format!("bath.mode[{}]", modes.len());
            let parts = parse_list(&key, v)?;
            let (freq, g_re, g_im) = match parts[..] {
                [f, r] => (f, r, 0.0),
                [f, r, i] => (f, r, i),
                _ => return Err(key_err(key, "expected `freq, g_re[, g_im]`")),
            };
            modes.push(Mode::new(freq, Complex64::new(g_re, g_im)));
        }
        let bath = BathSpec::new(modes).map_err(|e| key_err("bath.mode", e.to_string()))?;

        let mut run = RunConfig::default();
        if let Some(section) = ini.section(Some("run")) {
            let mut seen: Vec<&str> = Vec::new();
            for (k, v) in section.iter() {
                let key = format!("run.{k}");
                if seen.contains(&k) {
                    return Err(key_err(key, "given twice"));
                }
                seen.push(k);
                match k {
                    "kT_over_w23" | "kT" => {
                        if run.temperatures.is_some() {
                            return Err(key_err(key, "kT_over_w23 and kT are mutually exclusive"));
                        }
                        let list = parse_list(&key, v)?;
                        if list.is_empty() {
                            return Err(key_err(key, "needs at least one value"));
                        }
                        if let Some(bad) = list.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
                            return Err(key_err(key, format!("temperature {bad} must be finite and nonnegative")));
                        }
                        run.temperatures = Some(if k == "kT" {
                            Temperatures::Absolute(list)
                        } else {
                            Temperatures::RatioToW23(list)
                        });
                    }
                    "t_max" => {
                        let t = parse_f64(&key, v)?;
                        if !(t.is_finite() && t >= 0.0) {
                            return Err(key_err(key, "must be finite and nonnegative"));
                        }
                        run.t_max = Some(t);
                    }
                    "n_times" => {
                        run.n_times = parse_uint(&key, v)? as usize;
                        if run.n_times == 0 {
                            return Err(key_err(key, "must be at least 1"));
                        }
                    }
                    "tail_tol" => {
                        run.tail_tol = parse_f64(&key, v)?;
                        if !(run.tail_tol > 0.0 && run.tail_tol < 1.0) {
                            return Err(key_err(key, "must lie in (0, 1)"));
                        }
                    }
                    "block_budget" => {
                        run.block_budget = parse_uint(&key, v)?;
                        if run.block_budget == 0 {
                            return Err(key_err(key, "must be at least 1"));
                        }
                    }
                    "threads" => run.threads = parse_uint(&key, v)? as usize,
                    _ => return Err(key_err(key, "unknown key")),
                }
            }
        }
        let cfg = Self { system, bath, run };
        if matches!(cfg.run.temperatures, Some(Temperatures::RatioToW23(_))) && cfg.system.omega23() <= 0.0 {
            return Err(key_err("run.kT_over_w23", "needs omega2 > omega3"));
        }
        Ok(cfg)
    }

    /// Serialise back to the text format; `parse(to_text())` is the identity.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let s = &self.system;
        let _ = writeln!(out, "[system]");
        let _ = writeln!(out, "omega1 = {}", s.omega1);
        let _ = writeln!(out, "omega2 = {}", s.omega2);
        let _ = writeln!(out, "omega3 = {}", s.omega3);
        let _ = writeln!(out, "Omega = {}", s.coupling);
        let _ = writeln!(out, "\n[bath]");
        for m in self.bath.modes() {
            let _ = writeln!(out, "mode = {}, {}, {}", m.freq, m.g.re, m.g.im);
        }
        let r = &self.run;
        let _ = writeln!(out, "\n[run]");
        match &r.temperatures {
            Some(Temperatures::RatioToW23(v)) => {
                let _ = writeln!(out, "kT_over_w23 = {}", join(v));
            }
            Some(Temperatures::Absolute(v)) => {
                let _ = writeln!(out, "kT = {}", join(v));
            }
            None => {}
        }
        if let Some(t) = r.t_max {
            let _ = writeln!(out, "t_max = {t}");
        }
        let _ = writeln!(out, "n_times = {}", r.n_times);
        let _ = writeln!(out, "tail_tol = {:e}", r.tail_tol);
        let _ = writeln!(out, "block_budget = {}", r.block_budget);
        let _ = writeln!(out, "threads = {}", r.threads);
        out
    }

    pub fn t_max(&self) -> f64 {
        self.run.t_max.unwrap_or(if self.system.coupling > 0.0 {
            10.0 / self.system.coupling
        } else {
            10.0
        })
    }

    /// Temperatures to simulate, or an error naming the missing key.
    pub fn temperatures(&self) -> Result<Vec<LabelledTemperature>, ConfigError> {
        let w23 = self.system.omega23();
        match &self.run.temperatures {
            None => Err(key_err("run.kT_over_w23", "missing (or give run.kT)")),
            Some(Temperatures::RatioToW23(v)) => Ok(v
                .iter()
                .map(|&r| LabelledTemperature {
                    label: format!("{r}"),
                    ratio: Some(r),
                    kt: r * w23,
                })
                .collect()),
            Some(Temperatures::Absolute(v)) => Ok(v
                .iter()
                .map(|&kt| {
                    let ratio = (w23 > 0.0).then(|| kt / w23);
                    LabelledTemperature {
                        label: ratio.map_or_else(|| format!("kT={kt}"), |r| format!("{r}")),
                        ratio,
                        kt,
                    }
                })
                .collect()),
        }
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| key_err(key, format!("`{}` is not a number", v.trim())))
}

fn parse_uint(key: &str, v: &str) -> Result<u64, ConfigError> {
    v.trim()
        .parse::<u64>()
        .map_err(|_| key_err(key, format!("`{}` is not a nonnegative integer", v.trim())))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_f64(key, s))
        .collect()
}

/// Named configurations reproducing the published figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    Fig1,
    Fig2,
}

impl Preset {
    pub fn config(self) -> ExperimentConfig {
        let system = SystemParams::new(20.0, 19.0, 0.0, 1.0).expect("static parameters");
        let w23 = system.omega23();
        let (modes, temps) = match self {
            Preset::Fig1 => (vec![Mode::real(w23, 1.0)], vec![0.1, 1.0, 10.0, 100.0]),
            Preset::Fig2 => (
                [1.0, 0.996, 0.992, 0.987]
                    .iter()
                    .map(|r| Mode::real(r * w23, 0.5))
                    .collect(),
                vec![0.1, 1.0, 5.0, 10.0],
            ),
        };
        let tail_tol = match self {
            Preset::Fig1 => 1e-4,
            Preset::Fig2 => 1e-3,
        };
        let block_budget = match self {
            Preset::Fig1 => DEFAULT_BLOCK_BUDGET,
            Preset::Fig2 => 100_000_000,
        };
        ExperimentConfig {
            system,
            bath: BathSpec::new(modes).expect("static bath"),
            run: RunConfig {
                temperatures: Some(Temperatures::RatioToW23(temps)),
                t_max: Some(10.0),
                n_times: DEFAULT_N_TIMES,
                tail_tol,
                block_budget,
                threads: 0,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip() {
        for p in [Preset::Fig1, Preset::Fig2] {
            let cfg = p.config();
            assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
        }
    }

    #[test]
    fn rejects_unknown_and_conflicting_keys() {
        let base = "[system]\nomega1=1\nomega2=1\nomega3=0\nOmega=1\n[bath]\nmode=1,1\n";
        assert!(ExperimentConfig::parse(base).is_ok());
        let e = ExperimentConfig::parse(&format!("{base}[run]\nbogus=1\n")).unwrap_err();
        assert!(e.to_string().contains("run.bogus"), "{e}");
        let e = ExperimentConfig::parse(&format!("{base}[run]\nkT=1\nkT_over_w23=2\n")).unwrap_err();
        assert!(e.to_string().contains("mutually exclusive"), "{e}");
        let e = ExperimentConfig::parse(&base.replace("Omega=1\n", "")).unwrap_err();
        assert!(e.to_string().contains("system.Omega"), "{e}");
        let e = ExperimentConfig::parse(&format!("{base}[extra]\na=1\n")).unwrap_err();
        assert!(e.to_string().contains("[extra]"), "{e}");
        let e = ExperimentConfig::parse(&base.replace("mode=1,1", "mode=1,x")).unwrap_err();
        assert!(e.to_string().contains("bath.mode[0]"), "{e}");
    }

    #[test]
    fn comments_and_defaults() {
        let text = "# fig\n[system]\nomega1 = 20 # one\nomega2=19\nomega3=0\nOmega=2\n[bath]\nmode = 19, 1, 0.5\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.bath.modes()[0].g.im, 0.5);
        assert_eq!(cfg.t_max(), 5.0);
        assert_eq!(cfg.run.n_times, DEFAULT_N_TIMES);
        assert!(cfg.temperatures().is_err());
    }
}
