//! Flat `key = value` model configuration.
//!
//! ```text
//! # baseline and excitation
//! nu = 1
//! kernel.kind = explicit
//! kernel.weights = 0.3, 0.2
//! mark.kind = exponential
//! mark.beta = 2
//! ```
//!
//! `#` starts a comment. Every key may appear once, and keys that the chosen
//! `kind` does not use are rejected rather than silently ignored.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::format::{fmt_f64, parse_f64};
use crate::kernel::ExcitationKernel;
use crate::marks::MarkDistribution;
use crate::process::ProcessParams;

#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Explicit { weights: Vec<f64> },
    Geometric { a: f64, r: f64, len: usize },
    Power { a: f64, p: f64, len: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum MarkSpec {
    Constant { c: f64 },
    Exponential { beta: f64 },
    Gamma { shape: f64, scale: f64 },
    Discrete { values: Vec<f64>, probs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub nu: f64,
    pub kernel: KernelSpec,
    pub mark: MarkSpec,
}

const KNOWN_KEYS: &[&str] = &[
    "nu",
    "kernel.kind",
    "kernel.weights",
    "kernel.a",
    "kernel.r",
    "kernel.p",
    "kernel.K",
    "mark.kind",
    "mark.c",
    "mark.beta",
    "mark.shape",
    "mark.scale",
    "mark.values",
    "mark.probs",
];

/// Raw entries with the line each came from.
struct Entries<'a> {
    origin: &'a str,
    map: BTreeMap<&'a str, (usize, &'a str)>,
}

impl<'a> Entries<'a> {
    fn err(&self, location: String, message: String) -> Error {
        Error::Config {
            location: format!("{}{location}", self.origin),
            message,
        }
    }

    fn missing(&self, key: &str, why: &str) -> Error {
        self.err(String::new(), format!("missing key `{key}`{why}"))
    }

    fn raw(&self, key: &str) -> Option<(usize, &'a str)> {
        self.map.get(key).copied()
    }

    fn number(&self, key: &str, why: &str) -> Result<f64> {
        let (line, v) = self.raw(key).ok_or_else(|| self.missing(key, why))?;
        parse_f64(v).ok_or_else(|| {
            self.err(
                format!(":{line}"),
                format!("`{key}`: cannot parse `{v}` as a number"),
            )
        })
    }

    fn integer(&self, key: &str, why: &str) -> Result<usize> {
        let (line, v) = self.raw(key).ok_or_else(|| self.missing(key, why))?;
        v.parse().map_err(|_| {
            self.err(
                format!(":{line}"),
                format!("`{key}`: cannot parse `{v}` as a non-negative integer"),
            )
        })
    }

    fn list(&self, key: &str, why: &str) -> Result<Vec<f64>> {
        let (line, v) = self.raw(key).ok_or_else(|| self.missing(key, why))?;
        if v.is_empty() {
            return Ok(Vec::new());
        }
        v.split(',')
            .map(|item| {
                parse_f64(item).ok_or_else(|| {
                    self.err(
                        format!(":{line}"),
                        format!("`{key}`: cannot parse `{}` as a number", item.trim()),
                    )
                })
            })
            .collect()
    }

    /// Rejects keys under `prefix` that `kind` does not read.
    fn only(&self, prefix: &str, kind: &str, allowed: &[&str]) -> Result<()> {
        for (key, (line, _)) in &self.map {
            if let Some(rest) = key.strip_prefix(prefix) {
                if rest != "kind" && !allowed.contains(&rest) {
                    return Err(self.err(
                        format!(":{line}"),
                        format!("`{key}` is not used by {prefix}kind = {kind}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

impl RunConfig {
    /// Parses config text. `origin` (typically the file path) prefixes error
    /// locations.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut entries = Entries {
            origin,
            map: BTreeMap::new(),
        };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(entries.err(
                    format!(":{line}"),
                    format!("expected `key = value`, got `{content}`"),
                ));
            };
            let (key, value) = (key.trim(), value.trim());
            if !KNOWN_KEYS.contains(&key) {
                return Err(entries.err(format!(":{line}"), format!("unknown key `{key}`")));
            }
            if let Some((first, _)) = entries.map.insert(key, (line, value)) {
                return Err(entries.err(
                    format!(":{line}"),
                    format!("duplicate key `{key}` (first set on line {first})"),
                ));
            }
        }

        let nu = entries.number("nu", "")?;

        let (kline, kind) = entries
            .raw("kernel.kind")
            .ok_or_else(|| entries.missing("kernel.kind", " (explicit, geometric or power)"))?;
        let kernel = match kind {
            "explicit" => {
                entries.only("kernel.", kind, &["weights"])?;
                KernelSpec::Explicit {
                    weights: entries.list("kernel.weights", " for kernel.kind = explicit")?,
                }
            }
            "geometric" => {
                entries.only("kernel.", kind, &["a", "r", "K"])?;
                let why = " for kernel.kind = geometric";
                KernelSpec::Geometric {
                    a: entries.number("kernel.a", why)?,
                    r: entries.number("kernel.r", why)?,
                    len: entries.integer("kernel.K", why)?,
                }
            }
            "power" => {
                entries.only("kernel.", kind, &["a", "p", "K"])?;
                let why = " for kernel.kind = power";
                KernelSpec::Power {
                    a: entries.number("kernel.a", why)?,
                    p: entries.number("kernel.p", why)?,
                    len: entries.integer("kernel.K", why)?,
                }
            }
            other => {
                return Err(entries.err(
                    format!(":{kline}"),
                    format!("`kernel.kind`: unknown kind `{other}` (expected explicit, geometric or power)"),
                ))
            }
        };

        let (mline, kind) = entries
            .raw("mark.kind")
            .ok_or_else(|| entries.missing("mark.kind", " (constant, exponential, gamma or discrete)"))?;
        let mark = match kind {
            "constant" => {
                entries.only("mark.", kind, &["c"])?;
                MarkSpec::Constant {
                    c: entries.number("mark.c", " for mark.kind = constant")?,
                }
            }
            "exponential" => {
                entries.only("mark.", kind, &["beta"])?;
                MarkSpec::Exponential {
                    beta: entries.number("mark.beta", " for mark.kind = exponential")?,
                }
            }
            "gamma" => {
                entries.only("mark.", kind, &["shape", "scale"])?;
                let why = " for mark.kind = gamma";
                MarkSpec::Gamma {
                    shape: entries.number("mark.shape", why)?,
                    scale: entries.number("mark.scale", why)?,
                }
            }
            "discrete" => {
                entries.only("mark.", kind, &["values", "probs"])?;
                let why = " for mark.kind = discrete";
                MarkSpec::Discrete {
                    values: entries.list("mark.values", why)?,
                    probs: entries.list("mark.probs", why)?,
                }
            }
            other => return Err(entries.err(
                format!(":{mline}"),
                format!(
                    "`mark.kind`: unknown kind `{other}` (expected constant, exponential, gamma or discrete)"
                ),
            )),
        };

        let cfg = RunConfig { nu, kernel, mark };
        // surface construction errors (bad values, instability) at load time
        cfg.params()
            .map_err(|e| entries.err(String::new(), e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            location: path.display().to_string(),
            message: format!("cannot read config: {e}"),
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Builds validated process parameters.
    pub fn params(&self) -> Result<ProcessParams> {
        let kernel = match &self.kernel {
            KernelSpec::Explicit { weights } => ExcitationKernel::explicit(weights.clone())?,
            KernelSpec::Geometric { a, r, len } => ExcitationKernel::geometric(*a, *r, *len)?,
            KernelSpec::Power { a, p, len } => ExcitationKernel::power(*a, *p, *len)?,
        };
        let marks = match &self.mark {
            MarkSpec::Constant { c } => MarkDistribution::constant(*c)?,
            MarkSpec::Exponential { beta } => MarkDistribution::exponential(*beta)?,
            MarkSpec::Gamma { shape, scale } => MarkDistribution::gamma(*shape, *scale)?,
            MarkSpec::Discrete { values, probs } => {
                MarkDistribution::discrete(values.clone(), probs.clone())?
            }
        };
        ProcessParams::new(self.nu, kernel, marks)
    }

    /// Canonical text form; parses back to an identical config.
    pub fn dump(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(", ");
        let mut s = format!("nu = {}\n", fmt_f64(self.nu));
        match &self.kernel {
            KernelSpec::Explicit { weights } => {
                s += "kernel.kind = explicit\n";
                s += &format!("kernel.weights = {}\n", list(weights));
            }
            KernelSpec::Geometric { a, r, len } => {
                s += "kernel.kind = geometric\n";
                s += &format!(
                    "kernel.a = {}\nkernel.r = {}\nkernel.K = {len}\n",
                    fmt_f64(*a),
                    fmt_f64(*r)
                );
            }
            KernelSpec::Power { a, p, len } => {
                s += "kernel.kind = power\n";
                s += &format!(
                    "kernel.a = {}\nkernel.p = {}\nkernel.K = {len}\n",
                    fmt_f64(*a),
                    fmt_f64(*p)
                );
            }
        }
        match &self.mark {
            MarkSpec::Constant { c } => s += &format!("mark.kind = constant\nmark.c = {}\n", fmt_f64(*c)),
            MarkSpec::Exponential { beta } => {
                s += &format!("mark.kind = exponential\nmark.beta = {}\n", fmt_f64(*beta))
            }
            MarkSpec::Gamma { shape, scale } => {
                s += &format!(
                    "mark.kind = gamma\nmark.shape = {}\nmark.scale = {}\n",
                    fmt_f64(*shape),
                    fmt_f64(*scale)
                )
            }
            MarkSpec::Discrete { values, probs } => {
                s += &format!(
                    "mark.kind = discrete\nmark.values = {}\nmark.probs = {}\n",
                    list(values),
                    list(probs)
                )
            }
        }
        s
    }
}
