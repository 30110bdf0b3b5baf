//! Priors on the smoothing parameter `eta`, selectable by name.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A (possibly unnormalized) log density on `eta > 0`.
pub trait EtaPrior: Send + Sync + fmt::Debug {
    /// Spec string that reconstructs this prior through [`EtaPriorRegistry`].
    fn spec(&self) -> String;
    fn ln_density(&self, eta: f64) -> f64;
}

/// `pi(eta) = 1 / (1 + eta)^2`: median 1, uniform on `eta / (1 + eta)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Pareto;

impl EtaPrior for Pareto {
    fn spec(&self) -> String {
        "pareto".into()
    }

    fn ln_density(&self, eta: f64) -> f64 {
        -2.0 * eta.ln_1p()
    }
}

/// Exponential prior with the given rate.
#[derive(Debug, Clone, Copy)]
pub struct Exponential {
    pub rate: f64,
}

impl EtaPrior for Exponential {
    fn spec(&self) -> String {
        format!("exponential:{}", self.rate)
    }

    fn ln_density(&self, eta: f64) -> f64 {
        -self.rate * eta
    }
}

/// Improper flat prior. Its posterior tail is too heavy for the
/// ratio-of-uniforms envelope, so sampling with it fails.
#[derive(Debug, Clone, Copy, Default)]
pub struct Flat;

impl EtaPrior for Flat {
    fn spec(&self) -> String {
        "flat".into()
    }

    fn ln_density(&self, _eta: f64) -> f64 {
        0.0
    }
}

/// Caller-supplied black-box log density.
#[derive(Clone)]
pub struct UserLogDensity {
    label: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl UserLogDensity {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        UserLogDensity {
            label: label.into(),
            f: Arc::new(f),
        }
    }
}

impl fmt::Debug for UserLogDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UserLogDensity").field("label", &self.label).finish()
    }
}

impl EtaPrior for UserLogDensity {
    fn spec(&self) -> String {
        format!("user:{}", self.label)
    }

    fn ln_density(&self, eta: f64) -> f64 {
        (self.f)(eta)
    }
}

type PriorCtor = fn(&[f64]) -> Result<Arc<dyn EtaPrior>>;

/// Name -> constructor table. Spec strings look like `name` or
/// `name:arg1:arg2`.
pub struct EtaPriorRegistry {
    ctors: BTreeMap<&'static str, PriorCtor>,
}

impl Default for EtaPriorRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl EtaPriorRegistry {
    pub fn empty() -> Self {
        EtaPriorRegistry {
            ctors: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("pareto", |args| {
            no_args("pareto", args)?;
            Ok(Arc::new(Pareto))
        });
        r.register("flat", |args| {
            no_args("flat", args)?;
            Ok(Arc::new(Flat))
        });
        r.register("exponential", |args| match args {
            [rate] if *rate > 0.0 && rate.is_finite() => Ok(Arc::new(Exponential { rate: *rate })),
            _ => Err(Error::InvalidHyperparameter {
                name: "exponential rate",
                value: args.first().copied().unwrap_or(f64::NAN),
            }),
        });
        r
    }

    pub fn register(&mut self, name: &'static str, ctor: PriorCtor) {
        self.ctors.insert(name, ctor);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.ctors.keys().copied()
    }

    pub fn create(&self, spec: &str) -> Result<Arc<dyn EtaPrior>> {
        let mut parts = spec.split(':');
        let name = parts.next().unwrap_or_default().trim();
        let ctor = self.ctors.get(name).ok_or_else(|| Error::UnknownStrategy {
            kind: "eta prior",
            name: name.to_string(),
        })?;
        let args = parts
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| Error::UnknownStrategy {
                    kind: "eta prior argument",
                    name: s.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ctor(&args)
    }
}

fn no_args(name: &'static str, args: &[f64]) -> Result<()> {
    match args.first() {
        None => Ok(()),
        Some(&value) => Err(Error::InvalidHyperparameter { name, value }),
    }
}
