// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::RemoteConfig;
use crate::timing::{ArrivalProfile, DelayModel};

pub const MIN_WIDTH: usize = 2;
pub const MAX_WIDTH: usize = 256;

/// Where input arrival times come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ProfileSpec {
    Uniform,
    /// Lower half at 0, upper half at `offset` ns (default four node steps).
    LsbFirst {
        offset: Option<f64>,
    },
    /// Uniform in `[0, N/8 * step]` under the run seed.
    Random,
    File(PathBuf),
}

impl ProfileSpec {
    pub fn resolve(&self, width: usize, model: &DelayModel, seed: u64) -> Result<ArrivalProfile> {
        let p = match self {
            ProfileSpec::Uniform => ArrivalProfile::uniform(width, 0.0),
            ProfileSpec::LsbFirst { offset } => {
                ArrivalProfile::lsb_first(width, offset.unwrap_or(4.0 * model.step()))
            }
            ProfileSpec::Random => {
                ArrivalProfile::random(width, width as f64 / 8.0 * model.step(), seed)
            }
            ProfileSpec::File(path) => ArrivalProfile::parse(&std::fs::read_to_string(path)?)?,
        };
        p.ensure_width(width)?;
        Ok(p)
    }
}

impl fmt::Display for ProfileSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileSpec::Uniform => f.write_str("uniform"),
            ProfileSpec::LsbFirst { offset: None } => f.write_str("lsb-first"),
            ProfileSpec::LsbFirst { offset: Some(o) } => write!(f, "lsb-first:{o}"),
            ProfileSpec::Random => f.write_str("random"),
            ProfileSpec::File(p) => write!(f, "{}", p.display()),
        }
    }
}

impl FromStr for ProfileSpec {
    type Err = Error;

    /// `uniform`, `lsb-first[:offset]`, `random`, or a path to a profile file.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "uniform" => ProfileSpec::Uniform,
            "random" => ProfileSpec::Random,
            "lsb-first" => ProfileSpec::LsbFirst { offset: None },
            _ => match s.strip_prefix("lsb-first:") {
                Some(o) => ProfileSpec::LsbFirst {
                    offset: Some(o.parse().map_err(|e| {
                        Error::InvalidArgument(format!("bad lsb-first offset {o:?}: {e}"))
                    })?),
                },
                None => ProfileSpec::File(s.into()),
            },
        })
    }
}

impl TryFrom<String> for ProfileSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ProfileSpec> for String {
    fn from(p: ProfileSpec) -> String {
        p.to_string()
    }
}

/// Which policy drives the loops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PolicySpec {
    Greedy,
    Scripted(PathBuf),
    Remote,
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Greedy => f.write_str("greedy"),
            PolicySpec::Scripted(p) => write!(f, "scripted:{}", p.display()),
            PolicySpec::Remote => f.write_str("remote"),
        }
    }
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(PolicySpec::Greedy),
            "remote" => Ok(PolicySpec::Remote),
            _ => match s.strip_prefix("scripted:") {
                Some(p) if !p.is_empty() => Ok(PolicySpec::Scripted(p.into())),
                _ => Err(Error::InvalidArgument(format!(
                    "unknown policy {s:?} (expected greedy, scripted:<path> or remote)"
                ))),
            },
        }
    }
}

impl TryFrom<String> for PolicySpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PolicySpec> for String {
    fn from(p: PolicySpec) -> String {
        p.to_string()
    }
}

/// Settings read from a configuration file. Every field is optional so
/// command-line flags can fill or override them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub bits: Option<usize>,
    pub profile: Option<ProfileSpec>,
    pub seed: Option<u64>,
    pub target: Option<f64>,
    pub max_iters: Option<usize>,
    pub policy: Option<PolicySpec>,
    pub out: Option<PathBuf>,
    pub model: ModelOverrides,
    pub remote: Option<RemoteConfig>,
    pub eps_scale: Option<f64>,
    pub threshold: Option<usize>,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOverrides {
    pub k: Option<f64>,
    pub d: Option<f64>,
    pub lambda: Option<f64>,
    pub beta: Option<f64>,
}

impl ModelOverrides {
    /// Later values win.
    pub fn or(self, other: ModelOverrides) -> Self {
        Self {
            k: other.k.or(self.k),
            d: other.d.or(self.d),
            lambda: other.lambda.or(self.lambda),
            beta: other.beta.or(self.beta),
        }
    }

    /// Applies the overrides to the default model. A slope `k` re-derives the
    /// node delay; explicit `d` and `lambda` are applied afterwards.
    pub fn build(&self) -> Result<DelayModel> {
        let mut m = DelayModel::default();
        if let Some(k) = self.k {
            m = m.with_slope(k);
        }
        if let Some(d) = self.d {
            m.d = d;
            m.k = m.d + m.lambda;
        }
        if let Some(l) = self.lambda {
            m.lambda = l;
            m.k = m.d + m.lambda;
        }
        if let Some(b) = self.beta {
            m.beta = b;
        }
        m.validate()?;
        Ok(m)
    }
}

pub fn check_width(bits: usize) -> Result<()> {
    if (MIN_WIDTH..=MAX_WIDTH).contains(&bits) {
        Ok(())
    } else {
        Err(Error::InvalidWidth(bits))
    }
}
