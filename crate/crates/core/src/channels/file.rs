//! JSON channel-spec files.
//!
//! Two shapes are accepted:
//!
//! ```json
//! {"name": "bitflip", "params": {}, "theta": 0.1}
//! {"d_in": 2, "d_out": 2, "choi": [[re, im], ...], "tangent": [[re, im], ...]}
//! ```
//!
//! Explicit matrices are row-major lists of `[re, im]` pairs. `tangent` is
//! optional. Explicit Choi entries round-trip bit-exactly.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Channel, ChannelFamily, ChannelTangent, ChoiMap};
use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix, HermitianMatrix};

/// Row-major `[re, im]` entries of a square matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChoiEntries(pub Vec<[f64; 2]>);

impl ChoiEntries {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let mut out = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                out.push([z.re, z.im]);
            }
        }
        Self(out)
    }

    pub fn to_square(&self) -> Option<ComplexMatrix> {
        let n = (self.0.len() as f64).sqrt().round() as usize;
        if n * n != self.0.len() || n == 0 {
            return None;
        }
        Some(ComplexMatrix::from_fn(n, n, |i, j| {
            let [re, im] = self.0[i * n + j];
            c(re, im)
        }))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelSpec {
    Catalog {
        name: String,
        #[serde(default, skip_serializing_if = "Value::is_null")]
        params: Value,
        theta: f64,
    },
    Explicit {
        d_in: usize,
        d_out: usize,
        choi: ChoiEntries,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tangent: Option<ChoiEntries>,
    },
}

/// A channel spec turned into numerical objects.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub family: Option<ChannelFamily>,
    pub theta: Option<f64>,
    pub channel: Channel,
    pub tangent: Option<ChannelTangent>,
}

impl ChannelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::param("spec", e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("channel spec serializes")
    }

    pub fn catalog(family: &ChannelFamily, theta: f64) -> Self {
        ChannelSpec::Catalog {
            name: family.name().to_string(),
            params: family.params_json(),
            theta,
        }
    }

    pub fn explicit(channel: &Channel, tangent: Option<&ChannelTangent>) -> Self {
        ChannelSpec::Explicit {
            d_in: channel.d_in(),
            d_out: channel.d_out(),
            choi: ChoiEntries::from_matrix(channel.choi().as_matrix()),
            tangent: tangent.map(|t| ChoiEntries::from_matrix(t.choi().as_matrix())),
        }
    }

    pub fn resolve(&self) -> Result<Resolved> {
        match self {
            ChannelSpec::Catalog { name, params, theta } => {
                let family = ChannelFamily::from_catalog(name, params)?;
                let (channel, tangent) = family.point(*theta)?;
                Ok(Resolved {
                    family: Some(family),
                    theta: Some(*theta),
                    channel,
                    tangent: Some(tangent),
                })
            }
            ChannelSpec::Explicit {
                d_in,
                d_out,
                choi,
                tangent,
            } => {
                let square = |field: &str, e: &ChoiEntries| -> Result<HermitianMatrix> {
                    let m = e
                        .to_square()
                        .ok_or_else(|| Error::param(field, "entry count is not a perfect square"))?;
                    HermitianMatrix::new(m).map_err(|err| Error::param(field, err.to_string()))
                };
                let channel = Channel::new(square("choi", choi)?, *d_in, *d_out)?;
                let tangent = tangent
                    .as_ref()
                    .map(|t| ChannelTangent::new(square("tangent", t)?, *d_in, *d_out))
                    .transpose()?;
                Ok(Resolved {
                    family: None,
                    theta: None,
                    channel,
                    tangent,
                })
            }
        }
    }
}
