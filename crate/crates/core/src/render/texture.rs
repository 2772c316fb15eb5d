use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geometry::Vec2;
use crate::rng::derive_seed;

/// Cloth surface pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Texture {
    #[default]
    Plain,
    Stripes,
    Dots,
    Weave,
}

impl Texture {
    pub const ALL: [Texture; 4] = [
        Texture::Plain,
        Texture::Stripes,
        Texture::Dots,
        Texture::Weave,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Texture::Plain => "plain",
            Texture::Stripes => "stripes",
            Texture::Dots => "dots",
            Texture::Weave => "weave",
        }
    }

    fn period_mm(self) -> f64 {
        match self {
            Texture::Plain => 1.0,
            Texture::Stripes => 0.9,
            Texture::Dots => 1.2,
            Texture::Weave => 0.9,
        }
    }
}

impl fmt::Display for Texture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Texture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Texture::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown texture `{s}`")))
    }
}

/// A texture with seeded orientation and phase, evaluated in `[-1, 1]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TextureField {
    kind: Texture,
    u_axis: Vec2,
    phase_u: f64,
    phase_v: f64,
    k: f64,
}

fn unit_from_seed(seed: u64, stream: u64) -> f64 {
    (derive_seed(seed, stream, 0) >> 11) as f64 / (1u64 << 53) as f64
}

impl TextureField {
    pub(crate) fn new(kind: Texture, seed: u64) -> Self {
        TextureField {
            kind,
            u_axis: Vec2::from_angle(PI * unit_from_seed(seed, 1)),
            phase_u: TAU * unit_from_seed(seed, 2),
            phase_v: TAU * unit_from_seed(seed, 3),
            k: TAU / kind.period_mm(),
        }
    }

    pub(crate) fn value(&self, p: Vec2) -> f64 {
        let u = self.k * self.u_axis.dot(p);
        let v = self.k * self.u_axis.perp().dot(p);
        match self.kind {
            Texture::Plain => 0.0,
            Texture::Stripes => (u + self.phase_u).sin(),
            Texture::Dots => (u + self.phase_u).cos() * (v + self.phase_v).cos(),
            Texture::Weave => 0.5 * ((u + self.phase_u).sin() + (v + self.phase_v).sin()),
        }
    }
}
