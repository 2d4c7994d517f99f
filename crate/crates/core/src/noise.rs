//! Replayable Laplace noise.
//!
//! Every draw is a pure function of a [`NoiseKey`]: the master seed, a domain
//! tag and an index are mixed into a 64-bit word, turned into a uniform on the
//! open interval (0, 1) and pushed through the Laplace inverse CDF. Draw values
//! therefore do not depend on iteration order or thread count, and two runs on
//! adjacent graphs with the same seed share every draw they have in common.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::PrivacyParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseTag {
    Degree,
    Light,
    Agreement,
    Sample,
}

impl NoiseTag {
    fn salt(self) -> u64 {
        match self {
            NoiseTag::Degree => 0x243f_6a88_85a3_08d3,
            NoiseTag::Light => 0x1319_8a2e_0370_7344,
            NoiseTag::Agreement => 0xa409_3822_299f_31d0,
            NoiseTag::Sample => 0x082e_fa98_ec4e_6c89,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NoiseTag::Degree => "degree",
            NoiseTag::Light => "light",
            NoiseTag::Agreement => "agreement",
            NoiseTag::Sample => "sample",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KeyIndex {
    Vertex(usize),
    /// Unordered pair, stored as `(min, max)`.
    Pair(usize, usize),
    /// `(level, vertex)`.
    Level(usize, usize),
}

impl KeyIndex {
    pub fn pair(u: usize, v: usize) -> Self {
        KeyIndex::Pair(u.min(v), u.max(v))
    }

    fn words(self) -> (u64, u64, u64) {
        match self {
            KeyIndex::Vertex(v) => (1, v as u64, 0),
            KeyIndex::Pair(a, b) => (2, a as u64, b as u64),
            KeyIndex::Level(l, v) => (3, l as u64, v as u64),
        }
    }
}

impl fmt::Display for KeyIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KeyIndex::Vertex(v) => write!(f, "{v}"),
            KeyIndex::Pair(a, b) => write!(f, "{a}-{b}"),
            KeyIndex::Level(l, v) => write!(f, "{l}:{v}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NoiseKey {
    pub seed: u64,
    pub tag: NoiseTag,
    pub index: KeyIndex,
}

impl NoiseKey {
    pub fn new(seed: u64, tag: NoiseTag, index: KeyIndex) -> Self {
        Self { seed, tag, index }
    }

    pub fn vertex(seed: u64, tag: NoiseTag, v: usize) -> Self {
        Self::new(seed, tag, KeyIndex::Vertex(v))
    }

    pub fn pair(seed: u64, tag: NoiseTag, u: usize, v: usize) -> Self {
        Self::new(seed, tag, KeyIndex::pair(u, v))
    }

    /// Stable 64-bit mix of all key components.
    pub fn mix(&self) -> u64 {
        let (kind, a, b) = self.index.words();
        let mut h = splitmix64(self.seed ^ self.tag.salt());
        h = splitmix64(h ^ kind.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        h = splitmix64(h ^ a);
        splitmix64(h ^ b.rotate_left(29))
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&self) -> f64 {
        ((self.mix() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent master seed, e.g. one per audit trial.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(stream)) ^ index)
}

/// Mean-zero Laplace draw with parameter `b`, by inverse CDF.
pub fn laplace(key: &NoiseKey, b: f64) -> Result<f64> {
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::Domain(format!(
            "Laplace scale must be positive, got {b}"
        )));
    }
    Ok(laplace_inverse_cdf(key.uniform(), b))
}

pub fn laplace_inverse_cdf(u: f64, b: f64) -> f64 {
    if u < 0.5 {
        b * (2.0 * u).ln()
    } else {
        -b * (2.0 * (1.0 - u)).ln()
    }
}

/// Laplace CDF, used by tests and the auditor.
pub fn laplace_cdf(x: f64, b: f64) -> f64 {
    if x < 0.0 {
        0.5 * (x / b).exp()
    } else {
        1.0 - 0.5 * (-x / b).exp()
    }
}

/// Draw with the testing multiplier applied: `Lap(s·b)`, and exactly zero
/// when `s = 0`. Returns `(effective scale, draw)`.
pub fn scaled_draw(key: &NoiseKey, base_scale: f64, multiplier: f64) -> (f64, f64) {
    let scale = base_scale * multiplier;
    if scale == 0.0 {
        return (0.0, 0.0);
    }
    (scale, laplace_inverse_cdf(key.uniform(), scale))
}

/// Base Laplace parameter for the agreement noise of pair `(u, v)`, before the
/// testing multiplier: `max(1, γ·sqrt(max(5, d_u, d_v)·ln(1/δ_agr)) / ε_agr)`.
pub fn agreement_base_scale(d_u: usize, d_v: usize, p: &PrivacyParams) -> f64 {
    let dmax = d_u.max(d_v).max(5) as f64;
    let inner = p.gamma * (dmax * (1.0 / p.delta_agr).ln()).sqrt() / p.eps_agr;
    inner.max(1.0)
}

/// Agreement noise scale with the testing multiplier `s` applied.
pub fn agreement_scale(d_u: usize, d_v: usize, p: &PrivacyParams) -> f64 {
    agreement_base_scale(d_u, d_v, p) * p.noise_multiplier
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Draw {
    pub scale: f64,
    pub value: f64,
}

/// Every noise draw a run consumed, keyed for replay.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct NoiseLedger {
    pub seed: u64,
    pub degree: BTreeMap<usize, Draw>,
    pub light: BTreeMap<usize, Draw>,
    #[serde(serialize_with = "pairs_as_list")]
    pub agreement: BTreeMap<(usize, usize), Draw>,
}

#[derive(Serialize)]
struct PairDraw {
    u: usize,
    v: usize,
    scale: f64,
    value: f64,
}

fn pairs_as_list<S: serde::Serializer>(
    map: &BTreeMap<(usize, usize), Draw>,
    ser: S,
) -> Result<S::Ok, S::Error> {
    ser.collect_seq(map.iter().map(|(&(u, v), d)| PairDraw {
        u,
        v,
        scale: d.scale,
        value: d.value,
    }))
}

impl NoiseLedger {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    /// Iterates all entries as `(key, draw)` in a canonical order.
    pub fn entries(&self) -> impl Iterator<Item = (NoiseKey, Draw)> + '_ {
        let seed = self.seed;
        let deg = self
            .degree
            .iter()
            .map(move |(&v, &d)| (NoiseKey::vertex(seed, NoiseTag::Degree, v), d));
        let light = self
            .light
            .iter()
            .map(move |(&v, &d)| (NoiseKey::vertex(seed, NoiseTag::Light, v), d));
        let agr = self
            .agreement
            .iter()
            .map(move |(&(u, v), &d)| (NoiseKey::pair(seed, NoiseTag::Agreement, u, v), d));
        deg.chain(light).chain(agr)
    }

    /// Re-derives every recorded draw from its key.
    pub fn verify(&self) -> Result<()> {
        for (key, draw) in self.entries() {
            let (_, again) = scaled_draw(&key, draw.scale, 1.0);
            if again.to_bits() != draw.value.to_bits() {
                return Err(Error::Contract(format!(
                    "ledger entry {}/{} does not replay: recorded {}, derived {}",
                    key.tag.as_str(),
                    key.index,
                    draw.value,
                    again
                )));
            }
        }
        Ok(())
    }

    /// CSV with columns `tag,index,scale,draw`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tag,index,scale,draw\n");
        for (key, draw) in self.entries() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                key.tag.as_str(),
                key.index,
                draw.scale,
                draw.value
            ));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.degree.len() + self.light.len() + self.agreement.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
