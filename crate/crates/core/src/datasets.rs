//! Synthetic point clouds and the Hilbert-curve reference ordering.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::vectors::VectorSet;

/// Default jitter applied to every coordinate of the 3D shapes.
pub const DEFAULT_NOISE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    /// Uniform over the upright regular pentagon inscribed in the unit circle.
    Pentagon2d,
    /// Two interleaved half circles, lifted to 3D.
    Moons3d { noise: f64 },
    /// Two concentric circles with the inner radius `factor`, lifted to 3D.
    Circles3d { noise: f64, factor: f64 },
    /// Archimedean spiral `r ∝ θ` with `turns` revolutions, scaled into the unit disk.
    Spiral3d { noise: f64, turns: f64 },
    /// Standard normal in `dim` dimensions.
    Gaussian { dim: usize },
}

impl Distribution {
    pub fn moons3d() -> Self {
        Self::Moons3d {
            noise: DEFAULT_NOISE,
        }
    }

    pub fn circles3d() -> Self {
        Self::Circles3d {
            noise: DEFAULT_NOISE,
            factor: 0.5,
        }
    }

    pub fn spiral3d() -> Self {
        Self::Spiral3d {
            noise: DEFAULT_NOISE,
            turns: 1.5,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Pentagon2d => "pentagon2d",
            Self::Moons3d { .. } => "moons3d",
            Self::Circles3d { .. } => "circles3d",
            Self::Spiral3d { .. } => "spiral3d",
            Self::Gaussian { .. } => "gaussian",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Pentagon2d => 2,
            Self::Moons3d { .. } | Self::Circles3d { .. } | Self::Spiral3d { .. } => 3,
            Self::Gaussian { dim } => *dim,
        }
    }

    /// Returns a copy with the jitter replaced; no-op for kinds without jitter.
    pub fn with_noise(self, noise: f64) -> Self {
        match self {
            Self::Moons3d { .. } => Self::Moons3d { noise },
            Self::Circles3d { factor, .. } => Self::Circles3d { noise, factor },
            Self::Spiral3d { turns, .. } => Self::Spiral3d { noise, turns },
            other => other,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |why: &str| Err(Error::InvalidKind(format!("{}: {why}", self.name())));
        match *self {
            Self::Pentagon2d => Ok(()),
            Self::Gaussian { dim: 0 } => bad("dimension must be positive"),
            Self::Gaussian { .. } => Ok(()),
            Self::Moons3d { noise }
            | Self::Circles3d { noise, .. }
            | Self::Spiral3d { noise, .. }
                if !(noise.is_finite() && noise >= 0.0) =>
            {
                bad("noise must be finite and non-negative")
            }
            Self::Circles3d { factor, .. } if !(factor.is_finite() && factor > 0.0) => {
                bad("factor must be finite and positive")
            }
            Self::Spiral3d { turns, .. } if !(turns.is_finite() && turns > 0.0) => {
                bad("turns must be finite and positive")
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Distribution {
    type Err = Error;

    /// Parses a kind name with default parameters; gaussian defaults to 2D.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pentagon2d" => Ok(Self::Pentagon2d),
            "moons3d" => Ok(Self::moons3d()),
            "circles3d" => Ok(Self::circles3d()),
            "spiral3d" => Ok(Self::spiral3d()),
            "gaussian" => Ok(Self::Gaussian { dim: 2 }),
            other => Err(Error::InvalidKind(other.to_string())),
        }
    }
}

/// Vertices of the upright regular pentagon with circumradius 1, counter-clockwise.
pub fn pentagon_vertices() -> [[f64; 2]; 5] {
    std::array::from_fn(|k| {
        let a = FRAC_PI_2 + k as f64 * TAU / 5.0;
        [a.cos(), a.sin()]
    })
}

/// True when `p` satisfies all five half-plane constraints of the pentagon.
pub fn in_pentagon(p: [f64; 2]) -> bool {
    let v = pentagon_vertices();
    (0..5).all(|k| {
        let a = v[k];
        let b = v[(k + 1) % 5];
        (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= 0.0
    })
}

pub fn generate(kind: Distribution, n: usize, seed: u64) -> Result<VectorSet> {
    if n == 0 {
        return Err(Error::EmptyRequest);
    }
    kind.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * kind.dim());
    match kind {
        Distribution::Pentagon2d => {
            while data.len() < 2 * n {
                let p = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
                if in_pentagon(p) {
                    data.extend_from_slice(&p);
                }
            }
        }
        Distribution::Gaussian { dim } => {
            data.extend((0..n * dim).map(|_| -> f64 { StandardNormal.sample(&mut rng) }));
        }
        Distribution::Moons3d { noise } => {
            for i in 0..n {
                let t = rng.random_range(0.0..=PI);
                let (x, y) = if i % 2 == 0 {
                    (t.cos(), t.sin())
                } else {
                    (1.0 - t.cos(), 0.5 - t.sin())
                };
                push_lifted(&mut data, x, y, noise, &mut rng);
            }
        }
        Distribution::Circles3d { noise, factor } => {
            for i in 0..n {
                let t = rng.random_range(0.0..TAU);
                let r = if i % 2 == 0 { 1.0 } else { factor };
                push_lifted(&mut data, r * t.cos(), r * t.sin(), noise, &mut rng);
            }
        }
        Distribution::Spiral3d { noise, turns } => {
            let span = turns * TAU;
            for _ in 0..n {
                // sqrt keeps the density per unit arc length roughly even
                let t = span * rng.random::<f64>().sqrt();
                let r = t / span;
                push_lifted(&mut data, r * t.cos(), r * t.sin(), noise, &mut rng);
            }
        }
    }
    VectorSet::new(kind.dim(), data)
}

fn push_lifted(data: &mut Vec<f64>, x: f64, y: f64, noise: f64, rng: &mut ChaCha8Rng) {
    if noise == 0.0 {
        data.extend_from_slice(&[x, y, 0.0]);
        return;
    }
    let jitter = Normal::new(0.0, noise).expect("noise validated");
    data.extend_from_slice(&[
        x + jitter.sample(rng),
        y + jitter.sample(rng),
        jitter.sample(rng),
    ]);
}

/// Corner points of the order-`order` Hilbert curve on the unit square, in curve order.
///
/// Cell `(x, y)` of the `2^order` grid maps to its center `((x + 0.5) / 2^order, ...)`, so
/// consecutive points are axis-aligned neighbors at distance `2^-order`.
pub fn hilbert_corners(order: u32) -> Result<VectorSet> {
    if !(1..=10).contains(&order) {
        return Err(Error::InvalidOrder(order));
    }
    let side = 1u64 << order;
    let cells = side * side;
    let mut data = Vec::with_capacity(2 * cells as usize);
    for d in 0..cells {
        let (x, y) = hilbert_d2xy(side, d);
        data.push((x as f64 + 0.5) / side as f64);
        data.push((y as f64 + 0.5) / side as f64);
    }
    VectorSet::new(2, data)
}

fn hilbert_d2xy(side: u64, d: u64) -> (u64, u64) {
    let (mut x, mut y) = (0, 0);
    let mut t = d;
    let mut s = 1;
    while s < side {
        let rx = 1 & (t / 2);
        let ry = 1 & (t ^ rx);
        if ry == 0 {
            if rx == 1 {
                x = s - 1 - x;
                y = s - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        x += s * rx;
        y += s * ry;
        t /= 4;
        s *= 2;
    }
    (x, y)
}
