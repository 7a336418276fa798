use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{jcd_dim, DEFAULT_FRAMES};

/// Width of the hidden fully connected layer in the classifier head.
pub const HIDDEN_UNITS: usize = 128;

/// Which input streams the network consumes. Disabled streams are removed
/// from the architecture entirely, which is how the single-feature ablations are built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Streams {
    pub jcd: bool,
    pub slow: bool,
    pub fast: bool,
}

impl Streams {
    pub const ALL: Streams = Streams {
        jcd: true,
        slow: true,
        fast: true,
    };
    pub const JCD_ONLY: Streams = Streams {
        jcd: true,
        slow: false,
        fast: false,
    };

    pub fn count(self) -> usize {
        self.jcd as usize + self.slow as usize + self.fast as usize
    }

    pub fn contains(self, s: Stream) -> bool {
        match s {
            Stream::Jcd => self.jcd,
            Stream::Slow => self.slow,
            Stream::Fast => self.fast,
        }
    }

    pub fn enabled(self) -> impl Iterator<Item = Stream> {
        Stream::ALL.into_iter().filter(move |&s| self.contains(s))
    }

    pub(crate) fn bits(self) -> u8 {
        self.jcd as u8 | (self.slow as u8) << 1 | (self.fast as u8) << 2
    }

    pub(crate) fn from_bits(bits: u8) -> Option<Self> {
        (bits != 0 && bits < 8).then_some(Streams {
            jcd: bits & 1 != 0,
            slow: bits & 2 != 0,
            fast: bits & 4 != 0,
        })
    }
}

impl Default for Streams {
    fn default() -> Self {
        Streams::ALL
    }
}

/// One of the three input feature streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Jcd,
    Slow,
    Fast,
}

impl Stream {
    pub const ALL: [Stream; 3] = [Stream::Jcd, Stream::Slow, Stream::Fast];

    /// Parameter-name prefix of the stream's embedding branch.
    pub fn prefix(self) -> &'static str {
        match self {
            Stream::Jcd => "embed_jcd",
            Stream::Slow => "embed_slow",
            Stream::Fast => "embed_fast",
        }
    }

    /// Full-length streams are max-pooled after embedding so all three meet at `K/2`.
    pub fn pooled(self) -> bool {
        !matches!(self, Stream::Fast)
    }
}

/// Shape-determining hyperparameters of a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Base channel width; the standard sizes are 64, 32 and 16.
    pub filters: usize,
    pub num_joints: usize,
    pub coord_dim: usize,
    /// Temporal length `K` sequences are resampled to.
    pub frames: usize,
    pub num_classes: usize,
    pub streams: Streams,
    pub leaky_slope: f64,
    /// Applied after global pooling in train mode only.
    pub dropout_rate: f64,
    pub bn_epsilon: f64,
    /// Weight of the new batch statistic in the running-stat update.
    pub bn_momentum: f64,
}

impl ModelConfig {
    pub fn new(num_joints: usize, coord_dim: usize, num_classes: usize) -> Self {
        Self {
            filters: 64,
            num_joints,
            coord_dim,
            frames: DEFAULT_FRAMES,
            num_classes,
            streams: Streams::ALL,
            leaky_slope: 0.1,
            dropout_rate: 0.5,
            bn_epsilon: 1e-3,
            bn_momentum: 0.1,
        }
    }

    /// SHREC'17 hands: 22 joints in 3D.
    pub fn shrec(num_classes: usize) -> Self {
        Self::new(22, 3, num_classes)
    }

    pub fn with_filters(mut self, filters: usize) -> Self {
        self.filters = filters;
        self
    }

    pub fn with_streams(mut self, streams: Streams) -> Self {
        self.streams = streams;
        self
    }

    pub fn with_frames(mut self, frames: usize) -> Self {
        self.frames = frames;
        self
    }

    pub fn jcd_dim(&self) -> usize {
        jcd_dim(self.num_joints)
    }

    pub fn motion_dim(&self) -> usize {
        self.num_joints * self.coord_dim
    }

    pub fn input_dim(&self, s: Stream) -> usize {
        match s {
            Stream::Jcd => self.jcd_dim(),
            Stream::Slow | Stream::Fast => self.motion_dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.filters == 0 {
            return fail("filters must be positive".into());
        }
        if self.num_joints < 2 {
            return fail(format!("need at least 2 joints, got {}", self.num_joints));
        }
        if self.coord_dim != 2 && self.coord_dim != 3 {
            return fail(format!("coord_dim must be 2 or 3, got {}", self.coord_dim));
        }
        if self.frames < 8 || self.frames % 8 != 0 {
            return fail(format!("frames must be a positive multiple of 8, got {}", self.frames));
        }
        if self.num_classes < 2 {
            return fail(format!("need at least 2 classes, got {}", self.num_classes));
        }
        if self.streams.count() == 0 {
            return fail("at least one input stream must be enabled".into());
        }
        if !(self.leaky_slope.is_finite() && self.leaky_slope >= 0.0) {
            return fail(format!("invalid leaky slope {}", self.leaky_slope));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return fail(format!("dropout rate must be in [0, 1), got {}", self.dropout_rate));
        }
        if !(self.bn_epsilon > 0.0 && self.bn_epsilon.is_finite()) {
            return fail(format!("invalid batch-norm epsilon {}", self.bn_epsilon));
        }
        if !(self.bn_momentum > 0.0 && self.bn_momentum <= 1.0) {
            return fail(format!("batch-norm momentum must be in (0, 1], got {}", self.bn_momentum));
        }
        Ok(())
    }
}
