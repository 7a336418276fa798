//! Parameter layout: the ordered list of named tensors a config implies.

use super::config::{ModelConfig, HIDDEN_UNITS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Init {
    Glorot { fan_in: usize, fan_out: usize },
    Zeros,
    Ones,
}

#[derive(Debug, Clone)]
pub(crate) struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub params: Vec<ParamSpec>,
    /// Batch-norm layer names and channel counts, in order.
    pub norms: Vec<(String, usize)>,
}

/// Convolutions feed a batch norm whose shift makes a conv bias redundant, so they have none.
pub(crate) const EMBED_LAYERS: [(&str, usize); 3] = [("conv1", 1), ("conv2", 3), ("conv3", 1)];
pub(crate) const BACKBONE_BLOCKS: usize = 3;

impl Layout {
    pub fn new(cfg: &ModelConfig) -> Self {
        let mut l = Layout {
            params: Vec::new(),
            norms: Vec::new(),
        };
        let f = cfg.filters;
        for s in cfg.streams.enabled() {
            let p = s.prefix();
            let widths = [(cfg.input_dim(s), 2 * f), (2 * f, f), (f, f)];
            for (i, ((conv, k), (cin, cout))) in EMBED_LAYERS.iter().zip(widths).enumerate() {
                l.conv(&format!("{p}.{conv}"), *k, cin, cout);
                l.norm(&format!("{p}.bn{}", i + 1), cout);
            }
        }
        let mut cin = f * cfg.streams.count();
        for block in 1..=BACKBONE_BLOCKS {
            let cout = f << block;
            for j in 1..=2 {
                l.conv(&format!("backbone.block{block}.conv{j}"), 3, cin, cout);
                l.norm(&format!("backbone.block{block}.bn{j}"), cout);
                cin = cout;
            }
        }
        l.dense("head.fc1", cin, HIDDEN_UNITS);
        l.dense("head.fc2", HIDDEN_UNITS, cfg.num_classes);
        l
    }

    fn conv(&mut self, name: &str, k: usize, cin: usize, cout: usize) {
        self.params.push(ParamSpec {
            name: format!("{name}.w"),
            shape: vec![k, cin, cout],
            init: Init::Glorot {
                fan_in: k * cin,
                fan_out: k * cout,
            },
        });
    }

    fn norm(&mut self, name: &str, ch: usize) {
        self.params.push(ParamSpec {
            name: format!("{name}.gamma"),
            shape: vec![ch],
            init: Init::Ones,
        });
        self.params.push(ParamSpec {
            name: format!("{name}.beta"),
            shape: vec![ch],
            init: Init::Zeros,
        });
        self.norms.push((name.to_string(), ch));
    }

    fn dense(&mut self, name: &str, cin: usize, cout: usize) {
        self.params.push(ParamSpec {
            name: format!("{name}.w"),
            shape: vec![cin, cout],
            init: Init::Glorot {
                fan_in: cin,
                fan_out: cout,
            },
        });
        self.params.push(ParamSpec {
            name: format!("{name}.b"),
            shape: vec![cout],
            init: Init::Zeros,
        });
    }
}

/// Total trainable scalars (running statistics excluded), in closed form.
pub fn param_count(cfg: &ModelConfig) -> usize {
    let f = cfg.filters;
    // conv(1, d -> 2f) + conv(3, 2f -> f) + conv(1, f -> f), each with a gamma/beta pair
    let embed = |d: usize| d * 2 * f + 3 * 2 * f * f + f * f + 2 * (2 * f + f + f);
    let embeds: usize = cfg.streams.enabled().map(|s| embed(cfg.input_dim(s))).sum();
    let mut backbone = 0;
    let mut cin = f * cfg.streams.count();
    for block in 1..=BACKBONE_BLOCKS {
        let cout = f << block;
        backbone += 3 * cin * cout + 3 * cout * cout + 4 * cout;
        cin = cout;
    }
    let head = (cin + 1) * HIDDEN_UNITS + (HIDDEN_UNITS + 1) * cfg.num_classes;
    embeds + backbone + head
}

