use std::fmt;
use std::str::FromStr;

use super::features::{CONSTRAINT_DIM, PAIR_VW_DIM, PAIR_WW_DIM, VARIABLE_DIM};
use super::mlp::Mlp;
use crate::rng::CounterRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arch {
    MpGnn,
    Fgnn2,
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arch::MpGnn => "mpgnn",
            Arch::Fgnn2 => "fgnn2",
        })
    }
}

impl FromStr for Arch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mpgnn" => Ok(Arch::MpGnn),
            "fgnn2" => Ok(Arch::Fgnn2),
            _ => Err(format!("unknown architecture `{s}` (expected `mpgnn` or `fgnn2`)")),
        }
    }
}

/// The four maps of one message-passing layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub f: Mlp,
    pub g: Mlp,
    pub p: Mlp,
    pub q: Mlp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnParams {
    pub arch: Arch,
    pub dim: usize,
    /// `p^0`: constraint (MP-GNN) or constraint-variable pair (2-FGNN) embedding.
    pub embed_v: Mlp,
    /// `q^0`: variable (MP-GNN) or variable pair (2-FGNN) embedding.
    pub embed_w: Mlp,
    pub layers: Vec<LayerParams>,
    /// `r`.
    pub readout: Mlp,
}

/// Seeded initialization. Each map is drawn in the order `p^0, q^0`, then
/// `f, g, p, q` per layer, then `r`.
///
/// `p^0`, `q^0` are one linear layer with ReLU; `f, g, p, q` are three
/// layers with ReLU after each; `r` has a ReLU hidden layer and a linear
/// scalar output. In the MP-GNN `f` and `g` act on one node embedding and are
/// scaled by the edge weight afterwards; in the 2-FGNN they act on a pair of
/// pair embeddings.
pub fn init_params(arch: Arch, dim: usize, num_layers: usize, seed: u64) -> GnnParams {
    assert!(dim >= 1 && num_layers >= 1, "dim and layer count must be positive");
    let d = dim;
    let mut rng = CounterRng::new(seed);
    let (v_in, w_in, msg_in, readout_in) = match arch {
        Arch::MpGnn => (CONSTRAINT_DIM, VARIABLE_DIM, d, 3 * d),
        Arch::Fgnn2 => (PAIR_VW_DIM, PAIR_WW_DIM, 2 * d, 2 * d),
    };
    let embed_v = Mlp::init(&[v_in, d], true, &mut rng);
    let embed_w = Mlp::init(&[w_in, d], true, &mut rng);
    let layers = (0..num_layers)
        .map(|_| LayerParams {
            f: Mlp::init(&[msg_in, d, d, d], true, &mut rng),
            g: Mlp::init(&[msg_in, d, d, d], true, &mut rng),
            p: Mlp::init(&[2 * d, d, d, d], true, &mut rng),
            q: Mlp::init(&[2 * d, d, d, d], true, &mut rng),
        })
        .collect();
    let readout = Mlp::init(&[readout_in, d, 1], false, &mut rng);
    GnnParams {
        arch,
        dim,
        embed_v,
        embed_w,
        layers,
        readout,
    }
}

impl GnnParams {
    pub fn zeros_like(&self) -> GnnParams {
        GnnParams {
            arch: self.arch,
            dim: self.dim,
            embed_v: self.embed_v.zeros_like(),
            embed_w: self.embed_w.zeros_like(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    f: l.f.zeros_like(),
                    g: l.g.zeros_like(),
                    p: l.p.zeros_like(),
                    q: l.q.zeros_like(),
                })
                .collect(),
            readout: self.readout.zeros_like(),
        }
    }

    fn mlps(&self) -> Vec<(String, &Mlp)> {
        let mut out = vec![("embed_v".to_string(), &self.embed_v), ("embed_w".to_string(), &self.embed_w)];
        for (l, layer) in self.layers.iter().enumerate() {
            out.push((format!("layer{l}.f"), &layer.f));
            out.push((format!("layer{l}.g"), &layer.g));
            out.push((format!("layer{l}.p"), &layer.p));
            out.push((format!("layer{l}.q"), &layer.q));
        }
        out.push(("readout".to_string(), &self.readout));
        out
    }

    fn mlps_mut(&mut self) -> Vec<&mut Mlp> {
        let mut out = vec![&mut self.embed_v, &mut self.embed_w];
        for layer in &mut self.layers {
            out.push(&mut layer.f);
            out.push(&mut layer.g);
            out.push(&mut layer.p);
            out.push(&mut layer.q);
        }
        out.push(&mut self.readout);
        out
    }

    /// Every tensor with its name and shape, in a fixed order.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out = Vec::new();
        for (name, mlp) in self.mlps() {
            for (k, layer) in mlp.layers.iter().enumerate() {
                out.push((
                    format!("{name}.{k}.weight"),
                    layer.weight.shape().to_vec(),
                    layer.weight.as_slice().expect("standard layout"),
                ));
                out.push((
                    format!("{name}.{k}.bias"),
                    layer.bias.shape().to_vec(),
                    layer.bias.as_slice().expect("standard layout"),
                ));
            }
        }
        out
    }

    /// Mutable views of every tensor, in the order of [`GnnParams::tensors`].
    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for mlp in self.mlps_mut() {
            for layer in &mut mlp.layers {
                out.push(layer.weight.as_slice_mut().expect("standard layout"));
                out.push(layer.bias.as_slice_mut().expect("standard layout"));
            }
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.mlps().iter().map(|(_, m)| m.num_params()).sum()
    }

    /// All parameters concatenated in tensor order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors().into_iter().flat_map(|(_, _, s)| s.iter().copied()).collect()
    }

    /// Overwrites all parameters from a flat vector in tensor order.
    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params(), "flat parameter length");
        let mut offset = 0;
        for s in self.slices_mut() {
            s.copy_from_slice(&flat[offset..offset + s.len()]);
            offset += s.len();
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn add_assign(&mut self, other: &GnnParams) {
        let theirs = other.to_flat();
        let mut offset = 0;
        for s in self.slices_mut() {
            for v in s.iter_mut() {
                *v += theirs[offset];
                offset += 1;
            }
        }
    }
}
