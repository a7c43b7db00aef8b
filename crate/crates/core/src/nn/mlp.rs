//! Fully connected layers with ReLU, evaluated on row batches.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, Axis};

use crate::rng::CounterRng;

/// `y = x W + b` with `W` stored `in x out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    /// Weights and biases uniform in `±sqrt(1 / fan_in)`, weights row-major
    /// first, then biases.
    pub fn init(fan_in: usize, fan_out: usize, rng: &mut CounterRng) -> Dense {
        let k = (1.0 / fan_in as f64).sqrt();
        let weight = Array2::from_shape_fn((fan_in, fan_out), |_| rng.uniform(-k, k));
        let bias = Array1::from_shape_fn(fan_out, |_| rng.uniform(-k, k));
        Dense { weight, bias }
    }

    pub fn zeros(fan_in: usize, fan_out: usize) -> Dense {
        Dense {
            weight: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weight.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.ncols()
    }

    fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut y = x.dot(&self.weight);
        y += &self.bias;
        y
    }
}

/// A stack of dense layers. Every layer but the last is followed by ReLU;
/// the last one too when `relu_output` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub relu_output: bool,
}

/// Activations of a forward pass: `acts[0]` is the input and `acts[k + 1]`
/// the output of layer `k` after its activation.
#[derive(Debug, Clone)]
pub struct MlpCache {
    acts: Vec<Array2<f64>>,
}

impl MlpCache {
    pub fn output(&self) -> &Array2<f64> {
        self.acts.last().expect("cache holds the input at least")
    }
}

fn relu_in_place(x: &mut Array2<f64>) {
    x.mapv_inplace(|v| v.max(0.0));
}

impl Mlp {
    /// Widths `[in, h1, ..., out]`.
    pub fn init(widths: &[usize], relu_output: bool, rng: &mut CounterRng) -> Mlp {
        Mlp {
            layers: widths.windows(2).map(|w| Dense::init(w[0], w[1], rng)).collect(),
            relu_output,
        }
    }

    pub fn zeros_like(&self) -> Mlp {
        Mlp {
            layers: self.layers.iter().map(|l| Dense::zeros(l.fan_in(), l.fan_out())).collect(),
            relu_output: self.relu_output,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").fan_out()
    }

    fn has_relu(&self, k: usize) -> bool {
        k + 1 < self.layers.len() || self.relu_output
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut h = self.layers[0].apply(x);
        if self.has_relu(0) {
            relu_in_place(&mut h);
        }
        for (k, layer) in self.layers.iter().enumerate().skip(1) {
            h = layer.apply(&h);
            if self.has_relu(k) {
                relu_in_place(&mut h);
            }
        }
        h
    }

    pub fn forward_cached(&self, x: Array2<f64>) -> MlpCache {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x);
        for (k, layer) in self.layers.iter().enumerate() {
            let mut h = layer.apply(acts.last().expect("nonempty"));
            if self.has_relu(k) {
                relu_in_place(&mut h);
            }
            acts.push(h);
        }
        MlpCache { acts }
    }

    /// Accumulates parameter gradients into `grad` and returns the gradient
    /// with respect to the input.
    pub fn backward(&self, cache: &MlpCache, mut dy: Array2<f64>, grad: &mut Mlp) -> Array2<f64> {
        for k in (0..self.layers.len()).rev() {
            if self.has_relu(k) {
                ndarray::Zip::from(&mut dy)
                    .and(&cache.acts[k + 1])
                    .for_each(|d, &a| {
                        if a <= 0.0 {
                            *d = 0.0;
                        }
                    });
            }
            let g = &mut grad.layers[k];
            general_mat_mul(1.0, &cache.acts[k].t(), &dy, 1.0, &mut g.weight);
            g.bias += &dy.sum_axis(Axis(0));
            dy = dy.dot(&self.layers[k].weight.t());
        }
        dy
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn forward_matches_hand_computation() {
        let mlp = Mlp {
            layers: vec![
                Dense {
                    weight: array![[1.0, -1.0], [2.0, 0.5]],
                    bias: array![0.0, 0.25],
                },
                Dense {
                    weight: array![[1.0], [-2.0]],
                    bias: array![0.5],
                },
            ],
            relu_output: false,
        };
        // x = (1, 1): hidden (3, -0.25) -> relu (3, 0) -> 3 + 0.5
        let y = mlp.forward(&array![[1.0, 1.0]]);
        assert_eq!(y, array![[3.5]]);
        let cache = mlp.forward_cached(array![[1.0, 1.0]]);
        assert_eq!(cache.output(), &y);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = CounterRng::new(5);
        let mlp = Mlp::init(&[3, 4, 2], true, &mut rng);
        let x = Array2::from_shape_fn((5, 3), |_| rng.uniform(-1.0, 1.0));
        let loss = |m: &Mlp, x: &Array2<f64>| m.forward(x).iter().map(|v| 0.5 * v * v).sum::<f64>();
        let cache = mlp.forward_cached(x.clone());
        let mut grad = mlp.zeros_like();
        let dx = mlp.backward(&cache, cache.output().clone(), &mut grad);
        let h = 1e-6;
        for r in 0..3 {
            for c in 0..4 {
                let mut plus = mlp.clone();
                plus.layers[0].weight[[r, c]] += h;
                let mut minus = mlp.clone();
                minus.layers[0].weight[[r, c]] -= h;
                let fd = (loss(&plus, &x) - loss(&minus, &x)) / (2.0 * h);
                assert!((fd - grad.layers[0].weight[[r, c]]).abs() < 1e-6);
            }
        }
        for r in 0..5 {
            for c in 0..3 {
                let mut xp = x.clone();
                xp[[r, c]] += h;
                let mut xm = x.clone();
                xm[[r, c]] -= h;
                let fd = (loss(&mlp, &xp) - loss(&mlp, &xm)) / (2.0 * h);
                assert!((fd - dx[[r, c]]).abs() < 1e-6);
            }
        }
    }
}
