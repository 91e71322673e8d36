use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::ParamSet;
use crate::error::NnError;

/// Output squashing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Head {
    Sigmoid,
    Identity,
}

/// Shape of an encoder-plus-MLP network.
///
/// A sequence of `input`-wide vectors is encoded by an LSTM of width
/// `recurrent` (or, without one, by taking the last element); `extra` more
/// inputs are appended to the encoding before two rectified dense layers and
/// the output layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetSpec {
    pub input: usize,
    pub extra: usize,
    pub recurrent: Option<usize>,
    pub hidden: [usize; 2],
    pub output: usize,
    pub head: Head,
}

impl NetSpec {
    pub fn validate(&self) -> Result<(), NnError> {
        let widths = [self.input, self.hidden[0], self.hidden[1], self.output, self.recurrent.unwrap_or(1)];
        if widths.contains(&0) {
            return Err(NnError::Shape(format!("zero width in {self:?}")));
        }
        Ok(())
    }

    /// Width of the sequence encoding.
    pub fn encoded(&self) -> usize {
        self.recurrent.unwrap_or(self.input)
    }

    pub fn num_params(&self) -> usize {
        Layout::new(self).len
    }
}

/// Position of one weight matrix (or bias row) inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Block {
    fn len(&self) -> usize {
        self.rows * self.cols
    }

    fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }

    fn view<'a>(&self, p: &'a [f64]) -> ArrayView2<'a, f64> {
        ArrayView2::from_shape((self.rows, self.cols), &p[self.range()]).expect("block inside parameter vector")
    }

    fn view_mut<'a>(&self, p: &'a mut [f64]) -> ArrayViewMut2<'a, f64> {
        ArrayViewMut2::from_shape((self.rows, self.cols), &mut p[self.range()]).expect("block inside parameter vector")
    }

    fn row<'a>(&self, p: &'a [f64]) -> ArrayView1<'a, f64> {
        ArrayView1::from(&p[self.range()])
    }

    fn row_mut<'a>(&self, p: &'a mut [f64]) -> ArrayViewMut1<'a, f64> {
        ArrayViewMut1::from(&mut p[self.range()])
    }
}

/// Weights `w`, bias `b` of one layer; for the LSTM also the recurrent `u`.
/// LSTM gate columns are ordered input, forget, cell, output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerBlocks {
    pub w: Block,
    pub u: Option<Block>,
    pub b: Block,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub lstm: Option<LayerBlocks>,
    pub dense: [LayerBlocks; 3],
    pub len: usize,
}

impl Layout {
    pub fn new(spec: &NetSpec) -> Self {
        let mut offset = 0;
        let mut take = |rows: usize, cols: usize| {
            let b = Block { offset, rows, cols };
            offset += rows * cols;
            b
        };
        let lstm = spec.recurrent.map(|h| LayerBlocks {
            w: take(spec.input, 4 * h),
            u: Some(take(h, 4 * h)),
            b: take(1, 4 * h),
        });
        let mut dense_layer = |i: usize, o: usize| LayerBlocks {
            w: take(i, o),
            u: None,
            b: take(1, o),
        };
        let d0 = dense_layer(spec.encoded() + spec.extra, spec.hidden[0]);
        let d1 = dense_layer(spec.hidden[0], spec.hidden[1]);
        let d2 = dense_layer(spec.hidden[1], spec.output);
        Self {
            lstm,
            dense: [d0, d1, d2],
            len: offset,
        }
    }
}

/// Intermediate values kept by [`Network::forward_tape`] for the backward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    xs: Vec<Array2<f64>>,
    /// `h_0 .. h_T`, `h_0 = 0`.
    hs: Vec<Array2<f64>>,
    /// `c_0 .. c_T`, `c_0 = 0`.
    cs: Vec<Array2<f64>>,
    /// Activated gates per step, `B x 4H`.
    gates: Vec<Array2<f64>>,
    dense_in: Vec<Array2<f64>>,
    dense_pre: Vec<Array2<f64>>,
    pub output: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    spec: NetSpec,
    layout: Layout,
    pub params: ParamSet,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Network {
    /// Uniform fan-in initialization, zero biases, forget-gate bias 1.
    pub fn new<R: Rng + ?Sized>(spec: NetSpec, rng: &mut R) -> Result<Self, NnError> {
        let mut net = Self::zeros(spec)?;
        let p = net.params.as_mut_slice();
        let blocks: Vec<Block> = net
            .layout
            .lstm
            .iter()
            .flat_map(|l| [Some(l.w), l.u])
            .chain(net.layout.dense.iter().map(|d| Some(d.w)))
            .flatten()
            .collect();
        for b in blocks {
            let bound = 1.0 / (b.rows as f64).sqrt();
            for x in &mut p[b.range()] {
                *x = rng.random_range(-bound..bound);
            }
        }
        if let (Some(l), Some(h)) = (net.layout.lstm, spec.recurrent) {
            for x in &mut p[l.b.offset + h..l.b.offset + 2 * h] {
                *x = 1.0;
            }
        }
        Ok(net)
    }

    pub fn zeros(spec: NetSpec) -> Result<Self, NnError> {
        spec.validate()?;
        let layout = Layout::new(&spec);
        let params = ParamSet::zeros(layout.len);
        Ok(Self { spec, layout, params })
    }

    pub fn from_params(spec: NetSpec, params: ParamSet) -> Result<Self, NnError> {
        let mut net = Self::zeros(spec)?;
        if params.len() != net.layout.len {
            return Err(NnError::Shape(format!("expected {} parameters, got {}", net.layout.len, params.len())));
        }
        net.params = params;
        Ok(net)
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    fn check_seq(&self, seq: &[Array2<f64>]) -> Result<usize, NnError> {
        let first = seq.first().ok_or(NnError::EmptySequence)?;
        let batch = first.nrows();
        for x in seq {
            if x.dim() != (batch, self.spec.input) {
                return Err(NnError::Shape(format!(
                    "sequence element {:?}, expected ({batch}, {})",
                    x.dim(),
                    self.spec.input
                )));
            }
        }
        Ok(batch)
    }

    fn check_extra(&self, batch: usize, extra: Option<&Array2<f64>>) -> Result<(), NnError> {
        match (extra, self.spec.extra) {
            (None, 0) => Ok(()),
            (Some(e), w) if e.dim() == (batch, w) => Ok(()),
            (e, w) => Err(NnError::Shape(format!(
                "extra input {:?}, expected ({batch}, {w})",
                e.map(|a| a.dim())
            ))),
        }
    }

    /// Encodes each sequence of the batch into one vector.
    pub fn encode(&self, seq: &[Array2<f64>]) -> Result<Array2<f64>, NnError> {
        self.check_seq(seq)?;
        let mut tape = self.empty_tape(seq);
        self.run_lstm(seq, &mut tape);
        Ok(self.encoding(seq, &tape))
    }

    pub fn forward(&self, seq: &[Array2<f64>], extra: Option<&Array2<f64>>) -> Result<Array2<f64>, NnError> {
        Ok(self.forward_tape(seq, extra)?.output)
    }

    pub fn forward_tape(&self, seq: &[Array2<f64>], extra: Option<&Array2<f64>>) -> Result<Tape, NnError> {
        let batch = self.check_seq(seq)?;
        self.check_extra(batch, extra)?;
        let p = self.params.as_slice();
        let mut tape = self.empty_tape(seq);
        self.run_lstm(seq, &mut tape);
        let enc = self.encoding(seq, &tape);
        let mut x = match extra {
            Some(e) => ndarray::concatenate(Axis(1), &[enc.view(), e.view()]).expect("same batch size"),
            None => enc,
        };
        for (i, layer) in self.layout.dense.iter().enumerate() {
            let mut pre = Array2::zeros((batch, layer.w.cols));
            pre += &layer.b.row(p);
            general_mat_mul(1.0, &x, &layer.w.view(p), 1.0, &mut pre);
            let act = if i < 2 {
                pre.mapv(|v| v.max(0.0))
            } else {
                match self.spec.head {
                    Head::Sigmoid => pre.mapv(sigmoid),
                    Head::Identity => pre.clone(),
                }
            };
            tape.dense_in.push(x);
            tape.dense_pre.push(pre);
            x = act;
        }
        tape.output = x;
        Ok(tape)
    }

    fn empty_tape(&self, seq: &[Array2<f64>]) -> Tape {
        Tape {
            xs: Vec::new(),
            hs: Vec::new(),
            cs: Vec::new(),
            gates: Vec::new(),
            dense_in: Vec::with_capacity(3),
            dense_pre: Vec::with_capacity(3),
            output: Array2::zeros((seq.first().map_or(0, |x| x.nrows()), 0)),
        }
    }

    fn encoding(&self, seq: &[Array2<f64>], tape: &Tape) -> Array2<f64> {
        match self.spec.recurrent {
            Some(_) => tape.hs.last().expect("lstm ran").clone(),
            None => seq.last().expect("non-empty sequence").clone(),
        }
    }

    fn run_lstm(&self, seq: &[Array2<f64>], tape: &mut Tape) {
        let (Some(l), Some(h)) = (self.layout.lstm, self.spec.recurrent) else {
            return;
        };
        let p = self.params.as_slice();
        let batch = seq[0].nrows();
        let w = l.w.view(p);
        let u = l.u.expect("lstm has recurrent weights").view(p);
        let b = l.b.row(p);
        tape.hs.push(Array2::zeros((batch, h)));
        tape.cs.push(Array2::zeros((batch, h)));
        for x in seq {
            let h_prev = tape.hs.last().expect("initial state");
            let c_prev = tape.cs.last().expect("initial state");
            let mut z = Array2::zeros((batch, 4 * h));
            z += &b;
            general_mat_mul(1.0, x, &w, 1.0, &mut z);
            general_mat_mul(1.0, h_prev, &u, 1.0, &mut z);
            z.slice_mut(s![.., ..2 * h]).mapv_inplace(sigmoid);
            z.slice_mut(s![.., 2 * h..3 * h]).mapv_inplace(f64::tanh);
            z.slice_mut(s![.., 3 * h..]).mapv_inplace(sigmoid);
            let gi = z.slice(s![.., ..h]);
            let gf = z.slice(s![.., h..2 * h]);
            let gg = z.slice(s![.., 2 * h..3 * h]);
            let go = z.slice(s![.., 3 * h..]);
            let c = &gf * c_prev + &gi * &gg;
            let hn = &go * &c.mapv(f64::tanh);
            tape.xs.push(x.clone());
            tape.gates.push(z);
            tape.cs.push(c);
            tape.hs.push(hn);
        }
    }

    /// Gradients of `sum(d_out * output)` with respect to the parameters and
    /// the extra input.
    pub fn backward(&self, tape: &Tape, d_out: &Array2<f64>) -> Result<(ParamSet, Array2<f64>), NnError> {
        if d_out.dim() != tape.output.dim() {
            return Err(NnError::Shape(format!("output gradient {:?} vs output {:?}", d_out.dim(), tape.output.dim())));
        }
        let p = self.params.as_slice();
        let mut grads = ParamSet::zeros(self.layout.len);
        let g = grads.as_mut_slice();

        let mut d = match self.spec.head {
            Head::Sigmoid => d_out * &tape.output.mapv(|y| y * (1.0 - y)),
            Head::Identity => d_out.clone(),
        };
        for i in (0..3).rev() {
            let layer = self.layout.dense[i];
            if i < 2 {
                Zip::from(&mut d).and(&tape.dense_pre[i]).for_each(|dv, &pre| {
                    if pre <= 0.0 {
                        *dv = 0.0;
                    }
                });
            }
            general_mat_mul(1.0, &tape.dense_in[i].t(), &d, 1.0, &mut layer.w.view_mut(g));
            layer.b.row_mut(g).scaled_add(1.0, &d.sum_axis(Axis(0)));
            let mut d_in = Array2::zeros((d.nrows(), layer.w.rows));
            general_mat_mul(1.0, &d, &layer.w.view(p).t(), 0.0, &mut d_in);
            d = d_in;
        }
        let enc = self.spec.encoded();
        let d_extra = d.slice(s![.., enc..]).to_owned();
        if self.spec.recurrent.is_some() {
            self.lstm_backward(tape, d.slice(s![.., ..enc]).to_owned(), g);
        }
        Ok((grads, d_extra))
    }

    fn lstm_backward(&self, tape: &Tape, d_h_last: Array2<f64>, g: &mut [f64]) {
        let l = self.layout.lstm.expect("lstm layout");
        let h = self.spec.recurrent.expect("lstm width");
        let p = self.params.as_slice();
        let u_blk = l.u.expect("recurrent weights");
        let u = u_blk.view(p);
        let mut dh = d_h_last;
        let mut dc = Array2::<f64>::zeros(dh.dim());
        for t in (0..tape.xs.len()).rev() {
            let z = &tape.gates[t];
            let gi = z.slice(s![.., ..h]);
            let gf = z.slice(s![.., h..2 * h]);
            let gg = z.slice(s![.., 2 * h..3 * h]);
            let go = z.slice(s![.., 3 * h..]);
            let c = &tape.cs[t + 1];
            let c_prev = &tape.cs[t];
            let tc = c.mapv(f64::tanh);
            dc = dc + &dh * &go * &tc.mapv(|v| 1.0 - v * v);
            let mut dz = Array2::zeros(z.dim());
            dz.slice_mut(s![.., ..h]).assign(&(&dc * &gg * &gi.mapv(|v| v * (1.0 - v))));
            dz.slice_mut(s![.., h..2 * h]).assign(&(&dc * c_prev * &gf.mapv(|v| v * (1.0 - v))));
            dz.slice_mut(s![.., 2 * h..3 * h]).assign(&(&dc * &gi * &gg.mapv(|v| 1.0 - v * v)));
            dz.slice_mut(s![.., 3 * h..]).assign(&(&dh * &tc * &go.mapv(|v| v * (1.0 - v))));
            general_mat_mul(1.0, &tape.xs[t].t(), &dz, 1.0, &mut l.w.view_mut(g));
            general_mat_mul(1.0, &tape.hs[t].t(), &dz, 1.0, &mut u_blk.view_mut(g));
            l.b.row_mut(g).scaled_add(1.0, &dz.sum_axis(Axis(0)));
            dc = &dc * &gf;
            let mut dh_prev = Array2::zeros(dh.dim());
            general_mat_mul(1.0, &dz, &u.t(), 0.0, &mut dh_prev);
            dh = dh_prev;
        }
    }
}

/// Single-sample convenience: a row vector per sequence element.
pub fn batch_of_one(seq: &[Vec<f64>]) -> Vec<Array2<f64>> {
    seq.iter()
        .map(|x| Array2::from_shape_vec((1, x.len()), x.clone()).expect("row vector"))
        .collect()
}

/// Stacks per-sample rows into a `B x W` matrix.
pub fn stack_rows(rows: &[&[f64]]) -> Array2<f64> {
    let width = rows.first().map_or(0, |r| r.len());
    let mut out = Array2::zeros((rows.len(), width));
    for (mut dst, src) in out.rows_mut().into_iter().zip(rows) {
        dst.assign(&Array1::from(src.to_vec()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;

    fn spec(recurrent: Option<usize>, extra: usize, head: Head) -> NetSpec {
        NetSpec {
            input: 3,
            extra,
            recurrent,
            hidden: [5, 4],
            output: 2,
            head,
        }
    }

    fn random_seq(batch: usize, k: usize, w: usize, seed: u64) -> Vec<Array2<f64>> {
        let mut rng = SeedStream::new(seed).rng();
        (0..k)
            .map(|_| Array2::from_shape_fn((batch, w), |_| rng.random_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn zero_lstm_encodes_to_zero() {
        let net = Network::zeros(spec(Some(4), 0, Head::Sigmoid)).unwrap();
        let enc = net.encode(&random_seq(2, 3, 3, 1)).unwrap();
        assert!(enc.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_weights_sigmoid_head_outputs_half() {
        let net = Network::zeros(spec(Some(4), 0, Head::Sigmoid)).unwrap();
        let out = net.forward(&random_seq(3, 2, 3, 2), None).unwrap();
        assert!(out.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn identity_layers_pass_input_through() {
        let s = NetSpec {
            input: 3,
            extra: 0,
            recurrent: None,
            hidden: [3, 3],
            output: 3,
            head: Head::Identity,
        };
        let mut net = Network::zeros(s).unwrap();
        let layout = net.layout().clone();
        let p = net.params.as_mut_slice();
        for d in layout.dense {
            for i in 0..3 {
                p[d.w.offset + i * 3 + i] = 1.0;
            }
        }
        let x = Array2::from_shape_vec((1, 3), vec![0.2, 0.7, 1.5]).unwrap();
        let out = net.forward(std::slice::from_ref(&x), None).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn single_step_matches_hand_cell() {
        let s = NetSpec {
            input: 1,
            extra: 0,
            recurrent: Some(1),
            hidden: [1, 1],
            output: 1,
            head: Head::Identity,
        };
        let mut net = Network::zeros(s).unwrap();
        let l = net.layout().lstm.unwrap();
        let p = net.params.as_mut_slice();
        // w = [wi, wf, wg, wo]
        p[l.w.offset..l.w.offset + 4].copy_from_slice(&[0.5, -0.3, 0.8, 0.1]);
        let x = 2.0;
        let enc = net.encode(&[Array2::from_elem((1, 1), x)]).unwrap()[[0, 0]];
        let i = sigmoid(0.5 * x);
        let g = (0.8 * x).tanh();
        let o = sigmoid(0.1 * x);
        let expected = o * (i * g).tanh();
        assert!((enc - expected).abs() < 1e-15);
    }

    #[test]
    fn shape_errors() {
        let net = Network::zeros(spec(Some(4), 2, Head::Identity)).unwrap();
        assert!(matches!(net.forward(&[], None), Err(NnError::EmptySequence)));
        let seq = random_seq(2, 2, 3, 3);
        assert!(matches!(net.forward(&seq, None), Err(NnError::Shape(_))));
        let bad = random_seq(2, 1, 4, 3);
        assert!(matches!(net.forward(&bad, Some(&Array2::zeros((2, 2)))), Err(NnError::Shape(_))));
        assert!(net.forward(&seq, Some(&Array2::zeros((2, 2)))).is_ok());
        assert!(Network::zeros(NetSpec { output: 0, ..spec(None, 0, Head::Identity) }).is_err());
    }

    #[test]
    fn forward_is_pure_and_batch_consistent() {
        let mut rng = SeedStream::new(4).rng();
        let net = Network::new(spec(Some(4), 2, Head::Identity), &mut rng).unwrap();
        let seq = random_seq(3, 4, 3, 5);
        let extra = Array2::from_shape_fn((3, 2), |(i, j)| (i + j) as f64 * 0.1);
        let a = net.forward(&seq, Some(&extra)).unwrap();
        assert_eq!(a, net.forward(&seq, Some(&extra)).unwrap());
        for row in 0..3 {
            let one: Vec<Array2<f64>> = seq.iter().map(|x| x.slice(s![row..row + 1, ..]).to_owned()).collect();
            let e = extra.slice(s![row..row + 1, ..]).to_owned();
            let b = net.forward(&one, Some(&e)).unwrap();
            for c in 0..2 {
                assert!((a[[row, c]] - b[[0, c]]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn forget_bias_initialized_to_one() {
        let mut rng = SeedStream::new(6).rng();
        let net = Network::new(spec(Some(4), 0, Head::Sigmoid), &mut rng).unwrap();
        let l = net.layout().lstm.unwrap();
        let b = &net.params.as_slice()[l.b.offset..l.b.offset + 16];
        assert!(b[..4].iter().all(|&v| v == 0.0));
        assert!(b[4..8].iter().all(|&v| v == 1.0));
        assert!(b[8..].iter().all(|&v| v == 0.0));
    }

    fn loss(net: &Network, seq: &[Array2<f64>], extra: Option<&Array2<f64>>, r: &Array2<f64>) -> f64 {
        (&net.forward(seq, extra).unwrap() * r).sum()
    }

    #[test]
    fn gradients_match_finite_differences() {
        for (seed, recurrent, head) in [(1, Some(3), Head::Identity), (2, Some(2), Head::Sigmoid), (3, None, Head::Sigmoid)] {
            let mut rng = SeedStream::new(seed).rng();
            let mut net = Network::zeros(spec(recurrent, 2, head)).unwrap();
            // biases are randomized too, so no rectifier sits exactly on its kink
            for v in net.params.as_mut_slice() {
                *v = rng.random_range(-0.8..0.8);
            }
            let seq = random_seq(3, 4, 3, seed + 10);
            let extra = Array2::from_shape_fn((3, 2), |_| rng.random_range(-1.0..1.0));
            let r = Array2::from_shape_fn((3, 2), |_| rng.random_range(-1.0..1.0));
            let tape = net.forward_tape(&seq, Some(&extra)).unwrap();
            let (grads, d_extra) = net.backward(&tape, &r).unwrap();
            let h = 1e-5;
            for i in 0..net.params.len() {
                let orig = net.params.as_slice()[i];
                net.params.as_mut_slice()[i] = orig + h;
                let up = loss(&net, &seq, Some(&extra), &r);
                net.params.as_mut_slice()[i] = orig - h;
                let down = loss(&net, &seq, Some(&extra), &r);
                net.params.as_mut_slice()[i] = orig;
                let numeric = (up - down) / (2.0 * h);
                let analytic = grads.as_slice()[i];
                let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6);
                assert!(rel < 1e-4, "param {i}: analytic {analytic}, numeric {numeric}");
            }
            for idx in 0..6 {
                let (b, c) = (idx / 2, idx % 2);
                let mut e = extra.clone();
                e[[b, c]] += h;
                let up = loss(&net, &seq, Some(&e), &r);
                e[[b, c]] -= 2.0 * h;
                let down = loss(&net, &seq, Some(&e), &r);
                let numeric = (up - down) / (2.0 * h);
                assert!((numeric - d_extra[[b, c]]).abs() < 1e-8, "extra {b},{c}");
            }
        }
    }
}
