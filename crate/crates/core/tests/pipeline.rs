use cvnn::autograd::optim::{Adam, Optimizer};
use cvnn::autograd::params::ParamStore;
use cvnn::autograd::tape::{Tape, Var};
use cvnn::kernels::ConvGeometry;
use cvnn::layers::norm::DEFAULT_EPS;
use cvnn::layers::serialize::{load_into, write_params};
use cvnn::layers::{Activation, Backend, ComplexConv1d, ComplexLayerNorm, ComplexLinear, Layer, PhaseQuantizer};
use cvnn::CTensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Net {
    store: ParamStore,
    conv: ComplexConv1d,
    norm: ComplexLayerNorm,
    pq: PhaseQuantizer,
    head: ComplexLinear,
}

impl Net {
    fn new(backend: Backend) -> Net {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut store = ParamStore::new();
        let conv = ComplexConv1d::new(&mut store, "conv", 3, 4, 3, ConvGeometry::one_d(1, 1, 1, 1), true, backend, &mut rng).unwrap();
        let norm = ComplexLayerNorm::new(&mut store, "norm", 4, 1, DEFAULT_EPS, backend).unwrap();
        let head = ComplexLinear::new(&mut store, "head", 10, 2, true, backend, &mut rng);
        Net { store, conv, norm, pq: PhaseQuantizer::new(64), head }
    }

    fn forward(&self, tape: &mut Tape, x: &CTensor) -> Var {
        let s = &self.store;
        let x = tape.input(x.clone());
        let h = self.conv.forward(tape, s, x).unwrap();
        let h = self.norm.forward(tape, s, h).unwrap();
        let h = tape.split_activation(h, Activation::Tanh).unwrap();
        let h = self.pq.forward(tape, s, h).unwrap();
        self.head.forward(tape, s, h).unwrap()
    }

    fn ids(&self) -> Vec<cvnn::autograd::params::ParamId> {
        [self.conv.params(), self.norm.params(), self.head.params()].concat()
    }
}

fn data() -> (CTensor, CTensor) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut c = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };
    let x = CTensor::new(c(2 * 3 * 10), c(2 * 3 * 10), [2, 3, 10]).unwrap();
    let y = CTensor::new(c(2 * 4 * 2), c(2 * 4 * 2), [2, 4, 2]).unwrap();
    (x, y)
}

fn train(backend: Backend, steps: usize) -> (Net, Vec<f64>) {
    let mut net = Net::new(backend);
    let (x, target) = data();
    let ids = net.ids();
    let mut opt = Adam::new(1e-2, (0.9, 0.999));
    let mut losses = Vec::new();
    for _ in 0..steps {
        let mut tape = Tape::new();
        let y = net.forward(&mut tape, &x);
        let t = tape.constant(target.clone());
        let d = tape.sub(y, t).unwrap();
        let a = tape.cabs(d).unwrap();
        let loss = tape.mean(a).unwrap();
        losses.push(tape.scalar(loss).unwrap());
        tape.backward_into(loss, &mut net.store).unwrap();
        opt.step(&mut net.store, &ids).unwrap();
    }
    (net, losses)
}

#[test]
fn backends_follow_the_same_training_trajectory() {
    let runs: Vec<(Net, Vec<f64>)> = Backend::ALL.iter().map(|&b| train(b, 30)).collect();
    let (first, losses) = (&runs[0].0, &runs[0].1);
    assert!(losses.last().unwrap() < &losses[0], "{losses:?}");
    for (net, l) in &runs[1..] {
        for (a, b) in losses.iter().zip(l) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        for id in first.ids() {
            let diff = first.store.value(id).max_abs_diff(net.store.value(id));
            assert!(diff < 1e-9, "{}: {diff}", first.store.get(id).name());
        }
    }
}

#[test]
fn trained_weights_reload_into_a_fresh_model_bit_exactly() {
    let (trained, _) = train(Backend::Block, 10);
    let mut buf = Vec::new();
    write_params(&trained.store, &mut buf).unwrap();

    // a fresh model on another backend picks up the weights by name
    let mut fresh = Net::new(Backend::Gauss);
    load_into(&mut fresh.store, buf.as_slice()).unwrap();
    let (x, _) = data();
    let out = |n: &Net| {
        let mut t = Tape::new();
        let y = n.forward(&mut t, &x);
        t.complex(y).unwrap().clone()
    };
    assert!(out(&trained).max_abs_diff(&out(&fresh)) < 1e-12);
    for id in trained.ids() {
        let (a, b) = (trained.store.value(id), fresh.store.value(id));
        assert!(a.re().iter().zip(b.re()).all(|(p, q)| p.to_bits() == q.to_bits()));
        assert!(a.im().iter().zip(b.im()).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}
