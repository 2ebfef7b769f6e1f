use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use evt_core::evidence::labelset_evidence;
use evt_core::nn::{Loss, Network, Optimizer};
use evt_core::pipeline::{joint_objective, train_evidence_ae, HeadTarget, TrainConfig};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn batch(rows: usize, cols: usize, seed: u64) -> Array2<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_simple_fn((rows, cols), || rng.random::<f32>())
}

/// One Adam step of the MNIST-sized autoencoder on a 256-row batch.
fn pretrain_step(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let model = Network::<f32>::autoencoder(&[784, 256, 256, 512, 10], &mut rng).unwrap();
    let x = batch(256, 784, 1);
    c.bench_function("autoencoder step 784-256-256-512-10, batch 256", |b| {
        b.iter_batched(
            || (model.clone(), Optimizer::adam(1e-3).unwrap()),
            |(mut m, mut opt)| {
                let (_, g) = m.loss_and_gradients(x.view(), &Loss::Mse { target: x.view() }).unwrap();
                opt.step(&mut m, &g).unwrap();
                m
            },
            BatchSize::LargeInput,
        )
    });
}

fn joint_step(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let model = Network::<f32>::autoencoder(&[784, 256, 256, 512, 10], &mut rng).unwrap();
    let head = Network::<f32>::uniform(&[10, 10], evt_core::nn::Activation::Softmax, None, &mut rng).unwrap();
    let x = batch(256, 784, 3);
    let mut codes = batch(256, 10, 4);
    codes.rows_mut().into_iter().for_each(|mut r| {
        let s = r.sum();
        r /= s;
    });
    let targets = vec![HeadTarget { rows: (0..256).collect(), codes }];
    c.bench_function("joint objective, one head, batch 256", |b| {
        b.iter(|| joint_objective(&model, std::slice::from_ref(&head), x.view(), &targets, 10.0).unwrap())
    });
}

fn evidence_ae(c: &mut Criterion) {
    let labels: Vec<u32> = (0..10_000).map(|i| (i * 7 % 10) as u32).collect();
    let source = labelset_evidence(&labels).unwrap();
    let config = TrainConfig { evidence_ae_iters: 100, ..TrainConfig::default() };
    c.bench_function("evidence autoencoder, W=10, 100 iterations", |b| {
        b.iter(|| train_evidence_ae(&source, &config, 0).unwrap())
    });
}

criterion_group!(benches, pretrain_step, joint_step, evidence_ae);
criterion_main!(benches);
