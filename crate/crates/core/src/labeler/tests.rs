use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn tiny(d: usize, heads: usize, layers: usize) -> LabelerConfig {
    LabelerConfig {
        embedding_dim: d,
        num_heads: heads,
        num_layers: layers,
        ..LabelerConfig::toy()
    }
}

fn unit(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Every parameter drawn uniformly, so no block is an identity map.
fn randomized(config: &LabelerConfig, seed: u64) -> LabelerModel {
    let mut m = LabelerModel::zeros(config);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (t, _) in m.tensors_mut() {
        t.iter_mut().for_each(|v| *v = rng.random_range(-0.6..0.6));
    }
    m
}

fn table(d: usize, n: usize, seed: u64) -> EmbeddingTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    EmbeddingTable::new((0..n).map(|k| (format!("phrase{k}"), unit(&mut rng, d)))).unwrap()
}

fn objects(d: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| unit(&mut rng, d)).collect()
}

// ---- straight-line reference encoder --------------------------------------

type Mat = Vec<Vec<f64>>;

fn affine(x: &Mat, l: &Linear) -> Mat {
    x.iter()
        .map(|row| {
            (0..l.out_dim)
                .map(|o| {
                    let b = l.bias.as_ref().map_or(0.0, |b| b[o]);
                    b + (0..l.in_dim).map(|i| row[i] * l.weight[i * l.out_dim + o]).sum::<f64>()
                })
                .collect()
        })
        .collect()
}

fn norm_rows(x: &Mat, ln: &LayerNorm) -> Mat {
    x.iter()
        .map(|row| {
            let n = row.len() as f64;
            let mu = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
            row.iter()
                .enumerate()
                .map(|(c, v)| ln.gain[c] * (v - mu) / (var + 1e-5).sqrt() + ln.bias[c])
                .collect()
        })
        .collect()
}

fn reference_forward(model: &LabelerModel, objs: &[Vec<f64>]) -> Vec<f64> {
    let d = model.config.embedding_dim;
    let heads = model.config.num_heads;
    let dh = d / heads;
    let mut x: Mat = std::iter::once(model.cls.clone()).chain(objs.iter().cloned()).collect();
    let n = x.len();
    for layer in &model.layers {
        let a = norm_rows(&x, &layer.ln_attn);
        let (q, k, v) = (affine(&a, &layer.query), affine(&a, &layer.key), affine(&a, &layer.value));
        let mut concat = vec![vec![0.0; d]; n];
        for h in 0..heads {
            let cols = h * dh..(h + 1) * dh;
            for i in 0..n {
                let scores: Vec<f64> = (0..n)
                    .map(|j| cols.clone().map(|c| q[i][c] * k[j][c]).sum::<f64>() / (dh as f64).sqrt())
                    .collect();
                let z: f64 = scores.iter().map(|s| s.exp()).sum();
                for j in 0..n {
                    let p = scores[j].exp() / z;
                    for c in cols.clone() {
                        concat[i][c] += p * v[j][c];
                    }
                }
            }
        }
        let o = affine(&concat, &layer.attn_out);
        for i in 0..n {
            for c in 0..d {
                x[i][c] += o[i][c];
            }
        }
        let b = norm_rows(&x, &layer.ln_ff);
        let hidden: Mat = affine(&b, &layer.ff_in)
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|u| 0.5 * u * (1.0 + ((2.0 / std::f64::consts::PI).sqrt() * (u + 0.044715 * u.powi(3))).tanh()))
                    .collect()
            })
            .collect();
        let f = affine(&hidden, &layer.ff_out);
        for i in 0..n {
            for c in 0..d {
                x[i][c] += f[i][c];
            }
        }
    }
    norm_rows(&x[..1].to_vec(), &model.ln_final).remove(0)
}

// ---- model construction ----------------------------------------------------

#[test]
fn init_is_seed_deterministic() {
    let c = LabelerConfig::toy();
    assert_eq!(init_model(&c, 9).unwrap(), init_model(&c, 9).unwrap());
    assert_ne!(init_model(&c, 9).unwrap().flat(), init_model(&c, 10).unwrap().flat());
}

#[test]
fn toy_parameter_count_matches_closed_form() {
    let c = LabelerConfig::toy();
    let (d, l) = (c.embedding_dim, c.num_layers);
    // cls + per layer (4 DxD projections + biases, D->4D->D feed-forward, 2 norms) + final norm
    let per_layer = 4 * (d * d + d) + (d * 4 * d + 4 * d) + (4 * d * d + d) + 2 * 2 * d;
    let expected = d + l * per_layer + 2 * d;
    assert_eq!(init_model(&c, 0).unwrap().parameter_count(), expected);
    assert_eq!(expected, 25504);

    let logits = LabelerConfig {
        head_mode: HeadMode::Logits,
        num_classes: 8,
        ..c
    };
    assert_eq!(init_model(&logits, 0).unwrap().parameter_count(), expected + d * 8);
}

#[test]
fn heads_must_divide_dim() {
    assert!(init_model(&tiny(10, 4, 1), 0).is_err());
}

#[test]
fn zero_projections_pass_cls_through() {
    let c = tiny(8, 2, 2);
    let mut m = init_model(&c, 3).unwrap();
    for layer in &mut m.layers {
        for l in [&mut layer.query, &mut layer.key, &mut layer.value, &mut layer.attn_out, &mut layer.ff_in, &mut layer.ff_out] {
            l.weight.iter_mut().for_each(|w| *w = 0.0);
            l.bias.iter_mut().flatten().for_each(|w| *w = 0.0);
        }
    }
    let e = m.forward(&objects(8, 3, 1)).unwrap();
    let mu = m.cls.iter().sum::<f64>() / 8.0;
    let var = m.cls.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / 8.0;
    for (a, c) in e.iter().zip(&m.cls) {
        assert!((a - (c - mu) / (var + 1e-5).sqrt()).abs() < 1e-12);
    }
}

#[test]
fn forward_matches_reference_implementation() {
    for seed in 0..5 {
        let m = randomized(&LabelerConfig::toy(), seed);
        let objs = objects(32, 2 + seed as usize, 100 + seed);
        let fast = m.forward(&objs).unwrap();
        let slow = reference_forward(&m, &objs);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }
}

#[test]
fn forward_rejects_bad_input() {
    let m = init_model(&tiny(8, 2, 1), 0).unwrap();
    assert!(m.forward(&[]).is_err());
    assert!(matches!(m.forward(&[vec![1.0; 7]]), Err(Error::Dimension(_))));
}

#[test]
fn dropout_only_in_train_mode() {
    let c = LabelerConfig { dropout: 0.5, ..tiny(8, 2, 1) };
    let m = randomized(&c, 1);
    let objs = objects(8, 3, 2);
    assert_eq!(m.forward(&objs).unwrap(), m.forward(&objs).unwrap());
    let mut r1 = ChaCha8Rng::seed_from_u64(1);
    let mut r2 = ChaCha8Rng::seed_from_u64(2);
    assert_ne!(m.forward_train(&objs, &mut r1).unwrap(), m.forward_train(&objs, &mut r2).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn object_order_does_not_matter(seed in 0u64..1000, n in 2usize..6, rot in 1usize..5) {
        let m = randomized(&tiny(8, 2, 2), seed);
        let objs = objects(8, n, seed + 1);
        let mut permuted = objs.clone();
        permuted.rotate_left(rot % n);
        permuted.reverse();
        let a = m.forward(&objs).unwrap();
        let b = m.forward(&permuted).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-5);
        }
    }

    #[test]
    fn loss_nonnegative_and_monotone_in_positive_similarity(
        sims in prop::collection::vec(-0.45f64..0.45, 2..5),
        pos in 0usize..5,
        bump in 0.01f64..0.2,
    ) {
        // Orthonormal table plus one spare axis: cosine with t_j is exactly e_j.
        let v = sims.len();
        let pos = pos % v;
        let d = v + 1;
        let tbl = EmbeddingTable::new((0..v).map(|j| {
            let mut t = vec![0.0; d];
            t[j] = 1.0;
            (format!("p{j}"), t)
        }))
        .unwrap();
        let embed = |s: &[f64]| {
            let mut e = s.to_vec();
            e.push((1.0 - s.iter().map(|x| x * x).sum::<f64>()).sqrt());
            e
        };
        let base = nt_xent_loss(&embed(&sims), &tbl, &format!("p{pos}"), 0.5).unwrap();
        let mut higher = sims.clone();
        higher[pos] += bump;
        let raised = nt_xent_loss(&embed(&higher), &tbl, &format!("p{pos}"), 0.5).unwrap();
        prop_assert!(base >= 0.0);
        prop_assert!(raised < base);
    }

    #[test]
    fn decision_ignores_positive_rescaling(seed in 0u64..500, s in 0.01f64..100.0) {
        let tbl = table(6, 5, seed);
        let e = objects(6, 1, seed + 7).remove(0);
        let scaled: Vec<f64> = e.iter().map(|v| v * s).collect();
        prop_assert_eq!(best_phrase(&e, &tbl).0, best_phrase(&scaled, &tbl).0);
        let rescaled = EmbeddingTable::new(tbl.iter().map(|(p, t)| (p.to_string(), t.iter().map(|v| v * (1.0 + s)).collect()))).unwrap();
        prop_assert_eq!(best_phrase(&e, &tbl).0, best_phrase(&e, &rescaled).0);
    }
}

// ---- gradients --------------------------------------------------------------

/// Largest relative error between analytic and central-difference gradients.
/// Differences are taken relative to `max(|analytic|, |numeric|, floor)`.
fn gradcheck(model: &LabelerModel, batch: &[RoomSample], tbl: &EmbeddingTable, eps: f64, floor: f64) -> f64 {
    let (_, g) = grad(model, batch, tbl).unwrap();
    let analytic = g.flat();
    let base = model.flat();
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for k in 0..base.len() {
        let mut p = base.clone();
        p[k] = base[k] + eps;
        probe.set_flat(&p);
        let up = mean_loss(&probe, batch, tbl).unwrap();
        p[k] = base[k] - eps;
        probe.set_flat(&p);
        let down = mean_loss(&probe, batch, tbl).unwrap();
        let numeric = (up - down) / (2.0 * eps);
        let denom = analytic[k].abs().max(numeric.abs()).max(floor);
        worst = worst.max((analytic[k] - numeric).abs() / denom);
    }
    worst
}

fn gradcheck_batch(d: usize, tbl: &EmbeddingTable, seed: u64) -> Vec<RoomSample> {
    let phrases: Vec<String> = tbl.phrases().map(str::to_string).collect();
    (0..3)
        .map(|k| RoomSample::new(objects(d, 2 + k, seed * 10 + k as u64), phrases[k % phrases.len()].clone()).unwrap())
        .collect()
}

#[test]
fn contrastive_gradients_match_finite_differences() {
    let c = LabelerConfig { temperature: 0.5, ..tiny(8, 2, 1) };
    for seed in 0..10 {
        let m = randomized(&c, seed);
        let tbl = table(8, 4, 50 + seed);
        let batch = gradcheck_batch(8, &tbl, seed);
        let err = gradcheck(&m, &batch, &tbl, 1e-4, 1e-6);
        assert!(err < 1e-4, "model {seed}: max relative error {err:e}");
    }
}

#[test]
fn logits_gradients_match_finite_differences() {
    let c = LabelerConfig {
        head_mode: HeadMode::Logits,
        num_classes: 4,
        ..tiny(8, 2, 1)
    };
    for seed in 0..3 {
        let m = randomized(&c, 30 + seed);
        let tbl = table(8, 4, 70 + seed);
        let batch = gradcheck_batch(8, &tbl, seed);
        let err = gradcheck(&m, &batch, &tbl, 1e-4, 1e-6);
        assert!(err < 1e-4, "model {seed}: max relative error {err:e}");
    }
}

#[test]
fn single_phrase_table_gives_zero_gradient() {
    let c = tiny(8, 2, 1);
    let m = randomized(&c, 4);
    let tbl = table(8, 1, 4);
    let batch = vec![RoomSample::new(objects(8, 3, 4), "phrase0").unwrap()];
    let (loss, g) = grad(&m, &batch, &tbl).unwrap();
    assert_eq!(loss, 0.0);
    assert!(g.flat().iter().all(|v| *v == 0.0));
}

#[test]
fn duplicated_sample_keeps_mean_gradient() {
    let c = tiny(8, 2, 1);
    let m = randomized(&c, 5);
    let tbl = table(8, 3, 5);
    let s = RoomSample::new(objects(8, 3, 5), "phrase1").unwrap();
    let (l1, g1) = grad(&m, std::slice::from_ref(&s), &tbl).unwrap();
    let (l2, g2) = grad(&m, &[s.clone(), s], &tbl).unwrap();
    assert!((l1 - l2).abs() < 1e-14);
    for (a, b) in g1.flat().iter().zip(g2.flat()) {
        assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0));
    }
}

#[test]
fn gelu_derivative_matches_differences() {
    for &x in &[-3.0, -0.7, 0.0, 0.4, 2.5] {
        let fd = (encoder::gelu(x + 1e-6) - encoder::gelu(x - 1e-6)) / 2e-6;
        assert!((fd - encoder::gelu_derivative(x)).abs() < 1e-8);
    }
}

// ---- training ---------------------------------------------------------------

fn prototype_set(d: usize, per_class: usize, seed: u64) -> (EmbeddingTable, Vec<RoomSample>) {
    let tbl = table(d, 4, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
    let mut samples = Vec::new();
    for (phrase, t) in tbl.iter() {
        for _ in 0..per_class {
            let objs = (0..3)
                .map(|_| t.iter().map(|v| v + rng.random_range(-0.2..0.2)).collect())
                .collect();
            samples.push(RoomSample::new(objs, phrase).unwrap());
        }
    }
    (tbl, samples)
}

#[test]
fn zero_epochs_is_a_no_op() {
    let c = LabelerConfig { epochs: 0, ..tiny(8, 2, 1) };
    let m = init_model(&c, 1).unwrap();
    let (tbl, data) = prototype_set(8, 2, 1);
    let out = train(&m, &data, &tbl, &c).unwrap();
    assert_eq!(out.model, m);
    assert!(out.history.is_empty());
}

#[test]
fn training_is_deterministic_and_reduces_loss() {
    let c = LabelerConfig { epochs: 30, ..tiny(8, 2, 1) };
    let m = init_model(&c, 1).unwrap();
    let (tbl, data) = prototype_set(8, 4, 2);
    let a = train(&m, &data, &tbl, &c).unwrap();
    let b = train(&m, &data, &tbl, &c).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.model.flat(), b.model.flat());
    assert!(a.history.last().unwrap() < &a.history[0]);
}

#[test]
fn minibatches_when_dataset_exceeds_batch_size() {
    let c = LabelerConfig {
        epochs: 3,
        batch_size: 5,
        ..tiny(8, 2, 1)
    };
    let m = init_model(&c, 1).unwrap();
    let (tbl, data) = prototype_set(8, 3, 3);
    let a = train(&m, &data, &tbl, &c).unwrap();
    assert_eq!(a.history.len(), 3);
    assert_eq!(a.history, train(&m, &data, &tbl, &c).unwrap().history);
}

#[test]
fn training_rejects_unknown_labels() {
    let c = tiny(8, 2, 1);
    let m = init_model(&c, 1).unwrap();
    let (tbl, mut data) = prototype_set(8, 1, 3);
    data[0].gt_label = "attic".into();
    assert!(train(&m, &data, &tbl, &c).is_err());
    assert!(train(&m, &[], &tbl, &c).is_err());
}

// ---- inference and baselines --------------------------------------------

#[test]
fn contrived_cls_equal_to_kitchen() {
    let c = tiny(4, 2, 1);
    let mut m = init_model(&c, 0).unwrap();
    let tbl = EmbeddingTable::new([
        ("bedroom".to_string(), vec![0.0, 1.0, 0.0, 0.0]),
        ("kitchen".to_string(), vec![0.6, 0.0, 0.8, 0.0]),
    ])
    .unwrap();
    m.ln_final.gain = vec![0.0; 4];
    m.ln_final.bias = tbl.get("kitchen").unwrap().to_vec();
    let inf = infer_label(&m, &objects(4, 2, 0), &tbl).unwrap();
    assert_eq!(inf.label, "kitchen");
    let kitchen = inf.similarities.iter().find(|(p, _)| p == "kitchen").unwrap().1;
    assert!((kitchen - 1.0).abs() < 1e-12);
    let scaled: Vec<f64> = inf.embedding.iter().map(|v| v * 5.0).collect();
    assert_eq!(best_phrase(&scaled, &tbl).0, "kitchen");
}

#[test]
fn ties_go_to_smallest_phrase() {
    let tbl = EmbeddingTable::new([
        ("office".to_string(), vec![1.0, 0.0]),
        ("den".to_string(), vec![0.0, 1.0]),
    ])
    .unwrap();
    assert_eq!(best_phrase(&[1.0, 1.0], &tbl).0, "den");
}

#[test]
fn average_baseline_cases() {
    let tbl = table(6, 5, 11);
    let bedroom = tbl.get("phrase3").unwrap().to_vec();
    assert_eq!(average_baseline(&[bedroom], &tbl).unwrap(), "phrase3");
    let objs = objects(6, 4, 12);
    let mut rev = objs.clone();
    rev.reverse();
    assert_eq!(average_baseline(&objs, &tbl).unwrap(), average_baseline(&rev, &tbl).unwrap());
    assert!(average_baseline(&[], &tbl).is_err());
}

#[test]
fn logits_head_behaviour() {
    let c = LabelerConfig {
        head_mode: HeadMode::Logits,
        num_classes: 3,
        ..tiny(8, 2, 1)
    };
    let mut m = init_model(&c, 2).unwrap();
    let objs = objects(8, 2, 2);
    m.head.as_mut().unwrap().weight.iter_mut().for_each(|w| *w = 0.0);
    assert_eq!(predict_logits(&m, &objs).unwrap(), vec![0.0; 3]);

    let head = m.head.as_mut().unwrap();
    head.weight.iter_mut().enumerate().for_each(|(k, w)| *w = if k % 3 == 2 { (k / 3 + 1) as f64 } else { 0.0 });
    let e = m.forward(&objs).unwrap();
    let logits = predict_logits(&m, &objs).unwrap();
    let expected: f64 = e.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).sum();
    assert!((logits[2] - expected).abs() < 1e-12);
    assert_eq!(&logits[..2], &[0.0, 0.0]);
    let tbl = table(8, 3, 2);
    let argmax = if logits[2] > 0.0 { 2 } else { 0 };
    assert_eq!(classify(&m, &objs, &tbl).unwrap(), format!("phrase{argmax}"));

    let contrastive = init_model(&tiny(8, 2, 1), 0).unwrap();
    assert!(predict_logits(&contrastive, &objs).is_err());
}

// ---- persistence --------------------------------------------------------------

#[test]
fn checkpoint_round_trip() {
    let m = randomized(&tiny(8, 2, 1), 6);
    let text = m.to_checkpoint();
    let back = LabelerModel::from_checkpoint(&text).unwrap();
    assert_eq!(back, m);
    assert!(LabelerModel::from_checkpoint_expecting(&text, &tiny(8, 4, 1)).is_err());
    assert!(LabelerModel::from_checkpoint_expecting(&text, &tiny(8, 2, 1)).is_ok());
    let tampered = text.replacen("\"layers.0.query.weight\"", "\"layers.0.q\"", 1);
    assert!(LabelerModel::from_checkpoint(&tampered).is_err());
}

#[test]
fn dataset_round_trip() {
    let dir = std::env::temp_dir().join(format!("roomtopo-ds-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (tbl, samples) = prototype_set(4, 1, 8);
    tbl.save(dir.join("phrases.json")).unwrap();
    let ds = RoomDataset {
        embedding_table: "phrases.json".into(),
        samples,
    };
    ds.save(dir.join("train.json")).unwrap();
    let (back, back_tbl) = RoomDataset::load(dir.join("train.json")).unwrap();
    assert_eq!(back, ds);
    assert_eq!(back_tbl.len(), 4);
    std::fs::remove_dir_all(&dir).unwrap();
}
